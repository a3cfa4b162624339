"""Input middleware for an IR-camera pointing device.

Turns raw device reports into calibrated screen-space pointer events:
wire codec, 4-point projective calibration, side-zone actions, a
press-tracking state machine, a deterministic device simulator, and an
HTTP control surface for the operator console.
"""

from .geometry import (
    AtInfinity,
    DegenerateConfiguration,
    Homography,
    UNIT_SQUARE,
    solve_homography,
)
from .protocol import (
    Buttons,
    ButtonsIr,
    IrBlob,
    SetLeds,
    SetReportingMode,
    IrEnable,
    Status,
    StatusRequest,
    decode_command,
    decode_report,
    encode_command,
    encode_report,
)
from .session import (
    ConfigParseError,
    Phase,
    PhaseError,
    ProtocolError,
    Session,
    SessionConfig,
    load_config,
    save_config,
)
from .simulator import (
    NAMED_SCENES,
    PenScript,
    PenStep,
    SceneGeometry,
    VirtualDevice,
    build_scene,
    ground_truth_expected_events,
    run_script,
)
from .tracker import EventKind, NotCalibrated, PointerEvent, Tracker
from .zones import ZoneAction, ZoneConfig, classify

__version__ = "0.1.0"
