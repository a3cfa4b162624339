"""Session lifecycle: from a cold device to a calibrated, running board.

Phases move forward only:

    disconnected -> connected -> ir_enabled -> aligning -> calibrating
        -> running -> stopped

with two sanctioned back edges: calibrating -> calibrating (restart after
a failed solve or an abort) and running -> calibrating (recalibration).

Alignment is operator-driven: the operator arms a corner, flashes the pen
there, and the session latches it visible when a blob arrives. Calibration
collects one camera point per corner in top-left, top-right, bottom-left,
bottom-right order: a corner is accepted once samples_per_corner
consecutive blob frames all sit within sample_radius of their running
mean (the mean becomes the corner), and corner_gap_frames blob-free
frames must pass before the next corner starts collecting. The solved
mapping sends the four corners onto the unit square.

Battery level is half the raw octet. Dropping below 50 percent raises a
LowBattery warning exactly once per downward crossing.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field, replace
from enum import Enum

from . import protocol
from .geometry import DegenerateConfiguration, Homography, UNIT_SQUARE, solve_homography
from .tracker import (
    DEFAULT_DROPOUT_FRAMES,
    DEFAULT_SMOOTHING_ALPHA,
    PointerEvent,
    Tracker,
)
from .zones import ZoneAction, ZoneConfig

DEFAULT_CONFIG_PATH = "./irboard.json"
LOW_BATTERY_PERCENT = 50.0
DEFAULT_SCREEN_RESOLUTION = (1024, 768)
CORNER_NAMES = ("top-left", "top-right", "bottom-left", "bottom-right")


class ConfigParseError(Exception):
    pass


class PhaseError(Exception):
    """Command or report arrived in a phase that does not allow it."""


class ProtocolError(Exception):
    """A device frame failed to decode."""


class Phase(str, Enum):
    DISCONNECTED = "disconnected"
    CONNECTED = "connected"
    IR_ENABLED = "ir_enabled"
    ALIGNING = "aligning"
    CALIBRATING = "calibrating"
    RUNNING = "running"
    STOPPED = "stopped"


@dataclass(frozen=True)
class TrackerParams:
    dropout_frames: int = DEFAULT_DROPOUT_FRAMES
    smoothing_alpha: float = DEFAULT_SMOOTHING_ALPHA

    def __post_init__(self) -> None:
        if self.dropout_frames < 0:
            raise ValueError("dropout_frames cannot be negative")
        if not (0.0 < self.smoothing_alpha <= 1.0):
            raise ValueError("smoothing_alpha must be in (0, 1]")


@dataclass(frozen=True)
class CalibrationParams:
    samples_per_corner: int = 10
    corner_gap_frames: int = 5
    sample_radius: float = 5.0

    def __post_init__(self) -> None:
        if self.samples_per_corner < 1:
            raise ValueError("samples_per_corner must be at least 1")
        if self.corner_gap_frames < 0:
            raise ValueError("corner_gap_frames cannot be negative")
        if self.sample_radius <= 0:
            raise ValueError("sample_radius must be positive")


@dataclass(frozen=True)
class SessionConfig:
    zone_config: ZoneConfig = field(default_factory=ZoneConfig)
    touchpad_mode: bool = False
    save_on_exit: bool = False
    tracker: TrackerParams = field(default_factory=TrackerParams)
    calibration: CalibrationParams = field(default_factory=CalibrationParams)
    screen_resolution: tuple[int, int] = DEFAULT_SCREEN_RESOLUTION
    alignment_margin: float = 0.0

    def __post_init__(self) -> None:
        w, h = self.screen_resolution
        if w < 1 or h < 1:
            raise ValueError("screen resolution must be positive")
        if self.alignment_margin < 0:
            raise ValueError("alignment_margin cannot be negative")


def config_to_dict(config: SessionConfig) -> dict:
    return {
        "zone_config": {
            "left": [a.value for a in config.zone_config.left],
            "right": [a.value for a in config.zone_config.right],
            "band_width": config.zone_config.band_width,
            "enabled": config.zone_config.enabled,
        },
        "touchpad_mode": config.touchpad_mode,
        "save_on_exit": config.save_on_exit,
        "tracker": {
            "dropout_frames": config.tracker.dropout_frames,
            "smoothing_alpha": config.tracker.smoothing_alpha,
        },
        "calibration": {
            "samples_per_corner": config.calibration.samples_per_corner,
            "corner_gap_frames": config.calibration.corner_gap_frames,
            "sample_radius": config.calibration.sample_radius,
        },
        "screen_resolution": list(config.screen_resolution),
        "alignment_margin": config.alignment_margin,
    }


def _reject_unknown(data: dict, allowed: set[str], where: str) -> None:
    for key in data:
        if key not in allowed:
            raise ConfigParseError(f"unknown field {key!r} in {where}")


def zone_config_from_dict(data: dict, where: str = "zone_config") -> ZoneConfig:
    if not isinstance(data, dict):
        raise ConfigParseError(f"{where} must be an object")
    _reject_unknown(data, {"left", "right", "band_width", "enabled"}, where)
    try:
        kwargs = {}
        if "left" in data:
            kwargs["left"] = tuple(ZoneAction(a) for a in data["left"])
        if "right" in data:
            kwargs["right"] = tuple(ZoneAction(a) for a in data["right"])
        if "band_width" in data:
            kwargs["band_width"] = float(data["band_width"])
        if "enabled" in data:
            if not isinstance(data["enabled"], bool):
                raise ValueError("enabled must be a boolean")
            kwargs["enabled"] = data["enabled"]
        return ZoneConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigParseError(f"bad {where}: {exc}") from exc


def config_from_dict(data: dict) -> SessionConfig:
    if not isinstance(data, dict):
        raise ConfigParseError("config root must be an object")
    _reject_unknown(
        data,
        {
            "zone_config",
            "touchpad_mode",
            "save_on_exit",
            "tracker",
            "calibration",
            "screen_resolution",
            "alignment_margin",
        },
        "config",
    )
    try:
        kwargs: dict = {}
        if "zone_config" in data:
            kwargs["zone_config"] = zone_config_from_dict(data["zone_config"])
        for flag in ("touchpad_mode", "save_on_exit"):
            if flag in data:
                if not isinstance(data[flag], bool):
                    raise ConfigParseError(f"field {flag!r} must be a boolean")
                kwargs[flag] = data[flag]
        if "tracker" in data:
            sub = data["tracker"]
            if not isinstance(sub, dict):
                raise ConfigParseError("field 'tracker' must be an object")
            _reject_unknown(sub, {"dropout_frames", "smoothing_alpha"}, "tracker")
            kwargs["tracker"] = TrackerParams(
                dropout_frames=int(sub.get("dropout_frames", DEFAULT_DROPOUT_FRAMES)),
                smoothing_alpha=float(
                    sub.get("smoothing_alpha", DEFAULT_SMOOTHING_ALPHA)
                ),
            )
        if "calibration" in data:
            sub = data["calibration"]
            if not isinstance(sub, dict):
                raise ConfigParseError("field 'calibration' must be an object")
            _reject_unknown(
                sub,
                {"samples_per_corner", "corner_gap_frames", "sample_radius"},
                "calibration",
            )
            defaults = CalibrationParams()
            kwargs["calibration"] = CalibrationParams(
                samples_per_corner=int(
                    sub.get("samples_per_corner", defaults.samples_per_corner)
                ),
                corner_gap_frames=int(
                    sub.get("corner_gap_frames", defaults.corner_gap_frames)
                ),
                sample_radius=float(sub.get("sample_radius", defaults.sample_radius)),
            )
        if "screen_resolution" in data:
            res = data["screen_resolution"]
            if (
                not isinstance(res, (list, tuple))
                or len(res) != 2
                or not all(isinstance(v, int) for v in res)
            ):
                raise ConfigParseError(
                    "field 'screen_resolution' must be a pair of integers"
                )
            kwargs["screen_resolution"] = (res[0], res[1])
        if "alignment_margin" in data:
            kwargs["alignment_margin"] = float(data["alignment_margin"])
        return SessionConfig(**kwargs)
    except ConfigParseError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigParseError(str(exc)) from exc


def load_config(path: str = DEFAULT_CONFIG_PATH) -> SessionConfig:
    """Read a config file; a missing file yields the defaults."""
    if not os.path.exists(path):
        return SessionConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    except OSError as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc
    try:
        return config_from_dict(data)
    except ConfigParseError as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc


def save_config(path: str, config: SessionConfig) -> None:
    """Write the config atomically: temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(prefix=".irboard-", suffix=".json", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(config_to_dict(config), fh, indent=2)
            fh.write("\n")
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


# ---------- effects ----------


@dataclass(frozen=True)
class LowBattery:
    percent: float


@dataclass(frozen=True)
class BatteryLevel:
    percent: float


@dataclass(frozen=True)
class PhaseChanged:
    phase: Phase


@dataclass(frozen=True)
class CornerCaptured:
    corner: int
    point: tuple[float, float]


@dataclass(frozen=True)
class CalibrationComplete:
    pass


@dataclass(frozen=True)
class CalibrationFailed:
    reason: str


@dataclass(frozen=True)
class SendCommand:
    data: bytes


Effect = (
    LowBattery
    | BatteryLevel
    | PhaseChanged
    | CornerCaptured
    | CalibrationComplete
    | CalibrationFailed
    | SendCommand
    | PointerEvent
)


@dataclass(frozen=True)
class AlignmentReport:
    visible: tuple[bool, bool, bool, bool]

    @property
    def ok(self) -> bool:
        return all(self.visible)


class Session:
    """Owns the device-facing state machine. Single-threaded by design:
    reports must arrive serialized (the service feeds them from one loop)."""

    def __init__(
        self,
        config: SessionConfig | None = None,
        config_path: str | None = None,
    ) -> None:
        self.config = config if config is not None else SessionConfig()
        self.config_path = config_path
        self.phase = Phase.DISCONNECTED
        self.battery_percent: float | None = None
        self._battery_warned = False
        self.visible = [False, False, False, False]
        self.armed_corner: int | None = None
        self._corner_index = 0
        self._window: list[tuple[float, float]] = []
        self._captured: list[tuple[float, float]] = []
        self._awaiting_gap = False
        self._gap_count = 0
        self.tracker: Tracker | None = None
        self.events: list[PointerEvent] = []

    # ---------- operator commands ----------

    def _enter(self, phase: Phase) -> PhaseChanged:
        self.phase = phase
        return PhaseChanged(phase=phase)

    def start(self) -> list[Effect]:
        """Connect, enable the camera, and open the alignment phase."""
        if self.phase is not Phase.DISCONNECTED:
            raise PhaseError(f"cannot start from {self.phase.value}")
        if self.config.touchpad_mode:
            raise ConfigParseError(
                "touchpad_mode is not supported by this engine; set it to false "
                "(absolute pointing is the only mode)"
            )
        effects: list[Effect] = [self._enter(Phase.CONNECTED)]
        for cmd in (
            protocol.SetReportingMode(mode=protocol.REPORT_BUTTONS_IR),
            protocol.IrEnable(on=True),
            protocol.StatusRequest(),
        ):
            effects.append(SendCommand(data=protocol.encode_command(cmd)))
        effects.append(self._enter(Phase.IR_ENABLED))
        effects.append(self._enter(Phase.ALIGNING))
        return effects

    def arm_corner(self, corner: int) -> None:
        if self.phase is not Phase.ALIGNING:
            raise PhaseError(f"cannot arm a corner in {self.phase.value}")
        if not (0 <= corner <= 3):
            raise ValueError(f"corner must be 0..3, got {corner}")
        self.armed_corner = corner

    def alignment_report(self) -> AlignmentReport:
        return AlignmentReport(visible=tuple(self.visible))

    def begin_calibration(self) -> list[Effect]:
        if self.phase not in (Phase.ALIGNING, Phase.RUNNING):
            raise PhaseError(f"cannot calibrate from {self.phase.value}")
        self.tracker = None
        self._reset_calibration()
        return [self._enter(Phase.CALIBRATING)]

    def abort_calibration(self) -> list[Effect]:
        """Drop all collected corners; stays in calibrating (restart)."""
        if self.phase is not Phase.CALIBRATING:
            raise PhaseError(f"no calibration to abort in {self.phase.value}")
        self._reset_calibration()
        return [self._enter(Phase.CALIBRATING)]

    def set_zone_config(self, zone_config: ZoneConfig) -> None:
        if self.phase is Phase.STOPPED:
            raise PhaseError("session is stopped")
        self.config = replace(self.config, zone_config=zone_config)
        if self.tracker is not None:
            self.tracker.zone_config = zone_config

    def stop(self) -> list[Effect]:
        if self.phase is Phase.STOPPED:
            raise PhaseError("session is already stopped")
        effects: list[Effect] = [self._enter(Phase.STOPPED)]
        if self.config.save_on_exit and self.config_path:
            save_config(self.config_path, self.config)
        return effects

    # ---------- device reports ----------

    def handle_frame(self, frame: bytes) -> list[Effect]:
        try:
            report = protocol.decode_report(frame)
        except protocol.CodecError as exc:
            raise ProtocolError(f"{type(exc).__name__}: {exc}") from exc
        return self.handle_report(report)

    def handle_report(self, report: protocol.DeviceReport) -> list[Effect]:
        if self.phase is Phase.STOPPED:
            raise PhaseError("session is stopped")
        if isinstance(report, protocol.Status):
            return self._on_status(report)
        if isinstance(report, protocol.Buttons):
            return []  # carried but not interpreted
        if isinstance(report, protocol.ButtonsIr):
            if self.phase is Phase.ALIGNING:
                self._on_alignment_blobs(report.blobs)
                return []
            if self.phase is Phase.CALIBRATING:
                return self._calibrate_step(report.blobs)
            if self.phase is Phase.RUNNING:
                assert self.tracker is not None
                events = self.tracker.step(list(report.blobs))
                self.events.extend(events)
                return list(events)
            return []  # frames in other phases are ignored
        raise TypeError(f"not a device report: {report!r}")

    def _on_status(self, report: protocol.Status) -> list[Effect]:
        percent = report.battery_percent
        previous = self.battery_percent
        self.battery_percent = percent
        effects: list[Effect] = [BatteryLevel(percent=percent)]
        if percent < LOW_BATTERY_PERCENT:
            if previous is None or previous >= LOW_BATTERY_PERCENT:
                effects.append(LowBattery(percent=percent))
        return effects

    def _on_alignment_blobs(self, blobs: tuple[protocol.IrBlob, ...]) -> None:
        if blobs and self.armed_corner is not None:
            self.visible[self.armed_corner] = True

    # ---------- calibration ----------

    def _reset_calibration(self) -> None:
        self._corner_index = 0
        self._window = []
        self._captured = []
        self._awaiting_gap = False
        self._gap_count = 0

    @property
    def calibration_progress(self) -> dict:
        return {
            "corner_index": self._corner_index,
            "samples_collected": len(self._window),
            "corners_captured": len(self._captured),
        }

    def _calibrate_step(self, blobs: tuple[protocol.IrBlob, ...]) -> list[Effect]:
        params = self.config.calibration
        if not blobs:
            if self._awaiting_gap:
                self._gap_count += 1
                if self._gap_count >= params.corner_gap_frames:
                    self._awaiting_gap = False
                    self._gap_count = 0
            else:
                self._window = []  # the steady run must be unbroken
            return []
        if self._awaiting_gap:
            self._gap_count = 0  # gap frames must be blob-free and consecutive
            return []
        p = (float(blobs[0].x), float(blobs[0].y))
        candidate = self._window + [p]
        mean_x = sum(q[0] for q in candidate) / len(candidate)
        mean_y = sum(q[1] for q in candidate) / len(candidate)
        if all(
            math.hypot(q[0] - mean_x, q[1] - mean_y) <= params.sample_radius
            for q in candidate
        ):
            self._window = candidate
        else:
            self._window = [p]  # jitter: this frame opens a fresh run
            return []
        if len(self._window) < params.samples_per_corner:
            return []
        corner = (mean_x, mean_y)
        self._captured.append(corner)
        effects: list[Effect] = [
            CornerCaptured(corner=self._corner_index, point=corner)
        ]
        self._window = []
        if len(self._captured) < 4:
            self._corner_index += 1
            self._awaiting_gap = True
            self._gap_count = 0
            return effects
        try:
            h = solve_homography(self._captured, list(UNIT_SQUARE))
        except DegenerateConfiguration as exc:
            self._reset_calibration()
            effects.append(CalibrationFailed(reason=str(exc)))
            return effects
        self.tracker = Tracker(
            homography=h,
            zone_config=self.config.zone_config,
            dropout_frames=self.config.tracker.dropout_frames,
            smoothing_alpha=self.config.tracker.smoothing_alpha,
        )
        effects.append(CalibrationComplete())
        effects.append(self._enter(Phase.RUNNING))
        return effects

    # ---------- snapshots ----------

    def snapshot(self) -> dict:
        return {
            "phase": self.phase.value,
            "battery_percent": self.battery_percent,
            "alignment": {
                "visible": list(self.visible),
                "armed_corner": self.armed_corner,
                "ok": all(self.visible),
            },
            "calibration": self.calibration_progress,
            "zone_config": {
                "left": [a.value for a in self.config.zone_config.left],
                "right": [a.value for a in self.config.zone_config.right],
                "band_width": self.config.zone_config.band_width,
                "enabled": self.config.zone_config.enabled,
            },
            "screen_resolution": list(self.config.screen_resolution),
        }
