"""Virtual classroom: a deterministic stand-in for the physical device.

A scene is built from six tape-measure numbers for a projected surface
(edge lengths in cm and pen-to-sensor distances at the bottom and top
edges). The surface quad is placed in the 1024x768 camera image with a
fixed 900-unit bottom edge, the top edge scaled by the measured
top/bottom ratio (that ratio is the keystone), a 650-unit vertical span,
and symmetric horizontal centering. The quad corners define the
ground-truth mapping from the unit surface square onto camera space.

Scripts are zero-order-hold keyframes: each step pins the pen state from
its frame tick onward. Every tick emits one blob report; a status report
is interleaved every STATUS_INTERVAL ticks and the battery drains one
raw unit every DRAIN_INTERVAL ticks. The pen stops being detected beyond
RANGE_LIMIT_CM, with the pen's distance interpolated between the two
measured distances by its t coordinate. Identical scene, script and seed
give byte-identical streams.

Three bundled scenes (A, B, C) carry the measurements of the three rooms
the rig was tested in, smallest to largest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import Homography, UNIT_SQUARE, solve_homography
from .protocol import (
    ButtonsIr,
    CAMERA_MAX_X,
    CAMERA_MAX_Y,
    IrBlob,
    Status,
    encode_report,
)
from .tracker import EventKind, PointerEvent
from .session import SessionConfig
from .zones import OutsideHit, ScreenHit, SideHit, classify

CAMERA_WIDTH = 1024
CAMERA_HEIGHT = 768
BOTTOM_EDGE_UNITS = 900.0
VERTICAL_SPAN_UNITS = 650.0
RANGE_LIMIT_CM = 500.0
STATUS_INTERVAL = 100
DRAIN_INTERVAL = 3000
DEFAULT_BATTERY_RAW = 200
SIM_BLOB_SIZE = 5


class InvalidGeometry(Exception):
    pass


class ScriptError(Exception):
    pass


@dataclass(frozen=True)
class SceneGeometry:
    """Tape-measure numbers for one room, all in centimeters."""

    bottom_cm: float
    top_cm: float
    left_cm: float
    right_cm: float
    dist_bottom_cm: float
    dist_top_cm: float

    def __post_init__(self) -> None:
        for name in (
            "bottom_cm",
            "top_cm",
            "left_cm",
            "right_cm",
            "dist_bottom_cm",
            "dist_top_cm",
        ):
            if getattr(self, name) <= 0:
                raise InvalidGeometry(f"{name} must be positive")

    def pen_distance_cm(self, t: float) -> float:
        return self.dist_bottom_cm + t * (self.dist_top_cm - self.dist_bottom_cm)


NAMED_SCENES = {
    "A": SceneGeometry(97, 110, 83, 86, 146, 182),
    "B": SceneGeometry(137, 139, 103, 103, 209, 239),
    "C": SceneGeometry(153, 150, 110, 107, 230, 257),
}


@dataclass(frozen=True)
class VirtualDevice:
    scene: SceneGeometry
    ground_truth: Homography  # unit surface square -> camera
    corners_camera: tuple[tuple[float, float], ...]
    battery_raw: int = DEFAULT_BATTERY_RAW

    def battery_at(self, frame: int) -> int:
        return max(0, self.battery_raw - frame // DRAIN_INTERVAL)


def build_scene(
    geometry: SceneGeometry, battery_raw: int = DEFAULT_BATTERY_RAW
) -> VirtualDevice:
    top_width = BOTTOM_EDGE_UNITS * geometry.top_cm / geometry.bottom_cm
    cx = CAMERA_WIDTH / 2.0
    y_top = (CAMERA_HEIGHT - VERTICAL_SPAN_UNITS) / 2.0
    y_bottom = y_top + VERTICAL_SPAN_UNITS
    corners = (
        (cx - top_width / 2.0, y_top),
        (cx + top_width / 2.0, y_top),
        (cx - BOTTOM_EDGE_UNITS / 2.0, y_bottom),
        (cx + BOTTOM_EDGE_UNITS / 2.0, y_bottom),
    )
    ground_truth = solve_homography(list(UNIT_SQUARE), list(corners))
    return VirtualDevice(
        scene=geometry,
        ground_truth=ground_truth,
        corners_camera=corners,
        battery_raw=battery_raw,
    )


def resolve_scene(name_or_geometry) -> SceneGeometry:
    if isinstance(name_or_geometry, SceneGeometry):
        return name_or_geometry
    if isinstance(name_or_geometry, str) and name_or_geometry in NAMED_SCENES:
        return NAMED_SCENES[name_or_geometry]
    raise InvalidGeometry(f"unknown scene: {name_or_geometry!r}")


# ---------- pen scripts ----------


@dataclass(frozen=True)
class PenStep:
    frame: int
    surface_pos: tuple[float, float] | None
    pressed: bool


@dataclass(frozen=True)
class PenScript:
    steps: tuple[PenStep, ...]
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        if self.sigma < 0:
            raise ScriptError("sigma cannot be negative")
        last = -1
        for step in self.steps:
            if step.frame <= last:
                raise ScriptError(
                    f"step frames must be strictly increasing, got {step.frame}"
                )
            if step.pressed and step.surface_pos is None:
                raise ScriptError(f"pressed step at frame {step.frame} needs a position")
            last = step.frame

    @property
    def total_frames(self) -> int:
        return self.steps[-1].frame + 1 if self.steps else 0


def script_from_dict(data: dict) -> tuple[SceneGeometry | None, PenScript]:
    """Parse a script file body: {scene?, sigma?, seed?, steps}."""
    if not isinstance(data, dict):
        raise ScriptError("script root must be an object")
    for key in data:
        if key not in {"scene", "sigma", "seed", "steps"}:
            raise ScriptError(f"unknown field {key!r} in script")
    scene: SceneGeometry | None = None
    if "scene" in data:
        raw = data["scene"]
        if isinstance(raw, str):
            try:
                scene = resolve_scene(raw)
            except InvalidGeometry as exc:
                raise ScriptError(str(exc)) from exc
        elif isinstance(raw, dict):
            allowed = {
                "bottom_cm",
                "top_cm",
                "left_cm",
                "right_cm",
                "dist_bottom_cm",
                "dist_top_cm",
                "battery_raw",
            }
            for key in raw:
                if key not in allowed:
                    raise ScriptError(f"unknown field {key!r} in scene")
            try:
                scene = SceneGeometry(
                    bottom_cm=float(raw["bottom_cm"]),
                    top_cm=float(raw["top_cm"]),
                    left_cm=float(raw["left_cm"]),
                    right_cm=float(raw["right_cm"]),
                    dist_bottom_cm=float(raw["dist_bottom_cm"]),
                    dist_top_cm=float(raw["dist_top_cm"]),
                )
            except KeyError as exc:
                raise ScriptError(f"scene is missing field {exc.args[0]!r}") from exc
        else:
            raise ScriptError("scene must be a name or an object")
    steps_raw = data.get("steps")
    if not isinstance(steps_raw, list):
        raise ScriptError("script needs a 'steps' list")
    steps = []
    for i, raw_step in enumerate(steps_raw):
        if not isinstance(raw_step, dict):
            raise ScriptError(f"step {i} must be an object")
        for key in raw_step:
            if key not in {"frame", "s", "t", "pressed"}:
                raise ScriptError(f"unknown field {key!r} in step {i}")
        try:
            frame = int(raw_step["frame"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ScriptError(f"step {i} needs an integer 'frame'") from exc
        pressed = raw_step.get("pressed", False)
        if not isinstance(pressed, bool):
            raise ScriptError(f"step {i}: 'pressed' must be a boolean")
        pos = None
        if "s" in raw_step or "t" in raw_step:
            try:
                pos = (float(raw_step["s"]), float(raw_step["t"]))
            except (KeyError, ValueError, TypeError) as exc:
                raise ScriptError(f"step {i} needs both 's' and 't'") from exc
        steps.append(PenStep(frame=frame, surface_pos=pos, pressed=pressed))
    try:
        script = PenScript(
            steps=tuple(steps),
            sigma=float(data.get("sigma", 0.0)),
            seed=int(data.get("seed", 0)),
        )
    except (ValueError, TypeError) as exc:
        raise ScriptError(str(exc)) from exc
    return scene, script


def load_script(path: str) -> tuple[SceneGeometry | None, PenScript, int | None]:
    """Read a script file; returns (scene or None, script, battery override)."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScriptError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    except OSError as exc:
        raise ScriptError(f"{path}: {exc}") from exc
    battery = None
    if isinstance(data, dict) and isinstance(data.get("scene"), dict):
        battery_raw = data["scene"].get("battery_raw")
        if battery_raw is not None:
            battery = int(battery_raw)
    scene, script = script_from_dict(data)
    return scene, script, battery


# ---------- frame generation ----------


def blob_report(
    device: VirtualDevice,
    surface_pos: tuple[float, float] | None,
    pressed: bool,
    sigma: float,
    rng: np.random.Generator | None,
) -> ButtonsIr:
    """One camera frame for the current pen state."""
    if not pressed or surface_pos is None:
        return ButtonsIr()
    s, t = surface_pos
    if device.scene.pen_distance_cm(t) > RANGE_LIMIT_CM:
        return ButtonsIr()
    cx, cy = device.ground_truth.apply((s, t))
    if sigma > 0:
        assert rng is not None
        noise = rng.normal(0.0, sigma, 2)
        cx += noise[0]
        cy += noise[1]
    x = min(max(int(round(cx)), 0), CAMERA_MAX_X)
    y = min(max(int(round(cy)), 0), CAMERA_MAX_Y)
    return ButtonsIr(blobs=(IrBlob(x=x, y=y, size=SIM_BLOB_SIZE),))


def run_script(device: VirtualDevice, script: PenScript) -> bytes:
    """Emit the full device-to-host byte stream for a scripted run."""
    rng = np.random.default_rng(script.seed)
    steps = {step.frame: step for step in script.steps}
    out = bytearray()
    pos: tuple[float, float] | None = None
    pressed = False
    for frame in range(script.total_frames):
        step = steps.get(frame)
        if step is not None:
            pos = step.surface_pos
            pressed = step.pressed
        if frame % STATUS_INTERVAL == 0:
            out += encode_report(Status(battery_raw=device.battery_at(frame)))
        out += encode_report(blob_report(device, pos, pressed, script.sigma, rng))
    return bytes(out)


# ---------- engine-free oracle ----------


def ground_truth_expected_events(
    device: VirtualDevice, script: PenScript, config: SessionConfig
) -> list[PointerEvent]:
    """The event stream an ideally calibrated session would emit.

    Walks the script directly in surface coordinates (which ARE the
    screen coordinates an ideal calibration produces), applying the same
    detection-run rules the engine implements: a press is an unbroken
    run of detected frames bridged across up to dropout_frames misses,
    side hits fire once per run. No engine code is involved beyond zone
    classification, which is pure geometry on the config.
    """
    steps = {step.frame: step for step in script.steps}
    dropout = config.tracker.dropout_frames
    zone_config = config.zone_config
    events: list[PointerEvent] = []
    pos: tuple[float, float] | None = None
    pressed = False
    mode = "idle"  # idle | pressed | side
    last: tuple[float, float] | None = None
    missing = 0
    for frame in range(script.total_frames):
        step = steps.get(frame)
        if step is not None:
            pos = step.surface_pos
            pressed = step.pressed
        detected = (
            pressed
            and pos is not None
            and device.scene.pen_distance_cm(pos[1]) <= RANGE_LIMIT_CM
        )
        if not detected:
            if mode != "idle":
                missing += 1
                if missing > dropout:
                    if mode == "pressed":
                        assert last is not None
                        events.append(
                            PointerEvent(
                                t=frame, kind=EventKind.UP, u=last[0], v=last[1]
                            )
                        )
                    mode = "idle"
                    last = None
                    missing = 0
            continue
        assert pos is not None
        if mode == "idle":
            hit = classify(pos, zone_config)
            if isinstance(hit, ScreenHit):
                events.append(
                    PointerEvent(t=frame, kind=EventKind.DOWN, u=hit.u, v=hit.v)
                )
                mode = "pressed"
                last = pos
            elif isinstance(hit, SideHit):
                events.append(PointerEvent(t=frame, kind=EventKind.SIDE, action=hit.action))
                mode = "side"
            missing = 0
        elif mode == "pressed":
            events.append(PointerEvent(t=frame, kind=EventKind.MOVE, u=pos[0], v=pos[1]))
            last = pos
            missing = 0
        else:
            missing = 0
    return events
