"""Pointer tracking: turns per-frame blob lists into Down/Move/Up events.

The pen is a momentary switch behind an IR emitter, so a "press" is just
an unbroken run of frames that carry a blob. IR detection drops frames,
though: a press is held open across up to dropout_frames consecutive
empty frames, and Up fires at the last known position on the frame that
exceeds that allowance. A blob landing in a side band fires its action
once and then latches silently until the pen is released.

Events are stamped with the tracker's own frame counter. The trace
format is line-delimited JSON, one event per line:

    {"t": 12, "kind": "down", "u": 0.25, "v": 0.75}
    {"t": 40, "kind": "side", "action": "right_click"}

Positional kinds carry u/v; "side" carries the action. That one format
is shared by the trace file and the service push channel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .geometry import AtInfinity, Homography
from .zones import ScreenHit, SideHit, ZoneAction, ZoneConfig, classify
from .protocol import IrBlob

DEFAULT_DROPOUT_FRAMES = 3
DEFAULT_SMOOTHING_ALPHA = 1.0


class NotCalibrated(Exception):
    """Blob frames arrived before any calibration produced a mapping."""


class EventKind(str, Enum):
    DOWN = "down"
    MOVE = "move"
    UP = "up"
    SIDE = "side"


@dataclass(frozen=True)
class PointerEvent:
    t: int
    kind: EventKind
    u: float | None = None
    v: float | None = None
    action: ZoneAction | None = None


class TraceParseError(Exception):
    pass


_IDLE = "idle"
_PRESSED = "pressed"
_SIDE_LATCHED = "side_latched"


class Tracker:
    """Single-owner state machine; one instance per session."""

    def __init__(
        self,
        homography: Homography | None = None,
        zone_config: ZoneConfig | None = None,
        dropout_frames: int = DEFAULT_DROPOUT_FRAMES,
        smoothing_alpha: float = DEFAULT_SMOOTHING_ALPHA,
    ) -> None:
        if dropout_frames < 0:
            raise ValueError("dropout allowance cannot be negative")
        if not (0.0 < smoothing_alpha <= 1.0):
            raise ValueError("smoothing alpha must be in (0, 1]")
        self.homography = homography
        self.zone_config = zone_config if zone_config is not None else ZoneConfig()
        self.dropout_frames = dropout_frames
        self.smoothing_alpha = smoothing_alpha
        self._phase = _IDLE
        self._last: tuple[float, float] | None = None
        self._missing = 0
        self._frame = 0

    @property
    def phase(self) -> str:
        return self._phase

    def _map(self, blob: IrBlob) -> tuple[float, float] | None:
        assert self.homography is not None
        try:
            return self.homography.apply((float(blob.x), float(blob.y)))
        except AtInfinity:
            # a detection with no finite image is treated as no detection
            return None

    def _pick(self, blobs: list[IrBlob]) -> tuple[float, float] | None:
        """Map blobs and choose one position for this frame."""
        positions = [p for p in (self._map(b) for b in blobs) if p is not None]
        if not positions:
            return None
        if self._last is None or len(positions) == 1:
            return positions[0]
        ref = self._last
        return min(positions, key=lambda p: (p[0] - ref[0]) ** 2 + (p[1] - ref[1]) ** 2)

    def step(self, blobs: list[IrBlob]) -> list[PointerEvent]:
        if self.homography is None:
            raise NotCalibrated("no screen mapping; calibrate first")
        t = self._frame
        self._frame += 1
        events: list[PointerEvent] = []
        pos = self._pick(blobs)

        if pos is None:
            if self._phase in (_PRESSED, _SIDE_LATCHED):
                self._missing += 1
                if self._missing > self.dropout_frames:
                    if self._phase == _PRESSED:
                        assert self._last is not None
                        events.append(
                            PointerEvent(
                                t=t, kind=EventKind.UP, u=self._last[0], v=self._last[1]
                            )
                        )
                    self._phase = _IDLE
                    self._last = None
                    self._missing = 0
            return events

        if self._phase == _IDLE:
            hit = classify(pos, self.zone_config)
            if isinstance(hit, ScreenHit):
                events.append(PointerEvent(t=t, kind=EventKind.DOWN, u=hit.u, v=hit.v))
                self._phase = _PRESSED
                self._last = (hit.u, hit.v)
                self._missing = 0
            elif isinstance(hit, SideHit):
                events.append(PointerEvent(t=t, kind=EventKind.SIDE, action=hit.action))
                self._phase = _SIDE_LATCHED
                self._last = pos
                self._missing = 0
            # outside: stay idle
        elif self._phase == _PRESSED:
            assert self._last is not None
            a = self.smoothing_alpha
            smoothed = (
                a * pos[0] + (1.0 - a) * self._last[0],
                a * pos[1] + (1.0 - a) * self._last[1],
            )
            events.append(
                PointerEvent(t=t, kind=EventKind.MOVE, u=smoothed[0], v=smoothed[1])
            )
            self._last = smoothed
            self._missing = 0
        else:  # side latched: silence until release
            self._last = pos
            self._missing = 0
        return events


def event_to_record(event: PointerEvent) -> dict:
    record: dict = {"t": event.t, "kind": event.kind.value}
    if event.kind is EventKind.SIDE:
        record["action"] = event.action.value if event.action else ZoneAction.NONE.value
    else:
        record["u"] = event.u
        record["v"] = event.v
    return record


def record_to_event(record: dict) -> PointerEvent:
    try:
        kind = EventKind(record["kind"])
        t = int(record["t"])
        if kind is EventKind.SIDE:
            return PointerEvent(t=t, kind=kind, action=ZoneAction(record["action"]))
        return PointerEvent(t=t, kind=kind, u=float(record["u"]), v=float(record["v"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise TraceParseError(f"bad event record {record!r}: {exc}") from exc


def write_trace(path: str, events: list[PointerEvent]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(json.dumps(event_to_record(event)) + "\n")


def read_trace(path: str) -> list[PointerEvent]:
    events = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceParseError(f"line {lineno}: not valid JSON: {exc}") from exc
            try:
                events.append(record_to_event(record))
            except TraceParseError as exc:
                raise TraceParseError(f"line {lineno}: {exc}") from exc
    return events
