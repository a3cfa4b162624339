"""Classification of mapped pointer positions into screen and side zones.

The screen is the closed unit square. Two vertical bands hug its left and
right edges, each band_width wide and split into vertical thirds; every
third carries a configurable action. Band membership is half-open so that
u = 0 and u = 1 stay part of the screen: the right band is (1, 1+w], the
left band is [-w, 0). Thirds are half-open downward: v in [0, 1/3) is the
top third, [1/3, 2/3) the middle, [2/3, 1] the bottom. Everything else,
including any band hit while zones are disabled or mapped to no action,
is outside.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

Point = tuple[float, float]

DEFAULT_BAND_WIDTH = 0.03
MAX_BAND_WIDTH = 0.2


class ZoneAction(str, Enum):
    LEFT_CLICK = "left_click"
    RIGHT_CLICK = "right_click"
    MIDDLE_CLICK = "middle_click"
    DOUBLE_CLICK = "double_click"
    NONE = "none"


@dataclass(frozen=True)
class ZoneConfig:
    left: tuple[ZoneAction, ZoneAction, ZoneAction] = (
        ZoneAction.NONE,
        ZoneAction.NONE,
        ZoneAction.NONE,
    )
    right: tuple[ZoneAction, ZoneAction, ZoneAction] = (
        ZoneAction.NONE,
        ZoneAction.NONE,
        ZoneAction.NONE,
    )
    band_width: float = DEFAULT_BAND_WIDTH
    enabled: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "left", tuple(ZoneAction(a) for a in self.left))
        object.__setattr__(self, "right", tuple(ZoneAction(a) for a in self.right))
        if len(self.left) != 3 or len(self.right) != 3:
            raise ValueError("each side takes exactly three actions")
        if not (0.0 < self.band_width <= MAX_BAND_WIDTH):
            raise ValueError(
                f"band width must be in (0, {MAX_BAND_WIDTH}], got {self.band_width}"
            )


@dataclass(frozen=True)
class ScreenHit:
    u: float
    v: float


@dataclass(frozen=True)
class SideHit:
    action: ZoneAction


@dataclass(frozen=True)
class OutsideHit:
    pass


ZoneHit = ScreenHit | SideHit | OutsideHit

OUTSIDE = OutsideHit()


def _third(v: float) -> int:
    if v < 1.0 / 3.0:
        return 0
    if v < 2.0 / 3.0:
        return 1
    return 2


def classify(p: Point, config: ZoneConfig) -> ZoneHit:
    u, v = p
    if 0.0 <= u <= 1.0 and 0.0 <= v <= 1.0:
        return ScreenHit(u=u, v=v)
    if not config.enabled or not (0.0 <= v <= 1.0):
        return OUTSIDE
    if 1.0 < u <= 1.0 + config.band_width:
        action = config.right[_third(v)]
    elif -config.band_width <= u < 0.0:
        action = config.left[_third(v)]
    else:
        return OUTSIDE
    if action is ZoneAction.NONE:
        return OUTSIDE
    return SideHit(action=action)
