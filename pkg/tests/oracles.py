"""Independent reference routes used to cross-check the package.

Everything here is deliberately written against numpy's linear algebra,
not the package's own elimination code, so the two routes can disagree
when one of them is wrong.
"""

from __future__ import annotations

import numpy as np


def brute_force_homography(src, dst) -> np.ndarray:
    """Assemble the plain 8x8 system and let numpy solve it."""
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((x, y), (u, v)) in enumerate(zip(src, dst)):
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]
        b[2 * i] = u
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]
        b[2 * i + 1] = v
    h = np.linalg.solve(a, b)
    return np.array(
        [
            [h[0], h[1], h[2]],
            [h[3], h[4], h[5]],
            [h[6], h[7], 1.0],
        ]
    )


def apply_matrix(m: np.ndarray, p) -> tuple[float, float]:
    x, y = p
    w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    return (
        float((m[0, 0] * x + m[0, 1] * y + m[0, 2]) / w),
        float((m[1, 0] * x + m[1, 1] * y + m[1, 2]) / w),
    )


def random_quad(rng: np.random.Generator, boxes) -> list[tuple[float, float]]:
    """One point per box; boxes chosen per-quadrant keep quads non-degenerate."""
    return [
        (float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)))
        for (x0, x1, y0, y1) in boxes
    ]


CAMERA_BOXES = (
    (50, 400, 50, 300),
    (620, 980, 50, 300),
    (50, 400, 460, 720),
    (620, 980, 460, 720),
)

UNIT_BOXES = (
    (0.0, 0.35, 0.0, 0.35),
    (0.65, 1.0, 0.0, 0.35),
    (0.0, 0.35, 0.65, 1.0),
    (0.65, 1.0, 0.65, 1.0),
)
