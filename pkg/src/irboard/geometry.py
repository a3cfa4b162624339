"""Planar projective mapping between camera and screen coordinates.

A 3x3 matrix with the bottom-right entry pinned to 1 maps one plane onto
another. Four point correspondences determine it: each pair contributes
two linear equations in the eight unknown entries, and the resulting 8x8
system is solved by Gaussian elimination with partial pivoting. A pivot
magnitude below PIVOT_EPS means three of the points are collinear or two
coincide, which is reported as DegenerateConfiguration rather than an
arbitrary matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Point = tuple[float, float]

PIVOT_EPS = 1e-9
DET_EPS = 1e-12
W_EPS = 1e-12
RESIDUAL_TOL = 1e-9

# corner order used for calibration targets: top-left, top-right,
# bottom-left, bottom-right, with v growing downward
UNIT_SQUARE: tuple[Point, Point, Point, Point] = (
    (0.0, 0.0),
    (1.0, 0.0),
    (0.0, 1.0),
    (1.0, 1.0),
)


class DegenerateConfiguration(Exception):
    """Correspondences (or a matrix) too degenerate to define a projective map."""


class AtInfinity(Exception):
    """The mapped point has no finite image (denominator vanished)."""


@dataclass(frozen=True)
class Homography:
    m: np.ndarray  # (3, 3) float64, m[2, 2] == 1

    def apply(self, p: Point) -> Point:
        x, y = p
        m = self.m
        w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
        if abs(w) <= W_EPS:
            raise AtInfinity(f"point {p} maps to infinity")
        return (
            float((m[0, 0] * x + m[0, 1] * y + m[0, 2]) / w),
            float((m[1, 0] * x + m[1, 1] * y + m[1, 2]) / w),
        )

    def invert(self) -> Homography:
        det = float(np.linalg.det(self.m))
        if abs(det) <= DET_EPS:
            raise DegenerateConfiguration(f"determinant {det} too small to invert")
        inv = np.linalg.inv(self.m)
        if abs(inv[2, 2]) <= DET_EPS:
            raise DegenerateConfiguration("inverse cannot be normalized")
        return Homography(m=inv / inv[2, 2])


IDENTITY = Homography(m=np.eye(3))


def _eliminate(aug: np.ndarray) -> np.ndarray:
    """Solve aug[:, :8] @ h = aug[:, 8] in place by partial-pivot elimination."""
    n = 8
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[pivot_row, col]) < PIVOT_EPS:
            raise DegenerateConfiguration(
                "correspondences are collinear or coincident"
            )
        if pivot_row != col:
            aug[[col, pivot_row]] = aug[[pivot_row, col]]
        for row in range(col + 1, n):
            factor = aug[row, col] / aug[col, col]
            if factor != 0.0:
                aug[row, col:] -= factor * aug[col, col:]
    h = np.zeros(n)
    for row in range(n - 1, -1, -1):
        h[row] = (aug[row, n] - aug[row, row + 1 : n] @ h[row + 1 : n]) / aug[row, row]
    return h


def solve_homography(src: list[Point] | tuple, dst: list[Point] | tuple) -> Homography:
    """Map each src[i] onto dst[i]; exactly four correspondences."""
    if len(src) != 4 or len(dst) != 4:
        raise ValueError("exactly four correspondences are required")
    aug = np.zeros((8, 9))
    for i, ((x, y), (u, v)) in enumerate(zip(src, dst)):
        aug[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, u]
        aug[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, v]
    h = _eliminate(aug)
    hom = Homography(
        m=np.array(
            [
                [h[0], h[1], h[2]],
                [h[3], h[4], h[5]],
                [h[6], h[7], 1.0],
            ]
        )
    )
    for s, d in zip(src, dst):
        u, v = hom.apply(s)
        if abs(u - d[0]) > RESIDUAL_TOL or abs(v - d[1]) > RESIDUAL_TOL:
            raise DegenerateConfiguration(
                "solution does not reproduce the correspondences"
            )
    return hom
