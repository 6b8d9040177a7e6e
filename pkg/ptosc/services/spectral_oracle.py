"""Finite-difference spectrum of the Hermitian partner h = p^2/2 + x^2/2.

Independent of the closed-form eigenstates: a second-order central difference on a Dirichlet
grid, diagonalized by an implicit-shift QL iteration on the symmetric tridiagonal matrix.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ptosc.config import settings
from ptosc.errors import NoConvergence

logger = logging.getLogger(__name__)

MACHEP = 2.0**-52


@dataclass(frozen=True)
class Grid1D:
    half_width: float
    points: int

    def __post_init__(self) -> None:
        if self.points < 3:
            raise ValueError(f"grid needs at least 3 points, got {self.points}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.points - 1)

    @property
    def nodes(self) -> np.ndarray:
        return -self.half_width + np.arange(self.points) * self.spacing


@dataclass(frozen=True)
class TridiagSym:
    diag: tuple[float, ...]
    offdiag: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.offdiag) != max(0, len(self.diag) - 1):
            raise ValueError("offdiag must have exactly one entry fewer than diag")

    @property
    def size(self) -> int:
        return len(self.diag)

    def gershgorin_bounds(self) -> tuple[float, float]:
        spread = 2.0 * max((abs(e) for e in self.offdiag), default=0.0)
        return min(self.diag) - spread, max(self.diag) + spread


def discretize_h(grid: Grid1D) -> TridiagSym:
    dx = grid.spacing
    inv = 1.0 / (dx * dx)
    diag = tuple(float(inv + 0.5 * x * x) for x in grid.nodes)
    return TridiagSym(diag=diag, offdiag=(-0.5 * inv,) * (grid.points - 1))


def eigenvalues_tridiag(m: TridiagSym, k: int, max_iterations: int | None = None) -> list[float]:
    """k smallest eigenvalues, ascending, by implicit QL with shifts.

    Follows the tql1/gausq2 formulation: the shift comes from the leading 2x2 block, and
    plane rotations chase the bulge back to tridiagonal form.
    """
    n = m.size
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, {n}], got {k}")
    max_iterations = settings.ql_max_iterations if max_iterations is None else max_iterations
    d = list(m.diag)
    e = list(m.offdiag) + [0.0]
    hypot, copysign = math.hypot, math.copysign
    sweeps = 0

    for l in range(n):
        it = 0
        while True:
            mm = l
            while mm < n - 1:
                if abs(e[mm]) <= MACHEP * (abs(d[mm]) + abs(d[mm + 1])):
                    break
                mm += 1
            if mm == l:
                break
            if it == max_iterations:
                raise NoConvergence(f"QL iteration stalled on eigenvalue {l} after {it} sweeps")
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = hypot(g, 1.0)
            g = d[mm] - d[l] + e[l] / (g + copysign(r, g))
            s, c, p = 1.0, 1.0, 0.0
            underflow = False
            for i in range(mm - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[mm] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[mm] = 0.0
        sweeps += it

    logger.debug("QL on n=%d finished after %d sweeps", n, sweeps)
    return sorted(d)[:k]


def richardson_extrapolate(coarse: float, fine: float, ratio: float = 2.0, order: int = 2) -> float:
    """Remove the leading O(h^order) error from two results at spacings h and h/ratio."""
    factor = ratio**order
    return (factor * fine - coarse) / (factor - 1.0)


def convergence_slope(spacings: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(spacing)."""
    slope, _ = np.polyfit(np.log(np.asarray(spacings)), np.log(np.abs(np.asarray(errors))), 1)
    return float(slope)


@dataclass(frozen=True)
class OracleResult:
    grids: tuple[Grid1D, ...]
    eigenvalues: tuple[tuple[float, ...], ...]
    extrapolated: tuple[float, ...]
    slopes: tuple[float, ...]

    @property
    def exact(self) -> tuple[float, ...]:
        return tuple(j + 0.5 for j in range(len(self.extrapolated)))

    def max_raw_error(self) -> float:
        return max(abs(v - e) for v, e in zip(self.eigenvalues[-1], self.exact))

    def max_extrapolated_error(self) -> float:
        return max(abs(v - e) for v, e in zip(self.extrapolated, self.exact))


def run_oracle(points: Sequence[int] | None = None, half_width: float | None = None, levels: int | None = None) -> OracleResult:
    """Lowest levels of h on successively refined grids, with extrapolation and observed order."""
    points = tuple(settings.oracle_points if points is None else points)
    half_width = settings.oracle_half_width if half_width is None else half_width
    levels = settings.oracle_levels if levels is None else levels
    if len(points) < 2:
        raise ValueError("need at least two grids")
    grids = tuple(Grid1D(half_width, n) for n in points)
    eigenvalues = tuple(tuple(eigenvalues_tridiag(discretize_h(g), levels)) for g in grids)
    extrapolated = tuple(
        richardson_extrapolate(c, f, ratio=grids[-2].spacing / grids[-1].spacing)
        for c, f in zip(eigenvalues[-2], eigenvalues[-1])
    )
    spacings = [g.spacing for g in grids]
    slopes = tuple(
        convergence_slope(spacings, [ev[j] - (j + 0.5) for ev in eigenvalues]) for j in range(levels)
    )
    for g, ev in zip(grids, eigenvalues):
        logger.info("oracle N=%d dx=%.4f lowest=%s", g.points, g.spacing, ", ".join(f"{v:.8f}" for v in ev))
    return OracleResult(grids, eigenvalues, extrapolated, slopes)
