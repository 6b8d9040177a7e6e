"""The integration path z(q) = q / (1 - 2i eps q) and the CPT inner products taken along it.

Integrals are done in the real parameter q with composite Gauss-Legendre panels. The pairing is
bilinear: phi_n(z) phi_m(z) dz with no complex conjugation.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from ptosc.config import settings
from ptosc.errors import ExportError, NonRealNorm
from ptosc.services.pt_model import (
    EigenState,
    PTSystem,
    cpt_apply,
    phi_function,
    phi_table,
    psi_table,
    pt_reflect,
    values,
)
from ptosc.services.report import dumps_fixed

logger = logging.getLogger(__name__)

IMAG_TOLERANCE = 1e-8
MAX_GRAM_N = 20
CSV_HEADER = ("q", "re_z", "im_z")


@dataclass(frozen=True)
class ContourSample:
    q: float
    z: complex
    dz_dq: complex


def contour_point(sys: PTSystem, q: float) -> ContourSample:
    sbar = sys.sbar(q)
    return ContourSample(q=float(q), z=q / sbar, dz_dq=1.0 / (sbar * sbar))


def contour_points(sys: PTSystem, qs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (z, dz/dq) over an array of real parameters."""
    qs = np.asarray(qs, dtype=np.float64)
    sbar = 1 - 2j * sys.epsilon * qs
    return qs / sbar, 1.0 / (sbar * sbar)


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    half_width: float
    panels: int
    nodes_per_panel: int

    def refined(self) -> QuadratureRule:
        return build_rule(self.half_width, panels=2 * self.panels, nodes_per_panel=self.nodes_per_panel)


def q_cut(n_max: int) -> float:
    """Half-width that leaves the highest state's turning point well inside the window."""
    return math.sqrt(2.0 * (2 * n_max + 1)) + 8.0


def build_rule(half_width: float, panels: int | None = None, nodes_per_panel: int | None = None) -> QuadratureRule:
    if half_width <= 0:
        raise ValueError(f"half_width must be positive, got {half_width}")
    nodes_per_panel = nodes_per_panel or settings.nodes_per_panel
    if panels is None:
        panels = max(1, math.ceil(2.0 * half_width / settings.panel_width))
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    edges = np.linspace(-half_width, half_width, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    logger.debug("quadrature rule: Q=%.3f panels=%d nodes=%d", half_width, panels, nodes.size)
    return QuadratureRule(nodes, weights, float(half_width), panels, nodes_per_panel)


def default_rule(n_max: int) -> QuadratureRule:
    return build_rule(q_cut(n_max))


def _check_n(*ns: int) -> None:
    for n in ns:
        if n < 0 or n > settings.hermite_max_index:
            raise ValueError(f"state index {n} outside [0, {settings.hermite_max_index}]")


def inner_product(sys: PTSystem, n: int, m: int, rule: QuadratureRule) -> complex:
    _check_n(n, m)
    z, dz = contour_points(sys, rule.nodes)
    table = phi_table(sys, max(n, m), z)
    return complex(np.sum(rule.weights * dz * table[n] * table[m]))


def _real_part(value: complex, what: str) -> float:
    if abs(value.imag) > IMAG_TOLERANCE:
        raise NonRealNorm(f"{what} has imaginary residue {value.imag:.3e}")
    return value.real


def _contour_integral(sys: PTSystem, rule: QuadratureRule, integrand) -> complex:
    total = 0j
    for q, w in zip(rule.nodes.tolist(), rule.weights.tolist()):
        sample = contour_point(sys, q)
        total += w * sample.dz_dq * integrand(sample.z)
    return total


def cpt_norm(sys: PTSystem, n: int, rule: QuadratureRule) -> float:
    """Integral of phi_n * CPT phi_n along the contour; positive for every n."""
    _check_n(n)
    f = values(phi_function(sys, EigenState(n)))
    value = _contour_integral(sys, rule, lambda z: f(z) * cpt_apply(sys, f, z))
    return _real_part(value, f"CPT norm of phi_{n}")


def pt_norm(sys: PTSystem, n: int, rule: QuadratureRule) -> float:
    """Integral of phi_n * PT phi_n along the contour; equals (-1)^n."""
    _check_n(n)
    f = values(phi_function(sys, EigenState(n)))
    value = _contour_integral(sys, rule, lambda z: f(z) * pt_reflect(f, z))
    return _real_part(value, f"PT norm of phi_{n}")


@dataclass(frozen=True)
class GramReport:
    n_max: int
    matrix: np.ndarray
    max_offdiag: float
    max_diag_dev: float

    def entries(self) -> list[list[float]]:
        return [[float(g.real), float(g.imag)] for g in self.matrix.ravel()]

    def to_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "entries": self.entries(),
            "max_offdiag": float(self.max_offdiag),
            "max_diag_dev": float(self.max_diag_dev),
        }

    def to_json(self) -> str:
        return dumps_fixed(self.to_dict())


def gram_matrix(sys: PTSystem, n_max: int, rule: QuadratureRule) -> GramReport:
    if n_max < 0 or n_max > MAX_GRAM_N:
        raise ValueError(f"n_max must lie in [0, {MAX_GRAM_N}], got {n_max}")
    z, dz = contour_points(sys, rule.nodes)
    table = phi_table(sys, n_max, z)
    matrix = (table * (rule.weights * dz)) @ table.T
    matrix.setflags(write=False)
    deviation = np.abs(matrix - np.eye(n_max + 1))
    offdiag = deviation[~np.eye(n_max + 1, dtype=bool)]
    return GramReport(
        n_max=n_max,
        matrix=matrix,
        max_offdiag=float(offdiag.max()) if offdiag.size else 0.0,
        max_diag_dev=float(np.diag(deviation).max()),
    )


@dataclass(frozen=True)
class ConvergenceResult:
    rule: QuadratureRule
    report: GramReport
    change: float
    doublings: int
    converged: bool


def convergence_study(
    sys: PTSystem, n_max: int, rule: QuadratureRule, tol: float = 1e-10, max_doublings: int = 6
) -> ConvergenceResult:
    """Double the panel count until no Gram entry moves by more than tol."""
    previous = gram_matrix(sys, n_max, rule)
    change = math.inf
    for doubling in range(1, max_doublings + 1):
        rule = rule.refined()
        current = gram_matrix(sys, n_max, rule)
        change = float(np.abs(current.matrix - previous.matrix).max())
        logger.debug("eps=%g panels=%d gram change %.3e", sys.epsilon, rule.panels, change)
        if change < tol:
            return ConvergenceResult(rule, current, change, doubling, True)
        previous = current
    logger.warning("quadrature did not settle below %.1e after %d doublings", tol, max_doublings)
    return ConvergenceResult(rule, previous, change, max_doublings, False)


def reduction_residual(sys: PTSystem, n: int, m: int, qs: np.ndarray) -> float:
    """max |dz phi_n(z) phi_m(z) - psi_n(q) psi_m(q)| over qs, relative to max |psi_n psi_m|."""
    _check_n(n, m)
    qs = np.asarray(qs, dtype=np.float64)
    z, dz = contour_points(sys, qs)
    top = max(n, m)
    phi = phi_table(sys, top, z)
    psi = psi_table(top, qs)
    reduced = psi[n] * psi[m]
    scale = float(np.abs(reduced).max()) or 1.0
    return float(np.abs(dz * phi[n] * phi[m] - reduced).max()) / scale


@dataclass(frozen=True)
class ContourExport:
    epsilon: float
    rows: tuple[tuple[float, float, float], ...]
    endpoint: complex | None


def export_contour(sys: PTSystem, q_range: float, samples: int) -> ContourExport:
    if samples < 2:
        raise ValueError(f"samples must be at least 2, got {samples}")
    if q_range <= 0:
        raise ValueError(f"q_range must be positive, got {q_range}")
    qs = np.linspace(-q_range, q_range, samples)
    z, _ = contour_points(sys, qs)
    rows = tuple((float(q), float(w.real), float(w.imag)) for q, w in zip(qs, z))
    return ContourExport(epsilon=sys.epsilon, rows=rows, endpoint=sys.pole)


def write_contour_csv(export: ContourExport, out: Path | TextIO) -> None:
    if isinstance(out, Path):
        try:
            with out.open("w", encoding="utf-8", newline="") as f:
                write_contour_csv(export, f)
        except OSError as e:
            raise ExportError(out, e.strerror or str(e)) from e
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for q, re_z, im_z in export.rows:
        writer.writerow((repr(q), repr(re_z), repr(im_z)))


def contour_csv_text(export: ContourExport) -> str:
    buf = io.StringIO()
    write_contour_csv(export, buf)
    return buf.getvalue()


def read_contour_csv(source: Path | TextIO) -> list[tuple[float, float, float]]:
    if isinstance(source, Path):
        with source.open("r", encoding="utf-8", newline="") as f:
            return read_contour_csv(f)
    reader = csv.DictReader(source)
    return [(float(row["q"]), float(row["re_z"]), float(row["im_z"])) for row in reader]
