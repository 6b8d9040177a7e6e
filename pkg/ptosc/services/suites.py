"""Verification suites behind the `verify` and `export` subcommands.

Each suite returns a :class:`VerificationReport` whose checks carry the measured deviation and
the threshold it was held to.
"""

from __future__ import annotations

import logging
import math
import time
from typing import Callable

import numpy as np

from ptosc.config import settings
from ptosc.errors import ConfigError, ConvergenceDomainError, NonRealNorm
from ptosc.services import contour, operator_algebra as algebra, pt_model, spectral_oracle
from ptosc.services.numerics import PolyC
from ptosc.services.parallel import parallel_map
from ptosc.services.pt_model import EigenState, PTSystem
from ptosc.services.report import CheckRecord, RunConfig, VerificationReport, write_output

logger = logging.getLogger(__name__)

SPECTRUM_N_MAX = 12
ORTHONORMALITY_N_MAX = 6
OPERATORS_N_MAX = 8

RESIDUAL_TOL = 1e-10
GRAM_TOL = 1e-8
OPERATOR_TOL = 1e-12
REDUCTION_TOL = 1e-11
REFINEMENT_TOL = 1e-10
LEMMA_TOL = 1e-10
ORACLE_TOL = 1e-4
SLOPE_TOL = 0.2
ENDPOINT_SLACK = 1.1
GEOMETRIC_C_MAX = 10.0

LEMMA_SEEDS = {
    "1": PolyC.from_coeffs([1]),
    "x": PolyC.from_coeffs([0, 1]),
    "x^2": PolyC.from_coeffs([0, 0, 1]),
    "1+2x^3": PolyC.from_coeffs([1, 0, 0, 2]),
}
LEMMA_POINTS = 25
# 40 terms leave a tail of roughly C(N+d, d) r^N; r <= 0.25 keeps every seed under 1e-10
LEMMA_RADIUS = 0.25
COMMUTATOR_POWERS = range(7)
COMMUTATOR_POINTS = np.linspace(-2.5, 2.5, 20)
CLOSURE_SAMPLES = 500


def _timed(suite: str, cfg: RunConfig, n_max: int | None, body: Callable[[], list[CheckRecord]]) -> VerificationReport:
    started = time.perf_counter()
    checks = body()
    echo = cfg.echo()
    echo["n_max"] = n_max
    report = VerificationReport(suite, tuple(checks), echo, time.perf_counter() - started)
    for c in checks:
        logger.info("%s %s measured=%.3e threshold=%.1e", "PASS" if c.passed else "FAIL", c.name, c.measured, c.threshold)
    logger.info("suite %s: %s (%d checks, %.2f s)", suite, report.status, len(checks), report.duration)
    return report


def cmd_verify_spectrum(cfg: RunConfig) -> VerificationReport:
    n_max = SPECTRUM_N_MAX if cfg.n_max is None else cfg.n_max
    xs = pt_model.sample_grid()

    def body() -> list[CheckRecord]:
        checks = []
        for eps in cfg.epsilons:
            sys = PTSystem(eps)
            residuals = parallel_map(
                lambda n: pt_model.eigen_residual(sys, EigenState(n), xs, cfg.inject_energy_shift),
                range(n_max + 1),
            )
            for n, r in enumerate(residuals):
                logger.debug("eps=%g n=%d residual %.3e", eps, n, r)
            checks.append(CheckRecord.at_most(f"eigen_residual eps={eps:g}", max(residuals), cfg.threshold(RESIDUAL_TOL)))

        oracle = spectral_oracle.run_oracle(cfg.oracle_points)
        checks.append(CheckRecord.at_most("oracle_extrapolated_error", oracle.max_extrapolated_error(), ORACLE_TOL))
        checks.append(
            CheckRecord.at_most("oracle_slope_deviation", max(abs(s - 2.0) for s in oracle.slopes), SLOPE_TOL)
        )
        finest = spectral_oracle.discretize_h(oracle.grids[-1])
        lo, hi = finest.gershgorin_bounds()
        outside = sum(1 for v in oracle.eigenvalues[-1] if not lo <= v <= hi)
        checks.append(CheckRecord.at_most("oracle_gershgorin_violations", outside, 0))
        return checks

    return _timed("spectrum", cfg, n_max, body)


def _contour_geometry(sys: PTSystem, rule: contour.QuadratureRule) -> list[CheckRecord]:
    eps = sys.epsilon
    checks = [CheckRecord.at_most(f"contour_origin eps={eps:g}", abs(contour.contour_point(sys, 0.0).z), 0.0)]
    z_pos, _ = contour.contour_points(sys, rule.nodes)
    z_neg, _ = contour.contour_points(sys, -rule.nodes)
    checks.append(
        CheckRecord.at_most(f"contour_symmetry eps={eps:g}", float(np.abs(z_neg + np.conj(z_pos)).max()), 1e-13)
    )
    if eps != 0:
        q = 10.0 / abs(eps)
        bound = 1.0 / (4.0 * eps * eps * q)
        ratio = max(abs(contour.contour_point(sys, s * q).z - sys.pole) for s in (-1.0, 1.0)) / bound
        checks.append(CheckRecord.at_most(f"contour_endpoint_ratio eps={eps:g}", ratio, ENDPOINT_SLACK))
    return checks


def cmd_verify_orthonormality(cfg: RunConfig) -> VerificationReport:
    n_max = ORTHONORMALITY_N_MAX if cfg.n_max is None else cfg.n_max
    tol = cfg.threshold(GRAM_TOL)

    def body() -> list[CheckRecord]:
        checks = []
        for eps in cfg.epsilons:
            sys = PTSystem(eps)
            rule = contour.default_rule(n_max)
            gram = contour.gram_matrix(sys, n_max, rule)
            refined = contour.gram_matrix(sys, n_max, rule.refined())
            checks += [
                CheckRecord.at_most(f"gram_max_offdiag eps={eps:g}", gram.max_offdiag, tol),
                CheckRecord.at_most(f"gram_max_diag_dev eps={eps:g}", gram.max_diag_dev, tol),
                CheckRecord.at_most(
                    f"gram_symmetry eps={eps:g}", float(np.abs(gram.matrix - gram.matrix.T).max()), tol
                ),
                CheckRecord.at_most(
                    f"gram_refinement_change eps={eps:g}",
                    float(np.abs(refined.matrix - gram.matrix).max()),
                    REFINEMENT_TOL,
                ),
            ]

            def norms(n: int) -> tuple[float, float]:
                try:
                    return contour.cpt_norm(sys, n, rule), contour.pt_norm(sys, n, rule)
                except NonRealNorm as e:
                    logger.error("eps=%g n=%d: %s", eps, n, e)
                    return math.nan, math.nan

            results = parallel_map(norms, range(n_max + 1))
            checks.append(
                CheckRecord.at_most(f"cpt_norm_dev eps={eps:g}", max(abs(c - 1.0) for c, _ in results), tol)
            )
            checks.append(
                CheckRecord.at_most(
                    f"pt_norm_dev eps={eps:g}", max(abs(p - (-1) ** n) for n, (_, p) in enumerate(results)), tol
                )
            )
            reduction = max(
                contour.reduction_residual(sys, n, m, rule.nodes)
                for n in range(n_max + 1)
                for m in range(n, n_max + 1)
            )
            checks.append(CheckRecord.at_most(f"reduction_identity eps={eps:g}", reduction, REDUCTION_TOL))
            checks += _contour_geometry(sys, rule)
        return checks

    return _timed("orthonormality", cfg, n_max, body)


def cmd_verify_operators(cfg: RunConfig) -> VerificationReport:
    n_max = OPERATORS_N_MAX if cfg.n_max is None else cfg.n_max
    tol = cfg.threshold(OPERATOR_TOL)
    xs = pt_model.sample_grid()
    flip = -1 if cfg.inject_sign_flip else 1

    def state_checks(sys: PTSystem, n: int) -> dict[str, float]:
        f = pt_model.values(pt_model.phi_function(sys, EigenState(n)))
        psi = pt_model.values(pt_model.psi_function(EigenState(n)))
        sign = flip * (-1) ** n
        scale = pt_model.max_abs(f, xs)

        def dev(lhs, rhs) -> float:
            return pt_model.scaled_deviation(lhs, rhs, xs, scale=scale)

        return {
            "pt_eigenvalue": dev(lambda x: pt_model.pt_apply(f, x), lambda x: sign * f(x)),
            "c_eigenvalue": dev(lambda x: pt_model.c_apply(sys, f, x), lambda x: sign * f(x)),
            "cpt_identity": dev(lambda x: pt_model.cpt_apply(sys, f, x), f),
            "c_involution": dev(lambda x: pt_model.c_apply(sys, lambda w: pt_model.c_apply(sys, f, w), x), f),
            "inverse_transform": pt_model.scaled_deviation(
                lambda x: pt_model.expF_apply(sys, -1.0, f, x), psi, xs
            ),
        }

    def body() -> list[CheckRecord]:
        checks = []
        rng = np.random.default_rng(cfg.seed)
        for eps in cfg.epsilons:
            sys = PTSystem(eps)
            per_state = parallel_map(lambda n: state_checks(sys, n), range(n_max + 1))
            for name in per_state[0]:
                worst = max(r[name] for r in per_state)
                checks.append(CheckRecord.at_most(f"{name} eps={eps:g}", worst, tol))

            points = rng.uniform(-settings.sample_half_width, settings.sample_half_width, 20)
            # C keeps the 1/s prefactor and sends x/s to -x/s; k = 0 is C(1/s) = 1/s
            worst = 0.0
            for k in range(n_max + 1):
                g = lambda x, k=k: (x / sys.s(x)) ** k / sys.s(x)  # noqa: E731
                for x in points:
                    expected = (-1) ** k * g(x)
                    err = abs(pt_model.c_apply(sys, g, x) - expected) / max(abs(expected), settings.division_floor)
                    worst = max(worst, err)
            checks.append(CheckRecord.at_most(f"c_scaling_identities eps={eps:g}", worst, tol))
        return checks

    return _timed("operators", cfg, n_max, body)


def _mismatch_count(a: algebra.OperatorSum, b: algebra.OperatorSum) -> int:
    keys = {(t.kind, t.power) for t in a} | {(t.kind, t.power) for t in b}
    return sum(1 for kind, power in keys if a.coefficient(kind, power) != b.coefficient(kind, power))


def cmd_verify_algebra(cfg: RunConfig) -> VerificationReport:
    def body() -> list[CheckRecord]:
        checks = []
        bch = algebra.bch_series(cfg.order)
        target = algebra.target_expansion(cfg.order)
        for k in range(cfg.order + 1):
            checks.append(CheckRecord.at_most(f"bch_vs_target order={k}", _mismatch_count(bch[k], target[k]), 0))

        rng = np.random.default_rng(cfg.seed)
        bad = 0
        for _ in range(CLOSURE_SAMPLES):
            out = algebra.commute_F(algebra.random_operator_sum(rng))
            bad += sum(1 for t in out if t.kind not in algebra.OpKind or t.power < 0)
        checks.append(CheckRecord.at_most("commutator_closure_violations", bad, 0))

        worst = 0.0
        for n in COMMUTATOR_POWERS:
            for op in (algebra.OperatorSum.x_pow(n), algebra.OperatorSum.p_x_pow_p(n)):
                for j in COMMUTATOR_POWERS:
                    probe = algebra.GaussianProbe.monomial(j)
                    worst = max(worst, algebra.commutator_residual(op, probe, COMMUTATOR_POINTS))
        checks.append(CheckRecord.at_most("commutator_identities", worst, cfg.threshold(LEMMA_TOL)))

        for eps in cfg.epsilons:
            checks += _lemma_checks(PTSystem(eps), cfg.threshold(LEMMA_TOL))
        return checks

    return _timed("algebra", cfg, None, body)


def _lemma_checks(sys: PTSystem, tol: float) -> list[CheckRecord]:
    eps = sys.epsilon
    if eps == 0:
        points = np.linspace(-1.0, 1.0, LEMMA_POINTS)
    else:
        points = np.linspace(-LEMMA_RADIUS, LEMMA_RADIUS, LEMMA_POINTS) / (2.0 * abs(eps))
    worst = 0.0
    for U in LEMMA_SEEDS.values():
        series = algebra.build_lemma_series(U, sys)
        for x in points:
            exact = algebra.lemma_closed_form(U, sys, x)
            worst = max(worst, abs(series.partial_sum(x) - exact) / max(abs(exact), 1e-300))
    checks = [CheckRecord.at_most(f"lemma_series_vs_closed_form eps={eps:g}", worst, tol)]
    if eps == 0:
        return checks

    try:
        algebra.lemma_series_sum(LEMMA_SEEDS["1"], sys, 1.001 / (2.0 * abs(eps)))
        escaped = 1
    except ConvergenceDomainError:
        escaped = 0
    checks.append(CheckRecord.at_most(f"lemma_domain_guard eps={eps:g}", escaped, 0))

    seed = LEMMA_SEEDS["1+2x^3"]
    series = algebra.build_lemma_series(seed, sys, 50)
    violations = sum(1 for n, f in enumerate(series.terms) if f.degree != seed.degree + n)
    checks.append(CheckRecord.at_most(f"lemma_degree_law eps={eps:g}", violations, 0))

    x = 0.5 / (2.0 * abs(eps))
    c = algebra.geometric_constant(LEMMA_SEEDS["1"], sys, x, range(5, 41, 5))
    checks.append(CheckRecord.at_most(f"lemma_geometric_constant eps={eps:g}", c, GEOMETRIC_C_MAX))
    return checks


def cmd_verify_all(cfg: RunConfig) -> VerificationReport:
    started = time.perf_counter()
    reports = [
        cmd_verify_spectrum(cfg),
        cmd_verify_orthonormality(cfg),
        cmd_verify_operators(cfg),
        cmd_verify_algebra(cfg),
    ]
    config = cfg.echo()
    config["n_max"] = {r.suite: r.config["n_max"] for r in reports if r.config["n_max"] is not None}
    combined = VerificationReport.combine("all", reports, config)
    logger.info("verify all: %s in %.2f s", combined.status, time.perf_counter() - started)
    return combined


def cmd_export_contour(cfg: RunConfig) -> contour.ContourExport:
    if cfg.epsilon is None:
        raise ConfigError("export contour needs an explicit --eps")
    sys = PTSystem(cfg.epsilon)
    export = contour.export_contour(sys, cfg.q_range, cfg.samples)
    write_output(contour.contour_csv_text(export), cfg.out)
    logger.info(
        "exported %d contour samples for eps=%g (endpoint %s)%s",
        len(export.rows),
        cfg.epsilon,
        export.endpoint,
        f" to {cfg.out}" if cfg.out else "",
    )
    return export


SUITES: dict[str, Callable[[RunConfig], VerificationReport]] = {
    "spectrum": cmd_verify_spectrum,
    "orthonormality": cmd_verify_orthonormality,
    "operators": cmd_verify_operators,
    "algebra": cmd_verify_algebra,
    "all": cmd_verify_all,
}
