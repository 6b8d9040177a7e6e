from __future__ import annotations

import pytest

from ptosc.errors import ConfigError
from ptosc.services.contour import read_contour_csv
from ptosc.services.report import RunConfig
from ptosc.services.suites import (
    SUITES,
    cmd_export_contour,
    cmd_verify_algebra,
    cmd_verify_all,
    cmd_verify_operators,
    cmd_verify_orthonormality,
    cmd_verify_spectrum,
)

FAST_ORACLE_POINTS = (201, 401, 801)


def _names(report) -> set[str]:
    return {c.name for c in report.checks}


def test_spectrum_passes():
    report = cmd_verify_spectrum(RunConfig.build(epsilon=0.2, n_max=10, oracle_points=FAST_ORACLE_POINTS))
    assert report.passed, report.failures
    assert {"eigen_residual eps=0.2", "oracle_extrapolated_error", "oracle_slope_deviation"} <= _names(report)


def test_spectrum_oscillator_limit():
    report = cmd_verify_spectrum(RunConfig.build(epsilon=0.0, n_max=4, oracle_points=FAST_ORACLE_POINTS))
    assert report.passed, report.failures


def test_spectrum_energy_shift_is_caught():
    cfg = RunConfig.build(epsilon=0.2, n_max=10, oracle_points=FAST_ORACLE_POINTS, inject_energy_shift=1e-6)
    report = cmd_verify_spectrum(cfg)
    assert not report.passed
    assert [c.name for c in report.failures] == ["eigen_residual eps=0.2"]


@pytest.mark.parametrize("eps, n_max", [(0.2, 6), (0.0, 3)])
def test_orthonormality_passes(eps, n_max):
    report = cmd_verify_orthonormality(RunConfig.build(epsilon=eps, n_max=n_max))
    assert report.passed, report.failures
    assert report.config["n_max"] == n_max


def test_orthonormality_single_state():
    report = cmd_verify_orthonormality(RunConfig.build(epsilon=0.2, n_max=0))
    assert report.passed, report.failures


def test_orthonormality_wide_contour():
    report = cmd_verify_orthonormality(RunConfig.build(epsilon=0.4, n_max=8))
    assert report.passed, report.failures
    assert "contour_endpoint_ratio eps=0.4" in _names(report)


@pytest.mark.parametrize("eps", [0.15, 0.0])
def test_operators_pass(eps):
    report = cmd_verify_operators(RunConfig.build(epsilon=eps, n_max=8))
    assert report.passed, report.failures


def test_operators_sign_flip_is_caught():
    report = cmd_verify_operators(RunConfig.build(epsilon=0.15, n_max=4, inject_sign_flip=True))
    failed = {c.name for c in report.failures}
    assert failed == {"pt_eigenvalue eps=0.15", "c_eigenvalue eps=0.15"}


def test_algebra_passes():
    report = cmd_verify_algebra(RunConfig.build(epsilon=0.1, order=8, seed=7))
    assert report.passed, report.failures
    assert "bch_vs_target order=8" in _names(report)
    assert "lemma_domain_guard eps=0.1" in _names(report)


def test_algebra_reports_are_deterministic():
    cfg = RunConfig.build(epsilon=0.05, order=4, seed=3)
    first, second = cmd_verify_algebra(cfg), cmd_verify_algebra(cfg)
    assert first.to_dict() == second.to_dict()


def test_export_needs_epsilon():
    with pytest.raises(ConfigError):
        cmd_export_contour(RunConfig.build())


def test_export_writes_csv(tmp_path):
    out = tmp_path / "c.csv"
    export = cmd_export_contour(RunConfig.build(epsilon=0.25, q_range=50.0, samples=5, out=out))
    assert read_contour_csv(out) == list(export.rows)
    assert export.endpoint == pytest.approx(2j)


def test_suite_registry():
    assert sorted(SUITES) == ["algebra", "all", "operators", "orthonormality", "spectrum"]


def test_verify_all_default_epsilons():
    report = cmd_verify_all(RunConfig.build(oracle_points=FAST_ORACLE_POINTS))
    assert report.suite == "all"
    assert report.passed, report.failures
    assert report.config["epsilons"] == [0.05, 0.1, 0.25]
    assert report.config["n_max"] == {"spectrum": 12, "orthonormality": 6, "operators": 8}
    names = _names(report)
    for eps in ("0.05", "0.1", "0.25"):
        assert f"spectrum/eigen_residual eps={eps}" in names
        assert f"orthonormality/gram_max_offdiag eps={eps}" in names
        assert f"operators/c_eigenvalue eps={eps}" in names
        assert f"algebra/lemma_series_vs_closed_form eps={eps}" in names
    residuals = [c for c in report.checks if c.name.startswith("spectrum/eigen_residual")]
    assert all(c.measured < 1e-10 for c in residuals)
