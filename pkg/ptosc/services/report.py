from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Literal, TextIO

from jinja2 import Environment, FileSystemLoader
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from ptosc.config import settings
from ptosc.errors import ConfigError, ExportError

TEMPLATES_DIR = Path(__file__).resolve().parent.parent / "templates"

OutputFormat = Literal["json", "csv", "text"]


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    epsilon: float | None = None
    n_max: int | None = None
    order: int = settings.bch_order
    tol: float | None = None
    format: OutputFormat = "json"
    out: Path | None = None
    seed: int = 0
    samples: int = 1001
    q_range: float = 50.0
    allow_large_eps: bool = False
    oracle_points: tuple[int, ...] = settings.oracle_points

    # negative controls, set from test harnesses only
    inject_energy_shift: float = 0.0
    inject_sign_flip: bool = False

    @field_validator("n_max")
    @classmethod
    def _n_max_range(cls, v: int | None) -> int | None:
        if v is not None and not 0 <= v <= settings.max_n:
            raise ValueError(f"n_max must lie in [0, {settings.max_n}]")
        return v

    @field_validator("order")
    @classmethod
    def _order_range(cls, v: int) -> int:
        if not 0 <= v <= settings.bch_order_cap:
            raise ValueError(f"order must lie in [0, {settings.bch_order_cap}]")
        return v

    @field_validator("tol")
    @classmethod
    def _tol_positive(cls, v: float | None) -> float | None:
        if v is not None and not (v > 0 and math.isfinite(v)):
            raise ValueError("tol must be a positive finite number")
        return v

    @field_validator("oracle_points")
    @classmethod
    def _oracle_grids(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if len(v) < 2 or any(n < 3 for n in v) or list(v) != sorted(set(v)):
            raise ValueError("oracle_points needs at least two increasing grid sizes >= 3")
        return v

    @model_validator(mode="after")
    def _epsilon_range(self) -> RunConfig:
        for eps in self.epsilons:
            if not math.isfinite(eps):
                raise ValueError("epsilon must be finite")
            if abs(eps) > settings.max_epsilon and not self.allow_large_eps:
                raise ValueError(
                    f"|epsilon|={abs(eps):g} exceeds {settings.max_epsilon:g}; pass --allow-large-eps"
                )
        if self.samples < 2:
            raise ValueError("samples must be at least 2")
        if self.q_range <= 0:
            raise ValueError("q_range must be positive")
        return self

    @property
    def epsilons(self) -> tuple[float, ...]:
        if self.epsilon is None:
            return tuple(settings.default_epsilons)
        return (self.epsilon,)

    def threshold(self, default: float) -> float:
        return default if self.tol is None else self.tol

    def echo(self) -> dict[str, Any]:
        return {
            "epsilons": list(self.epsilons),
            "n_max": self.n_max,
            "order": self.order,
            "tol": self.tol,
            "seed": self.seed,
        }

    @classmethod
    def build(cls, **fields: Any) -> RunConfig:
        try:
            return cls(**fields)
        except ValidationError as e:
            raise ConfigError(str(e)) from e


@dataclass(frozen=True)
class CheckRecord:
    name: str
    measured: float
    threshold: float
    passed: bool

    @classmethod
    def at_most(cls, name: str, measured: float, threshold: float) -> CheckRecord:
        measured = float(measured)
        # NaN compares false, so it fails
        return cls(name, measured, float(threshold), bool(measured <= threshold))


@dataclass(frozen=True)
class VerificationReport:
    suite: str
    checks: tuple[CheckRecord, ...]
    config: dict[str, Any] = field(default_factory=dict)
    duration: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    @property
    def failures(self) -> list[CheckRecord]:
        return [c for c in self.checks if not c.passed]

    @classmethod
    def combine(cls, suite: str, reports: Iterable[VerificationReport], config: dict[str, Any]) -> VerificationReport:
        reports = list(reports)
        checks = tuple(
            CheckRecord(f"{r.suite}/{c.name}", c.measured, c.threshold, c.passed) for r in reports for c in r.checks
        )
        return cls(suite, checks, config, sum(r.duration for r in reports))

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "status": self.status,
            "config": self.config,
            "checks": [
                {"name": c.name, "measured": c.measured, "threshold": c.threshold, "passed": c.passed}
                for c in self.checks
            ],
        }


def _fixed(value: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return "null"
        return format(value, ".16e")
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_fixed(v, indent, level + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in value):
            return "[" + ", ".join(_fixed(v, indent, level + 1) for v in value) + "]"
        items = [f"{pad}{_fixed(v, indent, level + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps_fixed(obj: Any, indent: int = 2) -> str:
    """JSON with floats in 17-significant-digit scientific notation and stable key order."""
    return _fixed(obj, indent, 0) + "\n"


def _render_csv(report: VerificationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("suite", "check", "measured", "threshold", "passed"))
    for c in report.checks:
        writer.writerow((report.suite, c.name, repr(c.measured), repr(c.threshold), "true" if c.passed else "false"))
    return buf.getvalue()


def _render_text(report: VerificationReport) -> str:
    env = Environment(loader=FileSystemLoader(str(TEMPLATES_DIR)), keep_trailing_newline=True, autoescape=False)
    return env.get_template("report.txt.j2").render(report=report, app_name=settings.app_name)


def render_report(report: VerificationReport, fmt: OutputFormat) -> str:
    if fmt == "json":
        return dumps_fixed(report.to_dict())
    if fmt == "csv":
        return _render_csv(report)
    return _render_text(report)


def write_output(text: str, out: Path | None, stream: TextIO | None = None) -> None:
    if out is None:
        (stream or sys.stdout).write(text)
        return
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8", newline="\n")
    except OSError as e:
        raise ExportError(out, e.strerror or str(e)) from e
