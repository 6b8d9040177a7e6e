from __future__ import annotations

import os
import sys

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


def _cpu_count() -> int:
    return max(1, os.cpu_count() or 1)


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", env_prefix="PTOSC_", case_sensitive=False
    )

    app_name: str = "ptosc"
    log_level: str = "INFO"

    threads: int = Field(default_factory=_cpu_count, ge=1)

    # numerics
    division_floor: float = 1e-300
    # |1 + c x| at or below this times (1 + |c x|) counts as a pole of s, t or sigma
    pole_tolerance: float = 8 * sys.float_info.epsilon
    hermite_max_index: int = 64

    # real-axis sample grid for pointwise checks
    sample_half_width: float = 6.0
    sample_points: int = 64

    default_epsilons: tuple[float, ...] = (0.05, 0.1, 0.25)
    max_epsilon: float = 0.5
    max_n: int = 20

    # operator algebra
    series_terms: int = 40
    series_terms_cap: int = 200
    bch_order: int = 12
    bch_order_cap: int = 16
    target_order_cap: int = 32

    # contour quadrature
    panel_width: float = 0.5
    nodes_per_panel: int = 16

    # finite-difference oracle
    oracle_half_width: float = 10.0
    oracle_points: tuple[int, ...] = (501, 1001, 2001)
    oracle_levels: int = 6
    ql_max_iterations: int = 50


settings = Settings()
