from __future__ import annotations

from functools import lru_cache
from typing import List

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


def _csv_to_float_list(value: str | List[float] | None, *, default: List[float]) -> List[float]:
    if value is None:
        return list(default)
    if isinstance(value, list):
        return [float(v) for v in value]
    return [float(item.strip()) for item in value.split(",") if item.strip()]


def _csv_to_int_list(value: str | List[int] | None, *, default: List[int]) -> List[int]:
    if value is None:
        return list(default)
    if isinstance(value, list):
        return [int(v) for v in value]
    return [int(item.strip()) for item in value.split(",") if item.strip()]


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=(".env",), env_file_encoding="utf-8", extra="ignore")

    app_name: str = Field(default="harmonic-lattice", alias="LATTICE_APP_NAME")
    log_level: str = Field(default="INFO", alias="LATTICE_LOG_LEVEL")

    # Torus quadrature
    base_points: int = Field(default=32, alias="LATTICE_BASE_POINTS")
    tolerance: float = Field(default=1e-12, alias="LATTICE_TOLERANCE")
    max_doublings: int = Field(default=6, alias="LATTICE_MAX_DOUBLINGS")
    auto_scale: bool = Field(default=True, alias="LATTICE_AUTO_SCALE")
    auto_scale_factor: int = Field(default=2, alias="LATTICE_AUTO_SCALE_FACTOR")

    # Truncation of T_t f
    truncation_tolerance: float = Field(default=1e-12, alias="LATTICE_TRUNCATION_TOLERANCE")
    truncation_margin: int = Field(default=8, alias="LATTICE_TRUNCATION_MARGIN")
    truncation_growth: float = Field(default=1.5, alias="LATTICE_TRUNCATION_GROWTH")
    max_truncation_radius: int = Field(default=2048, alias="LATTICE_MAX_TRUNCATION_RADIUS")

    # Decay analysis
    envelope_window: int = Field(default=5, alias="LATTICE_ENVELOPE_WINDOW")
    envelope_burst: int = Field(default=12, alias="LATTICE_ENVELOPE_BURST")
    envelope_spacing: float = Field(default=0.29, alias="LATTICE_ENVELOPE_SPACING")
    exponential_threshold: float = Field(default=1e-8, alias="LATTICE_EXPONENTIAL_THRESHOLD")
    order_one_threshold: float = Field(default=0.1, alias="LATTICE_ORDER_ONE_THRESHOLD")
    uniform_slope_threshold: float = Field(default=0.05, alias="LATTICE_UNIFORM_SLOPE_THRESHOLD")
    uniform_box_margin: int = Field(default=16, alias="LATTICE_UNIFORM_BOX_MARGIN")
    weighted_samples: int = Field(default=6, alias="LATTICE_WEIGHTED_SAMPLES")
    weighted_pairs: int = Field(default=8, alias="LATTICE_WEIGHTED_PAIRS")

    # CLI guards and defaults
    max_scan_dimension: int = Field(default=4, alias="LATTICE_MAX_SCAN_DIMENSION")
    uniform_times_raw: str | List[float] | None = Field(default=None, alias="LATTICE_UNIFORM_TIMES")
    finite_volumes_raw: str | List[int] | None = Field(default=None, alias="LATTICE_FINITE_VOLUMES")

    @property
    def uniform_times(self) -> List[float]:
        return _csv_to_float_list(self.uniform_times_raw, default=[10.0, 20.0, 40.0, 80.0])

    @property
    def finite_volumes(self) -> List[int]:
        return _csv_to_int_list(self.finite_volumes_raw, default=[16, 32, 64])

    def quadrature_spec(self):
        from .kernels.base import QuadratureSpec

        return QuadratureSpec(
            base_points=self.base_points,
            tolerance=self.tolerance,
            max_doublings=self.max_doublings,
            auto_scale=self.auto_scale,
            auto_scale_factor=self.auto_scale_factor,
        )

    def truncation_policy(self):
        from .dynamics.lattice import TruncationPolicy

        return TruncationPolicy(
            tolerance=self.truncation_tolerance,
            margin=self.truncation_margin,
            growth=self.truncation_growth,
            max_radius=self.max_truncation_radius,
        )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
