from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, Iterator, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..errors import InvalidKernel
from ..model import ModelParams

LOGGER = logging.getLogger(__name__)

Site = Tuple[int, ...]


class KernelIndex(IntEnum):
    """Superscript m of H_t^(m): the power of gamma weighting the integrand."""

    INVERSE = -1
    UNIT = 0
    DIRECT = 1

    @classmethod
    def coerce(cls, m: int | "KernelIndex") -> "KernelIndex":
        try:
            return cls(int(m))
        except ValueError as exc:
            raise InvalidKernel(f"kernel index must be one of -1, 0, 1, got {m!r}") from exc

    @property
    def uses_real_part(self) -> bool:
        return self is KernelIndex.UNIT


ALL_KERNELS: Tuple[KernelIndex, ...] = (KernelIndex.INVERSE, KernelIndex.UNIT, KernelIndex.DIRECT)


class QuadratureSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    base_points: int = 32
    tolerance: float = Field(default=1e-12, gt=0.0)
    max_doublings: int = Field(default=6, ge=1, le=12)
    auto_scale: bool = True
    auto_scale_factor: int = Field(default=2, ge=1)
    max_grid_points: int = Field(default=1 << 26, ge=1 << 8)

    @field_validator("base_points")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value < 16 or value & (value - 1):
            raise ValueError("base_points must be a power of two and at least 16")
        return value


@dataclass(frozen=True, slots=True)
class SiteKernels:
    """Kernel values at one lattice site, with the resolution that produced them."""

    t: float
    site: Site
    values: Dict[int, float]
    resolution: int
    est_error: float


@dataclass(frozen=True, slots=True)
class KernelTable:
    params: ModelParams
    t: float
    radius: int
    values: Dict[int, np.ndarray] = field(repr=False)
    resolution: int
    est_error: float

    def __post_init__(self) -> None:
        for array in self.values.values():
            array.setflags(write=False)

    def _index(self, x) -> Tuple[int, ...]:
        site = tuple(int(v) for v in np.atleast_1d(x))
        if len(site) != self.params.d:
            raise InvalidKernel(f"site {site} does not have dimension {self.params.d}")
        if max(abs(v) for v in site) > self.radius:
            raise KeyError(f"site {site} lies outside the radius-{self.radius} box")
        return tuple(v + self.radius for v in site)

    def value(self, m: int, x) -> float:
        return float(self.values[int(m)][self._index(x)])

    def contains(self, x) -> bool:
        return max(abs(int(v)) for v in np.atleast_1d(x)) <= self.radius

    def sites(self) -> Iterator[Site]:
        span = range(-self.radius, self.radius + 1)
        yield from itertools.product(span, repeat=self.params.d)

    def shell_magnitude(self) -> float:
        """Largest |H^(m)| over the outermost shell ||x||_inf == radius."""
        if self.radius == 0:
            return max(float(abs(a).max()) for a in self.values.values())
        largest = 0.0
        for array in self.values.values():
            for axis in range(array.ndim):
                for end in (0, -1):
                    face = np.take(array, end, axis=axis)
                    largest = max(largest, float(np.abs(face).max()))
        return largest

    def combined_magnitude(self) -> np.ndarray:
        """sum_m |H^(m)(x)| over the box."""
        return sum(np.abs(array) for array in self.values.values())
