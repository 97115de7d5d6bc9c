"""Harmonic lattice model: parameters and the analytic dispersion relation.

gamma(k) = sqrt(omega^2 + 4 * sum_j lambda_j * sin^2(k_j / 2)) on the torus (-pi, pi]^d.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.optimize import minimize_scalar

from .errors import DegenerateModel, DimensionMismatch

LOGGER = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class ModelParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    d: int = Field(ge=1)
    omega: float = Field(ge=0.0)
    lambdas: Tuple[float, ...]
    # omega == 0 is only admitted for oracle computations (gapless chain).
    allow_gapless: bool = False

    @field_validator("lambdas", mode="before")
    @classmethod
    def _coerce_lambdas(cls, value):
        if isinstance(value, (int, float)):
            return (float(value),)
        return tuple(float(v) for v in value)

    @model_validator(mode="after")
    def _check_shape(self) -> "ModelParams":
        if len(self.lambdas) != self.d:
            raise ValueError(f"expected {self.d} couplings, got {len(self.lambdas)}")
        if any(lam < 0 or not math.isfinite(lam) for lam in self.lambdas):
            raise ValueError("couplings must be finite and non-negative")
        if not math.isfinite(self.omega):
            raise ValueError("omega must be finite")
        if self.omega == 0.0 and not self.allow_gapless:
            raise ValueError("omega must be positive (use allow_gapless for oracle runs)")
        return self

    @classmethod
    def uniform(cls, d: int, omega: float = 1.0, coupling: float = 1.0) -> "ModelParams":
        return cls(d=d, omega=omega, lambdas=[coupling] * d)

    @property
    def lambda_sum(self) -> float:
        return float(sum(self.lambdas))

    @property
    def is_strict(self) -> bool:
        return all(lam > 0 for lam in self.lambdas)

    @property
    def is_gapless(self) -> bool:
        return self.omega == 0.0

    def require_strict(self) -> None:
        zero_axes = [j + 1 for j, lam in enumerate(self.lambdas) if lam == 0]
        if zero_axes:
            raise DegenerateModel(
                f"couplings vanish on axes {zero_axes}; critical set is not isolated"
            )

    def describe(self) -> str:
        lambdas = ";".join(f"{lam:g}" for lam in self.lambdas)
        return f"d={self.d} omega={self.omega:g} lambdas={lambdas}"


def canonicalize(k) -> np.ndarray:
    """Reduce angles to the fundamental domain (-pi, pi]."""
    arr = np.asarray(k, dtype=float)
    return math.pi - np.mod(math.pi - arr, TWO_PI)


@dataclass(frozen=True, slots=True)
class TorusPoint:
    k: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "k", tuple(float(v) for v in canonicalize(self.k)))

    @property
    def d(self) -> int:
        return len(self.k)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.k, dtype=float)


@dataclass(frozen=True, slots=True)
class CriticalPoint:
    coords: Tuple[float, ...]
    gamma_value: float
    hessian_diag: Tuple[float, ...]
    signature: Tuple[int, ...]

    @property
    def morse_index(self) -> int:
        return sum(1 for s in self.signature if s < 0)


def _as_k(params: ModelParams, k) -> np.ndarray:
    arr = k.as_array() if isinstance(k, TorusPoint) else canonicalize(k)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != params.d:
        raise DimensionMismatch(f"torus point has {arr.shape[-1]} components, model has d={params.d}")
    return arr


def torus_grid(n: int) -> np.ndarray:
    """The n periodic trapezoid nodes 2*pi*j/n, in FFT order and canonical range."""
    return canonicalize(TWO_PI * np.fft.fftfreq(n))


def axis_terms(params: ModelParams, n: int) -> List[np.ndarray]:
    """Per-axis contributions 4*lambda_j*sin^2(k_j/2) on an n-point grid, broadcast-ready."""
    k = torus_grid(n)
    terms = []
    for j, lam in enumerate(params.lambdas):
        shape = [1] * params.d
        shape[j] = n
        terms.append((4.0 * lam * np.sin(k / 2.0) ** 2).reshape(shape))
    return terms


def dispersion_on_grid(params: ModelParams, n: int) -> np.ndarray:
    gamma_sq = np.full((1,) * params.d, params.omega**2)
    for term in axis_terms(params, n):
        gamma_sq = gamma_sq + term
    return np.sqrt(gamma_sq)


def _sin(k: np.ndarray) -> np.ndarray:
    # sin(pi) is not exactly zero in floating point; critical coordinates must be.
    return np.where(k == math.pi, 0.0, np.sin(k))


def _gamma(params: ModelParams, k: np.ndarray) -> np.ndarray:
    lambdas = np.asarray(params.lambdas)
    return np.sqrt(params.omega**2 + 4.0 * np.sum(lambdas * np.sin(k / 2.0) ** 2, axis=-1))


def dispersion(params: ModelParams, k) -> float | np.ndarray:
    value = _gamma(params, _as_k(params, k))
    return float(value) if np.ndim(value) == 0 else value


def dispersion_gradient(params: ModelParams, k) -> np.ndarray:
    arr = _as_k(params, k)
    gamma = _gamma(params, arr)
    lambdas = np.asarray(params.lambdas)
    return lambdas * _sin(arr) / np.expand_dims(gamma, -1)


def dispersion_hessian(params: ModelParams, k) -> np.ndarray:
    arr = _as_k(params, k)
    if arr.ndim != 1:
        raise DimensionMismatch("dispersion_hessian expects a single torus point")
    lambdas = np.asarray(params.lambdas)
    gamma = float(_gamma(params, arr))
    sin_k = _sin(arr)
    cos_k = np.cos(arr)
    hessian = -np.outer(lambdas * sin_k, lambdas * sin_k)
    for j in range(params.d):
        # omega_j collects every term of gamma^2 except the j-th coupling.
        others = 4.0 * np.sum(np.delete(lambdas * np.sin(arr / 2.0) ** 2, j))
        omega_j = params.omega**2 + others
        hessian[j, j] = lambdas[j] * omega_j * cos_k[j] - lambdas[j] ** 2 * (1.0 - cos_k[j]) ** 2
    return hessian / gamma**3


def critical_points(params: ModelParams) -> List[CriticalPoint]:
    params.require_strict()
    points: List[CriticalPoint] = []
    for coords in itertools.product((0.0, math.pi), repeat=params.d):
        arr = np.asarray(coords)
        gamma = float(_gamma(params, arr))
        diag = tuple(
            float(lam * math.cos(c) / gamma) for lam, c in zip(params.lambdas, coords)
        )
        if any(h == 0.0 for h in diag):  # pragma: no cover - excluded by require_strict
            raise DegenerateModel(f"degenerate Hessian at {coords}")
        signature = tuple(1 if h > 0 else -1 for h in diag)
        points.append(
            CriticalPoint(coords=coords, gamma_value=gamma, hessian_diag=diag, signature=signature)
        )
    LOGGER.debug(f"Critical points for {params.describe()}: {len(points)}")
    return points


def hessian_determinant(point: CriticalPoint) -> float:
    return float(abs(np.prod(point.hessian_diag)))


def bogoliubov_multipliers(params: ModelParams, k) -> Tuple[float, float] | Tuple[np.ndarray, np.ndarray]:
    plus, minus = multipliers_from_gamma(np.asarray(dispersion(params, k)))
    if plus.ndim == 0:
        return float(plus), float(minus)
    return plus, minus


def multipliers_from_gamma(gamma: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    root = np.sqrt(gamma)
    return 1.0 / root + root, 1.0 / root - root


def group_velocity_bound(params: ModelParams) -> float:
    """Upper bound on the l1 speed 2*|grad gamma|_1 of wave packets."""
    speed = 0.0
    for lam in params.lambdas:
        if lam == 0:
            continue
        # |d gamma / d k_j| is largest with every other coordinate at 0.
        def negative_slope(k: float, lam: float = lam) -> float:
            return -lam * math.sin(k) / math.sqrt(params.omega**2 + 4.0 * lam * math.sin(k / 2.0) ** 2)

        result = minimize_scalar(negative_slope, bounds=(1e-9, math.pi), method="bounded")
        speed += -float(result.fun)
    return 2.0 * speed


def light_cone_radius(params: ModelParams, t: float) -> int:
    """Radius ceil(2|t| sum(lambda)/omega) used as the starting truncation heuristic."""
    if params.is_gapless:
        return int(math.ceil(2.0 * abs(t) * (1.0 + params.lambda_sum)))
    return int(math.ceil(2.0 * abs(t) * params.lambda_sum / params.omega))


def sample_torus(d: int, size: int, rng: np.random.Generator) -> np.ndarray:
    return canonicalize(rng.uniform(-math.pi, math.pi, size=(size, d)))

