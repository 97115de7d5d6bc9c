from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.ndimage import maximum_filter1d

from ..dynamics.lattice import LatticeFunction, check_dimensions
from ..errors import NonPositiveValue, TooFewPoints

LOGGER = logging.getLogger(__name__)

MIN_FIT_POINTS = 5


@dataclass(frozen=True, slots=True)
class WeightSpec:
    """w(x) = (1 + ||x||_1)^exponent, exponent defaulting to d + 3."""

    d: int
    exponent: int | None = None

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("d must be at least 1")
        if self.exponent is None:
            object.__setattr__(self, "exponent", self.d + 3)
        if self.exponent < 0:
            raise ValueError("weight exponent must be non-negative")

    def weight(self, site: Sequence[int]) -> float:
        return float((1 + sum(abs(int(v)) for v in site)) ** self.exponent)

    def on_box(self, radius: int) -> np.ndarray:
        """w(x) on the box ||x||_inf <= radius, indexed like a KernelTable."""
        span = np.abs(np.arange(-radius, radius + 1))
        l1 = sum(np.meshgrid(*([span] * self.d), indexing="ij"))
        return (1.0 + l1) ** self.exponent


def weighted_l1_norm(f: LatticeFunction, spec: WeightSpec) -> float:
    check_dimensions(f, d=spec.d)
    return float(sum(abs(value) * spec.weight(site) for site, value in f))


@dataclass(frozen=True, slots=True)
class DecayFit:
    exponent: float
    amplitude: float
    residual: float
    t_range: Tuple[float, float]
    n_points: int


def _validated_series(series: Iterable[Tuple[float, float]]) -> Tuple[np.ndarray, np.ndarray]:
    pairs = [(float(t), float(v)) for t, v in series]
    if len(pairs) < MIN_FIT_POINTS:
        raise TooFewPoints(f"need at least {MIN_FIT_POINTS} points, got {len(pairs)}")
    times = np.array([t for t, _ in pairs])
    values = np.array([v for _, v in pairs])
    bad = np.flatnonzero(~(values > 0))
    if bad.size:
        i = int(bad[0])
        raise NonPositiveValue(f"value {values[i]!r} at t={times[i]:g} is not positive")
    if times[0] < 1.0:
        raise ValueError(f"decay fits start at t >= 1, got t_min={times[0]:g}")
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be strictly increasing")
    return times, values


def fit_decay(series: Iterable[Tuple[float, float]]) -> DecayFit:
    """Least-squares power law value ~ amplitude * t^exponent on log-log axes."""
    times, values = _validated_series(series)
    log_t = np.log(times)
    log_v = np.log(values)
    slope, intercept = np.polyfit(log_t, log_v, 1)
    residual = float(np.abs(log_v - (slope * log_t + intercept)).max())
    return DecayFit(
        exponent=float(slope),
        amplitude=float(math.exp(intercept)),
        residual=residual,
        t_range=(float(times[0]), float(times[-1])),
        n_points=int(times.size),
    )


def loglog_slope(times: Sequence[float], values: Sequence[float]) -> float:
    """Slope of log(values) against log(times); no minimum sample count."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 2:
        raise TooFewPoints("a slope needs at least two points")
    if np.any(values <= 0):
        raise NonPositiveValue("log-log slope needs positive values")
    slope, _ = np.polyfit(np.log(times), np.log(values), 1)
    return float(slope)


def geometric_times(t_min: float, t_max: float, count: int) -> List[float]:
    if t_min <= 0 or t_max <= t_min:
        raise ValueError("need 0 < t_min < t_max")
    return [float(t) for t in np.geomspace(t_min, t_max, count)]


def burst_times(t: float, burst: int, spacing: float) -> List[float]:
    """t followed by burst - 1 later times, `spacing` apart."""
    if burst < 1:
        raise ValueError("burst must be at least 1")
    return [float(t + j * spacing) for j in range(burst)]


def sliding_window_max(values: Sequence[float], window: int) -> np.ndarray:
    """Max of |value| over the centred window of `window` consecutive samples."""
    magnitudes = np.abs(np.asarray(values, dtype=float))
    if window <= 1 or magnitudes.size == 0:
        return magnitudes
    return maximum_filter1d(magnitudes, size=min(window, magnitudes.size), mode="nearest")


def envelope(bursts: Sequence[Sequence[float]], window: int) -> np.ndarray:
    """Envelope of a geometrically sampled signal given bursts of nearby values per sample."""
    peaks = [float(np.max(np.abs(np.asarray(b, dtype=float)))) for b in bursts]
    return sliding_window_max(peaks, window)


def crosses_zero(values: Sequence[float]) -> bool:
    signs = np.sign(np.asarray(values, dtype=float))
    signs = signs[signs != 0]
    return bool(signs.size and np.any(signs != signs[0]))
