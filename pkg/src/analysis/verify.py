"""Numerical checks of the dispersive decay rates and of the light-cone diagram."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..dynamics.evolution import (
    commutator_norm_from_phase,
    phase_from_table,
    reduce_degenerate,
    truncated_kernels,
)
from ..dynamics.lattice import TruncationPolicy, random_function, sup_distance
from ..errors import DegenerateModel, NonPositiveValue
from ..kernels.base import KernelIndex, QuadratureSpec
from ..kernels.quadrature import kernel_table, site_kernels
from ..model import ModelParams, group_velocity_bound, light_cone_radius
from .decay import (
    DecayFit,
    WeightSpec,
    burst_times,
    crosses_zero,
    envelope,
    fit_decay,
    geometric_times,
    loglog_slope,
    weighted_l1_norm,
)

LOGGER = logging.getLogger(__name__)

EXPONENTIAL = "exponential"
POWER_LAW = "power-law"
ORDER_ONE = "order-one"


@dataclass(frozen=True, slots=True)
class Check:
    name: str
    passed: bool
    detail: str


def _require_times(t_samples: Sequence[float]) -> List[float]:
    times = [float(t) for t in t_samples]
    if not times:
        raise ValueError("no time samples given")
    if min(times) < 1.0:
        raise ValueError(f"decay checks need t >= 1, got {min(times):g}")
    return times


def _decaying_model(params: ModelParams) -> Tuple[ModelParams, List[int]]:
    """Model restricted to its coupled axes; the decay rates follow its dimension."""
    if params.is_gapless:
        raise DegenerateModel("decay checks need omega > 0")
    reduced, axes = reduce_degenerate(params)
    if reduced is None:
        raise DegenerateModel("every coupling is zero; the kernels do not decay")
    if reduced is not params:
        LOGGER.info(f"Reducing {params.describe()} to axes {axes}")
    return reduced, axes


# ---------------------------------------------------------------------------
# Uniform decay
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class UniformDecayReport:
    params: ModelParams
    effective_d: int
    times: List[float]
    sup_values: List[float]
    rescale_exponent: float
    rescaled: List[float]
    max_rescaled: float
    slope: float
    raw_exponent: float
    threshold: float
    passed: bool

    def checks(self) -> List[Check]:
        return [
            Check(
                name="rescaled-slope",
                passed=self.passed,
                detail=(
                    f"slope of S(t)*t^{self.rescale_exponent:.4g} is {self.slope:.4g} "
                    f"(threshold {self.threshold:g}); max {self.max_rescaled:.6g}"
                ),
            )
        ]


def uniform_box_radius(params: ModelParams, t: float, margin: int) -> int:
    return light_cone_radius(params, t) + margin


def sup_kernel_magnitude(params: ModelParams, t: float, spec: QuadratureSpec, margin: int = 16) -> float:
    """max over the light-cone box of sum_m |H_t^(m)(x)|."""
    table = kernel_table(params, t, uniform_box_radius(params, t, margin), spec)
    return float(table.combined_magnitude().max())


def verify_uniform_decay(
    params: ModelParams,
    t_samples: Sequence[float],
    spec: QuadratureSpec,
    *,
    box_margin: int = 16,
    slope_threshold: float = 0.05,
) -> UniformDecayReport:
    times = _require_times(t_samples)
    reduced, _ = _decaying_model(params)

    rescale = 1.0 / 3.0 if reduced.d == 1 else 0.5
    sup_values = []
    for t in times:
        value = sup_kernel_magnitude(reduced, t, spec, box_margin)
        LOGGER.info(f"uniform decay t={t:g} S(t)={value:.6e}")
        sup_values.append(value)
    rescaled = [s * t**rescale for s, t in zip(sup_values, times)]
    if len(times) >= 2:
        slope = loglog_slope(times, rescaled)
        raw = loglog_slope(times, sup_values)
    else:
        slope = raw = 0.0
    passed = bool(all(math.isfinite(v) for v in rescaled) and slope <= slope_threshold)
    return UniformDecayReport(
        params=params,
        effective_d=reduced.d,
        times=times,
        sup_values=sup_values,
        rescale_exponent=rescale,
        rescaled=rescaled,
        max_rescaled=max(rescaled),
        slope=slope,
        raw_exponent=raw,
        threshold=slope_threshold,
        passed=passed,
    )


# ---------------------------------------------------------------------------
# Fixed-x decay
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class FixedXReport:
    sites: List[Tuple[int, ...]]
    effective_d: int
    times: List[float]
    kernel_envelope: List[float]
    commutator_envelope: List[float]
    kernel_fit: DecayFit
    commutator_fit: DecayFit | None
    oscillates: bool


def _site(params: ModelParams, x) -> Tuple[int, ...]:
    site = tuple(int(v) for v in np.atleast_1d(x))
    if len(site) != params.d:
        raise ValueError(f"site {site} does not have dimension {params.d}")
    return site


def _envelope_report(
    params: ModelParams,
    sites: Sequence[Tuple[int, ...]],
    times: List[float],
    spec: QuadratureSpec,
    burst: int,
    spacing: float,
    window: int,
) -> FixedXReport:
    kernel_bursts: List[List[float]] = []
    commutator_bursts: List[List[float]] = []
    signed: List[float] = []
    for site, t in zip(sites, times):
        kernels: List[float] = []
        commutators: List[float] = []
        for s in burst_times(t, burst, spacing):
            values = site_kernels(params, s, site, spec, kernels=(KernelIndex.UNIT, KernelIndex.INVERSE))
            kernels.append(values.values[int(KernelIndex.UNIT)])
            commutators.append(commutator_norm_from_phase(values.values[int(KernelIndex.INVERSE)]))
        signed.append(kernels[0])
        kernel_bursts.append(kernels)
        commutator_bursts.append(commutators)
        LOGGER.debug(f"fixed-x t={t:g} site={site} |H0|max={max(abs(v) for v in kernels):.3e}")

    oscillates = crosses_zero(signed)
    if oscillates:
        LOGGER.warning("H^(0) changes sign across the samples; fitting the envelope maxima")
    kernel_env = envelope(kernel_bursts, window)
    commutator_env = envelope(commutator_bursts, window)
    kernel_fit = fit_decay(zip(times, kernel_env))
    try:
        commutator_fit = fit_decay(zip(times, commutator_env))
    except NonPositiveValue:
        LOGGER.warning("commutator envelope vanishes at some sample; no commutator fit")
        commutator_fit = None
    return FixedXReport(
        sites=list(sites),
        effective_d=params.d,
        times=times,
        kernel_envelope=[float(v) for v in kernel_env],
        commutator_envelope=[float(v) for v in commutator_env],
        kernel_fit=kernel_fit,
        commutator_fit=commutator_fit,
        oscillates=oscillates,
    )


def fixed_x_report(
    params: ModelParams,
    x,
    t_samples: Sequence[float],
    spec: QuadratureSpec,
    *,
    burst: int = 12,
    spacing: float = 0.29,
    window: int = 5,
) -> FixedXReport:
    times = _require_times(t_samples)
    if max(times) < 10.0 * min(times) * (1.0 - 1e-12):
        raise ValueError("fixed-x fits need samples spanning at least one decade")
    site = _site(params, x)
    reduced, axes = _decaying_model(params)
    if reduced is params:
        return _envelope_report(params, [site] * len(times), times, spec, burst, spacing, window)
    # H_t vanishes off the coupled axes.
    stray = [j + 1 for j, v in enumerate(site) if v != 0 and j + 1 not in axes]
    if stray:
        raise ValueError(f"site {site} leaves the coupled axes {axes} along {stray}; the kernels vanish there")
    projected = tuple(site[j - 1] for j in axes)
    report = _envelope_report(reduced, [projected] * len(times), times, spec, burst, spacing, window)
    return replace(report, sites=[site] * len(times))


def verify_fixed_x_decay(
    params: ModelParams,
    x,
    t_samples: Sequence[float],
    spec: QuadratureSpec,
    *,
    burst: int = 12,
    spacing: float = 0.29,
    window: int = 5,
) -> DecayFit:
    return fixed_x_report(
        params, x, t_samples, spec, burst=burst, spacing=spacing, window=window
    ).kernel_fit


def default_fixed_x_times(d: int) -> List[float]:
    if d == 1:
        return geometric_times(20.0, 200.0, 25)
    return geometric_times(10.0, 100.0, 25)


def fixed_x_tolerance(d: int) -> float:
    return 0.1 if d == 1 else 0.15


# ---------------------------------------------------------------------------
# Weighted decay
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class WeightedDecayReport:
    """t^(d/2)-rescaled kernel and commutator sizes, divided by the weights w(x) = (1 + ||x||_1)^(d+3)."""

    params: ModelParams
    effective_d: int
    weight_exponent: int
    times: List[float]
    kernel_ratios: List[float]
    commutator_ratios: List[float]
    site_ratios: List[float]
    kernel_slope: float
    commutator_slope: float
    site_slope: float
    threshold: float
    n_pairs: int

    @property
    def passed(self) -> bool:
        return max(self.kernel_slope, self.commutator_slope, self.site_slope) <= self.threshold

    def checks(self) -> List[Check]:
        half = self.effective_d / 2.0
        return [
            Check(
                "weighted-kernel-slope",
                self.kernel_slope <= self.threshold,
                f"slope of t^{half:g} sup_x sum_m |H_t^(m)(x)| / w(x) is {self.kernel_slope:.4g} "
                f"(threshold {self.threshold:g}); max {max(self.kernel_ratios):.6g}",
            ),
            Check(
                "weighted-commutator-slope",
                self.commutator_slope <= self.threshold,
                f"slope of t^{half:g} max over {self.n_pairs} pairs of ||[W_t(f), W(g)]|| / (|f|_w |g|_w) "
                f"is {self.commutator_slope:.4g} (threshold {self.threshold:g}); "
                f"max {max(self.commutator_ratios):.6g}",
            ),
            Check(
                "weighted-site-commutator-slope",
                self.site_slope <= self.threshold,
                f"slope of t^{half:g} sup_x ||[W_t(delta_0), W(delta_x)]|| / (1 + ||x||_1^{self.weight_exponent} / t^(1/2)) "
                f"is {self.site_slope:.4g} (threshold {self.threshold:g}); max {max(self.site_ratios):.6g}",
            ),
        ]


def default_weighted_times(t_samples: Sequence[float], count: int = 6) -> List[float]:
    """Geometric grid over the span of `t_samples`."""
    times = _require_times(t_samples)
    return geometric_times(min(times), max(times), count)


def verify_weighted_decay(
    params: ModelParams,
    t_samples: Sequence[float],
    spec: QuadratureSpec,
    *,
    policy: TruncationPolicy | None = None,
    n_pairs: int = 8,
    support: int = 3,
    amplitude: float = 0.1,
    seed: int = 20240917,
    burst: int = 12,
    spacing: float = 0.29,
    slope_threshold: float = 0.05,
) -> WeightedDecayReport:
    times = _require_times(t_samples)
    if len(times) < 2:
        raise ValueError("weighted decay checks need at least two times")
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    reduced, _ = _decaying_model(params)
    d = reduced.d
    weight = WeightSpec(d)
    distance = WeightSpec(d, exponent=1)
    policy = policy or TruncationPolicy()

    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < n_pairs:
        # Small amplitudes keep 2|sin(sigma/2)| close to |sigma|.
        f = random_function(d, support, rng, spread=2).scaled(amplitude)
        g = random_function(d, support, rng, spread=2).scaled(amplitude)
        if f.entries and g.entries:
            pairs.append((f, g))
    norms = [weighted_l1_norm(f, weight) * weighted_l1_norm(g, weight) for f, g in pairs]
    reach = max(sup_distance(f, g) for f, g in pairs)

    kernel_ratios: List[float] = []
    commutator_ratios: List[float] = []
    site_ratios: List[float] = []
    for t in times:
        kernel_best = commutator_best = site_best = 0.0
        for s in burst_times(t, burst, spacing):
            table = truncated_kernels(reduced, s, spec, policy, min_radius=reach)
            scale = s ** (d / 2.0)
            ratio = table.combined_magnitude() / weight.on_box(table.radius)
            kernel_best = max(kernel_best, scale * float(ratio.max()))
            l1 = distance.on_box(table.radius) - 1.0
            spread = 1.0 + l1 ** weight.exponent / math.sqrt(s)
            site_norms = 2.0 * np.abs(np.sin(0.5 * table.values[-1]))
            site_best = max(site_best, scale * float((site_norms / spread).max()))
            for (f, g), norm in zip(pairs, norms):
                value = commutator_norm_from_phase(phase_from_table(table, f, g))
                commutator_best = max(commutator_best, scale * value / norm)
        LOGGER.info(
            f"weighted decay t={t:g} kernel={kernel_best:.6e} commutator={commutator_best:.6e} "
            f"site={site_best:.6e}"
        )
        kernel_ratios.append(kernel_best)
        commutator_ratios.append(commutator_best)
        site_ratios.append(site_best)

    return WeightedDecayReport(
        params=params,
        effective_d=d,
        weight_exponent=int(weight.exponent),
        times=times,
        kernel_ratios=kernel_ratios,
        commutator_ratios=commutator_ratios,
        site_ratios=site_ratios,
        kernel_slope=loglog_slope(times, kernel_ratios),
        commutator_slope=loglog_slope(times, commutator_ratios),
        site_slope=loglog_slope(times, site_ratios),
        threshold=slope_threshold,
        n_pairs=len(pairs),
    )


# ---------------------------------------------------------------------------
# Light-cone diagram
# ---------------------------------------------------------------------------


def classify(value: float, exponential_threshold: float = 1e-8, order_one_threshold: float = 0.1) -> str:
    if value < exponential_threshold:
        return EXPONENTIAL
    if value > order_one_threshold:
        return ORDER_ONE
    return POWER_LAW


@dataclass(frozen=True, slots=True)
class ConeScan:
    """Commutator norms ||[tau_t(W(delta_0)), W(delta_x)]|| with x = r e_1, r = 0..x_max."""

    params: ModelParams
    times: List[float]
    distances: List[int]
    values: np.ndarray = field(repr=False)
    classes: List[List[str]] = field(repr=False)
    velocity_bound: float
    cone_slope: float | None
    f_probe: str = "delta_0"
    g_probe: str = "delta_x, x = (r, 0, ..., 0)"

    def value(self, t: float, r: int) -> float:
        return float(self.values[self.times.index(float(t)), r])

    def fronts(self, threshold: float) -> Dict[float, int]:
        return _fronts(self.times, self.values, threshold)


def _fronts(times: Sequence[float], values: np.ndarray, threshold: float) -> Dict[float, int]:
    """Largest distance at which the norm still reaches `threshold`, per time (-1 if none)."""
    fronts: Dict[float, int] = {}
    for i, t in enumerate(times):
        above = np.flatnonzero(values[i] >= threshold)
        fronts[t] = int(above.max()) if above.size else -1
    return fronts


def _axis_site(d: int, r: int) -> Tuple[int, ...]:
    return (r,) + (0,) * (d - 1)


def cone_scan(
    params: ModelParams,
    t_samples: Sequence[float],
    x_max: int,
    spec: QuadratureSpec,
    *,
    exponential_threshold: float = 1e-8,
    order_one_threshold: float = 0.1,
) -> ConeScan:
    params.require_strict()
    if x_max < 0:
        raise ValueError("x_max must be non-negative")
    times = [float(t) for t in t_samples]
    distances = list(range(x_max + 1))
    values = np.zeros((len(times), len(distances)))
    for i, t in enumerate(times):
        table = kernel_table(params, t, x_max, spec, kernels=(KernelIndex.INVERSE,))
        for r in distances:
            values[i, r] = commutator_norm_from_phase(table.value(-1, _axis_site(params.d, r)))
        LOGGER.info(f"cone scan t={t:g} resolution={table.resolution}")
    classes = [
        [classify(v, exponential_threshold, order_one_threshold) for v in row] for row in values
    ]

    # Fronts that reach the edge of the box are censored and left out of the slope.
    moving = [
        (t, r)
        for t, r in _fronts(times, values, exponential_threshold).items()
        if t > 0 and 0 <= r < x_max
    ]
    slope = None
    if len({t for t, _ in moving}) >= 2:
        slope = float(np.polyfit([t for t, _ in moving], [r for _, r in moving], 1)[0])
        LOGGER.info(f"empirical cone slope {slope:.4g} sites per unit time")

    return ConeScan(
        params=params,
        times=times,
        distances=distances,
        values=values,
        classes=classes,
        velocity_bound=group_velocity_bound(params),
        cone_slope=slope,
    )


@dataclass(frozen=True, slots=True)
class LightConeReport:
    scan: ConeScan
    curve: FixedXReport | None
    checks: List[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def curve_sites(d: int, times: Sequence[float]) -> List[Tuple[int, ...]]:
    """Sites on the curve ||x||_1 = t^(1/(2(d+3))), rounded, along the first axis."""
    power = 1.0 / (2.0 * (d + 3))
    return [_axis_site(d, max(1, int(round(t**power)))) for t in times]


def verify_light_cone(
    params: ModelParams,
    t_samples: Sequence[float],
    x_max: int,
    spec: QuadratureSpec,
    *,
    curve_times: Sequence[float] | None = None,
    exponential_threshold: float = 1e-8,
    order_one_threshold: float = 0.1,
    cone_margin: int = 16,
    curve_tolerance: float = 0.15,
    burst: int = 12,
    spacing: float = 0.29,
    window: int = 5,
) -> LightConeReport:
    scan = cone_scan(
        params,
        t_samples,
        x_max,
        spec,
        exponential_threshold=exponential_threshold,
        order_one_threshold=order_one_threshold,
    )
    checks: List[Check] = []

    low, high = float(scan.values.min()), float(scan.values.max())
    checks.append(Check("values-in-range", 0.0 <= low and high <= 2.0, f"min {low:.3g}, max {high:.6g}"))

    if 0.0 in scan.times:
        column = scan.values[scan.times.index(0.0), 1:]
        largest = float(column.max()) if column.size else 0.0
        checks.append(Check("t0-column-vanishes", largest <= 1e-14, f"max off-origin value {largest:.3g}"))

    outside: List[float] = []
    for i, t in enumerate(scan.times):
        start = 2 * light_cone_radius(params, t) + cone_margin
        outside.extend(float(v) for v in scan.values[i, start:])
    if outside:
        worst = max(outside)
        checks.append(
            Check(
                "outside-cone-exponential",
                worst < exponential_threshold,
                f"{len(outside)} cells beyond the cone, largest {worst:.3g}",
            )
        )
    else:
        checks.append(Check("outside-cone-exponential", True, "no cells beyond the cone in the scan box"))

    curve = None
    times = list(curve_times) if curve_times is not None else default_fixed_x_times(params.d)
    if times:
        times = _require_times(times)
        curve = _envelope_report(
            params, curve_sites(params.d, times), times, spec, burst, spacing, window
        )
        fit = curve.commutator_fit
        limit = -params.d / 2.0 + curve_tolerance
        if fit is None:
            checks.append(Check("curve-decay", False, "commutator envelope vanished along the curve"))
        else:
            checks.append(
                Check(
                    "curve-decay",
                    fit.exponent <= limit,
                    f"exponent {fit.exponent:.4g} along ||x||_1 = t^(1/{2 * (params.d + 3)}) (limit {limit:g})",
                )
            )
    return LightConeReport(scan=scan, curve=curve, checks=checks)
