"""Periodic trapezoid quadrature of the kernels H_t^(m).

H_t^(0)(x)    = (2 pi)^-d Re int gamma^0  e^{i(k.x - 2 gamma t)} dk
H_t^(+-1)(x)  = (2 pi)^-d Im int gamma^+-1 e^{i(k.x - 2 gamma t)} dk

gamma is even in every coordinate separately, so the integrands reduce to the
real cosine/sine transforms cos(2 gamma t) and -gamma^m sin(2 gamma t). On an
n-point grid per axis the trapezoid sum equals the DFT and returns the kernel
periodised over the images x + n*Z^d.
"""
from __future__ import annotations

import logging
import math
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np

from ..errors import BoxTooLarge, InvalidKernel, NoConvergence
from ..model import ModelParams, dispersion_on_grid, torus_grid
from .base import ALL_KERNELS, KernelIndex, KernelTable, QuadratureSpec, SiteKernels

LOGGER = logging.getLogger(__name__)

IMAGINARY_RESIDUE_LIMIT = 1e-10


def _next_power_of_two(value: int) -> int:
    return 1 << max(0, int(value - 1).bit_length())


def initial_resolution(params: ModelParams, t: float, radius: int, spec: QuadratureSpec) -> int:
    floor = max(spec.base_points, 2 * radius + 2)
    if spec.auto_scale:
        if params.is_gapless:
            oscillation = abs(t) * (1.0 + params.lambda_sum)
        else:
            oscillation = abs(t) * (params.omega + params.lambda_sum) / params.omega
        floor = max(floor, spec.auto_scale_factor * (1 + math.ceil(oscillation)))
    return _next_power_of_two(floor)


def _check_kernels(params: ModelParams, kernels: Iterable[int]) -> Tuple[KernelIndex, ...]:
    checked = tuple(KernelIndex.coerce(m) for m in kernels)
    if params.is_gapless and KernelIndex.INVERSE in checked:
        raise InvalidKernel("1/gamma is not integrable for a gapless chain (omega = 0, m = -1)")
    return checked


def _integrand(gamma: np.ndarray, m: KernelIndex, t: float) -> np.ndarray:
    if m is KernelIndex.UNIT:
        return np.cos(2.0 * t * gamma)
    weight = gamma if m is KernelIndex.DIRECT else 1.0 / gamma
    return -weight * np.sin(2.0 * t * gamma)


def kernel_transform(params: ModelParams, m: int, t: float, n: int) -> np.ndarray:
    """Periodised kernel on the full n^d grid, indexed by x mod n (FFT order)."""
    (index,) = _check_kernels(params, (m,))
    gamma = dispersion_on_grid(params, n)
    gamma = np.broadcast_to(gamma, (n,) * params.d)
    spectrum = np.fft.fftn(_integrand(gamma, index, t))
    residue = float(np.abs(spectrum.imag).max()) / n**params.d
    if residue > IMAGINARY_RESIDUE_LIMIT:
        raise InvalidKernel(f"imaginary residue {residue:.3e} in kernel transform (m={int(m)})")
    return spectrum.real / n**params.d


def _fold(coords: np.ndarray, n: int) -> np.ndarray:
    # Each kernel is even in every coordinate, so |x| mod n can be folded into [0, n/2].
    reduced = np.mod(np.abs(coords), n)
    return np.minimum(reduced, n - reduced)


def _box_values(
    params: ModelParams, kernels: Sequence[KernelIndex], t: float, radius: int, n: int
) -> Dict[int, np.ndarray]:
    gamma = np.broadcast_to(dispersion_on_grid(params, n), (n,) * params.d)
    index = _fold(np.arange(-radius, radius + 1), n)
    selector = np.ix_(*([index] * params.d))
    values: Dict[int, np.ndarray] = {}
    for m in kernels:
        half = np.fft.rfftn(_integrand(gamma, m, t))
        selected = half[selector]
        residue = float(np.abs(selected.imag).max()) / n**params.d
        if residue > IMAGINARY_RESIDUE_LIMIT:
            raise InvalidKernel(f"imaginary residue {residue:.3e} in kernel table (m={int(m)})")
        values[int(m)] = np.ascontiguousarray(selected.real / n**params.d)
    return values


def kernel_table(
    params: ModelParams,
    t: float,
    radius: int,
    spec: QuadratureSpec,
    kernels: Iterable[int] = ALL_KERNELS,
) -> KernelTable:
    if radius < 0:
        raise ValueError("radius must be non-negative")
    indices = _check_kernels(params, kernels)
    t = float(t)
    n = initial_resolution(params, t, radius, spec)
    if n**params.d > spec.max_grid_points:
        raise BoxTooLarge(
            f"radius {radius} at t={t:g} needs {n}^{params.d} grid points "
            f"(limit {spec.max_grid_points})"
        )

    previous = _box_values(params, indices, t, radius, n)
    delta = math.inf
    for _ in range(spec.max_doublings):
        n *= 2
        if n**params.d > spec.max_grid_points:
            break
        current = _box_values(params, indices, t, radius, n)
        delta = max(float(np.abs(current[m] - previous[m]).max()) for m in current)
        LOGGER.debug(f"kernel_table t={t:g} radius={radius} n={n} delta={delta:.3e}")
        previous = current
        if delta < spec.tolerance:
            return KernelTable(
                params=params, t=t, radius=radius, values=current, resolution=n, est_error=delta
            )

    raise NoConvergence(
        f"kernel table did not converge for {params.describe()} t={t:g} radius={radius}",
        last_delta=delta,
        resolution=n,
        tolerance=spec.tolerance,
    )


def _site_plane(params: ModelParams, site: Sequence[int], n: int) -> np.ndarray:
    k = torus_grid(n)
    plane = np.ones((1,) * params.d)
    for j, x_j in enumerate(site):
        shape = [1] * params.d
        shape[j] = n
        plane = plane * np.cos(k * x_j).reshape(shape)
    return plane


def _site_sums(
    params: ModelParams, kernels: Sequence[KernelIndex], t: float, site: Sequence[int], n: int
) -> Dict[int, complex]:
    gamma = np.broadcast_to(dispersion_on_grid(params, n), (n,) * params.d)
    plane = _site_plane(params, site, n)
    phase_cos = np.cos(2.0 * t * gamma) * plane
    phase_sin = np.sin(2.0 * t * gamma) * plane
    sums: Dict[int, complex] = {}
    for m in kernels:
        weight = gamma ** int(m) if m is not KernelIndex.UNIT else 1.0
        # (2 pi)^-d int gamma^m cos(k.x) e^{-2 i gamma t} dk, as a trapezoid mean.
        sums[int(m)] = complex(np.mean(weight * phase_cos), -np.mean(weight * phase_sin))
    return sums


def _refine_site(
    params: ModelParams,
    kernels: Sequence[KernelIndex],
    t: float,
    site: Sequence[int],
    spec: QuadratureSpec,
) -> Tuple[Dict[int, complex], int, float]:
    radius = max((abs(v) for v in site), default=0)
    n = initial_resolution(params, t, radius, spec)
    if n**params.d > spec.max_grid_points:
        raise BoxTooLarge(f"site {tuple(site)} at t={t:g} needs {n}^{params.d} grid points")
    previous = _site_sums(params, kernels, t, site, n)
    delta = math.inf
    for _ in range(spec.max_doublings):
        n *= 2
        if n**params.d > spec.max_grid_points:
            break
        current = _site_sums(params, kernels, t, site, n)
        delta = max(abs(current[m] - previous[m]) for m in current)
        previous = current
        if delta < spec.tolerance:
            return current, n, delta
    raise NoConvergence(
        f"kernel at site {tuple(site)} did not converge for {params.describe()} t={t:g}",
        last_delta=delta,
        resolution=n,
        tolerance=spec.tolerance,
    )


def _as_site(params: ModelParams, x) -> Tuple[int, ...]:
    site = tuple(int(v) for v in np.atleast_1d(x))
    if len(site) != params.d:
        raise InvalidKernel(f"site {site} does not have dimension {params.d}")
    return site


def site_kernels(
    params: ModelParams,
    t: float,
    x,
    spec: QuadratureSpec,
    kernels: Iterable[int] = ALL_KERNELS,
) -> SiteKernels:
    indices = _check_kernels(params, kernels)
    site = _as_site(params, x)
    sums, n, delta = _refine_site(params, indices, float(t), site, spec)
    values = {m: (s.real if m == KernelIndex.UNIT else s.imag) for m, s in sums.items()}
    return SiteKernels(t=float(t), site=site, values=values, resolution=n, est_error=delta)


def kernel_value(params: ModelParams, m: int, t: float, x, spec: QuadratureSpec) -> float:
    result = site_kernels(params, t, x, spec, kernels=(m,))
    return result.values[int(m)]


def oscillatory_integral(params: ModelParams, m: int, t: float, x, spec: QuadratureSpec) -> complex:
    """Complex value of (2 pi)^-d int gamma^m e^{i(k.x - 2 gamma t)} dk."""
    indices = _check_kernels(params, (m,))
    sums, _, _ = _refine_site(params, indices, float(t), _as_site(params, x), spec)
    return sums[int(m)]
