"""Infinite-volume harmonic evolution T_t on finitely supported lattice functions.

T_t f = f * A_t + conj(f) * B_t with
    A_t = H_t^(0) - (i/2) (H_t^(-1) + H_t^(1)),
    B_t = (i/2) (H_t^(1) - H_t^(-1)).
"""
from __future__ import annotations

import logging
import math
from typing import List, Tuple

import numpy as np
from scipy.signal import convolve

from ..errors import DimensionMismatch, InvalidKernel, TruncationFailure
from ..kernels.base import ALL_KERNELS, KernelTable, QuadratureSpec
from ..kernels.quadrature import kernel_table
from ..model import ModelParams, light_cone_radius
from .lattice import (
    EvolutionResult,
    LatticeFunction,
    TruncationPolicy,
    check_dimensions,
    sup_distance,
    symplectic_form,
)

LOGGER = logging.getLogger(__name__)

IMAGINARY_LEAK_TOLERANCE = 1e-10


def reduce_degenerate(params: ModelParams) -> Tuple[ModelParams | None, List[int]]:
    """Sub-model on the axes with non-zero coupling (1-based axis numbers).

    Returns (None, []) when every coupling vanishes; gamma is then the constant omega.
    """
    axes = [j + 1 for j, lam in enumerate(params.lambdas) if lam > 0]
    if len(axes) == params.d:
        return params, axes
    if not axes:
        return None, []
    reduced = ModelParams(
        d=len(axes),
        omega=params.omega,
        lambdas=[params.lambdas[j - 1] for j in axes],
        allow_gapless=params.allow_gapless,
    )
    return reduced, axes


def _constant_kernels(params: ModelParams, t: float) -> dict[int, float]:
    omega = params.omega
    return {
        -1: -math.sin(2.0 * omega * t) / omega,
        0: math.cos(2.0 * omega * t),
        1: -omega * math.sin(2.0 * omega * t),
    }


def degenerate_kernel_table(
    params: ModelParams, t: float, radius: int, spec: QuadratureSpec
) -> KernelTable:
    """Kernel table built from the factorisation H(x; d) = H(x_A; |A|) prod_{j not in A} delta_0(x_j)."""
    reduced, axes = reduce_degenerate(params)
    if reduced is params:
        return kernel_table(params, t, radius, spec)
    shape = (2 * radius + 1,) * params.d
    centre = [radius] * params.d
    values = {}
    if reduced is None:
        for m, value in _constant_kernels(params, t).items():
            array = np.zeros(shape)
            array[tuple(centre)] = value
            values[m] = array
        return KernelTable(
            params=params, t=float(t), radius=radius, values=values, resolution=1, est_error=0.0
        )
    small = kernel_table(reduced, t, radius, spec)
    selector: list = [radius] * params.d
    for j in axes:
        selector[j - 1] = slice(None)
    for m in ALL_KERNELS:
        array = np.zeros(shape)
        array[tuple(selector)] = small.values[int(m)]
        values[int(m)] = array
    return KernelTable(
        params=params,
        t=float(t),
        radius=radius,
        values=values,
        resolution=small.resolution,
        est_error=small.est_error,
    )


def _table(params: ModelParams, t: float, radius: int, spec: QuadratureSpec) -> KernelTable:
    if params.is_strict:
        return kernel_table(params, t, radius, spec)
    return degenerate_kernel_table(params, t, radius, spec)


def truncated_kernels(
    params: ModelParams,
    t: float,
    spec: QuadratureSpec,
    policy: TruncationPolicy,
    min_radius: int = 0,
) -> KernelTable:
    """Kernel table whose outermost shell is below the truncation tolerance."""
    radius = max(min_radius, light_cone_radius(params, t) + policy.margin)
    while True:
        table = _table(params, t, radius, spec)
        tail = table.shell_magnitude()
        LOGGER.debug(f"truncation t={t:g} radius={radius} shell={tail:.3e}")
        if tail < policy.tolerance:
            return table
        grown = int(math.ceil(radius * policy.growth))
        if grown > policy.max_radius:
            raise TruncationFailure(
                f"kernel shell magnitude {tail:.3e} at radius {radius} exceeds "
                f"{policy.tolerance:.1e} and the radius cap is {policy.max_radius}"
            )
        radius = grown


def evolution_kernels(table: KernelTable) -> Tuple[np.ndarray, np.ndarray]:
    """(A_t, B_t) on the table's box."""
    h_inv = table.values[-1]
    h_unit = table.values[0]
    h_dir = table.values[1]
    a = h_unit - 0.5j * (h_inv + h_dir)
    b = 0.5j * (h_dir - h_inv)
    return a, b


def _require_evolvable(params: ModelParams, *functions: LatticeFunction) -> None:
    try:
        check_dimensions(*functions, d=params.d)
    except DimensionMismatch as exc:
        raise DimensionMismatch(f"model has d={params.d}: {exc}") from exc


def evolve(
    params: ModelParams,
    f: LatticeFunction,
    t: float,
    spec: QuadratureSpec,
    policy: TruncationPolicy | None = None,
) -> EvolutionResult:
    _require_evolvable(params, f)
    if not f.entries:
        raise ValueError("cannot evolve the zero function")
    if t == 0:
        return EvolutionResult(function=f, truncation_radius=0, tail_bound=0.0)
    policy = policy or TruncationPolicy()
    table = truncated_kernels(params, t, spec, policy)
    a, b = evolution_kernels(table)
    dense, lo = f.to_dense()
    evolved = convolve(dense, a, mode="full", method="direct") + convolve(
        np.conj(dense), b, mode="full", method="direct"
    )
    origin = tuple(int(v) - table.radius for v in lo)
    LOGGER.debug(
        f"evolve t={t:g} support={len(f)} radius={table.radius} resolution={table.resolution}"
    )
    return EvolutionResult(
        function=LatticeFunction.from_dense(evolved, origin),
        truncation_radius=table.radius,
        tail_bound=table.shell_magnitude(),
        resolution=table.resolution,
        est_error=table.est_error,
    )


def evolved_values_at(
    table: KernelTable, f: LatticeFunction, sites: np.ndarray
) -> np.ndarray:
    """(T_t f)(y) for each row y of `sites`, summing only over supp f."""
    a, b = evolution_kernels(table)
    fx, fv = f.arrays()
    diffs = sites[:, None, :] - fx[None, :, :]
    inside = np.abs(diffs).max(axis=-1) <= table.radius
    index = tuple(np.moveaxis(np.where(inside[..., None], diffs, 0) + table.radius, -1, 0))
    a_vals = np.where(inside, a[index], 0)
    b_vals = np.where(inside, b[index], 0)
    return (a_vals * fv[None, :]).sum(axis=1) + (b_vals * np.conj(fv)[None, :]).sum(axis=1)


def commutator_phase(
    params: ModelParams,
    f: LatticeFunction,
    g: LatticeFunction,
    t: float,
    spec: QuadratureSpec,
    policy: TruncationPolicy | None = None,
) -> float:
    """sigma(T_t f, g) = Im <T_t f, g>."""
    _require_evolvable(params, f, g)
    if t == 0 or not f.entries or not g.entries:
        return symplectic_form(f, g)
    policy = policy or TruncationPolicy()
    table = truncated_kernels(params, t, spec, policy, min_radius=sup_distance(f, g))
    return phase_from_table(table, f, g)


def phase_from_table(table: KernelTable, f: LatticeFunction, g: LatticeFunction) -> float:
    """sigma(T_t f, g) from a kernel table covering every difference y - x."""
    if f.is_real() and g.is_real():
        return _real_phase(table, f, g)
    gy, gv = g.arrays()
    evolved = evolved_values_at(table, f, gy)
    return float(np.sum(np.conj(evolved) * gv).imag)


def _real_phase(table: KernelTable, f: LatticeFunction, g: LatticeFunction) -> float:
    # For real f, g: sigma(T_t f, g) = sum_{x,y} f(x) g(y) H_t^(-1)(y - x).
    fx, fv = f.arrays()
    gy, gv = g.arrays()
    diffs = gy[:, None, :] - fx[None, :, :]
    index = tuple(np.moveaxis(diffs + table.radius, -1, 0))
    phase = complex(np.sum(gv[:, None] * fv[None, :] * table.values[-1][index]))
    if abs(phase.imag) > IMAGINARY_LEAK_TOLERANCE:
        raise InvalidKernel(f"real f and g produced an imaginary phase part {phase.imag:.3e}")
    return phase.real


def commutator_norm_from_phase(phase: float) -> float:
    # |1 - e^{i phase}| = 2 |sin(phase / 2)|
    return min(2.0, 2.0 * abs(math.sin(0.5 * phase)))


def commutator_norm(
    params: ModelParams,
    f: LatticeFunction,
    g: LatticeFunction,
    t: float,
    spec: QuadratureSpec,
    policy: TruncationPolicy | None = None,
) -> float:
    return commutator_norm_from_phase(commutator_phase(params, f, g, t, spec, policy))


def commutator_bound(
    params: ModelParams,
    f: LatticeFunction,
    g: LatticeFunction,
    t: float,
    spec: QuadratureSpec,
    policy: TruncationPolicy | None = None,
) -> float:
    """sum_{x,y} |f(x)| |g(y)| sum_m |H_t^(m)(x - y)|."""
    _require_evolvable(params, f, g)
    if not f.entries or not g.entries:
        return 0.0
    policy = policy or TruncationPolicy()
    table = truncated_kernels(params, t, spec, policy, min_radius=sup_distance(f, g))
    magnitude = table.combined_magnitude()
    fx, fv = f.arrays()
    gy, gv = g.arrays()
    diffs = fx[:, None, :] - gy[None, :, :]
    index = tuple(np.moveaxis(diffs + table.radius, -1, 0))
    weights = np.abs(fv)[:, None] * np.abs(gv)[None, :]
    return float(np.sum(weights * magnitude[index]))
