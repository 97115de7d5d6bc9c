"""Independent references for the kernels: stationary phase, Bessel and Gaussian closed forms."""
from __future__ import annotations

import cmath
import logging
import math
from typing import Sequence

import numpy as np
from scipy.special import jv, jvp

from ..errors import InvalidKernel, OracleFailure
from ..model import ModelParams, critical_points, hessian_determinant
from .base import KernelIndex

LOGGER = logging.getLogger(__name__)


def _site(params: ModelParams, x) -> np.ndarray:
    site = np.atleast_1d(np.asarray(x, dtype=int))
    if site.shape != (params.d,):
        raise InvalidKernel(f"site {tuple(site)} does not have dimension {params.d}")
    return site


def stationary_phase_integral(params: ModelParams, m: int, t: float, x) -> complex:
    """Leading-order stationary phase value of (2 pi)^-d int gamma^m e^{i(k.x - 2 t gamma)} dk.

    Each of the 2^d critical points k* in {0, pi}^d contributes
    gamma(k*)^m e^{i k*.x} e^{-2 i t gamma(k*)} (4 pi |t|)^{-d/2} |det h|^{-1/2}
    times e^{-i pi/4 sign(t) sum_j sign(h_j)}, with h the Hessian of gamma at k*.
    """
    index = KernelIndex.coerce(m)
    params.require_strict()
    if abs(t) < 1.0:
        raise ValueError("stationary phase is an asymptotic estimate for |t| >= 1")
    site = _site(params, x)
    scale = (4.0 * math.pi * abs(t)) ** (-params.d / 2.0)
    sign_t = 1.0 if t > 0 else -1.0
    total = 0j
    for point in critical_points(params):
        # e^{i k*.x} is +-1 for k* in {0, pi}^d.
        parity = (-1) ** int(sum(int(x_j) for x_j, c in zip(site, point.coords) if c != 0.0))
        amplitude = point.gamma_value ** int(index) / math.sqrt(hessian_determinant(point))
        phase = -2.0 * t * point.gamma_value - 0.25 * math.pi * sign_t * sum(point.signature)
        total += parity * amplitude * cmath.exp(1j * phase)
    return scale * total


def stationary_phase_estimate(params: ModelParams, m: int, t: float, x) -> float:
    value = stationary_phase_integral(params, m, t, x)
    return value.real if KernelIndex.coerce(m).uses_real_part else value.imag


def stationary_phase_amplitude(params: ModelParams, m: int, t: float) -> float:
    """Envelope sum_k* |gamma^m| |det h|^{-1/2} (4 pi |t|)^{-d/2}; bounds the estimate."""
    index = KernelIndex.coerce(m)
    scale = (4.0 * math.pi * abs(t)) ** (-params.d / 2.0)
    return scale * sum(
        p.gamma_value ** int(index) / math.sqrt(hessian_determinant(p))
        for p in critical_points(params)
    )


def bessel_oracle_1d(coupling: float, t: float, x: int, m: int = 0) -> float:
    """Kernels of the gapless chain gamma(k) = 2 sqrt(lambda) |sin(k/2)|.

    With theta = k/2 the Jacobi-Anger expansion of cos(a sin theta) gives
    H_t^(0)(x) = J_{2|x|}(4 sqrt(lambda) t); differentiating in t,
    H_t^(1)(x) = (1/2) d/dt H_t^(0)(x) = 2 sqrt(lambda) J'_{2|x|}(4 sqrt(lambda) t).
    """
    if coupling <= 0:
        raise ValueError("coupling must be positive")
    index = KernelIndex.coerce(m)
    if index is KernelIndex.INVERSE:
        raise InvalidKernel("1/gamma is not integrable for the gapless chain")
    order = 2 * abs(int(x))
    argument = 4.0 * math.sqrt(coupling) * t
    if index is KernelIndex.UNIT:
        return float(jv(order, argument))
    return float(2.0 * math.sqrt(coupling) * jvp(order, argument))


def gaussian_quadratic_integral(signature: Sequence[int], t: float) -> complex:
    """int_{R^d} e^{i t Q(y)} e^{-|y|^2} dy with Q(y) = sum_j eps_j y_j^2."""
    value = 1 + 0j
    for eps in signature:
        if eps not in (1, -1):
            raise ValueError(f"signature entries must be +1 or -1, got {eps!r}")
        value *= cmath.sqrt(math.pi / (1.0 - 1j * eps * t))
    return value


def gaussian_quadratic_bound(d: int, t: float) -> float:
    if t == 0:
        return math.pi ** (d / 2.0)
    return min(math.pi ** (d / 2.0), (math.pi / abs(t)) ** (d / 2.0))


def gaussian_quadratic_selftest(d: int, signature: Sequence[int], t: float) -> float:
    if d < 1:
        raise ValueError("d must be at least 1")
    if len(signature) != d:
        raise ValueError(f"signature has {len(signature)} entries, expected {d}")
    magnitude = (math.pi / math.sqrt(1.0 + t * t)) ** (d / 2.0)
    product = abs(gaussian_quadratic_integral(signature, t))
    if abs(product - magnitude) > 1e-12 * max(1.0, magnitude):
        raise OracleFailure(f"complex product {product!r} disagrees with closed form {magnitude!r}")
    bound = gaussian_quadratic_bound(d, t)
    if magnitude > bound * (1.0 + 1e-12):
        raise OracleFailure(f"|integral| = {magnitude!r} exceeds bound {bound!r} (d={d}, t={t})")
    LOGGER.debug(f"Gaussian-quadratic oracle d={d} t={t:g}: {magnitude:.17g} <= {bound:.17g}")
    return magnitude
