from __future__ import annotations

import logging
import math
from typing import Callable, List, Tuple

import numpy as np

from ..analysis.verify import Check
from ..dynamics.evolution import evolve
from ..dynamics.lattice import LatticeFunction, TruncationPolicy, random_function, symplectic_form
from ..errors import LatticeError, NoConvergence
from ..finitevol import FiniteVolume, compare_finite_infinite, evolve_finite, finite_symplectic_form
from ..kernels.base import KernelIndex, QuadratureSpec
from ..kernels.oracles import bessel_oracle_1d, gaussian_quadratic_selftest
from ..kernels.quadrature import kernel_table, kernel_value
from ..model import ModelParams

LOGGER = logging.getLogger(__name__)

SEED = 20240917


def _gaussian_oracle(spec: QuadratureSpec, policy: TruncationPolicy) -> Tuple[bool, str]:
    parts = []
    for d in (1, 2, 3):
        at_zero = gaussian_quadratic_selftest(d, [1] * d, 0.0)
        if abs(at_zero - math.pi ** (d / 2.0)) > 1e-14 * at_zero:
            return False, f"d={d}: value {at_zero!r} at t=0, expected pi^(d/2)"
        for t in (1.0, 5.0, 25.0):
            gaussian_quadratic_selftest(d, [1 if j % 2 == 0 else -1 for j in range(d)], t)
        parts.append(f"d={d}: {at_zero:.17g} at t=0")
    return True, "; ".join(parts)


def _bessel_oracle(spec: QuadratureSpec, policy: TruncationPolicy) -> Tuple[bool, str]:
    chain = ModelParams(d=1, omega=0.0, lambdas=[1.0], allow_gapless=True)
    worst = 0.0
    for t in (1.0, 5.0):
        for x in range(-10, 11):
            computed = kernel_value(chain, KernelIndex.UNIT, t, (x,), spec)
            worst = max(worst, abs(computed - bessel_oracle_1d(1.0, t, x)))
    return worst < 1e-8, f"max |quadrature - J_2|x|(4t)| = {worst:.3e}"


def _zero_time(spec: QuadratureSpec, policy: TruncationPolicy) -> Tuple[bool, str]:
    worst = 0.0
    for d in (1, 2, 3):
        table = kernel_table(ModelParams.uniform(d), 0.0, 4, spec)
        delta = np.zeros_like(table.values[0])
        delta[(4,) * d] = 1.0
        worst = max(worst, float(np.abs(table.values[0] - delta).max()))
        worst = max(worst, float(np.abs(table.values[-1]).max()), float(np.abs(table.values[1]).max()))
    return worst < 1e-10, f"max deviation from (delta_0, 0, 0) = {worst:.3e}"


def _symplectic(spec: QuadratureSpec, policy: TruncationPolicy) -> Tuple[bool, str]:
    rng = np.random.default_rng(SEED)
    params = ModelParams.uniform(1)
    worst = 0.0
    for t in (0.5, 2.0):
        f = random_function(1, 5, rng)
        g = random_function(1, 5, rng)
        f_t = evolve(params, f, t, spec, policy).function
        g_t = evolve(params, g, t, spec, policy).function
        worst = max(worst, abs(symplectic_form(f_t, g_t) - symplectic_form(f, g)))
    return worst < 1e-6, f"max |sigma(T f, T g) - sigma(f, g)| = {worst:.3e}"


def _group_law(spec: QuadratureSpec, policy: TruncationPolicy) -> Tuple[bool, str]:
    params = ModelParams.uniform(1)
    f = LatticeFunction.delta((0,))
    twice = evolve(params, evolve(params, f, 1.0, spec, policy).function, 1.0, spec, policy).function
    once = evolve(params, f, 2.0, spec, policy).function
    gap = (twice - once).sup_norm()
    return gap < 1e-6, f"||T_1 T_1 f - T_2 f||_inf = {gap:.3e}"


def _finite_volume(spec: QuadratureSpec, policy: TruncationPolicy) -> Tuple[bool, str]:
    params = ModelParams.uniform(1)
    vol = FiniteVolume(L=8, params=params)
    rng = np.random.default_rng(SEED)
    f = vol.embed(random_function(1, 5, rng))
    g = vol.embed(random_function(1, 5, rng))
    drift = abs(
        finite_symplectic_form(evolve_finite(vol, f, 2.0), evolve_finite(vol, g, 2.0))
        - finite_symplectic_form(f, g)
    )
    difference = compare_finite_infinite(params, 32, LatticeFunction.delta((0,)), 2.0, spec)
    passed = drift < 1e-12 and difference < 1e-8
    return passed, f"symplectic drift {drift:.3e}; |T^L f - T f| at L=32 = {difference:.3e}"


CHECKS: List[Tuple[str, Callable[[QuadratureSpec, TruncationPolicy], Tuple[bool, str]]]] = [
    ("gaussian-oracle", _gaussian_oracle),
    ("zero-time-identities", _zero_time),
    ("bessel-oracle", _bessel_oracle),
    ("symplectic-invariance", _symplectic),
    ("group-law", _group_law),
    ("finite-volume", _finite_volume),
]


def run_selftest(spec: QuadratureSpec, policy: TruncationPolicy | None = None) -> List[Check]:
    policy = policy or TruncationPolicy()
    results: List[Check] = []
    for name, check in CHECKS:
        try:
            passed, detail = check(spec, policy)
        except NoConvergence as exc:
            passed, detail = False, f"{exc} ({exc.provenance()})"
        except LatticeError as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        LOGGER.info(f"selftest {name}: {'PASS' if passed else 'FAIL'}")
        results.append(Check(name=name, passed=passed, detail=detail))
    return results
