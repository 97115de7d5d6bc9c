import dataclasses
import math

import numpy as np
import pytest

from src.dynamics.evolution import (
    commutator_bound,
    commutator_norm,
    commutator_norm_from_phase,
    commutator_phase,
    degenerate_kernel_table,
    evolve,
    evolved_values_at,
    phase_from_table,
    reduce_degenerate,
    truncated_kernels,
)
from src.dynamics.lattice import (
    LatticeFunction,
    TruncationPolicy,
    inner_product,
    random_function,
    sup_distance,
    symplectic_form,
)
from src.errors import DimensionMismatch, InvalidKernel, TruncationFailure
from src.kernels.quadrature import kernel_table, kernel_value
from src.model import ModelParams


def test_lattice_function_drops_zeros_and_adds():
    f = LatticeFunction({(0,): 1.0, (2,): 0.0, (-1,): 2j}, 1)
    assert f.support == [(-1,), (0,)]
    g = LatticeFunction.delta((0,), -1.0)
    total = f + g
    assert total.support == [(-1,)]
    assert (f - f).entries == {}
    assert f[(5,)] == 0j
    assert f.l1_norm() == pytest.approx(3.0)
    assert f.sup_norm() == pytest.approx(2.0)
    assert f.extent() == 1



def test_lattice_function_entries_are_read_only():
    f = LatticeFunction({(0,): 1.0}, 1)
    with pytest.raises(TypeError):
        f.entries[(1,)] = 2.0
    assert f[(1,)] == 0j
    assert dict(f.entries) == {(0,): 1 + 0j}


def test_lattice_function_dense_conversion():
    f = LatticeFunction({(1, -2): 1.5, (-1, 0): 0.5 - 1j}, 2)
    array, lo = f.to_dense()
    assert array.shape == (3, 3)
    assert tuple(lo) == (-1, -2)
    assert LatticeFunction.from_dense(array, tuple(lo)).entries == f.entries


def test_inner_product_is_conjugate_linear_in_first_argument():
    f = LatticeFunction({(0,): 1j, (1,): 2.0}, 1)
    g = LatticeFunction({(0,): 3.0, (2,): 1.0}, 1)
    assert inner_product(f, g) == pytest.approx(-3j)
    assert inner_product(f.scaled(2j), g) == pytest.approx(-2j * inner_product(f, g))
    assert symplectic_form(f, g) == pytest.approx(-3.0)
    assert symplectic_form(g, f) == pytest.approx(3.0)


def test_sup_distance_and_dimension_checks():
    f = LatticeFunction.delta((0, 0))
    g = LatticeFunction({(3, -1): 1.0, (-2, 5): 1.0}, 2)
    assert sup_distance(f, g) == 5
    with pytest.raises(DimensionMismatch):
        inner_product(f, LatticeFunction.delta((0,)))


def test_reduce_degenerate():
    strict = ModelParams.uniform(2)
    assert reduce_degenerate(strict) == (strict, [1, 2])
    reduced, axes = reduce_degenerate(ModelParams(d=2, omega=1.0, lambdas=[1.0, 0.0]))
    assert axes == [1]
    assert reduced.d == 1 and reduced.lambdas == (1.0,)
    assert reduce_degenerate(ModelParams(d=3, omega=2.0, lambdas=[0.0, 0.0, 0.0])) == (None, [])


def test_degenerate_table_matches_direct_quadrature(spec):
    params = ModelParams(d=2, omega=1.0, lambdas=[0.0, 1.5])
    factorised = degenerate_kernel_table(params, 2.0, 8, spec)
    direct = kernel_table(params, 2.0, 8, spec)
    for m in (-1, 0, 1):
        assert np.abs(factorised.values[m] - direct.values[m]).max() < 1e-10


def test_evolve_at_zero_time_is_identity(chain, spec):
    f = LatticeFunction({(0,): 1.0, (3,): 0.5 - 2j}, 1)
    result = evolve(chain, f, 0.0, spec)
    assert result.function.entries == f.entries
    assert result.tail_bound == 0.0


def test_evolved_delta_is_kernel(chain, spec):
    result = evolve(chain, LatticeFunction.delta((0,)), 2.0, spec)
    for x in (0, 1, -4, 9):
        expected = kernel_value(chain, 0, 2.0, (x,), spec) - 1j * kernel_value(chain, -1, 2.0, (x,), spec)
        assert result.function[(x,)] == pytest.approx(expected, abs=1e-10)
    assert result.tail_bound < 1e-12
    assert result.truncation_radius >= 4 + 8


def test_evolve_real_part_of_conjugate_input(chain, spec):
    # For real f the evolution is the convolution with A + B = H0 - i H^(-1).
    f = LatticeFunction({(0,): 1.0, (1,): -0.5}, 1)
    result = evolve(chain, f, 1.5, spec).function
    h0 = lambda x: kernel_value(chain, 0, 1.5, (x,), spec)  # noqa: E731
    hm = lambda x: kernel_value(chain, -1, 1.5, (x,), spec)  # noqa: E731
    for x in (-2, 0, 3):
        expected = (h0(x) - 1j * hm(x)) - 0.5 * (h0(x - 1) - 1j * hm(x - 1))
        assert result[(x,)] == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("d", [1, 2])
def test_symplectic_invariance(d, spec, rng):
    params = ModelParams.uniform(d)
    for t in (0.5, 2.0, 10.0):
        for _ in range(20):
            f = random_function(d, 5, rng)
            g = random_function(d, 5, rng)
            f_t = evolve(params, f, t, spec).function
            g_t = evolve(params, g, t, spec).function
            assert abs(symplectic_form(f_t, g_t) - symplectic_form(f, g)) < 1e-6


@pytest.mark.parametrize("d", [1, 2])
def test_group_law(d, spec, rng):
    params = ModelParams.uniform(d)
    for f in (LatticeFunction.delta((0,) * d), random_function(d, 5, rng)):
        twice = evolve(params, evolve(params, f, 1.0, spec).function, 1.0, spec).function
        once = evolve(params, f, 2.0, spec).function
        assert (twice - once).sup_norm() < 1e-6


def test_time_reversal_inverts_evolution(chain, spec, rng):
    f = random_function(1, 4, rng)
    back = evolve(chain, evolve(chain, f, 3.0, spec).function, -3.0, spec).function
    assert (back - f).sup_norm() < 1e-6


def test_commutator_phase_is_inverse_kernel(chain, spec):
    origin = LatticeFunction.delta((0,))
    for x in (0, 2, 5):
        phase = commutator_phase(chain, origin, LatticeFunction.delta((x,)), 3.0, spec)
        assert phase == pytest.approx(kernel_value(chain, -1, 3.0, (x,), spec), abs=1e-10)


def test_commutator_phase_matches_full_evolution(square, spec, rng):
    f = random_function(2, 4, rng)
    g = random_function(2, 4, rng)
    evolved = evolve(square, f, 1.2, spec).function
    assert commutator_phase(square, f, g, 1.2, spec) == pytest.approx(
        symplectic_form(evolved, g), abs=1e-10
    )


@pytest.mark.parametrize("t", [0.7, 4.0, -2.5])
def test_real_functions_phase_matches_complex_path(square, spec, rng, t):
    f = random_function(2, 4, rng)
    g = random_function(2, 4, rng)
    f_real = LatticeFunction({s: v.real for s, v in f}, 2)
    g_real = LatticeFunction({s: v.real for s, v in g}, 2)
    assert f_real.is_real() and g_real.is_real()
    phase = commutator_phase(square, f_real, g_real, t, spec)
    assert isinstance(phase, float)
    table = truncated_kernels(square, t, spec, TruncationPolicy(), min_radius=sup_distance(f_real, g_real))
    gy, gv = g_real.arrays()
    evolved = evolved_values_at(table, f_real, gy)
    assert phase == pytest.approx(float(np.sum(np.conj(evolved) * gv).imag), abs=1e-10)
    assert phase == phase_from_table(table, f_real, g_real)


def test_real_functions_phase_rejects_imaginary_kernel(chain, spec):
    table = truncated_kernels(chain, 1.0, spec, TruncationPolicy())
    leaky = dataclasses.replace(table, values={**table.values, -1: table.values[-1] + 1e-6j})
    origin = LatticeFunction.delta((0,))
    with pytest.raises(InvalidKernel):
        phase_from_table(leaky, origin, LatticeFunction.delta((1,)))


def test_commutator_norm_at_zero_time(chain, spec):
    origin = LatticeFunction.delta((0,))
    assert commutator_norm(chain, origin, LatticeFunction.delta((3,)), 0.0, spec) == 0.0
    assert commutator_norm_from_phase(math.pi) == pytest.approx(2.0)


def test_commutator_norm_below_bound(spec, rng):
    for case in range(50):
        d = 1 if case % 5 else 2
        params = ModelParams(d=d, omega=rng.uniform(0.5, 2.0), lambdas=list(rng.uniform(0.2, 1.5, size=d)))
        f = random_function(d, 3, rng, spread=4)
        g = random_function(d, 3, rng, spread=4)
        t = float(rng.uniform(0.0, 4.0))
        norm = commutator_norm(params, f, g, t, spec)
        bound = commutator_bound(params, f, g, t, spec)
        assert 0.0 <= norm <= min(2.0, bound) + 1e-8


def test_light_cone(chain, spec):
    origin = LatticeFunction.delta((0,))
    for x in (60, 64, 75, -60):
        assert commutator_norm(chain, origin, LatticeFunction.delta((x,)), 10.0, spec) < 1e-8
    assert commutator_norm(chain, origin, LatticeFunction.delta((5,)), 10.0, spec) > 1e-4


def test_degenerate_evolution_stays_on_line(spec):
    plane = ModelParams(d=2, omega=1.0, lambdas=[1.0, 0.0])
    line = ModelParams.uniform(1)
    evolved = evolve(plane, LatticeFunction.delta((0, 0)), 2.0, spec).function
    reference = evolve(line, LatticeFunction.delta((0,)), 2.0, spec).function
    assert all(site[1] == 0 for site in evolved.support)
    for (x,), value in reference:
        assert evolved[(x, 0)] == pytest.approx(value, abs=1e-10)


def test_uncoupled_model_rotates_each_site(spec):
    omega, t = 2.0, 0.3
    params = ModelParams(d=1, omega=omega, lambdas=[0.0])
    evolved = evolve(params, LatticeFunction.delta((0,)), t, spec).function
    a = math.cos(2 * omega * t) + 0.5j * (1 / omega + omega) * math.sin(2 * omega * t)
    b = 0.5j * (1 / omega - omega) * math.sin(2 * omega * t)
    assert evolved.support == [(0,)]
    assert evolved[(0,)] == pytest.approx(a + b, abs=1e-12)


def test_dimension_mismatch(chain, spec):
    with pytest.raises(DimensionMismatch):
        evolve(chain, LatticeFunction.delta((0, 0)), 1.0, spec)
    with pytest.raises(DimensionMismatch):
        commutator_norm(chain, LatticeFunction.delta((0,)), LatticeFunction.delta((0, 1)), 1.0, spec)


def test_truncation_failure(chain, spec):
    policy = TruncationPolicy(margin=0, max_radius=12)
    with pytest.raises(TruncationFailure):
        truncated_kernels(chain, 10.0, spec, policy)
