import numpy as np
import pytest
from pydantic import ValidationError

from src.errors import BoxTooLarge, InvalidKernel, NoConvergence
from src.kernels.base import ALL_KERNELS, KernelIndex, QuadratureSpec
from src.kernels.quadrature import (
    initial_resolution,
    kernel_table,
    kernel_transform,
    kernel_value,
    oscillatory_integral,
    site_kernels,
)
from src.model import ModelParams


@pytest.mark.parametrize("d", [1, 2, 3])
def test_zero_time_identities(d, spec):
    table = kernel_table(ModelParams.uniform(d), 0.0, 4, spec)
    for site in table.sites():
        expected = 1.0 if not any(site) else 0.0
        assert abs(table.value(0, site) - expected) < 1e-10
        assert abs(table.value(-1, site)) < 1e-10
        assert abs(table.value(1, site)) < 1e-10


def test_zero_time_site_values(spec):
    params = ModelParams(d=2, omega=1.5, lambdas=[1.0, 0.5])
    assert kernel_value(params, 0, 0.0, (0, 0), spec) == pytest.approx(1.0, abs=1e-10)
    assert kernel_value(params, 0, 0.0, (2, -1), spec) == pytest.approx(0.0, abs=1e-10)
    assert kernel_value(params, -1, 0.0, (1, 0), spec) == pytest.approx(0.0, abs=1e-10)


def test_table_matches_site_evaluation(chain, spec):
    table = kernel_table(chain, 5.0, 20, spec)
    for x in (0, 1, -3, 7, 20):
        values = site_kernels(chain, 5.0, (x,), spec).values
        for m in ALL_KERNELS:
            assert table.value(m, (x,)) == pytest.approx(values[int(m)], abs=1e-10)


def test_kernels_are_separately_even(spec):
    params = ModelParams(d=2, omega=1.0, lambdas=[1.0, 2.0])
    table = kernel_table(params, 1.7, 6, spec)
    for array in table.values.values():
        assert np.allclose(array, array[::-1, :], atol=1e-13, rtol=0)
        assert np.allclose(array, array[:, ::-1], atol=1e-13, rtol=0)


def test_time_reversal_symmetry(chain, spec):
    forward = site_kernels(chain, 2.5, (3,), spec).values
    backward = site_kernels(chain, -2.5, (3,), spec).values
    assert backward[0] == pytest.approx(forward[0], abs=1e-12)
    assert backward[-1] == pytest.approx(-forward[-1], abs=1e-12)
    assert backward[1] == pytest.approx(-forward[1], abs=1e-12)


def test_degenerate_coupling_factorises(spec):
    plane = ModelParams(d=2, omega=1.0, lambdas=[1.0, 0.0])
    line = ModelParams(d=1, omega=1.0, lambdas=[1.0])
    table = kernel_table(plane, 2.0, 8, spec)
    reference = kernel_table(line, 2.0, 8, spec)
    for m in ALL_KERNELS:
        expected = np.zeros((17, 17))
        expected[:, 8] = reference.values[int(m)]
        assert np.abs(table.values[int(m)] - expected).max() < 1e-10


def test_transform_is_periodised_kernel(chain, spec):
    n = 64
    periodic = kernel_transform(chain, 0, 2.0, n)
    table = kernel_table(chain, 2.0, 40, spec)
    for x in range(-10, 11):
        images = sum(table.value(0, (x + j * n,)) for j in (-1, 0, 1) if abs(x + j * n) <= 40)
        assert periodic[x % n] == pytest.approx(images, abs=1e-10)


@pytest.mark.parametrize("d, t, radius", [(1, 5.0, 20), (2, 3.0, 6)])
def test_table_is_stable_under_one_more_doubling(d, t, radius, spec):
    params = ModelParams.uniform(d)
    table = kernel_table(params, t, radius, spec)
    assert table.est_error < spec.tolerance
    n = 2 * table.resolution
    for m in ALL_KERNELS:
        finer = kernel_transform(params, m, t, n)
        for site in table.sites():
            index = tuple(v % n for v in site)
            assert abs(table.value(m, site) - finer[index]) < spec.tolerance


def test_oscillatory_integral_parts(chain, spec):
    value = oscillatory_integral(chain, 0, 3.0, (2,), spec)
    assert value.real == pytest.approx(kernel_value(chain, 0, 3.0, (2,), spec), abs=1e-12)
    inverse = oscillatory_integral(chain, -1, 3.0, (2,), spec)
    assert inverse.imag == pytest.approx(kernel_value(chain, -1, 3.0, (2,), spec), abs=1e-12)


def test_table_lookup_outside_box(chain, spec):
    table = kernel_table(chain, 1.0, 3, spec)
    assert table.contains((3,))
    assert not table.contains((4,))
    with pytest.raises(KeyError):
        table.value(0, (4,))
    assert table.values[0].flags.writeable is False


def test_shell_magnitude_decreases_outside_cone(chain, spec):
    near = kernel_table(chain, 2.0, 4, spec).shell_magnitude()
    far = kernel_table(chain, 2.0, 30, spec).shell_magnitude()
    assert far < 1e-12 < near


def test_invalid_kernel_index(chain, spec):
    with pytest.raises(InvalidKernel):
        kernel_value(chain, 2, 1.0, (0,), spec)
    assert KernelIndex.coerce(-1) is KernelIndex.INVERSE


def test_gapless_inverse_kernel_is_rejected(spec):
    gapless = ModelParams(d=1, omega=0.0, lambdas=[1.0], allow_gapless=True)
    with pytest.raises(InvalidKernel):
        kernel_value(gapless, -1, 1.0, (0,), spec)
    assert kernel_table(gapless, 1.0, 2, spec, kernels=(0, 1)).resolution >= 32


def test_no_convergence_carries_provenance(chain):
    strict = QuadratureSpec(tolerance=1e-99, max_doublings=2)
    with pytest.raises(NoConvergence) as info:
        kernel_value(chain, 0, 3.0, (1,), strict)
    assert info.value.tolerance == 1e-99
    assert info.value.resolution is not None
    assert "last_delta" in info.value.provenance()


def test_box_too_large(square):
    tiny = QuadratureSpec(max_grid_points=256)
    with pytest.raises(BoxTooLarge):
        kernel_table(square, 1.0, 20, tiny)


def test_quadrature_spec_validation():
    with pytest.raises(ValidationError):
        QuadratureSpec(base_points=20)
    with pytest.raises(ValidationError):
        QuadratureSpec(tolerance=0.0)
    assert initial_resolution(ModelParams.uniform(1), 0.0, 40, QuadratureSpec()) == 128
