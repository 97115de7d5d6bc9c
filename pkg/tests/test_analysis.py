import math

import numpy as np
import pytest

from src.analysis.decay import (
    WeightSpec,
    burst_times,
    crosses_zero,
    envelope,
    fit_decay,
    geometric_times,
    sliding_window_max,
    weighted_l1_norm,
)
from src.analysis.verify import (
    EXPONENTIAL,
    ORDER_ONE,
    POWER_LAW,
    classify,
    cone_scan,
    curve_sites,
    default_weighted_times,
    fixed_x_report,
    verify_fixed_x_decay,
    verify_light_cone,
    verify_uniform_decay,
    verify_weighted_decay,
)
from src.dynamics.evolution import commutator_norm
from src.dynamics.lattice import LatticeFunction, random_function
from src.errors import DegenerateModel, DimensionMismatch, NonPositiveValue, TooFewPoints
from src.kernels.base import QuadratureSpec
from src.model import ModelParams


@pytest.mark.parametrize("d", [1, 2, 3])
def test_weighted_norm_examples(d):
    spec = WeightSpec(d)
    assert spec.exponent == d + 3
    origin = LatticeFunction.delta((0,) * d)
    neighbour = LatticeFunction.delta((1,) + (0,) * (d - 1))
    assert weighted_l1_norm(origin, spec) == 1.0
    assert weighted_l1_norm(neighbour, spec) == 2 ** (d + 3)
    assert weighted_l1_norm(origin + neighbour, spec) == 1 + 2 ** (d + 3)


def test_weight_on_box():
    box = WeightSpec(2).on_box(1)
    assert box.shape == (3, 3)
    assert box[1, 1] == 1.0
    assert box[0, 1] == 2.0**5
    assert box[0, 2] == 3.0**5
    assert WeightSpec(1, exponent=0).on_box(2).tolist() == [1.0] * 5


def test_weighted_norm_dominates_l1(rng):
    spec = WeightSpec(2)
    for _ in range(20):
        f = random_function(2, 5, rng)
        assert weighted_l1_norm(f, spec) >= f.l1_norm()
    with pytest.raises(DimensionMismatch):
        weighted_l1_norm(LatticeFunction.delta((0,)), spec)


def test_fit_exact_power_law():
    times = geometric_times(1.0, 100.0, 10)
    fit = fit_decay([(t, 1.0 / t) for t in times])
    assert fit.exponent == pytest.approx(-1.0, abs=1e-12)
    assert fit.amplitude == pytest.approx(1.0)
    assert fit.residual < 1e-12
    assert fit.t_range == (pytest.approx(1.0), pytest.approx(100.0))
    assert fit.n_points == 10


def test_fit_constant_series():
    fit = fit_decay([(t, 2.5) for t in range(1, 8)])
    assert fit.exponent == pytest.approx(0.0, abs=1e-12)
    assert fit.amplitude == pytest.approx(2.5)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_fit_recovers_dimensional_rate(d):
    series = [(t, 0.7 * t ** (-d / 2)) for t in geometric_times(20.0, 200.0, 25)]
    assert fit_decay(series).exponent == pytest.approx(-d / 2, abs=1e-6)


def test_fit_noisy_power_law():
    times = geometric_times(10.0, 1000.0, 50)
    fit = fit_decay([(t, 3 * t**-1.5 * (1 + 0.01 * math.sin(t))) for t in times])
    assert fit.exponent == pytest.approx(-1.5, abs=0.02)


def test_fit_rejects_bad_series():
    with pytest.raises(TooFewPoints):
        fit_decay([(1.0, 1.0), (2.0, 0.5), (3.0, 0.3), (4.0, 0.2)])
    with pytest.raises(NonPositiveValue):
        fit_decay([(t, 1.0 if t != 3 else 0.0) for t in range(1, 7)])
    with pytest.raises(ValueError):
        fit_decay([(t, 1.0) for t in (0.5, 1, 2, 3, 4)])
    with pytest.raises(ValueError):
        fit_decay([(t, 1.0) for t in (1, 2, 2, 3, 4)])


def test_envelope_helpers():
    assert burst_times(10.0, 3, 0.5) == [10.0, 10.5, 11.0]
    assert list(sliding_window_max([1, -5, 2, 0, 3, 1], 3)) == [5, 5, 5, 3, 3, 3]
    assert list(sliding_window_max([1, -2], 1)) == [1, 2]
    assert list(envelope([[0.1, -0.4], [0.2], [0.05, 0.01]], 1)) == [0.4, 0.2, 0.05]
    assert crosses_zero([1.0, 0.0, -0.5])
    assert not crosses_zero([1.0, 0.0, 0.5])


def test_classification_thresholds():
    assert classify(1e-9) == EXPONENTIAL
    assert classify(1e-3) == POWER_LAW
    assert classify(0.5) == ORDER_ONE


def test_curve_sites_follow_root():
    assert curve_sites(1, [1.0, 300.0]) == [(1,), (2,)]
    assert curve_sites(2, [1.0]) == [(1, 0)]


def test_uniform_decay_one_dimension(chain, spec):
    report = verify_uniform_decay(chain, [10, 20, 40, 80], spec)
    assert report.effective_d == 1
    assert report.rescale_exponent == pytest.approx(1 / 3)
    assert report.slope <= 0.05
    assert report.passed
    assert all(v > 0 for v in report.sup_values)


@pytest.mark.slow
def test_uniform_decay_two_dimensions(square, spec):
    report = verify_uniform_decay(square, [10, 20, 40, 80], spec)
    assert report.rescale_exponent == pytest.approx(0.5)
    assert report.slope <= 0.05
    assert report.passed


def test_uniform_decay_reduces_degenerate_model(chain, spec):
    plane = ModelParams(d=2, omega=1.0, lambdas=[1.0, 0.0])
    report = verify_uniform_decay(plane, [10, 20, 40, 80], spec)
    reference = verify_uniform_decay(chain, [10, 20, 40, 80], spec)
    assert report.effective_d == 1
    assert report.rescale_exponent == pytest.approx(1 / 3)
    assert report.sup_values == pytest.approx(reference.sup_values)


def test_uniform_decay_preconditions(chain, spec):
    with pytest.raises(ValueError):
        verify_uniform_decay(chain, [0.5, 2.0], spec)
    with pytest.raises(DegenerateModel):
        verify_uniform_decay(ModelParams(d=2, omega=1.0, lambdas=[0.0, 0.0]), [10.0], spec)


@pytest.mark.slow
def test_fixed_x_decay_one_dimension(chain, spec):
    fit = verify_fixed_x_decay(chain, (0,), geometric_times(20.0, 200.0, 25), spec)
    assert fit.exponent == pytest.approx(-0.5, abs=0.1)
    assert fit.n_points == 25


@pytest.mark.slow
def test_fixed_x_decay_two_dimensions(square, spec):
    fit = verify_fixed_x_decay(square, (0, 0), geometric_times(10.0, 100.0, 25), spec)
    assert fit.exponent == pytest.approx(-1.0, abs=0.15)


def test_fixed_x_needs_a_decade(chain, spec):
    with pytest.raises(ValueError):
        verify_fixed_x_decay(chain, (0,), geometric_times(20.0, 100.0, 10), spec)


def test_fixed_x_reduces_degenerate_model(chain, spec):
    plane = ModelParams(d=2, omega=1.0, lambdas=[1.0, 0.0])
    times = geometric_times(10.0, 100.0, 5)
    report = fixed_x_report(plane, (2, 0), times, spec, burst=2, window=1)
    reference = fixed_x_report(chain, (2,), times, spec, burst=2, window=1)
    assert report.effective_d == 1
    assert report.sites == [(2, 0)] * 5
    assert report.kernel_envelope == pytest.approx(reference.kernel_envelope, abs=1e-12)
    with pytest.raises(ValueError):
        fixed_x_report(plane, (2, 1), times, spec)
    with pytest.raises(DegenerateModel):
        fixed_x_report(ModelParams(d=2, omega=1.0, lambdas=[0.0, 0.0]), (0, 0), times, spec)


def test_weighted_decay_one_dimension(chain, spec):
    report = verify_weighted_decay(chain, geometric_times(10.0, 100.0, 6), spec)
    assert report.effective_d == 1
    assert report.weight_exponent == 4
    assert report.n_pairs == 8
    assert all(v > 0 for v in report.kernel_ratios + report.commutator_ratios + report.site_ratios)
    assert report.kernel_slope <= 0.05
    assert report.commutator_slope <= 0.05
    assert report.site_slope <= 0.05
    assert report.passed
    assert [c.name for c in report.checks()] == [
        "weighted-kernel-slope",
        "weighted-commutator-slope",
        "weighted-site-commutator-slope",
    ]


@pytest.mark.slow
def test_weighted_decay_two_dimensions(square, spec):
    report = verify_weighted_decay(square, geometric_times(10.0, 100.0, 6), spec)
    assert report.kernel_slope <= 0.05
    assert report.commutator_slope <= 0.05
    assert report.site_slope <= 0.05


def test_weighted_decay_reduces_degenerate_model(chain, spec):
    plane = ModelParams(d=2, omega=1.0, lambdas=[0.0, 1.0])
    times = [10.0, 20.0]
    report = verify_weighted_decay(plane, times, spec, n_pairs=2, burst=2)
    reference = verify_weighted_decay(chain, times, spec, n_pairs=2, burst=2)
    assert report.effective_d == 1
    assert report.kernel_ratios == pytest.approx(reference.kernel_ratios)
    assert report.commutator_ratios == pytest.approx(reference.commutator_ratios)
    assert report.site_ratios == pytest.approx(reference.site_ratios)


def test_weighted_decay_preconditions(chain, spec):
    with pytest.raises(ValueError):
        verify_weighted_decay(chain, [10.0], spec)
    with pytest.raises(DegenerateModel):
        verify_weighted_decay(ModelParams(d=1, omega=1.0, lambdas=[0.0]), [10.0, 20.0], spec)
    with pytest.raises(DegenerateModel):
        gapless = ModelParams(d=1, omega=0.0, lambdas=[1.0], allow_gapless=True)
        verify_weighted_decay(gapless, [10.0, 20.0], spec)
    assert default_weighted_times([20.0, 200.0, 50.0], 3) == pytest.approx([20.0, 63.245553203367585, 200.0])


def test_cone_scan_structure(chain, spec):
    scan = cone_scan(chain, [0.0, 1.0, 2.0, 4.0], 40, spec)
    assert scan.values.shape == (4, 41)
    assert np.all(scan.values >= 0) and np.all(scan.values <= 2)
    assert np.all(scan.values[0, 1:] == 0.0)
    assert scan.classes[3][40] == EXPONENTIAL
    assert scan.classes[3][1] != EXPONENTIAL
    assert scan.cone_slope is not None and scan.cone_slope > 0
    assert scan.velocity_bound == pytest.approx(math.sqrt(5) - 1, abs=1e-6)


def test_cone_scan_matches_commutator_norm(chain, spec):
    scan = cone_scan(chain, [3.0], 10, spec)
    origin = LatticeFunction.delta((0,))
    for r in (0, 4, 9):
        expected = commutator_norm(chain, origin, LatticeFunction.delta((r,)), 3.0, spec)
        assert scan.value(3.0, r) == pytest.approx(expected, abs=1e-10)


def test_light_cone_report_scan_checks(chain, spec):
    report = verify_light_cone(chain, [0.0, 1.0, 2.0, 4.0, 8.0], 48, spec, curve_times=[])
    names = {c.name: c for c in report.checks}
    assert set(names) == {"values-in-range", "t0-column-vanishes", "outside-cone-exponential"}
    assert report.curve is None
    assert report.passed


@pytest.mark.slow
def test_light_cone_report_curve_one_dimension(chain, spec):
    report = verify_light_cone(chain, [0.0, 1.0, 2.0, 4.0, 8.0], 48, spec)
    names = {c.name: c for c in report.checks}
    assert names["curve-decay"].passed
    assert report.curve.sites[-1] == (2,)
    assert report.passed


@pytest.mark.slow
def test_light_cone_report_two_dimensions(square):
    report = verify_light_cone(
        square, [0.0, 1.0, 2.0, 4.0], 24, QuadratureSpec(), curve_times=geometric_times(10.0, 100.0, 25)
    )
    assert report.passed
