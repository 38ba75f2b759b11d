import math

import numpy as np
import pytest

from grainlab.density import (
    DEFAULT_RADII,
    EstimatorSchedule,
    RatioCurve,
    Tolerance,
    boolean_hitting_theoretical,
    cell_centres,
    convergence_study,
    coverage_curves,
    covering_mass,
    density_ratio,
    empirical_capacity,
    estimator_study,
    extrapolate_to_zero,
    hitting_probability,
    integrated_density,
    lambda_hat,
    mean_minkowski_content,
    nearest_grain_distances,
    overlap_decay,
    theoretical_density,
    weak_form_average,
)
from grainlab.errors import ArgumentError, UnsupportedModelError, UnsupportedShapeError
from grainlab.geometry import Disc, Grain, Segment, Window
from grainlab.germgrain import (
    CircleFamily,
    GermGrainModel,
    SegmentFamily,
    measure_in_region,
    query_region,
    realize_batch,
)
from grainlab.pointproc import Dirac, OneGrainGerms, PoissonGerms, linear_intensity

SEED = 20240521
CENTRE = (10.0, 10.0)


# --- Theory ---

def test_theoretical_density_of_reference_models(segment_boolean, binomial_segments, matern_segments,
                                                 onegrain_circle):
    assert theoretical_density(segment_boolean, CENTRE) == pytest.approx(0.2)
    assert theoretical_density(binomial_segments, CENTRE) == pytest.approx(0.2)
    assert theoretical_density(matern_segments, CENTRE) == pytest.approx(0.2)
    assert theoretical_density(onegrain_circle, (5.0, 5.0)) == pytest.approx(2.0 * math.pi / 100.0)


def test_inhomogeneous_density_follows_the_intensity():
    window = Window((0.0, 0.0), (20.0, 20.0))
    model = GermGrainModel(PoissonGerms(linear_intensity(0.05, [0.01, 0.0], bound=0.3)), window,
                           Dirac([2.0, 0.0]), SegmentFamily())
    assert theoretical_density(model, CENTRE) == pytest.approx(2.0 * 0.15)
    assert theoretical_density(model, (15.0, 5.0)) == pytest.approx(2.0 * 0.2)


def test_integrated_density_of_stationary_model(segment_boolean):
    region = Window((8.0, 8.0), (12.0, 12.0))
    assert integrated_density(segment_boolean, region) == pytest.approx(0.2 * 16.0)


def test_covering_mass(segment_boolean, disc_boolean):
    assert covering_mass(disc_boolean, CENTRE, 0.0) == pytest.approx(0.05 * math.pi)
    assert covering_mass(disc_boolean, CENTRE, 0.5) == pytest.approx(0.05 * math.pi * 1.5 ** 2)
    assert covering_mass(segment_boolean, CENTRE, 0.0) == 0.0
    assert covering_mass(segment_boolean, CENTRE, 0.1) == pytest.approx(0.1 * (0.4 + math.pi * 0.01))
    with pytest.raises(ArgumentError):
        covering_mass(disc_boolean, CENTRE, -1.0)


def test_boolean_hitting_theory(segment_boolean, binomial_segments):
    expected = -math.expm1(-0.1 * (4.0 * 0.08 + math.pi * 0.08 ** 2))
    assert boolean_hitting_theoretical(segment_boolean, CENTRE, 0.08) == pytest.approx(expected)
    with pytest.raises(UnsupportedModelError):
        boolean_hitting_theoretical(binomial_segments, CENTRE, 0.08)


# --- Extrapolation and tolerances ---

def test_extrapolation_coefficients():
    radii = (0.04, 0.02, 0.01)
    fit = extrapolate_to_zero(radii, [0.2 + 0.5 * r for r in radii], [0.01, 0.02, 0.03])
    assert fit.value == pytest.approx(0.2)
    assert fit.slope == pytest.approx(0.5)
    assert fit.residual == pytest.approx(0.0, abs=1e-12)
    assert fit.coefficients == pytest.approx((-0.5, 0.5, 1.0))
    assert fit.stderr == pytest.approx(0.5 * 0.01 + 0.5 * 0.02 + 0.03)


def test_single_radius_extrapolation_is_the_value():
    fit = extrapolate_to_zero([0.01], [0.3], [0.02])
    assert (fit.value, fit.stderr) == (0.3, 0.02)


def test_ratio_curve_radii_must_decrease():
    with pytest.raises(ArgumentError):
        RatioCurve(((0.01, 1.0, 0.0), (0.02, 1.0, 0.0)))
    curve = RatioCurve(((0.04, 1.2, 0.1), (0.02, 1.1, 0.1), (0.01, 1.05, 0.1)))
    assert curve.extrapolate().value == pytest.approx(1.0)


def test_tolerance_band():
    tolerance = Tolerance(relative=0.05, sigmas=4.0)
    assert tolerance.bound(0.2, 0.001) == pytest.approx(0.01)
    assert tolerance.bound(0.2, 0.01) == pytest.approx(0.04)
    assert tolerance.accepts(0.21, 0.2, 0.001)
    assert not tolerance.accepts(0.25, 0.2, 0.001)


def test_estimator_schedule_limits():
    schedule = EstimatorSchedule(0.5, 0.25, (1000, 10000, 100000), repeats=10)
    schedule.validate(1)
    assert schedule.radius(10000) == pytest.approx(0.05)
    with pytest.raises(ArgumentError):
        EstimatorSchedule(0.5, 1.0, (1000,)).validate(1)
    with pytest.raises(ArgumentError):
        EstimatorSchedule(0.5, 0.25, (1000, 100)).validate(1)
    # Full-dimensional grains only need R_N -> 0.
    EstimatorSchedule(0.5, 3.0, (1000,)).validate(0)


def test_cell_centres():
    centres = cell_centres(Window((0.0, 0.0), (2.0, 2.0)), 2)
    assert sorted(map(tuple, centres)) == [(0.5, 0.5), (0.5, 1.5), (1.5, 0.5), (1.5, 1.5)]


# --- Estimators ---

def test_lambda_hat_is_normalized_capacity(segment_boolean):
    radius = 0.3
    realizations = realize_batch(segment_boolean, SEED, 2_000, query_region(CENTRE, radius))
    probe = Grain(CENTRE, Disc(radius))
    assert lambda_hat(realizations, CENTRE, radius) == pytest.approx(
        empirical_capacity(realizations, probe) / (2.0 * radius))


def test_engine_matches_lambda_hat_over_realizations(segment_boolean):
    radius, n = 0.25, 3_000
    realizations = realize_batch(segment_boolean, SEED, n, query_region(CENTRE, radius), chunk_size=1_000)
    cover = nearest_grain_distances(segment_boolean, CENTRE, radius, n, SEED, chunk_size=1_000)
    engine = np.count_nonzero(cover.nearest <= radius) / n / (2.0 * radius)
    assert engine == pytest.approx(lambda_hat(realizations, CENTRE, radius), rel=1e-12)


def test_capacity_probes(segment_boolean):
    realizations = realize_batch(segment_boolean, SEED, 50)
    everything = Window((-5.0, -5.0), (25.0, 25.0))
    assert empirical_capacity(realizations, everything) == pytest.approx(
        np.mean([len(r) > 0 for r in realizations]))
    with pytest.raises(UnsupportedShapeError):
        empirical_capacity(realizations, Grain(CENTRE, Segment(1.0)))
    with pytest.raises(ArgumentError):
        empirical_capacity([], everything)


def test_estimator_study_rows(segment_boolean):
    schedule = EstimatorSchedule(0.5, 0.25, (1_000, 10_000), repeats=2)
    rows = estimator_study(segment_boolean, CENTRE, schedule, SEED)
    assert [row.n for row in rows] == [1_000, 10_000]
    assert rows[0].radius == pytest.approx(0.5 * 1_000 ** -0.25)
    assert all(row.stderr >= 0 and row.abs_error >= 0 for row in rows)


def test_estimator_is_consistent(segment_boolean):
    schedule = EstimatorSchedule(0.5, 0.25, (1_000, 10_000, 100_000), repeats=5)
    rows = estimator_study(segment_boolean, CENTRE, schedule, SEED)
    first, last = rows[0], rows[-1]
    assert last.radius == pytest.approx(0.5 * 100_000 ** -0.25)
    assert last.abs_error <= first.abs_error
    assert last.abs_error < 0.1 * 0.2
    assert Tolerance().accepts(last.estimate, 0.2, last.stderr)


# --- Monte Carlo ---

def test_density_ratio_needs_positive_radius(segment_boolean):
    with pytest.raises(ArgumentError):
        density_ratio(segment_boolean, CENTRE, 0.0, 10, SEED)


def test_hitting_probability_at_zero_radius(disc_boolean):
    estimate = hitting_probability(disc_boolean, CENTRE, 0.0, 20_000, SEED)
    expected = -math.expm1(-0.05 * math.pi)
    assert abs(estimate.value - expected) <= 4.0 * estimate.stderr


def test_hitting_probability_matches_capacity(segment_boolean):
    estimate = hitting_probability(segment_boolean, CENTRE, 0.08, 200_000, SEED)
    expected = boolean_hitting_theoretical(segment_boolean, CENTRE, 0.08)
    assert Tolerance().accepts(estimate.value, expected, estimate.stderr)


def test_single_pass_curves_match_standalone_studies(segment_boolean):
    curves = coverage_curves(segment_boolean, CENTRE, DEFAULT_RADII, 20_000, SEED, chunk_size=4_096)
    ratio = convergence_study(segment_boolean, CENTRE, DEFAULT_RADII, 20_000, SEED, chunk_size=4_096)
    overlap = overlap_decay(segment_boolean, CENTRE, DEFAULT_RADII, 20_000, SEED, chunk_size=4_096)
    assert curves.ratio == ratio
    assert curves.overlap == overlap
    assert [h.radius for h in curves.hitting] == list(DEFAULT_RADII)


@pytest.mark.parametrize("fixture", ["segment_boolean", "binomial_segments", "matern_segments"])
def test_density_ratio_converges(fixture, request):
    model = request.getfixturevalue(fixture)
    curve = convergence_study(model, CENTRE, DEFAULT_RADII, 200_000, SEED)
    fit = curve.extrapolate()
    assert Tolerance().accepts(fit.value, 0.2, fit.stderr)


@pytest.mark.parametrize("point", [(3.5, 16.0), (13.0, 6.5), (0.3, 10.0), (19.8, 19.8)])
def test_density_ratio_converges_away_from_the_centre(segment_boolean, point):
    curve = convergence_study(segment_boolean, point, DEFAULT_RADII, 200_000, SEED)
    fit = curve.extrapolate()
    theory = theoretical_density(segment_boolean, point)
    assert theory == pytest.approx(0.2)
    assert Tolerance().accepts(fit.value, theory, fit.stderr)


def test_inhomogeneous_density_ratio_follows_the_intensity():
    window = Window((0.0, 0.0), (20.0, 20.0))
    model = GermGrainModel(PoissonGerms(linear_intensity(0.05, [0.01, 0.0], bound=0.3)), window,
                           Dirac([2.0, 0.0]), SegmentFamily())
    point = (16.0, 4.0)
    curve = convergence_study(model, point, DEFAULT_RADII, 200_000, SEED)
    fit = curve.extrapolate()
    assert Tolerance().accepts(fit.value, theoretical_density(model, point), fit.stderr)


@pytest.mark.parametrize("fixture, region", [
    ("segment_boolean", Window((8.0, 8.0), (12.0, 12.0))),
    ("onegrain_circle", Window((3.0, 3.0), (7.0, 7.0))),
])
def test_mean_measure_in_region_matches_integrated_density(fixture, region, request):
    model = request.getfixturevalue(fixture)
    realizations = realize_batch(model, SEED, 4_000, region)
    values = np.array([measure_in_region(real, region, 0.01).value for real in realizations])
    mean, stderr = values.mean(), values.std(ddof=1) / math.sqrt(len(values))
    assert abs(mean - integrated_density(model, region)) <= 4.0 * stderr


@pytest.mark.slow
@pytest.mark.parametrize("fixture", ["segment_boolean", "matern_segments"])
def test_overlap_ratio_decays(fixture, request):
    model = request.getfixturevalue(fixture)
    curve = overlap_decay(model, CENTRE, DEFAULT_RADII, 1_000_000, SEED, workers=4)
    assert curve.radii[0] == 0.08 and curve.radii[-1] == 0.01
    assert curve.values[0] > 0
    assert curve.values[-1] <= 0.25 * curve.values[0]


def test_weak_form_average(segment_boolean):
    box = Window((8.0, 8.0), (12.0, 12.0))
    average = weak_form_average(segment_boolean, box, 2, 0.01, 100_000, SEED)
    assert average.points == 4
    assert average.theory == pytest.approx(0.2)
    assert Tolerance().accepts(average.estimate, average.theory, average.stderr)


def test_minkowski_content_of_one_circle():
    model = GermGrainModel(OneGrainGerms(), Window((0.0, 0.0), (1.0, 1.0)), Dirac([1.0]), CircleFamily())
    region = Window((-1.5, -1.5), (2.5, 2.5))
    curve = mean_minkowski_content(model, region, (0.08, 0.04, 0.02), 8, SEED, resolution=1024)
    assert curve.extrapolate().value == pytest.approx(2.0 * math.pi, rel=0.03)


@pytest.mark.slow
def test_segment_boolean_density_at_catalog_scale(segment_boolean):
    curve = convergence_study(segment_boolean, CENTRE, DEFAULT_RADII, 1_000_000, SEED, workers=4)
    fit = curve.extrapolate()
    assert Tolerance().accepts(fit.value, 0.2, fit.stderr)
    assert abs(fit.value - 0.2) <= 0.01
