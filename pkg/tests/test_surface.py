import math

import pytest

from grainlab.density import Tolerance, theoretical_density
from grainlab.errors import ArgumentError, IllConditionedError, UnsupportedModelError
from grainlab.geometry import Window
from grainlab.germgrain import DiscFamily, GermGrainModel
from grainlab.pointproc import Dirac, PoissonGerms
from grainlab.surface import (
    ContactCurve,
    annulus_probability,
    boolean_specific_area_theoretical,
    boundary_bracket,
    boundary_density_theoretical,
    contact_derivative_at_zero,
    contact_derivative_stderr,
    contact_derivative_theoretical,
    contact_distribution,
    expected_outer_content,
    mean_outer_content,
    onegrain_specific_area_theoretical,
    specific_area,
    void_probability,
)

SEED = 20240521
CENTRE = (10.0, 10.0)
DISC_BOOLEAN_SIGMA = math.exp(-0.05 * math.pi) * 0.1 * math.pi


# --- Theory ---

def test_boolean_disc_specific_area(disc_boolean):
    assert void_probability(disc_boolean, CENTRE) == pytest.approx(math.exp(-0.05 * math.pi))
    assert boolean_specific_area_theoretical(disc_boolean, CENTRE) == pytest.approx(DISC_BOOLEAN_SIGMA)
    assert DISC_BOOLEAN_SIGMA == pytest.approx(0.2685, abs=1e-4)
    assert contact_derivative_theoretical(disc_boolean, CENTRE) == pytest.approx(0.1 * math.pi)


def test_onegrain_disc_contact_derivative(onegrain_disc):
    assert void_probability(onegrain_disc, (5.0, 5.0)) == pytest.approx(1.0 - math.pi / 100.0)
    assert contact_derivative_theoretical(onegrain_disc, (5.0, 5.0)) == pytest.approx(
        2.0 * math.pi / (100.0 - math.pi))


def test_curve_grains_have_twice_the_density_as_surface(segment_boolean, onegrain_circle):
    assert boolean_specific_area_theoretical(segment_boolean, CENTRE) == pytest.approx(
        2.0 * theoretical_density(segment_boolean, CENTRE))
    assert onegrain_specific_area_theoretical(onegrain_circle, (5.0, 5.0)) == pytest.approx(
        2.0 * theoretical_density(onegrain_circle, (5.0, 5.0)))


def test_boundary_density_parts(disc_boolean, segment_boolean):
    void = math.exp(-0.05 * math.pi)
    assert boundary_density_theoretical(disc_boolean, CENTRE, part="essential") == pytest.approx(void * 0.1 * math.pi)
    assert boundary_density_theoretical(disc_boolean, CENTRE, part="whisker") == 0.0
    assert boundary_density_theoretical(segment_boolean, CENTRE, part="whisker") == pytest.approx(0.2)
    assert boundary_bracket(segment_boolean, CENTRE) == pytest.approx(0.4)
    with pytest.raises(ArgumentError):
        boundary_density_theoretical(disc_boolean, CENTRE, part="interior")


def test_whisker_counts_twice_in_outer_content(disc_whisker, disc_boolean):
    assert expected_outer_content(disc_whisker) == pytest.approx(2.0 * math.pi + 1.0)
    with pytest.raises(UnsupportedModelError):
        expected_outer_content(disc_boolean)


def test_formulas_reject_other_germ_laws(matern_segments, disc_boolean):
    with pytest.raises(UnsupportedModelError):
        void_probability(matern_segments, CENTRE)
    with pytest.raises(UnsupportedModelError):
        contact_derivative_theoretical(matern_segments, CENTRE)
    with pytest.raises(UnsupportedModelError):
        onegrain_specific_area_theoretical(disc_boolean, CENTRE)


# --- Contact curves ---

def test_contact_curve_radii_must_increase():
    with pytest.raises(ArgumentError):
        ContactCurve(((0.02, 0.1, 0.0), (0.01, 0.05, 0.0)), conditioning=0.9)


def test_contact_derivative_is_weighted_slope():
    curve = ContactCurve(((0.0, 0.0, 0.0), (0.01, 0.02, 0.001), (0.02, 0.04, 0.001), (0.04, 0.08, 0.002)),
                         conditioning=0.9)
    assert contact_derivative_at_zero(curve) == pytest.approx(2.0)
    assert contact_derivative_stderr(curve) == pytest.approx(0.004 / 0.07)
    with pytest.raises(ArgumentError):
        contact_derivative_at_zero(ContactCurve(((0.01, 0.02, 0.0), (0.02, 0.04, 0.0)), conditioning=0.9))


def test_dense_model_is_ill_conditioned():
    dense = GermGrainModel(PoissonGerms(2.0), Window((0.0, 0.0), (20.0, 20.0)), Dirac([1.0]), DiscFamily())
    with pytest.raises(IllConditionedError):
        contact_distribution(dense, CENTRE, (0.01, 0.02, 0.04), 2_000, SEED)


def test_onegrain_contact_distribution(onegrain_disc):
    radii = (0.01, 0.02, 0.04, 0.08)
    curve = contact_distribution(onegrain_disc, (5.0, 5.0), radii, 500_000, SEED)
    assert list(curve.radii) == list(radii)
    assert all(a <= b for a, b in zip(curve.values, curve.values[1:]))
    assert curve.conditioning == pytest.approx(1.0 - math.pi / 100.0, abs=4.0 * curve.conditioning_stderr)
    estimate = contact_derivative_at_zero(curve)
    reference = contact_derivative_theoretical(onegrain_disc, (5.0, 5.0))
    assert Tolerance().accepts(estimate, reference, contact_derivative_stderr(curve))


def test_boolean_disc_contact_distribution(disc_boolean):
    radii = (0.01, 0.02, 0.04, 0.08)
    curve = contact_distribution(disc_boolean, CENTRE, radii, 500_000, SEED)
    assert all(a <= b for a, b in zip(curve.values, curve.values[1:]))
    assert curve.conditioning == pytest.approx(math.exp(-0.05 * math.pi), abs=4.0 * curve.conditioning_stderr)
    for r, h in zip(radii, curve.values):
        expected = -math.expm1(-0.05 * math.pi * (2.0 * r + r * r))
        assert abs(h - expected) <= 4.0 * math.sqrt(expected / (curve.conditioning * curve.replications))
    estimate = contact_derivative_at_zero(curve)
    reference = contact_derivative_theoretical(disc_boolean, CENTRE)
    assert reference == pytest.approx(0.1 * math.pi)
    assert Tolerance().accepts(estimate, reference, contact_derivative_stderr(curve))


# --- Specific area and outer content by simulation ---

def test_annulus_probability_of_boolean_discs(disc_boolean):
    estimate = annulus_probability(disc_boolean, CENTRE, 0.08, 200_000, SEED)
    expected = math.exp(-0.05 * math.pi) - math.exp(-0.05 * math.pi * 1.08 ** 2)
    assert abs(estimate.value - expected) <= 4.0 * estimate.stderr
    with pytest.raises(ArgumentError):
        annulus_probability(disc_boolean, CENTRE, 0.0, 10, SEED)


def test_specific_area_of_boolean_discs(disc_boolean):
    result = specific_area(disc_boolean, CENTRE, (0.08, 0.04, 0.02, 0.01), 200_000, SEED)
    assert len(result.curve) == 4
    assert Tolerance().accepts(result.extrapolated, DISC_BOOLEAN_SIGMA, result.stderr)


def test_specific_area_needs_decreasing_radii(disc_boolean):
    with pytest.raises(ArgumentError):
        specific_area(disc_boolean, CENTRE, (0.01, 0.02), 10, SEED)


def test_outer_content_needs_full_dimensional_grains(segment_boolean):
    with pytest.raises(UnsupportedModelError):
        mean_outer_content(segment_boolean, Window((8.0, 8.0), (12.0, 12.0)), (0.04, 0.02), 2, SEED)


@pytest.mark.slow
def test_disc_whisker_outer_content_at_catalog_scale(disc_whisker):
    region = Window((-2.0, -2.0), (3.0, 3.0))
    curve = mean_outer_content(disc_whisker, region, (0.08, 0.04, 0.02), 20, SEED, resolution=2048)
    fit = curve.extrapolate()
    assert Tolerance(relative=0.03).accepts(fit.value, 2.0 * math.pi + 1.0, fit.stderr)
