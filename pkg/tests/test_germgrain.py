import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grainlab.errors import ArgumentError, ModelValidationError
from grainlab.geometry import Polyline, Window
from grainlab.germgrain import (
    BallFamily,
    CircleFamily,
    DiscFamily,
    GermGrainModel,
    LengthCutoff,
    PolylineFamily,
    Realization,
    SegmentFamily,
    WhiskerDiscFamily,
    covering_count,
    covers,
    envelope_check,
    measure_in_region,
    meets_box,
    pair_cover_count,
    query_region,
    realize,
    realize_batch,
)
from grainlab.pointproc import Dirac, MaternClusterGerms, PoissonGerms, UniformLength

PLANE_20 = Window((0.0, 0.0), (20.0, 20.0))

SEED = 20240521


def _segments(*rows):
    marks = np.array([[length, angle] for _, _, length, angle in rows], dtype=float)
    germs = np.array([[x, y] for x, y, _, _ in rows], dtype=float)
    return Realization(germs, marks, SegmentFamily())


# --- Model validation ---

def test_marks_must_fit_the_family():
    with pytest.raises(ModelValidationError):
        GermGrainModel(PoissonGerms(0.1), PLANE_20, Dirac([1.0]), SegmentFamily())


def test_family_dimension_must_match_window():
    with pytest.raises(ModelValidationError):
        GermGrainModel(PoissonGerms(0.1), PLANE_20, Dirac([1.0]), BallFamily())


def test_matern_germs_are_planar():
    cube = Window((0.0, 0.0, 0.0), (5.0, 5.0, 5.0))
    with pytest.raises(ModelValidationError, match="planar"):
        GermGrainModel(MaternClusterGerms(0.05, 2.0, 1.0), cube, Dirac([1.0]), BallFamily())


def test_length_cutoff_needs_segments():
    with pytest.raises(ModelValidationError):
        GermGrainModel(PoissonGerms(0.1), PLANE_20, Dirac([1.0]), DiscFamily(), LengthCutoff(1.0, [0.0, 0.0]))


def test_polyline_template_needs_vertex_on_germ():
    with pytest.raises(ModelValidationError):
        PolylineFamily(Polyline.centered([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]))
    family = PolylineFamily(Polyline([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]))
    assert family.build([math.pi / 2]).hausdorff_measure() == pytest.approx(2.0)


def test_model_geometry(segment_boolean, disc_whisker):
    assert segment_boolean.codim == 1
    assert segment_boolean.is_boolean and not segment_boolean.is_one_grain
    assert segment_boolean.max_bounding_radius == 1.0
    assert segment_boolean.sampling_window == PLANE_20.dilate(1.0)
    assert disc_whisker.codim == 0
    assert disc_whisker.max_bounding_radius == pytest.approx(1.5)
    # One-grain germs stay in the window.
    assert disc_whisker.sampling_window == disc_whisker.window


def test_fingerprint_tracks_the_description(segment_boolean):
    same = GermGrainModel(PoissonGerms(0.1), PLANE_20, Dirac([2.0, 0.0]), SegmentFamily(), name="segment_boolean")
    other = GermGrainModel(PoissonGerms(0.2), PLANE_20, Dirac([2.0, 0.0]), SegmentFamily(), name="segment_boolean")
    assert same.fingerprint == segment_boolean.fingerprint
    assert other.fingerprint != segment_boolean.fingerprint


def test_modulation_thins_long_segments():
    model = GermGrainModel(PoissonGerms(0.1), PLANE_20, UniformLength(1.0, 3.0, angle=None), SegmentFamily(),
                           LengthCutoff(1.5, [0.05, 0.0]))
    real = realize(model, SEED)
    assert len(real) > 0
    assert np.all(real.marks[:, 0] <= 1.5 + 0.05 * real.germs[:, 0])


# --- Realizations ---

def test_realize_is_deterministic(segment_boolean):
    a = realize(segment_boolean, SEED)
    b = realize(segment_boolean, SEED)
    assert np.array_equal(a.germs, b.germs)
    assert np.array_equal(a.marks, b.marks)
    assert a.fingerprint == segment_boolean.fingerprint
    assert segment_boolean.sampling_window.contains(a.germs).all()


def test_realize_batch_indices(segment_boolean):
    batch = realize_batch(segment_boolean, SEED, 10, chunk_size=4)
    assert [r.index for r in batch] == list(range(10))
    assert all(r.seed == SEED for r in batch)


def test_region_keeps_grains_that_can_reach_it(segment_boolean):
    region = query_region((10.0, 10.0), 0.5)
    real = realize(segment_boolean, SEED, region)
    reach = region.dilate(segment_boolean.max_bounding_radius)
    assert reach.contains(real.germs).all()


def test_grain_records(disc_whisker):
    real = realize(disc_whisker, SEED)
    records = real.grain_records()
    assert len(records) == 1
    assert records[0]["shape"] == "disc_whisker"
    assert records[0]["seed"] == SEED


# --- Coverage ---

@settings(max_examples=40, deadline=None)
@given(
    x=st.floats(min_value=0.0, max_value=20.0),
    y=st.floats(min_value=0.0, max_value=20.0),
    r=st.floats(min_value=0.0, max_value=3.0),
)
def test_pruned_count_matches_full_scan(x, y, r):
    model = GermGrainModel(PoissonGerms(0.3), PLANE_20, UniformLength(0.5, 3.0), SegmentFamily())
    real = realize(model, SEED)
    assert covering_count(real, (x, y), r) == covering_count(real, (x, y), r, prune=False)


def test_coverage_grows_with_radius(segment_boolean):
    real = realize(segment_boolean, SEED)
    counts = [covering_count(real, (10.0, 10.0), r) for r in (0.0, 0.5, 1.0, 2.0, 4.0)]
    assert counts == sorted(counts)


def test_coverage_of_known_segments():
    real = _segments((0.0, 0.0, 2.0, 0.0), (0.0, 0.5, 2.0, 0.0))
    assert covers(real, (0.5, 0.0), 0.0)
    assert covering_count(real, (0.5, 0.2), 0.35) == 2
    assert pair_cover_count(real, (0.5, 0.2), 0.35) == 1
    assert not covers(real, (3.0, 0.0), 1.0)
    with pytest.raises(ArgumentError):
        covering_count(real, (0.0, 0.0), -0.1)


def test_meets_box():
    real = _segments((5.0, 5.0, 2.0, 0.0))
    assert meets_box(real, (5.5, 4.5), (7.0, 5.5))
    assert not meets_box(real, (5.5, 5.1), (7.0, 6.0))
    assert not meets_box(Realization(np.zeros((0, 2)), np.zeros((0, 2)), SegmentFamily()), (0, 0), (1, 1))


# --- Measure in a region ---

def test_measure_counts_coincident_segments_once():
    real = _segments((5.0, 5.0, 2.0, 0.0), (5.0, 5.0, 2.0, 0.0))
    measure = measure_in_region(real, Window((0.0, 0.0), (10.0, 10.0)), 0.01)
    assert measure.value == pytest.approx(2.0)
    assert measure.overlap_pairs == 1
    assert measure.overlap_measure == pytest.approx(2.0)


def test_measure_counts_three_coincident_segments_once():
    real = _segments((5.0, 5.0, 2.0, 0.0), (5.0, 5.0, 2.0, 0.0), (5.0, 5.0, 2.0, 0.0))
    measure = measure_in_region(real, Window((0.0, 0.0), (10.0, 10.0)), 0.01)
    assert measure.value == pytest.approx(2.0)
    assert measure.overlap_pairs == 3
    assert measure.overlap_measure == pytest.approx(4.0)


def test_measure_of_partly_overlapping_collinear_segments():
    real = _segments((5.0, 5.0, 2.0, 0.0), (6.0, 5.0, 2.0, 0.0), (6.5, 5.0, 2.0, math.pi))
    measure = measure_in_region(real, Window((0.0, 0.0), (10.0, 10.0)), 0.01)
    assert measure.value == pytest.approx(3.5)
    assert measure.overlap_pairs == 3
    assert measure.overlap_measure == pytest.approx(2.5)


def test_measure_counts_identical_circles_once():
    germs = np.array([[5.0, 5.0]] * 3 + [[5.5, 5.0]])
    real = Realization(germs, np.ones((4, 1)), CircleFamily())
    measure = measure_in_region(real, Window((0.0, 0.0), (10.0, 10.0)), 0.01)
    assert measure.value == pytest.approx(4.0 * math.pi, rel=1e-9)
    assert measure.overlap_pairs == 3
    assert measure.overlap_measure == pytest.approx(4.0 * math.pi, rel=1e-9)


def test_measure_clips_to_region():
    real = _segments((5.0, 5.0, 2.0, 0.0), (8.0, 8.0, 2.0, math.pi / 2))
    measure = measure_in_region(real, Window((5.0, 0.0), (10.0, 10.0)), 0.01)
    assert measure.value == pytest.approx(3.0)
    assert measure.overlap_pairs == 0
    assert measure.warnings == ()


def test_measure_of_disc_area():
    real = Realization(np.array([[5.0, 5.0]]), np.array([[1.0]]), DiscFamily())
    measure = measure_in_region(real, Window((3.0, 3.0), (7.0, 7.0)), 0.005)
    assert measure.value == pytest.approx(math.pi, rel=0.01)


def test_measure_needs_positive_tolerance():
    with pytest.raises(ArgumentError):
        measure_in_region(_segments((5.0, 5.0, 2.0, 0.0)), Window((0.0, 0.0), (10.0, 10.0)), 0.0)


# --- Envelopes ---

def test_envelope_check_passes_for_catalog_families(segment_boolean, disc_boolean, disc_whisker):
    for model in (segment_boolean, disc_boolean, disc_whisker):
        check = envelope_check(model, None, SEED)
        assert check.passed


def test_short_segments_are_extended():
    family = SegmentFamily(extend_short=True)
    envelope = family.envelope([0.5, 0.3])
    assert envelope.gamma == 1.0
    assert envelope.shape.hausdorff_measure() == 2.0
    assert SegmentFamily(extend_short=False).gamma_lower_bound(UniformLength(0.0, 3.0)) == 0.0


def test_whisker_envelope_contains_grain():
    envelope = WhiskerDiscFamily().envelope([1.0, 0.5, 0.3])
    assert envelope.shape.radius == pytest.approx(1.5)
    assert 0.0 < envelope.gamma <= 1.0
