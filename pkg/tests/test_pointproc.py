import numpy as np
import pytest

from grainlab.errors import ArgumentError, DomainError, ModelValidationError, UnsupportedModelError
from grainlab.geometry import Window
from grainlab.pointproc import (
    BinomialGerms,
    ConstantIntensity,
    Dirac,
    DiscreteMixture,
    MaternClusterGerms,
    OneGrainGerms,
    PoissonGerms,
    UniformLength,
    attach_marks,
    campbell_check,
    intensity_at,
    linear_intensity,
    poisson_count_gof,
    sample_germs,
    second_moment_at,
    second_moment_check,
    step_intensity,
)

W = Window((0.0, 0.0), (10.0, 10.0))
SEED = 20240521


def _tilted(points):
    return 1.0 + points[:, 0] / 10.0


def _assert_campbell(check, sigmas=4.0):
    assert abs(check.mc_mean - check.integral) <= sigmas * check.stderr + 1e-9 * abs(check.integral)


@pytest.mark.parametrize("law", [
    PoissonGerms(0.3),
    PoissonGerms(linear_intensity(0.1, [0.02, 0.0], bound=0.3)),
    BinomialGerms(25),
    MaternClusterGerms(0.05, 3.0, 1.0),
    OneGrainGerms(),
], ids=["poisson", "linear-poisson", "binomial", "matern", "one-grain"])
def test_campbell_identity(law):
    check = campbell_check(law, W, _tilted, replications=20_000, rng_seed=SEED, chunk_size=2048)
    _assert_campbell(check)


def test_campbell_integral_of_constant_is_mean_count():
    check = campbell_check(BinomialGerms(25), W, lambda pts: np.ones(len(pts)), 100, SEED)
    assert check.integral == pytest.approx(25.0)
    assert check.mc_mean == 25.0
    assert check.stderr == 0.0


def test_binomial_second_moment():
    law = BinomialGerms(10)
    a = Window((0.0, 0.0), (5.0, 5.0))
    b = Window((5.0, 0.0), (10.0, 5.0))
    check = second_moment_check(law, W, a, b, replications=20_000, rng_seed=SEED)
    assert check.integral == pytest.approx(10 * 9 * 0.25 ** 2)
    _assert_campbell(check)
    assert second_moment_at(law, W, (1.0, 1.0), (2.0, 2.0)) == pytest.approx(0.9 / 100.0)


def test_matern_second_moment():
    law = MaternClusterGerms(0.5, 3.0, 1.0)
    window = Window((0.0, 0.0), (4.0, 4.0))
    a = Window((1.0, 1.0), (2.0, 2.0))
    b = Window((2.0, 1.0), (3.0, 2.0))
    check = second_moment_check(law, window, a, b, replications=20_000, rng_seed=SEED)
    # Clustering pushes the pair density above the Poisson value (alpha m)^2.
    assert check.integral > (0.5 * 3.0) ** 2
    _assert_campbell(check)


def test_second_moment_needs_disjoint_boxes():
    a = Window((0.0, 0.0), (5.0, 5.0))
    with pytest.raises(ArgumentError):
        second_moment_check(BinomialGerms(5), W, a, Window((4.0, 0.0), (6.0, 5.0)), 10, SEED)


def test_one_grain_has_no_pairs():
    assert second_moment_at(OneGrainGerms(), W, (1.0, 1.0), (9.0, 9.0)) == 0.0


def test_poisson_counts_fit():
    fit = poisson_count_gof(PoissonGerms(0.05), W, replications=5_000, rng_seed=SEED)
    assert fit.dof >= 2
    assert fit.pvalue > 0.001


def test_count_fit_needs_constant_poisson():
    with pytest.raises(UnsupportedModelError):
        poisson_count_gof(BinomialGerms(5), W, 100, SEED)


def test_intensity_at():
    assert intensity_at(PoissonGerms(0.3), W, (5.0, 5.0)) == pytest.approx(0.3)
    assert intensity_at(BinomialGerms(25), W, (5.0, 5.0)) == pytest.approx(0.25)
    assert intensity_at(MaternClusterGerms(0.05, 3.0, 1.0), W, (5.0, 5.0)) == pytest.approx(0.15)
    assert intensity_at(OneGrainGerms(), W, (5.0, 5.0)) == pytest.approx(0.01)
    step = PoissonGerms(step_intensity(0.1, 0.4, split=5.0))
    assert intensity_at(step, W, (2.0, 5.0)) == pytest.approx(0.1)
    assert intensity_at(step, W, (7.0, 5.0)) == pytest.approx(0.4)
    with pytest.raises(DomainError):
        intensity_at(PoissonGerms(0.3), W, (11.0, 5.0))


def test_sample_germs_is_deterministic():
    law = PoissonGerms(0.3)
    first = sample_germs(law, W, SEED)
    assert np.array_equal(first, sample_germs(law, W, SEED))
    assert not np.array_equal(first, sample_germs(law, W, SEED + 1))
    assert W.contains(first).all()


def test_sample_germs_in_region():
    region = Window((2.0, 2.0), (4.0, 4.0))
    points = sample_germs(PoissonGerms(5.0), W, SEED, region=region)
    assert len(points) > 0
    assert region.contains(points).all()


def test_binomial_sample_has_m_points():
    assert len(sample_germs(BinomialGerms(25), W, SEED)) == 25


def test_thinning_rejects_understated_bound():
    law = PoissonGerms(linear_intensity(0.05, [0.02, 0.0], bound=0.1))
    with pytest.raises(ModelValidationError, match="A2"):
        sample_germs(law, W, SEED)


def test_matern_is_planar():
    with pytest.raises(ModelValidationError):
        sample_germs(MaternClusterGerms(0.05, 3.0, 1.0), Window((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)), SEED)


def test_attach_marks_keeps_prefix_marks():
    points = np.arange(20.0).reshape(10, 2)
    q = UniformLength(1.0, 3.0)
    short = attach_marks(points[:4], q, SEED)
    full = attach_marks(points, q, SEED)
    for (p, m), (p_full, m_full) in zip(short, full):
        assert np.array_equal(p, p_full)
        assert np.array_equal(m, m_full)
    lengths = np.array([m[0] for _, m in full])
    assert np.all((lengths >= 1.0) & (lengths <= 3.0))


def test_mark_distributions():
    rng = np.random.default_rng(0)
    assert Dirac([2.0, 0.5]).sample(rng, 3).shape == (3, 2)
    nodes, weights = UniformLength(1.0, 3.0).quadrature(8)
    assert len(nodes) == 64
    assert weights.sum() == pytest.approx(1.0)
    fixed_nodes, _ = UniformLength(1.0, 3.0, angle=0.2).quadrature(8)
    assert np.all(fixed_nodes[:, 1] == 0.2)
    with pytest.raises(ArgumentError):
        DiscreteMixture([[1.0], [2.0]], [0.5, 0.6])
    with pytest.raises(ArgumentError):
        UniformLength(3.0, 1.0)


def test_intensity_specs_validate():
    with pytest.raises(ArgumentError):
        ConstantIntensity(-1.0)
    with pytest.raises(ArgumentError):
        step_intensity(-0.1, 0.2, split=1.0)
    assert step_intensity(0.1, 0.4, split=1.0).bound == 0.4
    tilted = linear_intensity(0.1, [0.01, 0.0], bound=0.3)
    assert tilted.evaluate(np.array([[-20.0, 0.0], [10.0, 0.0]])) == pytest.approx([0.0, 0.2])
