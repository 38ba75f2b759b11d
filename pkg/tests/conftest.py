import pytest

from grainlab.geometry import Window
from grainlab.germgrain import CircleFamily, DiscFamily, GermGrainModel, SegmentFamily, WhiskerDiscFamily
from grainlab.pointproc import BinomialGerms, Dirac, MaternClusterGerms, OneGrainGerms, PoissonGerms

PLANE_20 = Window((0.0, 0.0), (20.0, 20.0))
PLANE_10 = Window((0.0, 0.0), (10.0, 10.0))


@pytest.fixture
def segment_boolean():
    return GermGrainModel(PoissonGerms(0.1), PLANE_20, Dirac([2.0, 0.0]), SegmentFamily(), name="segment_boolean")


@pytest.fixture
def binomial_segments():
    return GermGrainModel(BinomialGerms(40), PLANE_20, Dirac([2.0, 0.7]), SegmentFamily())


@pytest.fixture
def matern_segments():
    return GermGrainModel(MaternClusterGerms(0.05, 2.0, 1.0), PLANE_20, Dirac([2.0, 0.0]), SegmentFamily())


@pytest.fixture
def disc_boolean():
    return GermGrainModel(PoissonGerms(0.05), PLANE_20, Dirac([1.0]), DiscFamily())


@pytest.fixture
def onegrain_circle():
    return GermGrainModel(OneGrainGerms(), PLANE_10, Dirac([1.0]), CircleFamily())


@pytest.fixture
def onegrain_disc():
    return GermGrainModel(OneGrainGerms(), PLANE_10, Dirac([1.0]), DiscFamily())


@pytest.fixture
def disc_whisker():
    return GermGrainModel(OneGrainGerms(), Window((0.0, 0.0), (1.0, 1.0)), Dirac([1.0, 0.5, 0.3]),
                          WhiskerDiscFamily())


@pytest.fixture
def settings(tmp_path, monkeypatch):
    """Settings backed by a scratch file, with no output directory override."""
    from config_manager import OUTPUT_DIR_ENV, ConfigManager

    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    return ConfigManager(config_path=str(tmp_path / "settings.json"))
