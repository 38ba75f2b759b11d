"""
Reference models: ready-to-run configurations with known answers.

Each entry names the results it exercises so a catalog listing doubles as
a map of what the toolkit can check.
"""

import copy
from dataclasses import dataclass

PLANE_20 = {"lo": [0.0, 0.0], "hi": [20.0, 20.0]}
PLANE_10 = {"lo": [0.0, 0.0], "hi": [10.0, 10.0]}
DENSITY_RADII = [0.08, 0.04, 0.02, 0.01]

_SEGMENT_L2 = {"kind": "dirac", "mark": [2.0, 0.0]}
_SEGMENT_GRAINS = {"shape": "segment", "extend_short": True}


@dataclass(frozen=True)
class ReferenceModel:
    name: str
    description: str
    checks: tuple[str, ...]
    config: dict

    def run_config(self) -> dict:
        """A fresh copy of the run configuration, safe to modify."""
        return copy.deepcopy(self.config)


def _config(name, model, study, **extra) -> dict:
    config = {"name": name, "model": model, "study": study, "seed": 20240521}
    config.update(extra)
    return config


REFERENCE_MODELS = (
    ReferenceModel(
        "segment_boolean",
        "Stationary Boolean model of segments of length 2 with intensity 0.1 in the plane",
        ("density limit", "overlap decay", "capacity functional"),
        _config("segment_boolean",
                {"window": PLANE_20, "germs": {"law": "poisson", "intensity": 0.1},
                 "grains": _SEGMENT_GRAINS, "marks": _SEGMENT_L2},
                "density", points=[[10.0, 10.0]], radii=DENSITY_RADII, replications=1_000_000),
    ),
    ReferenceModel(
        "binomial_segments",
        "40 segments of length 2 at angle 0.7, germs uniform in [0,20]^2",
        ("density limit", "overlap decay"),
        _config("binomial_segments",
                {"window": PLANE_20, "germs": {"law": "binomial", "m": 40},
                 "grains": _SEGMENT_GRAINS, "marks": {"kind": "dirac", "mark": [2.0, 0.7]}},
                "density", points=[[10.0, 10.0]], radii=DENSITY_RADII, replications=1_000_000),
    ),
    ReferenceModel(
        "matern_segments",
        "Matern cluster germs (alpha 0.05, 2 children, radius 1) carrying segments of length 2",
        ("density limit", "overlap decay", "non-Poisson germs"),
        _config("matern_segments",
                {"window": PLANE_20,
                 "germs": {"law": "matern", "alpha": 0.05, "m": 2.0, "cluster_radius": 1.0},
                 "grains": _SEGMENT_GRAINS, "marks": _SEGMENT_L2},
                "density", points=[[10.0, 10.0]], radii=DENSITY_RADII, replications=1_000_000),
    ),
    ReferenceModel(
        "inhomogeneous_segments",
        "Poisson segments with intensity 0.05 + 0.01 x rising across the window",
        ("density limit", "inhomogeneous intensity"),
        _config("inhomogeneous_segments",
                {"window": PLANE_20,
                 "germs": {"law": "poisson",
                           "intensity": {"kind": "linear", "base": 0.05, "gradient": [0.01, 0.0], "bound": 0.3}},
                 "grains": _SEGMENT_GRAINS, "marks": _SEGMENT_L2},
                "density", points=[[10.0, 10.0], [15.0, 5.0]], radii=DENSITY_RADII, replications=1_000_000),
    ),
    ReferenceModel(
        "modulated_segments",
        "Poisson segments of uniform length in [1,3] kept only where length <= 1.5 + 0.05 x",
        ("density limit", "position-dependent marks"),
        _config("modulated_segments",
                {"window": PLANE_20, "germs": {"law": "poisson", "intensity": 0.1},
                 "grains": _SEGMENT_GRAINS,
                 "marks": {"kind": "uniform_length", "lo": 1.0, "hi": 3.0, "angle": None},
                 "modulation": {"kind": "length_cutoff", "base": 1.5, "gradient": [0.05, 0.0]}},
                "density", points=[[10.0, 10.0]], radii=DENSITY_RADII, replications=1_000_000),
    ),
    ReferenceModel(
        "segment_boolean_estimator",
        "Minimal-area estimator on the segment Boolean model with R_N = 0.5 N^(-1/4)",
        ("estimator consistency", "capacity functional"),
        _config("segment_boolean_estimator",
                {"window": PLANE_20, "germs": {"law": "poisson", "intensity": 0.1},
                 "grains": _SEGMENT_GRAINS, "marks": _SEGMENT_L2},
                "estimator", points=[[10.0, 10.0]],
                schedule={"c": 0.5, "tau": 0.25, "N": [1000, 10000, 100000], "repeats": 10}),
    ),
    ReferenceModel(
        "segment_minkowski",
        "Mean Minkowski content of the segment Boolean model in the box [8,12]^2",
        ("local Minkowski content",),
        _config("segment_minkowski",
                {"window": PLANE_20, "germs": {"law": "poisson", "intensity": 0.1},
                 "grains": _SEGMENT_GRAINS, "marks": _SEGMENT_L2},
                "minkowski", region={"lo": [8.0, 8.0], "hi": [12.0, 12.0]},
                radii=[0.08, 0.04, 0.02], replications=400),
    ),
    ReferenceModel(
        "onegrain_circle",
        "A single circle of radius 1 centred uniformly in [0,10]^2",
        ("density limit", "one-grain specific area"),
        _config("onegrain_circle",
                {"window": PLANE_10, "germs": {"law": "one_grain"},
                 "grains": {"shape": "circle"}, "marks": {"kind": "dirac", "mark": [1.0]}},
                "density", points=[[5.0, 5.0]], radii=DENSITY_RADII, replications=1_000_000),
    ),
    ReferenceModel(
        "onegrain_disc",
        "A single disc of radius 1 centred uniformly in [0,10]^2",
        ("contact distribution", "one-grain specific area"),
        _config("onegrain_disc",
                {"window": PLANE_10, "germs": {"law": "one_grain"},
                 "grains": {"shape": "disc"}, "marks": {"kind": "dirac", "mark": [1.0]}},
                "contact", points=[[5.0, 5.0]], radii=[0.01, 0.02, 0.04, 0.08, 0.16],
                replications=2_000_000),
    ),
    ReferenceModel(
        "disc_boolean",
        "Boolean model of unit discs with intensity 0.05",
        ("specific area", "void probability"),
        _config("disc_boolean",
                {"window": PLANE_20, "germs": {"law": "poisson", "intensity": 0.05},
                 "grains": {"shape": "disc"}, "marks": {"kind": "dirac", "mark": [1.0]}},
                "specific-area", points=[[10.0, 10.0]], radii=DENSITY_RADII, replications=1_000_000),
    ),
    ReferenceModel(
        "disc_boolean_contact",
        "Boolean model of unit discs with intensity 0.05, contact distribution at the centre",
        ("contact distribution", "Boolean contact derivative"),
        _config("disc_boolean_contact",
                {"window": PLANE_20, "germs": {"law": "poisson", "intensity": 0.05},
                 "grains": {"shape": "disc"}, "marks": {"kind": "dirac", "mark": [1.0]}},
                "contact", points=[[10.0, 10.0]], radii=[0.01, 0.02, 0.04, 0.08, 0.16],
                replications=1_000_000),
    ),
    ReferenceModel(
        "disc_whisker",
        "A unit disc with a whisker of length 0.5 at angle 0.3, centred uniformly in [0,1]^2",
        ("outer Minkowski content", "2x whisker"),
        _config("disc_whisker",
                {"window": {"lo": [0.0, 0.0], "hi": [1.0, 1.0]}, "germs": {"law": "one_grain"},
                 "grains": {"shape": "disc_whisker"}, "marks": {"kind": "dirac", "mark": [1.0, 0.5, 0.3]}},
                "outer-minkowski", region={"lo": [-2.0, -2.0], "hi": [3.0, 3.0]},
                radii=[0.08, 0.04, 0.02], replications=20, grid_resolution=2048,
                tolerance={"relative": 0.03}),
    ),
)


def list_reference_models() -> list[ReferenceModel]:
    """The catalog of reference models, in a fixed order."""
    return list(REFERENCE_MODELS)


def get_reference_model(name: str) -> ReferenceModel:
    for entry in REFERENCE_MODELS:
        if entry.name == name:
            return entry
    raise KeyError(f"Unknown reference model '{name}'")
