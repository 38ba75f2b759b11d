"""
Builds germ-grain models from their JSON description and reports why a
description cannot be run.
"""

import logging

import numpy as np

from grainlab.errors import GrainLabError, ModelValidationError
from grainlab.geometry import Polyline, Window
from grainlab.germgrain import FAMILY_TYPES, GermGrainModel, GrainFamily, LengthCutoff, PolylineFamily, SegmentFamily
from grainlab.pointproc import (
    BinomialGerms,
    ConstantIntensity,
    Dirac,
    DiscreteMixture,
    GermLaw,
    IntensitySpec,
    MarkDistribution,
    MaternClusterGerms,
    OneGrainGerms,
    PiecewiseSmoothIntensity,
    PoissonGerms,
    UniformLength,
    linear_intensity,
    step_intensity,
)

logger = logging.getLogger(__name__)


def build_window(spec: dict) -> Window:
    return Window(tuple(spec["lo"]), tuple(spec["hi"]))


def build_intensity(spec) -> IntensitySpec:
    if isinstance(spec, (int, float)):
        return ConstantIntensity(float(spec))
    kind = spec["kind"]
    if kind == "constant":
        return ConstantIntensity(float(spec["value"]))
    if kind == "linear":
        return linear_intensity(float(spec["base"]), spec["gradient"], float(spec["bound"]))
    if kind == "step":
        return step_intensity(float(spec["left"]), float(spec["right"]), float(spec["split"]),
                              int(spec.get("axis", 0)), spec.get("bound"))
    raise ModelValidationError(f"Unknown intensity kind '{kind}'")


def build_germ_law(spec: dict) -> GermLaw:
    law = spec["law"]
    if law == "poisson":
        return PoissonGerms(build_intensity(spec["intensity"]))
    if law == "binomial":
        return BinomialGerms(spec["m"])
    if law == "matern":
        return MaternClusterGerms(spec["alpha"], spec["m"], spec["cluster_radius"])
    if law == "one_grain":
        return OneGrainGerms()
    raise ModelValidationError(f"Unknown germ law '{law}'")


def build_family(spec: dict) -> GrainFamily:
    shape = spec["shape"]
    if shape == "segment":
        return SegmentFamily(spec.get("extend_short", True))
    if shape == "polyline":
        if "vertices" not in spec:
            raise ModelValidationError("polyline grains need 'vertices'")
        return PolylineFamily(Polyline(spec["vertices"]))
    if shape not in FAMILY_TYPES:
        raise ModelValidationError(f"Unknown grain shape '{shape}'")
    return FAMILY_TYPES[shape]()


def build_marks(spec: dict) -> MarkDistribution:
    kind = spec["kind"]
    if kind == "dirac":
        return Dirac(spec["mark"])
    if kind == "uniform_length":
        return UniformLength(spec["lo"], spec["hi"], spec.get("angle"))
    if kind == "mixture":
        return DiscreteMixture(spec["marks"], spec["probabilities"])
    raise ModelValidationError(f"Unknown mark distribution '{kind}'")


def build_model(spec: dict, name: str = "custom") -> GermGrainModel:
    """
    GermGrainModel from its JSON description.

    Raises:
        GrainLabError: When the description is inconsistent (dimension, mark
            width, unsupported combination)
    """
    modulation = spec.get("modulation")
    return GermGrainModel(
        germ_law=build_germ_law(spec["germs"]),
        window=build_window(spec["window"]),
        marks=build_marks(spec["marks"]),
        family=build_family(spec["grains"]),
        position_modulation=None if modulation is None else LengthCutoff(modulation["base"], modulation["gradient"]),
        name=name,
    )


def intensity_supremum(spec: IntensitySpec, window: Window) -> float:
    """Supremum of an intensity over a window (exact for constant, linear and step intensities)."""
    if isinstance(spec, ConstantIntensity):
        return spec.value
    if isinstance(spec, PiecewiseSmoothIntensity) and spec.label == "step":
        return max(spec.params["left"], spec.params["right"])
    # Linear intensities peak at a corner; other functions are probed on a grid of the window.
    axes = [np.linspace(lo, hi, 33) for lo, hi in zip(window.lo, window.hi)]
    points = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    return float(spec.evaluate(points).max())


def model_diagnostics(spec: dict) -> list[str]:
    """
    Problems that keep a model description from running; empty when runnable.

    Covers dimension and mark-shape consistency, the envelope lower mass
    bound (A1) and the declared intensity bound (A2).
    """
    try:
        model = build_model(spec)
    except GrainLabError as e:
        return [_classify(e)]
    except (KeyError, TypeError) as e:
        return [f"model: malformed description ({e})"]

    diagnostics = []
    try:
        model.max_bounding_radius
    except GrainLabError as e:
        return [_classify(e)]

    if model.family.gamma_lower_bound(model.marks) <= 0:
        diagnostics.append(
            f"(A1) envelope: {model.family.kind} marks may have length < 2 with no extension rule; "
            "extend each segment to length 2 (set grains.extend_short) so the envelope holds with gamma = 1")

    law = model.germ_law
    if isinstance(law, PoissonGerms) and not law.spec.is_constant:
        supremum = intensity_supremum(law.spec, model.sampling_window)
        if supremum > law.spec.bound * (1.0 + 1e-12):
            diagnostics.append(
                f"(A2) intensity bound: declared bound {law.spec.bound:g} is below sup lambda = {supremum:g} "
                "on the sampling window")
    return diagnostics


def _classify(error: GrainLabError) -> str:
    text = str(error)
    if "Matern" in text:
        return f"unsupported: {text}"
    return f"model: {text}"
