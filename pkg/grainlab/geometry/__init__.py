"""
Deterministic geometry for grains.

This package provides grain shapes expressed relative to their germ,
distances and Hausdorff measures, quadrature over translated grains, and
the grid oracle for enlargement volumes.
"""

from .base import (
    Grain,
    GrainShape,
    RegularityEnvelope,
    Window,
    as_point,
    as_points,
    ball_volume,
)

from .shapes import (
    Ball,
    Circle,
    Disc,
    DiscPair,
    DiscWithWhisker,
    Polyline,
    Segment,
    Sphere,
    lens_area,
    shape_from_params,
)

from .measures import (
    distance_to_grain,
    enlarged_volume_estimate,
    enlarged_volume_exact,
    hausdorff_measure,
    minkowski_ratio,
    minkowski_ratio_bound,
    translated_grain_integral,
)

from .raster import (
    DistanceRaster,
    GridEstimate,
    enlarged_volume_curve,
    enlarged_volume_grid,
    outer_minkowski_curve,
    outer_minkowski_ratio,
)

__all__ = [
    # Types
    "Grain",
    "GrainShape",
    "RegularityEnvelope",
    "Window",
    "as_point",
    "as_points",
    "ball_volume",
    # Shapes
    "Ball",
    "Circle",
    "Disc",
    "DiscPair",
    "DiscWithWhisker",
    "Polyline",
    "Segment",
    "Sphere",
    "lens_area",
    "shape_from_params",
    # Measures
    "distance_to_grain",
    "enlarged_volume_estimate",
    "enlarged_volume_exact",
    "hausdorff_measure",
    "minkowski_ratio",
    "minkowski_ratio_bound",
    "translated_grain_integral",
    # Grid oracle
    "DistanceRaster",
    "GridEstimate",
    "enlarged_volume_curve",
    "enlarged_volume_grid",
    "outer_minkowski_curve",
    "outer_minkowski_ratio",
]
