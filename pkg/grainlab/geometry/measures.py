"""
Measures, distances and quadrature over single grains.
"""

from typing import Callable

import numpy as np

from grainlab.errors import ArgumentError, UnsupportedShapeError
from grainlab.geometry.base import Grain, GrainShape, RegularityEnvelope, Window, as_point, ball_volume
from grainlab.geometry.raster import GridEstimate, enlarged_volume_grid

DEFAULT_RATIO_RESOLUTION = 2048


def hausdorff_measure(shape: GrainShape) -> float:
    return shape.hausdorff_measure()


def distance_to_grain(x, grain: Grain) -> float:
    """Euclidean distance from x to germ + shape; 0 iff x lies in the grain."""
    return float(grain.distance(as_point(x, grain.shape.ambient_dim))[0])


def translated_grain_integral(x, shape: GrainShape, weight: Callable[[np.ndarray], np.ndarray],
                              steps: int) -> float:
    """
    Integral of `weight` over the reflected translate x - Z with respect to H^n.

    Args:
        x: Reference point
        shape: Grain shape Z (dim >= 1)
        weight: Vectorized function mapping points (m, d) to values (m,)
        steps: Nodes per unit length (curves) or grid size per axis (full-dim)

    Returns:
        Composite midpoint approximation of the integral
    """
    if int(steps) != steps or steps < 1:
        raise ArgumentError(f"translated_grain_integral: steps must be a positive integer, got {steps}")
    if shape.dim < 1:
        raise ArgumentError("translated_grain_integral: shape must have dimension >= 1")
    nodes, weights = shape.quadrature(int(steps))
    points = as_point(x, shape.ambient_dim) - nodes
    values = np.broadcast_to(np.asarray(weight(points), dtype=float), (len(points),))
    return float(weights @ values)


def enlarged_volume_exact(shape: GrainShape, r: float) -> float:
    """Closed-form volume of the parallel set of a single shape; raises UnsupportedShapeError."""
    if not r > 0:
        raise ArgumentError(f"enlarged_volume_exact: r must be positive, got {r}")
    return shape.enlarged_volume(r)


def shape_window(shape: GrainShape, reach: float, resolution: int) -> Window:
    """Bounding box of the shape dilated far enough for a grid at the given resolution."""
    lo, hi = shape.bounding_box()
    # Dilate once by `reach` plus a few cells of the final grid.
    span = float(np.max(hi - lo)) + 2.0 * reach
    pad = reach + 4.0 * span / resolution
    return Window(tuple(lo - pad), tuple(hi + pad))


def enlarged_volume_estimate(shape: GrainShape, r: float,
                             resolution: int = DEFAULT_RATIO_RESOLUTION) -> GridEstimate:
    """Enlarged volume of one shape: exact when available, grid oracle otherwise."""
    try:
        value = enlarged_volume_exact(shape, r)
        return GridEstimate(value, 0.0, 0, 0.0)
    except UnsupportedShapeError:
        window = shape_window(shape, r, resolution)
        return enlarged_volume_grid([Grain(np.zeros(shape.ambient_dim), shape)], r, window, resolution)


def minkowski_ratio(shape: GrainShape, r: float, resolution: int = DEFAULT_RATIO_RESOLUTION) -> float:
    """
    V(Z dilated by r) / (b_{d-n} r^{d-n}).

    Tends to H^n(Z) as r -> 0. Shapes without a closed-form enlargement go
    through the grid oracle at the given resolution.
    """
    if not 0 < r < 2:
        raise ArgumentError(f"minkowski_ratio: r must lie in (0, 2), got {r}")
    volume = enlarged_volume_estimate(shape, r, resolution).value
    return volume / ball_volume(shape.ambient_dim - shape.dim, r)


def minkowski_ratio_bound(shape: GrainShape, envelope: RegularityEnvelope) -> float:
    """
    Uniform upper bound on minkowski_ratio(shape, r) for r in (0, 2) implied
    by the envelope's lower mass bound.
    """
    n, d = shape.dim, shape.ambient_dim
    return (envelope.shape.hausdorff_measure() / envelope.gamma
            * 2 ** n * 4 ** d * ball_volume(d, 1.0) / ball_volume(d - n, 1.0))
