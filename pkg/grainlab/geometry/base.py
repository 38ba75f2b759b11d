"""
Base classes and type definitions for grain geometry.

Shapes are expressed in the local frame of their germ: a grain is the set
germ + shape. Batches of points are float arrays of shape (m, d).
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from grainlab.errors import ArgumentError, DimensionError, UnsupportedShapeError

SUPPORTED_DIMENSIONS = (2, 3)

# Volume of the unit ball in R^n.
_UNIT_BALL_VOLUME = {
    0: 1.0,
    1: 2.0,
    2: math.pi,
    3: 4.0 * math.pi / 3.0,
}


def ball_volume(d: int, r: float) -> float:
    """
    Volume of the d-dimensional ball of radius r.

    Args:
        d: Dimension, one of 0, 1, 2, 3
        r: Radius (nonnegative)

    Returns:
        b_d * r**d, with b_0 = 1 so that ball_volume(0, r) == 1
    """
    if d not in _UNIT_BALL_VOLUME:
        raise DimensionError(f"ball_volume: unsupported dimension {d}")
    if not r >= 0:
        raise ArgumentError(f"ball_volume: radius must be nonnegative, got {r}")
    return _UNIT_BALL_VOLUME[d] * r ** d


def as_point(coords, dim: int | None = None) -> np.ndarray:
    """Converts coordinates to a finite float point, optionally checking its dimension."""
    point = np.asarray(coords, dtype=float)
    if point.ndim != 1 or point.size not in SUPPORTED_DIMENSIONS:
        raise DimensionError(f"Point must have 2 or 3 coordinates, got shape {point.shape}")
    if dim is not None and point.size != dim:
        raise DimensionError(f"Point has dimension {point.size}, expected {dim}")
    if not np.all(np.isfinite(point)):
        raise ArgumentError(f"Point coordinates must be finite, got {coords}")
    return point


def as_points(points, dim: int) -> np.ndarray:
    """Converts a point or a batch of points to a float array of shape (m, dim)."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionError(f"Expected points of dimension {dim}, got array of shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Window:
    """Axis-aligned box [lo, hi] in R^d."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise DimensionError(f"Window corners differ in dimension: {len(lo)} vs {len(hi)}")
        if len(lo) not in SUPPORTED_DIMENSIONS:
            raise DimensionError(f"Window dimension must be 2 or 3, got {len(lo)}")
        if not all(math.isfinite(v) for v in lo + hi):
            raise ArgumentError("Window corners must be finite")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ArgumentError(f"Window requires lo < hi on every axis, got lo={lo} hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def around(cls, center, half_width: float) -> "Window":
        """Cube of the given half width centred on a point."""
        c = as_point(center)
        return cls(tuple(c - half_width), tuple(c + half_width))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def lo_array(self) -> np.ndarray:
        return np.asarray(self.lo)

    @property
    def hi_array(self) -> np.ndarray:
        return np.asarray(self.hi)

    @property
    def extent(self) -> np.ndarray:
        return self.hi_array - self.lo_array

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo_array + self.hi_array)

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def dilate(self, r: float) -> "Window":
        if r < 0:
            raise ArgumentError(f"Window.dilate: radius must be nonnegative, got {r}")
        return Window(tuple(self.lo_array - r), tuple(self.hi_array + r))

    def intersect(self, other: "Window") -> "Window | None":
        """Intersection box, or None when the intersection has empty interior."""
        if other.dim != self.dim:
            raise DimensionError("Window.intersect: dimension mismatch")
        lo = np.maximum(self.lo_array, other.lo_array)
        hi = np.minimum(self.hi_array, other.hi_array)
        if np.any(lo >= hi):
            return None
        return Window(tuple(lo), tuple(hi))

    def contains(self, points) -> np.ndarray:
        """Closed membership test for a batch of points."""
        pts = as_points(points, self.dim)
        return np.all((pts >= self.lo_array) & (pts <= self.hi_array), axis=1)

    def sample_uniform(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.lo_array + rng.random((count, self.dim)) * self.extent

    def describe(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}


class GrainShape(ABC):
    """
    A compact set Z expressed relative to its germ.

    Subclasses set `kind`, `dim` (Hausdorff dimension n) and `ambient_dim` (d).
    Distances are computed for batches of points given in the local frame.
    """

    kind: str = "shape"
    dim: int = 0
    ambient_dim: int = 2

    @abstractmethod
    def hausdorff_measure(self) -> float:
        """n-dimensional Hausdorff measure of the shape."""
        pass

    @abstractmethod
    def distance(self, points) -> np.ndarray:
        """
        Euclidean distance from each point to the shape.

        Args:
            points: Array of shape (m, d) in the local frame

        Returns:
            Array of shape (m,)
        """
        pass

    @abstractmethod
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Tight axis-aligned bounding box (lo, hi) in the local frame."""
        pass

    @abstractmethod
    def quadrature(self, steps: int) -> tuple[np.ndarray, np.ndarray]:
        """
        Midpoint quadrature nodes and weights for H^n on the shape.

        Args:
            steps: Nodes per unit length for curves, grid size per axis for
                full-dimensional shapes

        Returns:
            Tuple of (nodes of shape (k, d), weights of shape (k,))
        """
        pass

    @abstractmethod
    def intersects_box(self, lo: np.ndarray, hi: np.ndarray) -> bool:
        """Whether the shape meets the closed box [lo, hi] (local frame)."""
        pass

    @abstractmethod
    def params(self) -> dict:
        """Shape parameters for serialization."""
        pass

    def interior_distance(self, points) -> np.ndarray:
        """
        Distance to the closure of the interior of the shape.

        Lower-dimensional shapes have empty interior, so every point is at
        infinite distance.
        """
        pts = as_points(points, self.ambient_dim)
        return np.full(len(pts), np.inf)

    def bounding_radius(self) -> float:
        """Radius of the smallest origin-centred ball containing the bounding box."""
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))

    def enlarged_volume(self, r: float) -> float:
        """Closed-form volume of the parallel set at distance r."""
        raise UnsupportedShapeError(f"No closed-form enlargement for {self.kind}; use the grid oracle")

    def boundary_parts(self) -> tuple[float, float, float]:
        """(essential, whisker, interiorised) boundary measures for catalog shapes."""
        raise UnsupportedShapeError(f"{self.kind} is not in the boundary decomposition catalog")

    def boundary_quadrature(self, steps: int) -> list[tuple[np.ndarray, np.ndarray, float]]:
        """
        Quadrature over the boundary parts that contribute to the outer content.

        Returns:
            List of (nodes, weights, factor); factor 1 for essential boundary,
            2 for boundary points of density zero
        """
        raise UnsupportedShapeError(f"{self.kind} has no boundary quadrature")

    def measure_in_ball(self, center, radius: float, steps: int = 512) -> float:
        """H^n of the shape inside a closed ball; node-count approximation by default."""
        c = as_point(center, self.ambient_dim)
        nodes, weights = self.quadrature(steps)
        inside = np.linalg.norm(nodes - c, axis=1) <= radius
        return float(weights[inside].sum())

    def measure_in_box(self, lo, hi, steps: int = 512) -> float:
        """H^n of the shape inside a closed box; node-count approximation by default."""
        nodes, weights = self.quadrature(steps)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        inside = np.all((nodes >= lo) & (nodes <= hi), axis=1)
        return float(weights[inside].sum())

    def describe(self) -> dict:
        return {"shape": self.kind, **self.params()}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


@dataclass(frozen=True, eq=False)
class Grain:
    """A single translated grain germ + shape."""

    germ: np.ndarray
    shape: GrainShape

    def __post_init__(self):
        object.__setattr__(self, "germ", as_point(self.germ, self.shape.ambient_dim))

    @cached_property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.shape.bounding_box()
        return self.germ + lo, self.germ + hi

    def distance(self, points) -> np.ndarray:
        return self.shape.distance(as_points(points, self.shape.ambient_dim) - self.germ)

    def interior_distance(self, points) -> np.ndarray:
        return self.shape.interior_distance(as_points(points, self.shape.ambient_dim) - self.germ)

    def describe(self) -> dict:
        return {"germ": self.germ.tolist(), **self.shape.describe()}


@dataclass(frozen=True)
class RegularityEnvelope:
    """
    Closed superset Xi of a grain with the lower mass bound
    H^n(Xi ∩ B_rho(x)) >= gamma * rho**n for x in the grain and rho in (0, 1).
    """

    shape: GrainShape
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ArgumentError(f"RegularityEnvelope: gamma must lie in (0, 1], got {self.gamma}")
