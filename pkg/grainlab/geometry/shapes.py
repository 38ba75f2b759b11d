"""
Concrete grain shapes.

Every shape is given relative to its germ and contains the origin of its
local frame (segments and discs are centred on it).
"""

import math
from functools import cached_property

import numpy as np
from shapely.geometry import LineString, box

from grainlab.errors import ArgumentError, DimensionError
from grainlab.geometry.base import GrainShape, as_point, as_points


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise ArgumentError(f"{name} must be a positive finite number, got {value}")
    return value


def _steps(steps: int) -> int:
    if int(steps) != steps or steps < 1:
        raise ArgumentError(f"steps must be a positive integer, got {steps}")
    return int(steps)


def _midpoints(count: int, start: float, stop: float) -> np.ndarray:
    """Midpoints of `count` equal cells of [start, stop]."""
    return start + (np.arange(count) + 0.5) * ((stop - start) / count)


def segment_distance(points: np.ndarray, start: np.ndarray, end: np.ndarray) -> np.ndarray:
    """Distance from each row of `points` to the closed segment [start, end]."""
    direction = end - start
    length_sq = float(direction @ direction)
    t = np.clip(((points - start) @ direction) / length_sq, 0.0, 1.0)
    closest = start + t[:, None] * direction
    return np.linalg.norm(points - closest, axis=1)


def box_distance(point: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """Distance from a point to the closed box [lo, hi]."""
    gap = np.maximum(np.maximum(lo - point, point - hi), 0.0)
    return float(np.linalg.norm(gap))


def box_polygon(lo, hi):
    """Closed planar box [lo, hi] as a shapely polygon."""
    return box(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))


def segment_chord_in_ball(start: np.ndarray, end: np.ndarray, center: np.ndarray, radius: float) -> float:
    """Length of [start, end] inside the closed ball B_radius(center)."""
    delta = end - start
    offset = start - center
    a = float(delta @ delta)
    b = 2.0 * float(delta @ offset)
    c = float(offset @ offset) - radius * radius
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return 0.0
    root = math.sqrt(disc)
    t0 = max(0.0, (-b - root) / (2.0 * a))
    t1 = min(1.0, (-b + root) / (2.0 * a))
    return max(0.0, t1 - t0) * math.sqrt(a)


def lens_area(r1, r2, t):
    """
    Area of the intersection of two discs with radii r1, r2 and centre distance t.

    Accepts scalars or arrays (broadcast); returns a float for scalar input.
    """
    scalar = all(np.ndim(v) == 0 for v in (r1, r2, t))
    r1, r2, t = np.broadcast_arrays(*(np.atleast_1d(np.asarray(v, dtype=float)) for v in (r1, r2, t)))
    area = np.zeros(t.shape)
    contained = t <= np.abs(r1 - r2)
    area[contained] = np.pi * np.minimum(r1, r2)[contained] ** 2
    partial = ~contained & (t < r1 + r2)
    if np.any(partial):
        a, b, s = r1[partial], r2[partial], t[partial]
        alpha = np.arccos(np.clip((s * s + a * a - b * b) / (2.0 * s * a), -1.0, 1.0))
        beta = np.arccos(np.clip((s * s + b * b - a * a) / (2.0 * s * b), -1.0, 1.0))
        kite = 0.5 * np.sqrt(np.maximum((-s + a + b) * (s + a - b) * (s - a + b) * (s + a + b), 0.0))
        area[partial] = a * a * alpha + b * b * beta - kite
    return float(area[0]) if scalar else area


def ball_intersection_volume(r1: float, r2: float, t: float) -> float:
    """Volume of the intersection of two balls in R^3."""
    if t >= r1 + r2:
        return 0.0
    if t <= abs(r1 - r2):
        return 4.0 * math.pi * min(r1, r2) ** 3 / 3.0
    return (math.pi * (r1 + r2 - t) ** 2
            * (t * t + 2.0 * t * r2 - 3.0 * r2 * r2 + 2.0 * t * r1 + 6.0 * r2 * r1 - 3.0 * r1 * r1)
            / (12.0 * t))


def _circle_nodes(radius: float, steps: int, center=(0.0, 0.0), start=0.0, span=2.0 * math.pi):
    """Uniform angular midpoint nodes on a circular arc (even count, at least 8)."""
    count = max(8, math.ceil(steps * span * radius))
    count += count % 2
    theta = _midpoints(count, start, start + span)
    nodes = np.column_stack((center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)))
    return nodes, np.full(count, radius * span / count)


def _segment_nodes(start: np.ndarray, end: np.ndarray, steps: int):
    length = float(np.linalg.norm(end - start))
    count = max(1, math.ceil(steps * length))
    t = _midpoints(count, 0.0, 1.0)
    return start + t[:, None] * (end - start), np.full(count, length / count)


class Segment(GrainShape):
    """Planar segment of the given length and direction, centred on the origin."""

    kind = "segment"
    dim = 1
    ambient_dim = 2

    def __init__(self, length: float, angle: float = 0.0):
        self.length = _positive("Segment length", length)
        self.angle = float(angle)
        self.direction = np.array([math.cos(self.angle), math.sin(self.angle)])
        self.end = 0.5 * self.length * self.direction
        self.start = -self.end

    def hausdorff_measure(self) -> float:
        return self.length

    def distance(self, points) -> np.ndarray:
        return segment_distance(as_points(points, 2), self.start, self.end)

    def bounding_box(self):
        return np.minimum(self.start, self.end), np.maximum(self.start, self.end)

    def bounding_radius(self) -> float:
        return 0.5 * self.length

    def quadrature(self, steps: int):
        return _segment_nodes(self.start, self.end, _steps(steps))

    def enlarged_volume(self, r: float) -> float:
        return 2.0 * r * self.length + math.pi * r * r

    def boundary_parts(self):
        return 0.0, self.length, 0.0

    def boundary_quadrature(self, steps: int):
        nodes, weights = self.quadrature(steps)
        return [(nodes, weights, 2.0)]

    def measure_in_ball(self, center, radius: float, steps: int = 0) -> float:
        return segment_chord_in_ball(self.start, self.end, as_point(center, 2), radius)

    @cached_property
    def line(self) -> LineString:
        return LineString([self.start, self.end])

    def measure_in_box(self, lo, hi, steps: int = 0) -> float:
        return self.line.intersection(box_polygon(lo, hi)).length

    def intersects_box(self, lo, hi) -> bool:
        return self.line.intersects(box_polygon(lo, hi))

    def params(self) -> dict:
        return {"length": self.length, "angle": self.angle}


class Polyline(GrainShape):
    """
    Open polygonal curve through the given vertices (local frame).

    The origin must lie in the closed bounding box of the vertices; use
    `Polyline.centered` to place the bounding-box midpoint on the origin.
    """

    kind = "polyline"
    dim = 1
    ambient_dim = 2

    def __init__(self, vertices):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or len(verts) < 2:
            raise ArgumentError("Polyline needs at least two vertices")
        if verts.shape[1] != 2:
            raise DimensionError(f"Polyline vertices must be planar, got dimension {verts.shape[1]}")
        if not np.all(np.isfinite(verts)):
            raise ArgumentError("Polyline vertices must be finite")
        edges = np.linalg.norm(np.diff(verts, axis=0), axis=1)
        if np.any(edges == 0):
            raise ArgumentError("Polyline has repeated consecutive vertices")
        lo, hi = verts.min(axis=0), verts.max(axis=0)
        if np.any(lo > 0) or np.any(hi < 0):
            raise ArgumentError("Polyline: origin must lie within the bounding box of its vertices")
        self.vertices = verts
        self.edge_lengths = edges

    @classmethod
    def centered(cls, vertices) -> "Polyline":
        verts = np.asarray(vertices, dtype=float)
        return cls(verts - 0.5 * (verts.min(axis=0) + verts.max(axis=0)))

    def edges(self):
        return zip(self.vertices[:-1], self.vertices[1:])

    def rotated(self, angle: float) -> "Polyline":
        c, s = math.cos(angle), math.sin(angle)
        return Polyline(self.vertices @ np.array([[c, s], [-s, c]]))

    def hausdorff_measure(self) -> float:
        return float(self.edge_lengths.sum())

    def distance(self, points) -> np.ndarray:
        pts = as_points(points, 2)
        return np.min([segment_distance(pts, a, b) for a, b in self.edges()], axis=0)

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def quadrature(self, steps: int):
        steps = _steps(steps)
        parts = [_segment_nodes(a, b, steps) for a, b in self.edges()]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def boundary_parts(self):
        return 0.0, self.hausdorff_measure(), 0.0

    def boundary_quadrature(self, steps: int):
        nodes, weights = self.quadrature(steps)
        return [(nodes, weights, 2.0)]

    def measure_in_ball(self, center, radius: float, steps: int = 0) -> float:
        c = as_point(center, 2)
        return sum(segment_chord_in_ball(a, b, c, radius) for a, b in self.edges())

    @cached_property
    def line(self) -> LineString:
        return LineString(self.vertices)

    def measure_in_box(self, lo, hi, steps: int = 0) -> float:
        return self.line.intersection(box_polygon(lo, hi)).length

    def intersects_box(self, lo, hi) -> bool:
        return self.line.intersects(box_polygon(lo, hi))

    def params(self) -> dict:
        return {"vertices": self.vertices.tolist()}


class Circle(GrainShape):
    """Circle of radius R centred on the origin (a curve, n = 1)."""

    kind = "circle"
    dim = 1
    ambient_dim = 2

    def __init__(self, radius: float):
        self.radius = _positive("Circle radius", radius)

    def hausdorff_measure(self) -> float:
        return 2.0 * math.pi * self.radius

    def distance(self, points) -> np.ndarray:
        return np.abs(np.linalg.norm(as_points(points, 2), axis=1) - self.radius)

    def bounding_box(self):
        return np.full(2, -self.radius), np.full(2, self.radius)

    def bounding_radius(self) -> float:
        return self.radius

    def quadrature(self, steps: int):
        return _circle_nodes(self.radius, _steps(steps))

    def enlarged_volume(self, r: float) -> float:
        if r < self.radius:
            return 4.0 * math.pi * self.radius * r
        return math.pi * (self.radius + r) ** 2

    def boundary_parts(self):
        return 0.0, self.hausdorff_measure(), 0.0

    def boundary_quadrature(self, steps: int):
        nodes, weights = self.quadrature(steps)
        return [(nodes, weights, 2.0)]

    def measure_in_ball(self, center, radius: float, steps: int = 0) -> float:
        c = as_point(center, 2)
        dist = float(np.linalg.norm(c))
        R = self.radius
        if dist == 0.0:
            return self.hausdorff_measure() if R <= radius else 0.0
        kappa = (R * R + dist * dist - radius * radius) / (2.0 * R * dist)
        if kappa <= -1.0:
            return self.hausdorff_measure()
        if kappa > 1.0:
            return 0.0
        return 2.0 * R * math.acos(kappa)

    def intersects_box(self, lo, hi) -> bool:
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        origin = np.zeros(2)
        far = np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi)))
        return box_distance(origin, lo, hi) <= self.radius <= far

    def params(self) -> dict:
        return {"radius": self.radius}


class Disc(GrainShape):
    """Closed disc of radius R centred on the origin."""

    kind = "disc"
    dim = 2
    ambient_dim = 2

    def __init__(self, radius: float):
        self.radius = _positive("Disc radius", radius)

    def hausdorff_measure(self) -> float:
        return math.pi * self.radius ** 2

    def distance(self, points) -> np.ndarray:
        return np.maximum(np.linalg.norm(as_points(points, 2), axis=1) - self.radius, 0.0)

    interior_distance = distance

    def bounding_box(self):
        return np.full(2, -self.radius), np.full(2, self.radius)

    def bounding_radius(self) -> float:
        return self.radius

    def quadrature(self, steps: int):
        # Polar midpoint grid; exact for constant weights.
        steps = _steps(steps)
        n_theta = max(8, steps + steps % 2)
        rho = _midpoints(steps, 0.0, self.radius)
        theta = _midpoints(n_theta, 0.0, 2.0 * math.pi)
        rr, tt = np.meshgrid(rho, theta, indexing="ij")
        nodes = np.column_stack(((rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()))
        weights = (rr * (self.radius / steps) * (2.0 * math.pi / n_theta)).ravel()
        return nodes, weights

    def enlarged_volume(self, r: float) -> float:
        return math.pi * (self.radius + r) ** 2

    def boundary_parts(self):
        return 2.0 * math.pi * self.radius, 0.0, 0.0

    def boundary_quadrature(self, steps: int):
        nodes, weights = _circle_nodes(self.radius, _steps(steps))
        return [(nodes, weights, 1.0)]

    def measure_in_ball(self, center, radius: float, steps: int = 0) -> float:
        c = as_point(center, 2)
        return lens_area(self.radius, radius, float(np.linalg.norm(c)))

    def intersects_box(self, lo, hi) -> bool:
        return box_distance(np.zeros(2), np.asarray(lo, float), np.asarray(hi, float)) <= self.radius

    def params(self) -> dict:
        return {"radius": self.radius}


class DiscWithWhisker(GrainShape):
    """
    Disc of radius R with a radial segment of length `whisker` attached at
    the boundary point in direction `angle`. The whisker meets the disc in a
    single point.
    """

    kind = "disc_whisker"
    dim = 2
    ambient_dim = 2

    def __init__(self, radius: float, whisker: float, angle: float = 0.0):
        self.disc = Disc(radius)
        self.radius = self.disc.radius
        self.whisker = _positive("Whisker length", whisker)
        self.angle = float(angle)
        direction = np.array([math.cos(self.angle), math.sin(self.angle)])
        self.whisker_start = self.radius * direction
        self.whisker_end = (self.radius + self.whisker) * direction

    def hausdorff_measure(self) -> float:
        return self.disc.hausdorff_measure()

    def distance(self, points) -> np.ndarray:
        pts = as_points(points, 2)
        return np.minimum(self.disc.distance(pts), segment_distance(pts, self.whisker_start, self.whisker_end))

    def interior_distance(self, points) -> np.ndarray:
        return self.disc.distance(points)

    def bounding_box(self):
        lo, hi = self.disc.bounding_box()
        return np.minimum(lo, self.whisker_end), np.maximum(hi, self.whisker_end)

    def bounding_radius(self) -> float:
        return self.radius + self.whisker

    def quadrature(self, steps: int):
        return self.disc.quadrature(steps)

    def boundary_parts(self):
        return 2.0 * math.pi * self.radius, self.whisker, 0.0

    def boundary_quadrature(self, steps: int):
        steps = _steps(steps)
        circle = _circle_nodes(self.radius, steps)
        whisker = _segment_nodes(self.whisker_start, self.whisker_end, steps)
        return [(circle[0], circle[1], 1.0), (whisker[0], whisker[1], 2.0)]

    def measure_in_ball(self, center, radius: float, steps: int = 0) -> float:
        return self.disc.measure_in_ball(center, radius)

    def intersects_box(self, lo, hi) -> bool:
        return (self.disc.intersects_box(lo, hi)
                or LineString([self.whisker_start, self.whisker_end]).intersects(box_polygon(lo, hi)))

    def params(self) -> dict:
        return {"radius": self.radius, "whisker": self.whisker, "angle": self.angle}


class DiscPair(GrainShape):
    """Union of two overlapping discs of radius R with centres (±separation/2, 0)."""

    kind = "disc_pair"
    dim = 2
    ambient_dim = 2

    def __init__(self, radius: float, separation: float):
        self.radius = _positive("DiscPair radius", radius)
        self.separation = _positive("DiscPair separation", separation)
        if self.separation >= 2.0 * self.radius:
            raise ArgumentError("DiscPair: discs must overlap (separation < 2 * radius)")
        self.centers = np.array([[0.5 * self.separation, 0.0], [-0.5 * self.separation, 0.0]])
        # Half-angle of the arc each circle loses inside the other disc.
        self.cut_angle = math.acos(0.5 * self.separation / self.radius)

    def hausdorff_measure(self) -> float:
        return 2.0 * math.pi * self.radius ** 2 - lens_area(self.radius, self.radius, self.separation)

    def distance(self, points) -> np.ndarray:
        pts = as_points(points, 2)
        near = np.min([np.linalg.norm(pts - c, axis=1) for c in self.centers], axis=0)
        return np.maximum(near - self.radius, 0.0)

    interior_distance = distance

    def bounding_box(self):
        half = np.array([0.5 * self.separation + self.radius, self.radius])
        return -half, half

    def quadrature(self, steps: int):
        # Polar grids of both discs, dropping the left disc's copy of the lens.
        right = Disc(self.radius).quadrature(steps)
        nodes_r = right[0] + self.centers[0]
        nodes_l = right[0] + self.centers[1]
        keep = np.linalg.norm(nodes_l - self.centers[0], axis=1) > self.radius
        return np.concatenate((nodes_r, nodes_l[keep])), np.concatenate((right[1], right[1][keep]))

    def enlarged_volume(self, r: float) -> float:
        grown = self.radius + r
        return 2.0 * math.pi * grown ** 2 - lens_area(grown, grown, self.separation)

    def _outer_arc(self) -> float:
        return 2.0 * self.radius * (math.pi - self.cut_angle)

    def boundary_parts(self):
        return 2.0 * self._outer_arc(), 0.0, 0.0

    def boundary_quadrature(self, steps: int):
        span = 2.0 * (math.pi - self.cut_angle)
        right = _circle_nodes(self.radius, _steps(steps), self.centers[0], -span / 2.0, span)
        left = _circle_nodes(self.radius, _steps(steps), self.centers[1], math.pi - span / 2.0, span)
        return [(right[0], right[1], 1.0), (left[0], left[1], 1.0)]

    def intersects_box(self, lo, hi) -> bool:
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        return any(box_distance(c, lo, hi) <= self.radius for c in self.centers)

    def params(self) -> dict:
        return {"radius": self.radius, "separation": self.separation}


class Ball(GrainShape):
    """Closed ball of radius R in R^3."""

    kind = "ball"
    dim = 3
    ambient_dim = 3
    MAX_AXIS_NODES = 96

    def __init__(self, radius: float):
        self.radius = _positive("Ball radius", radius)

    def hausdorff_measure(self) -> float:
        return 4.0 * math.pi * self.radius ** 3 / 3.0

    def distance(self, points) -> np.ndarray:
        return np.maximum(np.linalg.norm(as_points(points, 3), axis=1) - self.radius, 0.0)

    interior_distance = distance

    def bounding_box(self):
        return np.full(3, -self.radius), np.full(3, self.radius)

    def bounding_radius(self) -> float:
        return self.radius

    def quadrature(self, steps: int):
        # Equal-volume cells: uniform in r^3, cos(theta) and phi.
        k = min(_steps(steps), self.MAX_AXIS_NODES)
        rho = self.radius * np.cbrt(_midpoints(k, 0.0, 1.0))
        u = _midpoints(k, -1.0, 1.0)
        phi = _midpoints(2 * k, 0.0, 2.0 * math.pi)
        rr, uu, pp = np.meshgrid(rho, u, phi, indexing="ij")
        ss = np.sqrt(1.0 - uu * uu)
        nodes = np.column_stack(((rr * ss * np.cos(pp)).ravel(), (rr * ss * np.sin(pp)).ravel(), (rr * uu).ravel()))
        return nodes, np.full(len(nodes), self.hausdorff_measure() / len(nodes))

    def enlarged_volume(self, r: float) -> float:
        return 4.0 * math.pi * (self.radius + r) ** 3 / 3.0

    def boundary_parts(self):
        return 4.0 * math.pi * self.radius ** 2, 0.0, 0.0

    def boundary_quadrature(self, steps: int):
        nodes, weights = Sphere(self.radius).quadrature(steps)
        return [(nodes, weights, 1.0)]

    def measure_in_ball(self, center, radius: float, steps: int = 0) -> float:
        c = as_point(center, 3)
        return ball_intersection_volume(self.radius, radius, float(np.linalg.norm(c)))

    def intersects_box(self, lo, hi) -> bool:
        return box_distance(np.zeros(3), np.asarray(lo, float), np.asarray(hi, float)) <= self.radius

    def params(self) -> dict:
        return {"radius": self.radius}


class Sphere(GrainShape):
    """Sphere of radius R in R^3 (a surface, n = 2)."""

    kind = "sphere"
    dim = 2
    ambient_dim = 3
    MAX_AXIS_NODES = 512

    def __init__(self, radius: float):
        self.radius = _positive("Sphere radius", radius)

    def hausdorff_measure(self) -> float:
        return 4.0 * math.pi * self.radius ** 2

    def distance(self, points) -> np.ndarray:
        return np.abs(np.linalg.norm(as_points(points, 3), axis=1) - self.radius)

    def bounding_box(self):
        return np.full(3, -self.radius), np.full(3, self.radius)

    def bounding_radius(self) -> float:
        return self.radius

    def quadrature(self, steps: int):
        # Equal-area cells: uniform in cos(theta) and phi.
        k = min(max(8, math.ceil(_steps(steps) * self.radius)), self.MAX_AXIS_NODES)
        u = _midpoints(k, -1.0, 1.0)
        phi = _midpoints(2 * k, 0.0, 2.0 * math.pi)
        uu, pp = np.meshgrid(u, phi, indexing="ij")
        ss = np.sqrt(1.0 - uu * uu)
        nodes = self.radius * np.column_stack(((ss * np.cos(pp)).ravel(), (ss * np.sin(pp)).ravel(), uu.ravel()))
        return nodes, np.full(len(nodes), self.hausdorff_measure() / len(nodes))

    def enlarged_volume(self, r: float) -> float:
        R = self.radius
        if r < R:
            return 4.0 * math.pi * ((R + r) ** 3 - (R - r) ** 3) / 3.0
        return 4.0 * math.pi * (R + r) ** 3 / 3.0

    def boundary_parts(self):
        return 0.0, self.hausdorff_measure(), 0.0

    def boundary_quadrature(self, steps: int):
        nodes, weights = self.quadrature(steps)
        return [(nodes, weights, 2.0)]

    def measure_in_ball(self, center, radius: float, steps: int = 0) -> float:
        c = as_point(center, 3)
        dist = float(np.linalg.norm(c))
        R = self.radius
        if dist == 0.0:
            return self.hausdorff_measure() if R <= radius else 0.0
        # Spherical cap {p . c/|c| >= z0}.
        z0 = (R * R + dist * dist - radius * radius) / (2.0 * dist)
        return 2.0 * math.pi * R * (R - min(max(z0, -R), R))

    def intersects_box(self, lo, hi) -> bool:
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        far = np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi)))
        return box_distance(np.zeros(3), lo, hi) <= self.radius <= far

    def params(self) -> dict:
        return {"radius": self.radius}


SHAPE_TYPES = {
    cls.kind: cls
    for cls in (Segment, Polyline, Circle, Disc, DiscWithWhisker, DiscPair, Ball, Sphere)
}


def shape_from_params(kind: str, params: dict) -> GrainShape:
    """Rebuilds a shape from `GrainShape.describe()` output."""
    if kind not in SHAPE_TYPES:
        raise ArgumentError(f"Unknown shape kind '{kind}'")
    return SHAPE_TYPES[kind](**params)
