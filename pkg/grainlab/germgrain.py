"""
Germ-grain models: germs and marks composed into realizations of the union
of translated grains, with coverage queries and envelope validation.

Grain families evaluate distances for whole batches of (germ, mark) pairs at
once; the Monte Carlo engines of the density and surface modules rely on
that to avoid building a shape object per grain.
"""

import hashlib
import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
from shapely import STRtree, affinity
from shapely.ops import unary_union

from grainlab.errors import ArgumentError, DimensionError, ModelValidationError
from grainlab.geometry import (
    Ball,
    Circle,
    Disc,
    DiscWithWhisker,
    DistanceRaster,
    Grain,
    GrainShape,
    Polyline,
    RegularityEnvelope,
    Segment,
    Sphere,
    Window,
    as_point,
)
from grainlab.geometry.shapes import box_polygon, segment_distance
from grainlab.pointproc import GermLaw, MarkDistribution, OneGrainGerms, PoissonGerms
from grainlab.replication import DEFAULT_CHUNK_SIZE, chunk_layout, stream_generator

logger = logging.getLogger(__name__)

# Relative slack when comparing coincident curve pieces.
COINCIDENCE_TOLERANCE = 1e-12


def _norms(offsets: np.ndarray) -> np.ndarray:
    return np.linalg.norm(offsets, axis=1)


# --- Grain families ---

class GrainFamily(ABC):
    """
    A parametric family of grain shapes indexed by marks.

    Distances are evaluated for paired rows: offsets[i] = x - germ[i] and
    marks[i].
    """

    kind: str = "family"
    dim: int = 1
    ambient_dim: int = 2
    mark_width: int = 1
    mark_fields: tuple[str, ...] = ()

    @abstractmethod
    def build(self, mark) -> GrainShape:
        pass

    @abstractmethod
    def envelope(self, mark) -> RegularityEnvelope:
        pass

    @abstractmethod
    def distances(self, offsets: np.ndarray, marks: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def local_boxes(self, marks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pass

    @abstractmethod
    def radius_bound(self, lo: np.ndarray, hi: np.ndarray) -> float:
        """Upper bound of the bounding radius over marks within [lo, hi]."""
        pass

    def interior_distances(self, offsets: np.ndarray, marks: np.ndarray) -> np.ndarray:
        return np.full(len(offsets), np.inf)

    def max_bounding_radius(self, q: MarkDistribution) -> float:
        lo, hi = q.support_bounds()
        return float(self.radius_bound(np.asarray(lo, float), np.asarray(hi, float)))

    def gamma_lower_bound(self, q: MarkDistribution) -> float:
        """Uniform gamma over the support of Q (0 when none exists)."""
        lo, _ = q.support_bounds()
        try:
            return self.envelope(lo).gamma
        except ArgumentError:
            return 0.0

    def describe(self) -> dict:
        return {"shape": self.kind}


class SegmentFamily(GrainFamily):
    """
    Planar segments centred on the germ with marks (length, angle).

    With `extend_short`, the envelope of a segment shorter than 2 is its
    homothetic extension to length 2, which has gamma = 1.
    """

    kind = "segment"
    dim = 1
    ambient_dim = 2
    mark_width = 2
    mark_fields = ("length", "angle")

    def __init__(self, extend_short: bool = True):
        self.extend_short = extend_short

    def build(self, mark):
        return Segment(mark[0], mark[1])

    def envelope(self, mark):
        length, angle = float(mark[0]), float(mark[1])
        if length < 2.0 and self.extend_short:
            return RegularityEnvelope(Segment(2.0, angle), 1.0)
        if length <= 0:
            raise ArgumentError("Segment envelope needs a positive length")
        return RegularityEnvelope(Segment(length, angle), min(1.0, length))

    def distances(self, offsets, marks):
        half = 0.5 * marks[:, 0]
        direction = np.column_stack((np.cos(marks[:, 1]), np.sin(marks[:, 1])))
        t = np.clip(np.einsum("ij,ij->i", offsets, direction), -half, half)
        return _norms(offsets - t[:, None] * direction)

    def local_boxes(self, marks):
        half = 0.5 * marks[:, :1] * np.abs(np.column_stack((np.cos(marks[:, 1]), np.sin(marks[:, 1]))))
        return -half, half

    def radius_bound(self, lo, hi):
        return 0.5 * hi[0]

    def gamma_lower_bound(self, q):
        if self.extend_short:
            return 1.0
        lo, _ = q.support_bounds()
        return min(1.0, float(lo[0]))

    def describe(self):
        return {"shape": self.kind, "extend_short": self.extend_short}


class PolylineFamily(GrainFamily):
    """
    Rotated copies of a planar polyline template; mark (angle,).

    One vertex of the template sits on the germ so that every rotation
    keeps the germ inside the grain.
    """

    kind = "polyline"
    dim = 1
    ambient_dim = 2
    mark_width = 1
    mark_fields = ("angle",)

    def __init__(self, template: Polyline):
        if template.ambient_dim != 2:
            raise DimensionError("PolylineFamily needs a planar template")
        if not np.any(np.all(template.vertices == 0.0, axis=1)):
            raise ModelValidationError("PolylineFamily: one template vertex must be the origin")
        self.template = template
        self.reach = float(_norms(template.vertices).max())

    def build(self, mark):
        return self.template.rotated(float(mark[0]))

    def envelope(self, mark):
        return RegularityEnvelope(self.build(mark), min(1.0, float(self.template.edge_lengths.min())))

    def distances(self, offsets, marks):
        # Rotate the query into the template frame instead of rotating the template.
        c, s = np.cos(marks[:, 0]), np.sin(marks[:, 0])
        local = np.column_stack((c * offsets[:, 0] + s * offsets[:, 1], -s * offsets[:, 0] + c * offsets[:, 1]))
        return np.min([segment_distance(local, a, b) for a, b in self.template.edges()], axis=0)

    def local_boxes(self, marks):
        c, s = np.cos(marks[:, 0])[:, None], np.sin(marks[:, 0])[:, None]
        vx, vy = self.template.vertices[:, 0], self.template.vertices[:, 1]
        x = c * vx - s * vy
        y = s * vx + c * vy
        return np.column_stack((x.min(axis=1), y.min(axis=1))), np.column_stack((x.max(axis=1), y.max(axis=1)))

    def radius_bound(self, lo, hi):
        return self.reach

    def describe(self):
        return {"shape": self.kind, "vertices": self.template.vertices.tolist()}


class _RadialFamily(GrainFamily):
    """Families of origin-centred round shapes with mark (radius,)."""

    mark_width = 1
    mark_fields = ("radius",)
    shape_type: type = Circle
    solid = False

    def build(self, mark):
        return self.shape_type(mark[0])

    def envelope(self, mark):
        return RegularityEnvelope(self.build(mark), self.gamma(float(mark[0])))

    def gamma(self, radius: float) -> float:
        raise NotImplementedError

    def distances(self, offsets, marks):
        gap = _norms(offsets) - marks[:, 0]
        return np.maximum(gap, 0.0) if self.solid else np.abs(gap)

    def interior_distances(self, offsets, marks):
        if not self.solid:
            return super().interior_distances(offsets, marks)
        return np.maximum(_norms(offsets) - marks[:, 0], 0.0)

    def local_boxes(self, marks):
        r = np.repeat(marks[:, :1], self.ambient_dim, axis=1)
        return -r, r

    def radius_bound(self, lo, hi):
        return hi[0]


class CircleFamily(_RadialFamily):
    kind = "circle"
    dim = 1
    ambient_dim = 2
    shape_type = Circle

    def gamma(self, radius):
        # Arcs of a circle through x have length >= 2 rho until the whole circle fits.
        return min(1.0, 2.0 * math.pi * radius)


class DiscFamily(_RadialFamily):
    kind = "disc"
    dim = 2
    ambient_dim = 2
    shape_type = Disc
    solid = True

    def gamma(self, radius):
        # A disc of radius min(rho, R) / 2 fits in both sets.
        return math.pi / 4.0 * min(1.0, radius) ** 2


class SphereFamily(_RadialFamily):
    kind = "sphere"
    dim = 2
    ambient_dim = 3
    shape_type = Sphere

    def gamma(self, radius):
        # Caps of a sphere through x have area pi rho^2 while rho <= 2R.
        return min(1.0, 4.0 * math.pi * radius ** 2)


class BallFamily(_RadialFamily):
    kind = "ball"
    dim = 3
    ambient_dim = 3
    shape_type = Ball
    solid = True

    def gamma(self, radius):
        return math.pi / 6.0 * min(1.0, radius) ** 3


class WhiskerDiscFamily(GrainFamily):
    """
    Discs with a radial whisker; mark (radius, whisker, angle).

    The whisker has zero area, so the envelope is the disc of radius
    R + whisker that contains the whole grain.
    """

    kind = "disc_whisker"
    dim = 2
    ambient_dim = 2
    mark_width = 3
    mark_fields = ("radius", "whisker", "angle")

    def build(self, mark):
        return DiscWithWhisker(mark[0], mark[1], mark[2])

    def envelope(self, mark):
        outer = float(mark[0]) + float(mark[1])
        return RegularityEnvelope(Disc(outer), math.pi / 4.0 * min(1.0, outer) ** 2)

    def _whisker_distance(self, offsets, marks):
        direction = np.column_stack((np.cos(marks[:, 2]), np.sin(marks[:, 2])))
        t = np.clip(np.einsum("ij,ij->i", offsets, direction), marks[:, 0], marks[:, 0] + marks[:, 1])
        return _norms(offsets - t[:, None] * direction)

    def distances(self, offsets, marks):
        disc = np.maximum(_norms(offsets) - marks[:, 0], 0.0)
        return np.minimum(disc, self._whisker_distance(offsets, marks))

    def interior_distances(self, offsets, marks):
        return np.maximum(_norms(offsets) - marks[:, 0], 0.0)

    def local_boxes(self, marks):
        r = marks[:, :1]
        tip = (marks[:, :1] + marks[:, 1:2]) * np.column_stack((np.cos(marks[:, 2]), np.sin(marks[:, 2])))
        return np.minimum(-r, tip), np.maximum(r, tip)

    def radius_bound(self, lo, hi):
        return hi[0] + hi[1]


FAMILY_TYPES = {
    cls.kind: cls
    for cls in (SegmentFamily, PolylineFamily, CircleFamily, DiscFamily, SphereFamily, BallFamily, WhiskerDiscFamily)
}


# --- Position modulation ---

class PositionModulation(ABC):
    """Retention probability p(x, s) applied as a thinning stage after marking."""

    @abstractmethod
    def __call__(self, points: np.ndarray, marks: np.ndarray) -> np.ndarray:
        pass

    def check_family(self, family: GrainFamily):
        pass

    @abstractmethod
    def describe(self) -> dict:
        pass


class LengthCutoff(PositionModulation):
    """Keeps a segment iff its length is at most base + gradient . x."""

    def __init__(self, base: float, gradient):
        self.base = float(base)
        self.gradient = np.asarray(gradient, dtype=float)

    def __call__(self, points, marks):
        return (marks[:, 0] <= self.base + points @ self.gradient).astype(float)

    def check_family(self, family):
        if not isinstance(family, SegmentFamily):
            raise ModelValidationError("length_cutoff modulation applies to segment grains only")

    def describe(self):
        return {"kind": "length_cutoff", "base": self.base, "gradient": self.gradient.tolist()}


# --- Model ---

@dataclass(frozen=True, eq=False)
class GermGrainModel:
    """
    Germ law, window, mark distribution and grain family.

    The window is the observation window. Whole-space germ laws are sampled
    on it dilated by the maximal grain bounding radius, so the union of the
    grains has the correct law inside the window.
    """

    germ_law: GermLaw
    window: Window
    marks: MarkDistribution
    family: GrainFamily
    position_modulation: PositionModulation | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.family.ambient_dim != self.window.dim:
            raise ModelValidationError(
                f"{self.family.kind} grains live in d = {self.family.ambient_dim}, window has d = {self.window.dim}")
        self.germ_law.check_dimension(self.window.dim)
        if self.marks.width != self.family.mark_width:
            raise ModelValidationError(
                f"{self.family.kind} grains need marks {self.family.mark_fields}, got width {self.marks.width}")
        if self.position_modulation is not None:
            self.position_modulation.check_family(self.family)

    @property
    def grain_dim(self) -> int:
        return self.family.dim

    @property
    def ambient_dim(self) -> int:
        return self.window.dim

    @property
    def codim(self) -> int:
        return self.window.dim - self.family.dim

    def shape_builder(self, mark) -> GrainShape:
        return self.family.build(mark)

    def envelope_rule(self, mark) -> RegularityEnvelope:
        return self.family.envelope(mark)

    @property
    def is_boolean(self) -> bool:
        return isinstance(self.germ_law, PoissonGerms)

    @property
    def is_one_grain(self) -> bool:
        return isinstance(self.germ_law, OneGrainGerms)

    @cached_property
    def max_bounding_radius(self) -> float:
        reach = self.family.max_bounding_radius(self.marks)
        if not math.isfinite(reach):
            raise ModelValidationError(f"{self.family.kind} grains have no finite maximal bounding radius")
        return reach

    @cached_property
    def sampling_window(self) -> Window:
        return self.germ_law.sampling_window(self.window, self.max_bounding_radius)

    def intensity(self, points: np.ndarray, marks: np.ndarray) -> np.ndarray:
        """lambda(x, s) for paired rows of points and marks (marks may be a single row)."""
        values = self.germ_law.intensity(self.sampling_window, points)
        if self.position_modulation is not None:
            marks = np.broadcast_to(np.atleast_2d(marks), (len(points), self.marks.width))
            values = values * self.position_modulation(points, marks)
        return values

    def describe(self) -> dict:
        return {
            "name": self.name,
            "germs": self.germ_law.describe(),
            "window": self.window.describe(),
            "grains": self.family.describe(),
            "marks": self.marks.describe(),
            "modulation": None if self.position_modulation is None else self.position_modulation.describe(),
        }

    @cached_property
    def fingerprint(self) -> str:
        payload = json.dumps(self.describe(), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class GrainBatch(NamedTuple):
    """Germs and marks of `count` replications with the owning replication of each grain."""
    germs: np.ndarray
    marks: np.ndarray
    owners: np.ndarray
    count: int


def query_region(x, reach: float) -> Window:
    """Box of half width `reach` around a query point."""
    return Window.around(as_point(x), max(reach, 1e-9))


def sample_batch(model: GermGrainModel, rng: np.random.Generator, count: int,
                 region: Window | None = None) -> GrainBatch:
    """
    Grains of `count` independent replications.

    With a region, only grains whose germ lies within the maximal bounding
    radius of it are returned; their joint law is the law of the grains
    that can meet the region.
    """
    target = None if region is None else region.dilate(model.max_bounding_radius)
    germs, owners = model.germ_law.sample_batch(rng, model.sampling_window, count, target)
    marks = model.marks.sample(rng, len(germs))
    if model.position_modulation is not None and len(germs):
        keep_probability = model.position_modulation(germs, marks)
        if np.any(keep_probability < 0) or np.any(keep_probability > 1):
            raise ModelValidationError("position modulation must return probabilities in [0, 1]")
        keep = rng.random(len(germs)) < keep_probability
        germs, marks, owners = germs[keep], marks[keep], owners[keep]
    return GrainBatch(germs, marks, owners, count)


@dataclass(frozen=True, eq=False)
class Realization:
    """One sampled union of grains; immutable."""

    germs: np.ndarray
    marks: np.ndarray
    family: GrainFamily
    seed: int = 0
    fingerprint: str = ""
    index: int = 0
    region: Window | None = None

    def __len__(self):
        return len(self.germs)

    @cached_property
    def boxes(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.family.local_boxes(self.marks)
        return self.germs + lo, self.germs + hi

    @cached_property
    def grains(self) -> tuple[Grain, ...]:
        return tuple(Grain(g, self.family.build(m)) for g, m in zip(self.germs, self.marks))

    def distances(self, x, r: float | None = None) -> np.ndarray:
        """Distances from x to the grains whose box dilated by r contains x (all grains if r is None)."""
        point = as_point(x, self.family.ambient_dim)
        if not len(self):
            return np.zeros(0)
        if r is None:
            return self.family.distances(point - self.germs, self.marks)
        lo, hi = self.boxes
        near = np.all((lo - r <= point) & (point <= hi + r), axis=1)
        return self.family.distances(point - self.germs[near], self.marks[near])

    def grain_records(self) -> list[dict]:
        """One JSON-ready record per grain."""
        return [
            {"seed": self.seed, "realization": self.index, **grain.describe()}
            for grain in self.grains
        ]


def split_batch(batch: GrainBatch, family: GrainFamily, seed: int, fingerprint: str,
                 first_index: int, region: Window | None) -> list[Realization]:
    bounds = np.searchsorted(batch.owners, np.arange(batch.count + 1))
    return [
        Realization(batch.germs[a:b], batch.marks[a:b], family, seed, fingerprint, first_index + j, region)
        for j, (a, b) in enumerate(zip(bounds[:-1], bounds[1:]))
    ]


def realize_batch(model: GermGrainModel, rng_seed: int, count: int, region: Window | None = None,
                  chunk_size: int = DEFAULT_CHUNK_SIZE) -> list[Realization]:
    """
    `count` independent realizations. Realization i uses the same random
    stream as replication i of the Monte Carlo studies with equal seed,
    region and chunk size.
    """
    realizations = []
    for k, start, chunk in chunk_layout(count, chunk_size):
        batch = sample_batch(model, stream_generator(rng_seed, k), chunk, region)
        realizations.extend(split_batch(batch, model.family, rng_seed, model.fingerprint, start, region))
    return realizations


def realize(model: GermGrainModel, rng_seed: int, region: Window | None = None) -> Realization:
    """One realization of the model; deterministic per seed."""
    return realize_batch(model, rng_seed, 1, region)[0]


def _check_radius(r: float):
    if not r >= 0:
        raise ArgumentError(f"coverage radius must be nonnegative, got {r}")


def covering_count(real: Realization, x, r: float, prune: bool = True) -> int:
    """Number of grains within distance r of x."""
    _check_radius(r)
    return int(np.count_nonzero(real.distances(x, r if prune else None) <= r))


def covers(real: Realization, x, r: float, prune: bool = True) -> bool:
    """Whether x lies in the closed r-parallel set of the union of grains."""
    return covering_count(real, x, r, prune) > 0


def pair_cover_count(real: Realization, x, r: float) -> int:
    """Number of unordered pairs of distinct grains both within distance r of x."""
    count = covering_count(real, x, r)
    return count * (count - 1) // 2


# --- Measure in a region ---

class RegionMeasure(NamedTuple):
    value: float
    overlap_pairs: int
    overlap_measure: float
    warnings: tuple[str, ...]


def _curve_line(grain: Grain):
    """The grain as a shapely line in window coordinates, or None for round grains."""
    if isinstance(grain.shape, (Segment, Polyline)):
        return affinity.translate(grain.shape.line, *grain.germ)
    return None


def _same_round(a: Grain, b: Grain) -> bool:
    return (np.allclose(a.germ, b.germ, rtol=0, atol=COINCIDENCE_TOLERANCE)
            and abs(a.shape.radius - b.shape.radius) <= COINCIDENCE_TOLERANCE)


def _line_union(lines: list, region: Window) -> tuple[float, float, int]:
    """(union length, excess length, coincident pairs) of lines clipped to the region."""
    window = box_polygon(region.lo_array, region.hi_array)
    pieces = [g for g in (line.intersection(window) for line in lines) if not g.is_empty]
    if not pieces:
        return 0.0, 0.0, 0
    union = unary_union(pieces).length
    excess = max(0.0, sum(p.length for p in pieces) - union)
    tree = STRtree(pieces)
    left, right = tree.query(pieces, predicate="intersects")
    pairs = sum(
        1 for i, j in zip(left, right)
        if i < j and pieces[i].intersection(pieces[j]).length > COINCIDENCE_TOLERANCE
    )
    return union, excess, pairs


def _round_union(grains: list[Grain], region: Window, steps: int) -> tuple[float, float, int]:
    """(union measure, excess measure, coincident pairs) of circles or spheres in the region."""
    seen: list[Grain] = []
    total, excess, pairs = 0.0, 0.0, 0
    for grain in grains:
        measure = grain.shape.measure_in_box(region.lo_array - grain.germ, region.hi_array - grain.germ, steps)
        twins = sum(1 for earlier in seen if _same_round(earlier, grain))
        if twins:
            pairs += twins
            excess += measure
        else:
            total += measure
        seen.append(grain)
    return total, excess, pairs


def measure_in_region(real: Realization, region: Window, tol: float) -> RegionMeasure:
    """
    H^n of the union of grains inside a box.

    Segments and polylines are clipped and merged as shapely lines, so
    coincident pieces are counted once; circles and spheres are measured by
    quadrature with node spacing `tol` and identical copies counted once.
    Full-dimensional grains are rasterized with cell size about `tol`.
    """
    if not tol > 0:
        raise ArgumentError(f"measure_in_region: tol must be positive, got {tol}")
    warnings = []
    if tol > 0.1 * float(region.extent.min()):
        warnings.append(f"tolerance {tol} is coarse relative to the region extent {region.extent.min()}")
    if not len(real):
        return RegionMeasure(0.0, 0, 0.0, tuple(warnings))

    lo, hi = real.boxes
    hit = np.all((lo <= region.hi_array) & (hi >= region.lo_array), axis=1)
    grains = [g for g, h in zip(real.grains, hit) if h]

    if real.family.dim == real.family.ambient_dim:
        resolution = max(16, math.ceil(float(region.extent.max()) / tol))
        raster = DistanceRaster(region, resolution)
        field = raster.distance_field(grains, raster.cell_diagonal, interior=True)
        estimate = raster.volume(field, 0.0)
        return RegionMeasure(estimate.value, 0, 0.0, tuple(warnings))

    steps = max(1, math.ceil(1.0 / tol))
    lines = [_curve_line(g) for g in grains]
    straight = _line_union([line for line in lines if line is not None], region)
    rounds = _round_union([g for g, line in zip(grains, lines) if line is None], region, steps)
    value, excess, pairs = (a + b for a, b in zip(straight, rounds))
    if pairs:
        logger.debug("Realization: %d coincident grain pairs (excess %.6g) in region", pairs, excess)
    return RegionMeasure(value, int(pairs), excess, tuple(warnings))


# --- Envelope validation ---

class EnvelopeCheck(NamedTuple):
    min_ratio: float
    gamma: float
    passed: bool


def envelope_check(model: GermGrainModel, marks: np.ndarray | None, rng_seed: int,
                   trials: int = 64) -> EnvelopeCheck:
    """
    Spot check of the envelope's lower mass bound: for each mark, a random
    point x of the grain and rho in (0, 1), compare
    H^n(envelope ∩ B_rho(x)) / rho^n with gamma.

    Args:
        model: Germ-grain model
        marks: Marks to check, or None to sample `trials` marks from the model
        rng_seed: Seed for the mark sample and the probe points
        trials: Number of sampled marks when `marks` is None
    """
    if trials < 1:
        raise ArgumentError("envelope_check needs at least one trial")
    rng = stream_generator(rng_seed, 0)
    if marks is None:
        marks = model.marks.sample(rng, trials)
    marks = np.atleast_2d(np.asarray(marks, dtype=float))
    n = model.grain_dim
    min_ratio, min_gamma, passed = math.inf, 1.0, True
    for mark in marks:
        envelope = model.envelope_rule(mark)
        if envelope.shape.hausdorff_measure() < model.shape_builder(mark).hausdorff_measure() * (1 - 1e-12):
            passed = False
        nodes, _ = model.shape_builder(mark).quadrature(64)
        x = nodes[rng.integers(len(nodes))]
        rho = rng.uniform(0.01, 1.0)
        ratio = envelope.shape.measure_in_ball(x, rho) / rho ** n
        min_ratio = min(min_ratio, ratio)
        min_gamma = min(min_gamma, envelope.gamma)
        if ratio < envelope.gamma * (1.0 - 1e-9):
            passed = False
    return EnvelopeCheck(min_ratio, min_gamma, passed)


def meets_box(real: Realization, lo, hi) -> bool:
    """Whether any grain meets the closed box [lo, hi]."""
    if not len(real):
        return False
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    box_lo, box_hi = real.boxes
    candidates = np.flatnonzero(np.all((box_lo <= hi) & (box_hi >= lo), axis=1))
    return any(real.grains[i].shape.intersects_box(lo - real.germs[i], hi - real.germs[i]) for i in candidates)
