"""
Surface quantities of germ-grain sets: boundary decomposition of catalog
grains, specific area, mean outer Minkowski content and the local spherical
contact distribution.

Boundary points of density zero (whiskers, bare curves) count twice in the
outer content; the theoretical routes carry that factor through the
boundary quadrature of each shape.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from grainlab.density import (
    DEFAULT_STEPS,
    CurvePoint,
    DensityEstimate,
    Extrapolation,
    RatioCurve,
    covering_mass,
    nearest_grain_distances,
)
from grainlab.errors import ArgumentError, IllConditionedError, UnsupportedModelError
from grainlab.geometry import GrainShape, Window, as_point, outer_minkowski_curve
from grainlab.germgrain import GermGrainModel, sample_batch, split_batch
from grainlab.replication import DEFAULT_CHUNK_SIZE, ReplicationPool

logger = logging.getLogger(__name__)

# Smallest estimated P(x not in Theta) accepted for the conditional contact distribution.
CONDITIONING_THRESHOLD = 0.05
BOUNDARY_PARTS = ("essential", "whisker", "boundary")


@dataclass(frozen=True)
class BoundaryDecomposition:
    """
    Split of the boundary measure by Lebesgue density: essential boundary
    (density 1/2), points of density 0 and points of density 1.
    """

    essential: float
    whisker: float
    interiorised: float

    def __post_init__(self):
        if min(self.essential, self.whisker, self.interiorised) < 0:
            raise ArgumentError("Boundary measures must be nonnegative")

    @property
    def total(self) -> float:
        return self.essential + self.whisker + self.interiorised

    @property
    def outer_content(self) -> float:
        """Outer Minkowski content: essential boundary plus twice the density-zero part."""
        return self.essential + 2.0 * self.whisker


def boundary_decomposition(shape: GrainShape) -> BoundaryDecomposition:
    """Analytic decomposition of a catalog shape; others raise UnsupportedShapeError."""
    return BoundaryDecomposition(*shape.boundary_parts())


@dataclass(frozen=True)
class ContactCurve:
    """H(r) = P(x in Theta_r | x not in Theta) over nondecreasing radii."""

    entries: tuple[CurvePoint, ...]
    conditioning: float
    conditioning_stderr: float = 0.0
    replications: int = 0
    seed: int = 0

    def __post_init__(self):
        entries = tuple(CurvePoint(*e) for e in self.entries)
        radii = [e.r for e in entries]
        if any(r < 0 for r in radii) or any(a >= b for a, b in zip(radii, radii[1:])):
            raise ArgumentError(f"ContactCurve radii must be nonnegative and increasing, got {radii}")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    @property
    def radii(self) -> np.ndarray:
        return np.array([e.r for e in self.entries])

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries])

    def rows(self) -> list[dict]:
        return [e._asdict() for e in self.entries]


class SpecificArea(NamedTuple):
    curve: RatioCurve
    extrapolated: float
    stderr: float
    residual: float


# --- Monte Carlo ---

def annulus_probability(model: GermGrainModel, x, r: float, replications: int, rng_seed: int,
                        chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> DensityEstimate:
    """P(x in Theta_r minus Theta): x within r of the union but not in it."""
    if not r > 0:
        raise ArgumentError(f"annulus_probability: r must be positive, got {r}")
    nearest = nearest_grain_distances(model, x, r, replications, rng_seed, chunk_size, workers).nearest
    hits = int(np.count_nonzero((nearest > 0) & (nearest <= r)))
    return DensityEstimate.from_hits(hits, replications, r, rng_seed)


def specific_area(model: GermGrainModel, x, radii: Sequence[float], replications: int, rng_seed: int,
                  chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1, last: int = 3) -> SpecificArea:
    """
    annulus_probability / r over decreasing radii on shared replications,
    extrapolated linearly to r = 0 over the `last` smallest radii.
    """
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii) or any(a <= b for a, b in zip(radii, radii[1:])):
        raise ArgumentError(f"Radii must be positive and strictly decreasing, got {radii}")
    logger.info("Surface: specific area at %s over %d radii, N = %d", list(np.ravel(x)), len(radii), replications)
    nearest = nearest_grain_distances(model, x, radii[0], replications, rng_seed, chunk_size, workers).nearest
    outside = nearest > 0
    entries = []
    for r in radii:
        estimate = DensityEstimate.from_hits(int(np.count_nonzero(outside & (nearest <= r))), replications,
                                             r, rng_seed, r)
        entries.append(CurvePoint(r, estimate.value, estimate.stderr))
    curve = RatioCurve(tuple(entries), replications, rng_seed)
    fit: Extrapolation = curve.extrapolate(last)
    return SpecificArea(curve, max(fit.value, 0.0), fit.stderr, fit.residual)


def contact_distribution(model: GermGrainModel, x, radii: Sequence[float], replications: int, rng_seed: int,
                         chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1,
                         threshold: float = CONDITIONING_THRESHOLD) -> ContactCurve:
    """
    Local spherical contact distribution at x on increasing radii, all
    conditioned on the same estimate of P(x not in Theta).

    Raises IllConditionedError when that estimate falls below `threshold`.
    """
    radii = [float(r) for r in radii]
    if not radii:
        raise ArgumentError("contact_distribution needs at least one radius")
    reach = max(max(radii), 1e-9)
    nearest = nearest_grain_distances(model, x, reach, replications, rng_seed, chunk_size, workers).nearest
    outside = nearest > 0
    n_outside = int(np.count_nonzero(outside))
    void = n_outside / replications
    if void < threshold:
        raise IllConditionedError(
            f"P(x not in Theta) estimated at {void:.4g} < {threshold}; the contact distribution is ill-conditioned")
    entries = []
    for r in radii:
        h = int(np.count_nonzero(outside & (nearest <= r))) / n_outside
        entries.append(CurvePoint(r, h, math.sqrt(h * (1.0 - h) / n_outside)))
    return ContactCurve(tuple(entries), void, math.sqrt(void * (1.0 - void) / replications), replications, rng_seed)


def contact_derivative_at_zero(curve: ContactCurve, points: int = 3) -> float:
    """
    Right derivative of H at 0 from the `points` smallest positive radii:
    weighted least-squares line through the origin with weights 1/r, i.e.
    sum(H) / sum(r).
    """
    positive = [e for e in curve.entries if e.r > 0]
    if len(positive) < max(points, 3):
        raise ArgumentError(f"contact_derivative_at_zero needs at least {max(points, 3)} positive radii, "
                            f"got {len(positive)}")
    head = positive[:points]
    return sum(e.value for e in head) / sum(e.r for e in head)


def contact_derivative_stderr(curve: ContactCurve, points: int = 3) -> float:
    """Standard error bound sum(se) / sum(r) of contact_derivative_at_zero."""
    head = [e for e in curve.entries if e.r > 0][:points]
    return sum(e.stderr for e in head) / sum(e.r for e in head)


def mean_outer_content(model: GermGrainModel, region: Window, radii: Sequence[float], replications: int,
                       rng_seed: int, resolution: int = 256, chunk_size: int = DEFAULT_CHUNK_SIZE,
                       workers: int = 1) -> RatioCurve:
    """
    E[volume of (Theta_r minus Theta) inside the region] / r per radius,
    measured on the grid oracle.
    """
    if model.grain_dim != model.ambient_dim:
        raise UnsupportedModelError(
            f"{model.family.kind} grains are lower-dimensional; use the density module's Minkowski content")
    radii = [float(r) for r in radii]
    if not radii or any(not 0 < r < 1 for r in radii) or any(a <= b for a, b in zip(radii, radii[1:])):
        raise ArgumentError(f"Radii must lie in (0, 1) and strictly decrease, got {radii}")
    target = region.dilate(radii[0])

    def task(rng, start, count):
        batch = sample_batch(model, rng, count, target)
        sums = np.zeros(len(radii))
        squares = np.zeros(len(radii))
        for real in split_batch(batch, model.family, rng_seed, model.fingerprint, start, target):
            values = np.array([e.value for e in outer_minkowski_curve(list(real.grains), radii, region, resolution)])
            sums += values
            squares += values ** 2
        return sums, squares

    chunks = ReplicationPool(workers, chunk_size).map_chunks(task, replications, rng_seed)
    mean = np.sum([c[0] for c in chunks], axis=0) / replications
    spread = np.sqrt(np.maximum(np.sum([c[1] for c in chunks], axis=0) / replications - mean ** 2, 0.0)
                     / replications)
    return RatioCurve(tuple(CurvePoint(r, float(m), float(e)) for r, m, e in zip(radii, mean, spread)),
                      replications, rng_seed)


# --- Theory ---

def _boundary_integrals(model: GermGrainModel, x, steps: int) -> tuple[float, float]:
    """
    Integrals of lambda(., s) over x - (essential boundary) and over
    x - (density-zero boundary), averaged over the marks.
    """
    point = as_point(x, model.ambient_dim)
    nodes, weights = model.marks.quadrature(max(16, steps // 16))
    essential = whisker = 0.0
    for mark, weight in zip(nodes, weights):
        for part_nodes, part_weights, factor in model.shape_builder(mark).boundary_quadrature(steps):
            value = weight * float(part_weights @ model.intensity(point - part_nodes, mark))
            if factor == 1.0:
                essential += value
            else:
                whisker += value
    return essential, whisker


def boundary_bracket(model: GermGrainModel, x, steps: int = DEFAULT_STEPS) -> float:
    """Essential boundary integral plus twice the density-zero boundary integral."""
    essential, whisker = _boundary_integrals(model, x, steps)
    return essential + 2.0 * whisker


def void_probability(model: GermGrainModel, x, steps: int = DEFAULT_STEPS) -> float:
    """P(x not in Theta): exp(-mass) for Boolean models, 1 - mass for one-grain models."""
    mass = covering_mass(model, x, 0.0, steps)
    if model.is_boolean:
        return math.exp(-mass)
    if model.is_one_grain:
        return 1.0 - mass
    raise UnsupportedModelError(f"No closed-form void probability for {model.germ_law.name} germs")


def boolean_specific_area_theoretical(model: GermGrainModel, x, steps: int = DEFAULT_STEPS) -> float:
    """Specific area of a Boolean model: void probability times the boundary bracket."""
    if not model.is_boolean:
        raise UnsupportedModelError(f"The Boolean specific-area formula does not apply to {model.germ_law.name} germs")
    return void_probability(model, x, steps) * boundary_bracket(model, x, steps)


def onegrain_specific_area_theoretical(model: GermGrainModel, x, steps: int = DEFAULT_STEPS) -> float:
    """Specific area of a one-grain model: the boundary bracket, without a void-probability factor."""
    if not model.is_one_grain:
        raise UnsupportedModelError(f"The one-grain specific-area formula does not apply to {model.germ_law.name} germs")
    return boundary_bracket(model, x, steps)


def contact_derivative_theoretical(model: GermGrainModel, x, steps: int = DEFAULT_STEPS) -> float:
    """
    Right derivative at 0 of the contact distribution. For Boolean models the
    void probability cancels and the bracket remains.
    """
    if model.is_boolean:
        return boundary_bracket(model, x, steps)
    if model.is_one_grain:
        return boundary_bracket(model, x, steps) / void_probability(model, x, steps)
    raise UnsupportedModelError(f"No closed-form contact derivative for {model.germ_law.name} germs")


def boundary_density_theoretical(model: GermGrainModel, x, steps: int = DEFAULT_STEPS,
                                 part: str = "boundary") -> float:
    """
    Mean density at x of the essential boundary, of the density-zero
    boundary, or of the whole boundary of Theta.

    Boolean boundary points survive only outside the other grains, which
    adds the void-probability factor.
    """
    if part not in BOUNDARY_PARTS:
        raise ArgumentError(f"part must be one of {BOUNDARY_PARTS}, got {part!r}")
    essential, whisker = _boundary_integrals(model, x, steps)
    value = {"essential": essential, "whisker": whisker, "boundary": essential + whisker}[part]
    if model.is_boolean:
        return void_probability(model, x, steps) * value
    if model.is_one_grain:
        return value
    raise UnsupportedModelError(f"No closed-form boundary density for {model.germ_law.name} germs")


def expected_outer_content(model: GermGrainModel, steps: int = DEFAULT_STEPS) -> float:
    """
    Mean outer Minkowski content of a one-grain set, averaged over the
    marks. Equals the limit of mean_outer_content on any region holding
    every possible grain with its r-parallel set.
    """
    if not model.is_one_grain:
        raise UnsupportedModelError("Closed-form outer content needs a one-grain model")
    nodes, weights = model.marks.quadrature(max(16, steps // 16))
    return float(sum(w * boundary_decomposition(model.shape_builder(m)).outer_content
                     for m, w in zip(nodes, weights)))
