"""
Mean densities of germ-grain sets: the Campbell-formula oracle, Monte Carlo
ratio estimates P(x in Theta_r) / (b_{d-n} r^{d-n}) and the minimal-area
estimator with its empirical capacity functional.

Every study over several radii runs a single replication loop: each
replication reports the distances from x to its nearest and second-nearest
grain, and all radii are read off those two numbers (common random numbers).
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from grainlab.errors import ArgumentError, UnsupportedModelError, UnsupportedShapeError
from grainlab.geometry import (
    Ball,
    Disc,
    Grain,
    Window,
    as_point,
    ball_volume,
    enlarged_volume_curve,
    enlarged_volume_estimate,
    translated_grain_integral,
)
from grainlab.germgrain import (
    GermGrainModel,
    Realization,
    covers,
    meets_box,
    query_region,
    sample_batch,
    split_batch,
)
from grainlab.replication import DEFAULT_CHUNK_SIZE, ReplicationPool, derive_seed

logger = logging.getLogger(__name__)

DEFAULT_STEPS = 256
DEFAULT_RADII = (0.08, 0.04, 0.02, 0.01)
# Grid size per axis of the inhomogeneous mass integral in 3D.
MAX_MASS_GRID_3D = 128


# --- Result types ---

@dataclass(frozen=True)
class DensityEstimate:
    """
    A Monte Carlo probability, possibly normalized by b_{d-n} r^{d-n}.

    `stderr` is the binomial standard error of the hit fraction divided by
    the same normalization.
    """

    value: float
    stderr: float
    replications: int
    radius: float
    seed: int
    hits: int = 0

    @classmethod
    def from_hits(cls, hits: int, replications: int, radius: float, seed: int,
                  scale: float = 1.0) -> "DensityEstimate":
        p = hits / replications
        return cls(
            value=p / scale,
            stderr=math.sqrt(p * (1.0 - p) / replications) / scale,
            replications=replications,
            radius=radius,
            seed=seed,
            hits=int(hits),
        )


class CurvePoint(NamedTuple):
    r: float
    value: float
    stderr: float


class Extrapolation(NamedTuple):
    """Intercept of a least-squares line in r with its conservative standard error."""
    value: float
    stderr: float
    slope: float
    residual: float
    coefficients: tuple[float, ...]


def extrapolate_to_zero(radii: Sequence[float], values: Sequence[float],
                        stderrs: Sequence[float]) -> Extrapolation:
    """
    Fits value + slope * r and returns the value at r = 0.

    The intercept is a linear combination sum(c_i * v_i); its standard error
    is taken as sum(|c_i| * se_i), which holds under any correlation between
    the radii. `residual` is the RMS misfit of the line.
    """
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    se = np.asarray(stderrs, dtype=float)
    if not len(r) == len(v) == len(se) or len(r) == 0:
        raise ArgumentError("extrapolate_to_zero needs equally long, nonempty sequences")
    if len(r) == 1:
        return Extrapolation(float(v[0]), float(se[0]), 0.0, 0.0, (1.0,))
    design = np.column_stack((np.ones_like(r), r))
    coefficients = np.linalg.pinv(design)
    intercept, slope = coefficients @ v
    residual = float(np.sqrt(np.mean((v - design @ np.array([intercept, slope])) ** 2)))
    return Extrapolation(
        value=float(intercept),
        stderr=float(np.abs(coefficients[0]) @ se),
        slope=float(slope),
        residual=residual,
        coefficients=tuple(float(c) for c in coefficients[0]),
    )


@dataclass(frozen=True)
class RatioCurve:
    """Normalized Monte Carlo values over strictly decreasing radii."""

    entries: tuple[CurvePoint, ...]
    replications: int = 0
    seed: int = 0

    def __post_init__(self):
        entries = tuple(CurvePoint(*e) for e in self.entries)
        if not entries:
            raise ArgumentError("RatioCurve needs at least one entry")
        radii = [e.r for e in entries]
        if any(r <= 0 for r in radii) or any(a <= b for a, b in zip(radii, radii[1:])):
            raise ArgumentError(f"RatioCurve radii must be positive and strictly decreasing, got {radii}")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    @property
    def radii(self) -> np.ndarray:
        return np.array([e.r for e in self.entries])

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([e.stderr for e in self.entries])

    def extrapolate(self, last: int = 3) -> Extrapolation:
        """Linear extrapolation to r = 0 over the `last` smallest radii."""
        tail = self.entries[-last:]
        return extrapolate_to_zero([e.r for e in tail], [e.value for e in tail], [e.stderr for e in tail])

    def rows(self) -> list[dict]:
        return [e._asdict() for e in self.entries]


@dataclass(frozen=True)
class Tolerance:
    """Acceptance band max(sigmas * stderr, relative * |reference|)."""

    relative: float = 0.05
    sigmas: float = 4.0

    def bound(self, reference: float, stderr: float) -> float:
        return max(self.sigmas * stderr, self.relative * abs(reference))

    def accepts(self, value: float, reference: float, stderr: float) -> bool:
        return abs(value - reference) <= self.bound(reference, stderr)


@dataclass(frozen=True)
class EstimatorSchedule:
    """
    Radius schedule R_N = c * N^(-tau) for the minimal-area estimator.

    Consistency needs R_N -> 0 and N * R_N^(d-n) -> infinity, i.e. tau in
    (0, 1/(d-n)). Each N is estimated `repeats` times on independent seeds.
    """

    c: float
    tau: float
    n_values: tuple[int, ...]
    repeats: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))

    def validate(self, codim: int):
        upper = math.inf if codim == 0 else 1.0 / codim
        if not self.c > 0:
            raise ArgumentError(f"Estimator schedule: c must be positive, got {self.c}")
        if not 0 < self.tau < upper:
            raise ArgumentError(f"Estimator schedule: tau must lie in (0, {upper:g}) for codimension {codim}, "
                                f"got {self.tau}")
        if not self.n_values or self.n_values[0] < 1:
            raise ArgumentError("Estimator schedule: N values must be positive")
        if any(a >= b for a, b in zip(self.n_values, self.n_values[1:])):
            raise ArgumentError(f"Estimator schedule: N values must increase, got {list(self.n_values)}")
        if self.repeats < 1:
            raise ArgumentError(f"Estimator schedule: repeats must be at least 1, got {self.repeats}")

    def radius(self, n: int) -> float:
        return self.c * n ** (-self.tau)


class EstimatorRow(NamedTuple):
    n: int
    radius: float
    estimate: float
    abs_error: float
    stderr: float


class WeakFormAverage(NamedTuple):
    estimate: float
    stderr: float
    theory: float
    points: int


# --- Theory ---

def theoretical_density(model: GermGrainModel, x, steps: int = DEFAULT_STEPS) -> float:
    """
    Mean density at x from the Campbell representation:
    the integral over marks s of the integral of lambda(., s) over x - Z(s).

    Marks are discretized with max(16, steps // 16) nodes per mark axis;
    distributions without a discretization raise UnsupportedModelError.
    """
    point = as_point(x, model.ambient_dim)
    nodes, weights = model.marks.quadrature(max(16, steps // 16))
    total = 0.0
    for mark, weight in zip(nodes, weights):
        shape = model.shape_builder(mark)
        total += weight * translated_grain_integral(point, shape, lambda pts, m=mark: model.intensity(pts, m), steps)
    return float(total)


def integrated_density(model: GermGrainModel, region: Window, grid: int = 8, steps: int = DEFAULT_STEPS) -> float:
    """Midpoint rule for the integral of the mean density over a box."""
    points = cell_centres(region, grid)
    values = [theoretical_density(model, p, steps) for p in points]
    return float(np.mean(values) * region.volume)


def _mass_grid(shape, x: np.ndarray, r: float, steps: int) -> tuple[np.ndarray, float]:
    lo, hi = shape.bounding_box()
    box = Window(tuple(x - hi - r), tuple(x - lo + r))
    per_axis = steps if box.dim == 2 else min(steps, MAX_MASS_GRID_3D)
    return cell_centres(box, per_axis), box.volume / per_axis ** box.dim


def covering_mass(model: GermGrainModel, x, r: float, steps: int = DEFAULT_STEPS) -> float:
    """
    Mean number of grains whose r-parallel set contains x: the integral over
    marks s of the integral of lambda(y, s) over y in (x - Z(s)) dilated by r.

    Constant intensities use the enlarged volume of each shape when the
    dilated translate stays inside the sampling window; other cases are
    integrated on a grid with `steps` cells per axis.
    """
    if not r >= 0:
        raise ArgumentError(f"covering_mass: r must be nonnegative, got {r}")
    point = as_point(x, model.ambient_dim)
    level = None if model.position_modulation is not None else model.germ_law.constant_level(model.sampling_window)
    nodes, weights = model.marks.quadrature(max(16, steps // 16))
    total = 0.0
    for mark, weight in zip(nodes, weights):
        shape = model.shape_builder(mark)
        lo, hi = shape.bounding_box()
        inside = model.sampling_window.contains(np.vstack((point - hi - r, point - lo + r))).all()
        if level is not None and inside:
            if r > 0:
                volume = enlarged_volume_estimate(shape, r).value
            else:
                volume = shape.hausdorff_measure() if shape.dim == shape.ambient_dim else 0.0
            total += weight * level * volume
        else:
            centres, cell = _mass_grid(shape, point, r, steps)
            hit = shape.distance(point - centres) <= r
            total += weight * cell * float(model.intensity(centres[hit], mark).sum())
    return float(total)


def boolean_hitting_theoretical(model: GermGrainModel, x, r: float, steps: int = DEFAULT_STEPS) -> float:
    """Capacity-functional value 1 - exp(-mass) of a Boolean model for the ball B_r(x)."""
    if not model.is_boolean:
        raise UnsupportedModelError(f"{model.germ_law.name} germs: the capacity functional is Boolean-only")
    return -math.expm1(-covering_mass(model, x, r, steps))


# --- Monte Carlo engine ---

class CoverageDistances(NamedTuple):
    """Per replication: distance from x to the nearest and to the second-nearest grain."""
    nearest: np.ndarray
    second: np.ndarray


def _two_smallest(owners: np.ndarray, values: np.ndarray, count: int) -> tuple[np.ndarray, np.ndarray]:
    first = np.full(count, np.inf)
    second = np.full(count, np.inf)
    if not len(values):
        return first, second
    order = np.lexsort((values, owners))
    o, v = owners[order], values[order]
    starts = np.flatnonzero(np.r_[True, o[1:] != o[:-1]])
    first[o[starts]] = v[starts]
    follow = starts + 1
    paired = follow < len(o)
    paired[paired] = o[follow[paired]] == o[starts[paired]]
    second[o[starts[paired]]] = v[follow[paired]]
    return first, second


def nearest_grain_distances(model: GermGrainModel, x, reach: float, replications: int, rng_seed: int,
                            chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> CoverageDistances:
    """
    Nearest and second-nearest grain distances from x over independent
    replications, exact whenever they do not exceed `reach`.

    Only grains that can come within `reach` of x are sampled. Replication
    i matches realization i of `realize_batch` with the region
    `query_region(x, reach)` and the same seed and chunk size.
    """
    point = as_point(x, model.ambient_dim)
    if not reach > 0:
        raise ArgumentError(f"reach must be positive, got {reach}")
    region = query_region(point, reach)

    def task(rng, start, count):
        batch = sample_batch(model, rng, count, region)
        if not len(batch.germs):
            return _two_smallest(batch.owners, np.zeros(0), count)
        values = model.family.distances(point - batch.germs, batch.marks)
        logger.debug("Density: chunk at %d sampled %d grains", start, len(values))
        return _two_smallest(batch.owners, values, count)

    chunks = ReplicationPool(workers, chunk_size).map_chunks(task, replications, rng_seed)
    return CoverageDistances(np.concatenate([c[0] for c in chunks]), np.concatenate([c[1] for c in chunks]))


def _decreasing_radii(radii: Sequence[float]) -> list[float]:
    radii = [float(r) for r in radii]
    if not radii:
        raise ArgumentError("Radius sequence is empty")
    if any(r <= 0 for r in radii) or any(a <= b for a, b in zip(radii, radii[1:])):
        raise ArgumentError(f"Radii must be positive and strictly decreasing, got {radii}")
    return radii


def hitting_probability(model: GermGrainModel, x, r: float, replications: int, rng_seed: int,
                        chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> DensityEstimate:
    """Fraction of replications in which the r-parallel set of the union contains x."""
    if not r >= 0:
        raise ArgumentError(f"hitting_probability: r must be nonnegative, got {r}")
    cover = nearest_grain_distances(model, x, max(r, 1e-9), replications, rng_seed, chunk_size, workers)
    return DensityEstimate.from_hits(int(np.count_nonzero(cover.nearest <= r)), replications, r, rng_seed)


def density_ratio(model: GermGrainModel, x, r: float, replications: int, rng_seed: int,
                  chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> DensityEstimate:
    """hitting_probability normalized by b_{d-n} r^{d-n}."""
    if not r > 0:
        raise ArgumentError(f"density_ratio: r must be positive, got {r}")
    cover = nearest_grain_distances(model, x, r, replications, rng_seed, chunk_size, workers)
    hits = int(np.count_nonzero(cover.nearest <= r))
    return DensityEstimate.from_hits(hits, replications, r, rng_seed, ball_volume(model.codim, r))


def _curve(distances: np.ndarray, radii: list[float], codim: int, replications: int, seed: int) -> RatioCurve:
    entries = []
    for r in radii:
        estimate = DensityEstimate.from_hits(int(np.count_nonzero(distances <= r)), replications, r, seed,
                                             ball_volume(codim, r))
        entries.append(CurvePoint(r, estimate.value, estimate.stderr))
    return RatioCurve(tuple(entries), replications, seed)


def convergence_study(model: GermGrainModel, x, radii: Sequence[float], replications: int, rng_seed: int,
                      chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> RatioCurve:
    """density_ratio at each radius, all radii sharing the same replications."""
    radii = _decreasing_radii(radii)
    logger.info("Density: convergence study at %s over %d radii, N = %d", list(np.ravel(x)), len(radii),
                replications)
    cover = nearest_grain_distances(model, x, radii[0], replications, rng_seed, chunk_size, workers)
    return _curve(cover.nearest, radii, model.codim, replications, rng_seed)


def overlap_decay(model: GermGrainModel, x, radii: Sequence[float], replications: int, rng_seed: int,
                  chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> RatioCurve:
    """P(two distinct grains both within r of x), normalized by b_{d-n} r^{d-n}."""
    radii = _decreasing_radii(radii)
    logger.info("Density: overlap study over %d radii, N = %d", len(radii), replications)
    cover = nearest_grain_distances(model, x, radii[0], replications, rng_seed, chunk_size, workers)
    return _curve(cover.second, radii, model.codim, replications, rng_seed)


class CoverageCurves(NamedTuple):
    ratio: RatioCurve
    overlap: RatioCurve
    hitting: tuple[DensityEstimate, ...]


def coverage_curves(model: GermGrainModel, x, radii: Sequence[float], replications: int, rng_seed: int,
                    chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> CoverageCurves:
    """
    convergence_study, overlap_decay and the raw hitting probabilities from a
    single pass over the replications; each equals its standalone version
    for the same arguments.
    """
    radii = _decreasing_radii(radii)
    cover = nearest_grain_distances(model, x, radii[0], replications, rng_seed, chunk_size, workers)
    hitting = tuple(
        DensityEstimate.from_hits(int(np.count_nonzero(cover.nearest <= r)), replications, r, rng_seed)
        for r in radii
    )
    return CoverageCurves(
        _curve(cover.nearest, radii, model.codim, replications, rng_seed),
        _curve(cover.second, radii, model.codim, replications, rng_seed),
        hitting,
    )


# --- Estimators ---

def empirical_capacity(realizations: Sequence[Realization], probe: Grain | Window) -> float:
    """
    Fraction of realizations whose union meets the probe set.

    Probes are windows or disc/ball grains; other grain shapes raise
    UnsupportedShapeError.
    """
    if not realizations:
        raise ArgumentError("empirical_capacity needs at least one realization")
    if isinstance(probe, Window):
        hits = sum(meets_box(real, probe.lo_array, probe.hi_array) for real in realizations)
    elif isinstance(probe, Grain) and isinstance(probe.shape, (Disc, Ball)):
        hits = sum(covers(real, probe.germ, probe.shape.radius) for real in realizations)
    else:
        raise UnsupportedShapeError(f"Unsupported capacity probe: {probe!r}")
    return hits / len(realizations)


def lambda_hat(realizations: Sequence[Realization], x, radius: float) -> float:
    """
    Minimal-area estimator of the mean density at x: the fraction of
    realizations meeting B_R(x), divided by b_{d-n} R^{d-n}.
    """
    if not realizations:
        raise ArgumentError("lambda_hat needs at least one realization")
    if not radius > 0:
        raise ArgumentError(f"lambda_hat: R must be positive, got {radius}")
    family = realizations[0].family
    point = as_point(x, family.ambient_dim)
    probe = Grain(point, Disc(radius) if family.ambient_dim == 2 else Ball(radius))
    return empirical_capacity(realizations, probe) / ball_volume(family.ambient_dim - family.dim, radius)


def estimator_study(model: GermGrainModel, x, schedule: EstimatorSchedule, rng_seed: int,
                    chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1,
                    steps: int = DEFAULT_STEPS) -> list[EstimatorRow]:
    """
    lambda_hat along the schedule with fresh replications for every N.

    Repeat j of row i uses the seed derive_seed(rng_seed, i, j) and equals
    lambda_hat over realize_batch(model, that seed, N, query_region(x, R_N)).
    `estimate` and `abs_error` are averaged over repeats.
    """
    schedule.validate(model.codim)
    reference = theoretical_density(model, x, steps)
    rows = []
    for i, n in enumerate(schedule.n_values):
        radius = schedule.radius(n)
        scale = ball_volume(model.codim, radius)
        estimates = []
        for j in range(schedule.repeats):
            cover = nearest_grain_distances(model, x, radius, n, derive_seed(rng_seed, i, j), chunk_size, workers)
            estimates.append(int(np.count_nonzero(cover.nearest <= radius)) / n / scale)
        values = np.array(estimates)
        if schedule.repeats > 1:
            stderr = float(values.std(ddof=1) / math.sqrt(schedule.repeats))
        else:
            p = values[0] * scale
            stderr = math.sqrt(p * (1.0 - p) / n) / scale
        rows.append(EstimatorRow(n, radius, float(values.mean()), float(np.mean(np.abs(values - reference))), stderr))
        logger.info("Density: estimator N = %d, R = %.4g, estimate %.6g (reference %.6g)",
                    n, radius, rows[-1].estimate, reference)
    return rows


# --- Weak form and Minkowski content ---

def cell_centres(box: Window, per_axis: int) -> np.ndarray:
    """Centres of a regular grid of per_axis^d cells over a box."""
    if per_axis < 1:
        raise ArgumentError(f"Grid needs at least one cell per axis, got {per_axis}")
    axes = [lo + (np.arange(per_axis) + 0.5) * (hi - lo) / per_axis for lo, hi in zip(box.lo, box.hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def weak_form_average(model: GermGrainModel, box: Window, grid: int, r: float, replications: int,
                      rng_seed: int, steps: int = DEFAULT_STEPS, chunk_size: int = DEFAULT_CHUNK_SIZE,
                      workers: int = 1) -> WeakFormAverage:
    """Average of density_ratio over a grid of points in a box against the average mean density."""
    points = cell_centres(box, grid)
    estimates = [
        density_ratio(model, p, r, replications, derive_seed(rng_seed, k), chunk_size, workers)
        for k, p in enumerate(points)
    ]
    theory = [theoretical_density(model, p, steps) for p in points]
    return WeakFormAverage(
        estimate=float(np.mean([e.value for e in estimates])),
        stderr=float(math.sqrt(sum(e.stderr ** 2 for e in estimates)) / len(points)),
        theory=float(np.mean(theory)),
        points=len(points),
    )


def mean_minkowski_content(model: GermGrainModel, region: Window, radii: Sequence[float], replications: int,
                           rng_seed: int, resolution: int = 256, chunk_size: int = DEFAULT_CHUNK_SIZE,
                           workers: int = 1) -> RatioCurve:
    """
    E[volume of the r-parallel set of the union inside the region] divided by
    b_{d-n} r^{d-n}, one entry per radius; tends to the integral of the mean
    density over the region as r -> 0.
    """
    radii = _decreasing_radii(radii)
    target = region.dilate(radii[0])
    scales = np.array([ball_volume(model.codim, r) for r in radii])

    def task(rng, start, count):
        batch = sample_batch(model, rng, count, target)
        sums = np.zeros(len(radii))
        squares = np.zeros(len(radii))
        for real in split_batch(batch, model.family, rng_seed, model.fingerprint, start, target):
            values = np.array([e.value for e in enlarged_volume_curve(list(real.grains), radii, region, resolution)])
            sums += values
            squares += values ** 2
        return sums, squares

    chunks = ReplicationPool(workers, chunk_size).map_chunks(task, replications, rng_seed)
    sums = np.sum([c[0] for c in chunks], axis=0)
    squares = np.sum([c[1] for c in chunks], axis=0)
    mean = sums / replications
    spread = np.sqrt(np.maximum(squares / replications - mean ** 2, 0.0) / replications)
    entries = tuple(CurvePoint(r, float(m / s), float(e / s)) for r, m, e, s in zip(radii, mean, spread, scales))
    return RatioCurve(entries, replications, rng_seed)
