"""
Germ processes, intensities and mark distributions.

Each germ law samples whole batches of replications at once: `sample_batch`
returns the germs of `count` independent replications together with the
replication index owning each germ. Replication loops (Campbell checks,
coverage studies) reduce over the owners with `np.bincount`.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import stats

from grainlab.errors import (
    ArgumentError,
    DimensionError,
    DomainError,
    ModelValidationError,
    UnsupportedModelError,
)
from grainlab.geometry import Window, as_point, as_points, lens_area
from grainlab.replication import DEFAULT_CHUNK_SIZE, POINT_STREAMS, ReplicationPool, stream_generator

logger = logging.getLogger(__name__)

_EMPTY_OWNERS = np.zeros(0, dtype=np.int64)


def _empty_batch(dim: int):
    return np.empty((0, dim)), _EMPTY_OWNERS


def _values(f, points: np.ndarray) -> np.ndarray:
    """Evaluates a vectorized function on points, broadcasting constant results."""
    return np.broadcast_to(np.asarray(f(points), dtype=float), (len(points),))


# --- Intensities ---

class IntensitySpec(ABC):
    """
    Germ intensity lambda(x) of a Poisson law with its declared upper bound.

    Subclasses expose `bound`, which must dominate the intensity on the
    sampling window; thinning fails loudly when it does not.
    """

    is_constant = False

    @abstractmethod
    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def describe(self) -> dict:
        pass


@dataclass(frozen=True)
class ConstantIntensity(IntensitySpec):
    value: float

    is_constant = True

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ArgumentError(f"Constant intensity must be finite and nonnegative, got {self.value}")

    @property
    def bound(self) -> float:
        return float(self.value)

    def evaluate(self, points):
        return np.full(len(points), float(self.value))

    def describe(self) -> dict:
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True, eq=False)
class PiecewiseSmoothIntensity(IntensitySpec):
    """
    Position-dependent intensity given by a vectorized function.

    `discontinuities` names the (measure-zero) set where the function may jump.
    """

    function: Callable[[np.ndarray], np.ndarray]
    bound: float
    discontinuities: str = "none"
    label: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.bound) and self.bound >= 0):
            raise ArgumentError(f"Intensity bound must be finite and nonnegative, got {self.bound}")

    def evaluate(self, points):
        return _values(self.function, points)

    def describe(self) -> dict:
        return {"kind": self.label, "bound": self.bound, "discontinuities": self.discontinuities, **self.params}


def linear_intensity(base: float, gradient, bound: float) -> PiecewiseSmoothIntensity:
    """lambda(x) = max(base + gradient . x, 0)."""
    g = np.asarray(gradient, dtype=float)

    def function(points):
        return np.maximum(base + points @ g, 0.0)

    return PiecewiseSmoothIntensity(function, bound, "none", "linear",
                                    {"base": base, "gradient": g.tolist()})


def step_intensity(left: float, right: float, split: float, axis: int = 0,
                   bound: float | None = None) -> PiecewiseSmoothIntensity:
    """lambda(x) = left for x[axis] < split, right otherwise."""
    if min(left, right) < 0:
        raise ArgumentError("Step intensity values must be nonnegative")

    def function(points):
        return np.where(points[:, axis] < split, left, right)

    return PiecewiseSmoothIntensity(function, max(left, right) if bound is None else bound,
                                    f"hyperplane x[{axis}] = {split}", "step",
                                    {"left": left, "right": right, "split": split, "axis": axis})


# --- Mark distributions ---

class MarkDistribution(ABC):
    """
    Distribution Q of the marks. Marks are rows of floats; `width` is the
    number of components.
    """

    width: int = 1

    @abstractmethod
    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draws `count` i.i.d. marks as an array of shape (count, width)."""
        pass

    @abstractmethod
    def support_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Componentwise (lo, hi) bounds of the support."""
        pass

    @abstractmethod
    def describe(self) -> dict:
        pass

    def quadrature(self, nodes: int) -> tuple[np.ndarray, np.ndarray]:
        """Marks and probability weights discretizing Q."""
        raise UnsupportedModelError(f"{type(self).__name__} cannot be discretized")


class Dirac(MarkDistribution):
    """Every grain gets the same mark."""

    def __init__(self, mark):
        self.mark = np.atleast_1d(np.asarray(mark, dtype=float))
        if self.mark.ndim != 1 or not np.all(np.isfinite(self.mark)):
            raise ArgumentError(f"Dirac mark must be a finite vector, got {mark}")
        self.width = len(self.mark)

    def sample(self, rng, count):
        return np.tile(self.mark, (count, 1))

    def support_bounds(self):
        return self.mark.copy(), self.mark.copy()

    def quadrature(self, nodes):
        return self.mark[None, :].copy(), np.ones(1)

    def describe(self) -> dict:
        return {"kind": "dirac", "mark": self.mark.tolist()}


class UniformLength(MarkDistribution):
    """
    Segment marks (length, angle): length uniform on [lo, hi], angle either
    fixed or uniform on [0, 2pi).
    """

    width = 2

    def __init__(self, lo: float, hi: float, angle: float | None = None):
        if not (0 <= lo < hi and math.isfinite(hi)):
            raise ArgumentError(f"UniformLength needs 0 <= lo < hi < inf, got ({lo}, {hi})")
        self.lo = float(lo)
        self.hi = float(hi)
        self.angle = None if angle is None else float(angle)

    def sample(self, rng, count):
        lengths = rng.uniform(self.lo, self.hi, count)
        if self.angle is None:
            angles = rng.uniform(0.0, 2.0 * math.pi, count)
        else:
            angles = np.full(count, self.angle)
        return np.column_stack((lengths, angles))

    def support_bounds(self):
        if self.angle is None:
            return np.array([self.lo, 0.0]), np.array([self.hi, 2.0 * math.pi])
        return np.array([self.lo, self.angle]), np.array([self.hi, self.angle])

    def quadrature(self, nodes):
        if nodes < 1:
            raise ArgumentError(f"Mark quadrature needs at least one node, got {nodes}")
        lengths = self.lo + (np.arange(nodes) + 0.5) * (self.hi - self.lo) / nodes
        if self.angle is not None:
            return np.column_stack((lengths, np.full(nodes, self.angle))), np.full(nodes, 1.0 / nodes)
        angles = (np.arange(nodes) + 0.5) * (2.0 * math.pi / nodes)
        ll, aa = np.meshgrid(lengths, angles, indexing="ij")
        return np.column_stack((ll.ravel(), aa.ravel())), np.full(nodes * nodes, 1.0 / nodes ** 2)

    def describe(self) -> dict:
        return {"kind": "uniform_length", "lo": self.lo, "hi": self.hi, "angle": self.angle}


class DiscreteMixture(MarkDistribution):
    """Finitely many marks with given probabilities."""

    def __init__(self, marks, probabilities):
        self.marks = np.atleast_2d(np.asarray(marks, dtype=float))
        self.probabilities = np.asarray(probabilities, dtype=float)
        if len(self.marks) != len(self.probabilities) or len(self.marks) == 0:
            raise ArgumentError("DiscreteMixture needs one probability per mark")
        if np.any(self.probabilities < 0) or not math.isclose(self.probabilities.sum(), 1.0, abs_tol=1e-12):
            raise ArgumentError("DiscreteMixture probabilities must be nonnegative and sum to 1")
        if not np.all(np.isfinite(self.marks)):
            raise ArgumentError("DiscreteMixture marks must be finite")
        self.width = self.marks.shape[1]

    def sample(self, rng, count):
        return self.marks[rng.choice(len(self.marks), size=count, p=self.probabilities)]

    def support_bounds(self):
        return self.marks.min(axis=0), self.marks.max(axis=0)

    def quadrature(self, nodes):
        return self.marks.copy(), self.probabilities.copy()

    def describe(self) -> dict:
        return {"kind": "mixture", "marks": self.marks.tolist(), "probabilities": self.probabilities.tolist()}


class FixedRadius(Dirac):
    """Radius mark for circles, discs, balls and spheres."""

    def __init__(self, radius: float):
        if not (math.isfinite(radius) and radius > 0):
            raise ArgumentError(f"FixedRadius needs a positive finite radius, got {radius}")
        super().__init__([radius])
        self.radius = float(radius)

    def describe(self) -> dict:
        return {"kind": "fixed_radius", "radius": self.radius}


# --- Germ laws ---

class GermLaw(ABC):
    """Law of the germ point process."""

    name = "law"
    # Whole-space laws are sampled on the window dilated by the grain reach.
    whole_space = False

    def check_dimension(self, dim: int):
        if dim not in (2, 3):
            raise DimensionError(f"{self.name}: unsupported dimension {dim}")

    def sampling_window(self, window: Window, margin: float) -> Window:
        return window.dilate(margin) if self.whole_space and margin > 0 else window

    @abstractmethod
    def sample_batch(self, rng: np.random.Generator, window: Window, count: int,
                     region: Window | None = None) -> tuple[np.ndarray, np.ndarray]:
        """
        Germs of `count` independent replications restricted to `region`.

        Args:
            rng: Generator of the chunk
            window: Support window of the law
            count: Number of replications
            region: Optional box; only germs inside it are returned, with the
                exact law of the process restricted to it

        Returns:
            Tuple of (points of shape (k, d), owning replication index of shape (k,))
        """
        pass

    @abstractmethod
    def intensity(self, window: Window, points: np.ndarray) -> np.ndarray:
        """Germ intensity at each point (zero outside the support)."""
        pass

    def constant_level(self, window: Window) -> float | None:
        """Intensity value when it is constant on the support, else None."""
        return None

    @abstractmethod
    def second_moment(self, window: Window, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Second factorial moment density for paired rows of x and y."""
        pass

    @abstractmethod
    def describe(self) -> dict:
        pass

    @staticmethod
    def _domain(window: Window, region: Window | None) -> Window | None:
        return window if region is None else window.intersect(region)


class PoissonGerms(GermLaw):
    """Poisson process; inhomogeneous intensities are thinned against the declared bound."""

    name = "poisson"
    whole_space = True

    def __init__(self, intensity: IntensitySpec | float):
        if not isinstance(intensity, IntensitySpec):
            intensity = ConstantIntensity(float(intensity))
        self.spec = intensity

    def sample_batch(self, rng, window, count, region=None):
        domain = self._domain(window, region)
        bound = self.spec.bound
        if domain is None or bound == 0:
            return _empty_batch(window.dim)
        counts = rng.poisson(bound * domain.volume, count)
        points = domain.sample_uniform(rng, int(counts.sum()))
        owners = np.repeat(np.arange(count), counts)
        if self.spec.is_constant:
            return points, owners
        values = self.spec.evaluate(points)
        if np.any(values < 0) or np.any(values > bound * (1.0 + 1e-12)):
            worst = float(values.max()) if len(values) else 0.0
            raise ModelValidationError(
                f"(A2) intensity bound violated during thinning: lambda = {worst} > declared bound {bound}")
        keep = rng.random(len(points)) * bound < values
        return points[keep], owners[keep]

    def intensity(self, window, points):
        pts = as_points(points, window.dim)
        return self.spec.evaluate(pts) * window.contains(pts)

    def constant_level(self, window):
        return self.spec.bound if self.spec.is_constant else None

    def second_moment(self, window, x, y):
        return self.intensity(window, x) * self.intensity(window, y)

    def describe(self) -> dict:
        return {"law": self.name, "intensity": self.spec.describe()}


class BinomialGerms(GermLaw):
    """Exactly m i.i.d. uniform points in the window."""

    name = "binomial"

    def __init__(self, m: int):
        if int(m) != m or m < 1:
            raise ArgumentError(f"Binomial germs need a positive integer m, got {m}")
        self.m = int(m)

    def sample_batch(self, rng, window, count, region=None):
        domain = self._domain(window, region)
        if domain is None:
            return _empty_batch(window.dim)
        if domain == window:
            counts = np.full(count, self.m)
        else:
            counts = rng.binomial(self.m, domain.volume / window.volume, count)
        points = domain.sample_uniform(rng, int(counts.sum()))
        return points, np.repeat(np.arange(count), counts)

    def intensity(self, window, points):
        return (self.m / window.volume) * window.contains(points)

    def constant_level(self, window):
        return self.m / window.volume

    def second_moment(self, window, x, y):
        inside = window.contains(x) & window.contains(y)
        return (self.m * (self.m - 1) / window.volume ** 2) * inside

    def describe(self) -> dict:
        return {"law": self.name, "m": self.m}


class MaternClusterGerms(GermLaw):
    """
    Matern cluster process in the plane: Poisson(alpha) parents on the
    window dilated by the cluster radius, each with Poisson(m) children
    uniform in the disc of that radius, children clipped to the window.
    """

    name = "matern"
    whole_space = True

    def __init__(self, alpha: float, mean_children: float, cluster_radius: float):
        for label, value in (("alpha", alpha), ("m", mean_children), ("cluster_radius", cluster_radius)):
            if not (math.isfinite(value) and value > 0):
                raise ArgumentError(f"Matern cluster germs: {label} must be positive, got {value}")
        self.alpha = float(alpha)
        self.mean_children = float(mean_children)
        self.cluster_radius = float(cluster_radius)

    def check_dimension(self, dim):
        if dim != 2:
            raise ModelValidationError(f"Matern cluster germs are planar (d = 2); got d = {dim}")

    def sample_batch(self, rng, window, count, region=None):
        self.check_dimension(window.dim)
        target = self._domain(window, region)
        if target is None:
            return _empty_batch(2)
        parents_domain = target.dilate(self.cluster_radius)
        n_parents = rng.poisson(self.alpha * parents_domain.volume, count)
        parents = parents_domain.sample_uniform(rng, int(n_parents.sum()))
        parent_owner = np.repeat(np.arange(count), n_parents)
        n_children = rng.poisson(self.mean_children, len(parents))
        total = int(n_children.sum())
        radius = self.cluster_radius * np.sqrt(rng.random(total))
        theta = rng.uniform(0.0, 2.0 * math.pi, total)
        children = np.repeat(parents, n_children, axis=0) + np.column_stack(
            (radius * np.cos(theta), radius * np.sin(theta)))
        owners = np.repeat(parent_owner, n_children)
        keep = target.contains(children)
        return children[keep], owners[keep]

    def intensity(self, window, points):
        return (self.alpha * self.mean_children) * window.contains(points)

    def constant_level(self, window):
        return self.alpha * self.mean_children

    def second_moment(self, window, x, y):
        x = as_points(x, 2)
        y = as_points(y, 2)
        rho = self.cluster_radius
        lens = lens_area(rho, rho, np.linalg.norm(x - y, axis=1))
        value = (self.alpha * self.mean_children) ** 2 + \
            self.alpha * self.mean_children ** 2 * lens / (math.pi ** 2 * rho ** 4)
        return value * (window.contains(x) & window.contains(y))

    def describe(self) -> dict:
        return {"law": self.name, "alpha": self.alpha, "m": self.mean_children,
                "cluster_radius": self.cluster_radius}


class OneGrainGerms(GermLaw):
    """A single germ uniform in the window."""

    name = "one_grain"

    def sample_batch(self, rng, window, count, region=None):
        domain = self._domain(window, region)
        if domain is None:
            return _empty_batch(window.dim)
        present = rng.random(count) < domain.volume / window.volume
        owners = np.flatnonzero(present)
        return domain.sample_uniform(rng, len(owners)), owners

    def intensity(self, window, points):
        return window.contains(points) / window.volume

    def constant_level(self, window):
        return 1.0 / window.volume

    def second_moment(self, window, x, y):
        return np.zeros(len(as_points(x, window.dim)))

    def describe(self) -> dict:
        return {"law": self.name}


# --- Public operations ---

class CampbellCheck(NamedTuple):
    mc_mean: float
    integral: float
    stderr: float


class GoodnessOfFit(NamedTuple):
    statistic: float
    pvalue: float
    dof: int


def sample_germs(law: GermLaw, window: Window, rng_seed: int, region: Window | None = None) -> np.ndarray:
    """One realization of the germ process on `window`; deterministic per seed."""
    law.check_dimension(window.dim)
    points, _ = law.sample_batch(stream_generator(rng_seed, 0), window, 1, region)
    return points


def intensity_at(law: GermLaw, window: Window, x) -> float:
    """Germ intensity at a point of the window."""
    point = as_point(x, window.dim)
    if not window.contains(point)[0]:
        raise DomainError(f"intensity_at: point {point.tolist()} lies outside the window")
    return float(law.intensity(window, point[None, :])[0])


def second_moment_at(law: GermLaw, window: Window, x, y) -> float:
    """Second factorial moment density at a pair of window points."""
    px, py = as_point(x, window.dim), as_point(y, window.dim)
    if not (window.contains(px)[0] and window.contains(py)[0]):
        raise DomainError("second_moment_at: both points must lie in the window")
    return float(law.second_moment(window, px[None, :], py[None, :])[0])


def attach_marks(points, q: MarkDistribution, rng_seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """
    Independent marks for a sequence of points.

    The mark of point i depends only on (seed, i), so a prefix of the points
    keeps its marks when more points are appended.
    """
    marked = []
    for index, point in enumerate(points):
        rng = stream_generator(rng_seed, index, POINT_STREAMS)
        marked.append((np.asarray(point, dtype=float), q.sample(rng, 1)[0]))
    return marked


def _grid_nodes(box: Window, per_axis: int) -> tuple[np.ndarray, float]:
    """Cell centres of a uniform grid over a box and the cell volume."""
    axes = [box.lo[k] + (np.arange(per_axis) + 0.5) * (box.extent[k] / per_axis) for k in range(box.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1), box.volume / per_axis ** box.dim


def _moments(chunks: list[tuple[float, float]], total: int) -> tuple[float, float]:
    """Mean and standard error from per-chunk (sum, sum of squares) in chunk order."""
    s = sum(c[0] for c in chunks)
    sq = sum(c[1] for c in chunks)
    mean = s / total
    if total < 2:
        return mean, 0.0
    variance = max(sq / total - mean * mean, 0.0) * total / (total - 1)
    return mean, math.sqrt(variance / total)


def campbell_check(law: GermLaw, window: Window, f: Callable[[np.ndarray], np.ndarray],
                   replications: int, rng_seed: int, chunk_size: int = DEFAULT_CHUNK_SIZE,
                   workers: int = 1, resolution: int = 256) -> CampbellCheck:
    """
    Monte Carlo mean of sum_{x in germs} f(x) against the integral of f * lambda over the window.

    Args:
        law: Germ law
        window: Support window
        f: Vectorized function on points (k, d)
        replications: Number of replications
        rng_seed: Master seed
        chunk_size: Replications per random stream block
        workers: Worker threads
        resolution: Grid size per axis for the integral (capped at 64 in 3D)

    Returns:
        CampbellCheck(mc_mean, integral, stderr)
    """
    law.check_dimension(window.dim)

    def task(rng, start, count):
        points, owners = law.sample_batch(rng, window, count)
        sums = np.bincount(owners, weights=_values(f, points), minlength=count)
        return float(sums.sum()), float((sums * sums).sum())

    chunks = ReplicationPool(workers, chunk_size).map_chunks(task, replications, rng_seed)
    mean, stderr = _moments(chunks, replications)
    nodes, cell = _grid_nodes(window, resolution if window.dim == 2 else min(resolution, 64))
    integral = float(cell * np.sum(_values(f, nodes) * law.intensity(window, nodes)))
    logger.debug("Campbell: %s mean %.6g vs integral %.6g (stderr %.3g)", law.name, mean, integral, stderr)
    return CampbellCheck(mean, integral, stderr)


def second_moment_check(law: GermLaw, window: Window, box_a: Window, box_b: Window,
                        replications: int, rng_seed: int, chunk_size: int = DEFAULT_CHUNK_SIZE,
                        workers: int = 1, resolution: int = 32) -> CampbellCheck:
    """
    Monte Carlo mean of the ordered pair count N(A) * N(B) over disjoint boxes
    against the double integral of the second factorial moment density.
    """
    law.check_dimension(window.dim)
    overlap = box_a.intersect(box_b)
    if overlap is not None:
        raise ArgumentError("second_moment_check: boxes must have disjoint interiors")

    def task(rng, start, count):
        points, owners = law.sample_batch(rng, window, count)
        in_a = np.bincount(owners[box_a.contains(points)], minlength=count)
        in_b = np.bincount(owners[box_b.contains(points)], minlength=count)
        pairs = (in_a * in_b).astype(float)
        return float(pairs.sum()), float((pairs * pairs).sum())

    chunks = ReplicationPool(workers, chunk_size).map_chunks(task, replications, rng_seed)
    mean, stderr = _moments(chunks, replications)
    nodes_a, cell_a = _grid_nodes(box_a, resolution)
    nodes_b, cell_b = _grid_nodes(box_b, resolution)
    xs = np.repeat(nodes_a, len(nodes_b), axis=0)
    ys = np.tile(nodes_b, (len(nodes_a), 1))
    integral = float(cell_a * cell_b * np.sum(law.second_moment(window, xs, ys)))
    return CampbellCheck(mean, integral, stderr)


def poisson_count_gof(law: GermLaw, window: Window, replications: int, rng_seed: int,
                      chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> GoodnessOfFit:
    """
    Chi-square goodness of fit of the germ counts against Poisson(lambda |W|).

    Bins are merged from both tails until each expects at least 5 counts.
    """
    if not (isinstance(law, PoissonGerms) and law.spec.is_constant):
        raise UnsupportedModelError("poisson_count_gof needs a constant-intensity Poisson law")

    def task(rng, start, count):
        _, owners = law.sample_batch(rng, window, count)
        return np.bincount(owners, minlength=count)

    counts = np.concatenate(ReplicationPool(workers, chunk_size).map_chunks(task, replications, rng_seed))
    mu = law.spec.bound * window.volume
    top = int(mu + 10.0 * math.sqrt(mu) + 10.0)
    observed = np.bincount(np.minimum(counts, top), minlength=top + 1).astype(float)
    expected = stats.poisson.pmf(np.arange(top + 1), mu)
    expected[-1] = stats.poisson.sf(top - 1, mu)
    expected *= replications

    bins_obs, bins_exp = [], []
    acc_obs = acc_exp = 0.0
    for o, e in zip(observed, expected):
        acc_obs += o
        acc_exp += e
        if acc_exp >= 5.0:
            bins_obs.append(acc_obs)
            bins_exp.append(acc_exp)
            acc_obs = acc_exp = 0.0
    if bins_exp:
        bins_obs[-1] += acc_obs
        bins_exp[-1] += acc_exp
    if len(bins_exp) < 2:
        raise ArgumentError("poisson_count_gof: too few replications for a chi-square test")
    bins_exp = np.asarray(bins_exp)
    bins_obs = np.asarray(bins_obs)
    bins_exp *= bins_obs.sum() / bins_exp.sum()
    result = stats.chisquare(bins_obs, bins_exp)
    return GoodnessOfFit(float(result.statistic), float(result.pvalue), len(bins_obs) - 1)
