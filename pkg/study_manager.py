import logging
import os
from typing import NamedTuple

import numpy as np

from config_manager import RunConfig
from file_operations import FileOperations
from model_builder import build_model, build_window, model_diagnostics
from grainlab.density import (
    EstimatorSchedule,
    Tolerance,
    boolean_hitting_theoretical,
    coverage_curves,
    estimator_study,
    integrated_density,
    mean_minkowski_content,
    overlap_decay,
    theoretical_density,
)
from grainlab.errors import ConfigError, GrainLabError
from grainlab.germgrain import GermGrainModel, realize_batch
from grainlab.replication import derive_seed
from grainlab.surface import (
    boolean_specific_area_theoretical,
    contact_derivative_at_zero,
    contact_derivative_stderr,
    contact_derivative_theoretical,
    contact_distribution,
    expected_outer_content,
    mean_outer_content,
    onegrain_specific_area_theoretical,
    specific_area,
    void_probability,
)

logger = logging.getLogger(__name__)

# Study id -> display name
SUPPORTED_STUDIES = {
    "density": "Mean density limit",
    "estimator": "Minimal-area estimator consistency",
    "overlap": "Overlap decay",
    "specific-area": "Specific area",
    "contact": "Spherical contact distribution",
    "minkowski": "Local mean Minkowski content",
    "outer-minkowski": "Mean outer Minkowski content",
}

POINT_STUDIES = ("density", "estimator", "overlap", "specific-area", "contact")
RADII_STUDIES = ("density", "overlap", "specific-area", "contact", "minkowski", "outer-minkowski")
REGION_STUDIES = ("minkowski", "outer-minkowski")

# Overlap curve at the smallest radius relative to the largest.
OVERLAP_DECAY_LIMIT = 0.25
CONTACT_POINTS = 3

CSV_COLUMNS = {
    "density": ["point", "r", "ratio", "ratio_stderr", "overlap_ratio", "overlap_stderr", "hitting",
                "hitting_stderr"],
    "estimator": ["point", "n", "radius", "estimate", "abs_error", "stderr", "reference"],
    "overlap": ["point", "r", "overlap_ratio", "overlap_stderr"],
    "specific-area": ["point", "r", "annulus_ratio", "stderr"],
    "contact": ["point", "r", "h", "stderr"],
    "minkowski": ["r", "content", "stderr"],
    "outer-minkowski": ["r", "outer_content", "stderr"],
}


class StudyOutcome(NamedTuple):
    rows: list
    assertions: list
    results: dict


def assertion_record(name, point, oracle, estimate, stderr, tolerance, passed) -> dict:
    """One judged comparison as stored in summary.json."""
    return {
        "name": name,
        "point": None if point is None else [float(v) for v in point],
        "oracle": float(oracle),
        "estimate": float(estimate),
        "stderr": float(stderr),
        "tolerance": float(tolerance),
        "passed": bool(passed),
    }


def _band_check(name, point, oracle, estimate, stderr, tolerance: Tolerance) -> dict:
    return assertion_record(name, point, oracle, estimate, stderr, tolerance.bound(oracle, stderr),
                            tolerance.accepts(estimate, oracle, stderr))


def _overlap_check(point, curve) -> dict:
    first, last = curve.entries[0], curve.entries[-1]
    ratio = last.value / first.value if first.value > 0 else 0.0
    stderr = last.stderr / first.value if first.value > 0 else 0.0
    return assertion_record("overlap_decay", point, 0.0, ratio, stderr, OVERLAP_DECAY_LIMIT,
                            ratio <= OVERLAP_DECAY_LIMIT)


def _strictly_decreasing(radii) -> bool:
    return all(r > 0 for r in radii) and all(a > b for a, b in zip(radii, radii[1:]))


class StudyManager:
    """Validates run configurations, runs studies and writes their artifacts.

    A run returns a result dict; library errors are caught here and
    reported, never raised.
    """

    def __init__(self):
        self._handlers = {
            "density": self._run_density,
            "estimator": self._run_estimator,
            "overlap": self._run_overlap,
            "specific-area": self._run_specific_area,
            "contact": self._run_contact,
            "minkowski": self._run_minkowski,
            "outer-minkowski": self._run_outer_minkowski,
        }

    # --- Validation ---

    def validate(self, config: RunConfig) -> list[str]:
        """Diagnostics that keep a configuration from running; empty iff runnable."""
        diagnostics = model_diagnostics(config.model)
        if any(d.startswith(("model:", "unsupported:")) for d in diagnostics):
            return diagnostics
        model = build_model(config.model, config.name)
        study = config.study

        if study not in SUPPORTED_STUDIES:
            return diagnostics + [f"study: unknown study '{study}'"]
        diagnostics.extend(self._study_support(model, study))

        if study in POINT_STUDIES:
            if not config.points:
                diagnostics.append(f"points: the {study} study needs at least one query point")
            for k, point in enumerate(config.points):
                if len(point) != model.ambient_dim:
                    diagnostics.append(f"points/{k}: expected {model.ambient_dim} coordinates, got {len(point)}")
                elif not model.window.contains(np.asarray(point))[0]:
                    diagnostics.append(f"points/{k}: {list(point)} lies outside the observation window")

        if study in RADII_STUDIES:
            diagnostics.extend(self._check_radii(study, list(config.radii)))

        if study in REGION_STUDIES:
            if config.region is None:
                diagnostics.append(f"region: the {study} study needs a region")
            else:
                try:
                    region = build_window(config.region)
                    if region.dim != model.ambient_dim:
                        diagnostics.append(f"region: expected dimension {model.ambient_dim}, got {region.dim}")
                except GrainLabError as e:
                    diagnostics.append(f"region: {e}")

        if study == "estimator":
            if config.schedule is None:
                diagnostics.append("schedule: the estimator study needs a radius schedule")
            else:
                try:
                    self._schedule(config).validate(model.codim)
                except GrainLabError as e:
                    diagnostics.append(f"schedule: {e}")
        return diagnostics

    @staticmethod
    def _study_support(model: GermGrainModel, study: str) -> list[str]:
        if study == "outer-minkowski":
            problems = []
            if model.grain_dim != model.ambient_dim:
                problems.append(f"unsupported: the outer-minkowski study needs full-dimensional grains, "
                                f"got {model.family.kind} grains")
            if not model.is_one_grain:
                problems.append("unsupported: the outer-minkowski study needs a one-grain model")
            return problems
        return []

    @staticmethod
    def _check_radii(study: str, radii: list) -> list[str]:
        if not radii:
            return [f"radii: the {study} study needs radii"]
        if study == "contact":
            positive = [r for r in radii if r > 0]
            if any(a >= b for a, b in zip(radii, radii[1:])):
                return ["radii: contact radii must be strictly increasing"]
            if len(positive) < CONTACT_POINTS:
                return [f"radii: the contact study needs at least {CONTACT_POINTS} positive radii"]
            return []
        if not _strictly_decreasing(radii):
            return [f"radii: the {study} study needs positive, strictly decreasing radii"]
        if study == "overlap" and len(radii) < 2:
            return ["radii: the overlap study needs at least two radii"]
        if study == "outer-minkowski" and radii[0] >= 1:
            return ["radii: outer-minkowski radii must lie in (0, 1)"]
        return []

    @staticmethod
    def _schedule(config: RunConfig) -> EstimatorSchedule:
        schedule = config.schedule
        return EstimatorSchedule(schedule["c"], schedule["tau"], tuple(schedule["N"]), schedule.get("repeats", 1))

    # --- Running ---

    def run(self, config: RunConfig, workers=None):
        """Runs the configured study and writes `<study>.csv` and summary.json.

        Args:
            config (RunConfig): Validated run configuration
            workers (int, optional): Worker count; defaults to the configured one

        Returns:
            dict: Results with keys:
                - 'success': bool, False if the study could not be run
                - 'passed': bool, True if every assertion passed
                - 'summary': the summary.json content
                - 'artifacts': paths of the written files
                - 'error': error message if success is False
                - 'exit_code': 0 passed, 1 assertion failed, 2 config error, 3 runtime error
        """
        workers = workers or config.workers
        try:
            diagnostics = self.validate(config)
            if diagnostics:
                for diagnostic in diagnostics:
                    logger.error(f"StudyManager: {diagnostic}")
                return self._failure("; ".join(diagnostics), 2)

            model = build_model(config.model, config.name)
            tolerance = Tolerance(config.tolerance_relative, config.tolerance_sigmas)
            logger.info(f"StudyManager: running {SUPPORTED_STUDIES[config.study]} on '{config.name}' "
                        f"(seed {config.seed}, {workers} workers)")
            outcome = self._handlers[config.study](model, config, tolerance, workers)

            file_operations = FileOperations(os.path.join(config.output_dir, config.name))
            artifacts = [file_operations.write_csv(f"{config.study}.csv", CSV_COLUMNS[config.study], outcome.rows)]
            if config.dump_realizations:
                realizations = realize_batch(model, config.seed, config.dump_realizations,
                                             chunk_size=config.chunk_size)
                artifacts.append(file_operations.write_realization_jsonl(realizations))

            passed = all(a["passed"] for a in outcome.assertions)
            summary = self._summary(config, model, tolerance, outcome, passed, artifacts)
            artifacts.append(file_operations.write_summary(summary))
            for record in outcome.assertions:
                logger.info(f"StudyManager: {record['name']} {'passed' if record['passed'] else 'FAILED'} "
                            f"(estimate {record['estimate']:.6g}, oracle {record['oracle']:.6g}, "
                            f"tolerance {record['tolerance']:.3g})")
            return {
                'success': True,
                'passed': passed,
                'summary': summary,
                'artifacts': artifacts,
                'error': None,
                'exit_code': 0 if passed else 1,
            }
        except ConfigError as e:
            return self._failure(str(e), 2)
        except GrainLabError as e:
            logger.error(f"StudyManager: {type(e).__name__}: {e}")
            return self._failure(str(e), 3)
        except Exception as e:
            logger.exception("StudyManager: study failed")
            return self._failure(f"{type(e).__name__}: {e}", 3)

    @staticmethod
    def _failure(message, exit_code):
        return {
            'success': False,
            'passed': False,
            'summary': None,
            'artifacts': [],
            'error': message,
            'exit_code': exit_code,
        }

    @staticmethod
    def _summary(config, model, tolerance, outcome, passed, artifacts) -> dict:
        return {
            "name": config.name,
            "study": config.study,
            "study_name": SUPPORTED_STUDIES[config.study],
            "seed": config.seed,
            "config_hash": config.config_hash,
            "model_fingerprint": model.fingerprint,
            "model": model.describe(),
            "replications": config.replications,
            "chunk_size": config.chunk_size,
            "steps": config.steps,
            "points": [list(p) for p in config.points],
            "tolerance": {"relative": tolerance.relative, "sigmas": tolerance.sigmas},
            "assertions": outcome.assertions,
            "results": outcome.results,
            "passed": passed,
            "artifacts": sorted(os.path.basename(path) for path in artifacts) + ["summary.json"],
        }

    @staticmethod
    def _point_seed(config: RunConfig, k: int) -> int:
        return derive_seed(config.seed, k)

    # --- Studies ---

    def _run_density(self, model, config, tolerance, workers) -> StudyOutcome:
        rows, assertions, results = [], [], {}
        for k, x in enumerate(config.points):
            curves = coverage_curves(model, x, config.radii, config.replications, self._point_seed(config, k),
                                     config.chunk_size, workers)
            for ratio, overlap, hitting in zip(curves.ratio.entries, curves.overlap.entries, curves.hitting):
                rows.append({"point": k, "r": ratio.r, "ratio": ratio.value, "ratio_stderr": ratio.stderr,
                             "overlap_ratio": overlap.value, "overlap_stderr": overlap.stderr,
                             "hitting": hitting.value, "hitting_stderr": hitting.stderr})

            fit = curves.ratio.extrapolate()
            theory = theoretical_density(model, x, config.steps)
            assertions.append(_band_check("ratio_vs_theory", x, theory, fit.value, fit.stderr, tolerance))
            if model.is_boolean:
                capacity = boolean_hitting_theoretical(model, x, config.radii[0], config.steps)
                hit = curves.hitting[0]
                assertions.append(_band_check("hitting_vs_capacity", x, capacity, hit.value, hit.stderr, tolerance))
            if not model.is_one_grain and len(config.radii) > 1:
                assertions.append(_overlap_check(x, curves.overlap))
            results[f"point_{k}"] = {"extrapolated": fit.value, "extrapolated_stderr": fit.stderr,
                                     "slope": fit.slope, "residual": fit.residual, "theory": theory}
        return StudyOutcome(rows, assertions, results)

    def _run_estimator(self, model, config, tolerance, workers) -> StudyOutcome:
        schedule = self._schedule(config)
        rows, assertions, results = [], [], {}
        for k, x in enumerate(config.points):
            table = estimator_study(model, x, schedule, self._point_seed(config, k), config.chunk_size, workers,
                                    config.steps)
            reference = theoretical_density(model, x, config.steps)
            rows.extend({"point": k, **row._asdict(), "reference": reference} for row in table)
            first, last = table[0], table[-1]
            limit = 2.0 * tolerance.relative * abs(reference)
            if len(table) > 1:
                limit = min(first.abs_error, limit)
            assertions.append(assertion_record("estimator_consistency", x, reference, last.estimate, last.stderr,
                                               limit, last.abs_error <= limit))
            results[f"point_{k}"] = {"reference": reference, "radius_schedule": [row.radius for row in table]}
        return StudyOutcome(rows, assertions, results)

    def _run_overlap(self, model, config, tolerance, workers) -> StudyOutcome:
        rows, assertions = [], []
        for k, x in enumerate(config.points):
            curve = overlap_decay(model, x, config.radii, config.replications, self._point_seed(config, k),
                                  config.chunk_size, workers)
            rows.extend({"point": k, "r": e.r, "overlap_ratio": e.value, "overlap_stderr": e.stderr}
                        for e in curve.entries)
            assertions.append(_overlap_check(x, curve))
        return StudyOutcome(rows, assertions, {})

    def _run_specific_area(self, model, config, tolerance, workers) -> StudyOutcome:
        rows, assertions, results = [], [], {}
        for k, x in enumerate(config.points):
            area = specific_area(model, x, config.radii, config.replications, self._point_seed(config, k),
                                 config.chunk_size, workers)
            rows.extend({"point": k, "r": e.r, "annulus_ratio": e.value, "stderr": e.stderr}
                        for e in area.curve.entries)
            theory = self._specific_area_theory(model, x, config.steps)
            if theory is not None:
                assertions.append(_band_check("sigma_vs_theory", x, theory, area.extrapolated, area.stderr,
                                              tolerance))
            if model.codim == 1:
                twice_density = 2.0 * theoretical_density(model, x, config.steps)
                assertions.append(_band_check("sigma_vs_twice_density", x, twice_density, area.extrapolated,
                                              area.stderr, tolerance))
            results[f"point_{k}"] = {"extrapolated": area.extrapolated, "extrapolated_stderr": area.stderr,
                                     "residual": area.residual, "theory": theory,
                                     "void_probability": (void_probability(model, x, config.steps)
                                                          if theory is not None else None)}
        return StudyOutcome(rows, assertions, results)

    @staticmethod
    def _specific_area_theory(model, x, steps):
        """Closed-form sigma, or None for multi-grain laws other than Poisson."""
        if model.is_boolean:
            return boolean_specific_area_theoretical(model, x, steps)
        if model.is_one_grain:
            return onegrain_specific_area_theoretical(model, x, steps)
        return None

    def _run_contact(self, model, config, tolerance, workers) -> StudyOutcome:
        rows, assertions, results = [], [], {}
        for k, x in enumerate(config.points):
            curve = contact_distribution(model, x, config.radii, config.replications, self._point_seed(config, k),
                                         config.chunk_size, workers)
            rows.extend({"point": k, "r": e.r, "h": e.value, "stderr": e.stderr} for e in curve.entries)
            steps = np.diff([e.value for e in curve.entries])
            smallest_step = float(steps.min()) if len(steps) else 0.0
            assertions.append(assertion_record("contact_monotone", x, 0.0, smallest_step, 0.0, 0.0,
                                               smallest_step >= 0.0))
            derivative = contact_derivative_at_zero(curve, CONTACT_POINTS)
            stderr = contact_derivative_stderr(curve, CONTACT_POINTS)
            theory = None
            if model.is_boolean or model.is_one_grain:
                theory = contact_derivative_theoretical(model, x, config.steps)
                assertions.append(_band_check("contact_derivative_vs_theory", x, theory, derivative, stderr,
                                              tolerance))
            results[f"point_{k}"] = {"conditioning": curve.conditioning,
                                     "conditioning_stderr": curve.conditioning_stderr,
                                     "derivative": derivative, "theory": theory}
        return StudyOutcome(rows, assertions, results)

    def _run_minkowski(self, model, config, tolerance, workers) -> StudyOutcome:
        region = build_window(config.region)
        curve = mean_minkowski_content(model, region, config.radii, config.replications, config.seed,
                                       config.grid_resolution, config.chunk_size, workers)
        rows = [{"r": e.r, "content": e.value, "stderr": e.stderr} for e in curve.entries]
        fit = curve.extrapolate()
        theory = integrated_density(model, region, steps=config.steps)
        assertion = _band_check("minkowski_vs_hausdorff", None, theory, fit.value, fit.stderr, tolerance)
        return StudyOutcome(rows, [assertion], {"extrapolated": fit.value, "extrapolated_stderr": fit.stderr,
                                                "residual": fit.residual, "theory": theory})

    def _run_outer_minkowski(self, model, config, tolerance, workers) -> StudyOutcome:
        region = build_window(config.region)
        curve = mean_outer_content(model, region, config.radii, config.replications, config.seed,
                                   config.grid_resolution, config.chunk_size, workers)
        rows = [{"r": e.r, "outer_content": e.value, "stderr": e.stderr} for e in curve.entries]
        fit = curve.extrapolate()
        theory = expected_outer_content(model, config.steps)
        assertion = _band_check("outer_content_vs_decomposition", None, theory, fit.value, fit.stderr, tolerance)
        return StudyOutcome(rows, [assertion], {"extrapolated": fit.value, "extrapolated_stderr": fit.stderr,
                                                "residual": fit.residual, "theory": theory})
