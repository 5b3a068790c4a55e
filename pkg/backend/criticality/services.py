import hashlib
import logging
import platform
from functools import wraps
from pathlib import Path
from typing import Any

import numpy as np
import scipy
from django.conf import settings
from django.core.cache import cache

from . import __version__
from .analysis import (
    Discontinuity,
    ExtremumKind,
    FitSource,
    analyze_2d,
    curve_maximum,
    derivative_extremum,
    detect_discontinuities,
    parity_groups,
    refine_discontinuity,
    scaling_series,
    select_near_far,
)
from .exceptions import FitError, SchemaError
from .files import PathLike, manifest_path, read_json, read_sweep_csv
from .lattice import LatticeSpec, Model
from .serializers import RunConfigSerializer
from .sweep import (
    Measure,
    PointSettings,
    StateKind,
    SweepResult,
    evaluate_point,
    run_sweep,
)

logger = logging.getLogger(__name__)


def cache_safe(func):
    """
    Decorator to memoize point evaluations in the Django cache.
    If the cache is unavailable, the wrapped function still works without it.
    """

    @wraps(func)
    def wrapper(*args, **kwargs):
        digest = hashlib.sha1(repr((args, sorted(kwargs.items()))).encode()).hexdigest()
        cache_key = f"{func.__name__}:{digest}"
        try:
            cached_result = cache.get(cache_key)
            if cached_result is not None:
                return cached_result
        except Exception as e:
            logger.warning(
                f"Cache retrieval failed: {str(e)}. Proceeding without cache."
            )

        result = func(*args, **kwargs)

        try:
            cache.set(cache_key, result, settings.POINT_CACHE_TIMEOUT)
        except Exception as e:
            logger.warning(f"Cache storage failed: {str(e)}. Proceeding without cache.")

        return result

    return wrapper


cached_point = cache_safe(evaluate_point)


class SweepService:
    """
    Turns a validated run configuration into a sweep and its manifest.

    Attributes:
        config: Validated RunConfig data
        spec: Lattice built from the config
        settings: Point settings built from the config and project settings
    """

    def __init__(self, config: dict[str, Any]) -> None:
        self.config = config
        self.spec = self.lattice(config)
        self.settings = self.point_settings(config)

    @staticmethod
    def lattice(config: dict[str, Any]) -> LatticeSpec:
        model = Model(config["model"])
        if model is Model.J1J2_SQUARE:
            return LatticeSpec.square(config["rows"], config["cols"])
        return LatticeSpec.chain(model, config["n"])

    @staticmethod
    def point_settings(config: dict[str, Any]) -> PointSettings:
        if config["measure"] == "both":
            measures = (Measure.SHARED_PURITY, Measure.CONCURRENCE)
        else:
            measures = (Measure(config["measure"]),)
        return PointSettings(
            measures=measures,
            state=StateKind(config["state"]),
            level=config["level"],
            k_max=config["k_max"],
            restarts=config["restarts"],
            optimizer_tol=config["optimizer_tol"],
            max_alternations=config["max_alternations"],
            seed=config["seed"],
            pairs=config["pairs"],
            block_size=config["block_size"],
            residual_tol=config["residual_tol"],
            degeneracy_tol=config["degeneracy_tol"],
            max_iterations=config["max_iterations"],
            retained_levels=config["retained_levels"],
        )

    @property
    def pair(self) -> tuple[int, int]:
        a, b = self.config["pair"]
        return (a, b)

    def run(self, progress: bool = False) -> SweepResult:
        return run_sweep(
            self.spec,
            (self.config["param_from"], self.config["param_to"]),
            self.config["steps"],
            pair=self.pair,
            settings=self.settings,
            threads=self.config["threads"],
            progress=progress,
        )

    def manifest(self, sweep: SweepResult, wall_time: float) -> dict[str, Any]:
        """Everything needed to regenerate the sweep file."""
        return {
            "config": RunConfigSerializer(self.config).data,
            "seeds": {
                "eigensolver": self.settings.seed,
                "optimizer": self.settings.seed + 1,
            },
            "lattice": self.spec.label(),
            "parameter": self.spec.model.parameter_name,
            "versions": {
                "criticality": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "wall_time_seconds": wall_time,
            "points": len(sweep.points),
            "ppt_inconsistent_points": sum(not p.ppt_consistent for p in sweep.points),
            "clipped_points": sum(p.clipped for p in sweep.points),
        }


def load_sweep(csv_path: PathLike) -> tuple[SweepResult, SweepService]:
    """
    Read a sweep CSV together with the manifest stored next to it.

    Raises:
        SchemaError: If either file does not follow its schema
    """
    path = manifest_path(csv_path)
    if not Path(path).exists():
        raise SchemaError(f"no manifest {path} next to {csv_path}")
    manifest = read_json(path)
    if not isinstance(manifest, dict) or "config" not in manifest:
        raise SchemaError(f"{path} has no 'config' section")
    serializer = RunConfigSerializer(data=manifest["config"])
    if not serializer.is_valid():
        raise SchemaError(f"{path} holds an invalid config: {dict(serializer.errors)}")
    service = SweepService(serializer.validated_data)
    points = read_sweep_csv(csv_path)
    grid = np.array([p.param for p in points])
    try:
        sweep = SweepResult(
            spec=service.spec,
            pair=service.pair,
            grid=grid,
            points=tuple(points),
            settings=service.settings,
        )
    except ValueError as e:
        raise SchemaError(f"{csv_path}: {e}") from e
    return sweep, service


class AnalysisService:
    """
    Settings-aware analysis of stored sweeps.

    Attributes:
        config: Validated AnalysisConfig data
    """

    def __init__(self, config: dict[str, Any]) -> None:
        self.config = config

    def region(self, model: Model) -> tuple[float, float]:
        if self.config.get("region"):
            lo, hi = self.config["region"]
            return (lo, hi)
        return tuple(settings.DISCONTINUITY_REGION[model.value])

    def detect(self, sweep: SweepResult, measure: Measure) -> list[Discontinuity]:
        return detect_discontinuities(
            sweep,
            measure,
            jump_threshold=self.config.get("jump_threshold"),
            factor=self.config["jump_factor"],
        )

    def refine(self, sweep: SweepResult, disc: Discontinuity) -> Discontinuity:
        """Bisect a bracket by re-running the point pipeline, memoized per point."""

        def measure_at(value: float) -> float:
            point = cached_point(sweep.spec, float(value), sweep.pair, sweep.settings)
            return point.measure(disc.measure)

        refined = refine_discontinuity(
            measure_at, (disc.lo, disc.hi), self.config["refine_tol"], disc.measure
        )
        logger.info(
            f"Refined {disc.measure} jump at {disc.location:.6f} "
            f"to {refined.location:.8f}"
        )
        return refined

    def analyze(self, sweep: SweepResult) -> dict[str, Any]:
        """Run the analysis that fits the sweep's model."""
        model = sweep.spec.model
        if model is Model.J1J2_CHAIN:
            return self._analyze_chain(sweep)
        if model is Model.TFIM_CHAIN:
            return self._analyze_tfim(sweep)
        return self._analyze_square(sweep)

    def _analyze_chain(self, sweep: SweepResult) -> dict[str, Any]:
        region = self.region(Model.J1J2_CHAIN)
        report: dict[str, Any] = {"discontinuities": {}, "positions": {}}
        for measure in sweep.settings.measures:
            found = self.detect(sweep, measure)
            if self.config["refine"]:
                found = [
                    self.refine(sweep, d) if region[0] <= d.location <= region[1] else d
                    for d in found
                ]
            report["discontinuities"][measure.value] = found
            try:
                near, far = select_near_far(found, region)
            except FitError as e:
                logger.warning(f"{sweep.spec.label()} {measure.value}: {e}")
                continue
            report["positions"][measure.value] = {"near": near, "far": far}

        positions = report["positions"]
        if len(positions) == 2:
            report["coincidence"] = max(
                abs(
                    positions["sp"][key].location
                    - positions["concurrence"][key].location
                )
                for key in ("near", "far")
            )
        wanted = self.config["positions_measure"]
        chosen = positions.get(wanted) or next(iter(positions.values()), None)
        if chosen is not None:
            report["near"], report["far"] = chosen["near"], chosen["far"]
        return report

    def _analyze_tfim(self, sweep: SweepResult) -> dict[str, Any]:
        report: dict[str, Any] = {"extrema": {}, "maxima": {}}
        windows = {
            Measure.CONCURRENCE: (self.config["c_min_window"], ExtremumKind.MIN),
            Measure.SHARED_PURITY: (self.config["sp_max_window"], ExtremumKind.MAX),
        }
        for measure in sweep.settings.measures:
            window, kind = windows[measure]
            report["extrema"][measure.value] = derivative_extremum(
                sweep, measure, tuple(window), kind, FitSource.DERIVATIVE
            )
            location, value = curve_maximum(sweep, measure)
            report["maxima"][measure.value] = {"location": location, "value": value}
        return report

    def _analyze_square(self, sweep: SweepResult) -> dict[str, Any]:
        refine = (lambda d: self.refine(sweep, d)) if self.config["refine"] else None
        result = analyze_2d(
            sweep,
            drop_region=self.region(Model.J1J2_SQUARE),
            second_window=tuple(self.config["sp_2d_window"]),
            refine=refine,
            factor=self.config["jump_factor"],
        )
        return {
            "drop": result.drop,
            "second": result.second,
            "discontinuities": {"unclassified": list(result.discontinuities)},
        }

    def scaling(self, runs: list[tuple[SweepResult, dict[str, Any]]]) -> dict[str, Any]:
        """
        Fit finite-size scaling over a series of sweeps of the same model.

        J1-J2 chains give near/far x odd/even fits, transverse-field chains
        one fit per measure; square lattices have no series.
        """
        models = {sweep.spec.model for sweep, _ in runs}
        if len(models) != 1:
            raise FitError(
                "a scaling series needs one model, "
                f"got {sorted(m.value for m in models)}"
            )
        model = models.pop()
        if model is Model.J1J2_SQUARE:
            raise FitError("square lattices form no finite-size series")
        asymptotic = settings.ASYMPTOTIC_CRITICAL_POINTS[model.value]

        groups: dict[str, list[tuple[int, float]]] = {}
        if model is Model.J1J2_CHAIN:
            rows = [
                (sweep.spec.sites, report["near"].location, report["far"].location)
                for sweep, report in runs
                if "near" in report
            ]
            groups = parity_groups(rows)
        else:
            for sweep, report in runs:
                for name, extremum in report["extrema"].items():
                    key = f"{name}_{extremum.kind.value}"
                    series = groups.setdefault(key, [])
                    series.append((sweep.spec.sites, extremum.location))
        fits = scaling_series(groups, asymptotic)
        skipped = sorted(set(groups) - set(fits))
        return {"model": model.value, "fits": fits, "skipped": skipped}

