"""
Parameter sweeps: Hamiltonian -> low spectrum -> mixture -> pair state -> measures.

Grid points are independent; with more than one worker they are
evaluated by a process pool and collected in grid order.
"""

import enum
import logging
from dataclasses import dataclass, field
from functools import partial
from multiprocessing import Pool
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from . import eigensolver
from .exceptions import CriticalityError, SweepPointError
from .lattice import CouplingParams, LatticeSpec, build_hamiltonian
from .measures import (
    DEFAULT_RESTARTS,
    DEFAULT_TOLERANCE,
    MAX_ALTERNATIONS,
    concurrence,
    global_fidelity,
    separability_consistent,
    shared_purity,
)
from .mixed_state import (
    DEFAULT_K_MAX,
    build_level_state,
    build_mixture,
    reduce_to_pair,
)

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


class Measure(str, enum.Enum):
    SHARED_PURITY = "sp"
    CONCURRENCE = "concurrence"


class StateKind(str, enum.Enum):
    MIXTURE = "mixture"
    LEVEL = "level"


@dataclass(frozen=True)
class PointSettings:
    """
    Everything, besides the lattice and the parameter value, that fixes a point.

    Attributes:
        measures: Which measures to evaluate; skipped ones are NaN
        state: Evaluate the low-lying mixture or a single level
        level: Level index when state is LEVEL
        k_max: Highest level index in the mixture
        restarts: Random starts of the local-fidelity optimizer
        optimizer_tol: Convergence tolerance of the optimizer
        max_alternations: See-saw alternations allowed per optimizer start
        seed: Seed shared by the eigensolver and the optimizer
        pairs: Initial number of eigenpairs requested
        block_size: Lanczos block width
        residual_tol: Relative eigenpair residual target
        degeneracy_tol: Relative tolerance for merging levels
        max_iterations: Cap on block matrix-vector products
        retained_levels: Distinct levels resolved and reported
    """

    measures: Tuple[Measure, ...] = (Measure.SHARED_PURITY, Measure.CONCURRENCE)
    state: StateKind = StateKind.MIXTURE
    level: int = 0
    k_max: int = DEFAULT_K_MAX
    restarts: int = DEFAULT_RESTARTS
    optimizer_tol: float = DEFAULT_TOLERANCE
    max_alternations: int = MAX_ALTERNATIONS
    seed: int = eigensolver.DEFAULT_SEED
    pairs: int = eigensolver.DEFAULT_PAIRS
    block_size: int = eigensolver.DEFAULT_BLOCK_SIZE
    residual_tol: float = eigensolver.RESIDUAL_TOLERANCE
    degeneracy_tol: float = eigensolver.DEGENERACY_TOLERANCE
    max_iterations: int = eigensolver.MAX_ITERATIONS
    retained_levels: int = eigensolver.RETAINED_LEVELS


@dataclass(frozen=True)
class SweepPoint:
    """
    Per-point record of a sweep.

    Attributes:
        param: alpha or lambda
        sp: Shared purity (NaN when not requested)
        concurrence: Concurrence (NaN when not requested)
        f_global: Global fidelity
        f_local: Local fidelity (NaN when shared purity was not requested)
        energies: Level energies E_0, E_1, ...
        degeneracies: Level degeneracies d_0, d_1, ...
        clipped: Whether the pair state needed eigenvalue clipping
        ppt_consistent: Whether C = 0 agreed with the partial-transpose test
    """

    param: float
    sp: float
    concurrence: float
    f_global: float
    f_local: float
    energies: Tuple[float, ...]
    degeneracies: Tuple[int, ...]
    clipped: bool = False
    ppt_consistent: bool = True

    def measure(self, name: "Measure | str") -> float:
        return float(getattr(self, Measure(name).value))


@dataclass(frozen=True, eq=False)
class SweepResult:
    """
    Attributes:
        spec: Lattice the sweep ran on
        pair: Site pair the measures refer to
        grid: Strictly ascending parameter values
        points: One record per grid point, in grid order
        settings: Point settings shared by every grid point
    """

    spec: LatticeSpec
    pair: Pair
    grid: np.ndarray = field(repr=False)
    points: Tuple[SweepPoint, ...] = field(repr=False)
    settings: PointSettings = PointSettings()

    def __post_init__(self) -> None:
        if len(self.grid) != len(self.points):
            raise ValueError("a sweep needs exactly one record per grid point")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("sweep grid must be strictly ascending")

    def values(self, measure: "Measure | str") -> np.ndarray:
        return np.array([point.measure(measure) for point in self.points])


def make_grid(params_range: Tuple[float, float], steps: int) -> np.ndarray:
    lo, hi = params_range
    if lo < 0 or hi < 0:
        raise ValueError(f"parameter range must be non-negative, got {params_range}")
    if steps == 1:
        if lo != hi:
            raise ValueError("a single-step sweep needs equal range endpoints")
        return np.array([float(lo)])
    if steps < 2 or not lo < hi:
        raise ValueError(
            f"need steps >= 2 and an increasing range, got {steps}, {params_range}"
        )
    return np.linspace(lo, hi, steps)


def evaluate_point(
    spec: LatticeSpec, value: float, pair: Pair, settings: PointSettings
) -> SweepPoint:
    """Run the full pipeline for a single parameter value."""
    h = build_hamiltonian(spec, CouplingParams.for_parameter(spec.model, value))
    spectrum = eigensolver.low_spectrum(
        h,
        retained=settings.retained_levels,
        m=settings.pairs,
        block_size=settings.block_size,
        tol=settings.residual_tol,
        tol_rel=settings.degeneracy_tol,
        max_iterations=settings.max_iterations,
        seed=settings.seed,
    )
    if settings.state is StateKind.LEVEL:
        mix = build_level_state(spectrum, settings.level)
    else:
        mix = build_mixture(spectrum, settings.k_max)
    rho = reduce_to_pair(mix, pair, spec.sites)

    c_value = float("nan")
    ppt_consistent = True
    if Measure.CONCURRENCE in settings.measures:
        c_result = concurrence(rho)
        c_value = c_result.value
        ppt_consistent = separability_consistent(rho, c_result)
        if not ppt_consistent:
            logger.warning(
                f"Concurrence {c_value:.3e} disagrees with the partial-transpose "
                f"test at {value!r}"
            )

    f_global = global_fidelity(rho)
    sp_value = f_local = float("nan")
    if Measure.SHARED_PURITY in settings.measures:
        rng = np.random.default_rng(settings.seed + 1)
        sp_result = shared_purity(
            rho,
            settings.restarts,
            settings.optimizer_tol,
            rng,
            settings.max_alternations,
        )
        sp_value, f_global = sp_result.sp, sp_result.f_global
        f_local = sp_result.f_local

    return SweepPoint(
        param=float(value),
        sp=sp_value,
        concurrence=c_value,
        f_global=f_global,
        f_local=f_local,
        energies=tuple(spectrum.energies),
        degeneracies=tuple(spectrum.degeneracies),
        clipped=rho.clipped,
        ppt_consistent=ppt_consistent,
    )


Evaluator = Callable[[LatticeSpec, float, Pair, PointSettings], SweepPoint]


def _evaluate_guarded(
    value: float,
    spec: LatticeSpec,
    pair: Pair,
    settings: PointSettings,
    evaluator: Evaluator,
) -> SweepPoint:
    try:
        return evaluator(spec, value, pair, settings)
    except (CriticalityError, ValueError) as e:
        raise SweepPointError(float(value), e) from e


def run_sweep(
    spec: LatticeSpec,
    params_range: Tuple[float, float],
    steps: int,
    pair: Pair = (0, 1),
    settings: PointSettings = PointSettings(),
    threads: int = 1,
    progress: bool = False,
    evaluator: Evaluator = evaluate_point,
    grid: Optional[Sequence[float]] = None,
) -> SweepResult:
    """
    Evaluate the pipeline on an evenly spaced grid.

    Args:
        spec: Lattice and model
        params_range: (first, last) parameter value
        steps: Number of grid points
        pair: Site pair whose reduced state is measured
        settings: Shared point settings
        threads: Worker processes; 1 evaluates inline
        progress: Show a progress bar
        evaluator: Point evaluator; must be picklable when threads > 1
        grid: Explicit grid overriding params_range and steps

    Returns:
        SweepResult ordered by grid index

    Raises:
        SweepPointError: On the first failing point; no partial result is returned
    """
    if grid is not None:
        values = np.asarray(grid, dtype=float)
    else:
        values = make_grid(params_range, steps)
    worker = partial(
        _evaluate_guarded, spec=spec, pair=pair, settings=settings, evaluator=evaluator
    )
    logger.info(
        f"Sweeping {spec.label()} over {len(values)} points "
        f"[{float(values[0])!r}, {float(values[-1])!r}] with {threads} worker(s)"
    )
    bar = partial(tqdm, total=len(values), desc=spec.label(), disable=not progress)
    if threads > 1 and len(values) > 1:
        with Pool(processes=min(threads, len(values))) as pool:
            points = list(bar(pool.imap(worker, values)))
    else:
        points = [worker(value) for value in bar(values)]
    return SweepResult(
        spec=spec, pair=pair, grid=values, points=tuple(points), settings=settings
    )
