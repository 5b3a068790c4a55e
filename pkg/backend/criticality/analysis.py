"""
Locating pseudo-critical points in sweeps and fitting their finite-size scaling.
"""

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .exceptions import FitError, JumpVanishedError
from .sweep import Measure, SweepResult

logger = logging.getLogger(__name__)

DEFAULT_JUMP_FACTOR = 5.0
DEFAULT_REFINE_TOLERANCE = 1e-6
MIN_WINDOW_POINTS = 8
MIN_SCALING_POINTS = 3

Window = Tuple[float, float]


class ExtremumKind(str, enum.Enum):
    MIN = "min"
    MAX = "max"


class FitSource(str, enum.Enum):
    DERIVATIVE = "derivative"
    MEASURE = "measure"


@dataclass(frozen=True)
class Discontinuity:
    """
    A jump of a measure between adjacent parameter values.

    Attributes:
        location: Midpoint of the bracket
        jump: Measure after minus measure before the bracket
        refined: Whether the bracket was shrunk by bisection
        bracket_width: hi - lo
        lo: Left end of the bracket
        hi: Right end of the bracket
        measure: Which measure jumped
    """

    location: float
    jump: float
    refined: bool
    bracket_width: float
    lo: float
    hi: float
    measure: str = Measure.CONCURRENCE.value


@dataclass(frozen=True)
class DerivativeExtremum:
    """
    Extremum of the derivative of a measure, read off a least-squares cubic.

    Attributes:
        location: Parameter value of the extremum
        kind: min or max
        fit_window: (lo, hi) range of samples entering the fit
        fit_coeffs: Cubic coefficients, highest power first
        source: Whether the cubic fits the derivative or the measure itself
        measure: Which measure was analysed
    """

    location: float
    kind: ExtremumKind
    fit_window: Window
    fit_coeffs: Tuple[float, float, float, float]
    source: FitSource = FitSource.DERIVATIVE
    measure: str = Measure.CONCURRENCE.value


@dataclass(frozen=True)
class ScalingFit:
    """
    Least-squares line through (ln N, ln |x_N - x_c|).

    Attributes:
        exponent: Slope beta
        intercept: Constant term
        r_squared: Coefficient of determination
        asymptotic_critical_point: x_c, supplied, never fitted
        points: (N, pseudo-critical value) pairs
        sign: above / below / mixed position of x_N relative to x_c
    """

    exponent: float
    intercept: float
    r_squared: float
    asymptotic_critical_point: float
    points: Tuple[Tuple[int, float], ...]
    sign: str


@dataclass(frozen=True)
class TwoDimensionalAnalysis:
    """
    Attributes:
        drop: Largest discontinuity near the first transition
        second: Derivative minimum of the shared-purity cubic near the second
        discontinuities: Every other discontinuity found, unclassified
    """

    drop: Discontinuity
    second: DerivativeExtremum
    discontinuities: Tuple[Discontinuity, ...] = field(default=())


def _measure_values(sweep: SweepResult, measure: "Measure | str") -> np.ndarray:
    values = sweep.values(measure)
    if np.isnan(values).any():
        raise ValueError(
            f"measure {Measure(measure).value!r} was not computed in this sweep"
        )
    return values


def detect_discontinuities(
    sweep: SweepResult,
    measure: "Measure | str" = Measure.CONCURRENCE,
    jump_threshold: Optional[float] = None,
    factor: float = DEFAULT_JUMP_FACTOR,
) -> list[Discontinuity]:
    """
    Flag adjacent-point jumps larger than a threshold.

    Without an explicit threshold, `factor` times the median of the nonzero
    absolute adjacent differences is used, so a measure that is identically
    zero over part of the sweep does not collapse the threshold. Runs of
    flagged intervals merge into a single bracket.

    Raises:
        ValueError: If the sweep has fewer than three points
    """
    x = sweep.grid
    if len(x) < 3:
        raise ValueError("discontinuity detection needs at least three grid points")
    y = _measure_values(sweep, measure)
    steps = np.abs(np.diff(y))
    threshold = jump_threshold
    if threshold is None:
        moving = steps[steps > 0]
        threshold = factor * float(np.median(moving)) if len(moving) else 0.0
    flagged = steps > threshold

    found: list[Discontinuity] = []
    i = 0
    while i < len(flagged):
        if not flagged[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(flagged) and flagged[j + 1]:
            j += 1
        lo, hi = float(x[i]), float(x[j + 1])
        found.append(
            Discontinuity(
                location=(lo + hi) / 2,
                jump=float(y[j + 1] - y[i]),
                refined=False,
                bracket_width=hi - lo,
                lo=lo,
                hi=hi,
                measure=Measure(measure).value,
            )
        )
        i = j + 1
    logger.debug(
        f"{len(found)} discontinuities in {Measure(measure).value} "
        f"above {threshold:.3e}"
    )
    return found


def refine_discontinuity(
    measure_at: Callable[[float], float],
    bracket: Window,
    tol: float = DEFAULT_REFINE_TOLERANCE,
    measure: "Measure | str" = Measure.CONCURRENCE,
) -> Discontinuity:
    """
    Shrink a bracket around a single jump by bisection.

    At each step the half whose endpoints differ most keeps the jump; if
    neither half retains at least half of the original jump, two
    opposite jumps were merged and the bracket is rejected.

    Args:
        measure_at: Evaluates the measure at a parameter value
        bracket: (lo, hi) containing exactly one jump
        tol: Final bracket width
        measure: Name recorded on the result

    Raises:
        JumpVanishedError: If the jump disappears inside the bracket
    """
    lo, hi = bracket
    y_lo, y_hi = measure_at(lo), measure_at(hi)
    initial = abs(y_hi - y_lo)
    if initial == 0:
        raise JumpVanishedError(
            f"no jump between {lo!r} and {hi!r}; use a finer initial grid"
        )
    while hi - lo > tol:
        mid = (lo + hi) / 2
        y_mid = measure_at(mid)
        left, right = abs(y_mid - y_lo), abs(y_hi - y_mid)
        if max(left, right) < initial / 2:
            raise JumpVanishedError(
                f"jump of {initial:.3e} vanished inside [{lo!r}, {hi!r}]; "
                "use a finer initial grid"
            )
        if left >= right:
            hi, y_hi = mid, y_mid
        else:
            lo, y_lo = mid, y_mid
    return Discontinuity(
        location=(lo + hi) / 2,
        jump=float(y_hi - y_lo),
        refined=True,
        bracket_width=hi - lo,
        lo=lo,
        hi=hi,
        measure=Measure(measure).value,
    )


def _window_mask(x: np.ndarray, window: Window) -> np.ndarray:
    lo, hi = window
    mask = (x >= lo) & (x <= hi)
    if mask.sum() < MIN_WINDOW_POINTS:
        raise FitError(
            f"window {window} holds {int(mask.sum())} grid points; "
            f"at least {MIN_WINDOW_POINTS} are needed"
        )
    return mask


def _single_ordering_stencils(sweep: SweepResult) -> np.ndarray:
    """True where the difference stencil stays between two level crossings."""
    points = sweep.points
    same = np.array(
        [a.degeneracies == b.degeneracies for a, b in zip(points, points[1:])],
        dtype=bool,
    )
    keep = np.ones(len(points), dtype=bool)
    keep[1:] &= same
    keep[:-1] &= same
    return keep


def derivative_extremum(
    sweep: SweepResult,
    measure: "Measure | str",
    window: Window,
    kind: "ExtremumKind | str",
    source: "FitSource | str" = FitSource.DERIVATIVE,
) -> DerivativeExtremum:
    """
    Locate an extremum of d(measure)/d(parameter) from a cubic fit.

    With source=derivative the cubic is fitted to central finite
    differences and its own extremum is returned; samples whose stencil
    spans a change in the level degeneracies are left out, since the
    mixture weights swap there. With source=measure the
    cubic is fitted to the measure and the extremum of its derivative
    (the inflection point) is returned; a minimum needs a positive
    leading coefficient. The result never leaves the fit window.

    Raises:
        FitError: If the window is too sparse or the cubic has no interior
            extremum of the requested kind
    """
    kind, source = ExtremumKind(kind), FitSource(source)
    x = sweep.grid
    y = _measure_values(sweep, measure)
    mask = _window_mask(x, window)
    if source is FitSource.DERIVATIVE:
        samples = np.gradient(y, x)
        mask &= _single_ordering_stencils(sweep)
        if mask.sum() < MIN_WINDOW_POINTS:
            raise FitError(
                f"window {window} keeps {int(mask.sum())} derivative samples away "
                f"from level crossings; at least {MIN_WINDOW_POINTS} are needed"
            )
    else:
        samples = y
    coeffs = np.polyfit(x[mask], samples[mask], 3)
    cubic = np.poly1d(coeffs)
    lo, hi = window

    if source is FitSource.DERIVATIVE:
        candidates = [
            float(r.real)
            for r in cubic.deriv().roots
            if abs(r.imag) < 1e-12 and lo < r.real < hi
        ]
        sign = 1.0 if kind is ExtremumKind.MIN else -1.0
        candidates = [r for r in candidates if sign * cubic.deriv(2)(r) > 0]
    else:
        leading = coeffs[0]
        wanted = leading > 0 if kind is ExtremumKind.MIN else leading < 0
        inflection = -coeffs[1] / (3 * leading) if leading != 0 else np.nan
        candidates = [float(inflection)] if wanted and lo < inflection < hi else []

    if not candidates:
        raise FitError(
            f"cubic {np.array2string(coeffs, precision=6)} has no interior "
            f"{kind.value} in {window} ({source.value} fit of {Measure(measure).value})"
        )
    return DerivativeExtremum(
        location=candidates[0],
        kind=kind,
        fit_window=(float(lo), float(hi)),
        fit_coeffs=tuple(float(c) for c in coeffs),
        source=source,
        measure=Measure(measure).value,
    )


def curve_maximum(
    sweep: SweepResult, measure: "Measure | str", window: Optional[Window] = None
) -> Tuple[float, float]:
    """Grid maximum refined by the parabola through its two neighbours."""
    x = sweep.grid
    y = _measure_values(sweep, measure)
    indices = np.arange(len(x))
    if window is not None:
        indices = indices[(x >= window[0]) & (x <= window[1])]
    if not len(indices):
        raise FitError(f"no grid points inside {window}")
    k = int(indices[np.argmax(y[indices])])
    if k == 0 or k == len(x) - 1:
        return float(x[k]), float(y[k])
    a, b, c = np.polyfit(x[k - 1 : k + 2], y[k - 1 : k + 2], 2)
    if a >= 0:
        return float(x[k]), float(y[k])
    peak = -b / (2 * a)
    return float(peak), float(np.polyval((a, b, c), peak))


def fit_scaling(points: Iterable[Tuple[int, float]], asymptotic: float) -> ScalingFit:
    """
    Ordinary least squares of ln |x_N - x_c| against ln N.

    The absolute value lets points approach x_c from below; `sign`
    records which side they lie on.

    Raises:
        FitError: With fewer than three points or a point equal to x_c
    """
    points = tuple((int(n), float(v)) for n, v in points)
    if len(points) < MIN_SCALING_POINTS:
        raise FitError(
            f"scaling fit needs {MIN_SCALING_POINTS} points, got {len(points)}"
        )
    sizes = np.array([n for n, _ in points], dtype=float)
    offsets = np.array([v for _, v in points]) - asymptotic
    if np.any(offsets == 0):
        raise FitError(
            f"a pseudo-critical point equals the asymptotic value {asymptotic}"
        )

    log_n, log_d = np.log(sizes), np.log(np.abs(offsets))
    slope, intercept = np.polyfit(log_n, log_d, 1)
    residual = log_d - (slope * log_n + intercept)
    total = float(np.sum((log_d - log_d.mean()) ** 2))
    r_squared = 1.0 - float(np.sum(residual**2)) / total if total > 0 else 1.0
    if np.all(offsets > 0):
        sign = "above"
    elif np.all(offsets < 0):
        sign = "below"
    else:
        sign = "mixed"
    logger.info(f"Scaling exponent {slope:.4f} (r^2 = {r_squared:.5f}, {sign})")
    return ScalingFit(
        exponent=float(slope),
        intercept=float(intercept),
        r_squared=r_squared,
        asymptotic_critical_point=float(asymptotic),
        points=points,
        sign=sign,
    )


def select_near_far(
    discontinuities: Sequence[Discontinuity], region: Window
) -> Tuple[Discontinuity, Discontinuity]:
    """The two largest jumps inside `region`, ordered by location."""
    inside = [d for d in discontinuities if region[0] <= d.location <= region[1]]
    if len(inside) < 2:
        raise FitError(
            f"found {len(inside)} discontinuities in {region}; two are needed"
        )
    largest = sorted(inside, key=lambda d: abs(d.jump), reverse=True)[:2]
    near, far = sorted(largest, key=lambda d: d.location)
    return near, far


def parity_groups(
    rows: Iterable[Tuple[int, float, float]],
) -> dict[str, list[Tuple[int, float]]]:
    """Split (N, near, far) rows into near/far x odd/even series."""
    groups: dict[str, list[Tuple[int, float]]] = {
        "near_odd": [],
        "far_odd": [],
        "near_even": [],
        "far_even": [],
    }
    for n, near, far in sorted(rows):
        parity = "odd" if n % 2 else "even"
        groups[f"near_{parity}"].append((n, near))
        groups[f"far_{parity}"].append((n, far))
    return groups


def scaling_series(
    groups: Mapping[str, Sequence[Tuple[int, float]]], asymptotic: float
) -> dict[str, ScalingFit]:
    """Fit every group with enough points; smaller groups are skipped."""
    fits = {}
    for name, points in groups.items():
        if len(points) < MIN_SCALING_POINTS:
            logger.info(f"Skipping scaling series {name!r}: {len(points)} point(s)")
            continue
        fits[name] = fit_scaling(points, asymptotic)
    return fits


def analyze_2d(
    sweep: SweepResult,
    drop_region: Window = (0.35, 0.45),
    second_window: Window = (0.55, 0.68),
    refine: Optional[Callable[[Discontinuity], Discontinuity]] = None,
    factor: float = DEFAULT_JUMP_FACTOR,
) -> TwoDimensionalAnalysis:
    """
    The two square-lattice transitions: a sharp drop and an inflection.

    The drop is the largest (optionally refined) discontinuity of either
    measure inside `drop_region`. The second transition is the minimum of
    the derivative of a cubic fitted to shared purity, since concurrence
    vanishes there. All remaining discontinuities are reported as found.

    Raises:
        ValueError: If the sweep does not cover [0.3, 0.7]
        FitError: If no drop is found or the cubic has no minimum
    """
    if sweep.grid[0] > 0.3 or sweep.grid[-1] < 0.7:
        raise ValueError(
            "the square-lattice analysis needs a sweep covering [0.3, 0.7]"
        )
    found = []
    for measure in (Measure.CONCURRENCE, Measure.SHARED_PURITY):
        for disc in detect_discontinuities(sweep, measure, factor=factor):
            inside = drop_region[0] <= disc.location <= drop_region[1]
            found.append(refine(disc) if refine is not None and inside else disc)
    candidates = [d for d in found if drop_region[0] <= d.location <= drop_region[1]]
    if not candidates:
        raise FitError(f"no discontinuity inside {drop_region}")
    drop = max(candidates, key=lambda d: abs(d.jump))
    second = derivative_extremum(
        sweep, Measure.SHARED_PURITY, second_window, ExtremumKind.MIN, FitSource.MEASURE
    )
    others = tuple(d for d in found if d is not drop)
    return TwoDimensionalAnalysis(drop=drop, second=second, discontinuities=others)
