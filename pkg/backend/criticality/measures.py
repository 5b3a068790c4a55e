"""
Concurrence and shared purity of two-qubit states.

Shared purity is F_G - F_L: the largest eigenvalue of rho minus the best
overlap of rho with a pure product state. The product-state maximum is
found by alternating maximization: with one qubit fixed, the best state
of the other is the top eigenvector of a conditioned 2x2 matrix.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .exceptions import ConvergenceError, NumericalFailure
from .mixed_state import TwoQubitState

logger = logging.getLogger(__name__)

DEFAULT_RESTARTS = 20
DEFAULT_TOLERANCE = 1e-10
MAX_ALTERNATIONS = 10_000
NEGATIVE_EIGENVALUE_FAILURE = -1e-8
NEGATIVE_EIGENVALUE_CLIP = -1e-10
_MONOTONE_SLACK = 1e-12

SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_YY = np.kron(SIGMA_Y, SIGMA_Y)
_KET_0 = np.array([1.0, 0.0], dtype=complex)
_KET_1 = np.array([0.0, 1.0], dtype=complex)
_COMPUTATIONAL_STARTS = (
    (_KET_0, _KET_0),
    (_KET_0, _KET_1),
    (_KET_1, _KET_0),
    (_KET_1, _KET_1),
)


@dataclass(frozen=True)
class ConcurrenceResult:
    """
    Attributes:
        value: max(0, l1 - l2 - l3 - l4)
        lambdas: Square roots of the eigenvalues of rho rho~, descending
    """

    value: float
    lambdas: Tuple[float, float, float, float]


@dataclass(frozen=True, eq=False)
class SharedPurityResult:
    """
    Attributes:
        sp: f_global - f_local
        f_global: Largest eigenvalue of rho
        f_local: Largest overlap with a pure product state
        optimizer: The maximizing single-qubit states (a, b)
        restarts_used: Starting points tried by the optimizer
        converged: Whether the best start met the tolerance
    """

    sp: float
    f_global: float
    f_local: float
    optimizer: Tuple[np.ndarray, np.ndarray] = field(repr=False)
    restarts_used: int
    converged: bool


def spin_flip(rho: TwoQubitState) -> np.ndarray:
    """(sigma_y x sigma_y) rho* (sigma_y x sigma_y) in the computational basis."""
    return _YY @ rho.matrix.conj() @ _YY


def concurrence(rho: TwoQubitState) -> ConcurrenceResult:
    """
    Wootters concurrence from the spectrum of rho rho~.

    Raises:
        NumericalFailure: If rho rho~ has an eigenvalue below -1e-8
    """
    product = rho.matrix @ spin_flip(rho)
    eigenvalues = np.sort(np.linalg.eigvals(product).real)[::-1]
    if eigenvalues[-1] < NEGATIVE_EIGENVALUE_FAILURE:
        raise NumericalFailure(
            f"rho rho~ has eigenvalue {eigenvalues[-1]:.3e} on pair {rho.pair}"
        )
    eigenvalues = np.where(eigenvalues > NEGATIVE_EIGENVALUE_CLIP, eigenvalues, 0.0)
    lambdas = np.sqrt(np.clip(eigenvalues, 0.0, None))
    value = max(0.0, float(lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]))
    return ConcurrenceResult(value=value, lambdas=tuple(float(x) for x in lambdas))


def global_fidelity(rho: TwoQubitState) -> float:
    return float(np.linalg.eigvalsh(rho.matrix)[-1])


def product_state_fidelity(rho: TwoQubitState, a: np.ndarray, b: np.ndarray) -> float:
    ab = np.kron(a, b)
    return float(np.real(ab.conj() @ rho.matrix @ ab))


def _conditioned_on_b(tensor: np.ndarray, b: np.ndarray) -> np.ndarray:
    # M_b[i, i'] = sum_{j, j'} conj(b_j) rho[(i j), (i' j')] b_j'
    return np.einsum("j,ijkl,l->ik", b.conj(), tensor, b)


def _conditioned_on_a(tensor: np.ndarray, a: np.ndarray) -> np.ndarray:
    return np.einsum("i,ijkl,k->jl", a.conj(), tensor, a)


def _top(matrix: np.ndarray) -> Tuple[float, np.ndarray]:
    values, vectors = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    return float(values[-1]), vectors[:, -1]


def _random_qubit(rng: np.random.Generator) -> np.ndarray:
    state = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    return state / np.linalg.norm(state)


def _see_saw(
    tensor: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    tol: float,
    max_alternations: int,
) -> Tuple[float, np.ndarray, np.ndarray, bool]:
    value = float(np.real(a.conj() @ _conditioned_on_b(tensor, b) @ a))
    for _ in range(max_alternations):
        half_value, a = _top(_conditioned_on_b(tensor, b))
        new_value, b = _top(_conditioned_on_a(tensor, a))
        decreased = half_value < value - _MONOTONE_SLACK
        if decreased or new_value < half_value - _MONOTONE_SLACK:
            raise NumericalFailure(
                f"see-saw objective decreased from {value!r} to {new_value!r}"
            )
        if new_value - value < tol:
            return new_value, a, b, True
        value = new_value
    return value, a, b, False


def local_fidelity(
    rho: TwoQubitState,
    restarts: int = DEFAULT_RESTARTS,
    tol: float = DEFAULT_TOLERANCE,
    rng: Optional[np.random.Generator] = None,
    max_alternations: int = MAX_ALTERNATIONS,
) -> Tuple[float, Tuple[np.ndarray, np.ndarray], int, bool]:
    """
    Maximize <a b|rho|a b> over pure product states by see-saw iteration.

    The four computational product states seed deterministic starts and
    `restarts` random qubit states seed the rest; the best converged
    result wins.

    Args:
        rho: Two-qubit state
        restarts: Number of random starts, >= 1
        tol: Stop once an alternation improves the objective by less than tol
        rng: Source of the random starts
        max_alternations: Cap per start

    Returns:
        Tuple of (value, (a, b), starts tried, converged)

    Raises:
        ConvergenceError: If no start converges within the cap
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    rng = rng if rng is not None else np.random.default_rng()
    tensor = rho.matrix.reshape(2, 2, 2, 2)
    starts = list(_COMPUTATIONAL_STARTS)
    starts += [(_random_qubit(rng), _random_qubit(rng)) for _ in range(restarts)]

    best: Optional[Tuple[float, np.ndarray, np.ndarray]] = None
    best_unconverged = -np.inf
    for a0, b0 in starts:
        value, a, b, converged = _see_saw(tensor, a0, b0, tol, max_alternations)
        if not converged:
            best_unconverged = max(best_unconverged, value)
            continue
        if best is None or value > best[0]:
            best = (value, a, b)
    if best is None:
        raise ConvergenceError(
            f"local fidelity did not converge from any of {len(starts)} starts",
            best_value=float(best_unconverged),
        )
    logger.debug(f"Local fidelity {best[0]:.12f} from {len(starts)} starts")
    return best[0], (best[1], best[2]), len(starts), True


def shared_purity(
    rho: TwoQubitState,
    restarts: int = DEFAULT_RESTARTS,
    tol: float = DEFAULT_TOLERANCE,
    rng: Optional[np.random.Generator] = None,
    max_alternations: int = MAX_ALTERNATIONS,
) -> SharedPurityResult:
    f_global = global_fidelity(rho)
    f_local, optimizer, used, converged = local_fidelity(
        rho, restarts, tol, rng, max_alternations
    )
    return SharedPurityResult(
        sp=f_global - f_local,
        f_global=f_global,
        f_local=f_local,
        optimizer=optimizer,
        restarts_used=used,
        converged=converged,
    )


def partial_transpose_min_eigenvalue(rho: TwoQubitState) -> float:
    """Smallest eigenvalue of rho with the second qubit transposed."""
    transposed = rho.matrix.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)
    return float(np.linalg.eigvalsh(transposed)[0])


def separability_consistent(
    rho: TwoQubitState, result: ConcurrenceResult, tol: float = 1e-9
) -> bool:
    """
    Check C = 0 against the positive-partial-transpose criterion.

    Near the separable boundary the partial-transpose eigenvalue falls
    off quadratically in C, so states with C < 1e-4 whose eigenvalue is
    within tol of zero are accepted either way.
    """
    min_eigenvalue = partial_transpose_min_eigenvalue(rho)
    entangled_by_c = result.value > tol
    entangled_by_ppt = min_eigenvalue < -tol
    if entangled_by_c == entangled_by_ppt:
        return True
    return result.value < 1e-4 and abs(min_eigenvalue) <= tol


def bloch_grid_fidelity(rho: TwoQubitState, resolution: int = 64) -> float:
    """
    Lower bound on the local fidelity from a (theta, phi) grid for qubit A.

    For each grid state of qubit A the best qubit-B state is exact (top
    eigenvalue of the conditioned 2x2 matrix).
    """
    tensor = rho.matrix.reshape(2, 2, 2, 2)
    theta = np.linspace(0.0, np.pi, resolution)
    phi = np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    states = np.stack(
        [np.cos(tt / 2).ravel(), (np.exp(1j * pp) * np.sin(tt / 2)).ravel()], axis=1
    )
    conditioned = np.einsum("ni,ijkl,nk->njl", states.conj(), tensor, states)
    conditioned = (conditioned + np.conj(np.swapaxes(conditioned, 1, 2))) / 2
    return float(np.linalg.eigvalsh(conditioned)[:, -1].max())
