"""
Lowest eigenpairs of sparse Hamiltonians and their grouping into levels.

The iterative path is a thick-restart block Lanczos: the Krylov basis is
expanded block by block with full reorthogonalization against every
stored vector, a Rayleigh-Ritz step extracts Ritz pairs, and the lowest
Ritz vectors are carried into the next cycle together with their
residual block. Small spaces are diagonalized densely.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg

from .exceptions import ConvergenceError, LevelResolutionError, NumericalFailure
from .lattice import SparseHamiltonian

logger = logging.getLogger(__name__)

DEFAULT_PAIRS = 24
DEFAULT_BLOCK_SIZE = 8
MAX_ITERATIONS = 10_000
RESIDUAL_TOLERANCE = 1e-9
DEGENERACY_TOLERANCE = 1e-7
RETAINED_LEVELS = 5
DEFAULT_SEED = 1234
# Full diagonalization is allowed up to this dimension (N = 12).
DENSE_LIMIT = 4096

_RANK_TOLERANCE = 1e-10
_MAX_REFILLS = 4


@dataclass(frozen=True, eq=False)
class EigenPair:
    """
    A single eigenpair of a real symmetric Hamiltonian.

    Attributes:
        energy: Eigenvalue
        vector: Unit-norm real eigenvector
        residual: ||H v - E v||_2 at return time
    """

    energy: float
    vector: np.ndarray = field(repr=False)
    residual: float = 0.0


@dataclass(frozen=True, eq=False)
class EnergyLevel:
    """
    A (possibly degenerate) energy level.

    Attributes:
        energy: Mean energy of the grouped eigenpairs
        degeneracy: Number of orthonormal eigenvectors d
        basis: Array of shape (dim, d) with orthonormal columns
    """

    energy: float
    degeneracy: int
    basis: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class LowSpectrum:
    """
    The lowest distinct levels of a Hamiltonian.

    Attributes:
        levels: Levels in ascending energy order
        levels_requested: How many distinct levels were asked for
        pairs_computed: Eigenpairs the solver produced to resolve them
    """

    levels: tuple[EnergyLevel, ...]
    levels_requested: int
    pairs_computed: int = 0

    @property
    def energies(self) -> list[float]:
        return [level.energy for level in self.levels]

    @property
    def degeneracies(self) -> list[int]:
        return [level.degeneracy for level in self.levels]


def _uses_dense(dim: int, m: int, block_size: int) -> bool:
    return _max_basis(m, block_size) * 2 >= dim


def _max_basis(m: int, block_size: int) -> int:
    keep = m + block_size
    return keep + max(4 * block_size, keep)


def _dense_eigenpairs(h: SparseHamiltonian, m: int) -> list[EigenPair]:
    if h.dim > DENSE_LIMIT:
        raise LevelResolutionError(
            f"dense diagonalization of dimension {h.dim} "
            f"exceeds the limit {DENSE_LIMIT}"
        )
    energies, vectors = linalg.eigh(h.to_dense(), subset_by_index=(0, m - 1))
    return [
        EigenPair(energy=float(e), vector=np.ascontiguousarray(vectors[:, i]))
        for i, e in enumerate(energies)
    ]


def _orthonormalize(
    block: np.ndarray, basis: Optional[np.ndarray], rng: np.random.Generator
) -> np.ndarray:
    """Orthonormalize a block against itself and a stored basis (CGS2 + QR).

    Columns that collapse, because the Krylov space became invariant or a
    residual has converged, are refilled with random directions.
    """
    n, width = block.shape
    for _ in range(_MAX_REFILLS):
        scale = max(float(np.linalg.norm(block, axis=0).max(initial=0.0)), 1.0)
        for _ in range(2):
            if basis is not None and basis.shape[1]:
                block = block - basis @ (basis.T @ block)
        q, r = np.linalg.qr(block)
        weak = np.abs(np.diag(r)) <= _RANK_TOLERANCE * scale
        if not weak.any():
            if basis is not None and basis.shape[1]:
                q = q - basis @ (basis.T @ q)
                q, _ = np.linalg.qr(q)
            return q
        block = q
        block[:, weak] = rng.standard_normal((n, int(weak.sum())))
    raise NumericalFailure(
        f"could not extend a basis of width {width} in dimension {n}"
    )


def lowest_eigenpairs(
    h: SparseHamiltonian,
    m: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    tol: float = RESIDUAL_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
    seed: int = DEFAULT_SEED,
) -> list[EigenPair]:
    """
    Compute the m lowest eigenpairs of a sparse Hamiltonian.

    Args:
        h: Real symmetric Hamiltonian
        m: Number of eigenpairs, 1 <= m < dim
        block_size: Lanczos block width; bounds the degeneracy one cycle can see
        tol: Relative residual target, ||Hv - Ev|| <= tol * max(1, |E|)
        max_iterations: Cap on block matrix-vector products
        seed: Seed of the random starting block

    Returns:
        m eigenpairs sorted by ascending energy

    Raises:
        ValueError: If m is out of range
        ConvergenceError: If the residual target is not met within the cap
    """
    if not 1 <= m < h.dim:
        raise ValueError(f"m must satisfy 1 <= m < {h.dim}, got {m}")
    if _uses_dense(h.dim, m, block_size):
        return _dense_eigenpairs(h, m)

    rng = np.random.default_rng(seed)
    n = h.dim
    keep = m + block_size
    max_basis = _max_basis(m, block_size)

    basis = _orthonormalize(rng.standard_normal((n, block_size)), None, rng)
    h_basis = h.apply(basis)
    iterations = 1
    cycles = 0
    while True:
        while basis.shape[1] + block_size <= max_basis:
            block = _orthonormalize(h_basis[:, -block_size:], basis, rng)
            basis = np.hstack([basis, block])
            h_basis = np.hstack([h_basis, h.apply(block)])
            iterations += 1

        projected = basis.T @ h_basis
        theta, y = linalg.eigh((projected + projected.T) / 2)
        ritz = basis @ y[:, :keep]
        h_ritz = h_basis @ y[:, :keep]
        residual_block = h_ritz - ritz * theta[:keep]
        residuals = np.linalg.norm(residual_block, axis=0)
        scale = np.maximum(1.0, np.abs(theta[:keep]))
        converged = residuals[:m] <= tol * scale[:m]
        cycles += 1
        if converged.all():
            break
        if iterations >= max_iterations:
            worst = float(residuals[:m].max())
            raise ConvergenceError(
                f"block Lanczos stopped after {iterations} block products "
                f"with residual {worst:.3e}",
                residual=worst,
            )
        logger.debug(
            f"Lanczos cycle {cycles}: {int(converged.sum())}/{m} converged, "
            f"max residual {residuals[:m].max():.3e}"
        )
        unconverged = np.flatnonzero(residuals > tol * scale)
        order = np.concatenate([unconverged, np.flatnonzero(residuals <= tol * scale)])
        basis, h_basis = ritz, h_ritz
        block = _orthonormalize(residual_block[:, order[:block_size]], basis, rng)
        basis = np.hstack([basis, block])
        h_basis = np.hstack([h_basis, h.apply(block)])
        iterations += 1

    logger.debug(f"Lanczos converged in {cycles} cycles, {iterations} block products")
    pairs = []
    for i in range(m):
        vector = ritz[:, i] / np.linalg.norm(ritz[:, i])
        pairs.append(
            EigenPair(
                energy=float(theta[i]), vector=vector, residual=float(residuals[i])
            )
        )
    return pairs


def group_levels(
    pairs: Sequence[EigenPair],
    tol_rel: float = DEGENERACY_TOLERANCE,
    retained: int = RETAINED_LEVELS,
    resolve: Optional[Callable[[int], Sequence[EigenPair]]] = None,
    dim: Optional[int] = None,
) -> LowSpectrum:
    """
    Merge numerically equal energies into degenerate levels.

    Consecutive energies within tol_rel * max(1, |E|) share a level; each
    level basis is re-orthonormalized and only the first `retained`
    levels are kept. When the last computed pair may belong to a retained
    level, its degeneracy could be incomplete: `resolve` is then called
    with a doubled pair count until a pair beyond the retained levels
    appears or the whole spectrum (`dim` pairs) is known.

    Args:
        pairs: Eigenpairs sorted ascending
        tol_rel: Relative degeneracy tolerance
        retained: Number of distinct levels to keep
        resolve: Callable producing the lowest m pairs for a larger m
        dim: Hilbert space dimension, if known

    Returns:
        The resolved LowSpectrum

    Raises:
        LevelResolutionError: If the level boundary stays unresolved
    """
    pairs = list(pairs)
    while True:
        groups = _group(pairs, tol_rel)
        complete = dim is not None and len(pairs) >= dim
        if len(groups) > retained or complete:
            break
        if resolve is None:
            if dim is None or len(pairs) < dim:
                raise LevelResolutionError(
                    f"{len(pairs)} pairs resolve only {len(groups)} levels; "
                    f"{retained} complete levels were requested"
                )
            break
        wanted = 2 * len(pairs)
        if dim is not None:
            wanted = min(wanted, dim)
        if wanted <= len(pairs):
            raise LevelResolutionError(
                f"level boundary unresolved with {len(pairs)} pairs"
            )
        logger.debug(f"Re-solving with {wanted} pairs to close level {len(groups)}")
        pairs = list(resolve(wanted))

    levels = []
    for group in groups[:retained]:
        vectors = np.column_stack([p.vector for p in group])
        q, _ = np.linalg.qr(vectors)
        levels.append(
            EnergyLevel(
                energy=float(np.mean([p.energy for p in group])),
                degeneracy=len(group),
                basis=q,
            )
        )
    return LowSpectrum(
        levels=tuple(levels), levels_requested=retained, pairs_computed=len(pairs)
    )


def _group(pairs: Sequence[EigenPair], tol_rel: float) -> list[list[EigenPair]]:
    groups: list[list[EigenPair]] = []
    for pair in pairs:
        if groups:
            last = groups[-1][-1].energy
            if abs(pair.energy - last) <= tol_rel * max(1.0, abs(last)):
                groups[-1].append(pair)
                continue
        groups.append([pair])
    return groups


def low_spectrum(
    h: SparseHamiltonian,
    retained: int = RETAINED_LEVELS,
    m: int = DEFAULT_PAIRS,
    block_size: int = DEFAULT_BLOCK_SIZE,
    tol: float = RESIDUAL_TOLERANCE,
    tol_rel: float = DEGENERACY_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
    seed: int = DEFAULT_SEED,
) -> LowSpectrum:
    """
    Solve for and group the lowest `retained` levels of a Hamiltonian.

    A block of width b captures at most b vectors of one eigenspace, so a
    retained level with degeneracy >= b may be incomplete; the solve is
    then repeated with a doubled block.
    """
    m = min(m, h.dim)
    while True:

        def resolve(count: int, width: int = block_size) -> list[EigenPair]:
            if count >= h.dim:
                return _dense_eigenpairs(h, h.dim)
            return lowest_eigenpairs(h, count, width, tol, max_iterations, seed)

        spectrum = group_levels(resolve(m), tol_rel, retained, resolve, h.dim)
        dense = spectrum.pairs_computed >= h.dim or _uses_dense(
            h.dim, spectrum.pairs_computed, block_size
        )
        saturated = max(spectrum.degeneracies, default=0) >= block_size
        if dense or not saturated:
            return spectrum
        block_size *= 2
        logger.debug(
            f"Level saturates the Lanczos block; retrying with width {block_size}"
        )
