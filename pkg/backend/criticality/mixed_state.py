"""
Mixtures of ground and low-lying excited levels, kept in low-rank form,
and their nearest-neighbour two-qubit reductions.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .eigensolver import LowSpectrum
from .exceptions import LevelResolutionError, NumericalFailure

logger = logging.getLogger(__name__)

DEFAULT_K_MAX = 4
CLIP_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class MixtureTerm:
    weight: float
    vector: np.ndarray = field(repr=False)
    level_index: int


@dataclass(frozen=True, eq=False)
class LowLyingMixture:
    """
    rho = sum_t w_t |v_t><v_t| without ever forming the 2^N x 2^N matrix.

    Level k with degeneracy d contributes d terms of weight e^-k / (d Z),
    Z = sum_{k <= k_max} e^-k.
    """

    terms: tuple[MixtureTerm, ...]

    @property
    def weights(self) -> np.ndarray:
        return np.array([term.weight for term in self.terms])

    @property
    def dim(self) -> int:
        return self.terms[0].vector.shape[0]


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """
    Density matrix of a site pair in the basis |s_a s_b>, index 2 s_a + s_b.

    Attributes:
        matrix: 4x4 Hermitian, positive semidefinite, unit-trace matrix
        pair: (site_a, site_b) in qubit order
        clipped: Whether roundoff-negative eigenvalues were clipped
    """

    matrix: np.ndarray
    pair: Tuple[int, int] = (0, 1)
    clipped: bool = False

    @classmethod
    def from_matrix(
        cls, matrix: np.ndarray, pair: Tuple[int, int] = (0, 1)
    ) -> "TwoQubitState":
        return cls(matrix=np.asarray(matrix, dtype=np.complex128), pair=pair)

    @classmethod
    def from_vector(
        cls, psi: np.ndarray, pair: Tuple[int, int] = (0, 1)
    ) -> "TwoQubitState":
        psi = np.asarray(psi, dtype=np.complex128)
        psi = psi / np.linalg.norm(psi)
        return cls.from_matrix(np.outer(psi, psi.conj()), pair)


def build_mixture(spectrum: LowSpectrum, k_max: int = DEFAULT_K_MAX) -> LowLyingMixture:
    """
    Weight level k by e^-k, mix each level equally over its degenerate basis.

    Args:
        spectrum: Resolved low spectrum
        k_max: Highest level index included

    Returns:
        The normalized low-rank mixture

    Raises:
        LevelResolutionError: If fewer than k_max + 1 levels are available
    """
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    if len(spectrum.levels) < k_max + 1:
        raise LevelResolutionError(
            f"only {len(spectrum.levels)} distinct levels are available; "
            f"use k_max <= {len(spectrum.levels) - 1}"
        )
    z = math.fsum(math.exp(-k) for k in range(k_max + 1))
    terms = []
    for k, level in enumerate(spectrum.levels[: k_max + 1]):
        weight = math.exp(-k) / (level.degeneracy * z)
        for i in range(level.degeneracy):
            terms.append(
                MixtureTerm(weight=weight, vector=level.basis[:, i], level_index=k)
            )
    return LowLyingMixture(terms=tuple(terms))


def build_level_state(spectrum: LowSpectrum, level: int) -> LowLyingMixture:
    """Equal mixture over the degenerate basis of a single level."""
    if not 0 <= level < len(spectrum.levels):
        raise LevelResolutionError(
            f"level {level} requested but only {len(spectrum.levels)} are resolved"
        )
    chosen = spectrum.levels[level]
    weight = 1.0 / chosen.degeneracy
    return LowLyingMixture(
        terms=tuple(
            MixtureTerm(weight=weight, vector=chosen.basis[:, i], level_index=level)
            for i in range(chosen.degeneracy)
        )
    )


def _swap_qubits(matrix: np.ndarray) -> np.ndarray:
    return matrix.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)


def reduce_to_pair(
    mix: LowLyingMixture, pair: Tuple[int, int], n_sites: int
) -> TwoQubitState:
    """
    Trace out every site except `pair`, one pure term at a time.

    The contraction is always carried out for the sorted pair, then the
    qubits are swapped if needed, so (a, b) and (b, a) agree exactly.

    Raises:
        ValueError: If a site is out of range or the two sites coincide
        NumericalFailure: If an eigenvalue is below -CLIP_TOLERANCE
    """
    a, b = pair
    if not (0 <= a < n_sites and 0 <= b < n_sites):
        raise ValueError(f"pair {pair} out of range for {n_sites} sites")
    if a == b:
        raise ValueError(f"pair {pair} must name two distinct sites")
    lo, hi = min(a, b), max(a, b)
    traced = tuple(site for site in range(n_sites) if site not in (lo, hi))

    rho = np.zeros((2, 2, 2, 2), dtype=np.complex128)
    for term in mix.terms:
        tensor = term.vector.reshape((2,) * n_sites)
        rho += term.weight * np.tensordot(tensor, tensor.conj(), axes=(traced, traced))
    matrix = rho.reshape(4, 4)
    matrix = (matrix + matrix.conj().T) / 2

    clipped = False
    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    if eigenvalues[0] < -CLIP_TOLERANCE:
        raise NumericalFailure(
            f"reduced state on {pair} has eigenvalue {eigenvalues[0]:.3e}; "
            "the spectrum is not trustworthy"
        )
    if eigenvalues[0] < 0:
        clipped = True
        smallest = eigenvalues[0]
        eigenvalues = np.clip(eigenvalues, 0.0, None)
        matrix = (eigenvectors * eigenvalues) @ eigenvectors.conj().T
        matrix = (matrix + matrix.conj().T) / 2
        logger.warning(
            f"Clipped reduced-state eigenvalue {smallest:.3e} on pair {pair}"
        )
    matrix = matrix / np.trace(matrix).real

    if (a, b) != (lo, hi):
        matrix = _swap_qubits(matrix)
    return TwoQubitState(matrix=matrix, pair=(a, b), clipped=clipped)
