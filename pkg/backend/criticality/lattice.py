"""
Spin-1/2 lattices with periodic boundaries and their sparse Hamiltonians.

Conventions:
    - Pauli matrices, not spin-1/2 operators, enter every coupling.
    - sigma^z|0> = +|0>; the computational basis is ordered
      lexicographically with site 0 as the most significant bit.
    - Bonds are unordered and deduplicated, so wrapped bonds of very
      small lattices are counted once.
"""

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from .exceptions import CapacityError, DimensionMismatchError, InvalidLatticeError

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]

MIN_CHAIN_SITES = 2
MAX_CHAIN_SITES = 20
# Largest lattice whose Hamiltonian is assembled; 2^20 states with ~40
# stored entries per row already needs several GB.
MAX_SITES = 20


class Model(str, enum.Enum):
    """The three spin models; values double as CLI and file names."""

    J1J2_CHAIN = "j1j2-1d"
    TFIM_CHAIN = "tfim"
    J1J2_SQUARE = "j1j2-2d"

    @property
    def is_heisenberg(self) -> bool:
        return self is not Model.TFIM_CHAIN

    @property
    def parameter_name(self) -> str:
        return "lambda" if self is Model.TFIM_CHAIN else "alpha"


@dataclass(frozen=True)
class LatticeSpec:
    """
    Geometry of a periodic spin-1/2 lattice.

    Attributes:
        model: Which Hamiltonian lives on the lattice
        sites: Number of sites N (rows * cols for the square lattice)
        rows: Square-lattice rows, 1 for chains
        cols: Square-lattice columns, equal to N for chains
    """

    model: Model
    sites: int
    rows: int = 1
    cols: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", Model(self.model))
        if self.model is Model.J1J2_SQUARE:
            if self.rows < 2 or self.cols < 2:
                raise InvalidLatticeError(
                    f"square lattice needs rows >= 2 and cols >= 2, got "
                    f"{self.rows}x{self.cols}"
                )
            if self.sites != self.rows * self.cols:
                raise InvalidLatticeError(
                    f"sites={self.sites} does not match {self.rows}x{self.cols}"
                )
            return
        if not MIN_CHAIN_SITES <= self.sites <= MAX_CHAIN_SITES:
            raise InvalidLatticeError(
                f"chain length must lie in [{MIN_CHAIN_SITES}, {MAX_CHAIN_SITES}], "
                f"got {self.sites}"
            )
        object.__setattr__(self, "rows", 1)
        object.__setattr__(self, "cols", self.sites)

    @classmethod
    def chain(cls, model: Model, sites: int) -> "LatticeSpec":
        return cls(model=Model(model), sites=sites)

    @classmethod
    def square(cls, rows: int = 4, cols: int = 4) -> "LatticeSpec":
        return cls(model=Model.J1J2_SQUARE, sites=rows * cols, rows=rows, cols=cols)

    @property
    def dim(self) -> int:
        return 1 << self.sites

    def site_index(self, row: int, col: int) -> int:
        return (row % self.rows) * self.cols + (col % self.cols)

    def label(self) -> str:
        if self.model is Model.J1J2_SQUARE:
            return f"{self.model.value}-{self.rows}x{self.cols}"
        return f"{self.model.value}-n{self.sites}"


@dataclass(frozen=True)
class CouplingParams:
    """
    Coupling constants in units of the nearest-neighbour exchange.

    Attributes:
        j1: Nearest-neighbour Heisenberg coupling
        j2: Next-nearest-neighbour Heisenberg coupling
        lam: Ising xx coupling relative to the transverse field
    """

    j1: float = 1.0
    j2: float = 0.0
    lam: float = 0.0

    def __post_init__(self) -> None:
        for name in ("j1", "j2", "lam"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise InvalidLatticeError(
                    f"{name} must be finite and >= 0, got {value}"
                )

    @property
    def alpha(self) -> float:
        return self.j2 / self.j1 if self.j1 > 0 else float("nan")

    @classmethod
    def for_parameter(cls, model: Model, value: float) -> "CouplingParams":
        """Couplings for a sweep parameter: alpha = J2/J1 with J1 = 1, or lambda."""
        if Model(model) is Model.TFIM_CHAIN:
            return cls(j1=0.0, j2=0.0, lam=float(value))
        return cls(j1=1.0, j2=float(value), lam=0.0)


@dataclass(frozen=True, eq=False)
class SparseHamiltonian:
    """
    Real symmetric Hamiltonian stored in CSR form.

    Attributes:
        n_sites: Number of spin-1/2 sites
        matrix: CSR matrix of shape (2^N, 2^N); never mutated after construction
    """

    n_sites: int
    matrix: sparse.csr_matrix = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return apply(self, v)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _dedupe(pairs: Sequence[Pair]) -> list[Pair]:
    seen: set[frozenset[int]] = set()
    unique: list[Pair] = []
    for a, b in pairs:
        key = frozenset((a, b))
        if a == b or key in seen:
            continue
        seen.add(key)
        unique.append((a, b))
    return unique


def neighbor_pairs(spec: LatticeSpec) -> Tuple[list[Pair], list[Pair]]:
    """
    Nearest and next-nearest neighbour bonds with periodic wraparound.

    Chains pair i with i+1 and i+2; the square lattice pairs each site
    with its right and lower neighbours and with both lower diagonals.
    Self bonds and repeated unordered pairs are dropped.

    Args:
        spec: Lattice geometry

    Returns:
        Tuple of (nearest-neighbour pairs, next-nearest-neighbour pairs)
    """
    if spec.model is not Model.J1J2_SQUARE:
        n = spec.sites
        nn = [(i, (i + 1) % n) for i in range(n)]
        nnn = [(i, (i + 2) % n) for i in range(n)]
        return _dedupe(nn), _dedupe(nnn)

    nn, nnn = [], []
    for row in range(spec.rows):
        for col in range(spec.cols):
            site = spec.site_index(row, col)
            nn.append((site, spec.site_index(row, col + 1)))
            nn.append((site, spec.site_index(row + 1, col)))
            nnn.append((site, spec.site_index(row + 1, col + 1)))
            nnn.append((site, spec.site_index(row + 1, col - 1)))
    return _dedupe(nn), _dedupe(nnn)


def _bit(states: np.ndarray, n_sites: int, site: int) -> np.ndarray:
    return (states >> (n_sites - 1 - site)) & 1


def _mask(n_sites: int, *sites: int) -> int:
    mask = 0
    for site in sites:
        mask |= 1 << (n_sites - 1 - site)
    return mask


def build_hamiltonian(
    spec: LatticeSpec,
    params: CouplingParams,
    pairs: Optional[Tuple[Sequence[Pair], Sequence[Pair]]] = None,
) -> SparseHamiltonian:
    """
    Assemble the sparse Hamiltonian of a lattice model term by term.

    Heisenberg bonds J sigma_i.sigma_j contribute +J (aligned) or -J
    (anti-aligned) on the diagonal and 2J between the two states that
    differ by exchanging the anti-aligned pair. Ising bonds
    lambda sigma^x_i sigma^x_j flip both spins; the field sum_i sigma^z_i
    has unit coefficient.

    Args:
        spec: Lattice geometry and model
        params: Coupling constants
        pairs: Optional (nn, nnn) bond lists replacing neighbor_pairs(spec)

    Returns:
        The immutable SparseHamiltonian

    Raises:
        CapacityError: If 2^N states cannot be addressed
    """
    n = spec.sites
    if n > MAX_SITES:
        raise CapacityError(
            f"{spec.label()} needs a 2^{n}-dimensional space; at most {MAX_SITES} "
            "sites are supported"
        )
    nn, nnn = pairs if pairs is not None else neighbor_pairs(spec)
    nn, nnn = _dedupe(nn), _dedupe(nnn)
    dim = 1 << n
    states = np.arange(dim, dtype=np.int64)
    diagonal = np.zeros(dim, dtype=np.float64)
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    values: list[np.ndarray] = []

    if spec.model.is_heisenberg:
        bonds = [(a, b, params.j1) for a, b in nn] + [(a, b, params.j2) for a, b in nnn]
        for a, b, coupling in bonds:
            if coupling == 0.0:
                continue
            aligned = _bit(states, n, a) == _bit(states, n, b)
            diagonal += np.where(aligned, coupling, -coupling)
            flippable = states[~aligned]
            rows.append(flippable ^ _mask(n, a, b))
            cols.append(flippable)
            values.append(np.full(flippable.size, 2.0 * coupling))
    else:
        for site in range(n):
            diagonal += np.where(_bit(states, n, site) == 0, 1.0, -1.0)
        if params.lam != 0.0:
            for a, b in nn:
                rows.append(states ^ _mask(n, a, b))
                cols.append(states)
                values.append(np.full(dim, params.lam))

    rows.append(states)
    cols.append(states)
    values.append(diagonal)
    matrix = sparse.coo_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    matrix.sum_duplicates()
    matrix.sort_indices()
    logger.debug(f"Built {spec.label()} Hamiltonian with {matrix.nnz} stored entries")
    return SparseHamiltonian(n_sites=n, matrix=matrix)


def apply(h: SparseHamiltonian, v: np.ndarray) -> np.ndarray:
    """
    Matrix-vector (or matrix-block) product H v.

    Raises:
        DimensionMismatchError: If v does not have h.dim rows
    """
    v = np.asarray(v)
    if v.ndim not in (1, 2) or v.shape[0] != h.dim:
        raise DimensionMismatchError(
            f"vector of shape {v.shape} does not match dimension {h.dim}"
        )
    return h.matrix @ v
