from functools import reduce
from pathlib import Path

import numpy as np
import pytest

from ..files import manifest_path, write_json, write_sweep_csv
from ..lattice import CouplingParams, LatticeSpec, Model, neighbor_pairs
from ..serializers import RunConfigSerializer
from ..services import SweepService
from ..sweep import SweepPoint, SweepResult

IDENTITY = np.eye(2)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


def site_operator(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """op acting on one site, identity elsewhere; site 0 is the leftmost factor."""
    factors = [IDENTITY] * n_sites
    factors[site] = op
    return reduce(np.kron, factors)


def dense_hamiltonian(spec: LatticeSpec, params: CouplingParams) -> np.ndarray:
    """Kronecker-product construction used as an oracle for the sparse builder."""
    n = spec.sites
    nn, nnn = neighbor_pairs(spec)
    h = np.zeros((1 << n, 1 << n), dtype=complex)
    if spec.model is Model.TFIM_CHAIN:
        for a, b in nn:
            h += params.lam * site_operator(SIGMA_X, a, n) @ site_operator(
                SIGMA_X, b, n
            )
        for site in range(n):
            h += site_operator(SIGMA_Z, site, n)
        return h.real
    for coupling, bonds in ((params.j1, nn), (params.j2, nnn)):
        for a, b in bonds:
            for op in (SIGMA_X, SIGMA_Y, SIGMA_Z):
                h += coupling * site_operator(op, a, n) @ site_operator(op, b, n)
    return h.real


def dense_partial_trace(
    rho: np.ndarray, keep: tuple[int, int], n_sites: int
) -> np.ndarray:
    """Literal partial trace of a full density matrix onto two sites, in keep order."""
    tensor = rho.reshape((2,) * (2 * n_sites))
    traced = [s for s in range(n_sites) if s not in keep]
    for offset, site in enumerate(sorted(traced, reverse=True)):
        remaining = n_sites - offset
        tensor = np.trace(tensor, axis1=site, axis2=site + remaining)
    lo, hi = sorted(keep)
    matrix = tensor.reshape(4, 4)
    if keep != (lo, hi):
        matrix = matrix.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
    return matrix


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density_matrix(rng: np.random.Generator, rank: int = 4) -> np.ndarray:
    z = rng.standard_normal((4, rank)) + 1j * rng.standard_normal((4, rank))
    rho = z @ z.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator so property tests are reproducible."""
    return np.random.default_rng(20240611)


@pytest.fixture
def bell_phi_plus() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2)


@pytest.fixture
def singlet() -> np.ndarray:
    return np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2)


def synthetic_chain_sweep(n: int = 8, measure: str = "both") -> SweepResult:
    """J1-J2 chain sweep over [0.2, 0.35] with jumps at 0.2463 and 0.3125."""
    serializer = RunConfigSerializer(
        data={
            "model": "j1j2-1d",
            "n": n,
            "param_from": 0.2,
            "param_to": 0.35,
            "steps": 151,
            "measure": measure,
        }
    )
    assert serializer.is_valid(), serializer.errors
    service = SweepService(serializer.validated_data)
    grid = np.linspace(0.2, 0.35, 151)
    steps = 1.0 * (grid > 0.2463) + 1.6 * (grid > 0.3125)
    concurrence = 0.5 - 0.5 * grid + 0.05 * steps
    sp = 0.2 - 0.2 * grid + 0.02 * steps
    nan = float("nan")
    points = tuple(
        SweepPoint(
            param=float(x),
            sp=float(s) if measure != "concurrence" else nan,
            concurrence=float(c) if measure != "sp" else nan,
            f_global=0.5,
            f_local=0.5 - float(s),
            energies=(-3.0 * n, -2.5 * n),
            degeneracies=(1, 3),
        )
        for x, s, c in zip(grid, sp, concurrence)
    )
    return SweepResult(
        spec=service.spec,
        pair=service.pair,
        grid=grid,
        points=points,
        settings=service.settings,
    )


def write_sweep_files(directory: Path, sweep: SweepResult) -> Path:
    """Store a sweep as CSV plus manifest, as `manage.py sweep` does."""
    measures = sweep.settings.measures
    config = {
        "model": sweep.spec.model.value,
        "n": sweep.spec.sites,
        "param_from": float(sweep.grid[0]),
        "param_to": float(sweep.grid[-1]),
        "steps": len(sweep.grid),
        "measure": "both" if len(measures) == 2 else measures[0].value,
    }
    serializer = RunConfigSerializer(data=config)
    assert serializer.is_valid(), serializer.errors
    csv_path = directory / f"{sweep.spec.label()}.csv"
    write_sweep_csv(csv_path, sweep)
    manifest = SweepService(serializer.validated_data).manifest(sweep, 0.0)
    write_json(manifest_path(csv_path), manifest)
    return csv_path
