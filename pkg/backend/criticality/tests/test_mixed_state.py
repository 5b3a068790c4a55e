import logging
import math

import numpy as np
import pytest

from ..eigensolver import EnergyLevel, LowSpectrum, low_spectrum
from ..exceptions import LevelResolutionError, NumericalFailure
from ..lattice import CouplingParams, LatticeSpec, Model, build_hamiltonian
from ..mixed_state import (
    LowLyingMixture,
    MixtureTerm,
    TwoQubitState,
    build_level_state,
    build_mixture,
    reduce_to_pair,
)
from .conftest import dense_partial_trace


def spectrum_with(degeneracies: list[int], dim: int = 16) -> LowSpectrum:
    columns = iter(np.eye(dim).T)
    levels = []
    for k, d in enumerate(degeneracies):
        basis = np.column_stack([next(columns) for _ in range(d)])
        levels.append(EnergyLevel(energy=float(k), degeneracy=d, basis=basis))
    return LowSpectrum(levels=tuple(levels), levels_requested=len(levels))


def pure(vector: np.ndarray) -> LowLyingMixture:
    vector = np.asarray(vector, dtype=float)
    return LowLyingMixture(
        terms=(MixtureTerm(weight=1.0, vector=vector, level_index=0),)
    )


class TestBuildMixture:
    """Test cases for the e^-k weighted mixture."""

    def test_pure_state_limit(self) -> None:
        mix = build_mixture(spectrum_with([1]), k_max=0)
        assert len(mix.terms) == 1
        assert mix.terms[0].weight == 1.0

    def test_nondegenerate_weights(self) -> None:
        mix = build_mixture(spectrum_with([1, 1, 1, 1, 1]), k_max=4)
        z = sum(math.exp(-k) for k in range(5))
        assert z == pytest.approx(1.5713, abs=1e-4)
        np.testing.assert_allclose(mix.weights, [math.exp(-k) / z for k in range(5)])
        assert mix.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_ground_level_is_split_evenly(self) -> None:
        mix = build_mixture(spectrum_with([2, 1, 1, 1, 1]), k_max=4)
        z = sum(math.exp(-k) for k in range(5))
        assert [t.level_index for t in mix.terms] == [0, 0, 1, 2, 3, 4]
        assert mix.weights[0] == pytest.approx(1 / (2 * z))
        assert mix.weights[1] == pytest.approx(1 / (2 * z))
        assert mix.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_too_few_levels(self) -> None:
        with pytest.raises(LevelResolutionError, match="k_max <= 2"):
            build_mixture(spectrum_with([1, 3, 1]), k_max=4)

    def test_level_state(self) -> None:
        mix = build_level_state(spectrum_with([1, 3, 1]), level=1)
        assert mix.weights.tolist() == pytest.approx([1 / 3] * 3)
        assert {t.level_index for t in mix.terms} == {1}
        with pytest.raises(LevelResolutionError):
            build_level_state(spectrum_with([1, 3, 1]), level=3)


class TestReduceToPair:
    """Test cases for the two-site partial trace."""

    def test_product_state(self) -> None:
        vector = np.zeros(8)
        vector[0] = 1.0
        rho = reduce_to_pair(pure(vector), (0, 1), 3)
        expected = np.zeros((4, 4))
        expected[0, 0] = 1.0
        np.testing.assert_allclose(rho.matrix, expected, atol=1e-15)

    def test_two_site_singlet(self, singlet: np.ndarray) -> None:
        rho = reduce_to_pair(pure(singlet), (0, 1), 2)
        np.testing.assert_allclose(rho.matrix, np.outer(singlet, singlet), atol=1e-15)

    @pytest.mark.parametrize("pair", [(0, 1), (2, 3), (4, 1), (5, 0)])
    def test_matches_dense_partial_trace(
        self, pair: tuple[int, int], rng: np.random.Generator
    ) -> None:
        vectors = rng.standard_normal((64, 4))
        vectors /= np.linalg.norm(vectors, axis=0)
        weights = rng.random(4)
        weights /= weights.sum()
        mix = LowLyingMixture(
            terms=tuple(
                MixtureTerm(weight=w, vector=vectors[:, i], level_index=i)
                for i, w in enumerate(weights)
            )
        )
        full = sum(
            w * np.outer(vectors[:, i], vectors[:, i]) for i, w in enumerate(weights)
        )
        rho = reduce_to_pair(mix, pair, 6)
        np.testing.assert_allclose(
            rho.matrix, dense_partial_trace(full, pair, 6), atol=1e-12
        )
        assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-12)

    def test_swapped_pair_is_qubit_swap(self, rng: np.random.Generator) -> None:
        vector = rng.standard_normal(32)
        vector /= np.linalg.norm(vector)
        forward = reduce_to_pair(pure(vector), (1, 3), 5).matrix
        backward = reduce_to_pair(pure(vector), (3, 1), 5).matrix
        swapped = backward.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
        np.testing.assert_array_equal(forward, swapped)

    @pytest.mark.parametrize("pair", [(0, 0), (0, 6), (-1, 2)])
    def test_invalid_pairs(self, pair: tuple[int, int]) -> None:
        vector = np.zeros(64)
        vector[0] = 1.0
        with pytest.raises(ValueError):
            reduce_to_pair(pure(vector), pair, 6)

    def test_negative_weights_abort(self, singlet: np.ndarray) -> None:
        mix = LowLyingMixture(
            terms=(
                MixtureTerm(
                    weight=2.0, vector=np.array([1.0, 0.0, 0.0, 0.0]), level_index=0
                ),
                MixtureTerm(weight=-1.0, vector=singlet, level_index=1),
            )
        )
        with pytest.raises(NumericalFailure):
            reduce_to_pair(mix, (0, 1), 2)

    def test_roundoff_negatives_are_clipped(
        self, caplog: pytest.LogCaptureFixture
    ) -> None:
        mix = LowLyingMixture(
            terms=(
                MixtureTerm(
                    weight=1.0, vector=np.array([1.0, 0.0, 0.0, 0.0]), level_index=0
                ),
                MixtureTerm(
                    weight=-1e-12, vector=np.array([0.0, 0.0, 0.0, 1.0]), level_index=1
                ),
            )
        )
        with caplog.at_level(logging.WARNING, logger="criticality"):
            rho = reduce_to_pair(mix, (0, 1), 2)
        assert rho.clipped
        assert np.linalg.eigvalsh(rho.matrix).min() >= -1e-15
        assert np.trace(rho.matrix).real == pytest.approx(1.0)
        assert "Clipped reduced-state eigenvalue" in caplog.text

    def test_translation_invariance_with_degenerate_levels(self) -> None:
        h = build_hamiltonian(
            LatticeSpec.chain(Model.J1J2_CHAIN, 8), CouplingParams(j1=1.0, j2=0.3)
        )
        mix = build_mixture(low_spectrum(h), k_max=4)
        first = reduce_to_pair(mix, (0, 1), 8).matrix
        second = reduce_to_pair(mix, (1, 2), 8).matrix
        np.testing.assert_allclose(first, second, atol=1e-8)

    def test_state_invariants(self) -> None:
        h = build_hamiltonian(
            LatticeSpec.chain(Model.TFIM_CHAIN, 8), CouplingParams(lam=0.9)
        )
        rho = reduce_to_pair(build_mixture(low_spectrum(h)), (0, 1), 8)
        assert isinstance(rho, TwoQubitState)
        np.testing.assert_allclose(rho.matrix, rho.matrix.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(rho.matrix)[0] >= -1e-12
        assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-12)
