import numpy as np
import pytest

from conftest import random_chain
from xylab.errors import DegeneracyError, StructuralError, UnderflowError
from xylab.model import BlockMatrix, ChainParameters, build_anisotropic, build_isotropic
from xylab.spectral import (
    CorrelatorProfile,
    correlator_profile,
    delta_set,
    diagonalize,
    eigencorrelator,
    fit_decay,
    indicator,
    matrix_function,
    spectral_projection,
)
from xylab.states import OccupationPattern

PAIR = BlockMatrix(2, np.array([[0.0, 1.0], [1.0, 0.0]]), "A")
ONE_SITE = build_anisotropic(ChainParameters(1, [], [], [2.0]))


def test_two_by_two_eigenvalues():
    np.testing.assert_allclose(diagonalize(PAIR).eigenvalues, [-1, 1], atol=1e-15)


def test_single_site_M():
    eig = diagonalize(ONE_SITE)
    np.testing.assert_allclose(eig.eigenvalues, [-2, 2])
    np.testing.assert_allclose(eig.lambdas, [2])
    assert eig.E1 == pytest.approx(2.0)


@pytest.mark.parametrize("n", [2, 6, 11])
def test_random_M_invariants(rng, n):
    M = build_anisotropic(random_chain(rng, n))
    eig = diagonalize(M)
    V = eig.eigenvectors
    assert np.max(np.abs(V.T @ V - np.eye(2 * n))) <= 1e-12
    recon = (V * eig.eigenvalues) @ V.T
    assert np.max(np.abs(recon - M.entries)) <= 1e-10 * np.max(np.abs(M.entries))
    assert np.max(np.abs(eig.eigenvalues + eig.eigenvalues[::-1])) <= 1e-10
    assert np.all(np.diff(eig.lambdas) >= 0) and eig.lambdas[0] >= 0
    np.testing.assert_allclose(eig.eigenvalues, np.linalg.eigvalsh(M.entries), atol=1e-10)
    # the Bogoliubov matrix realises the +-lambda block layout
    W = eig.bogoliubov
    D = W @ M.entries @ W.T
    expected = np.kron(np.diag(eig.lambdas), np.diag([1.0, -1.0]))
    assert np.max(np.abs(D - expected)) <= 1e-10
    assert np.max(np.abs(W @ W.T - np.eye(2 * n))) <= 1e-12


def test_isotropic_M_spectrum_is_plus_minus_A(rng):
    params = random_chain(rng, 7, isotropic=True)
    ev_A = diagonalize(build_isotropic(params)).eigenvalues
    ev_M = diagonalize(build_anisotropic(params)).eigenvalues
    np.testing.assert_allclose(ev_M, np.sort(np.concatenate([ev_A, -ev_A])), atol=1e-10)


def test_broken_pairing_is_structural():
    bad = BlockMatrix(1, np.diag([1.0, 3.0]), "M")
    with pytest.raises(StructuralError):
        diagonalize(bad)


def test_isotropic_offset():
    params = ChainParameters(3, [1, 2], [0, 0], [3, 4, 5])
    assert diagonalize(build_isotropic(params)).E0 == pytest.approx(12.0)


class TestSpectralProjection:
    def test_single_site(self):
        G = spectral_projection(diagonalize(ONE_SITE), OccupationPattern((0,))).entries
        np.testing.assert_allclose(G, [[0, 0], [0, 1]], atol=1e-15)

    def test_complement_sums_to_identity(self, rng):
        eig = diagonalize(build_anisotropic(random_chain(rng, 5)))
        alpha = OccupationPattern((1, 0, 0, 1, 1))
        total = spectral_projection(eig, alpha).entries + spectral_projection(eig, alpha.complement()).entries
        np.testing.assert_allclose(total, np.eye(10), atol=1e-12)

    def test_ground_pattern_is_positive_subspace(self, rng):
        M = build_anisotropic(random_chain(rng, 4))
        eig = diagonalize(M)
        G = spectral_projection(eig, OccupationPattern.zeros(4))
        assert G.idempotence_defect() <= 1e-12
        assert np.array_equal(G.entries, G.entries.T)
        assert np.linalg.matrix_rank(G.entries.real) == 4
        evals, evecs = np.linalg.eigh(M.entries)
        pos = evecs[:, evals > 0]
        np.testing.assert_allclose(G.entries.real, pos @ pos.T, atol=1e-12)

    def test_degenerate_spectrum_rejected(self):
        # decoupled equal fields give repeated lambda
        eig = diagonalize(build_anisotropic(ChainParameters(2, [0.0], [0.0], [1.0, 1.0])))
        with pytest.raises(DegeneracyError):
            spectral_projection(eig, OccupationPattern((0, 0)))


class TestMatrixFunction:
    def test_identity_reconstructs(self, rng):
        M = build_anisotropic(random_chain(rng, 4))
        np.testing.assert_allclose(matrix_function(diagonalize(M), lambda x: x), M.entries, atol=1e-10)

    @pytest.mark.parametrize("t", [0.0, 0.3, 1.1, 7.25])
    def test_two_by_two_exponential(self, t):
        U = matrix_function(diagonalize(PAIR), lambda x: np.exp(-2j * t * x))
        c, s = np.cos(2 * t), np.sin(2 * t)
        np.testing.assert_allclose(U, [[c, -1j * s], [-1j * s, c]], atol=1e-14)

    def test_indicator_matches_projection(self, rng):
        eig = diagonalize(build_anisotropic(random_chain(rng, 5)))
        alpha = OccupationPattern((0, 1, 1, 0, 1))
        G = matrix_function(eig, indicator(delta_set(eig, alpha)))
        assert np.max(np.abs(G - spectral_projection(eig, alpha).entries)) <= 1e-12

    def test_unitarity(self, rng):
        eig = diagonalize(build_anisotropic(random_chain(rng, 6)))
        for t in (0.1, 3.0, 250.0):
            U = matrix_function(eig, lambda x: np.exp(-2j * t * x))
            assert np.max(np.abs(U @ U.conj().T - np.eye(12))) <= 1e-12


class TestEigencorrelator:
    def test_single_site_is_two(self):
        Q = eigencorrelator(diagonalize(ONE_SITE))
        np.testing.assert_allclose(Q, [[2.0]])

    def test_decoupled_sites(self, rng):
        params = ChainParameters(5, np.zeros(4), rng.uniform(-0.5, 0.5, 4), rng.uniform(0, 4, 5))
        Q = eigencorrelator(diagonalize(build_anisotropic(params)))
        np.testing.assert_allclose(Q - np.diag(np.diag(Q)), 0.0, atol=1e-15)

    def test_pair_A(self):
        Q = eigencorrelator(diagonalize(PAIR))
        assert Q[0, 1] == pytest.approx(1.0)

    def test_dominates_matrix_functions(self, rng):
        params = random_chain(rng, 6)
        eig = diagonalize(build_anisotropic(params))
        Q = eigencorrelator(eig)
        for _ in range(20):
            phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 12))
            G = (eig.eigenvectors * phases) @ eig.eigenvectors.T
            blocks = G.reshape(6, 2, 6, 2).transpose(0, 2, 1, 3)
            norms = np.linalg.norm(blocks, ord=2, axis=(2, 3))
            assert np.all(norms <= Q + 1e-12)

    def test_isotropic_bound_attained(self, rng):
        # for scalar entries the phase-free choice g = sign(v_j v_k) reaches Q_jk
        eig = diagonalize(build_isotropic(random_chain(rng, 6, isotropic=True)))
        Q = eigencorrelator(eig)
        V = eig.eigenvectors
        g = np.sign(V[1] * V[4])
        assert abs(((V * g) @ V.T)[1, 4]) == pytest.approx(Q[1, 4], abs=1e-12)


class TestProfileAndFits:
    def test_profile_reduction(self):
        Q = np.array([[2.0, 0.5, 0.1], [0.5, 1.0, 0.3], [0.1, 0.3, 1.5]])
        prof = correlator_profile(Q, samples=4)
        np.testing.assert_allclose(prof.q_max, [2.0, 0.5, 0.1])
        np.testing.assert_allclose(prof.q_mean, [1.5, 0.4, 0.1])
        assert np.all(np.diff(prof.q_max) <= 0)

    def test_csv_round_trip(self, tmp_path):
        prof = CorrelatorProfile(np.array([1.0, 1 / 3, 1e-17]), np.array([0.5, 0.1, 0.0]), 7)
        prof.to_csv(tmp_path / "q.csv")
        back = CorrelatorProfile.from_csv(tmp_path / "q.csv")
        assert back.q_max.tobytes() == prof.q_max.tobytes()
        assert back.samples == 7
        assert (tmp_path / "q.csv").read_text().splitlines()[0] == "r,Q_max,Q_mean,samples"

    def test_exponential_recovered(self):
        r = np.arange(30)
        fit = fit_decay(CorrelatorProfile.synthetic(3 * np.exp(-r / 2)), "exponential")
        assert fit.xi == pytest.approx(2.0, rel=1e-12)
        assert fit.C == pytest.approx(3.0, rel=1e-12)
        assert fit.residual < 1e-12

    def test_power_recovered(self):
        r = np.arange(40)
        fit = fit_decay(CorrelatorProfile.synthetic(1 / (1 + r) ** 3), "power")
        assert fit.beta == pytest.approx(3.0, rel=1e-12)
        assert fit.residual < 1e-12

    def test_model_comparison_on_synthetic(self):
        r = np.arange(50)
        prof = CorrelatorProfile.synthetic(np.exp(-r / 4))
        assert fit_decay(prof, "exponential").residual < fit_decay(prof, "power").residual

    def test_window(self):
        r = np.arange(30)
        values = np.where(r < 5, 1.0, 2 * np.exp(-r / 3))
        fit = fit_decay(CorrelatorProfile.synthetic(values), "exponential", window=(5, 29))
        assert fit.xi == pytest.approx(3.0, rel=1e-10)
        assert fit.points == 25

    def test_underflow(self):
        values = np.concatenate([[1.0], np.full(9, 1e-20)])
        with pytest.raises(UnderflowError):
            fit_decay(CorrelatorProfile.synthetic(values), "exponential", window=(1, 9))

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            fit_decay(CorrelatorProfile.synthetic([1.0, 0.5, 0.25]), "exponential")
