"""Closed-form model quantities and the Gaussian-form augmentation identities."""

import numpy as np
import pytest
from scipy import integrate
from scipy.special import expit

from latentlink.errors import ParameterError, UsageError
from latentlink.model import (
    HyperParams,
    LatentState,
    augmented_coeffs,
    interaction_rows,
    omega,
    omega_pairs,
    predict_scores,
    predict_signs,
    pseudo_lik_hinge,
    pseudo_lik_logistic,
)
from latentlink.rng import RngStream, polya_gamma_draws


def make_state(z, u, structure="full"):
    z = np.asarray(z, dtype=np.int8)
    u = np.asarray(u, dtype=float)
    eta = u.ravel() if structure == "full" else u
    return LatentState(z, eta, np.ones(0), structure=structure)


class TestOmega:
    def test_empty_rows_give_half_probability(self):
        state = make_state(np.zeros((2, 1)), np.array([[2.0]]))
        assert omega(state, 0, 1) == 0.0
        assert expit(omega(state, 0, 1)) == 0.5

    def test_single_shared_feature(self):
        state = make_state(np.ones((2, 1)), np.array([[2.0]]))
        assert omega(state, 0, 1) == pytest.approx(2.0)
        assert expit(omega(state, 0, 1)) == pytest.approx(0.88080, abs=1e-5)

    def test_basis_vectors_select_weight_asymmetrically(self):
        z = np.array([[1, 0], [0, 1]])
        u = np.array([[0.0, 3.0], [-2.0, 0.0]])
        state = make_state(z, u)
        assert omega(state, 0, 1) == pytest.approx(3.0)  # U[0, 1]
        assert omega(state, 1, 0) == pytest.approx(-2.0)  # U[1, 0]

    def test_diagonal_structure(self):
        z = np.array([[1, 1], [1, 0]])
        state = make_state(z, np.array([1.5, -4.0]), structure="diagonal")
        assert omega(state, 0, 1) == pytest.approx(1.5)

    def test_vectorized_matches_scalar(self):
        rng = RngStream(1)
        z = (rng.random((6, 3)) < 0.5).astype(np.int8)
        u = rng.normal(size=(3, 3))
        state = make_state(z, u)
        src = np.array([0, 1, 2, 5])
        dst = np.array([1, 0, 4, 3])
        want = [omega(state, i, j) for i, j in zip(src, dst)]
        assert np.allclose(omega_pairs(state, src, dst), want)

    def test_interaction_rows_reproduce_omega(self):
        rng = RngStream(2)
        z = (rng.random((5, 3)) < 0.5).astype(np.int8)
        u = rng.normal(size=(3, 3))
        state = make_state(z, u)
        src, dst = np.array([0, 2]), np.array([1, 4])
        rows = interaction_rows(z[src], z[dst], "full")
        assert np.allclose(rows @ state.eta, omega_pairs(state, src, dst))


class TestPseudoLikelihoods:
    def test_logistic_cost_one_is_plain_likelihood(self):
        for om in np.linspace(-8, 8, 33):
            for y in (-1, 1):
                want = expit(om) if y == 1 else 1 - expit(om)
                assert pseudo_lik_logistic(om, y, 1.0) == pytest.approx(want, rel=1e-12)

    def test_logistic_symmetry_point(self):
        for c in (0.5, 1.0, 4.0, 10.0):
            assert pseudo_lik_logistic(0.0, 1, c) == pytest.approx(2.0**-c)
            assert pseudo_lik_logistic(0.0, -1, c) == pytest.approx(2.0**-c)

    def test_logistic_powered_value(self):
        assert pseudo_lik_logistic(3.0, 1, 10.0) == pytest.approx(expit(3.0) ** 10, rel=1e-10)
        assert pseudo_lik_logistic(3.0, 1, 10.0) == pytest.approx(0.61516, abs=1e-5)

    def test_logistic_no_overflow(self):
        assert pseudo_lik_logistic(700.0, -1, 16.0) == 0.0
        assert pseudo_lik_logistic(-700.0, 1, 16.0) == 0.0
        assert pseudo_lik_logistic(700.0, 1, 16.0) == pytest.approx(1.0)

    def test_hinge_values(self):
        assert pseudo_lik_hinge(5.0, 1, 1.0, 1.0) == 1.0
        assert pseudo_lik_hinge(0.0, 1, 1.0, 1.0) == pytest.approx(np.exp(-2.0), rel=1e-12)
        assert pseudo_lik_hinge(0.5, -1, 2.0, 1.0) == pytest.approx(np.exp(-6.0), rel=1e-12)

    def test_hinge_satisfied_margin_is_one(self):
        for om in (1.0, 2.0, 50.0):
            assert pseudo_lik_hinge(om, 1, 3.0, 1.0) == 1.0
        assert pseudo_lik_hinge(0.999, 1, 3.0, 1.0) < 1.0

    @pytest.mark.parametrize("loss", ["logistic", "hinge"])
    def test_monotone_in_margin(self, loss):
        oms = np.linspace(-6, 6, 61)
        for y in (-1, 1):
            if loss == "logistic":
                vals = pseudo_lik_logistic(oms, y, 2.0)
            else:
                vals = pseudo_lik_hinge(oms, y, 2.0, 1.0)
            ordered = vals[np.argsort(y * oms)]
            assert np.all(np.diff(ordered) >= -1e-15)

    def test_domain(self):
        with pytest.raises(ParameterError):
            pseudo_lik_logistic(0.0, 1, 0.0)
        with pytest.raises(ParameterError):
            pseudo_lik_hinge(0.0, 1, 1.0, -1.0)


class TestAugmentedCoeffs:
    def test_logistic_formulas(self):
        hp = HyperParams(c_pos=2.0, c_neg=2.0, loss="logistic")
        co = augmented_coeffs(np.array([1]), np.array([0.7]), hp)
        assert co.kappa[0] == pytest.approx(1.0)  # c (ytil - 1/2) = 2 * 1/2
        assert co.rho[0] == pytest.approx(0.7)

    def test_logistic_sign_antisymmetry(self):
        hp = HyperParams(c_pos=2.0, c_neg=2.0, loss="logistic")
        plus = augmented_coeffs(np.array([1]), np.array([1.0]), hp)
        minus = augmented_coeffs(np.array([-1]), np.array([1.0]), hp)
        assert plus.kappa[0] == -minus.kappa[0] == 1.0

    def test_hinge_formulas(self):
        hp = HyperParams(c_pos=1.0, c_neg=1.0, ell=1.0, loss="hinge")
        # gamma = 2 -> lambda = 1/2; kappa = c y (1 + c ell gamma) = -3, rho = c^2 gamma = 2.
        co = augmented_coeffs(np.array([-1]), np.array([0.5]), hp)
        assert co.kappa[0] == pytest.approx(-3.0)
        assert co.rho[0] == pytest.approx(2.0)

    def test_per_sign_costs(self):
        hp = HyperParams(c_pos=10.0, c_neg=1.0, loss="logistic")
        co = augmented_coeffs(np.array([1, -1]), np.array([1.0, 1.0]), hp)
        assert co.kappa[0] == pytest.approx(5.0)
        assert co.kappa[1] == pytest.approx(-0.5)


class TestAugmentationIdentities:
    """The pseudo-likelihoods really are Gaussian-form mixtures over lambda."""

    def test_hinge_scale_mixture_quadrature(self):
        # integral_0^inf (2 pi l)^(-1/2) exp(-(l + c z)^2 / (2 l)) dl
        # must equal exp(-2 c max(0, z)); substitution l = u^2 smooths it.
        for c in (0.5, 1.0, 2.0):
            for zeta in (-1.0, 0.0, 0.5, 2.0):
                def integrand(u, cz=c * zeta):
                    return np.sqrt(2.0 / np.pi) * np.exp(-((u * u + cz) ** 2) / (2.0 * u * u))

                val, err = integrate.quad(integrand, 0.0, np.inf, limit=400)
                want = np.exp(-2.0 * c * max(0.0, zeta))
                assert abs(val - want) / want < 1e-6, (c, zeta)

    def test_hinge_quadrature_example_value(self):
        def integrand(u, cz=0.5):
            return np.sqrt(2.0 / np.pi) * np.exp(-((u * u + cz) ** 2) / (2.0 * u * u))

        val, _ = integrate.quad(integrand, 0.0, np.inf, limit=400)
        assert val == pytest.approx(np.exp(-1.0), rel=1e-7)
        assert val == pytest.approx(0.36788, abs=1e-5)

    @pytest.mark.parametrize("c", [1.0, 2.0])
    @pytest.mark.parametrize("om", [-2.0, 0.0, 1.0])
    def test_logistic_mixture_monte_carlo(self, c, om):
        # 2^-c E_{l ~ PG(c,0)}[exp(kappa om - l om^2 / 2)] = powered logistic.
        rng = RngStream(77)
        n = 100_000
        lam = polya_gamma_draws(np.full(n, c), 0.0, rng)
        for y in (1, -1):
            kappa = c * y / 2.0
            vals = 2.0**-c * np.exp(kappa * om - lam * om * om / 2.0)
            se = vals.std() / np.sqrt(n)
            want = pseudo_lik_logistic(om, y, c)
            assert abs(vals.mean() - want) < 4 * max(se, 1e-12), (c, om, y)


class TestPredictScores:
    def test_single_sample(self):
        state = make_state(np.ones((2, 1)), np.array([[2.0]]))
        scores = predict_scores([state], [0], [1])
        assert scores[0] == pytest.approx(2.0)

    def test_tie_predicts_negative(self):
        plus = make_state(np.ones((2, 1)), np.array([[1.0]]))
        minus = make_state(np.ones((2, 1)), np.array([[-1.0]]))
        scores = predict_scores([plus, minus], [0], [1])
        assert scores[0] == pytest.approx(0.0)
        assert predict_signs(scores)[0] == -1

    def test_permutation_invariance(self):
        rng = RngStream(5)
        states = [
            make_state((rng.random((4, 2)) < 0.5).astype(np.int8), rng.normal(size=(2, 2)))
            for _ in range(6)
        ]
        src, dst = np.array([0, 1, 2]), np.array([3, 2, 1])
        a = predict_scores(states, src, dst)
        b = predict_scores(states[::-1], src, dst)
        assert np.allclose(a, b)

    def test_empty_samples_error(self):
        with pytest.raises(UsageError):
            predict_scores([], [0], [1])
