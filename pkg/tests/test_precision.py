import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from npgraph.precision import (
    Hyper,
    PrecisionState,
    edge_inclusion_prob,
    init_state,
    pi_posterior_params,
    precision_sweep,
    tau2_posterior_params,
    update_edges,
    update_pi,
    update_precision_column,
    update_tau2,
)
from npgraph.errors import InvalidArgument

EDGE_PROB_AT_ZERO = 0.12389934309929541  # phi(0|0,1) pi / (phi(0|0,1) pi + phi(0|0,0.02)(1-pi)), mpmath


def random_problem(rng, p, n=40):
    X = rng.normal(size=(n, p))
    S = X.T @ X
    state = init_state(np.linalg.inv(S / n), Hyper())
    return state, S, n


def assert_symmetric(state):
    assert np.array_equal(state.omega, state.omega.T)
    assert np.array_equal(state.edges, state.edges.T)
    assert np.array_equal(state.tau2, state.tau2.T)
    assert np.all(np.diag(state.edges) == 0)


class TestEdgeProbability:
    def test_value_at_zero(self):
        assert abs(edge_inclusion_prob(0.0, 1.0, 0.02, 0.5) - EDGE_PROB_AT_ZERO) < 1e-15

    def test_large_entry(self):
        assert edge_inclusion_prob(3.0, 1.0, 0.02, 0.5) > 1 - 1e-12

    def test_small_pi(self):
        assert edge_inclusion_prob(0.0, 1.0, 0.02, 1e-12) < 1e-11

    @given(st.floats(-50, 50), st.floats(0.01, 100), st.floats(0.001, 0.999))
    def test_equal_components_give_prior(self, omega, tau2, pi):
        assert edge_inclusion_prob(omega, tau2, 1.0, pi) == pytest.approx(pi, rel=1e-14)

    def test_density_ratio_form(self):
        w, t2, c0, pi = 0.3, 0.7, 0.05, 0.2
        slab = stats.norm.pdf(w, scale=np.sqrt(t2)) * pi
        spike = stats.norm.pdf(w, scale=np.sqrt(c0 * t2)) * (1 - pi)
        assert edge_inclusion_prob(w, t2, c0, pi) == pytest.approx(slab / (slab + spike), rel=1e-13)


class TestConjugateParameters:
    def test_tau2_zero_entry(self):
        shape, rate = tau2_posterior_params(0.0, 1, Hyper(0.02, 2.0, 3.0))
        assert (shape, rate) == (2.5, 3.0)

    def test_tau2_slab(self):
        assert tau2_posterior_params(2.0, 1, Hyper(0.02, 1.0, 1.0)) == (1.5, 3.0)

    def test_tau2_spike(self):
        shape, rate = tau2_posterior_params(0.1, 0, Hyper(0.02, 1.0, 1.0))
        assert shape == 1.5 and rate == pytest.approx(1.25, rel=1e-14)

    @pytest.mark.parametrize("upper,expected", [
        ([1, 0, 0], (2, 12)), ([1, 1, 1], (4, 10)), ([0, 0, 0], (1, 13)),
    ])
    def test_pi_counts(self, upper, expected):
        E = np.zeros((3, 3), dtype=np.int8)
        E[np.triu_indices(3, 1)] = upper
        assert pi_posterior_params(E + E.T) == expected

    def test_hyper_validation(self):
        with pytest.raises(InvalidArgument):
            Hyper(c0=0.0)


def test_diagonal_gamma_draw():
    """p = 1, n = 10, s22 = 3, lam = 1: omega ~ Gamma(shape 6, rate 2)."""
    rng = np.random.default_rng(0)
    st_ = PrecisionState(np.eye(1), np.zeros((1, 1), np.int8), np.ones((1, 1)), 0.1, Hyper())
    draws = np.empty(20_000)
    for i in range(draws.size):
        update_precision_column(st_, np.array([[3.0]]), 10, 0, rng)
        draws[i] = st_.omega[0, 0]
    assert stats.kstest(draws, stats.gamma(6, scale=0.5).cdf).pvalue > 1e-3


def test_prior_only_diagonal_mean():
    """n = 0 and p = 1 gives omega ~ Exp(rate 1/2) with mean 2."""
    rng = np.random.default_rng(1)
    st_ = PrecisionState(np.eye(1), np.zeros((1, 1), np.int8), np.ones((1, 1)), 0.1, Hyper())
    draws = np.array([update_precision_column(st_, np.zeros((1, 1)), 0, 0, rng).omega[0, 0]
                      for _ in range(40_000)])
    assert abs(draws.mean() - 2.0) < 3 * 2.0 / np.sqrt(draws.size)


def test_two_by_two_column_against_grid():
    """Conditional of (omega_12, omega_22) given omega_11 by direct numerical normalisation."""
    n, lam, w11, v12 = 6, 1.0, 1.3, 0.4
    S = np.array([[5.0, 2.0], [2.0, 4.0]])
    state = PrecisionState(np.array([[w11, 0.1], [0.1, 1.0]]), np.array([[0, 1], [1, 0]], np.int8),
                           np.full((2, 2), v12), 0.3, Hyper(c0=0.02, lam=lam))
    rng = np.random.default_rng(2)
    draws = np.empty((60_000, 2))
    for i in range(draws.shape[0]):
        update_precision_column(state, S, n, 1, rng)
        state.omega[0, 0] = w11
        draws[i] = state.omega[0, 1], state.omega[1, 1]

    u = np.linspace(-4, 3, 700)
    w = np.linspace(1e-4, 12, 1200)
    U, W = np.meshgrid(u, w, indexing="ij")
    det = w11 * W - U**2
    ok = det > 0
    logp = np.full(U.shape, -np.inf)
    tr = w11 * S[0, 0] + 2 * U * S[0, 1] + W * S[1, 1]
    logp[ok] = (n / 2 * np.log(det[ok]) - tr[ok] / 2 - U[ok] ** 2 / (2 * v12) - lam / 2 * W[ok])
    p = np.exp(logp - logp.max())
    p /= p.sum()
    ref = np.array([(p * U).sum(), (p * W).sum()])
    assert np.allclose(draws.mean(0), ref, rtol=0.01, atol=0.005)
    ref_var = np.array([(p * U**2).sum(), (p * W**2).sum()]) - ref**2
    assert np.allclose(draws.var(0), ref_var, rtol=0.03)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_sweeps_keep_invariants(p, seed):
    rng = np.random.default_rng(seed)
    state, S, n = random_problem(rng, p)
    for _ in range(5):
        precision_sweep(state, S, n, rng)
        np.linalg.cholesky(state.omega)
        assert_symmetric(state)
        assert np.all(state.tau2[np.triu_indices(p, 1)] > 0)
        assert 0 < state.pi_edge < 1
        assert np.all(state.slab_var()[np.triu_indices(p, 1)] > 0)


def test_component_updates_restore_symmetry(rng):
    state, S, n = random_problem(rng, 6)
    for upd in (update_edges, update_tau2, update_pi):
        upd(state, rng)
        assert_symmetric(state)
    update_precision_column(state, S, n, 3, rng)
    assert_symmetric(state)


def test_equal_components_edge_frequency():
    rng = np.random.default_rng(3)
    state, S, n = random_problem(rng, 5)
    state.hyper = Hyper(c0=1.0)
    state.pi_edge = 0.3
    total = 0.0
    for _ in range(4000):
        update_edges(state, rng)
        total += state.edges[np.triu_indices(5, 1)].mean()
    assert abs(total / 4000 - 0.3) < 0.01
