import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from voterzeal.equilibrium import (
    SolverConfig, random_walk_all, random_walk_counts, random_walk_estimate, solve_dense,
    solve_equilibrium, zealot_exposure,
)
from voterzeal.errors import ConvergenceError, DomainError
from voterzeal.network import Network, generate_planted, generate_random, normalize

from conftest import make_net


def planted_oracle(K, n_users, n_zealots, p_in):
    """Own-party mass of every user on the dense planted instance.

    By symmetry each user has ``x_own = a`` and ``x_other = (1 - a)/(K - 1)``.
    A walk from a user is absorbed with probability ``alpha`` per step and
    keeps its party with probability ``p_in``, so ``a`` solves a scalar
    linear equation.
    """
    alpha = n_zealots / (n_users + n_zealots)
    lam = p_in - (1 - p_in) / (K - 1)
    return 1 / K + (1 - 1 / K) * alpha * lam / (1 - (1 - alpha) * lam)


class TestExposure:
    def test_toy_ind(self, toy_ind):
        z = zealot_exposure(toy_ind)
        assert np.allclose(z["u2"], [0.4, 0.6])

    def test_toy2(self, toy2):
        assert np.allclose(zealot_exposure(toy2)["u1"], [0.5, 0.0])

    def test_user_only_leaders(self):
        net = make_net([("ZA", "u2", 1), ("u2", "u1", 1)], {"ZA": "A"}, {"u1": "A", "u2": "A"})
        assert np.array_equal(zealot_exposure(net)["u1"], [0.0, 0.0])


class TestSolve:
    def test_toy2(self, toy2):
        x = solve_equilibrium(toy2)
        assert np.allclose(x["u1"], [2 / 3, 1 / 3], atol=1e-10)
        assert np.allclose(x["u2"], [1 / 3, 2 / 3], atol=1e-10)
        assert x.residual <= 1e-10 and x.iterations > 0

    def test_toy_chain(self, toy_chain):
        x = solve_equilibrium(toy_chain)
        assert np.allclose(x["u1"], [1, 0], atol=1e-12)
        assert np.allclose(x["u2"], [0.5, 0.5], atol=1e-12)

    def test_zeros_initialization(self, toy2):
        x = solve_equilibrium(toy2, SolverConfig(initialization="zeros"))
        assert np.allclose(x["u1"], [2 / 3, 1 / 3], atol=1e-9)

    def test_planted_p_in_one(self):
        net = generate_planted(3, 8, 1, 1.0)
        x = solve_equilibrium(net)
        y = net.truth[net.users]
        assert np.allclose(x.values, np.eye(3)[y], atol=1e-9)

    def test_planted_uniform(self):
        x = solve_equilibrium(generate_planted(4, 10, 2, 0.25))
        assert np.allclose(x.values, 0.25, atol=1e-9)

    def test_planted_closed_form(self):
        net = generate_planted(5, 40, 3, 0.9)
        x = solve_equilibrium(net)
        y = net.truth[net.users]
        own = x.values[np.arange(y.size), y]
        assert np.allclose(own, planted_oracle(5, 40, 3, 0.9), atol=1e-9)

    def test_convergence_error(self, toy2):
        with pytest.raises(ConvergenceError) as info:
            solve_equilibrium(toy2, SolverConfig(max_iterations=1))
        assert info.value.residual > 0

    def test_unnormalized_rejected(self, toy2):
        with pytest.raises(DomainError):
            solve_equilibrium(toy2.with_changes(normalized=False))

    def test_zero_in_degree_rejected(self):
        net = make_net([("ZA", "u1", 1)], {"ZA": "A"}, {"u1": "A", "u2": "A"})
        with pytest.raises(DomainError, match="u2"):
            solve_equilibrium(net)

    @pytest.mark.parametrize("kw", [{"tolerance": 0}, {"max_iterations": 0},
                                    {"initialization": "random"}])
    def test_config_validation(self, kw):
        with pytest.raises(DomainError):
            SolverConfig(**kw)

    def test_looser_tolerance_fewer_sweeps(self, toy2):
        loose = solve_equilibrium(toy2, SolverConfig(tolerance=1e-4))
        assert loose.iterations < solve_equilibrium(toy2).iterations


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 30), st.integers(2, 4), st.floats(0.05, 0.9))
def test_matches_dense_solve(seed, n, K, p_edge):
    net = generate_random(n, K, p_edge=p_edge, seed=seed)
    x = solve_equilibrium(net)
    assert np.allclose(x.values, solve_dense(net).values, atol=1e-8, rtol=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 20), st.integers(2, 4))
def test_simplex_and_residual(seed, n, K):
    net = generate_random(n, K, seed=seed)
    x = solve_equilibrium(net)
    assert np.all(x.values >= -1e-12) and np.all(x.values <= 1 + 1e-12)
    assert np.allclose(x.values.sum(axis=1), 1.0, atol=1e-9)
    _, W, Z = net.operators()
    assert np.max(np.abs(W @ x.values + Z - x.values)) <= 1e-10
    assert np.all(np.diff(x.history) <= 1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 10))
def test_zealot_invariance(seed, n):
    net = generate_random(n, 2, seed=seed)
    rng = np.random.default_rng(seed)
    src, dst, w = net.all_edges()
    u = int(rng.choice(net.users))
    z = int(rng.choice(net.zealots))
    more = Network.from_edges(net.space, net.ids, net.is_zealot, net.truth,
                              np.r_[src, u], np.r_[dst, z], np.r_[w, 2.5])
    more = normalize(more)
    assert np.array_equal(solve_equilibrium(more).values, solve_equilibrium(net).values)


class TestRandomWalk:
    def test_immediate_absorption(self):
        net = make_net([("ZA", "u1", 1)], {"ZA": "A"}, {"u1": "A"})
        assert np.array_equal(random_walk_estimate(net, "u1", 17), [1.0, 0.0])

    def test_toy2(self, toy2, backend):
        est = random_walk_estimate(toy2, "u1", 100_000, seed=4)
        assert np.allclose(est, [2 / 3, 1 / 3], atol=0.01)

    def test_zero_walks(self, toy2):
        with pytest.raises(DomainError):
            random_walk_estimate(toy2, "u1", 0)

    def test_step_cap(self):
        # tiny zealot leakage: walks bounce between u1 and u2 for a long time
        net = make_net([("ZA", "u1", 1e-6), ("u2", "u1", 1), ("u1", "u2", 1), ("ZB", "u2", 1e-6)],
                       {"ZA": "A", "ZB": "B"}, {"u1": "A", "u2": "B"})
        counts, capped = random_walk_counts(net, "u1", 200, max_steps=10)
        assert capped > 150 and counts.sum() + capped == 200
        with pytest.raises(ConvergenceError):
            random_walk_estimate(net, "u1", 200, max_steps=10)

    def test_threads_do_not_change_result(self, toy2):
        a, _ = random_walk_counts(toy2, "u1", 40_000, seed=9, threads=1)
        b, _ = random_walk_counts(toy2, "u1", 40_000, seed=9, threads=4)
        assert np.array_equal(a, b)

    def test_backends_agree(self, toy2):
        from voterzeal import _backend

        if "compiled" not in _backend.available():
            pytest.skip("compiled kernels not built")
        out = {}
        before = _backend.name()
        for name in ("python", "compiled"):
            _backend.use(name)
            out[name] = random_walk_counts(toy2, "u2", 20_000, seed=3)[0]
        _backend.use(before)
        assert np.array_equal(out["python"], out["compiled"])

    def test_all_within_error_bars(self):
        net = generate_random(6, 3, seed=21)
        walks = 20_000
        est = random_walk_all(net, walks, seed=1).values
        x = solve_equilibrium(net).values
        se = np.sqrt(x * (1 - x) / walks)
        assert np.mean(np.abs(est - x) <= 3 * se + 1e-10) >= 0.9
