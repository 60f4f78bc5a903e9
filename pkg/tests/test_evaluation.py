import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from voterzeal.classify import class_weights, fit_binary, train_classifier
from voterzeal.discord import DiscordStore, discord_exact
from voterzeal.equilibrium import OpinionMatrix, solve_equilibrium, zealot_exposure
from voterzeal.errors import DomainError
from voterzeal.evaluation import (
    argmax_accuracy, baseline_report, compare_networks, discord_discrimination,
    discord_statistics, evaluate, ground_truth, pipeline, pooled_distributions,
    separation_distances, zealot_baseline_compare,
)
from voterzeal.network import generate_planted

from conftest import AB, make_net


class TestArgmax:
    def test_unique_max(self):
        assert argmax_accuracy([[0.9, 0.1]], [0])["overall"] == 1.0

    def test_tie_counts_as_correct(self):
        assert argmax_accuracy([[0.5, 0.5]], [1])["overall"] == 1.0

    def test_uniform_everywhere(self):
        U = np.full((7, 5), 0.2)
        assert argmax_accuracy(U, [0, 1, 2, 3, 4, 0, 1])["overall"] == 1.0

    def test_wrong(self):
        r = argmax_accuracy([[0.9, 0.1], [0.2, 0.8]], [1, 1])
        assert r["overall"] == 0.5 and r["per_party"] == {0: None, 1: 0.5}

    def test_planted_p_in_one(self):
        net = generate_planted(3, 5, 1, 1.0)
        x = solve_equilibrium(net)
        assert argmax_accuracy(x.values, ground_truth(net, x.ids))["overall"] == 1.0

    def test_empty(self):
        with pytest.raises(DomainError):
            argmax_accuracy(np.zeros((0, 2)), [])


class TestPooled:
    def test_planted_indicators(self):
        net = generate_planted(2, 5, 1, 1.0)
        x = solve_equilibrium(net)
        r = pooled_distributions(x.values, ground_truth(net, x.ids))
        assert r["own_mean"] == pytest.approx(1.0) and r["other_mean"] == pytest.approx(0.0, abs=1e-8)

    def test_planted_uniform(self):
        net = generate_planted(3, 6, 2, 1 / 3)
        x = solve_equilibrium(net)
        r = pooled_distributions(x.values, ground_truth(net, x.ids))
        assert r["own_mean"] == pytest.approx(1 / 3) and r["other_mean"] == pytest.approx(1 / 3)

    def test_toy2(self, toy2):
        x = solve_equilibrium(toy2)
        r = pooled_distributions(x.values, ground_truth(toy2, x.ids))
        a = r["parties"][0]
        assert a["own"] == pytest.approx([2 / 3]) and a["other"] == pytest.approx([1 / 3])

    def test_missing_party_flagged(self):
        r = pooled_distributions([[0.7, 0.3, 0.0]], [0], 3)
        assert r["missing"] == [1, 2]
        assert sum(r["own_hist"]) == 1 and sum(r["other_hist"]) == 2


class TestSeparation:
    def test_identical(self):
        r = separation_distances(np.full((4, 2), 0.5), [0, 0, 1, 1])
        assert np.all(r["matrix"] == 0)

    def test_planted_indicators(self):
        U = np.array([[1.0, 0], [1.0, 0], [0, 1.0], [0, 1.0]])
        r = separation_distances(U, [0, 0, 1, 1])
        assert np.allclose(r["matrix"], [[0, math.sqrt(2)], [math.sqrt(2), 0]])

    def test_toy2(self, toy2):
        x = solve_equilibrium(toy2)
        r = separation_distances(x.values, ground_truth(toy2, x.ids))
        assert r["cross"] == pytest.approx(math.sqrt(2) / 3)
        assert np.isnan(r["matrix"][0, 0]) and r["within"] is None

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 5))
    def test_one_supporter_each(self, seed, K):
        rng = np.random.default_rng(seed)
        U = rng.dirichlet(np.ones(K), K)
        m = separation_distances(U, np.arange(K))["matrix"]
        assert np.all(np.isnan(np.diag(m)))
        off = ~np.eye(K, dtype=bool)
        assert np.allclose(m[off], m.T[off])
        # brute-force check of one entry
        assert m[0, 1] == pytest.approx(np.linalg.norm(U[0] - U[1]))

    def test_chunked_equals_direct(self, monkeypatch, rng):
        import voterzeal.evaluation as ev

        U = rng.dirichlet(np.ones(3), 50)
        y = rng.integers(0, 3, 50)
        full = separation_distances(U, y)
        monkeypatch.setattr(ev, "_ROW_CHUNK", 7)
        part = separation_distances(U, y)
        assert np.allclose(full["matrix"], part["matrix"], equal_nan=True)


class TestClassifier:
    def test_separable(self):
        net = generate_planted(3, 20, 2, 0.95)
        x = solve_equilibrium(net)
        clf, acc = train_classifier(x.values, ground_truth(net, x.ids))
        assert acc == 1.0
        assert clf.coef.shape == (3, 3)

    @pytest.mark.parametrize("loss", ["hinge", "logistic"])
    def test_no_signal(self, loss):
        X = np.full((10, 2), 0.5)
        y = np.array([0] * 7 + [1] * 3)
        _, acc = train_classifier(X, y, loss)
        assert acc <= 0.7

    def test_balanced_rescues_minority(self):
        X = np.r_[np.tile([0.52, 0.48], (99, 1)), [[0.48, 0.52]]]
        y = np.r_[np.zeros(99, int), [1]]
        plain, _ = train_classifier(X, y, "hinge", "none")
        bal, acc = train_classifier(X, y, "hinge", "balanced")
        assert plain.predict(X)[-1] == 0
        assert acc == 1.0

    @pytest.mark.parametrize("loss", ["hinge", "logistic"])
    def test_balanced_equal_counts_is_plain(self, loss, rng):
        X = rng.random((40, 3))
        y = np.repeat([0, 1, 2, 3], 10)
        a, _ = train_classifier(X, y, loss, "none")
        b, _ = train_classifier(X, y, loss, "balanced")
        assert np.allclose(a.coef, b.coef, atol=1e-9) and np.allclose(a.intercept, b.intercept, atol=1e-9)

    def test_matches_reference_logistic(self, rng):
        sklearn = pytest.importorskip("sklearn.linear_model")
        X = rng.normal(size=(80, 2))
        y = (X[:, 0] + 0.5 * X[:, 1] + rng.normal(0, 0.7, 80) > 0).astype(int)
        w, b, _, g = fit_binary(X, np.where(y == 1, 1.0, -1.0), np.ones(80), "logistic",
                                gtol=1e-10, max_epochs=200_000)
        # same objective: 1/2 |w|^2 + C sum log-loss with C = 1
        ref = sklearn.LogisticRegression(C=1.0, tol=1e-12, max_iter=10_000).fit(X, y)
        assert np.allclose(w, ref.coef_[0], atol=1e-5)
        assert b == pytest.approx(ref.intercept_[0], abs=1e-5)

    def test_single_class(self):
        with pytest.raises(DomainError):
            train_classifier(np.ones((3, 2)), [1, 1, 1])

    def test_bad_options(self):
        with pytest.raises(DomainError):
            train_classifier(np.eye(2), [0, 1], loss="huber")
        with pytest.raises(DomainError):
            class_weights(np.array([0, 1]), "inverse")

    def test_class_weights(self):
        assert class_weights(np.array([0, 0, 0, 1]), "balanced").tolist() == [2 / 3] * 3 + [2.0]


def store(values, rows):
    """Discord store over ``len(rows)`` users with all pairs set from ``values``."""
    n = len(rows)
    i, j = np.triu_indices(n, k=1)
    return DiscordStore(tuple(f"u{k}" for k in range(n)), i, j, np.asarray(values, float), "exact")


class TestDiscordDiscrimination:
    def setup_method(self):
        # two parties of three: 6 within pairs, 9 cross pairs
        self.y = np.array([0, 0, 0, 1, 1, 1])
        i, j = np.triu_indices(6, k=1)
        self.cross = self.y[i] != self.y[j]

    def test_separable(self):
        rho = store(np.where(self.cross, 0.9, 0.1), self.y)
        r = discord_discrimination(rho, self.y)
        assert r["accuracy"] == 1.0
        assert 0.1 < r["cutoff"] < 0.9

    def test_no_signal(self):
        r = discord_discrimination(store(np.full(15, 0.4), self.y), self.y)
        assert r["accuracy"] == pytest.approx(9 / 15)

    def test_relabel_invariance(self, rng):
        vals = np.where(self.cross, rng.uniform(0.3, 0.9, 15), rng.uniform(0.1, 0.6, 15))
        rho = store(vals, self.y)
        a = discord_discrimination(rho, self.y, positive="cross")
        b = discord_discrimination(rho, self.y, positive="within")
        assert a["accuracy"] == b["accuracy"]
        assert a["cutoff"] == pytest.approx(b["cutoff"], abs=1e-6)

    def test_one_class(self):
        with pytest.raises(DomainError):
            discord_discrimination(store(np.zeros(3), [0, 0, 0]), np.array([0, 0, 0]))

    def test_planted_exact(self):
        net = generate_planted(2, 15, 2, 0.9, degree=6, seed=4)
        x = solve_equilibrium(net)
        y = ground_truth(net, x.ids)
        r = discord_discrimination(discord_exact(net, x), y)
        assert r["accuracy"] >= 0.95

    def test_statistics(self):
        rho = store(np.where(self.cross, 0.9, 0.1), self.y)
        s = discord_statistics(rho, self.y, 2)
        assert s["within"] == pytest.approx(0.1) and s["cross"] == pytest.approx(0.9)
        assert s["pairs_within"] == 6 and s["pairs_cross"] == 9
        assert np.allclose(s["matrix"], [[0.1, 0.9], [0.9, 0.1]])


class TestReport:
    def test_toy2(self, toy2):
        x = solve_equilibrium(toy2)
        rep = evaluate(toy2, x, discord_exact(toy2, x))
        d = rep.to_dict()
        assert d["dist_cross"] == pytest.approx(math.sqrt(2) / 3)
        assert d["dist_within"] is None and d["discord_within"] is None
        assert d["discord_cross"] == pytest.approx(1 / 3)
        assert "acc_argmax" in rep.to_text()

    def test_planted_p_in_one(self):
        rows = compare_networks([("p1", generate_planted(2, 4, 1, 1.0))])
        r = rows[0]
        assert r["acc_argmax"] == 1.0 and r["acc_classifier"] == 1.0
        assert r["mean_own"] == pytest.approx(1.0) and r["mean_other"] == pytest.approx(0.0, abs=1e-8)
        assert r["dist_within"] == pytest.approx(0.0, abs=1e-6)

    def test_identical_variants(self):
        net = generate_planted(3, 6, 1, 0.8, degree=3, seed=2)
        rows = compare_networks([("a", net), ("b", net)])
        assert {k: v for k, v in rows[0].items() if k != "network"} == \
               {k: v for k, v in rows[1].items() if k != "network"}
        assert rows == compare_networks([("a", net), ("b", net)])

    def test_higher_p_in_dominates(self):
        hi = generate_planted(3, 30, 2, 0.9, degree=8, seed=1)
        lo = generate_planted(3, 30, 2, 0.6, degree=8, seed=1)
        rows = compare_networks([("hi", hi), ("lo", lo)])
        assert rows[0]["acc_argmax"] >= rows[1]["acc_argmax"]

    def test_error_names_variant(self):
        net = make_net([("ZA", "u1", 1)], {"ZA": "A"}, {"u1": "A", "u2": "A"})
        with pytest.raises(DomainError, match=r"\[bad\]"):
            compare_networks([("bad", net)])

    def test_pipeline_modes(self, toy2):
        assert pipeline(toy2, discord_mode="exact").discord_mode == "exact"
        with pytest.raises(DomainError):
            pipeline(toy2, discord_mode="both")


class TestBaseline:
    def test_planted_p_in_one(self):
        net = generate_planted(2, 5, 1, 1.0)
        r = baseline_report(net, solve_equilibrium(net))
        assert r["excluded_share"] == 0
        assert r["x"]["acc_argmax"] == 1.0 and r["z"]["acc_argmax"] == 1.0

    def test_half_unexposed(self):
        net = make_net([("ZA", "u1", 1), ("ZB", "u2", 1), ("u1", "u3", 1), ("u2", "u4", 1)],
                       {"ZA": "A", "ZB": "B"}, {"u1": "A", "u2": "B", "u3": "A", "u4": "B"})
        r = baseline_report(net, solve_equilibrium(net))
        assert r["excluded_share"] == 0.5

    def test_toy2(self, toy2):
        x = solve_equilibrium(toy2)
        z = zealot_exposure(toy2)
        assert np.array_equal(z["u1"], [0.5, 0.0])
        r = zealot_baseline_compare(x, z, ground_truth(toy2, x.ids))
        assert r["z"]["acc_argmax"] == 1.0 and r["x"]["acc_argmax"] == 1.0

    def test_no_exposure(self):
        x = OpinionMatrix(AB, ("a",), np.array([[0.5, 0.5]]))
        with pytest.raises(DomainError):
            zealot_baseline_compare(x, OpinionMatrix(AB, ("a",), np.zeros((1, 2))), [0])
