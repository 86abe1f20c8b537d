import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedkan.aggregation import (
    ServerMomentumState,
    StrategyConfig,
    aggregate,
    aggregate_average,
    aggregate_median,
    aggregate_momentum,
    aggregate_nesterov,
    aggregate_trimmed_mean,
    fedprox_grad,
    fedprox_local_loss,
    fedprox_penalty,
    krum_scores,
    krum_select,
    trim_count,
)
from fedkan.numeric import ParamSet, ShapeError


def scalar(v):
    return ParamSet([("w", np.array([[float(v)]]))])


def vec(values):
    v = np.asarray(values, dtype=float)
    return ParamSet([("a", v[:2].reshape(1, 2)), ("b", v[2:].reshape(-1, 1))])


def random_clients(rng, k, dim=7):
    return [vec(rng.normal(size=dim)) for _ in range(k)]


def val(p):
    return float(p.flat()[0])


class TestAverage:
    def test_single_client_exact(self):
        c = vec(np.random.default_rng(0).normal(size=5))
        assert aggregate_average([c], [17]).equals(c)
        assert aggregate_average([c], weighted=False).equals(c)

    def test_symmetric_cancels(self):
        p = vec([1.5, -2, 3, 0.25])
        neg = p.map(lambda a: -a)
        assert np.all(aggregate_average([p, neg], [5, 5]).flat() == 0)

    def test_weighted_arithmetic(self):
        assert val(aggregate_average([scalar(0), scalar(4)], [1, 3])) == 3.0
        assert val(aggregate_average([scalar(0), scalar(4)], [1, 3], weighted=False)) == 2.0

    def test_incongruent(self):
        with pytest.raises(ShapeError):
            aggregate_average([scalar(1), vec([1, 2, 3])])

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate_average([])


class TestMedian:
    def test_odd(self):
        assert val(aggregate_median([scalar(5), scalar(1), scalar(3)])) == 3.0

    def test_even_midpoint(self):
        assert val(aggregate_median([scalar(3), scalar(1)])) == 2.0

    def test_sort_oracle(self):
        rng = np.random.default_rng(1)
        clients = random_clients(rng, 5)
        x = np.array([c.flat() for c in clients])
        expected = [sorted(x[:, j])[2] for j in range(7)]
        assert aggregate_median(clients).flat().tolist() == expected


class TestTrimmedMean:
    def test_extremes_trimmed(self):
        out = aggregate_trimmed_mean([scalar(v) for v in (0, 10, 10, 100)], beta=0.25)
        assert val(out) == 10.0

    def test_zero_trim_is_unweighted_mean(self):
        clients = random_clients(np.random.default_rng(2), 6)
        assert aggregate_trimmed_mean(clients, 0.0).equals(aggregate_average(clients, weighted=False))

    def test_slice_oracle(self):
        rng = np.random.default_rng(3)
        clients = random_clients(rng, 7)
        x = np.array([c.flat() for c in clients])
        t = trim_count(0.2, 7)
        assert t == 1
        expected = [np.mean(sorted(x[:, j])[t:7 - t]) for j in range(7)]
        np.testing.assert_allclose(aggregate_trimmed_mean(clients, 0.2).flat(), expected, rtol=1e-15)

    def test_default_trim_counts(self):
        assert [trim_count(0.2, k) for k in (3, 5, 10, 20)] == [0, 1, 2, 4]

    def test_over_trim_rejected(self):
        with pytest.raises(ValueError):
            aggregate_trimmed_mean([scalar(1), scalar(2), scalar(3), scalar(4)], 0.5)
        with pytest.raises(ValueError):
            StrategyConfig("trimmed_mean", trim_fraction=0.5)


class TestMomentum:
    def test_zero_velocity_is_average(self):
        clients = random_clients(np.random.default_rng(4), 3)
        g = vec(np.zeros(7))
        out, _ = aggregate_momentum(clients, g, ServerMomentumState(), 0.9, [1, 2, 3])
        assert out.equals(aggregate_average(clients, [1, 2, 3]))

    def test_mu_zero_every_round(self):
        rng = np.random.default_rng(5)
        g, state = vec(np.zeros(7)), ServerMomentumState()
        for _ in range(3):
            clients = random_clients(rng, 3)
            g, state = aggregate_momentum(clients, g, state, 0.0)
            assert g.equals(aggregate_average(clients))

    def test_two_rounds(self):
        w, state = scalar(0), ServerMomentumState()
        for _ in range(2):
            w, state = aggregate_momentum([scalar(val(w) + 1)], w, state, 0.9)
        assert val(w) == pytest.approx(2.9, abs=1e-15)

    def test_nesterov_first_round(self):
        w, state = aggregate_nesterov([scalar(1)], scalar(0), ServerMomentumState(), 0.9)
        assert val(w) == pytest.approx(1.9, abs=1e-15)
        assert val(state.velocity) == 1.0

    def test_nesterov_mu_zero(self):
        clients = random_clients(np.random.default_rng(6), 4)
        out, _ = aggregate_nesterov(clients, vec(np.ones(7)), ServerMomentumState(), 0.0)
        assert out.equals(aggregate_average(clients))

    @pytest.mark.parametrize("nesterov", [False, True])
    def test_scalar_recurrence(self, nesterov):
        mu, delta = 0.9, 0.5
        w_ref, v_ref = 1.0, 0.0
        w, state = scalar(1.0), ServerMomentumState()
        fn = aggregate_nesterov if nesterov else aggregate_momentum
        for _ in range(3):
            v_ref = mu * v_ref + delta
            w_ref = w_ref + (mu * v_ref + delta if nesterov else v_ref)
            w, state = fn([scalar(val(w) + delta)], w, state, mu)
            assert val(w) == pytest.approx(w_ref, rel=1e-14)
            assert val(state.velocity) == pytest.approx(v_ref, rel=1e-14)


class TestKrum:
    def test_cluster_example(self):
        pts = [(0, 0), (0.1, 0), (0, 0.1), (10, 10)]
        clients = [ParamSet([("w", np.array(p, dtype=float))]) for p in pts]
        scores = krum_scores(np.array(pts, dtype=float), 1)
        np.testing.assert_allclose(scores[:3], 0.01, rtol=1e-12)
        assert scores[3] >= 196
        idx, chosen = krum_select(clients, 1)
        assert idx == 0 and chosen.equals(clients[0])

    def test_identical_clients(self):
        c = vec([1, 2, 3, 4])
        idx, chosen = krum_select([c.copy() for _ in range(5)], 1)
        assert idx == 0 and chosen.equals(c)

    def test_brute_force_scores(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(6, 5))
        f = 1
        for i in range(6):
            best = min(
                sum(np.sum((x[i] - x[j]) ** 2) for j in subset)
                for subset in itertools.combinations([j for j in range(6) if j != i], 6 - f - 2)
            )
            assert krum_scores(x, f)[i] == pytest.approx(best, rel=1e-12)

    def test_too_few_clients(self):
        with pytest.raises(ValueError):
            krum_select([scalar(0), scalar(1), scalar(2)], 1)

    def test_default_f(self):
        cfg = StrategyConfig("krum")
        assert [cfg.krum_f_for(k) for k in (3, 5, 10, 20)] == [0, 1, 3, 8]

    def test_byzantine_never_selected(self):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            honest = rng.normal(size=(5, 6))
            bad = 100 * rng.normal(size=6)
            pos = int(rng.integers(0, 6))
            x = np.insert(honest, pos, bad, axis=0)
            idx, _ = krum_select([ParamSet([("w", r)]) for r in x], 1)
            assert idx != pos


class TestFedProx:
    def test_equal_weights_zero(self):
        w = vec([1, 2, 3, 4])
        assert fedprox_penalty(w, w.copy(), 0.5) == 0.0
        assert np.all(fedprox_grad(w, w.copy(), 0.5).flat() == 0)

    def test_arithmetic(self):
        assert fedprox_local_loss(1.0, scalar(2), scalar(0), 0.1) == pytest.approx(1.2, abs=1e-15)
        assert fedprox_penalty(scalar(2), scalar(0), 0.1) == pytest.approx(0.2, abs=1e-15)
        assert val(fedprox_grad(scalar(2), scalar(0), 0.1)) == pytest.approx(0.2, abs=1e-15)

    def test_server_side_is_average(self):
        clients = random_clients(np.random.default_rng(8), 3)
        out, _ = aggregate(StrategyConfig("fedprox"), clients, [3, 1, 2], vec(np.zeros(7)))
        assert out.equals(aggregate_average(clients, [3, 1, 2]))


class TestConfig:
    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="trimed_mean"):
            StrategyConfig("trimed_mean")

    def test_from_dict(self):
        cfg = StrategyConfig.from_dict({"kind": "momentum", "momentum_mu": 0.5})
        assert cfg.momentum_mu == 0.5
        with pytest.raises(ValueError):
            StrategyConfig.from_dict({"kind": "momentum", "mu": 0.5})

    @pytest.mark.parametrize("kw", [{"momentum_mu": 1.0}, {"krum_f": -1}, {"fedprox_mu": -0.1}])
    def test_ranges(self, kw):
        with pytest.raises(ValueError):
            StrategyConfig("average", **kw)


# K=1 identity for every strategy except Krum (needs K >= 3)
@pytest.mark.parametrize("kind", ["average", "median", "trimmed_mean", "momentum", "nesterov", "fedprox"])
def test_single_client_identity(kind):
    c = vec(np.random.default_rng(9).normal(size=6))
    mu = 0.0 if kind == "nesterov" else 0.9
    out, _ = aggregate(StrategyConfig(kind, momentum_mu=mu), [c], [11], vec(np.zeros(6)))
    assert out.equals(c)


@settings(max_examples=80, deadline=None)
@given(k=st.integers(1, 6), dim=st.integers(2, 12), seed=st.integers(0, 2**32 - 1))
def test_permutation_invariance_and_bounds(k, dim, seed):
    rng = np.random.default_rng(seed)
    clients = [vec(rng.normal(size=dim) * 10) for _ in range(k)]
    perm = [clients[i] for i in rng.permutation(k)]
    x = np.array([c.flat() for c in clients])
    lo, hi = x.min(axis=0), x.max(axis=0)
    for fn in (aggregate_median, lambda cs: aggregate_trimmed_mean(cs, 0.2),
               lambda cs: aggregate_average(cs, weighted=False)):
        a, b = fn(clients), fn(perm)
        assert a.equals(b)
        assert np.all((a.flat() >= lo) & (a.flat() <= hi))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.sampled_from([5, 7, 10]))
def test_trimmed_mean_robust_to_t_corruptions(seed, k):
    rng = np.random.default_rng(seed)
    beta = 0.2
    t = trim_count(beta, k)
    honest = rng.normal(size=(k - t, 4))
    bad = rng.choice([-1, 1], size=(t, 4)) * 1e6
    clients = [vec(r) for r in np.vstack([honest, bad])]
    out = aggregate_trimmed_mean(clients, beta).flat()
    assert np.all(out >= honest.min(axis=0)) and np.all(out <= honest.max(axis=0))
    med = aggregate_median(clients).flat()
    assert np.all(med >= honest.min(axis=0)) and np.all(med <= honest.max(axis=0))
