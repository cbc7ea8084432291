from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from penalty_egta.clustering import (
    ClusterModel,
    cluster_conditioned_games,
    cluster_pair_report,
    cluster_stats,
    empirical_action_equality_test,
    kmeans,
    pca,
    remove_outliers,
    representative_player,
    select_k_by_inertia_drop,
)
from penalty_egta.data import Direction, Foot, KickDataset, KickRecord, Outcome, merge_datasets
from penalty_egta.errors import EmptyCluster, InvalidK, InvalidRange, MissingData
from penalty_egta.games import bootstrap_nash, build_empirical_game
from penalty_egta.synthetic import SyntheticSpec, generate_synthetic_kicks

_points = arrays(
    np.float64,
    st.tuples(st.integers(3, 25), st.integers(1, 4)),
    elements=st.floats(-100, 100, allow_nan=False),
)


def blobs(rng, n_per=15, sep=20.0):
    centers = np.array([[0, 0, 0], [sep, 0, 0], [0, sep, 0]], dtype=float)
    X = np.vstack([c + rng.normal(size=(n_per, 3)) for c in centers])
    return X, np.repeat(np.arange(3), n_per)


def same_partition(a, b):
    return len(set(zip(a.tolist(), b.tolist()))) == len(set(a.tolist())) == len(set(b.tolist()))


def manual_model(labels, ids, X=None, k=None):
    labels = np.asarray(labels)
    k = k if k is not None else int(labels.max()) + 1
    X = np.zeros((len(labels), 1)) if X is None else np.asarray(X, dtype=float)
    C = np.array([X[labels == c].mean(axis=0) if (labels == c).any() else X[0] for c in range(k)])
    return ClusterModel(k, C, labels, 0.0, (0.0,), tuple(ids))


def test_k_equals_n_gives_zero_inertia(rng):
    X = rng.random((6, 2))
    m = kmeans(X, 6, seed=1)
    assert m.inertia == pytest.approx(0.0, abs=1e-12)
    assert sorted(m.labels.tolist()) == list(range(6))


def test_blobs_recovered_and_deterministic(rng):
    X, truth = blobs(rng)
    m = kmeans(X, 3, seed=4, n_init=5)
    assert same_partition(m.labels, truth)
    again = kmeans(X, 3, seed=4, n_init=5)
    assert np.array_equal(again.labels, m.labels) and np.array_equal(again.centroids, m.centroids)


def test_kmeans_validation(rng):
    with pytest.raises(InvalidK):
        kmeans(rng.random((4, 2)), 5)
    with pytest.raises(InvalidK):
        kmeans(rng.random((4, 2)), 0)
    with pytest.raises(ValueError):
        kmeans(rng.random((4, 2)), 2, player_ids=["a"])


@given(_points, st.integers(1, 5), st.integers(0, 1000))
def test_kmeans_invariants(X, k, seed):
    k = min(k, X.shape[0])
    m = kmeans(X, k, seed=seed)
    trace = m.inertia_trace
    assert all(b <= a * (1 + 1e-12) + 1e-9 for a, b in zip(trace, trace[1:]))
    d2 = ((X[:, None, :] - m.centroids[None]) ** 2).sum(axis=2)
    own = d2[np.arange(len(X)), m.labels]
    assert np.all(own <= d2.min(axis=1) + 1e-9 * (1 + d2.min(axis=1)))
    assert m.inertia == pytest.approx(own.sum(), rel=1e-9, abs=1e-9)


def test_select_k_on_blobs(rng):
    X, _ = blobs(rng)
    k, curve = select_k_by_inertia_drop(X, range(1, 8), seed=0)
    assert k == 3
    assert list(curve) == list(range(1, 8))
    assert k == select_k_by_inertia_drop(X, range(1, 8), seed=0, threads=4)[0]


def test_select_k_identical_points():
    k, curve = select_k_by_inertia_drop(np.ones((8, 3)), range(2, 6))
    assert k == 2 and all(v == 0 for v in curve.values())


def test_select_k_range_validation(rng):
    X = rng.random((5, 2))
    with pytest.raises(InvalidRange):
        select_k_by_inertia_drop(X, [1, 2])
    with pytest.raises(InvalidRange):
        select_k_by_inertia_drop(X, [1, 2, 4])
    with pytest.raises(InvalidRange):
        select_k_by_inertia_drop(X, range(3, 7))


def test_pca_collinear(rng):
    X = np.outer(rng.normal(size=30), rng.normal(size=5)) + 3.0
    res = pca(X, 2)
    assert res.explained_ratio[0] == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(res.coords.mean(axis=0), 0, atol=1e-9)


def test_pca_isotropic(rng):
    res = pca(rng.normal(size=(10_000, 3)), 3)
    assert np.all(np.abs(res.explained_ratio - 1 / 3) < 1 / 30)


@given(_points, st.integers(1, 3))
def test_pca_contraction_and_centring(X, dims):
    dims = min(dims, X.shape[1])
    res = pca(X, dims)
    assert np.allclose(res.coords.mean(axis=0), 0, atol=1e-9 * (1 + np.abs(X).max()))
    orig = np.linalg.norm(X[:, None] - X[None], axis=2)
    proj = np.linalg.norm(res.coords[:, None] - res.coords[None], axis=2)
    assert np.all(proj <= orig + 1e-7 * (1 + orig))
    for c in res.components:
        assert c[np.argmax(np.abs(c))] > 0


def test_remove_outliers():
    X = np.array([[0.0], [0.1], [-0.1], [50.0]])
    Y, ids = remove_outliers(X, ["a", "b", "c", "d"], 1)
    assert ids == ("a", "b", "c") and Y.shape == (3, 1)
    assert remove_outliers(X, ["a", "b", "c", "d"], 0)[1] == ("a", "b", "c", "d")


def test_representative_player():
    X = np.array([[0.0], [2.0], [10.0], [1.05], [7.0]])
    m = manual_model([0, 0, 1, 0, 2], ["z", "y", "solo", "mid", "x"], X)
    assert representative_player(m, X, 1) == "solo"
    assert representative_player(m, X, 0) == "mid"
    pair = manual_model([0, 0], ["q", "b"], np.array([[0.0], [2.0]]))
    assert representative_player(pair, [[0.0], [2.0]], 0) == "b"
    with pytest.raises(EmptyCluster):
        representative_player(manual_model([0, 0], ["a", "b"], k=2), np.zeros((2, 1)), 1)


def _kicks(prefix, prob=0.8, per_cell=25, seed=0, n_kickers=10, left=0.5):
    spec = SyntheticSpec([[prob] * 2] * 2, [[per_cell] * 2] * 2, id_prefix=prefix,
                         n_kickers=n_kickers, left_foot_share=left)
    return generate_synthetic_kicks(spec, seed)


def _two_cluster_model(ds):
    ids = sorted({r.kicker_id for r in ds})
    return manual_model([0 if p.startswith("a") else 1 for p in ids], ids)


def test_cluster_stats_ratios_and_totals():
    ds = merge_datasets(_kicks("a", 0.8, seed=1), _kicks("b", 0.5, seed=2))
    model = _two_cluster_model(ds)
    stats = cluster_stats(model, ds)
    for row in stats.rows:
        assert row.success_rate == pytest.approx(100 * row.goals / row.shots)
    assert stats.total.shots == len(ds) == 200
    assert stats.total.goals == sum(r.scored for r in ds)
    assert stats.total.player_count == len(model.player_ids)
    assert stats.unassigned_shots == 0
    lines = stats.to_csv().splitlines()
    assert lines[0] == "cluster,players,goals,shots,success_rate_pct,left_foot_goal_pct"
    assert lines[-1].startswith("total,")


def test_cluster_stats_eighty_percent():
    kicks = tuple(
        KickRecord(f"k{i}", "m", "L", "s", "P", "G", Foot.LEFT if i < 2 else Foot.RIGHT,
                   Direction.LEFT, Direction.RIGHT, Outcome.GOAL if i < 8 else Outcome.SAVED)
        for i in range(10)
    )
    row = cluster_stats(manual_model([0], ["P"]), KickDataset(kicks)).rows[0]
    assert (row.goals, row.shots) == (8, 10)
    assert row.success_rate == 80.0 and row.left_foot_goal_share == 25.0


@settings(max_examples=20)
@given(st.integers(1, 4), st.integers(0, 100))
def test_cluster_stats_totals_independent_of_k(k, seed):
    ds = _kicks("a", 0.7, per_cell=10, seed=seed, n_kickers=8)
    ids = sorted({r.kicker_id for r in ds})
    labels = np.random.default_rng(seed).integers(k, size=len(ids))
    stats = cluster_stats(manual_model(labels, ids, k=k), ds)
    assert stats.total.shots == len(ds)
    assert stats.total.goals == sum(r.scored for r in ds)
    assert stats.total.left_foot_goals == sum(r.scored and r.kicker_foot.value == "Left" for r in ds)


def test_one_cluster_model_reproduces_all_players():
    ds = _kicks("a", 0.75, per_cell=40, seed=3)
    ids = sorted({r.kicker_id for r in ds})
    games = cluster_conditioned_games(manual_model([0] * len(ids), ids), ds, n_boot=10, seed=5)
    direct = bootstrap_nash(build_empirical_game(ds), 10, 5)
    for g in (games.all_players, games.clusters[0]):
        assert np.array_equal(g.game.attempts, build_empirical_game(ds).attempts)
        assert np.array_equal(g.nash.row, direct.row) and np.array_equal(g.nash.col, direct.col)
        assert g.shots == len(ds) and not g.low_sample


def test_cluster_without_kicks_and_low_sample():
    ds = _kicks("a", 0.75, per_cell=1, seed=3, n_kickers=1)
    ids = [ds.records[0].kicker_id, "nobody"]
    games = cluster_conditioned_games(manual_model([0, 1], ids), ds, n_boot=5)
    assert games.clusters[0].low_sample and games.clusters[0].shots == 4
    empty = games.clusters[1]
    assert empty.shots == 0 and empty.game is None and empty.nash is None
    assert games.to_dict()["clusters"][1]["game"] is None


def test_self_pair_report():
    ds = merge_datasets(_kicks("a", 0.7, seed=1), _kicks("b", 0.6, seed=2))
    model = _two_cluster_model(ds)
    rep = cluster_pair_report(model, ds, (0, 0), n_boot=5)
    assert rep.nash_jsd == 0 and rep.empirical_jsd == 0
    assert rep.min_cell_p == 1.0 and not rep.may_be_lower
    assert rep.left_foot_p == 1.0
    assert rep.min_cell_p_text() == "1.00e+00"
    eq = empirical_action_equality_test(model, ds, (1, 1))
    assert eq.kicker_p == eq.keeper_p == eq.min_p == 1.0
    with pytest.raises(EmptyCluster):
        cluster_pair_report(model, ds, (0, 5))


def test_pair_report_flags_missing_cells():
    a = _kicks("a", 0.7, seed=1)
    b = generate_synthetic_kicks(SyntheticSpec([[0.7] * 2] * 2, [[25, 0], [25, 25]], id_prefix="b"), 2)
    ds = merge_datasets(a, b)
    rep = cluster_pair_report(_two_cluster_model(ds), ds, (0, 1), n_boot=5)
    assert rep.may_be_lower and rep.min_cell_p_text().startswith("< ")


def test_pair_null_calibration():
    passes = 0
    runs = 100
    for seed in range(runs):
        ds = merge_datasets(_kicks("a", 0.75, 200, 2 * seed), _kicks("b", 0.75, 200, 2 * seed + 1))
        rep = cluster_pair_report(_two_cluster_model(ds), ds, (0, 1), n_boot=1, seed=seed)
        passes += rep.min_cell_p > 0.01
    assert passes >= 0.95 * runs


def test_action_equality_power():
    def natural_share(prefix, share, seed):
        n_nat = int(500 * share)
        counts = [[n_nat // 2, n_nat - n_nat // 2], [(500 - n_nat) // 2, 500 - n_nat - (500 - n_nat) // 2]]
        spec = SyntheticSpec([[0.7] * 2] * 2, counts, id_prefix=prefix)
        return generate_synthetic_kicks(spec, seed)

    ds = merge_datasets(natural_share("a", 0.5, 1), natural_share("b", 0.9, 2))
    res = empirical_action_equality_test(_two_cluster_model(ds), ds, (0, 1))
    assert res.kicker_p < 1e-3
    assert res.keeper_p > 1e-3


def test_action_equality_needs_kicks():
    ds = _kicks("a")
    ids = sorted({r.kicker_id for r in ds}) + ["zzz"]
    model = manual_model([0] * (len(ids) - 1) + [1], ids)
    with pytest.raises(MissingData):
        empirical_action_equality_test(model, ds, (0, 1))


def test_model_csv():
    m = manual_model([1, 0], ["p", "q"])
    assert m.to_csv() == "player_id,cluster\np,1\nq,0\n"
    assert m.assignments == {"p": 1, "q": 0} and m.members(0) == ["q"]
