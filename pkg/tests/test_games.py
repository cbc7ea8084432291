from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from penalty_egta.data import Direction, Foot, KickDataset, KickRecord, Outcome
from penalty_egta.errors import EmptyDataset, InvalidSpec, SolverFailure
from penalty_egta.games import (
    NATURAL,
    NON_NATURAL,
    AbstractionKind,
    ActionAbstraction,
    CellCounts,
    EmpiricalGame,
    KeeperCenterPolicy,
    bootstrap_nash,
    build_empirical_game,
    classify_natural,
    game_from_payoff,
    sample_payoff_tables,
    shot_heatmap,
)
from penalty_egta.nash import solve_constant_sum
from penalty_egta.synthetic import SyntheticSpec, generate_synthetic_kicks

LCR = ActionAbstraction(AbstractionKind.LCR)


def rec(foot, shot, dive, outcome="Goal", kid="k"):
    return KickRecord(kid, "m", "L", "2020", "A", "G", Foot.parse(foot),
                      Direction.parse(shot), Direction.parse(dive), Outcome.parse(outcome))


@pytest.mark.parametrize(
    "foot,shot,dive,expected",
    [
        ("Right", "Right", "Right", (NATURAL, NATURAL)),
        ("Left", "Center", "Left", (NATURAL, NATURAL)),
        ("Left", "Right", "Right", (NON_NATURAL, NON_NATURAL)),
        ("Right", "Left", "Right", (NON_NATURAL, NATURAL)),
        ("Right", "Right", "Center", (NATURAL, NATURAL)),
    ],
)
def test_classify_natural(foot, shot, dive, expected):
    assert classify_natural(rec(foot, shot, dive)) == expected


def test_keeper_center_excluded_policy():
    k = rec("Right", "Left", "Center")
    assert classify_natural(k, KeeperCenterPolicy.CENTER_EXCLUDED) == (NON_NATURAL, None)
    abst = ActionAbstraction(keeper_center_policy="center-excluded")
    assert abst.cell(k) is None


@given(st.sampled_from(Foot), st.sampled_from(Direction), st.sampled_from(Direction))
def test_classification_invariant_under_mirroring(foot, shot, dive):
    other = Foot.LEFT if foot is Foot.RIGHT else Foot.RIGHT
    a = rec(foot.value, shot.value, dive.value)
    b = rec(other.value, shot.mirrored().value, dive.mirrored().value)
    assert classify_natural(a) == classify_natural(b)


def test_action_labels():
    assert ActionAbstraction().row_actions == ("N-S", "NN-S")
    assert ActionAbstraction().col_actions == ("N-G", "NN-G")
    assert LCR.row_actions == ("R-S", "C-S", "L-S")
    assert LCR.cell(rec("Left", "Left", "Right")) == (2, 0)


def test_all_scoring_gives_payoff_one():
    ds = KickDataset(tuple(rec("Right", "Right", "Left", kid=str(i)) for i in range(5)))
    g = build_empirical_game(ds)
    assert g.payoff[0, 1] == 1.0
    assert np.isnan(g.payoff[0, 0])
    assert not g.defined[1].any()


def test_seven_of_ten():
    kicks = [rec("Right", "Left", "Right", "Goal" if i < 7 else "Saved", kid=str(i)) for i in range(10)]
    g = build_empirical_game(KickDataset(tuple(kicks)))
    assert g.cell(1, 0) == CellCounts(7, 10)
    assert g.payoff[1, 0] == pytest.approx(0.7)


def test_empty_and_all_excluded():
    with pytest.raises(EmptyDataset):
        build_empirical_game(KickDataset())
    ds = KickDataset((rec("Right", "Left", "Center"),))
    with pytest.raises(EmptyDataset):
        build_empirical_game(ds, ActionAbstraction(keeper_center_policy="center-excluded"))


def test_complete_payoff_requires_all_cells():
    g = EmpiricalGame(("a", "b"), ("c", "d"), [[1, 0], [1, 1]], [[2, 0], [2, 2]])
    with pytest.raises(SolverFailure):
        g.complete_payoff()


def test_counts_validation():
    with pytest.raises(ValueError):
        CellCounts(3, 2)
    with pytest.raises(ValueError):
        EmpiricalGame(("a",), ("b",), [[2]], [[1]])


def test_dict_round_trip():
    g = EmpiricalGame(("a", "b"), ("c", "d"), [[1, 0], [3, 2]], [[2, 0], [5, 2]])
    h = EmpiricalGame.from_dict(g.to_dict())
    assert np.array_equal(h.successes, g.successes)
    assert np.array_equal(h.attempts, g.attempts)
    assert g.to_dict()["payoff"][0][1] is None


def test_empirical_profile():
    g = EmpiricalGame(("a", "b"), ("c", "d"), [[0, 0], [0, 0]], [[1, 3], [2, 4]])
    p = g.empirical_profile()
    assert np.allclose(p.row, [0.4, 0.6])
    assert np.allclose(p.col, [0.3, 0.7])


def test_synthetic_all_goals_and_determinism():
    spec = SyntheticSpec([[1, 1], [1, 1]], [[10, 10], [10, 10]])
    ds = generate_synthetic_kicks(spec, seed=3)
    assert all(k.scored for k in ds)
    assert generate_synthetic_kicks(spec, seed=3) == ds
    assert generate_synthetic_kicks(spec, seed=4) != ds


def test_synthetic_rate_close_to_generator():
    spec = SyntheticSpec([[0.7, 0.7], [0.7, 0.7]], [[2500] * 2] * 2)
    g = build_empirical_game(generate_synthetic_kicks(spec, seed=0))
    assert g.total == 10_000
    assert abs(g.successes.sum() / g.total - 0.7) < 0.02


def test_synthetic_attempts_reproduced_in_game():
    att = [[5, 7, 0], [1, 2, 3], [4, 0, 6]]
    spec = SyntheticSpec([[0.5] * 3] * 3, att, abstraction="lcr")
    g = build_empirical_game(generate_synthetic_kicks(spec, 1), LCR)
    assert g.attempts.tolist() == att


def test_synthetic_spec_validation():
    with pytest.raises(InvalidSpec):
        generate_synthetic_kicks(SyntheticSpec([[1.2, 0], [0, 0]], [[1, 1], [1, 1]]), 0)
    with pytest.raises(InvalidSpec):
        generate_synthetic_kicks(SyntheticSpec([[0.5] * 3] * 3, [[1, 1], [1, 1]]), 0)


def test_beta_sample_means():
    zero = sample_payoff_tables([[CellCounts(0, 0)]], 4000, seed=1)
    assert np.mean(zero) == pytest.approx(0.5, abs=0.02)
    seven = sample_payoff_tables([[CellCounts(7, 10)]], 4000, seed=1)
    assert np.mean(seven) == pytest.approx(8 / 12, abs=0.01)
    extreme = sample_payoff_tables([[CellCounts(10**6, 10**6), CellCounts(0, 10**6)]], 200, 0)
    arr = np.array(extreme)
    assert np.all((arr > 0) & (arr < 1))


def test_samples_depend_only_on_index():
    g = game_from_payoff([[0.6, 0.9], [0.9, 0.5]], "ab", "cd", attempts=20)
    short = sample_payoff_tables(g, 3, seed=9)
    long = sample_payoff_tables(g, 6, seed=9)
    for a, b in zip(short, long):
        assert np.array_equal(a, b)


def test_bootstrap_single_sample_equals_its_nash():
    g = game_from_payoff([[0.6, 0.9], [0.9, 0.5]], "ab", "cd", attempts=30)
    table = sample_payoff_tables(g, 1, seed=5)[0]
    expected, _ = solve_constant_sum(table)
    got = bootstrap_nash(g, n=1, seed=5)
    assert got.allclose(expected, atol=1e-12)


def test_bootstrap_thread_invariance_and_undefined_cells():
    g = EmpiricalGame(("a", "b"), ("c", "d"), [[3, 0], [5, 1]], [[4, 0], [9, 8]])
    one = bootstrap_nash(g, n=20, seed=2)
    many = bootstrap_nash(g, n=20, seed=2, threads=4)
    assert np.array_equal(one.row, many.row) and np.array_equal(one.col, many.col)
    with pytest.raises(ValueError):
        bootstrap_nash(g, n=0)


def test_heatmap_examples(rng):
    assert shot_heatmap([], 4, 3).counts.sum() == 0
    assert shot_heatmap([], 4, 3).counts.shape == (3, 4)
    five = shot_heatmap([(0.1, 0.9)] * 5, 2, 2)
    assert five.counts[1, 0] == 5 and five.total == 5
    pts = rng.random((10_000, 2))
    uniform = shot_heatmap(map(tuple, pts), 2, 2)
    assert np.all(np.abs(uniform.counts - 2500) < 125)
    with pytest.raises(InvalidSpec):
        shot_heatmap([(1.0, 0.5)])
    with pytest.raises(InvalidSpec):
        shot_heatmap([], 0, 1)


def test_heatmap_from_dataset_histogram():
    ds = KickDataset((rec("Right", "Left", "Right", kid="1"),
                      rec("Right", "Center", "Right", "Saved", kid="2")))
    h = shot_heatmap(ds)
    assert h.column_labels == ("Left", "Center", "Right")
    assert h.counts.tolist() == [[1, 1, 0]]
    assert shot_heatmap(ds, goals_only=True).counts.tolist() == [[1, 0, 0]]
    assert h.to_csv().splitlines() == ["Left,Center,Right", "1,1,0"]


@given(st.lists(st.tuples(st.sampled_from(Foot), st.sampled_from(Direction),
                          st.sampled_from(Direction), st.sampled_from(Outcome)),
                min_size=1, max_size=40))
def test_attempts_sum_to_dataset_size(rows):
    ds = KickDataset(tuple(
        KickRecord(str(i), "m", "L", "s", "A", "G", *r) for i, r in enumerate(rows)
    ))
    assert build_empirical_game(ds, LCR).total == len(ds)
    assert build_empirical_game(ds).total == len(ds)
    g = build_empirical_game(ds)
    assert g.successes.sum() == sum(r.scored for r in ds)
