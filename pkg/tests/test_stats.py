from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

scipy_stats = pytest.importorskip("scipy.stats")
scipy_special = pytest.importorskip("scipy.special")

from penalty_egta.errors import DimensionMismatch, MissingData
from penalty_egta.games import CellCounts, build_empirical_game
from penalty_egta.nash import MixedProfile
from penalty_egta.stats import (
    betainc,
    footedness_p_table,
    format_percent,
    game_jsd,
    jsd,
    p_value_by_experience_band,
    p_value_vs_min_experience,
    t_cdf,
    t_sf_two_sided,
    welch_t_test,
)
from penalty_egta.synthetic import SyntheticSpec, generate_synthetic_kicks
from penalty_egta.data import Foot, merge_datasets
from reference_tables import (
    LCR_EMPIRICAL,
    LCR_NASH,
    ORIGINAL_EMPIRICAL,
    ORIGINAL_NASH,
)


def bernoulli(c: CellCounts) -> np.ndarray:
    return np.r_[np.ones(c.successes), np.zeros(c.attempts - c.successes)]


@pytest.mark.parametrize(
    "a,b,x",
    [(0.5, 0.5, 0.3), (2.0, 3.0, 0.9), (50.0, 0.5, 0.97), (0.1, 200.0, 1e-4), (1e3, 1e3, 0.51)],
)
def test_betainc_matches_scipy(a, b, x):
    assert betainc(a, b, x) == pytest.approx(scipy_special.betainc(a, b, x), abs=1e-12)


@pytest.mark.parametrize("t", [1e-9, 1e-6, 1e-3])
def test_two_sided_p_near_zero_t(t):
    # df / (df + t^2) rounds towards 1 here; the complement must not.
    assert t_sf_two_sided(t, 5.0) == pytest.approx(2 * scipy_stats.t.sf(t, 5.0), abs=1e-14)


def test_betainc_bounds_and_validation():
    assert betainc(2, 3, 0.0) == 0.0 and betainc(2, 3, 1.0) == 1.0
    with pytest.raises(ValueError):
        betainc(0, 1, 0.5)


@given(st.floats(-40, 40), st.floats(0.5, 1e4))
def test_t_distribution_against_scipy(t, df):
    assert t_cdf(t, df) == pytest.approx(scipy_stats.t.cdf(t, df), abs=1e-10)
    assert t_sf_two_sided(t, df) == pytest.approx(2 * scipy_stats.t.sf(abs(t), df), abs=1e-10)


def test_jsd_examples():
    assert jsd([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert jsd([1, 0], [0, 1]) == pytest.approx(math.log(2))
    assert jsd([0.393, 0.607], [0.423, 0.577]) == pytest.approx(0.000461, abs=2e-5)
    with pytest.raises(DimensionMismatch):
        jsd([1.0], [0.5, 0.5])


def test_game_jsd_reference_footers():
    nash = MixedProfile(*ORIGINAL_NASH)
    emp = MixedProfile(*ORIGINAL_EMPIRICAL)
    assert game_jsd(nash, nash) == 0.0
    assert game_jsd(nash, emp) == pytest.approx(0.00049, abs=5e-5)
    lcr = game_jsd(MixedProfile(*LCR_NASH), MixedProfile(*LCR_EMPIRICAL))
    assert lcr == pytest.approx(0.0075, abs=5e-4)
    with pytest.raises(DimensionMismatch):
        game_jsd(nash, MixedProfile(*LCR_NASH))


def test_jsd_matches_scipy_distance():
    p, q = [0.2, 0.5, 0.3], [0.6, 0.1, 0.3]
    assert jsd(p, q) == pytest.approx(scipy_stats.entropy(p, [0.4, 0.3, 0.3]) / 2
                                      + scipy_stats.entropy(q, [0.4, 0.3, 0.3]) / 2)


_dist = st.lists(st.floats(0, 1), min_size=3, max_size=3).filter(lambda v: sum(v) > 1e-3).map(
    lambda v: np.array(v) / sum(v)
)


@given(_dist, _dist)
def test_jsd_properties(p, q):
    d = jsd(p, q)
    assert 0.0 <= d <= math.log(2) + 1e-12
    assert d == pytest.approx(jsd(q, p), abs=1e-15)
    if d < 1e-15:
        assert np.allclose(p, q, atol=1e-6)


@given(_dist, _dist, _dist, _dist)
def test_game_jsd_symmetric(a, b, c, d):
    x, y = MixedProfile(a, b), MixedProfile(c, d)
    assert game_jsd(x, x) == 0.0
    assert game_jsd(x, y) == pytest.approx(game_jsd(y, x), abs=1e-15)


def test_format_percent():
    assert format_percent(0.00049) == "0.049%"
    assert format_percent(0.0123456) == "1.235%"


def test_welch_identical_groups():
    r = welch_t_test(CellCounts(30, 70), CellCounts(30, 70))
    assert r.t_statistic == 0 and r.p_value == 1.0


def test_welch_matches_scipy_oracle():
    a, b = CellCounts(50, 100), CellCounts(60, 100)
    r = welch_t_test(a, b)
    ref = scipy_stats.ttest_ind(bernoulli(a), bernoulli(b), equal_var=False)
    assert r.t_statistic == pytest.approx(ref.statistic, abs=1e-10)
    assert r.p_value == pytest.approx(ref.pvalue, abs=1e-6)
    pooled = welch_t_test(a, CellCounts(3, 17), pooled=True)
    ref = scipy_stats.ttest_ind(bernoulli(a), bernoulli(CellCounts(3, 17)), equal_var=True)
    assert pooled.p_value == pytest.approx(ref.pvalue, abs=1e-6)
    assert pooled.degrees_of_freedom == 115


def test_welch_undefined_cases():
    with pytest.raises(MissingData):
        welch_t_test(CellCounts(10, 10), CellCounts(5, 5))
    with pytest.raises(MissingData) as info:
        welch_t_test(CellCounts(1, 1), CellCounts(3, 5))
    assert info.value.group == "a"


_counts = st.integers(2, 200).flatmap(lambda n: st.builds(CellCounts, st.integers(0, n), st.just(n)))


# scipy warns about near-constant samples; its p-value is still the oracle.
@pytest.mark.filterwarnings("ignore::RuntimeWarning")
@given(_counts, _counts, st.booleans())
def test_welch_symmetry_and_oracle(a, b, pooled):
    try:
        r = welch_t_test(a, b, pooled)
    except MissingData:
        return
    s = welch_t_test(b, a, pooled)
    assert s.t_statistic == pytest.approx(-r.t_statistic)
    assert s.p_value == pytest.approx(r.p_value, abs=1e-12)
    ref = scipy_stats.ttest_ind(bernoulli(a), bernoulli(b), equal_var=pooled)
    assert r.p_value == pytest.approx(ref.pvalue, abs=1e-6)


def _footed(left_probs, right_probs, per_cell, seed, n_kickers=100, prefix=""):
    parts = []
    for k, (share, probs) in enumerate(((1.0, left_probs), (0.0, right_probs))):
        spec = SyntheticSpec(probs, [[per_cell] * 2] * 2, left_foot_share=share,
                             n_kickers=n_kickers, id_prefix=f"{prefix}{k}")
        parts.append(generate_synthetic_kicks(spec, seed * 2 + k))
    return merge_datasets(*parts)


def test_footedness_groups_and_power():
    base = [[0.6, 0.9], [0.9, 0.6]]
    strong = [[0.8, 0.9], [0.9, 0.6]]
    ds = _footed(base, strong, 1000, seed=1)
    table = footedness_p_table(ds)
    assert table.results[0][0].p_value < 0.001
    assert table.results[0][0].n_a == table.results[0][0].n_b == 1000
    assert table.n_records == len(ds) == 8000


def test_footedness_missing_cells_render():
    ds = generate_synthetic_kicks(SyntheticSpec([[0.5, 0.5], [0.5, 0.5]], [[10, 0], [10, 10]]), 0)
    table = footedness_p_table(ds)
    assert (0, 1) in table.missing
    p, may_be_lower = table.min_p()
    assert may_be_lower and (p is None or 0 <= p <= 1)
    assert "—" in table.to_csv()


def test_threshold_one_identity_and_monotone_sizes():
    spec = SyntheticSpec([[0.7, 0.9], [0.9, 0.6]], [[150] * 2] * 2, n_kickers=60, kicker_skew=1.2)
    ds = generate_synthetic_kicks(spec, 3)
    slices = p_value_vs_min_experience(ds, thresholds=(1, 3, 8, 20))
    base = footedness_p_table(ds)
    assert np.array_equal(slices[0].table.p_values, base.p_values, equal_nan=True)
    sizes = [s.n_records for s in slices]
    assert sizes == sorted(sizes, reverse=True)
    with pytest.raises(ValueError):
        p_value_vs_min_experience(ds, thresholds=(5, 1))


def test_bands_identity_partition_overlap():
    spec = SyntheticSpec([[0.7, 0.9], [0.9, 0.6]], [[150] * 2] * 2, n_kickers=60, kicker_skew=1.2)
    ds = generate_synthetic_kicks(spec, 3)
    everything, = p_value_by_experience_band(ds, bands=[(1, None)])
    assert everything.n_records == len(ds)
    assert np.array_equal(everything.table.p_values, footedness_p_table(ds).p_values, equal_nan=True)
    low, high = p_value_by_experience_band(ds, bands=[(1, 9), (10, None)])
    assert low.n_records + high.n_records == len(ds)
    a, b, mid = p_value_by_experience_band(ds, bands=[(1, 7), (5, 12), (5, 7)])
    assert a.n_records + b.n_records - mid.n_records == p_value_by_experience_band(
        ds, bands=[(1, 12)])[0].n_records


def test_p_value_rises_with_experience_threshold():
    # Novices (few kicks each) differ by foot; veterans (many kicks) do not.
    diff_l, diff_r = [[0.4, 0.9], [0.9, 0.6]], [[0.8, 0.9], [0.9, 0.6]]
    same = [[0.7, 0.9], [0.9, 0.6]]
    novices = _footed(diff_l, diff_r, 400, seed=5, n_kickers=800, prefix="n")
    veterans = _footed(same, same, 400, seed=6, n_kickers=10, prefix="v")
    ds = merge_datasets(novices, veterans)
    slices = p_value_vs_min_experience(ds, thresholds=(1, 20))
    assert slices[0].table.results[0][0].p_value < 1e-6
    assert slices[1].table.results[0][0].p_value > 0.01
    assert slices[1].n_records == len(veterans)
    assert {r.kicker_foot for r in veterans} == {Foot.LEFT, Foot.RIGHT}
    assert build_empirical_game(veterans).total == 3200
