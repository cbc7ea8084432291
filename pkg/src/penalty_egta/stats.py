"""Divergences and per-cell hypothesis tests on empirical games."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Foot, KickDataset, filter_by_appearance_band, filter_by_min_appearances
from .errors import DimensionMismatch, EmptyDataset, MissingData
from .games import ActionAbstraction, CellCounts, EmpiricalGame, build_empirical_game
from .nash import MixedProfile, as_strategy

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 100_000


# -- Student t distribution ---------------------------------------------------


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float, y: float | None = None) -> float:
    """Regularized incomplete beta function I_x(a, b).

    ``y`` may carry ``1 - x`` computed without cancellation; it matters
    when ``x`` is within rounding of 1.
    """
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if y is None:
        y = 1.0 - x
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log(y)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, y) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if t == 0.0:
        return 1.0
    t2 = t * t
    return betainc(0.5 * df, 0.5, df / (df + t2), t2 / (df + t2))


def t_cdf(t: float, df: float) -> float:
    tail = 0.5 * t_sf_two_sided(t, df)
    return 1.0 - tail if t > 0 else tail


# -- divergences ----------------------------------------------------------------


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def jsd(p, q) -> float:
    """Jensen–Shannon divergence in nats."""
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise DimensionMismatch(f"{p.size} vs {q.size} entries")
    p = as_strategy(p)
    q = as_strategy(q)
    m = 0.5 * (p + q)
    return max(0.0, 0.5 * _kl(p, m) + 0.5 * _kl(q, m))


def game_jsd(a: MixedProfile, b: MixedProfile) -> float:
    """Mean of the two players' Jensen–Shannon divergences (nats)."""
    if a.row.shape != b.row.shape or a.col.shape != b.col.shape:
        raise DimensionMismatch("profiles have different action counts")
    return 0.5 * (jsd(a.row, b.row) + jsd(a.col, b.col))


def format_percent(value: float, digits: int = 4) -> str:
    """``value`` as a percentage with ``digits`` significant digits."""
    return f"{value * 100:.{digits}g}%"


# -- t-tests on Bernoulli cells -------------------------------------------------


@dataclass(frozen=True)
class CellTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float
    n_a: int
    n_b: int

    def to_dict(self) -> dict:
        return {
            "t": self.t_statistic,
            "df": self.degrees_of_freedom,
            "p": self.p_value,
            "n_a": self.n_a,
            "n_b": self.n_b,
        }


def welch_t_test(a: CellCounts, b: CellCounts, pooled: bool = False) -> CellTestResult:
    """Two-sided t-test on the Bernoulli samples behind two success counts.

    Unequal variances (Welch–Satterthwaite df) unless ``pooled``.
    """
    for name, g in (("a", a), ("b", b)):
        if g.attempts < 2:
            raise MissingData(f"{g.attempts} attempts (need >= 2)", group=name)
    n1, n2 = a.attempts, b.attempts
    p1, p2 = a.successes / n1, b.successes / n2
    v1 = p1 * (1.0 - p1) * n1 / (n1 - 1)
    v2 = p2 * (1.0 - p2) * n2 / (n2 - 1)
    if pooled:
        sp2 = ((n1 - 1) * v1 + (n2 - 1) * v2) / (n1 + n2 - 2)
        se2 = sp2 * (1.0 / n1 + 1.0 / n2)
        df = float(n1 + n2 - 2)
    else:
        w1, w2 = v1 / n1, v2 / n2
        se2 = w1 + w2
        df = se2 * se2 / (w1 * w1 / (n1 - 1) + w2 * w2 / (n2 - 1)) if se2 > 0 else 0.0
    if se2 <= 0.0:
        raise MissingData("zero variance in both groups; t undefined")
    t = (p1 - p2) / math.sqrt(se2)
    return CellTestResult(t, df, t_sf_two_sided(t, df), n1, n2)


def _format_p(p: float) -> str:
    return f"{p:.6f}" if p >= 1e-6 else f"{p:.6e}"


@dataclass(frozen=True, eq=False)
class PValueTable:
    """Per-cell tests between two games sharing an action abstraction.

    ``results[i][j]`` is ``None`` where the test is undefined; the reason is
    kept in ``missing``.
    """

    row_actions: tuple[str, ...]
    col_actions: tuple[str, ...]
    results: tuple[tuple[CellTestResult | None, ...], ...]
    missing: dict[tuple[int, int], str]
    n_records: int = 0

    @property
    def p_values(self) -> np.ndarray:
        return np.array(
            [[np.nan if r is None else r.p_value for r in row] for row in self.results]
        )

    def min_p(self) -> tuple[float | None, bool]:
        """Smallest defined p-value and whether missing cells mean the true
        minimum may be lower."""
        defined = [r.p_value for row in self.results for r in row if r is not None]
        return (min(defined) if defined else None), bool(self.missing)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["", *self.col_actions])
        for label, row in zip(self.row_actions, self.results):
            writer.writerow([label, *("—" if r is None else _format_p(r.p_value) for r in row)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "row_actions": list(self.row_actions),
            "col_actions": list(self.col_actions),
            "n_records": self.n_records,
            "cells": [
                [
                    {"missing": self.missing[(i, j)]} if r is None else r.to_dict()
                    for j, r in enumerate(row)
                ]
                for i, row in enumerate(self.results)
            ],
        }


def _game_or_empty(ds: KickDataset, abstraction: ActionAbstraction) -> EmpiricalGame:
    try:
        return build_empirical_game(ds, abstraction)
    except EmptyDataset:
        k = abstraction.n_actions
        zeros = np.zeros((k, k), dtype=np.int64)
        return EmpiricalGame(abstraction.row_actions, abstraction.col_actions, zeros, zeros)


def compare_games(
    a: EmpiricalGame, b: EmpiricalGame, pooled: bool = False, n_records: int = 0
) -> PValueTable:
    """Cell-wise t-tests between games ``a`` and ``b``."""
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    rows = []
    missing: dict[tuple[int, int], str] = {}
    for i in range(a.shape[0]):
        row = []
        for j in range(a.shape[1]):
            try:
                row.append(welch_t_test(a.cell(i, j), b.cell(i, j), pooled=pooled))
            except MissingData as exc:
                row.append(None)
                missing[(i, j)] = str(exc)
        rows.append(tuple(row))
    return PValueTable(a.row_actions, a.col_actions, tuple(rows), missing, n_records)


def footedness_p_table(
    ds: KickDataset,
    abstraction: ActionAbstraction = ActionAbstraction(),
    pooled: bool = False,
) -> PValueTable:
    """Test, per cell, whether left- and right-footed kickers score at the
    same rate. Group ``a`` is left-footed, ``b`` right-footed."""
    left = ds.subset(lambda r: r.kicker_foot is Foot.LEFT)
    right = ds.subset(lambda r: r.kicker_foot is Foot.RIGHT)
    return compare_games(
        _game_or_empty(left, abstraction),
        _game_or_empty(right, abstraction),
        pooled=pooled,
        n_records=len(ds),
    )


@dataclass(frozen=True, eq=False)
class ExperienceSlice:
    label: str
    n_records: int
    table: PValueTable


def p_value_vs_min_experience(
    ds: KickDataset,
    abstraction: ActionAbstraction = ActionAbstraction(),
    thresholds: Sequence[int] = (1, 5, 10, 20, 30),
    pooled: bool = False,
) -> list[ExperienceSlice]:
    """Footedness p-values after keeping kickers with at least ``t`` kicks,
    for each threshold ``t``."""
    thresholds = list(thresholds)
    if any(t < 1 for t in thresholds):
        raise ValueError("thresholds must be >= 1")
    if thresholds != sorted(thresholds):
        raise ValueError("thresholds must be ascending")
    out = []
    for t in thresholds:
        sub = filter_by_min_appearances(ds, t, roles=("kicker",))
        out.append(ExperienceSlice(f">={t}", len(sub), footedness_p_table(sub, abstraction, pooled)))
    return out


def p_value_by_experience_band(
    ds: KickDataset,
    abstraction: ActionAbstraction = ActionAbstraction(),
    bands: Sequence[tuple[int, int | None]] = ((1, 7), (5, 12)),
    pooled: bool = False,
) -> list[ExperienceSlice]:
    """Footedness p-values for kickers whose kick count lies in each band.
    Bands are inclusive and may overlap; ``None`` as upper bound is open."""
    out = []
    for lo, hi in bands:
        sub = filter_by_appearance_band(ds, lo, hi, role="kicker")
        label = f"{lo}-{'' if hi is None else hi}"
        out.append(ExperienceSlice(label, len(sub), footedness_p_table(sub, abstraction, pooled)))
    return out
