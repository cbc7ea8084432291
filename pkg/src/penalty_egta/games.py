"""Empirical constant-sum games synthesised from penalty-kick records."""

from __future__ import annotations

import io
import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .data import Direction, Foot, KickDataset, KickRecord
from .errors import EmptyDataset, InvalidSpec, SolverFailure
from .nash import MixedProfile, solve_constant_sum

NATURAL = "Natural"
NON_NATURAL = "NonNatural"


class AbstractionKind(str, Enum):
    NATURAL = "natural"
    LCR = "lcr"


class KeeperCenterPolicy(str, Enum):
    CENTER_IS_NATURAL = "center-is-natural"
    CENTER_EXCLUDED = "center-excluded"


# Row/column orders: natural first; R, C, L.
_LCR_ORDER = (Direction.RIGHT, Direction.CENTER, Direction.LEFT)
_LCR_CODE = {Direction.RIGHT: "R", Direction.CENTER: "C", Direction.LEFT: "L"}


@dataclass(frozen=True)
class ActionAbstraction:
    kind: AbstractionKind = AbstractionKind.NATURAL
    keeper_center_policy: KeeperCenterPolicy = KeeperCenterPolicy.CENTER_IS_NATURAL

    def __post_init__(self):
        object.__setattr__(self, "kind", AbstractionKind(self.kind))
        object.__setattr__(
            self, "keeper_center_policy", KeeperCenterPolicy(self.keeper_center_policy)
        )

    @property
    def n_actions(self) -> int:
        return 2 if self.kind is AbstractionKind.NATURAL else 3

    @property
    def row_actions(self) -> tuple[str, ...]:
        if self.kind is AbstractionKind.NATURAL:
            return ("N-S", "NN-S")
        return tuple(f"{_LCR_CODE[d]}-S" for d in _LCR_ORDER)

    @property
    def col_actions(self) -> tuple[str, ...]:
        if self.kind is AbstractionKind.NATURAL:
            return ("N-G", "NN-G")
        return tuple(f"{_LCR_CODE[d]}-G" for d in _LCR_ORDER)

    def cell(self, kick: KickRecord) -> tuple[int, int] | None:
        """Row/column index of ``kick``, or ``None`` when it is excluded."""
        if self.kind is AbstractionKind.LCR:
            return _LCR_ORDER.index(kick.shot_direction), _LCR_ORDER.index(
                kick.keeper_action
            )
        shot, dive = classify_natural(kick, self.keeper_center_policy)
        if dive is None:
            return None
        return (0 if shot == NATURAL else 1), (0 if dive == NATURAL else 1)


def natural_side(foot: Foot) -> Direction:
    """Natural side for a kicker with ``foot``, in the goalkeeper's frame."""
    return Direction.RIGHT if foot is Foot.RIGHT else Direction.LEFT


def classify_natural(
    kick: KickRecord,
    policy: KeeperCenterPolicy = KeeperCenterPolicy.CENTER_IS_NATURAL,
) -> tuple[str, str | None]:
    """Label the kicker's and keeper's actions as Natural / NonNatural.

    A right-footed kicker's natural side is the keeper's right; the keeper's
    natural side mirrors the kicker's. Center shots count as natural. A
    keeper staying in the center is natural or excluded (``None``) depending
    on ``policy``.
    """
    side = natural_side(kick.kicker_foot)
    shot = kick.shot_direction
    kicker = NATURAL if shot in (side, Direction.CENTER) else NON_NATURAL

    dive = kick.keeper_action
    if dive is Direction.CENTER:
        if KeeperCenterPolicy(policy) is KeeperCenterPolicy.CENTER_EXCLUDED:
            return kicker, None
        keeper = NATURAL
    else:
        keeper = NATURAL if dive is side else NON_NATURAL
    return kicker, keeper


@dataclass(frozen=True)
class CellCounts:
    successes: int
    attempts: int

    def __post_init__(self):
        if self.attempts < 0 or self.successes < 0 or self.successes > self.attempts:
            raise ValueError(f"invalid cell counts {self.successes}/{self.attempts}")

    @property
    def rate(self) -> float:
        return self.successes / self.attempts if self.attempts else float("nan")


@dataclass(frozen=True, eq=False)
class EmpiricalGame:
    """Success/attempt counts per (kicker action, keeper action) cell.

    ``payoff`` is the kicker's scoring rate; the keeper receives one minus it.
    Cells with zero attempts are undefined and hold NaN.
    """

    row_actions: tuple[str, ...]
    col_actions: tuple[str, ...]
    successes: np.ndarray
    attempts: np.ndarray
    constant_sum: float = 1.0

    def __post_init__(self):
        s = np.asarray(self.successes, dtype=np.int64)
        a = np.asarray(self.attempts, dtype=np.int64)
        shape = (len(self.row_actions), len(self.col_actions))
        if s.shape != shape or a.shape != shape:
            raise ValueError(f"count matrices must be {shape}")
        if np.any(s < 0) or np.any(s > a):
            raise ValueError("need 0 <= successes <= attempts in every cell")
        s.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "row_actions", tuple(self.row_actions))
        object.__setattr__(self, "col_actions", tuple(self.col_actions))
        object.__setattr__(self, "successes", s)
        object.__setattr__(self, "attempts", a)

    @property
    def shape(self) -> tuple[int, int]:
        return self.attempts.shape

    @property
    def defined(self) -> np.ndarray:
        return self.attempts > 0

    @property
    def payoff(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.defined, self.successes / self.attempts, np.nan)

    @property
    def total(self) -> int:
        return int(self.attempts.sum())

    def cell(self, i: int, j: int) -> CellCounts:
        return CellCounts(int(self.successes[i, j]), int(self.attempts[i, j]))

    def counts(self) -> list[list[CellCounts]]:
        m, n = self.shape
        return [[self.cell(i, j) for j in range(n)] for i in range(m)]

    def complete_payoff(self) -> np.ndarray:
        if not self.defined.all():
            raise SolverFailure("payoff table has undefined cells")
        return self.payoff

    def empirical_profile(self) -> MixedProfile:
        """Marginal action frequencies of both players."""
        if self.total == 0:
            raise EmptyDataset("game has no attempts")
        a = self.attempts.astype(float)
        return MixedProfile(a.sum(axis=1) / a.sum(), a.sum(axis=0) / a.sum())

    def to_dict(self) -> dict:
        payoff = self.payoff
        m, n = self.shape
        return {
            "row_actions": list(self.row_actions),
            "col_actions": list(self.col_actions),
            "counts": [
                [
                    {"s": int(self.successes[i, j]), "a": int(self.attempts[i, j])}
                    for j in range(n)
                ]
                for i in range(m)
            ],
            "payoff": [
                [None if np.isnan(payoff[i, j]) else float(payoff[i, j]) for j in range(n)]
                for i in range(m)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> EmpiricalGame:
        s = [[c["s"] for c in row] for row in d["counts"]]
        a = [[c["a"] for c in row] for row in d["counts"]]
        return cls(tuple(d["row_actions"]), tuple(d["col_actions"]), s, a)


def build_empirical_game(
    ds: KickDataset, abstraction: ActionAbstraction = ActionAbstraction()
) -> EmpiricalGame:
    k = abstraction.n_actions
    successes = np.zeros((k, k), dtype=np.int64)
    attempts = np.zeros((k, k), dtype=np.int64)
    for kick in ds.records:
        cell = abstraction.cell(kick)
        if cell is None:
            continue
        attempts[cell] += 1
        if kick.scored:
            successes[cell] += 1
    if attempts.sum() == 0:
        raise EmptyDataset("no kicks left after applying the action abstraction")
    return EmpiricalGame(abstraction.row_actions, abstraction.col_actions, successes, attempts)


def _count_arrays(counts) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(counts, EmpiricalGame):
        return counts.successes, counts.attempts
    s = np.array([[c.successes for c in row] for row in counts], dtype=np.int64)
    a = np.array([[c.attempts for c in row] for row in counts], dtype=np.int64)
    return s, a


def substream(seed: int, index: int) -> np.random.Generator:
    """Generator for task ``index`` under master ``seed``; independent of
    the order in which tasks are evaluated."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


_OPEN_LO = np.nextafter(0.0, 1.0)
_OPEN_HI = np.nextafter(1.0, 0.0)


def _sample_table(s: np.ndarray, a: np.ndarray, seed: int, index: int) -> np.ndarray:
    rng = substream(seed, index)
    draw = rng.beta(1.0 + s, 1.0 + a - s)
    return np.clip(draw, _OPEN_LO, _OPEN_HI)


def sample_payoff_tables(counts, n: int, seed: int) -> list[np.ndarray]:
    """Draw ``n`` payoff tables, each cell from Beta(1 + successes, 1 + failures)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    s, a = _count_arrays(counts)
    return [_sample_table(s, a, seed, i) for i in range(n)]


def bootstrap_nash(
    game: EmpiricalGame, n: int = 50, seed: int = 0, threads: int = 1
) -> MixedProfile:
    """Mean equilibrium over ``n`` Beta-posterior payoff tables.

    Sample ``i`` always uses sub-stream ``(seed, i)`` and profiles are summed
    in index order, so the result does not depend on ``threads``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    s, a = game.successes, game.attempts

    def solve(i: int) -> MixedProfile:
        table = _sample_table(s, a, seed, i)
        try:
            return solve_constant_sum(table, game.constant_sum)[0]
        except SolverFailure as exc:
            raise SolverFailure(f"bootstrap sample {i}: {exc}") from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            profiles = list(pool.map(solve, range(n)))
    else:
        profiles = [solve(i) for i in range(n)]

    row = np.zeros(game.shape[0])
    col = np.zeros(game.shape[1])
    for p in profiles:
        row += p.row
        col += p.col
    return MixedProfile(row / row.sum(), col / col.sum())


@dataclass(frozen=True, eq=False)
class HeatmapGrid:
    width: int
    height: int
    counts: np.ndarray
    column_labels: tuple[str, ...] = field(default=())

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if self.column_labels:
            writer.writerow(self.column_labels)
        for row in self.counts:
            writer.writerow([int(v) for v in row])
        return buf.getvalue()


_HISTOGRAM_ORDER = (Direction.LEFT, Direction.CENTER, Direction.RIGHT)


def shot_heatmap(
    source: KickDataset | Iterable[tuple[float, float]],
    width: int = 3,
    height: int = 1,
    goals_only: bool = False,
) -> HeatmapGrid:
    """Bin shots over the goal mouth.

    ``source`` is either an iterable of normalised ``(x, y)`` goal-mouth
    coordinates in [0, 1), binned on a ``width`` x ``height`` grid, or a
    :class:`KickDataset`. Kick records carry no coordinates, so datasets fall
    back to a Left / Center / Right histogram (goalkeeper frame).
    """
    if width < 1 or height < 1:
        raise InvalidSpec("grid dimensions must be >= 1")
    if isinstance(source, KickDataset):
        counts = np.zeros((1, 3), dtype=np.int64)
        for kick in source.records:
            if goals_only and not kick.scored:
                continue
            counts[0, _HISTOGRAM_ORDER.index(kick.shot_direction)] += 1
        return HeatmapGrid(3, 1, counts, tuple(d.value for d in _HISTOGRAM_ORDER))

    counts = np.zeros((height, width), dtype=np.int64)
    for x, y in source:
        if not (0.0 <= x < 1.0 and 0.0 <= y < 1.0):
            raise InvalidSpec(f"coordinate ({x}, {y}) outside [0, 1)")
        counts[min(int(y * height), height - 1), min(int(x * width), width - 1)] += 1
    return HeatmapGrid(width, height, counts)


def game_from_payoff(
    payoff: Sequence[Sequence[float]],
    row_actions: Sequence[str],
    col_actions: Sequence[str],
    attempts: int = 10**6,
) -> EmpiricalGame:
    """An empirical game whose cells reproduce ``payoff`` at ``attempts``
    kicks per cell (rounded to whole successes)."""
    P = np.asarray(payoff, dtype=float)
    a = np.full(P.shape, attempts, dtype=np.int64)
    s = np.rint(P * attempts).astype(np.int64)
    return EmpiricalGame(tuple(row_actions), tuple(col_actions), s, a)
