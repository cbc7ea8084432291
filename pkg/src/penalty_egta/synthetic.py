"""Seeded synthetic kick and event data for tests, demos and the bundled
reference dataset."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import (
    ActionEvent,
    ActionType,
    Direction,
    Foot,
    KickDataset,
    KickRecord,
    Outcome,
    merge_datasets,
    write_action_events,
)
from .errors import InvalidSpec
from .games import AbstractionKind, natural_side

_LCR = (Direction.RIGHT, Direction.CENTER, Direction.LEFT)


@dataclass(frozen=True)
class SyntheticSpec:
    """Generating process for :func:`generate_synthetic_kicks`.

    ``success_prob[i][j]`` and ``attempts[i][j]`` are indexed like the game
    of ``abstraction`` (natural-first for NaturalNonNatural, R/C/L for
    LeftCenterRight). ``left_foot_share`` is the fraction of left-footed
    kickers in the pool.

    For the natural abstraction, ``kicker_center_share`` and
    ``keeper_center_share`` send that fraction of Natural actions to the
    centre instead of the natural side; success probabilities stay those of
    the Natural cell. ``kicker_skew`` > 0 draws kickers with weights
    ``rank ** -kicker_skew`` instead of uniformly, giving a spread of
    experience levels.
    """

    success_prob: Sequence[Sequence[float]]
    attempts: Sequence[Sequence[int]]
    abstraction: AbstractionKind = AbstractionKind.NATURAL
    left_foot_share: float = 0.5
    n_kickers: int = 100
    n_keepers: int = 100
    id_prefix: str = ""
    keeper_prefix: str = "G"
    league: str = "SYN"
    season: str = "2020"
    kicker_center_share: float = 0.0
    keeper_center_share: float = 0.0
    kicker_skew: float = 0.0

    def validate(self) -> tuple[np.ndarray, np.ndarray]:
        k = 2 if AbstractionKind(self.abstraction) is AbstractionKind.NATURAL else 3
        prob = np.asarray(self.success_prob, dtype=float)
        att = np.asarray(self.attempts)
        if prob.shape != (k, k) or att.shape != (k, k):
            raise InvalidSpec(f"expected {k}x{k} probabilities and attempts")
        if not np.all((prob >= 0) & (prob <= 1)):
            raise InvalidSpec("probabilities must lie in [0, 1]")
        if not np.all(att >= 0) or not np.all(np.equal(np.mod(att, 1), 0)):
            raise InvalidSpec("attempts must be non-negative integers")
        if not 0.0 <= self.left_foot_share <= 1.0:
            raise InvalidSpec("left_foot_share must lie in [0, 1]")
        for share in (self.kicker_center_share, self.keeper_center_share):
            if not 0.0 <= share <= 1.0:
                raise InvalidSpec("centre shares must lie in [0, 1]")
        if self.kicker_skew < 0:
            raise InvalidSpec("kicker_skew must be >= 0")
        if self.n_kickers < 1 or self.n_keepers < 1:
            raise InvalidSpec("player pools must be non-empty")
        return prob, att.astype(np.int64)


def _opposite(d: Direction) -> Direction:
    return d.mirrored()


def generate_synthetic_kicks(spec: SyntheticSpec, seed: int) -> KickDataset:
    prob, att = spec.validate()
    rng = np.random.default_rng(seed)
    kind = AbstractionKind(spec.abstraction)

    n_left = int(round(spec.left_foot_share * spec.n_kickers))
    feet = [Foot.LEFT] * n_left + [Foot.RIGHT] * (spec.n_kickers - n_left)
    feet = [feet[i] for i in rng.permutation(spec.n_kickers)]

    cells = [(i, j) for i in range(att.shape[0]) for j in range(att.shape[1])]
    cell_of_kick = np.repeat(np.arange(len(cells)), [att[c] for c in cells])
    cell_of_kick = cell_of_kick[rng.permutation(cell_of_kick.size)]
    n = cell_of_kick.size
    if spec.kicker_skew > 0:
        w = np.arange(1, spec.n_kickers + 1, dtype=float) ** -spec.kicker_skew
        kickers = rng.choice(spec.n_kickers, size=n, p=w / w.sum())
    else:
        kickers = rng.integers(spec.n_kickers, size=n)
    keepers = rng.integers(spec.n_keepers, size=n)
    u = rng.random(n)
    centre = spec.kicker_center_share > 0 or spec.keeper_center_share > 0
    uc = rng.random((n, 2)) if centre else np.ones((n, 2))

    records = []
    for idx in range(n):
        i, j = cells[cell_of_kick[idx]]
        foot = feet[kickers[idx]]
        if kind is AbstractionKind.NATURAL:
            side = natural_side(foot)
            shot = side if i == 0 else _opposite(side)
            dive = side if j == 0 else _opposite(side)
            if i == 0 and uc[idx, 0] < spec.kicker_center_share:
                shot = Direction.CENTER
            if j == 0 and uc[idx, 1] < spec.keeper_center_share:
                dive = Direction.CENTER
        else:
            shot, dive = _LCR[i], _LCR[j]
        if u[idx] < prob[i, j]:
            outcome = Outcome.GOAL
        else:
            outcome = Outcome.SAVED if shot is dive else Outcome.MISSED
        records.append(
            KickRecord(
                kick_id=f"{spec.id_prefix}k{idx:06d}",
                match_id=f"{spec.id_prefix}m{idx // 8:05d}",
                league=spec.league,
                season=spec.season,
                kicker_id=f"{spec.id_prefix}K{kickers[idx]:04d}",
                keeper_id=f"{spec.keeper_prefix}{keepers[idx]:04d}",
                kicker_foot=foot,
                shot_direction=shot,
                keeper_action=dive,
                outcome=outcome,
            )
        )
    return KickDataset(tuple(records))


# -- action events ----------------------------------------------------------------

# Per-style mean location (x, y) and relative frequency of each action type.
@dataclass(frozen=True)
class EventStyle:
    centers: dict[ActionType, tuple[float, float]]
    weights: dict[ActionType, float]
    spread: float = 0.06


DEFAULT_STYLES: tuple[EventStyle, ...] = (
    EventStyle(  # central striker
        centers={
            ActionType.PASS: (0.70, 0.50),
            ActionType.DRIBBLE: (0.80, 0.50),
            ActionType.SHOT: (0.90, 0.50),
            ActionType.CROSS: (0.80, 0.50),
        },
        weights={ActionType.PASS: 4, ActionType.DRIBBLE: 3, ActionType.SHOT: 3, ActionType.CROSS: 0.3},
    ),
    EventStyle(  # left winger
        centers={
            ActionType.PASS: (0.65, 0.15),
            ActionType.DRIBBLE: (0.75, 0.10),
            ActionType.SHOT: (0.85, 0.35),
            ActionType.CROSS: (0.88, 0.08),
        },
        weights={ActionType.PASS: 4, ActionType.DRIBBLE: 3, ActionType.SHOT: 1, ActionType.CROSS: 3},
    ),
    EventStyle(  # right winger
        centers={
            ActionType.PASS: (0.65, 0.85),
            ActionType.DRIBBLE: (0.75, 0.90),
            ActionType.SHOT: (0.85, 0.65),
            ActionType.CROSS: (0.88, 0.92),
        },
        weights={ActionType.PASS: 4, ActionType.DRIBBLE: 3, ActionType.SHOT: 1, ActionType.CROSS: 3},
    ),
    EventStyle(  # deep playmaker
        centers={
            ActionType.PASS: (0.40, 0.50),
            ActionType.DRIBBLE: (0.45, 0.50),
            ActionType.SHOT: (0.75, 0.50),
            ActionType.CROSS: (0.60, 0.30),
        },
        weights={ActionType.PASS: 8, ActionType.DRIBBLE: 1.5, ActionType.SHOT: 0.5, ActionType.CROSS: 0.5},
    ),
    EventStyle(  # goalkeeper
        centers={
            ActionType.PASS: (0.06, 0.50),
            ActionType.DRIBBLE: (0.06, 0.50),
            ActionType.SHOT: (0.50, 0.50),
            ActionType.CROSS: (0.50, 0.50),
        },
        weights={ActionType.PASS: 1, ActionType.DRIBBLE: 0, ActionType.SHOT: 0, ActionType.CROSS: 0},
        spread=0.03,
    ),
)


def generate_synthetic_events(
    player_styles: dict[str, int],
    seed: int,
    events_per_player: int = 80,
    styles: Sequence[EventStyle] = DEFAULT_STYLES,
) -> list[ActionEvent]:
    """Events for each player drawn around their style's action centres.

    Players are processed in sorted id order so output depends only on the
    mapping and ``seed``.
    """
    rng = np.random.default_rng(seed)
    order = list(ActionType)
    events: list[ActionEvent] = []
    for pid in sorted(player_styles):
        style = styles[player_styles[pid]]
        w = np.array([style.weights.get(t, 0.0) for t in order], dtype=float)
        if w.sum() <= 0:
            continue
        kinds = rng.choice(len(order), size=events_per_player, p=w / w.sum())
        for k in kinds:
            t = order[k]
            cx, cy = style.centers[t]
            x, y = rng.normal((cx, cy), style.spread)
            # 6 decimals keeps the CSV round trip exact.
            x = min(max(round(float(x), 6), 0.0), 0.999999)
            y = min(max(round(float(y), 6), 0.0), 0.999999)
            events.append(ActionEvent(pid, t, x, y))
    return events


# -- bundled reference dataset ------------------------------------------------------

# Kicker archetypes: (natural-game success probabilities, left-foot share).
BUNDLED_SEED = 2024
BUNDLED_STYLE_GAMES: tuple[tuple[tuple[tuple[float, float], tuple[float, float]], float], ...] = (
    (((0.45, 0.98), (0.97, 0.30)), 0.20),
    (((0.50, 0.97), (0.96, 0.28)), 0.60),
    (((0.42, 0.99), (0.98, 0.33)), 0.25),
    (((0.47, 0.97), (0.97, 0.29)), 0.15),
)
BUNDLED_ATTEMPTS = ((396, 302), (313, 239))  # per style; 4 x 1250 = 5000 kicks
BUNDLED_KICKERS_PER_STYLE = 25
BUNDLED_KEEPERS = 60
BUNDLED_KICKER_SKEW = 1.6
BUNDLED_CENTER_SHARES = (0.15, 0.10)  # kicker, keeper
BUNDLED_EVENTS_PER_PLAYER = 200


@dataclass(frozen=True)
class BundledData:
    kicks: KickDataset
    events: list[ActionEvent]
    player_styles: dict[str, int] = field(default_factory=dict)

    def true_payoff(self) -> np.ndarray:
        return bundled_true_payoff()


def bundled_true_payoff() -> np.ndarray:
    """Attempt-weighted generating probabilities of the pooled natural game.

    Every style uses the same attempts table, so this is the plain mean of
    the style tables.
    """
    att = np.asarray(BUNDLED_ATTEMPTS, dtype=float)
    num = sum(np.asarray(p) * att for p, _ in BUNDLED_STYLE_GAMES)
    return num / (att * len(BUNDLED_STYLE_GAMES))


def bundled_data(seed: int = BUNDLED_SEED) -> BundledData:
    """The 5,000-kick reference dataset and matching action events."""
    parts = []
    styles: dict[str, int] = {}
    for s, (prob, left_share) in enumerate(BUNDLED_STYLE_GAMES):
        spec = SyntheticSpec(
            success_prob=prob,
            attempts=BUNDLED_ATTEMPTS,
            left_foot_share=left_share,
            n_kickers=BUNDLED_KICKERS_PER_STYLE,
            n_keepers=BUNDLED_KEEPERS,
            id_prefix=f"S{s}",
            kicker_center_share=BUNDLED_CENTER_SHARES[0],
            keeper_center_share=BUNDLED_CENTER_SHARES[1],
            kicker_skew=BUNDLED_KICKER_SKEW,
        )
        parts.append(generate_synthetic_kicks(spec, seed + s))
        for i in range(BUNDLED_KICKERS_PER_STYLE):
            styles[f"S{s}K{i:04d}"] = s
    for g in range(BUNDLED_KEEPERS):
        styles[f"G{g:04d}"] = len(DEFAULT_STYLES) - 1
    kicks = merge_datasets(*parts)
    events = generate_synthetic_events(styles, seed + 100, BUNDLED_EVENTS_PER_PLAYER)
    return BundledData(kicks, events, styles)


BUNDLED_KICKS_FILE = "bundled_kicks.csv"
BUNDLED_EVENTS_FILE = "bundled_events.csv"


def bundled_paths() -> tuple[Path, Path]:
    """Locations of the shipped kicks and events CSV files."""
    root = Path(__file__).resolve().parent / "data"
    return root / BUNDLED_KICKS_FILE, root / BUNDLED_EVENTS_FILE


def bundled_csv_text(seed: int = BUNDLED_SEED) -> tuple[str, str]:
    """CSV text of :func:`bundled_data`, exactly as shipped."""
    data = bundled_data(seed)
    events = io.StringIO()
    write_action_events(data.events, events)
    return data.kicks.to_csv(), events.getvalue()
