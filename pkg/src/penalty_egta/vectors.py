"""Player Vectors: per-action-type spatial counts compressed with NMF.

Each action type gets a players x (60 * 40) count matrix, factorised as
``M ~ W @ H``; a player's segment for that type is its row of ``W``. The
segments are concatenated in Pass, Dribble, Shot, Cross order.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import ActionEvent, ActionType
from .errors import AllZeroMatrix, InvalidRank, MissingActionType
from .games import substream

SEGMENT_ORDER = (ActionType.PASS, ActionType.DRIBBLE, ActionType.SHOT, ActionType.CROSS)
DEFAULT_SEGMENT_SIZES: dict[ActionType, int] = {
    ActionType.PASS: 5,
    ActionType.DRIBBLE: 4,
    ActionType.SHOT: 4,
    ActionType.CROSS: 5,
}


@dataclass(frozen=True)
class GridSpec:
    width: int = 60
    height: int = 40

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    def cell(self, x: float, y: float) -> tuple[int, int]:
        return (
            min(int(x * self.width), self.width - 1),
            min(int(y * self.height), self.height - 1),
        )

    def index(self, x: float, y: float) -> int:
        cx, cy = self.cell(x, y)
        return cy * self.width + cx


@dataclass(frozen=True, eq=False)
class CountMatrix:
    players: tuple[str, ...]
    action_type: ActionType
    matrix: np.ndarray
    grid: GridSpec = GridSpec()

    def grid_of(self, player_id: str) -> np.ndarray:
        """The player's counts as a height x width array."""
        row = self.matrix[self.players.index(player_id)]
        return row.reshape(self.grid.height, self.grid.width)


def build_count_matrix(
    events: Iterable[ActionEvent],
    action_type: ActionType,
    grid: GridSpec = GridSpec(),
    players: Sequence[str] | None = None,
) -> CountMatrix:
    """Count ``action_type`` events per player and grid cell.

    Rows follow ``players`` when given (players without events get zero
    rows), otherwise the sorted ids of players with such events.
    """
    action_type = ActionType(action_type)
    events = [e for e in events if e.action_type is action_type]
    if players is None:
        players = sorted({e.player_id for e in events})
    players = tuple(players)
    row_of = {p: i for i, p in enumerate(players)}
    M = np.zeros((len(players), grid.n_cells), dtype=np.int64)
    for e in events:
        i = row_of.get(e.player_id)
        if i is not None:
            M[i, grid.index(e.x, e.y)] += 1
    return CountMatrix(players, action_type, M, grid)


@dataclass(frozen=True, eq=False)
class NmfModel:
    W: np.ndarray
    H: np.ndarray
    objective_trace: tuple[float, ...]

    @property
    def n_iter(self) -> int:
        return len(self.objective_trace) - 1

    def reconstruction(self) -> np.ndarray:
        return self.W @ self.H


def _safe_update(X: np.ndarray, num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = X.copy()
    mask = den > 0
    out[mask] = X[mask] * num[mask] / den[mask]
    return out


def nmf(
    M: CountMatrix | np.ndarray,
    k: int,
    seed: int = 0,
    max_iters: int = 500,
    rel_tol: float = 1e-4,
) -> NmfModel:
    """Lee–Seung multiplicative updates for ``min ||M - W H||_F``, W, H >= 0."""
    V = np.asarray(M.matrix if isinstance(M, CountMatrix) else M, dtype=float)
    if V.ndim != 2:
        raise ValueError("matrix must be 2-D")
    if np.any(V < 0):
        raise ValueError("matrix must be non-negative")
    n, m = V.shape
    if not 1 <= k <= min(n, m):
        raise InvalidRank(f"rank {k} not in [1, {min(n, m)}]")
    if not np.any(V > 0):
        raise AllZeroMatrix("matrix has no positive entry")

    rng = np.random.default_rng(seed)
    scale = np.sqrt(V.mean() / k)
    W = rng.random((n, k)) * scale
    H = rng.random((k, m)) * scale

    trace = [float(np.linalg.norm(V - W @ H))]
    for _ in range(max_iters):
        H = _safe_update(H, W.T @ V, (W.T @ W) @ H)
        W = _safe_update(W, V @ H.T, W @ (H @ H.T))
        err = float(np.linalg.norm(V - W @ H))
        prev = trace[-1]
        trace.append(err)
        if err == 0.0 or (prev - err) / prev < rel_tol:
            break
    return NmfModel(W, H, tuple(trace))


@dataclass(frozen=True)
class PlayerVector:
    player_id: str
    segments: dict[ActionType, np.ndarray]

    @property
    def concatenated(self) -> np.ndarray:
        return np.concatenate([self.segments[t] for t in SEGMENT_ORDER if t in self.segments])


@dataclass(frozen=True, eq=False)
class PlayerVectors:
    """Row ``i`` of ``matrix`` is the concatenated vector of ``players[i]``."""

    players: tuple[str, ...]
    segment_sizes: dict[ActionType, int]
    matrix: np.ndarray

    @property
    def columns(self) -> list[str]:
        return [
            f"{t.value.lower()}_{c}"
            for t in SEGMENT_ORDER
            for c in range(self.segment_sizes.get(t, 0))
        ]

    def __len__(self) -> int:
        return len(self.players)

    def vector(self, player_id: str) -> PlayerVector:
        row = self.matrix[self.players.index(player_id)]
        segments = {}
        start = 0
        for t in SEGMENT_ORDER:
            size = self.segment_sizes.get(t, 0)
            if size:
                segments[t] = row[start : start + size]
                start += size
        return PlayerVector(player_id, segments)

    def standardized(self) -> np.ndarray:
        return standardize(self.matrix)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["player_id", *self.columns])
        for pid, row in zip(self.players, self.matrix):
            writer.writerow([pid, *(repr(float(v)) for v in row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> PlayerVectors:
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], [r for r in rows[1:] if r]
        sizes: dict[ActionType, int] = {}
        for col in header[1:]:
            t = ActionType.parse(col.rsplit("_", 1)[0])
            sizes[t] = sizes.get(t, 0) + 1
        players = tuple(r[0] for r in body)
        matrix = np.array([[float(v) for v in r[1:]] for r in body], dtype=float)
        return cls(players, sizes, matrix.reshape(len(players), sum(sizes.values())))


def standardize(X: np.ndarray) -> np.ndarray:
    """Column-wise z-scores; constant columns map to 0."""
    X = np.asarray(X, dtype=float)
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    safe = np.where(sd > 0, sd, 1.0)
    return np.where(sd > 0, (X - mu) / safe, 0.0)


def assemble_player_vectors(
    events: Sequence[ActionEvent],
    segment_sizes: Mapping[ActionType, int] = DEFAULT_SEGMENT_SIZES,
    seed: int = 0,
    grid: GridSpec = GridSpec(),
    max_iters: int = 500,
    rel_tol: float = 1e-4,
    threads: int = 1,
) -> PlayerVectors:
    sizes = {ActionType(t): int(k) for t, k in segment_sizes.items()}
    if any(k < 1 for k in sizes.values()):
        raise InvalidRank("segment sizes must be positive")
    players = tuple(sorted({e.player_id for e in events}))
    present = {e.action_type for e in events}
    types = [t for t in SEGMENT_ORDER if t in sizes]
    for t in types:
        if t not in present:
            raise MissingActionType(t.value, list(players))

    def segment(t: ActionType) -> np.ndarray:
        counts = build_count_matrix(events, t, grid, players)
        type_seed = int(substream(seed, SEGMENT_ORDER.index(t)).integers(2**63))
        return nmf(counts, sizes[t], seed=type_seed, max_iters=max_iters, rel_tol=rel_tol).W

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(segment, types))
    else:
        blocks = [segment(t) for t in types]
    matrix = np.hstack(blocks) if blocks else np.zeros((len(players), 0))
    return PlayerVectors(players, {t: sizes[t] for t in types}, matrix)
