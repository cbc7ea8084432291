"""K-means over Player Vectors and cluster-conditioned penalty games."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Foot, KickDataset
from .errors import EmptyCluster, InvalidK, InvalidRange, MissingData
from .games import (
    ActionAbstraction,
    CellCounts,
    EmpiricalGame,
    bootstrap_nash,
    build_empirical_game,
    substream,
)
from .nash import MixedProfile
from .stats import compare_games, game_jsd, welch_t_test

TIE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ClusterModel:
    k: int
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    inertia_trace: tuple[float, ...]
    player_ids: tuple[str, ...]

    @property
    def assignments(self) -> dict[str, int]:
        return {p: int(c) for p, c in zip(self.player_ids, self.labels)}

    def members(self, cluster: int) -> list[str]:
        return [p for p, c in zip(self.player_ids, self.labels) if c == cluster]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["player_id", "cluster"])
        for p, c in zip(self.player_ids, self.labels):
            writer.writerow([p, int(c)])
        return buf.getvalue()


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _assign(X: np.ndarray, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = _sq_dists(X, C)
    labels = d.argmin(axis=1)
    return labels, d[np.arange(X.shape[0]), labels]


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        chosen.append(idx)
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return X[chosen].copy()


def _lloyd(X: np.ndarray, k: int, rng: np.random.Generator, max_iters: int):
    C = _kmeans_pp(X, k, rng)
    labels, d2 = _assign(X, C)
    trace = [float(d2.sum())]
    for _ in range(max_iters):
        new_C = np.empty_like(C)
        empty = []
        for c in range(k):
            mask = labels == c
            if mask.any():
                new_C[c] = X[mask].mean(axis=0)
            else:
                empty.append(c)
        if empty:
            # Re-seed empty clusters at the points farthest from their centroid.
            for c, idx in zip(empty, np.argsort(-d2, kind="stable")):
                new_C[c] = X[idx]
        new_labels, d2 = _assign(X, new_C)
        trace.append(float(d2.sum()))
        C = new_C
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return C, labels, trace


def kmeans(
    vectors,
    k: int,
    seed: int = 0,
    max_iters: int = 300,
    player_ids: Sequence[str] | None = None,
    n_init: int = 1,
) -> ClusterModel:
    """Lloyd's algorithm with k-means++ seeding.

    With ``n_init > 1`` the best of several independently seeded runs is kept.
    """
    X = np.atleast_2d(np.asarray(vectors, dtype=float))
    n = X.shape[0]
    if X.ndim != 2 or X.shape[1] < 1:
        raise InvalidK("vectors must be an n x d array with d >= 1")
    if not 1 <= k <= n:
        raise InvalidK(f"k={k} not in [1, {n}]")
    ids = tuple(player_ids) if player_ids is not None else tuple(str(i) for i in range(n))
    if len(ids) != n:
        raise ValueError("player_ids length does not match vectors")

    best = None
    for r in range(n_init):
        rng = np.random.default_rng(seed) if n_init == 1 else substream(seed, r)
        C, labels, trace = _lloyd(X, k, rng, max_iters)
        if best is None or trace[-1] < best[2][-1]:
            best = (C, labels, trace)
    C, labels, trace = best
    return ClusterModel(k, C, labels, trace[-1], tuple(trace), ids)


def select_k_by_inertia_drop(
    vectors,
    k_range: Sequence[int] = range(1, 11),
    seed: int = 0,
    n_init: int = 10,
    threads: int = 1,
) -> tuple[int, dict[int, float]]:
    """Pick the k whose inertia drop is followed by the sharpest flattening,
    i.e. the largest second difference of the inertia curve.

    A curve with no positive second difference (e.g. identical points)
    selects the smallest k.
    """
    X = np.atleast_2d(np.asarray(vectors, dtype=float))
    ks = sorted(int(k) for k in k_range)
    if len(ks) < 3 or ks != list(range(ks[0], ks[-1] + 1)):
        raise InvalidRange("k_range must be at least three consecutive values")
    if ks[0] < 1 or ks[-1] > X.shape[0]:
        raise InvalidRange(f"k_range must lie within [1, {X.shape[0]}]")

    def run(k: int) -> float:
        k_seed = int(substream(seed, k).integers(2**63))
        return kmeans(X, k, seed=k_seed, n_init=n_init).inertia

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            inertias = list(pool.map(run, ks))
    else:
        inertias = [run(k) for k in ks]
    curve = dict(zip(ks, inertias))

    best_k, best_score = ks[0], 0.0
    scale = max(inertias[0], 1e-300)
    for i in range(1, len(ks) - 1):
        score = (inertias[i - 1] - inertias[i]) - (inertias[i] - inertias[i + 1])
        if score > best_score + 1e-12 * scale:
            best_k, best_score = ks[i], score
    return best_k, curve


@dataclass(frozen=True, eq=False)
class PcaResult:
    coords: np.ndarray
    explained_ratio: np.ndarray
    components: np.ndarray
    mean: np.ndarray


def pca(vectors, out_dims: int = 2) -> PcaResult:
    """Principal components via SVD of the centred data.

    Each component's sign is fixed so its largest-magnitude loading is
    positive.
    """
    X = np.atleast_2d(np.asarray(vectors, dtype=float))
    if not 1 <= out_dims <= X.shape[1]:
        raise ValueError(f"out_dims must lie in [1, {X.shape[1]}]")
    mean = X.mean(axis=0)
    Xc = X - mean
    _, S, Vt = np.linalg.svd(Xc, full_matrices=False)
    comps = Vt[:out_dims].copy()
    for c in comps:
        if c[np.argmax(np.abs(c))] < 0:
            c *= -1
    var = S**2
    total = var.sum()
    ratio = var[:out_dims] / total if total > 0 else np.zeros(out_dims)
    if ratio.size < out_dims:
        ratio = np.concatenate([ratio, np.zeros(out_dims - ratio.size)])
    return PcaResult(Xc @ comps.T, ratio, comps, mean)


def remove_outliers(vectors, player_ids: Sequence[str], n: int):
    """Drop the ``n`` vectors farthest from the mean."""
    X = np.asarray(vectors, dtype=float)
    if n <= 0:
        return X, tuple(player_ids)
    d = ((X - X.mean(axis=0)) ** 2).sum(axis=1)
    drop = set(np.argsort(-d, kind="stable")[:n].tolist())
    keep = [i for i in range(len(X)) if i not in drop]
    return X[keep], tuple(player_ids[i] for i in keep)


def representative_player(model: ClusterModel, vectors, cluster: int) -> str:
    """Member closest to the cluster centroid; ties go to the smaller id."""
    X = np.asarray(vectors, dtype=float)
    idx = np.flatnonzero(model.labels == cluster)
    if idx.size == 0:
        raise EmptyCluster(f"cluster {cluster} has no members")
    d = ((X[idx] - model.centroids[cluster]) ** 2).sum(axis=1)
    best = d.min()
    tied = [model.player_ids[i] for i, di in zip(idx, d) if di <= best + TIE_TOL]
    return min(tied)


# -- cluster statistics ------------------------------------------------------------


@dataclass(frozen=True)
class ClusterStatRow:
    label: str
    player_count: int
    goals: int
    shots: int
    left_foot_goals: int

    @property
    def success_rate(self) -> float:
        return 100.0 * self.goals / self.shots if self.shots else float("nan")

    @property
    def left_foot_goal_share(self) -> float:
        return 100.0 * self.left_foot_goals / self.goals if self.goals else float("nan")


def _pct(v: float) -> str:
    return "—" if np.isnan(v) else f"{v:.1f}"


@dataclass(frozen=True)
class ClusterStats:
    rows: tuple[ClusterStatRow, ...]
    total: ClusterStatRow
    unassigned_shots: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["cluster", "players", "goals", "shots", "success_rate_pct", "left_foot_goal_pct"]
        )
        for r in (*self.rows, self.total):
            writer.writerow(
                [
                    r.label,
                    r.player_count,
                    r.goals,
                    r.shots,
                    _pct(r.success_rate),
                    _pct(r.left_foot_goal_share),
                ]
            )
        return buf.getvalue()


def _kicks_of(ds: KickDataset, model: ClusterModel, cluster: int | None) -> KickDataset:
    assign = model.assignments
    if cluster is None:
        return ds.subset(lambda r: r.kicker_id in assign)
    return ds.subset(lambda r: assign.get(r.kicker_id) == cluster)


def cluster_stats(model: ClusterModel, ds: KickDataset) -> ClusterStats:
    rows = []
    for c in range(model.k):
        kicks = _kicks_of(ds, model, c)
        goals = [r for r in kicks if r.scored]
        rows.append(
            ClusterStatRow(
                label=str(c),
                player_count=int((model.labels == c).sum()),
                goals=len(goals),
                shots=len(kicks),
                left_foot_goals=sum(r.kicker_foot is Foot.LEFT for r in goals),
            )
        )
    total = ClusterStatRow(
        "total",
        sum(r.player_count for r in rows),
        sum(r.goals for r in rows),
        sum(r.shots for r in rows),
        sum(r.left_foot_goals for r in rows),
    )
    unassigned = len(ds) - len(_kicks_of(ds, model, None))
    return ClusterStats(tuple(rows), total, unassigned)


# -- cluster-conditioned games ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ClusterGame:
    label: str
    shots: int
    game: EmpiricalGame | None
    nash: MixedProfile | None
    empirical: MixedProfile | None
    jsd: float | None
    low_sample: bool

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "shots": self.shots,
            "low_sample": self.low_sample,
            "game": None if self.game is None else self.game.to_dict(),
            "nash": None if self.nash is None else self.nash.to_dict(),
            "empirical": None if self.empirical is None else self.empirical.to_dict(),
            "jsd": self.jsd,
        }


@dataclass(frozen=True, eq=False)
class ClusterGames:
    all_players: ClusterGame
    clusters: tuple[ClusterGame, ...]

    def to_dict(self) -> dict:
        return {
            "all_players": self.all_players.to_dict(),
            "clusters": [c.to_dict() for c in self.clusters],
        }


def _cluster_game(
    label: str,
    kicks: KickDataset,
    abstraction: ActionAbstraction,
    n_boot: int,
    seed: int,
    min_shots: int,
    threads: int,
) -> ClusterGame:
    shots = sum(abstraction.cell(r) is not None for r in kicks)
    if shots == 0:
        return ClusterGame(label, 0, None, None, None, None, True)
    game = build_empirical_game(kicks, abstraction)
    nash = bootstrap_nash(game, n_boot, seed, threads=threads)
    emp = game.empirical_profile()
    return ClusterGame(label, shots, game, nash, emp, game_jsd(nash, emp), shots < min_shots)


def cluster_conditioned_games(
    model: ClusterModel,
    ds: KickDataset,
    abstraction: ActionAbstraction = ActionAbstraction(),
    n_boot: int = 50,
    seed: int = 0,
    min_shots: int = 10,
    threads: int = 1,
) -> ClusterGames:
    """Empirical game, bootstrapped equilibrium and empirical play for the
    kicks of every cluster, plus the pooled game of all assigned kickers.

    Every game is bootstrapped with the same ``seed``.
    """
    everyone = _cluster_game(
        "all", _kicks_of(ds, model, None), abstraction, n_boot, seed, min_shots, threads
    )
    clusters = tuple(
        _cluster_game(
            str(c), _kicks_of(ds, model, c), abstraction, n_boot, seed, min_shots, threads
        )
        for c in range(model.k)
    )
    return ClusterGames(everyone, clusters)


@dataclass(frozen=True)
class ClusterPairReport:
    pair: tuple[int, int]
    min_cell_p: float | None
    may_be_lower: bool
    nash_jsd: float | None
    empirical_jsd: float | None
    left_foot_p: float | None

    def min_cell_p_text(self) -> str:
        if self.min_cell_p is None:
            return "—"
        text = f"{self.min_cell_p:.2e}"
        return f"< {text}" if self.may_be_lower else text

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "min_cell_p": self.min_cell_p,
            "may_be_lower": self.may_be_lower,
            "nash_jsd": self.nash_jsd,
            "empirical_jsd": self.empirical_jsd,
            "left_foot_p": self.left_foot_p,
        }


def _left_counts(kicks: KickDataset) -> CellCounts:
    return CellCounts(sum(r.kicker_foot is Foot.LEFT for r in kicks), len(kicks))


def cluster_pair_report(
    model: ClusterModel,
    ds: KickDataset,
    pair: tuple[int, int],
    abstraction: ActionAbstraction = ActionAbstraction(),
    games: ClusterGames | None = None,
    n_boot: int = 50,
    seed: int = 0,
    pooled: bool = False,
) -> ClusterPairReport:
    """Compare two clusters' payoff tables, equilibria, empirical play and
    footedness. Missing data is flagged rather than imputed."""
    i, j = pair
    for c in pair:
        if not 0 <= c < model.k or not (model.labels == c).any():
            raise EmptyCluster(f"cluster {c} has no members")
    if games is None:
        games = cluster_conditioned_games(model, ds, abstraction, n_boot, seed)
    gi, gj = games.clusters[i], games.clusters[j]
    kicks_i, kicks_j = _kicks_of(ds, model, i), _kicks_of(ds, model, j)

    min_p, may_be_lower = None, True
    nash_jsd = emp_jsd = None
    if gi.game is not None and gj.game is not None:
        table = compare_games(gi.game, gj.game, pooled=pooled)
        min_p, may_be_lower = table.min_p()
        nash_jsd = game_jsd(gi.nash, gj.nash)
        emp_jsd = game_jsd(gi.empirical, gj.empirical)
    try:
        left_p = welch_t_test(_left_counts(kicks_i), _left_counts(kicks_j), pooled).p_value
    except MissingData:
        left_p = None
    return ClusterPairReport((i, j), min_p, may_be_lower, nash_jsd, emp_jsd, left_p)


@dataclass(frozen=True)
class ActionEqualityResult:
    kicker_p: float
    keeper_p: float

    @property
    def min_p(self) -> float:
        return min(self.kicker_p, self.keeper_p)


def _share_test(a: np.ndarray, b: np.ndarray, side: str, pooled: bool) -> float:
    """Smallest p-value over per-action share tests between two marginal
    count vectors."""
    na, nb = int(a.sum()), int(b.sum())
    ps = []
    for x, y in zip(a, b):
        try:
            ps.append(welch_t_test(CellCounts(int(x), na), CellCounts(int(y), nb), pooled).p_value)
        except MissingData:
            continue
    if not ps:
        raise MissingData("no testable action share", group=side)
    return min(ps)


def empirical_action_equality_test(
    model: ClusterModel,
    ds: KickDataset,
    pair: tuple[int, int],
    abstraction: ActionAbstraction = ActionAbstraction(),
    pooled: bool = False,
) -> ActionEqualityResult:
    """t-tests that two clusters choose actions with equal frequencies.

    Each action's share is tested as a Bernoulli proportion; a side's
    p-value is the minimum over its actions (for two actions both tests
    coincide, giving the Natural-share test).
    """
    games = []
    for c in pair:
        kicks = _kicks_of(ds, model, c)
        if len(kicks) == 0:
            raise MissingData("cluster has no kicks", group=str(c))
        games.append(build_empirical_game(kicks, abstraction))
    a, b = games
    kicker_p = _share_test(a.attempts.sum(axis=1), b.attempts.sum(axis=1), "kicker", pooled)
    keeper_p = _share_test(a.attempts.sum(axis=0), b.attempts.sum(axis=0), "keeper", pooled)
    return ActionEqualityResult(kicker_p, keeper_p)
