"""Publication-style tables and the consolidated analysis report.

Every table is rendered from the same rounded numbers in all formats, and
the full report is a pure function of (dataset bytes, config, seed): no
timestamps, no thread counts, no absolute paths.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .clustering import (
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
from .config import RunConfig
from .data import ActionEvent, KickDataset, filter_by_min_appearances, write_action_events
from .errors import DimensionMismatch, EmptyCluster, MissingData, PenaltyError
from .games import (
    AbstractionKind,
    ActionAbstraction,
    EmpiricalGame,
    bootstrap_nash,
    build_empirical_game,
    shot_heatmap,
)
from .nash import BimatrixGame, MixedProfile, epsilon_of_profile, solve_constant_sum
from .stats import (
    PValueTable,
    footedness_p_table,
    game_jsd,
    p_value_by_experience_band,
    p_value_vs_min_experience,
)
from .vectors import PlayerVectors, assemble_player_vectors, standardize

MISSING = "—"


def _md_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join("---" for _ in header) + "|",
    ]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def _csv(header: Sequence[str] | None, rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header is not None:
        writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _r3(v: float | None) -> float | None:
    # Adding 0.0 turns a rounded -0.0 into 0.0.
    return None if v is None or math.isnan(v) else round(float(v), 3) + 0.0


def _f3(v: float | None) -> str:
    r = _r3(v)
    return MISSING if r is None else f"{r:.3f}"


# -- payoff and Nash tables --------------------------------------------------------


def render_payoff_table(game: EmpiricalGame, fmt: str = "markdown") -> str:
    """Kicker actions as rows, keeper actions as columns, payoffs to three
    decimals followed by a parallel table of attempts."""
    payoff = [[_r3(v) for v in row] for row in game.payoff]
    attempts = [[int(a) for a in row] for row in game.attempts]
    if fmt == "json":
        return json.dumps(
            {
                "row_actions": list(game.row_actions),
                "col_actions": list(game.col_actions),
                "payoff": payoff,
                "attempts": attempts,
            },
            indent=2,
            ensure_ascii=False,
        ) + "\n"
    pay_rows = [[lab, *(_f3(v) for v in row)] for lab, row in zip(game.row_actions, payoff)]
    att_rows = [[lab, *(str(a) for a in row)] for lab, row in zip(game.row_actions, attempts)]
    if fmt == "csv":
        return (
            _csv(["payoff", *game.col_actions], pay_rows)
            + "\n"
            + _csv(["attempts", *game.col_actions], att_rows)
        )
    if fmt == "markdown":
        return (
            _md_table(["Payoff", *game.col_actions], pay_rows)
            + "\n"
            + _md_table(["Attempts", *game.col_actions], att_rows)
        )
    raise ValueError(f"unknown format {fmt!r}")


def format_jsd(value: float) -> str:
    """JSD as a percentage truncated to two significant digits."""
    pct = 100.0 * value
    if pct <= 0.0:
        return "0%"
    exp = math.floor(math.log10(pct))
    step = 10.0 ** (exp - 1)
    # The small nudge keeps exact decimals such as 0.049 from flooring to 0.048.
    truncated = math.floor(pct / step + 1e-9) * step
    return f"{truncated:.{max(0, 1 - exp)}f}%"


def render_nash_table(
    nash: MixedProfile,
    empirical: MixedProfile,
    jsd: float | None = None,
    row_actions: Sequence[str] | None = None,
    col_actions: Sequence[str] | None = None,
    fmt: str = "markdown",
) -> str:
    """Nash and empirical rows over both players' actions with a JSD footer."""
    if nash.row.shape != empirical.row.shape or nash.col.shape != empirical.col.shape:
        raise DimensionMismatch("Nash and empirical profiles differ in size")
    m, n = nash.row.size, nash.col.size
    row_actions = list(row_actions or [f"row{i}" for i in range(m)])
    col_actions = list(col_actions or [f"col{j}" for j in range(n)])
    if jsd is None:
        jsd = game_jsd(nash, empirical)
    header = ["", *row_actions, *col_actions]
    rows = [
        [name, *(_f3(v) for v in np.concatenate([p.row, p.col]))]
        for name, p in (("Nash", nash), ("Empirical", empirical))
    ]
    footer = f"Jensen–Shannon divergence: {format_jsd(jsd)}"
    if fmt == "csv":
        return _csv(header, rows) + _csv(None, [[footer]])
    if fmt == "json":
        return json.dumps(
            {
                "row_actions": row_actions,
                "col_actions": col_actions,
                "nash": [_r3(v) for v in np.concatenate([nash.row, nash.col])],
                "empirical": [_r3(v) for v in np.concatenate([empirical.row, empirical.col])],
                "jsd": jsd,
                "footer": footer,
            },
            indent=2,
            ensure_ascii=False,
        ) + "\n"
    if fmt == "markdown":
        return _md_table(header, rows) + f"\n{footer}\n"
    raise ValueError(f"unknown format {fmt!r}")


def render_p_table(table: PValueTable, fmt: str = "markdown") -> str:
    if fmt == "csv":
        return table.to_csv()
    rows = list(csv.reader(io.StringIO(table.to_csv())))
    return _md_table(["p-value", *rows[0][1:]], rows[1:])


# -- report assembly --------------------------------------------------------------


@dataclass
class Section:
    name: str
    caption: str
    status: str = "ok"
    notice: str = ""
    data: dict = field(default_factory=dict)
    markdown: str = ""
    tables: dict[str, str] = field(default_factory=dict)
    figures: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "caption": self.caption,
            "status": self.status,
            "notice": self.notice,
            "data": self.data,
        }


@dataclass
class AnalysisReport:
    metadata: dict
    sections: list[Section]

    def section(self, name: str) -> Section:
        for s in self.sections:
            if s.name == name:
                return s
        raise KeyError(name)

    @property
    def failures(self) -> list[Section]:
        return [s for s in self.sections if s.status == "failed"]

    def to_json(self) -> str:
        doc = {"metadata": self.metadata, "sections": [s.to_dict() for s in self.sections]}
        return json.dumps(jsonable(doc), indent=2, ensure_ascii=False, allow_nan=False) + "\n"

    def to_markdown(self) -> str:
        out = ["# Penalty kick analysis report", ""]
        for key, value in self.metadata.items():
            if key != "config":
                out.append(f"- {key}: {value}")
        out.append("")
        for s in self.sections:
            out += [f"## {s.caption}", ""]
            if s.status != "ok":
                out += [f"_{s.status}: {s.notice}_", ""]
            elif s.notice:
                out += [f"_{s.notice}_", ""]
            if s.markdown:
                out += [s.markdown.rstrip("\n"), ""]
        return "\n".join(out)

    def files(self) -> dict[str, str]:
        files = {"report.json": self.to_json(), "report.md": self.to_markdown()}
        for s in self.sections:
            for name, text in s.tables.items():
                files[f"tables/{name}"] = text
            for name, text in s.figures.items():
                files[f"figures/{name}"] = text
        return files

    def write(self, out_dir: str | Path) -> list[Path]:
        return write_tree(out_dir, self.files())


def write_tree(out_dir: str | Path, files: dict[str, str]) -> list[Path]:
    """Write all files or none: content is staged in a temporary directory
    next to ``out_dir`` and moved into place only once fully written."""
    out = Path(out_dir)
    out.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out.parent))
    try:
        for rel, text in files.items():
            p = staging / rel
            p.parent.mkdir(parents=True, exist_ok=True)
            with open(p, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        written = []
        for rel in files:
            dest = out / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(staging / rel, dest)
            written.append(dest)
        return written
    finally:
        shutil.rmtree(staging, ignore_errors=True)


def jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if math.isnan(v) or math.isinf(v) else v
    return obj


def dataset_digest(ds: KickDataset, events: Sequence[ActionEvent] | None = None) -> dict:
    digest = {"kicks_sha256": hashlib.sha256(ds.to_csv().encode("utf-8")).hexdigest()}
    if events is not None:
        buf = io.StringIO()
        write_action_events(events, buf)
        digest["events_sha256"] = hashlib.sha256(buf.getvalue().encode("utf-8")).hexdigest()
    return digest


def _game_section(
    name: str,
    caption: str,
    ds: KickDataset,
    abstraction: ActionAbstraction,
    cfg: RunConfig,
) -> Section:
    game = build_empirical_game(ds, abstraction)
    emp = game.empirical_profile()
    sec = Section(name, caption)
    data: dict[str, Any] = {"n_records": len(ds), "game": game.to_dict(), "empirical": emp.to_dict()}
    boot = bootstrap_nash(game, cfg.bootstrap_n, cfg.seed, threads=cfg.threads)
    data["bootstrap_nash"] = boot.to_dict()
    if game.defined.all():
        nash, value = solve_constant_sum(game.payoff, game.constant_sum)
        eps = epsilon_of_profile(BimatrixGame.constant_sum(game.payoff, game.constant_sum), emp)
        data["nash"] = nash.to_dict()
        data["value"] = value
        data["epsilon"] = {
            "epsilon": eps.epsilon,
            "row_gain": eps.row_gain,
            "col_gain": eps.col_gain,
            "mean_gain": eps.mean_gain,
        }
    else:
        nash = boot
        sec.notice = "payoff table has undefined cells; Nash shown is the bootstrap mean"
    jsd = game_jsd(nash, emp)
    data["jsd"] = jsd
    sec.data = data
    labels = dict(row_actions=game.row_actions, col_actions=game.col_actions)
    sec.markdown = (
        render_payoff_table(game, "markdown")
        + "\n"
        + render_nash_table(nash, emp, jsd, fmt="markdown", **labels)
    )
    if "epsilon" in data:
        e = data["epsilon"]
        sec.markdown += (
            f"\nEmpirical play is an ε-Nash equilibrium with ε = {e['epsilon']:.4f} "
            f"(mean per-player gain {e['mean_gain']:.4f}).\n"
        )
    sec.tables = {
        f"{name}_payoff.csv": render_payoff_table(game, "csv"),
        f"{name}_nash_vs_empirical.csv": render_nash_table(nash, emp, jsd, fmt="csv", **labels),
    }
    return sec


def _p_section(name: str, caption: str, table: PValueTable) -> Section:
    sec = Section(name, caption, data=table.to_dict())
    sec.markdown = f"{table.n_records} kicks.\n\n" + render_p_table(table)
    sec.tables = {f"{name}.csv": table.to_csv()}
    return sec


def _slices_section(name: str, caption: str, slices) -> Section:
    header = ["slice", "n_records"]
    first = slices[0].table
    cells = [(i, j) for i in range(len(first.row_actions)) for j in range(len(first.col_actions))]
    header += [f"{first.row_actions[i]}/{first.col_actions[j]}" for i, j in cells]
    rows = []
    for s in slices:
        p = s.table.p_values
        rows.append(
            [s.label, str(s.n_records), *(MISSING if np.isnan(p[c]) else f"{p[c]:.6f}" for c in cells)]
        )
    sec = Section(name, caption)
    sec.data = {
        "slices": [
            {"label": s.label, "n_records": s.n_records, "table": s.table.to_dict()} for s in slices
        ]
    }
    sec.markdown = _md_table(header, rows)
    sec.tables = {f"{name}.csv": _csv(header, rows)}
    return sec


def _heatmap_section(ds: KickDataset) -> Section:
    all_shots = shot_heatmap(ds)
    goals = shot_heatmap(ds, goals_only=True)
    sec = Section("shot_directions", "Shot direction histogram (goalkeeper frame)")
    header = ["subset", *all_shots.column_labels]
    rows = [
        ["all", *(str(int(v)) for v in all_shots.counts[0])],
        ["goals", *(str(int(v)) for v in goals.counts[0])],
    ]
    sec.data = {"labels": list(all_shots.column_labels), "all": all_shots.counts[0], "goals": goals.counts[0]}
    sec.markdown = _md_table(header, rows)
    sec.figures = {"shot_directions.csv": _csv(header, rows)}
    return sec


class _Builder:
    """Runs sections in order, isolating failures unless ``strict``."""

    def __init__(self, strict: bool = False):
        self.sections: list[Section] = []
        self.strict = strict

    def run(self, name: str, caption: str, fn: Callable[[], Section | list[Section]]):
        try:
            result = fn()
        except (PenaltyError, ValueError, ArithmeticError) as exc:
            if self.strict:
                raise
            self.sections.append(
                Section(name, caption, status="failed", notice=f"{type(exc).__name__}: {exc}")
            )
            return None
        self.sections.extend(result if isinstance(result, list) else [result])
        return result


def _embedding_sections(
    ds: KickDataset | None,
    events: Sequence[ActionEvent] | None,
    cfg: RunConfig,
    b: _Builder,
    vectors: PlayerVectors | None = None,
) -> None:
    state: dict[str, Any] = {"pv": vectors}

    def vectors_section() -> Section:
        pv = assemble_player_vectors(
            events, cfg.segment_sizes, seed=cfg.seed, threads=cfg.threads
        )
        state["pv"] = pv
        sec = Section("player_vectors", "Player Vectors")
        sec.data = {"n_players": len(pv), "dimensions": pv.matrix.shape[1], "columns": pv.columns}
        sec.markdown = f"{len(pv)} players, {pv.matrix.shape[1]} dimensions.\n"
        sec.tables = {"player_vectors.csv": pv.to_csv()}
        return sec

    if vectors is None and b.run("player_vectors", "Player Vectors", vectors_section) is None:
        return
    pv = state["pv"]

    def k_section() -> Section:
        X = standardize(pv.matrix) if cfg.standardize else pv.matrix
        X, ids = remove_outliers(X, list(pv.players), cfg.remove_outliers)
        lo, hi = cfg.k_range
        hi = min(hi, len(ids))
        curve: dict[int, float] = {}
        if cfg.k == "auto":
            k, curve = select_k_by_inertia_drop(
                X, range(lo, hi + 1), seed=cfg.seed, n_init=cfg.kmeans_restarts, threads=cfg.threads
            )
        else:
            k = int(cfg.k)
        model = kmeans(X, k, seed=cfg.seed, player_ids=ids, n_init=cfg.kmeans_restarts)
        state.update(model=model, X=X)
        sec = Section("k_selection", "Choice of k")
        sec.data = {"k": k, "inertia_curve": {str(kk): v for kk, v in curve.items()}}
        rows = [[str(kk), repr(v)] for kk, v in curve.items()]
        sec.markdown = f"k = {k}" + (" (largest drop-then-flatten of inertia)" if curve else "") + "\n"
        if curve:
            sec.markdown += "\n" + _md_table(["k", "inertia"], [[r[0], f"{float(r[1]):.3f}"] for r in rows])
            sec.figures = {"inertia_curve.csv": _csv(["k", "inertia"], rows)}
        return sec

    if b.run("k_selection", "Choice of k", k_section) is None:
        return
    model: ClusterModel = state["model"]
    X = state["X"]

    def cluster_section() -> Section:
        stats = None if ds is None else cluster_stats(model, ds)
        proj = pca(X, min(2, X.shape[1]))
        reps = {}
        for c in range(model.k):
            try:
                reps[str(c)] = representative_player(model, X, c)
            except EmptyCluster:
                reps[str(c)] = None
        sec = Section("clusters", "Clusters")
        sec.data = {
            "k": model.k,
            "inertia": model.inertia,
            "representatives": reps,
            "sizes": [int((model.labels == c).sum()) for c in range(model.k)],
            "pca_explained_ratio": proj.explained_ratio,
        }
        sec.markdown = ""
        sec.tables = {"cluster_assignments.csv": model.to_csv()}
        if stats is not None:
            sec.data["unassigned_shots"] = stats.unassigned_shots
            stat_rows = list(csv.reader(io.StringIO(stats.to_csv())))
            sec.markdown = _md_table(stat_rows[0], stat_rows[1:]) + "\n"
            sec.tables["cluster_stats.csv"] = stats.to_csv()
        sec.markdown += "Representative players: " + ", ".join(
            f"{c}: {p or MISSING}" for c, p in reps.items()
        ) + "\n"
        pca_rows = [
            [pid, *(repr(float(v)) for v in xy), int(c)]
            for pid, xy, c in zip(model.player_ids, proj.coords, model.labels)
        ]
        sec.figures = {
            "pca.csv": _csv(
                ["player_id", *(f"pc{i + 1}" for i in range(proj.coords.shape[1])), "cluster"],
                pca_rows,
            )
        }
        return sec

    b.run("clusters", "Clusters", cluster_section)
    if ds is None:
        return

    abstraction = cfg.action_abstraction

    def games_section() -> Section:
        games = cluster_conditioned_games(
            model, ds, abstraction, cfg.bootstrap_n, cfg.seed, cfg.min_cluster_shots, cfg.threads
        )
        state["games"] = games
        sec = Section("cluster_games", "Cluster-conditioned games")
        sec.data = games.to_dict()
        parts = []
        tables = {}
        for g in (games.all_players, *games.clusters):
            title = "All players" if g.label == "all" else f"Cluster {g.label}"
            flag = " (low sample)" if g.low_sample else ""
            parts.append(f"### {title}: {g.shots} shots{flag}\n")
            if g.game is None:
                parts.append("No classified kicks.\n")
                continue
            labels = dict(row_actions=g.game.row_actions, col_actions=g.game.col_actions)
            parts.append(render_nash_table(g.nash, g.empirical, g.jsd, **labels))
            tables[f"cluster_game_{g.label}.csv"] = render_nash_table(
                g.nash, g.empirical, g.jsd, fmt="csv", **labels
            )
        sec.markdown = "\n".join(parts)
        sec.tables = tables
        return sec

    if b.run("cluster_games", "Cluster-conditioned games", games_section) is None:
        return
    games = state["games"]

    def pairs_section() -> Section:
        header = ["pair", "min_cell_p", "nash_jsd", "empirical_jsd", "left_foot_p", "kicker_action_p", "keeper_action_p"]
        rows, data = [], []
        for i in range(model.k):
            for j in range(i + 1, model.k):
                try:
                    r = cluster_pair_report(
                        model, ds, (i, j), abstraction, games, cfg.bootstrap_n, cfg.seed, cfg.pooled
                    )
                except EmptyCluster as exc:
                    rows.append([f"{i}-{j}", *([MISSING] * 6)])
                    data.append({"pair": [i, j], "missing": str(exc)})
                    continue
                try:
                    eq = empirical_action_equality_test(model, ds, (i, j), abstraction, cfg.pooled)
                    kp, gp = eq.kicker_p, eq.keeper_p
                except MissingData:
                    kp = gp = None
                entry = r.to_dict()
                entry.update(kicker_action_p=kp, keeper_action_p=gp)
                data.append(entry)
                rows.append(
                    [
                        f"{i}-{j}",
                        r.min_cell_p_text(),
                        MISSING if r.nash_jsd is None else format_jsd(r.nash_jsd),
                        MISSING if r.empirical_jsd is None else format_jsd(r.empirical_jsd),
                        MISSING if r.left_foot_p is None else f"{r.left_foot_p:.6f}",
                        MISSING if kp is None else f"{kp:.6f}",
                        MISSING if gp is None else f"{gp:.6f}",
                    ]
                )
        sec = Section("cluster_pairs", "Pairwise cluster comparisons", data={"pairs": data})
        sec.markdown = _md_table(header, rows) if rows else "Fewer than two clusters.\n"
        sec.tables = {"cluster_pairs.csv": _csv(header, rows)}
        return sec

    b.run("cluster_pairs", "Pairwise cluster comparisons", pairs_section)


def cluster_analysis(
    cfg: RunConfig,
    ds: KickDataset | None = None,
    events: Sequence[ActionEvent] | None = None,
    vectors: PlayerVectors | None = None,
) -> list[Section]:
    """Embedding and clustering sections on their own. Errors propagate."""
    if events is None and vectors is None:
        raise ValueError("need events or precomputed player vectors")
    b = _Builder(strict=True)
    _embedding_sections(ds, events, cfg, b, vectors)
    return b.sections


def build_full_report(
    ds: KickDataset,
    config: RunConfig = RunConfig(),
    events: Sequence[ActionEvent] | None = None,
) -> AnalysisReport:
    """Run the whole analysis. A failing section is recorded with its error
    and the remaining sections still run."""
    cfg = config
    b = _Builder()
    filtered = filter_by_min_appearances(ds, cfg.min_appearances)
    natural = ActionAbstraction(AbstractionKind.NATURAL, cfg.action_abstraction.keeper_center_policy)
    lcr = ActionAbstraction(AbstractionKind.LCR, cfg.action_abstraction.keeper_center_policy)

    b.run(
        "natural_game",
        "Natural / Non-Natural game",
        lambda: _game_section("natural_game", "Natural / Non-Natural game", filtered, natural, cfg),
    )
    b.run(
        "footedness",
        "Footedness t-tests (left vs right)",
        lambda: _p_section(
            "footedness", "Footedness t-tests (left vs right)", footedness_p_table(ds, natural, cfg.pooled)
        ),
    )
    b.run(
        "experience_sweep",
        "Footedness p-values by minimum kicker experience",
        lambda: _slices_section(
            "experience_sweep",
            "Footedness p-values by minimum kicker experience",
            p_value_vs_min_experience(ds, natural, cfg.sweep, cfg.pooled),
        ),
    )
    b.run(
        "experience_bands",
        "Footedness p-values by kicker experience band",
        lambda: _slices_section(
            "experience_bands",
            "Footedness p-values by kicker experience band",
            p_value_by_experience_band(ds, natural, cfg.bands, cfg.pooled),
        ),
    )
    b.run(
        "lcr_game",
        "Left / Center / Right game",
        lambda: _game_section("lcr_game", "Left / Center / Right game", filtered, lcr, cfg),
    )
    b.run("shot_directions", "Shot direction histogram (goalkeeper frame)", lambda: _heatmap_section(filtered))

    if events is None:
        b.sections.append(
            Section(
                "embedding",
                "Player Vectors and clusters",
                status="omitted",
                notice="no events file was provided, so embedding and cluster sections are skipped",
            )
        )
    else:
        _embedding_sections(ds, events, cfg, b)

    metadata = {
        "tool": "penalty-egta",
        "version": __version__,
        **dataset_digest(ds, events),
        "n_kicks": len(ds),
        "n_kicks_after_min_appearances": len(filtered),
        "seed": cfg.seed,
        "config": cfg.semantic_dict(),
    }
    return AnalysisReport(metadata, b.sections)
