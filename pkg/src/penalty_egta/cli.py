"""Command-line interface: ``penalty-egta <command> [options]``.

Exit codes: 0 success, 2 data error, 3 numeric/solver failure, 4 config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .config import (
    DEFAULTS,
    RunConfig,
    build_config,
    format_value,
    load_config_file,
    parse_bands,
    parse_bool,
    parse_int_list,
    parse_k_range,
)
from .data import (
    ActionEvent,
    KickDataset,
    filter_by_min_appearances,
    parse_action_events,
    parse_kick_records,
)
from .errors import ConfigError, DataError, NumericError
from .games import bootstrap_nash, build_empirical_game
from .nash import BimatrixGame, epsilon_of_profile, solve_constant_sum
from .report import (
    build_full_report,
    cluster_analysis,
    format_jsd,
    jsonable,
    render_nash_table,
    render_p_table,
    render_payoff_table,
    write_tree,
)
from .stats import footedness_p_table, game_jsd, p_value_by_experience_band, p_value_vs_min_experience
from .synthetic import BUNDLED_SEED, bundled_csv_text, bundled_paths
from .vectors import PlayerVectors, assemble_player_vectors

EXIT_OK, EXIT_DATA, EXIT_NUMERIC, EXIT_CONFIG = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ConfigError(message)


def _default(key: str) -> str:
    return format_value(getattr(DEFAULTS, key), key) or "none"


# Flag name, config key, value parser, help text.
_OPTIONS: dict[str, tuple[str, Callable[[str], Any], str]] = {
    "kicks": ("--kicks", str, "kicks CSV file"),
    "events": ("--events", str, "action events CSV file"),
    "out": ("--out", str, "output directory"),
    "abstraction": ("--abstraction", str, "action abstraction: natural or lcr"),
    "keeper_center_policy": (
        "--keeper-center-policy",
        str,
        "keeper centre dives: center-is-natural or center-excluded",
    ),
    "min_appearances": ("--min-appearances", int, "keep players with at least this many kicks"),
    "bootstrap_n": ("--bootstrap-n", int, "number of resampled payoff tables"),
    "seed": ("--seed", int, "master random seed"),
    "segments": ("--segments", parse_int_list, "NMF ranks for pass,dribble,shot,cross"),
    "k": ("--k", str, "number of clusters, or auto"),
    "k_range": ("--k-range", parse_k_range, "candidate k for auto selection, lo..hi"),
    "kmeans_restarts": ("--kmeans-restarts", int, "k-means++ restarts per k (best kept)"),
    "standardize": ("--standardize", parse_bool, "z-score vector columns before clustering"),
    "remove_outliers": ("--remove-outliers", int, "drop this many vectors farthest from the mean"),
    "min_cluster_shots": ("--min-cluster-shots", int, "flag cluster games below this many shots"),
    "pooled": ("--pooled", parse_bool, "use the pooled-variance t-test instead of Welch"),
    "sweep": ("--sweep", parse_int_list, "minimum-experience thresholds, e.g. 1,5,10,20,30"),
    "bands": ("--bands", parse_bands, "experience bands, e.g. 1-7,5-12 (30- is open)"),
    "threads": ("--threads", int, "worker threads (results do not depend on it)"),
}

_COMMAND_OPTIONS = {
    "ingest-check": ["kicks", "events"],
    "game": [
        "kicks", "out", "abstraction", "keeper_center_policy", "min_appearances",
        "bootstrap_n", "seed", "threads",
    ],
    "ttest": [
        "kicks", "out", "abstraction", "keeper_center_policy", "pooled", "sweep", "bands", "seed",
    ],
    "vectors": ["events", "out", "segments", "seed", "threads"],
    "cluster": [
        "events", "kicks", "out", "abstraction", "keeper_center_policy", "segments", "k",
        "k_range", "kmeans_restarts", "standardize", "remove_outliers", "min_cluster_shots",
        "bootstrap_n", "pooled", "seed", "threads",
    ],
    "report": list(_OPTIONS),
}

_HELP = {
    "ingest-check": "validate input files and print a summary",
    "game": "payoff table, Nash equilibrium, epsilon and JSD for one abstraction",
    "ttest": "footedness t-tests, optionally by experience",
    "vectors": "build Player Vectors from action events",
    "cluster": "cluster players and analyse per-cluster games",
    "report": "run the full analysis and write a report directory",
    "synth": "write the synthetic reference dataset",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="penalty-egta", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    for name, keys in _COMMAND_OPTIONS.items():
        p = sub.add_parser(name, help=_HELP[name], description=_HELP[name])
        p.add_argument("--config", help="flat key = value settings file (default: none)")
        for key in keys:
            flag, parse, text = _OPTIONS[key]
            p.add_argument(
                flag, dest=key, type=parse, default=None,
                help=f"{text} (default: {_default(key)})",
            )
        if "kicks" in keys or "events" in keys:
            p.add_argument(
                "--bundled", action="store_true",
                help="use the shipped synthetic dataset for any input not given (default: off)",
            )
        if name == "cluster":
            p.add_argument("--vectors", help="precomputed player vectors CSV (default: none)")
    p = sub.add_parser("synth", help=_HELP["synth"], description=_HELP["synth"])
    p.add_argument("--out", required=True, help="output directory (default: none)")
    p.add_argument(
        "--seed", type=int, default=BUNDLED_SEED,
        help=f"generator seed; the shipped files use it (default: {BUNDLED_SEED})",
    )
    return parser


def _resolve_config(args: argparse.Namespace) -> tuple[RunConfig, set[str]]:
    """Defaults < config file < flags. Also returns the keys set explicitly."""
    file_layer = load_config_file(args.config) if getattr(args, "config", None) else {}
    flag_layer = {k: getattr(args, k) for k in _OPTIONS if getattr(args, k, None) is not None}
    if getattr(args, "bundled", False):
        kicks, events = bundled_paths()
        file_layer.setdefault("kicks", str(kicks))
        file_layer.setdefault("events", str(events))
    cfg = build_config(file_layer, flag_layer)
    return cfg, set(file_layer) | set(flag_layer)


def _read(path: str | None, what: str) -> str:
    if not path:
        raise ConfigError(f"no {what} file given (--{what})")
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {what} file: {exc}") from exc


def _load_kicks(cfg: RunConfig) -> KickDataset:
    return parse_kick_records(_read(cfg.kicks, "kicks"))


def _load_events(cfg: RunConfig) -> list[ActionEvent]:
    return parse_action_events(_read(cfg.events, "events"))


def _require_out(cfg: RunConfig) -> str:
    if not cfg.out:
        raise ConfigError("no output directory given (--out)")
    return cfg.out


# -- commands --------------------------------------------------------------------


def cmd_ingest_check(cfg: RunConfig, explicit: set[str], args) -> int:
    ds = _load_kicks(cfg)
    counts = ds.appearance_counts
    print(f"kicks: {len(ds)}")
    print(f"kickers: {len(counts['kicker'])}")
    print(f"keepers: {len(counts['keeper'])}")
    for label, counter in (
        ("outcomes", Counter(r.outcome.value for r in ds)),
        ("feet", Counter(r.kicker_foot.value for r in ds)),
        ("shot directions", Counter(r.shot_direction.value for r in ds)),
    ):
        print(f"{label}: " + ", ".join(f"{k}={v}" for k, v in sorted(counter.items())))
    if cfg.events:
        events = _load_events(cfg)
        by_type = Counter(e.action_type.value for e in events)
        print(f"events: {len(events)} from {len({e.player_id for e in events})} players")
        print("event types: " + ", ".join(f"{k}={v}" for k, v in sorted(by_type.items())))
    return EXIT_OK


def cmd_game(cfg: RunConfig, explicit: set[str], args) -> int:
    out = _require_out(cfg)
    ds = filter_by_min_appearances(_load_kicks(cfg), cfg.min_appearances)
    game = build_empirical_game(ds, cfg.action_abstraction)
    nash, value = solve_constant_sum(game.complete_payoff(), game.constant_sum)
    emp = game.empirical_profile()
    eps = epsilon_of_profile(BimatrixGame.constant_sum(game.payoff, game.constant_sum), emp)
    boot = bootstrap_nash(game, cfg.bootstrap_n, cfg.seed, threads=cfg.threads)
    jsd = game_jsd(nash, emp)
    labels = dict(row_actions=game.row_actions, col_actions=game.col_actions)
    doc = {
        "n_records": len(ds),
        "config": cfg.semantic_dict(),
        "game": game.to_dict(),
        "nash": nash.to_dict(),
        "value": value,
        "bootstrap_nash": boot.to_dict(),
        "empirical": emp.to_dict(),
        "epsilon": {
            "epsilon": eps.epsilon,
            "row_gain": eps.row_gain,
            "col_gain": eps.col_gain,
            "mean_gain": eps.mean_gain,
        },
        "jsd": jsd,
    }
    files = {
        "payoff.csv": render_payoff_table(game, "csv"),
        "nash_vs_empirical.csv": render_nash_table(nash, emp, jsd, fmt="csv", **labels),
        "epsilon.csv": "epsilon,row_gain,col_gain,mean_gain\n"
        + f"{eps.epsilon!r},{eps.row_gain!r},{eps.col_gain!r},{eps.mean_gain!r}\n",
        "jsd.csv": f"jsd_nats,jsd_percent\n{jsd!r},{format_jsd(jsd)}\n",
        "game.json": json.dumps(jsonable(doc), indent=2, ensure_ascii=False, allow_nan=False) + "\n",
    }
    write_tree(out, files)
    print(render_payoff_table(game, "markdown"))
    print(render_nash_table(nash, emp, jsd, **labels))
    print(f"epsilon: {eps.epsilon:.6f}")
    return EXIT_OK


def _slices_csv(slices) -> str:
    lines = []
    for s in slices:
        lines.append(f"# {s.label} ({s.n_records} kicks)\n")
        lines.append(s.table.to_csv())
    return "".join(lines)


def cmd_ttest(cfg: RunConfig, explicit: set[str], args) -> int:
    out = _require_out(cfg)
    ds = _load_kicks(cfg)
    abstraction = cfg.action_abstraction
    table = footedness_p_table(ds, abstraction, cfg.pooled)
    files = {"footedness_p.csv": table.to_csv()}
    print(f"Footedness t-tests ({table.n_records} kicks)\n")
    print(render_p_table(table))
    if "sweep" in explicit:
        slices = p_value_vs_min_experience(ds, abstraction, cfg.sweep, cfg.pooled)
        files["sweep_p.csv"] = _slices_csv(slices)
        for s in slices:
            print(f"minimum experience {s.label} ({s.n_records} kicks)\n")
            print(render_p_table(s.table))
    if "bands" in explicit:
        slices = p_value_by_experience_band(ds, abstraction, cfg.bands, cfg.pooled)
        files["bands_p.csv"] = _slices_csv(slices)
        for s in slices:
            print(f"experience band {s.label} ({s.n_records} kicks)\n")
            print(render_p_table(s.table))
    write_tree(out, files)
    return EXIT_OK


def cmd_vectors(cfg: RunConfig, explicit: set[str], args) -> int:
    out = _require_out(cfg)
    pv = assemble_player_vectors(
        _load_events(cfg), cfg.segment_sizes, seed=cfg.seed, threads=cfg.threads
    )
    write_tree(out, {"player_vectors.csv": pv.to_csv()})
    print(f"{len(pv)} players x {pv.matrix.shape[1]} dimensions")
    return EXIT_OK


def cmd_cluster(cfg: RunConfig, explicit: set[str], args) -> int:
    out = _require_out(cfg)
    vectors = events = None
    if args.vectors:
        try:
            vectors = PlayerVectors.from_csv(_read(args.vectors, "vectors"))
        except (ValueError, IndexError, KeyError) as exc:
            raise DataError(f"malformed player vectors file: {exc}") from exc
    else:
        events = _load_events(cfg)
    ds = _load_kicks(cfg) if cfg.kicks else None
    sections = cluster_analysis(cfg, ds, events, vectors)
    files: dict[str, str] = {}
    summary = {}
    for s in sections:
        files.update({f"tables/{k}": v for k, v in s.tables.items()})
        files.update({f"figures/{k}": v for k, v in s.figures.items()})
        summary[s.name] = s.data
    files["clusters.json"] = json.dumps(
        jsonable({"config": cfg.semantic_dict(), "sections": summary}),
        indent=2, ensure_ascii=False, allow_nan=False,
    ) + "\n"
    write_tree(out, files)
    for s in sections:
        print(f"## {s.caption}\n")
        print(s.markdown)
    return EXIT_OK


def cmd_report(cfg: RunConfig, explicit: set[str], args) -> int:
    out = _require_out(cfg)
    ds = _load_kicks(cfg)
    events = _load_events(cfg) if cfg.events else None
    report = build_full_report(ds, cfg, events)
    report.write(out)
    for s in report.sections:
        if s.status != "ok":
            print(f"{s.name}: {s.status}: {s.notice}", file=sys.stderr)
    print(f"report written to {out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    kicks, events = bundled_csv_text(args.seed)
    write_tree(args.out, {"kicks.csv": kicks, "events.csv": events})
    print(f"wrote kicks.csv and events.csv to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "ingest-check": cmd_ingest_check,
    "game": cmd_game,
    "ttest": cmd_ttest,
    "vectors": cmd_vectors,
    "cluster": cmd_cluster,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "synth":
            return cmd_synth(args)
        cfg, explicit = _resolve_config(args)
        return _COMMANDS[args.command](cfg, explicit, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
