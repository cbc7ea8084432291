"""Run configuration shared by the report builder and the command line."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .data import ActionType
from .errors import ConfigError
from .games import AbstractionKind, ActionAbstraction, KeeperCenterPolicy
from .vectors import SEGMENT_ORDER

Band = tuple[int, "int | None"]


@dataclass(frozen=True)
class RunConfig:
    kicks: str | None = None
    events: str | None = None
    out: str | None = None
    abstraction: str = "natural"
    keeper_center_policy: str = "center-is-natural"
    min_appearances: int = 20
    bootstrap_n: int = 50
    seed: int = 0
    segments: tuple[int, ...] = (5, 4, 4, 5)
    k: str = "auto"
    k_range: tuple[int, int] = (1, 10)
    kmeans_restarts: int = 10
    standardize: bool = True
    remove_outliers: int = 0
    min_cluster_shots: int = 10
    pooled: bool = False
    sweep: tuple[int, ...] = (1, 5, 10, 20, 30)
    bands: tuple[Band, ...] = ((1, 7), (5, 12))
    threads: int = 1

    # Fields that never influence results and are left out of report metadata.
    _NON_SEMANTIC = ("kicks", "events", "out", "threads")

    def __post_init__(self):
        try:
            AbstractionKind(self.abstraction)
            KeeperCenterPolicy(self.keeper_center_policy)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.min_appearances < 1:
            raise ConfigError("min_appearances must be >= 1")
        if self.bootstrap_n < 1:
            raise ConfigError("bootstrap_n must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.kmeans_restarts < 1:
            raise ConfigError("kmeans_restarts must be >= 1")
        if self.remove_outliers < 0:
            raise ConfigError("remove_outliers must be >= 0")
        if len(self.segments) != len(SEGMENT_ORDER) or min(self.segments) < 1:
            raise ConfigError("segments needs four positive sizes (pass, dribble, shot, cross)")
        lo, hi = self.k_range
        if not 1 <= lo < hi:
            raise ConfigError("k_range must be lo..hi with 1 <= lo < hi")
        if self.k != "auto":
            try:
                if int(self.k) < 1:
                    raise ValueError
            except ValueError:
                raise ConfigError(f"k must be 'auto' or a positive integer, got {self.k!r}") from None

    @property
    def action_abstraction(self) -> ActionAbstraction:
        return ActionAbstraction(
            AbstractionKind(self.abstraction), KeeperCenterPolicy(self.keeper_center_policy)
        )

    @property
    def segment_sizes(self) -> dict[ActionType, int]:
        return dict(zip(SEGMENT_ORDER, self.segments))

    def replace(self, **changes: Any) -> RunConfig:
        return dataclasses.replace(self, **changes)

    def semantic_dict(self) -> dict[str, Any]:
        """Settings that affect results, in field order, JSON-ready."""
        out = {}
        for f in dataclasses.fields(self):
            if f.name in self._NON_SEMANTIC:
                continue
            out[f.name] = format_value(getattr(self, f.name), f.name)
        return out


def format_value(value: Any, key: str = "") -> str:
    """Inverse of :func:`parse_value`; used for ``--help`` and metadata."""
    if key == "k_range":
        return f"{value[0]}..{value[1]}"
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, tuple) and value and isinstance(value[0], tuple):
        return ",".join(f"{lo}-{'' if hi is None else hi}" for lo, hi in value)
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def parse_int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise ConfigError("empty integer list")
    return values


def parse_k_range(text: str) -> tuple[int, int]:
    sep = ".." if ".." in text else "-"
    try:
        lo, hi = (int(v) for v in text.split(sep))
    except ValueError:
        raise ConfigError(f"expected a range like 1..10, got {text!r}") from None
    return lo, hi


def parse_bands(text: str) -> tuple[Band, ...]:
    """``"1-7,5-12,30-"`` -> ((1, 7), (5, 12), (30, None))."""
    bands = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            band = (int(lo), int(hi) if hi.strip() else None)
        except ValueError:
            raise ConfigError(f"bad band {part!r}; expected lo-hi") from None
        if not sep or band[0] < 1 or (band[1] is not None and band[1] < band[0]):
            raise ConfigError(f"bad band {part!r}; expected lo-hi with 1 <= lo <= hi")
        bands.append(band)
    if not bands:
        raise ConfigError("no bands given")
    return tuple(bands)


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


_PARSERS = {
    "kicks": str,
    "events": str,
    "out": str,
    "abstraction": str,
    "keeper_center_policy": str,
    "min_appearances": _parse_int,
    "bootstrap_n": _parse_int,
    "seed": _parse_int,
    "segments": parse_int_list,
    "k": str,
    "k_range": parse_k_range,
    "kmeans_restarts": _parse_int,
    "standardize": parse_bool,
    "remove_outliers": _parse_int,
    "min_cluster_shots": _parse_int,
    "pooled": parse_bool,
    "sweep": parse_int_list,
    "bands": parse_bands,
    "threads": _parse_int,
}


def parse_value(key: str, text: str) -> Any:
    key = key.strip().replace("-", "_")
    if key not in _PARSERS:
        raise ConfigError(f"unknown setting {key!r}")
    return _PARSERS[key](text.strip())


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read flat ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        try:
            values[key.strip().replace("-", "_")] = parse_value(key, value)
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


def build_config(*layers: dict[str, Any]) -> RunConfig:
    """Defaults overridden by each layer in turn (later layers win)."""
    merged: dict[str, Any] = {}
    for layer in layers:
        merged.update({k: v for k, v in layer.items() if v is not None})
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


DEFAULTS = RunConfig()
