"""Penalty-kick records and action events: types, CSV I/O and filtering.

All directions are stored in the goalkeeper's frame of reference. Suppliers
holding kicker-frame data must mirror Left/Right before ingestion.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Iterator, TextIO

from .errors import CoordinateOutOfRange, DuplicateKickId, MalformedRow

KICK_COLUMNS = (
    "kick_id",
    "match_id",
    "league",
    "season",
    "kicker_id",
    "keeper_id",
    "kicker_foot",
    "shot_direction",
    "keeper_action",
    "outcome",
)
EVENT_COLUMNS = ("player_id", "action_type", "x", "y")
ROLES = ("kicker", "keeper")


class _CaseInsensitiveEnum(str, Enum):
    @classmethod
    def parse(cls, text: str):
        key = text.strip().lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValueError(f"{text!r} is not a valid {cls.__name__}")


class Foot(_CaseInsensitiveEnum):
    LEFT = "Left"
    RIGHT = "Right"


class Direction(_CaseInsensitiveEnum):
    LEFT = "Left"
    CENTER = "Center"
    RIGHT = "Right"

    def mirrored(self) -> Direction:
        if self is Direction.LEFT:
            return Direction.RIGHT
        if self is Direction.RIGHT:
            return Direction.LEFT
        return self


class Outcome(_CaseInsensitiveEnum):
    GOAL = "Goal"
    SAVED = "Saved"
    MISSED = "Missed"


class ActionType(_CaseInsensitiveEnum):
    PASS = "Pass"
    DRIBBLE = "Dribble"
    SHOT = "Shot"
    CROSS = "Cross"


@dataclass(frozen=True)
class KickRecord:
    kick_id: str
    match_id: str
    league: str
    season: str
    kicker_id: str
    keeper_id: str
    kicker_foot: Foot
    shot_direction: Direction
    keeper_action: Direction
    outcome: Outcome

    @property
    def scored(self) -> bool:
        return self.outcome is Outcome.GOAL

    def player(self, role: str) -> str:
        if role == "kicker":
            return self.kicker_id
        if role == "keeper":
            return self.keeper_id
        raise ValueError(f"unknown role {role!r}")

    def as_row(self) -> list[str]:
        return [
            self.kick_id,
            self.match_id,
            self.league,
            self.season,
            self.kicker_id,
            self.keeper_id,
            self.kicker_foot.value,
            self.shot_direction.value,
            self.keeper_action.value,
            self.outcome.value,
        ]


@dataclass(frozen=True)
class KickDataset:
    """An immutable, ordered collection of kicks.

    ``appearance_counts[role][player_id]`` is derived from ``records`` on
    construction.
    """

    records: tuple[KickRecord, ...] = ()
    appearance_counts: dict[str, dict[str, int]] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self):
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        seen: set[str] = set()
        for i, rec in enumerate(records):
            if rec.kick_id in seen:
                raise DuplicateKickId(rec.kick_id, i + 2)
            seen.add(rec.kick_id)
        counts = {
            "kicker": dict(Counter(r.kicker_id for r in records)),
            "keeper": dict(Counter(r.keeper_id for r in records)),
        }
        object.__setattr__(self, "appearance_counts", counts)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[KickRecord]:
        return iter(self.records)

    def subset(self, keep: Callable[[KickRecord], bool]) -> KickDataset:
        return KickDataset(tuple(r for r in self.records if keep(r)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        write_kick_records(self, buf)
        return buf.getvalue()


def merge_datasets(*datasets: KickDataset) -> KickDataset:
    """Concatenate datasets in order. Kick ids must stay unique."""
    return KickDataset(tuple(r for ds in datasets for r in ds.records))


@dataclass(frozen=True)
class ActionEvent:
    player_id: str
    action_type: ActionType
    x: float
    y: float


def _open_reader(source: TextIO | str) -> csv.reader:
    if isinstance(source, str):
        source = io.StringIO(source)
    return csv.reader(source)


def _check_header(header: list[str] | None, expected: tuple[str, ...]) -> None:
    if header is None:
        raise MalformedRow(1, "missing header row")
    got = tuple(h.strip().lower() for h in header)
    if got != expected:
        raise MalformedRow(1, f"header {list(got)} != {list(expected)}")


def parse_kick_records(source: TextIO | str) -> KickDataset:
    """Read ``kicks.csv`` content into a dataset, preserving row order.

    Raises MalformedRow on bad enums or missing fields and DuplicateKickId
    on repeated ids.
    """
    reader = _open_reader(source)
    _check_header(next(reader, None), KICK_COLUMNS)
    records: list[KickRecord] = []
    seen: set[str] = set()
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(KICK_COLUMNS):
            raise MalformedRow(
                line, f"expected {len(KICK_COLUMNS)} fields, got {len(row)}"
            )
        values = [cell.strip() for cell in row]
        for name, value in zip(KICK_COLUMNS[:6], values[:6]):
            if not value:
                raise MalformedRow(line, f"empty {name}")
        try:
            foot = Foot.parse(values[6])
            shot = Direction.parse(values[7])
            dive = Direction.parse(values[8])
            outcome = Outcome.parse(values[9])
        except ValueError as exc:
            raise MalformedRow(line, str(exc)) from None
        if values[0] in seen:
            raise DuplicateKickId(values[0], line)
        seen.add(values[0])
        records.append(KickRecord(*values[:6], foot, shot, dive, outcome))
    return KickDataset(tuple(records))


def write_kick_records(ds: KickDataset, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(KICK_COLUMNS)
    for rec in ds.records:
        writer.writerow(rec.as_row())


def parse_action_events(source: TextIO | str) -> list[ActionEvent]:
    reader = _open_reader(source)
    _check_header(next(reader, None), EVENT_COLUMNS)
    events: list[ActionEvent] = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(EVENT_COLUMNS):
            raise MalformedRow(line, f"expected 4 fields, got {len(row)}")
        player_id, kind, xs, ys = (cell.strip() for cell in row)
        if not player_id:
            raise MalformedRow(line, "empty player_id")
        try:
            action_type = ActionType.parse(kind)
        except ValueError as exc:
            raise MalformedRow(line, str(exc)) from None
        coords = []
        for axis, text in (("x", xs), ("y", ys)):
            try:
                value = float(text)
            except ValueError:
                raise MalformedRow(line, f"non-numeric {axis}: {text!r}") from None
            if not math.isfinite(value) or not 0.0 <= value < 1.0:
                raise CoordinateOutOfRange(line, axis, value)
            coords.append(value)
        events.append(ActionEvent(player_id, action_type, coords[0], coords[1]))
    return events


def write_action_events(events: Iterable[ActionEvent], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(EVENT_COLUMNS)
    for ev in events:
        writer.writerow([ev.player_id, ev.action_type.value, repr(ev.x), repr(ev.y)])


def filter_by_min_appearances(
    ds: KickDataset, min_count: int, roles: Iterable[str] = ROLES
) -> KickDataset:
    """Keep kicks whose players (for every role in ``roles``) appear at least
    ``min_count`` times in ``ds``. Counts come from the unfiltered dataset;
    the restriction is applied once, not iterated to a fixed point.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    roles = tuple(roles)
    for role in roles:
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
    counts = ds.appearance_counts
    return ds.subset(
        lambda r: all(counts[role][r.player(role)] >= min_count for role in roles)
    )


def filter_by_appearance_band(
    ds: KickDataset, lo: int, hi: int | None, role: str = "kicker"
) -> KickDataset:
    """Keep kicks whose ``role`` player has between ``lo`` and ``hi``
    (inclusive, ``None`` = unbounded) appearances in ``ds``."""
    if hi is not None and lo > hi:
        raise ValueError(f"empty band [{lo}, {hi}]")
    counts = ds.appearance_counts[role]

    def keep(r: KickRecord) -> bool:
        c = counts[r.player(role)]
        return c >= lo and (hi is None or c <= hi)

    return ds.subset(keep)
