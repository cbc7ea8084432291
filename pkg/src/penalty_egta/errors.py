"""Exception hierarchy shared by the toolkit."""

from __future__ import annotations


class PenaltyError(Exception):
    """Base class for all toolkit errors."""


class DataError(PenaltyError):
    """Input data could not be used (exit code 2 at the CLI)."""


class MalformedRow(DataError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateKickId(DataError):
    def __init__(self, kick_id: str, line: int):
        super().__init__(f"line {line}: duplicate kick_id {kick_id!r}")
        self.kick_id = kick_id
        self.line = line


class CoordinateOutOfRange(DataError):
    def __init__(self, line: int, axis: str, value: float):
        super().__init__(f"line {line}: {axis}={value} outside [0, 1)")
        self.line = line
        self.axis = axis
        self.value = value


class InvalidSpec(DataError):
    pass


class EmptyDataset(DataError):
    pass


class MissingData(DataError):
    """A statistic is undefined for the given sample (rendered as "<" / "—")."""

    def __init__(self, reason: str, group: str | None = None):
        super().__init__(reason if group is None else f"{group}: {reason}")
        self.reason = reason
        self.group = group


class MissingActionType(DataError):
    def __init__(self, action_type: str, players: list[str]):
        super().__init__(
            f"no {action_type} events; affected players: {len(players)}"
        )
        self.action_type = action_type
        self.players = players


class EmptyCluster(DataError):
    pass


class NumericError(PenaltyError):
    """Numerical failure (exit code 3 at the CLI)."""


class SolverFailure(NumericError):
    pass


class InvalidRank(NumericError, ValueError):
    pass


class AllZeroMatrix(NumericError, ValueError):
    pass


class InvalidK(NumericError, ValueError):
    pass


class InvalidRange(NumericError, ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class ConfigError(PenaltyError):
    """Bad configuration (exit code 4 at the CLI)."""
