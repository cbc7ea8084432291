"""Two-player normal-form games: payoffs, best responses, equilibria.

Constant-sum games are solved exactly as zero-sum linear programs with a
small dense simplex (Bland's rule). General bimatrix games are handled by
support enumeration over equal-size support pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, SolverFailure

TIE_TOL = 1e-9
PROB_TOL = 1e-9
_PIVOT_TOL = 1e-12
_MAX_COND = 1e12


def as_strategy(p, size: int | None = None) -> np.ndarray:
    """Validate ``p`` as a point of the probability simplex."""
    arr = np.asarray(p, dtype=float).ravel()
    if size is not None and arr.size != size:
        raise DimensionMismatch(f"strategy has {arr.size} entries, expected {size}")
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ValueError("strategy must be a non-empty finite vector")
    if arr.min() < -PROB_TOL or abs(arr.sum() - 1.0) > PROB_TOL:
        raise ValueError(f"not a probability vector: {arr}")
    return arr


@dataclass(frozen=True, eq=False)
class BimatrixGame:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape != B.shape:
            raise DimensionMismatch(f"A is {A.shape} but B is {B.shape}")
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise DimensionMismatch("payoff matrices must be non-empty 2-D")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @classmethod
    def constant_sum(cls, payoff, c: float = 1.0) -> BimatrixGame:
        P = np.asarray(payoff, dtype=float)
        return cls(P, c - P)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def matrix(self, player: str) -> np.ndarray:
        if player == "row":
            return self.A
        if player == "col":
            return self.B
        raise ValueError(f"player must be 'row' or 'col', got {player!r}")


@dataclass(frozen=True, eq=False)
class MixedProfile:
    """One mixed strategy per player (``row`` = kicker, ``col`` = keeper)."""

    row: np.ndarray
    col: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row", as_strategy(self.row))
        object.__setattr__(self, "col", as_strategy(self.col))

    @classmethod
    def pure(cls, shape: tuple[int, int], i: int, j: int) -> MixedProfile:
        row = np.zeros(shape[0])
        col = np.zeros(shape[1])
        row[i] = 1.0
        col[j] = 1.0
        return cls(row, col)

    def check(self, g: BimatrixGame) -> None:
        if (self.row.size, self.col.size) != g.shape:
            raise DimensionMismatch(
                f"profile is {(self.row.size, self.col.size)}, game is {g.shape}"
            )

    def allclose(self, other: MixedProfile, atol: float = 1e-9) -> bool:
        return (
            self.row.shape == other.row.shape
            and self.col.shape == other.col.shape
            and np.allclose(self.row, other.row, atol=atol, rtol=0)
            and np.allclose(self.col, other.col, atol=atol, rtol=0)
        )

    def to_dict(self) -> dict:
        return {"row": self.row.tolist(), "col": self.col.tolist()}


@dataclass(frozen=True)
class EpsilonReport:
    epsilon: float
    row_gain: float
    col_gain: float

    @property
    def per_player_gain(self) -> tuple[float, float]:
        return (self.row_gain, self.col_gain)

    @property
    def mean_gain(self) -> float:
        return 0.5 * (self.row_gain + self.col_gain)


def expected_payoff(g: BimatrixGame, p: MixedProfile, player: str) -> float:
    p.check(g)
    return float(p.row @ g.matrix(player) @ p.col)


def best_response_value(
    g: BimatrixGame, player: str, opponent
) -> tuple[float, tuple[int, ...]]:
    """Best pure-action payoff against ``opponent`` and every maximiser."""
    M = g.matrix(player)
    if player == "row":
        opp = as_strategy(opponent, M.shape[1])
        payoffs = M @ opp
    else:
        opp = as_strategy(opponent, M.shape[0])
        payoffs = opp @ M
    value = float(payoffs.max())
    argmax = tuple(int(i) for i in np.flatnonzero(payoffs >= value - TIE_TOL))
    return value, argmax


def epsilon_of_profile(g: BimatrixGame, p: MixedProfile) -> EpsilonReport:
    p.check(g)
    row_br, _ = best_response_value(g, "row", p.col)
    col_br, _ = best_response_value(g, "col", p.row)
    row_gain = max(0.0, row_br - expected_payoff(g, p, "row"))
    col_gain = max(0.0, col_br - expected_payoff(g, p, "col"))
    return EpsilonReport(max(row_gain, col_gain), row_gain, col_gain)


def _simplex_max(c: np.ndarray, M: np.ndarray, b: np.ndarray):
    """Maximise ``c @ w`` subject to ``M @ w <= b``, ``w >= 0``, ``b >= 0``.

    Returns (w, duals, value). Bland's rule for both entering and leaving
    variables, so the method cannot cycle on degenerate vertices.
    """
    m, n = M.shape
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = M
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = c
    basis = list(range(n, n + m))

    max_pivots = 50 * (n + m) ** 2
    for _ in range(max_pivots):
        reduced = T[m, :-1]
        entering = next((j for j in range(n + m) if reduced[j] > _PIVOT_TOL), None)
        if entering is None:
            break
        column = T[:m, entering]
        leaving = None
        best_ratio = np.inf
        for i in range(m):
            if column[i] <= _PIVOT_TOL:
                continue
            ratio = T[i, -1] / column[i]
            if ratio < best_ratio - _PIVOT_TOL or (
                abs(ratio - best_ratio) <= _PIVOT_TOL and basis[i] < basis[leaving]
            ):
                best_ratio = ratio
                leaving = i
        if leaving is None:
            raise SolverFailure("linear program is unbounded")
        T[leaving] /= T[leaving, entering]
        for i in range(m + 1):
            if i != leaving and T[i, entering] != 0.0:
                T[i] -= T[i, entering] * T[leaving]
        basis[leaving] = entering
    else:
        raise SolverFailure("simplex exceeded pivot limit")

    x = np.zeros(n + m)
    x[basis] = T[:m, -1]
    return x[:n], -T[m, n : n + m], -T[m, -1]


def _normalise(v: np.ndarray) -> np.ndarray:
    v = np.where(v < 0.0, 0.0, v)
    return v / v.sum()


def solve_constant_sum(payoff, c: float = 1.0) -> tuple[MixedProfile, float]:
    """Equilibrium of the constant-sum game where the row player receives
    ``payoff[i, j]`` and the column player ``c - payoff[i, j]``.

    Returns the profile and the row player's guaranteed payoff.
    """
    P = np.atleast_2d(np.asarray(payoff, dtype=float))
    if P.ndim != 2 or P.size == 0:
        raise DimensionMismatch("payoff must be a non-empty matrix")
    if not np.all(np.isfinite(P)):
        raise ValueError("payoff entries must be finite")

    # Shift so every entry is >= 1; the game value is then strictly positive.
    shift = 1.0 - P.min()
    Ap = P + shift
    m, n = Ap.shape
    w, u, total = _simplex_max(np.ones(n), Ap, np.ones(m))
    if total <= 0:
        raise SolverFailure("degenerate LP optimum")
    profile = MixedProfile(_normalise(u), _normalise(w))
    value = float(profile.row @ P @ profile.col)

    eps = epsilon_of_profile(BimatrixGame.constant_sum(P, c), profile)
    if eps.epsilon > 1e-8:
        raise SolverFailure(f"LP solution is not an equilibrium (eps={eps.epsilon})")
    return profile, value


@dataclass(frozen=True, eq=False)
class Equilibrium:
    profile: MixedProfile
    row_payoff: float
    col_payoff: float
    row_support: tuple[int, ...]
    col_support: tuple[int, ...]

    @property
    def payoffs(self) -> tuple[float, float]:
        return (self.row_payoff, self.col_payoff)


@dataclass
class SupportEnumeration:
    """Result of :func:`solve_support_enumeration`.

    Iterating yields the equilibria. ``skipped`` lists support pairs whose
    indifference systems were singular; a non-empty list marks the game as
    degenerate.
    """

    equilibria: list[Equilibrium] = field(default_factory=list)
    skipped: list[tuple[tuple[int, ...], tuple[int, ...]]] = field(
        default_factory=list
    )

    @property
    def degenerate(self) -> bool:
        return bool(self.skipped)

    def __iter__(self) -> Iterator[Equilibrium]:
        return iter(self.equilibria)

    def __len__(self) -> int:
        return len(self.equilibria)

    def __getitem__(self, i: int) -> Equilibrium:
        return self.equilibria[i]


def _indifference(M: np.ndarray) -> np.ndarray | None:
    """Solve ``M @ z = v * 1``, ``sum(z) = 1`` for ``z`` (``None`` if singular)."""
    k = M.shape[0]
    S = np.zeros((k + 1, k + 1))
    S[:k, :k] = M
    S[:k, k] = -1.0
    S[k, :k] = 1.0
    if np.linalg.cond(S) > _MAX_COND:
        return None
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    return np.linalg.solve(S, rhs)[:k]


def solve_support_enumeration(g: BimatrixGame, max_size: int = 5) -> SupportEnumeration:
    m, n = g.shape
    if max(m, n) > max_size:
        raise ValueError(f"game {g.shape} exceeds max_size={max_size}")
    A, B = g.A, g.B
    result = SupportEnumeration()
    for k in range(1, min(m, n) + 1):
        for I in itertools.combinations(range(m), k):
            for J in itertools.combinations(range(n), k):
                y_s = _indifference(A[np.ix_(I, J)])
                x_s = _indifference(B[np.ix_(I, J)].T)
                if y_s is None or x_s is None:
                    result.skipped.append((I, J))
                    continue
                if y_s.min() < -PROB_TOL or x_s.min() < -PROB_TOL:
                    continue
                x = np.zeros(m)
                y = np.zeros(n)
                x[list(I)] = x_s
                y[list(J)] = y_s
                x, y = _normalise(x), _normalise(y)
                row_payoffs = A @ y
                col_payoffs = x @ B
                v_row = float(x @ row_payoffs)
                v_col = float(col_payoffs @ y)
                if row_payoffs.max() > v_row + TIE_TOL:
                    continue
                if col_payoffs.max() > v_col + TIE_TOL:
                    continue
                profile = MixedProfile(x, y)
                if any(e.profile.allclose(profile) for e in result.equilibria):
                    continue
                result.equilibria.append(Equilibrium(profile, v_row, v_col, I, J))
    return result


def select_headline(equilibria: Sequence[Equilibrium]) -> Equilibrium:
    """The equilibrium with the highest row payoff; earlier (lexicographic
    support order) wins ties."""
    if not equilibria:
        raise SolverFailure("no equilibrium to select from")
    best = equilibria[0]
    for eq in equilibria[1:]:
        if eq.row_payoff > best.row_payoff + TIE_TOL:
            best = eq
    return best
