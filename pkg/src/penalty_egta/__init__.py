"""Empirical game-theoretic analysis of penalty kicks."""

from __future__ import annotations

__version__ = "0.1.0"

from .data import KickDataset, KickRecord, parse_action_events, parse_kick_records
from .games import ActionAbstraction, EmpiricalGame, bootstrap_nash, build_empirical_game
from .nash import MixedProfile, epsilon_of_profile, solve_constant_sum, solve_support_enumeration
from .stats import game_jsd, jsd, welch_t_test

__all__ = [
    "ActionAbstraction",
    "EmpiricalGame",
    "KickDataset",
    "KickRecord",
    "MixedProfile",
    "bootstrap_nash",
    "build_empirical_game",
    "epsilon_of_profile",
    "game_jsd",
    "jsd",
    "parse_action_events",
    "parse_kick_records",
    "solve_constant_sum",
    "solve_support_enumeration",
    "welch_t_test",
]
