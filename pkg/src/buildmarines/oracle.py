"""Exhaustive enumeration of action sequences on tiny instances.

Only legal actions are enumerated at each decision point.  Decisions are
spaced ``macro_period`` ticks apart: the chosen action is issued once and the
remaining ticks of the period pass idle (see ``sim.macro_step``).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterator, NamedTuple

from . import sim
from .sim import ActionKind, GameConfig, GameState

MAX_HORIZON_TICKS = 600
DEFAULT_NODE_BUDGET = 5**12


class BudgetExceededError(ValueError):
    def __init__(self, required: int, budget: int):
        super().__init__(f"query needs up to {required} leaves, budget is {budget}")
        self.required = required
        self.budget = budget


@dataclass(frozen=True)
class OracleQuery:
    start_state: GameState
    horizon_ticks: int
    macro_period: int = 1

    @property
    def decisions(self) -> int:
        return self.horizon_ticks // self.macro_period

    def validate(self, node_budget: int = DEFAULT_NODE_BUDGET) -> None:
        if not 1 <= self.horizon_ticks <= MAX_HORIZON_TICKS:
            raise ValueError(f"horizon_ticks must lie in [1, {MAX_HORIZON_TICKS}]")
        if self.macro_period < 1 or self.horizon_ticks % self.macro_period:
            raise ValueError("macro_period must divide horizon_ticks")
        required = len(ActionKind) ** self.decisions
        if required > node_budget:
            raise BudgetExceededError(required, node_budget)

    def episode_config(self, config: GameConfig) -> GameConfig:
        """``config`` with the episode ending at the query horizon."""
        return dataclasses.replace(config, episode_ticks=self.start_state.t + self.horizon_ticks)


class OracleResult(NamedTuple):
    best_score: int
    best_sequence: tuple[ActionKind, ...]


def enumerate_sequences(
    query: OracleQuery, config: GameConfig, node_budget: int = DEFAULT_NODE_BUDGET
) -> Iterator[tuple[tuple[ActionKind, ...], int]]:
    """Yield (sequence, final score) for every legal sequence, lexicographically."""
    query.validate(node_budget)
    cfg = query.episode_config(config)

    def walk(state: GameState, prefix: tuple[ActionKind, ...], left: int):
        if left == 0:
            yield prefix, sim.score(state)
            return
        for action in sim.legal_actions(state, cfg):
            nxt = sim.macro_step(state, action, cfg, query.macro_period)
            yield from walk(nxt, prefix + (action,), left - 1)

    yield from walk(query.start_state, (), query.decisions)


def exhaustive_best(
    query: OracleQuery, config: GameConfig, node_budget: int = DEFAULT_NODE_BUDGET
) -> OracleResult:
    """Best score at the horizon and the lexicographically first sequence reaching it."""
    best = None
    for seq, value in enumerate_sequences(query, config, node_budget):
        # Strict comparison keeps the earliest optimum in canonical order.
        if best is None or value > best.best_score:
            best = OracleResult(value, seq)
    return best


def count_leaves(query: OracleQuery, config: GameConfig, node_budget: int = DEFAULT_NODE_BUDGET) -> int:
    return sum(1 for _ in enumerate_sequences(query, config, node_budget))


def best_after(
    query: OracleQuery, first_action: ActionKind, config: GameConfig,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> int:
    """Best horizon score among sequences that open with ``first_action``."""
    cfg = query.episode_config(config)
    nxt = sim.macro_step(query.start_state, first_action, cfg, query.macro_period)
    if query.decisions == 1:
        return sim.score(nxt)
    rest = OracleQuery(nxt, query.horizon_ticks - query.macro_period, query.macro_period)
    return exhaustive_best(rest, config, node_budget).best_score
