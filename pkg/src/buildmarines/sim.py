"""Fixed-timestep model of the BuildMarines economy.

States are immutable; every transition returns a new :class:`GameState`.
One tick is one decision: :func:`step` applies an action and then advances
the clock, income and production queues by a single tick.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Any, Mapping

import numpy as np


class ConfigError(ValueError):
    """Raised for an invalid :class:`GameConfig`."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class IllegalActionError(ValueError):
    """An action was applied while one of its gates was closed.

    ``gate`` is one of ``"funds"``, ``"supply"``, ``"prerequisite"`` or
    ``"queue-full"``.
    """

    def __init__(self, action: "ActionKind", gate: str):
        super().__init__(f"{action.label} is illegal: {gate} gate closed")
        self.action = action
        self.gate = gate


class TerminalStateError(RuntimeError):
    pass


class ActionKind(IntEnum):
    # Values fix the canonical order used for every tie-break.
    NO_OP = 0
    TRAIN_WORKER = 1
    BUILD_SUPPLY = 2
    BUILD_BARRACKS = 3
    TRAIN_MARINE = 4

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "ActionKind":
        for action, name in _LABELS.items():
            if name == label:
                return action
        raise ValueError(f"unknown action {label!r}")


_LABELS = {
    ActionKind.NO_OP: "NoOp",
    ActionKind.TRAIN_WORKER: "TrainWorker",
    ActionKind.BUILD_SUPPLY: "BuildSupply",
    ActionKind.BUILD_BARRACKS: "BuildBarracks",
    ActionKind.TRAIN_MARINE: "TrainMarine",
}

_INT_FIELDS = (
    "episode_ticks", "start_workers", "start_bases", "base_supply", "depot_supply",
    "max_supply_cap", "worker_time", "depot_time", "barracks_time", "marine_time",
    "saturation_workers_per_base",
)


@dataclass(frozen=True)
class GameConfig:
    """Economy and timing constants.

    Times are in ticks, costs in minerals, ``mine_rate`` in minerals per
    mining worker per game-second.
    """

    tick_seconds: float = 1 / 3
    episode_ticks: int = 1800
    start_workers: int = 12
    start_minerals: float = 50.0
    start_bases: int = 1
    base_supply: int = 15
    depot_supply: int = 8
    max_supply_cap: int = 400
    worker_cost: float = 50.0
    depot_cost: float = 100.0
    barracks_cost: float = 150.0
    marine_cost: float = 50.0
    worker_time: int = 51
    depot_time: int = 63
    barracks_time: int = 138
    marine_time: int = 18
    mine_rate: float = 0.7
    saturation_workers_per_base: int = 16
    exploration_beta: float = 1 / math.sqrt(2)
    reward_normalizer: float = 150.0

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name in _INT_FIELDS:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f.name, f"expected an integer, got {value!r}")
            elif isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f.name, f"expected a number, got {value!r}")
            elif not math.isfinite(value):
                raise ConfigError(f.name, f"must be finite, got {value!r}")

        nonnegative = {"start_workers", "start_minerals"}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name in nonnegative:
                if value < 0:
                    raise ConfigError(f.name, f"must be >= 0, got {value!r}")
            elif value <= 0:
                raise ConfigError(f.name, f"must be > 0, got {value!r}")

        if self.exploration_beta > 1:
            raise ConfigError("exploration_beta", "must lie in (0, 1]")
        if self.base_supply > self.max_supply_cap:
            raise ConfigError("base_supply", "exceeds max_supply_cap")
        if self.start_bases * self.base_supply > self.max_supply_cap:
            raise ConfigError("start_bases", "starting supply exceeds max_supply_cap")
        if self.start_workers > self.start_bases * self.base_supply:
            raise ConfigError("start_workers", "exceeds starting supply capacity")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "GameConfig":
        """Build a config from a flat mapping; absent keys keep their defaults."""
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown configuration key")
        return cls(**dict(data))

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class GameState:
    """Abstract game state.

    The scalar timers of the abstract representation (time until the next
    worker, depot, barracks, marine) are exposed as the minimum over the
    corresponding queue, 0 when the queue is empty.  Each pending construction
    (depot or barracks) occupies one worker, who does not mine.
    """

    t: int
    w: int
    r: int
    b: int
    p: int
    m: float
    c: int
    supply_used: int
    worker_queue: int | None = None
    depot_queues: tuple[int, ...] = ()
    barracks_queues: tuple[int, ...] = ()
    marine_queues: tuple[int, ...] = ()
    minerals_mined_total: float = 0.0
    minerals_spent_total: float = 0.0

    @property
    def supply_remaining(self) -> int:
        return self.c - self.supply_used

    @property
    def builders(self) -> int:
        return len(self.depot_queues) + len(self.barracks_queues)

    @property
    def idle_workers(self) -> int:
        return self.w - self.builders

    @property
    def w_t(self) -> int:
        return self.worker_queue or 0

    @property
    def s_t(self) -> int:
        return min(self.depot_queues, default=0)

    @property
    def b_t(self) -> int:
        return min(self.barracks_queues, default=0)

    @property
    def p_t(self) -> int:
        return min(self.marine_queues, default=0)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        for key in ("depot_queues", "barracks_queues", "marine_queues"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "GameState":
        d = dict(data)
        for key in ("depot_queues", "barracks_queues", "marine_queues"):
            if key in d:
                d[key] = tuple(int(x) for x in d[key])
        return cls(**d)


def new_game(config: GameConfig) -> GameState:
    return GameState(
        t=0,
        w=config.start_workers,
        r=0,
        b=config.start_bases,
        p=0,
        m=float(config.start_minerals),
        c=config.start_bases * config.base_supply,
        supply_used=config.start_workers,
    )


def closed_gate(state: GameState, action: ActionKind, config: GameConfig) -> str | None:
    """Name of the first gate blocking ``action``, or None if it is legal."""
    if action is ActionKind.NO_OP:
        return None
    if action is ActionKind.TRAIN_WORKER:
        if state.worker_queue is not None:
            return "queue-full"
        if state.supply_remaining < 1:
            return "supply"
        if state.m < config.worker_cost:
            return "funds"
        return None
    if action is ActionKind.BUILD_SUPPLY:
        if state.idle_workers < 1:
            return "prerequisite"
        pending = len(state.depot_queues) * config.depot_supply
        if state.c + pending >= config.max_supply_cap:
            return "supply"
        if state.m < config.depot_cost:
            return "funds"
        return None
    if action is ActionKind.BUILD_BARRACKS:
        if state.idle_workers < 1:
            return "prerequisite"
        if state.m < config.barracks_cost:
            return "funds"
        return None
    if action is ActionKind.TRAIN_MARINE:
        if state.r < 1:
            return "prerequisite"
        if len(state.marine_queues) >= state.r:
            return "queue-full"
        if state.supply_remaining < 1:
            return "supply"
        if state.m < config.marine_cost:
            return "funds"
        return None
    raise ValueError(f"not an action: {action!r}")


def legal_actions(state: GameState, config: GameConfig) -> tuple[ActionKind, ...]:
    """Legal actions in canonical order; NO_OP is always among them."""
    return tuple(a for a in ActionKind if closed_gate(state, a, config) is None)


def apply_action(state: GameState, action: ActionKind, config: GameConfig) -> GameState:
    """Pay for ``action`` and enqueue its product.  The clock does not move."""
    action = ActionKind(action)
    gate = closed_gate(state, action, config)
    if gate is not None:
        raise IllegalActionError(action, gate)

    if action is ActionKind.NO_OP:
        return state
    if action is ActionKind.TRAIN_WORKER:
        cost = config.worker_cost
        changes = dict(worker_queue=config.worker_time, supply_used=state.supply_used + 1)
    elif action is ActionKind.BUILD_SUPPLY:
        cost = config.depot_cost
        changes = dict(depot_queues=state.depot_queues + (config.depot_time,))
    elif action is ActionKind.BUILD_BARRACKS:
        cost = config.barracks_cost
        changes = dict(barracks_queues=state.barracks_queues + (config.barracks_time,))
    else:
        cost = config.marine_cost
        changes = dict(
            marine_queues=state.marine_queues + (config.marine_time,),
            supply_used=state.supply_used + 1,
        )
    return dataclasses.replace(
        state,
        m=state.m - cost,
        minerals_spent_total=state.minerals_spent_total + cost,
        **changes,
    )


def _tick_queue(queue: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
    remaining = tuple(x - 1 for x in queue if x > 1)
    return remaining, len(queue) - len(remaining)


def advance_tick(state: GameState, config: GameConfig) -> GameState:
    """Advance one tick: mine, count down every queue, deliver finished items."""
    if is_terminal(state, config):
        raise TerminalStateError(f"state at t={state.t} is terminal")

    mining = max(0, min(state.idle_workers, config.saturation_workers_per_base * state.b))
    income = mining * config.mine_rate * config.tick_seconds

    w = state.w
    worker_queue = state.worker_queue
    if worker_queue is not None:
        worker_queue -= 1
        if worker_queue <= 0:
            worker_queue = None
            w += 1

    depots, depots_done = _tick_queue(state.depot_queues)
    barracks, barracks_done = _tick_queue(state.barracks_queues)
    marines, marines_done = _tick_queue(state.marine_queues)

    c = state.c
    for _ in range(depots_done):
        c = min(c + config.depot_supply, config.max_supply_cap)

    return dataclasses.replace(
        state,
        t=state.t + 1,
        w=w,
        r=state.r + barracks_done,
        p=state.p + marines_done,
        m=state.m + income,
        c=c,
        worker_queue=worker_queue,
        depot_queues=depots,
        barracks_queues=barracks,
        marine_queues=marines,
        minerals_mined_total=state.minerals_mined_total + income,
    )


def step(state: GameState, action: ActionKind, config: GameConfig) -> GameState:
    if is_terminal(state, config):
        raise TerminalStateError(f"state at t={state.t} is terminal")
    return advance_tick(apply_action(state, action, config), config)


def macro_step(state: GameState, action: ActionKind, config: GameConfig, ticks: int) -> GameState:
    """Issue ``action`` once, then let ``ticks - 1`` further ticks pass idle."""
    state = step(state, action, config)
    for _ in range(ticks - 1):
        state = step(state, ActionKind.NO_OP, config)
    return state


def is_terminal(state: GameState, config: GameConfig) -> bool:
    return state.t >= config.episode_ticks


def score(state: GameState) -> int:
    return state.p


def featurize(state: GameState) -> np.ndarray:
    """12-vector: w, r, b, p, s, m, c, t, w_t, s_t, b_t, p_t."""
    return np.array(
        [
            state.w, state.r, state.b, state.p, state.supply_remaining, state.m,
            state.c, state.t, state.w_t, state.s_t, state.b_t, state.p_t,
        ],
        dtype=np.float64,
    )
