"""Episode runner: search, act, re-root, repeat until the clock runs out."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import mcts, sim
from .sim import ActionKind, GameConfig, GameState


@dataclass(frozen=True)
class StepStats:
    root_visits: int
    chosen_action: ActionKind
    root_children_means: tuple[tuple[ActionKind, float], ...]


@dataclass
class EpisodeResult:
    final_score: int
    action_trace: list[tuple[int, ActionKind]]
    seed: int
    iterations_per_step: int
    wall_time: float
    tree_reuse: bool = True
    per_step_stats: list[StepStats] = field(default_factory=list, repr=False)


def episode_rng(seed: int, iterations: int) -> np.random.Generator:
    # Keyed on (seed, iterations): sweep points never share or perturb a stream.
    return np.random.default_rng(np.random.SeedSequence([seed, iterations]))


def run_episode(
    config: GameConfig,
    iterations_per_step: int,
    seed: int,
    tree_reuse: bool = True,
    evaluator: mcts.Evaluator | None = None,
) -> EpisodeResult:
    if iterations_per_step < 1:
        raise ValueError("iterations_per_step must be >= 1")
    started = time.perf_counter()
    rng = episode_rng(seed, iterations_per_step)
    state = sim.new_game(config)
    tree = mcts.SearchTree.fresh(state, config, rng)
    trace: list[tuple[int, ActionKind]] = []
    stats: list[StepStats] = []

    while not sim.is_terminal(state, config):
        mcts.search(tree, iterations_per_step, evaluator)
        action = mcts.best_action(tree.root)
        stats.append(StepStats(
            root_visits=tree.root.visits,
            chosen_action=action,
            root_children_means=tuple((c.incoming_action, c.mean_reward) for c in tree.root.children),
        ))
        trace.append((state.t, action))
        state = sim.step(state, action, config)
        if tree_reuse:
            mcts.advance_root(tree, action, state)
        else:
            tree = mcts.SearchTree.fresh(state, config, rng)

    return EpisodeResult(
        final_score=sim.score(state),
        action_trace=trace,
        seed=seed,
        iterations_per_step=iterations_per_step,
        wall_time=time.perf_counter() - started,
        tree_reuse=tree_reuse,
        per_step_stats=stats,
    )


def _sweep_point(args: tuple) -> EpisodeResult:
    return run_episode(*args)


def run_sweep(
    config: GameConfig,
    iteration_limits: Sequence[int],
    seed: int,
    tree_reuse: bool = True,
    jobs: int = 1,
) -> list[EpisodeResult]:
    """One episode per iteration limit, returned in input order."""
    if not iteration_limits:
        raise ValueError("iteration_limits must be nonempty")
    work = [(config, limit, seed, tree_reuse) for limit in iteration_limits]
    if jobs <= 1:
        return [_sweep_point(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_point, work))


def run_random_baseline(config: GameConfig, seed: int) -> EpisodeResult:
    """Uniform choice among legal actions every tick; no search."""
    started = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    state = sim.new_game(config)
    trace = []
    while not sim.is_terminal(state, config):
        legal = sim.legal_actions(state, config)
        action = legal[rng.integers(0, len(legal))]
        trace.append((state.t, action))
        state = sim.step(state, action, config)
    return EpisodeResult(
        final_score=sim.score(state),
        action_trace=trace,
        seed=seed,
        iterations_per_step=0,
        wall_time=time.perf_counter() - started,
        tree_reuse=False,
    )


def replay(config: GameConfig, trace: Iterable[tuple[int, ActionKind]]) -> GameState:
    """Re-simulate an action trace from a new game and return the final state."""
    state = sim.new_game(config)
    for tick, action in trace:
        if tick != state.t:
            raise ValueError(f"trace entry for tick {tick} found at t={state.t}")
        state = sim.step(state, action, config)
    return state
