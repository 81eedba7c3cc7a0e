"""Compiled uniform-random playout.

Mirrors ``sim.step`` operation for operation (including floating-point
evaluation order) so that, fed the same ``numpy.random.Generator``, it makes
the same draws and reaches the same final marine count as a playout driven
through the pure-Python simulator.
"""

from __future__ import annotations

import functools

import numpy as np
from numba import njit

from .sim import GameConfig, GameState


@njit(cache=True)
def _tick_down(queue, n):
    done = 0
    kept = 0
    for i in range(n):
        if queue[i] <= 1:
            done += 1
        else:
            queue[kept] = queue[i] - 1
            kept += 1
    return kept, done


@njit(cache=True)
def random_playout(
    rng, period, end_tick,
    t, w, r, b, p, m, c, used, wq, depots0, barracks0, marines0,
    tick_seconds, depot_supply, cap, worker_cost, depot_cost, barracks_cost,
    marine_cost, worker_time, depot_time, barracks_time, marine_time,
    mine_rate, saturation,
):
    room = max(end_tick - t, 0)
    depots = np.empty(depots0.shape[0] + room, np.int64)
    barracks = np.empty(barracks0.shape[0] + room, np.int64)
    marines = np.empty(marines0.shape[0] + room, np.int64)
    nd = depots0.shape[0]
    nb = barracks0.shape[0]
    nm = marines0.shape[0]
    depots[:nd] = depots0
    barracks[:nb] = barracks0
    marines[:nm] = marines0
    legal = np.empty(5, np.int64)
    elapsed = 0
    while t < end_tick:
        action = 0
        if elapsed % period == 0:
            k = 1
            legal[0] = 0
            idle = w - nd - nb
            if wq == 0 and c - used >= 1 and m >= worker_cost:
                legal[k] = 1
                k += 1
            if idle >= 1 and c + nd * depot_supply < cap and m >= depot_cost:
                legal[k] = 2
                k += 1
            if idle >= 1 and m >= barracks_cost:
                legal[k] = 3
                k += 1
            if r >= 1 and nm < r and c - used >= 1 and m >= marine_cost:
                legal[k] = 4
                k += 1
            action = legal[rng.integers(0, k)]

        if action == 1:
            m = m - worker_cost
            wq = worker_time
            used += 1
        elif action == 2:
            m = m - depot_cost
            depots[nd] = depot_time
            nd += 1
        elif action == 3:
            m = m - barracks_cost
            barracks[nb] = barracks_time
            nb += 1
        elif action == 4:
            m = m - marine_cost
            marines[nm] = marine_time
            nm += 1
            used += 1

        mining = max(0, min(w - nd - nb, saturation * b))
        m = m + mining * mine_rate * tick_seconds
        t += 1
        elapsed += 1
        if wq > 0:
            wq -= 1
            if wq <= 0:
                wq = 0
                w += 1
        nd, done = _tick_down(depots, nd)
        for _ in range(done):
            c = min(c + depot_supply, cap)
        nb, done = _tick_down(barracks, nb)
        r += done
        nm, done = _tick_down(marines, nm)
        p += done
    return p


@functools.lru_cache(maxsize=64)
def _config_args(config: GameConfig) -> tuple:
    return (
        float(config.tick_seconds), config.depot_supply, config.max_supply_cap,
        float(config.worker_cost), float(config.depot_cost), float(config.barracks_cost),
        float(config.marine_cost), config.worker_time, config.depot_time,
        config.barracks_time, config.marine_time, float(config.mine_rate),
        config.saturation_workers_per_base,
    )


def playout_score(
    state: GameState, rng: np.random.Generator, config: GameConfig, macro_period: int = 1
) -> int:
    """Final marine count of a uniform-random playout from ``state``."""
    return int(random_playout(
        rng, macro_period, config.episode_ticks,
        state.t, state.w, state.r, state.b, state.p, float(state.m), state.c,
        state.supply_used, state.worker_queue or 0,
        np.array(state.depot_queues, dtype=np.int64),
        np.array(state.barracks_queues, dtype=np.int64),
        np.array(state.marine_queues, dtype=np.int64),
        *_config_args(config),
    ))
