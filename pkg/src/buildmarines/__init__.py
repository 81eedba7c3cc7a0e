"""BuildMarines build-order simulator and Monte-Carlo Tree Search planner."""

from .sim import ActionKind, GameConfig, GameState, new_game, step
from .mcts import SearchTree, best_action, search
from .planner import EpisodeResult, run_episode, run_random_baseline, run_sweep

__all__ = [
    "ActionKind", "GameConfig", "GameState", "new_game", "step",
    "SearchTree", "best_action", "search",
    "EpisodeResult", "run_episode", "run_random_baseline", "run_sweep",
]
