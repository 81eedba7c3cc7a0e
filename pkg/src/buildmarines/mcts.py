"""Single-player Monte-Carlo Tree Search over simulator states.

Each iteration runs select -> expand -> evaluate -> backpropagate.  Selection
uses UCB1; unvisited children have infinite priority and ties go to the
earlier action in canonical order.  Evaluation is pluggable: anything with an
``evaluate(state, rng) -> float in [0, 1]`` method can replace the default
random playout, e.g. a learned value estimator fed by ``sim.featurize``.

All randomness is drawn from the tree's ``numpy.random.Generator``, so a
search is reproducible from (seed, root state, iterations, evaluator).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import sim
from ._kernel import playout_score
from .sim import ActionKind, GameConfig, GameState


class SearchError(RuntimeError):
    pass


class TerminalRootError(SearchError):
    pass


class NoSearchPerformedError(SearchError):
    pass


class Evaluator(Protocol):
    def evaluate(self, state: GameState, rng: np.random.Generator) -> float:
        """Value of ``state`` in [0, 1]."""


class SearchNode:
    __slots__ = ("incoming_action", "state", "visits", "total_reward", "children", "untried_actions")

    def __init__(self, state: GameState, config: GameConfig, incoming_action: ActionKind | None = None):
        self.incoming_action = incoming_action
        self.state = state
        self.visits = 0
        self.total_reward = 0.0
        self.children: list[SearchNode] = []
        if sim.is_terminal(state, config):
            self.untried_actions: list[ActionKind] = []
        else:
            self.untried_actions = list(sim.legal_actions(state, config))

    @property
    def mean_reward(self) -> float:
        return self.total_reward / self.visits if self.visits else 0.0

    def __repr__(self) -> str:
        label = self.incoming_action.label if self.incoming_action is not None else "root"
        return f"SearchNode({label}, visits={self.visits}, reward={self.total_reward:.4f})"


@dataclass
class SearchTree:
    root: SearchNode
    rng: np.random.Generator
    config: GameConfig
    macro_period: int = 1

    @classmethod
    def fresh(
        cls, state: GameState, config: GameConfig, rng: np.random.Generator, macro_period: int = 1
    ) -> "SearchTree":
        return cls(SearchNode(state, config), rng, config, macro_period)

    def is_terminal(self, node: SearchNode) -> bool:
        return sim.is_terminal(node.state, self.config)


def ucb1_value(child_reward: float, child_visits: int, parent_visits: int, beta: float) -> float:
    if child_visits == 0:
        return math.inf
    return child_reward / child_visits + beta * math.sqrt(2.0 * math.log(parent_visits) / child_visits)


def _best_ucb_child(node: SearchNode, beta: float) -> SearchNode:
    best = None
    best_value = -math.inf
    for child in node.children:
        value = ucb1_value(child.total_reward, child.visits, node.visits, beta)
        if value > best_value or (value == best_value and child.incoming_action < best.incoming_action):
            best, best_value = child, value
    return best


def select(tree: SearchTree, beta: float | None = None) -> list[SearchNode]:
    """Root-to-leaf path ending at a node with untried actions or a terminal node.

    ``beta`` overrides the config's exploration weight (0 gives pure greedy descent).
    """
    if beta is None:
        beta = tree.config.exploration_beta
    node = tree.root
    path = [node]
    while not node.untried_actions and node.children:
        node = _best_ucb_child(node, beta)
        path.append(node)
    return path


def expand(node: SearchNode, rng: np.random.Generator, config: GameConfig, macro_period: int = 1) -> SearchNode:
    if sim.is_terminal(node.state, config):
        raise SearchError("cannot expand a terminal node")
    if not node.untried_actions:
        raise SearchError("node is fully expanded")
    action = node.untried_actions.pop(int(rng.integers(0, len(node.untried_actions))))
    if macro_period == 1:
        state = sim.step(node.state, action, config)
    else:
        state = sim.macro_step(node.state, action, config, macro_period)
    child = SearchNode(state, config, action)
    node.children.append(child)
    return child


def _normalized(score: int, config: GameConfig) -> float:
    return min(score / config.reward_normalizer, 1.0)


def rollout_evaluate(
    state: GameState, rng: np.random.Generator, config: GameConfig, macro_period: int = 1
) -> float:
    """Uniform-random playout to the episode end, scored in [0, 1]."""
    return _normalized(playout_score(state, rng, config, macro_period), config)


def reference_playout(
    state: GameState, rng: np.random.Generator, config: GameConfig, macro_period: int = 1
) -> int:
    """Pure-Python twin of the compiled playout; same draws, same result."""
    elapsed = 0
    while not sim.is_terminal(state, config):
        action = ActionKind.NO_OP
        if elapsed % macro_period == 0:
            legal = sim.legal_actions(state, config)
            action = legal[rng.integers(0, len(legal))]
        state = sim.step(state, action, config)
        elapsed += 1
    return sim.score(state)


class RolloutEvaluator:
    def __init__(self, config: GameConfig, macro_period: int = 1):
        self.config = config
        self.macro_period = macro_period

    def evaluate(self, state: GameState, rng: np.random.Generator) -> float:
        return rollout_evaluate(state, rng, self.config, self.macro_period)


class ReferenceRolloutEvaluator(RolloutEvaluator):
    def evaluate(self, state: GameState, rng: np.random.Generator) -> float:
        return _normalized(reference_playout(state, rng, self.config, self.macro_period), self.config)


def backpropagate(path: list[SearchNode], reward: float) -> None:
    # Single agent: every node on the path is credited with the same reward.
    for node in path:
        node.visits += 1
        node.total_reward += reward


def search(tree: SearchTree, iterations: int, evaluator: Evaluator | None = None) -> SearchTree:
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if tree.is_terminal(tree.root):
        raise TerminalRootError(f"root state at t={tree.root.state.t} is terminal")
    if evaluator is None:
        evaluator = RolloutEvaluator(tree.config, tree.macro_period)

    for _ in range(iterations):
        path = select(tree)
        leaf = path[-1]
        if not tree.is_terminal(leaf):
            leaf = expand(leaf, tree.rng, tree.config, tree.macro_period)
            path.append(leaf)
        reward = evaluator.evaluate(leaf.state, tree.rng)
        if not 0.0 <= reward <= 1.0:
            raise ValueError(f"evaluator returned {reward!r}, outside [0, 1]")
        backpropagate(path, reward)
    return tree


def best_action(root: SearchNode) -> ActionKind:
    """Most-visited child; ties go to the higher mean, then canonical order."""
    if not root.children:
        raise NoSearchPerformedError("root has no children; run search first")
    best = max(root.children, key=lambda c: (c.visits, c.mean_reward, -int(c.incoming_action)))
    return best.incoming_action


def advance_root(tree: SearchTree, action: ActionKind, observed_state: GameState) -> SearchTree:
    """Re-root at the executed action's subtree, or start over if it does not match."""
    for child in tree.root.children:
        if child.incoming_action == action and child.state == observed_state:
            child.incoming_action = None
            tree.root = child
            return tree
    tree.root = SearchNode(observed_state, tree.config)
    return tree
