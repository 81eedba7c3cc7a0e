import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from buildmarines import mcts, oracle, sim
from buildmarines._kernel import playout_score
from buildmarines.mcts import SearchNode, SearchTree
from buildmarines.sim import ActionKind as A
from buildmarines.sim import GameConfig

CFG = GameConfig()
START = sim.new_game(CFG)


def rng(seed=0):
    return np.random.default_rng(seed)


def walk_nodes(node):
    yield node
    for child in node.children:
        yield from walk_nodes(child)


def root_with_children(stats, state=START, config=CFG):
    """Fully expanded root whose children carry (action, visits, total_reward)."""
    root = SearchNode(state, config)
    for action, visits, reward in stats:
        child = SearchNode(sim.step(state, action, config), config, action)
        child.visits, child.total_reward = visits, reward
        root.children.append(child)
        root.untried_actions.remove(action)
    root.visits = 1 + sum(v for _, v, _ in stats)
    return SearchTree(root, rng(), config)


class TestUcb1:
    def test_hand_value(self):
        assert mcts.ucb1_value(1.0, 1, 2, 1.0) == pytest.approx(2.177410, abs=1e-4)
        assert mcts.ucb1_value(1.0, 1, 2, 1.0) == pytest.approx(1 + math.sqrt(2 * math.log(2)), abs=1e-12)

    @pytest.mark.parametrize("beta", [0.0, 0.7, 1.0, 5.0])
    def test_single_parent_visit_has_no_bonus(self, beta):
        assert mcts.ucb1_value(0.5, 1, 1, beta) == 0.5

    @pytest.mark.parametrize("x, n", [(0.0, 1), (3.0, 10), (0.0, 1000)])
    def test_unvisited_is_infinite(self, x, n):
        assert mcts.ucb1_value(x, 0, n, 0.3) == math.inf

    def test_increasing_in_reward(self):
        for n_i in (1, 2, 5, 20):
            for n in (n_i, 2 * n_i, 100):
                for beta in (0.0, 1 / math.sqrt(2), 1.0):
                    values = [mcts.ucb1_value(x, n_i, n, beta) for x in np.linspace(0, n_i, 11)]
                    assert all(a < b for a, b in zip(values, values[1:]))

    def test_decreasing_in_visits(self):
        for n in (50, 200):
            for beta in (0.0, 1 / math.sqrt(2), 1.0):
                for x in (0.5, 1.0, 3.0):
                    values = [mcts.ucb1_value(x, n_i, n, beta) for n_i in range(1, 40)]
                    assert all(a > b for a, b in zip(values, values[1:]))


class TestSelect:
    def test_fresh_root(self):
        tree = SearchTree.fresh(START, CFG, rng())
        assert mcts.select(tree) == [tree.root]

    def test_unvisited_child_wins(self):
        tree = root_with_children([(A.NO_OP, 5, 4.9), (A.TRAIN_WORKER, 0, 0.0)])
        path = mcts.select(tree)
        assert path[0] is tree.root and path[1].incoming_action == A.TRAIN_WORKER

    def test_ties_go_to_canonical_order(self):
        # TrainWorker is listed first so insertion order cannot explain the result
        tree = root_with_children([(A.TRAIN_WORKER, 3, 1.5), (A.NO_OP, 3, 1.5)])
        assert mcts.select(tree)[1].incoming_action == A.NO_OP

    def test_beta_zero_picks_best_mean(self):
        tree = root_with_children([(A.NO_OP, 1, 0.2), (A.TRAIN_WORKER, 9, 2.7)])
        assert mcts.select(tree, beta=0.0)[1].incoming_action == A.TRAIN_WORKER
        # with exploration the rarely visited child takes over
        assert mcts.select(tree, beta=1.0)[1].incoming_action == A.NO_OP

    @given(st.lists(st.tuples(st.integers(1, 50), st.floats(0, 1)), min_size=2, max_size=2))
    def test_beta_zero_is_mean_argmax(self, counts):
        stats = [(a, v, v * frac) for a, (v, frac) in zip((A.NO_OP, A.TRAIN_WORKER), counts)]
        tree = root_with_children(stats)
        chosen = mcts.select(tree, beta=0.0)[1]
        assert chosen.mean_reward == max(c.mean_reward for c in tree.root.children)

    def test_stops_at_terminal(self):
        cfg = dataclasses.replace(CFG, episode_ticks=1)
        tree = SearchTree.fresh(START, cfg, rng())
        mcts.search(tree, 10)
        for _ in range(5):
            assert tree.is_terminal(mcts.select(tree)[-1])


class TestExpand:
    def test_singleton(self):
        state = dataclasses.replace(START, m=0.0, worker_queue=10)
        node = SearchNode(state, CFG)
        assert node.untried_actions == [A.NO_OP]
        child = mcts.expand(node, rng(), CFG)
        assert child.incoming_action == A.NO_OP and node.untried_actions == []
        assert node.children == [child] and child.visits == 0 and child.total_reward == 0

    def test_seeded_choice_is_reproducible(self):
        picks = {mcts.expand(SearchNode(START, CFG), rng(42), CFG).incoming_action for _ in range(5)}
        assert len(picks) == 1
        seen = {mcts.expand(SearchNode(START, CFG), rng(s), CFG).incoming_action for s in range(40)}
        assert seen == {A.NO_OP, A.TRAIN_WORKER}

    def test_child_state(self):
        node = SearchNode(START, CFG)
        node.untried_actions = [A.TRAIN_WORKER]
        child = mcts.expand(node, rng(), CFG)
        assert child.state.m == pytest.approx(2.8)
        assert child.untried_actions == list(sim.legal_actions(child.state, CFG))

    def test_refuses_terminal_and_exhausted(self):
        with pytest.raises(mcts.SearchError):
            mcts.expand(SearchNode(dataclasses.replace(START, t=1800), CFG), rng(), CFG)
        node = SearchNode(START, CFG)
        node.untried_actions = []
        with pytest.raises(mcts.SearchError):
            mcts.expand(node, rng(), CFG)


class TestRollout:
    def test_terminal_scores(self):
        assert mcts.rollout_evaluate(dataclasses.replace(START, t=1800, p=84), rng(), CFG) == pytest.approx(0.56)
        assert mcts.rollout_evaluate(dataclasses.replace(START, t=1800, p=0), rng(), CFG) == 0.0
        assert mcts.rollout_evaluate(dataclasses.replace(START, t=1800, p=400), rng(), CFG) == 1.0

    def test_last_tick_without_barracks(self):
        state = dataclasses.replace(START, t=1799, m=1000.0)
        for action in sim.legal_actions(state, CFG):
            assert sim.score(sim.step(state, action, CFG)) == 0
        for seed in range(10):
            assert mcts.rollout_evaluate(state, rng(seed), CFG) == 0.0

    @pytest.mark.parametrize("period", [1, 3, 7])
    def test_kernel_matches_reference(self, period):
        cfg = dataclasses.replace(CFG, episode_ticks=600)
        states = [START, dataclasses.replace(START, m=400.0, r=2, w=20, supply_used=20, c=40)]
        for state in states:
            for seed in range(6):
                a, b = rng(seed), rng(seed)
                fast = playout_score(state, a, cfg, period)
                slow = mcts.reference_playout(state, b, cfg, period)
                assert fast == slow
                assert a.bit_generator.state == b.bit_generator.state

    def test_evaluators_agree_in_search(self):
        cfg = dataclasses.replace(CFG, episode_ticks=300)
        t1 = mcts.search(SearchTree.fresh(START, cfg, rng(5)), 40)
        t2 = mcts.search(SearchTree.fresh(START, cfg, rng(5)), 40, mcts.ReferenceRolloutEvaluator(cfg))
        assert snapshot(t1.root) == snapshot(t2.root)


def snapshot(node):
    return (node.incoming_action, node.visits, node.total_reward, tuple(snapshot(c) for c in node.children))


class TestBackpropagate:
    def test_path_of_three(self):
        nodes = [SearchNode(START, CFG) for _ in range(3)]
        mcts.backpropagate(nodes, 0.5)
        assert all((n.visits, n.total_reward) == (1, 0.5) for n in nodes)

    def test_additive(self):
        root = SearchNode(START, CFG)
        mcts.backpropagate([root], 0.2)
        mcts.backpropagate([root], 0.4)
        assert root.visits == 2 and root.total_reward == pytest.approx(0.6)


class TestSearch:
    def test_single_iteration(self):
        tree = mcts.search(SearchTree.fresh(START, CFG, rng()), 1)
        assert tree.root.visits == 1 and len(tree.root.children) == 1

    def test_children_visited_before_revisits(self):
        tree = mcts.search(SearchTree.fresh(START, CFG, rng()), 5)
        assert tree.root.visits == 5
        visits = [c.visits for c in tree.root.children]
        assert len(visits) == 2 and min(visits) >= 1 and sum(visits) == 5

    def test_reproducible(self):
        a = mcts.search(SearchTree.fresh(START, CFG, rng(9)), 60)
        b = mcts.search(SearchTree.fresh(START, CFG, rng(9)), 60)
        assert snapshot(a.root) == snapshot(b.root)

    def test_terminal_root(self):
        with pytest.raises(mcts.TerminalRootError):
            mcts.search(SearchTree.fresh(dataclasses.replace(START, t=1800), CFG, rng()), 3)

    def test_bad_iterations(self):
        with pytest.raises(ValueError):
            mcts.search(SearchTree.fresh(START, CFG, rng()), 0)

    def test_rejects_out_of_range_evaluator(self):
        class Bad:
            def evaluate(self, state, generator):
                return 1.5

        with pytest.raises(ValueError):
            mcts.search(SearchTree.fresh(START, CFG, rng()), 1, Bad())

    def test_custom_evaluator_sees_features(self):
        class WorkerInTraining:
            def evaluate(self, state, generator):
                return 1.0 if sim.featurize(state)[8] > 0 else 0.0

        tree = mcts.search(SearchTree.fresh(START, CFG, rng()), 30, WorkerInTraining())
        assert mcts.best_action(tree.root) == A.TRAIN_WORKER

    @given(st.integers(0, 10_000), st.integers(1, 120))
    @settings(max_examples=25, deadline=None)
    def test_tree_invariants(self, seed, iterations):
        cfg = dataclasses.replace(CFG, episode_ticks=200)
        base = sim.macro_step(START, A.NO_OP, cfg, seed % 150)
        tree = mcts.search(SearchTree.fresh(base, cfg, rng(seed)), iterations)
        assert tree.root.visits == iterations
        for node in walk_nodes(tree.root):
            assert 0 <= node.total_reward <= node.visits + 1e-9
            below = sum(c.visits for c in node.children)
            if node is tree.root:
                # the root is never evaluated itself
                assert node.visits == below
            elif node.visits and not tree.is_terminal(node):
                assert node.visits == 1 + below
            tried = {c.incoming_action for c in node.children}
            assert tried.isdisjoint(node.untried_actions)
            if not tree.is_terminal(node):
                assert tried | set(node.untried_actions) == set(sim.legal_actions(node.state, cfg))
            counts = [c.visits for c in node.children]
            if 0 in counts:
                assert max(counts) <= 1


class TestBestAction:
    def test_single_child(self):
        tree = root_with_children([(A.TRAIN_WORKER, 1, 0.1)])
        assert mcts.best_action(tree.root) == A.TRAIN_WORKER

    def test_most_visits(self):
        state = dataclasses.replace(START, m=300.0, supply_used=15)
        tree = root_with_children([(A.NO_OP, 3, 0.3), (A.BUILD_SUPPLY, 1, 0.9), (A.BUILD_BARRACKS, 1, 1.0)], state)
        assert mcts.best_action(tree.root) == A.NO_OP

    def test_visit_tie_goes_to_mean(self):
        tree = root_with_children([(A.NO_OP, 2, 0.2), (A.TRAIN_WORKER, 2, 1.8)])
        assert mcts.best_action(tree.root) == A.TRAIN_WORKER

    def test_full_tie_goes_to_canonical_order(self):
        tree = root_with_children([(A.TRAIN_WORKER, 2, 1.0), (A.NO_OP, 2, 1.0)])
        assert mcts.best_action(tree.root) == A.NO_OP

    def test_childless(self):
        with pytest.raises(mcts.NoSearchPerformedError):
            mcts.best_action(SearchNode(START, CFG))


class TestAdvanceRoot:
    def test_matching_child_keeps_stats(self):
        tree = mcts.search(SearchTree.fresh(START, CFG, rng(1)), 20)
        action = mcts.best_action(tree.root)
        child = next(c for c in tree.root.children if c.incoming_action == action)
        visits = child.visits
        mcts.advance_root(tree, action, sim.step(START, action, CFG))
        assert tree.root is child and tree.root.visits == visits and tree.root.incoming_action is None

    def test_unexpanded_action_gives_fresh_root(self):
        tree = mcts.search(SearchTree.fresh(START, CFG, rng(1)), 1)
        tried = tree.root.children[0].incoming_action
        other = next(a for a in sim.legal_actions(START, CFG) if a != tried)
        observed = sim.step(START, other, CFG)
        mcts.advance_root(tree, other, observed)
        assert tree.root.visits == 0 and tree.root.state == observed and not tree.root.children

    def test_state_mismatch_gives_fresh_root(self):
        tree = mcts.search(SearchTree.fresh(START, CFG, rng(1)), 4)
        action = tree.root.children[0].incoming_action
        observed = dataclasses.replace(sim.step(START, action, CFG), m=999.0)
        mcts.advance_root(tree, action, observed)
        assert tree.root.visits == 0


MICRO = GameConfig(marine_time=3, barracks_time=4, worker_time=3, depot_time=3)


def micro_instances(count, seed):
    """Start states a few ticks from the episode end with resources to spend."""
    gen = np.random.default_rng(seed)
    for _ in range(count):
        ticks = int(gen.integers(3, 7))
        minerals = float(gen.uniform(0, 260))
        state = dataclasses.replace(
            sim.new_game(MICRO), t=100, m=minerals, minerals_mined_total=minerals - MICRO.start_minerals,
            r=int(gen.integers(0, 3)), supply_used=int(gen.integers(12, 16)),
            marine_queues=(), barracks_queues=(2,) if gen.random() < 0.4 else (),
        )
        yield state, ticks


@pytest.mark.parametrize("instance", list(micro_instances(12, 2024)), ids=lambda i: f"ticks{i[1]}")
def test_converges_to_oracle_on_micro_instances(instance):
    state, ticks = instance
    query = oracle.OracleQuery(state, ticks)
    leaves = oracle.count_leaves(query, MICRO)
    best = oracle.exhaustive_best(query, MICRO)
    cfg = dataclasses.replace(query.episode_config(MICRO), reward_normalizer=max(best.best_score, 1))
    tree = mcts.search(SearchTree.fresh(state, cfg, rng(ticks)), max(5 * leaves, 20))
    chosen = mcts.best_action(tree.root)
    assert oracle.best_after(query, chosen, MICRO) == best.best_score
