"""Grid foraging semantics: observation layout, sight masking, movement,
and the normalized pickup reward checked against the formula directly."""

import numpy as np
import pytest

from beliefmarl.envs import GridForage
from beliefmarl.envs.gridforage import (
    ACTION_EAST,
    ACTION_LOAD,
    ACTION_NOOP,
    ACTION_NORTH,
    ACTION_SOUTH,
    ACTION_WEST,
)
from beliefmarl.errors import ConfigError

SENTINEL = [-1.0, -1.0, 0.0]


def pickup_oracle(agent_pos, agent_levels, food_pos, food_levels, load_mask,
                  food_levels_spawned):
    """Direct evaluation of the pickup reward expression.

    For every food with enough adjacent loading level:
    r_i = food_level * agent_level / (sum spawned food levels * sum loader levels)
    """
    n = len(agent_pos)
    contributions = np.zeros(n)
    consumed = []
    for f, (fp, fl) in enumerate(zip(food_pos, food_levels)):
        loaders = [i for i in range(n) if load_mask[i]
                   and abs(agent_pos[i][0] - fp[0]) + abs(agent_pos[i][1] - fp[1]) == 1]
        loader_sum = sum(agent_levels[i] for i in loaders)
        if loaders and loader_sum >= fl:
            consumed.append(f)
            for i in loaders:
                contributions[i] += fl * agent_levels[i] / (food_levels_spawned * loader_sum)
    return contributions, consumed


class TestObservations:
    def test_obs_dim_formula(self):
        env = GridForage(9, 9, n_agents=2, n_foods=1)
        assert env.spec.obs_dim == 3 * (2 + 1) == 9
        env = GridForage(9, 9, n_agents=3, n_foods=2)
        assert env.spec.obs_dim == 15
        assert env.spec.state_dim == 45

    def test_full_sight_absolute_coordinates(self):
        env = GridForage.from_layout(
            7, 7, agent_pos=[(0, 0), (6, 6)], agent_levels=[1, 2],
            food_pos=[(3, 4)], food_levels=[2])
        obs = env.observe(0)
        np.testing.assert_array_equal(obs[:3], [3, 4, 2])       # food triplet first
        np.testing.assert_array_equal(obs[3:6], [0, 0, 1])      # self
        np.testing.assert_array_equal(obs[6:9], [6, 6, 2])      # other agent
        assert not np.any(obs == -1.0)

    def test_out_of_window_entity_is_sentinel(self):
        env = GridForage.from_layout(
            9, 2, agent_pos=[(0, 0), (8, 8)], agent_levels=[1, 1],
            food_pos=[(4, 4)], food_levels=[1])
        obs = env.observe(0)
        np.testing.assert_array_equal(obs[0:3], SENTINEL)   # food at distance 4
        np.testing.assert_array_equal(obs[6:9], SENTINEL)   # far agent
        # boundary case: chebyshev distance exactly == sight is visible
        env2 = GridForage.from_layout(
            9, 2, agent_pos=[(0, 0), (2, 2)], agent_levels=[1, 1],
            food_pos=[(4, 4)], food_levels=[1])
        np.testing.assert_array_equal(env2.observe(0)[6:9], [2, 2, 1])

    def test_consumed_food_is_sentinel_even_when_close(self):
        env = GridForage.from_layout(
            7, 7, agent_pos=[(3, 3), (3, 5)], agent_levels=[2, 2],
            food_pos=[(3, 4)], food_levels=[1])
        env.step([ACTION_LOAD, ACTION_NOOP])
        np.testing.assert_array_equal(env.observe(0)[0:3], SENTINEL)

    def test_masking_leaks_no_outside_information(self):
        # anything outside the window can change without affecting the view
        base = GridForage.from_layout(
            11, 2, agent_pos=[(1, 1), (9, 9)], agent_levels=[1, 2],
            food_pos=[(6, 6)], food_levels=[2])
        moved = GridForage.from_layout(
            11, 2, agent_pos=[(1, 1), (5, 9)], agent_levels=[1, 2],
            food_pos=[(8, 3)], food_levels=[3])
        np.testing.assert_array_equal(base.observe(0), moved.observe(0))

    def test_joint_state_is_concatenated_full_views(self):
        env = GridForage.from_layout(
            9, 1, agent_pos=[(0, 0), (8, 8)], agent_levels=[1, 1],
            food_pos=[(4, 4)], food_levels=[1])
        state = env.state()
        assert state.shape == (2 * env.spec.obs_dim,)
        np.testing.assert_array_equal(state[:9], env.observe(0, full_sight=True))
        np.testing.assert_array_equal(state[9:], env.observe(1, full_sight=True))
        # partial-sight agents still produce full-information state blocks
        assert not np.any(state == -1.0)

    def test_two_agent_swap_permutes_state_blocks(self):
        a = GridForage.from_layout(
            7, 7, agent_pos=[(1, 1), (5, 5)], agent_levels=[1, 2],
            food_pos=[(3, 3)], food_levels=[2])
        b = GridForage.from_layout(
            7, 7, agent_pos=[(5, 5), (1, 1)], agent_levels=[2, 1],
            food_pos=[(3, 3)], food_levels=[2])
        d = a.spec.obs_dim
        np.testing.assert_array_equal(a.state()[:d], b.state()[d:])
        np.testing.assert_array_equal(a.state()[d:], b.state()[:d])


class TestResetAndDeterminism:
    def test_same_seed_same_initial_observations(self):
        env = GridForage(9, 2, 3, 2)
        obs1, state1 = env.reset(seed=123)
        obs2, state2 = env.reset(seed=123)
        np.testing.assert_array_equal(obs1, obs2)
        np.testing.assert_array_equal(state1, state2)

    def test_seed_and_actions_determine_everything(self):
        rng = np.random.default_rng(5)
        actions = rng.integers(0, 6, size=(30, 3))
        results = []
        for _ in range(2):
            env = GridForage(8, 2, 3, 2)
            env.reset(seed=77)
            trace = []
            for a in actions:
                res = env.step(a)
                trace.append((res.obs.copy(), res.reward, res.terminal))
                if res.terminal:
                    break
            results.append(trace)
        for (o1, r1, t1), (o2, r2, t2) in zip(*results):
            np.testing.assert_array_equal(o1, o2)
            assert r1 == r2 and t1 == t2

    def test_spawn_invariants(self):
        for seed in range(30):
            env = GridForage(7, 2, 3, 2)
            env.reset(seed=seed)
            positions = [tuple(p) for p in env.agent_pos] + [tuple(p) for p in env.food_pos]
            assert len(set(positions)) == len(positions)
            assert int(env.food_levels.max()) <= int(env.agent_levels.sum())
            for r, c in env.food_pos:
                assert 1 <= r <= 5 and 1 <= c <= 5

    def test_unsolvable_layout_rejected(self):
        with pytest.raises(ConfigError):
            GridForage.from_layout(7, 7, agent_pos=[(0, 0)], agent_levels=[1],
                                   food_pos=[(3, 3)], food_levels=[5])

    def test_coop_forces_full_level(self):
        env = GridForage(7, 7, 2, 1, coop=True)
        env.reset(seed=3)
        assert env.food_levels[0] == env.agent_levels.sum()


class TestDynamics:
    def test_noop_changes_nothing_but_counter(self):
        env = GridForage.from_layout(
            7, 7, agent_pos=[(1, 1), (5, 5)], agent_levels=[1, 1],
            food_pos=[(3, 3)], food_levels=[1])
        before = env.agent_pos.copy()
        res = env.step([ACTION_NOOP, ACTION_NOOP])
        assert res.reward == 0.0
        np.testing.assert_array_equal(env.agent_pos, before)
        assert env.steps == 1

    def test_moves_and_blocking(self):
        env = GridForage.from_layout(
            5, 5, agent_pos=[(2, 2), (0, 0)], agent_levels=[1, 1],
            food_pos=[(2, 3)], food_levels=[1])
        env.step([ACTION_NORTH, ACTION_NOOP])
        np.testing.assert_array_equal(env.agent_pos[0], [1, 2])
        env.step([ACTION_SOUTH, ACTION_NOOP])
        np.testing.assert_array_equal(env.agent_pos[0], [2, 2])
        env.step([ACTION_EAST, ACTION_NOOP])     # blocked by food cell
        np.testing.assert_array_equal(env.agent_pos[0], [2, 2])
        env.step([ACTION_NOOP, ACTION_NORTH])    # off-grid move blocked
        np.testing.assert_array_equal(env.agent_pos[1], [0, 0])

    def test_contested_cell_reverts_both(self):
        env = GridForage.from_layout(
            5, 5, agent_pos=[(2, 1), (2, 3)], agent_levels=[1, 1],
            food_pos=[(1, 1)], food_levels=[1])
        env.step([ACTION_EAST, ACTION_WEST])
        np.testing.assert_array_equal(env.agent_pos[0], [2, 1])
        np.testing.assert_array_equal(env.agent_pos[1], [2, 3])

    def test_action_out_of_range(self):
        env = GridForage(5, 5, 2, 1)
        env.reset(seed=0)
        with pytest.raises(ValueError):
            env.step([0, 6])

    def test_step_after_terminal_rejected(self):
        env = GridForage.from_layout(
            5, 5, agent_pos=[(1, 2), (3, 3)], agent_levels=[2, 1],
            food_pos=[(2, 2)], food_levels=[1], max_episode_len=50)
        res = env.step([ACTION_LOAD, ACTION_NOOP])
        assert res.terminal
        with pytest.raises(ConfigError):
            env.step([ACTION_NOOP, ACTION_NOOP])


class TestRewards:
    def test_two_loaders_split_by_level(self):
        # food level 3, adjacent loaders with levels 1 and 2: 1/3 and 2/3
        env = GridForage.from_layout(
            7, 7, agent_pos=[(3, 2), (3, 4)], agent_levels=[1, 2],
            food_pos=[(3, 3)], food_levels=[3])
        res = env.step([ACTION_LOAD, ACTION_LOAD])
        np.testing.assert_allclose(res.reward_contributions, [1 / 3, 2 / 3])
        assert res.reward == pytest.approx(1.0)
        assert res.terminal

    def test_underleveled_pickup_fails(self):
        env = GridForage.from_layout(
            7, 7, agent_pos=[(3, 2), (0, 0)], agent_levels=[1, 2],
            food_pos=[(3, 3)], food_levels=[2])
        res = env.step([ACTION_LOAD, ACTION_NOOP])
        assert res.reward == 0.0
        assert not env.food_consumed[0]

    def test_diagonal_agent_does_not_load(self):
        env = GridForage.from_layout(
            7, 7, agent_pos=[(2, 2), (0, 0)], agent_levels=[2, 2],
            food_pos=[(3, 3)], food_levels=[1])
        res = env.step([ACTION_LOAD, ACTION_NOOP])
        assert res.reward == 0.0

    def test_randomized_pickup_scenarios_match_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            size = int(rng.integers(5, 12))
            n_agents = int(rng.integers(2, 5))
            n_foods = int(rng.integers(1, 4))
            cells = [(r, c) for r in range(size) for c in range(size)]
            picks = rng.choice(len(cells), size=n_agents + n_foods, replace=False)
            agent_pos = [cells[i] for i in picks[:n_agents]]
            food_pos = [cells[i] for i in picks[n_agents:]]
            agent_levels = rng.integers(1, 3, size=n_agents).tolist()
            food_levels = rng.integers(1, 1 + sum(agent_levels),
                                       size=n_foods).tolist()
            env = GridForage.from_layout(size, size, agent_pos, agent_levels,
                                         food_pos, food_levels)
            load_mask = rng.random(n_agents) < 0.6
            actions = [ACTION_LOAD if m else ACTION_NOOP for m in load_mask]
            res = env.step(actions)
            expected, consumed = pickup_oracle(
                agent_pos, agent_levels, food_pos, food_levels, load_mask,
                sum(food_levels))
            np.testing.assert_allclose(res.reward_contributions, expected,
                                       atol=1e-12)
            assert res.reward == pytest.approx(expected.sum(), abs=1e-12)
            assert sorted(np.nonzero(env.food_consumed)[0]) == sorted(consumed)

    def test_solved_episode_rewards_sum_to_one(self):
        # two foods consumed in separate steps still normalize to 1 total
        env = GridForage.from_layout(
            9, 9, agent_pos=[(4, 3), (2, 6)], agent_levels=[2, 1],
            food_pos=[(4, 4), (2, 7)], food_levels=[2, 1])
        total = env.step([ACTION_LOAD, ACTION_NOOP]).reward
        total += env.step([ACTION_NOOP, ACTION_LOAD]).reward
        assert total == pytest.approx(1.0, abs=1e-12)
        assert env.terminated
