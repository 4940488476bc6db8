"""Cooperative level-based foraging on a grid.

Agents and food items carry integer levels. A food is consumed when the
agents standing 4-adjacent to it and choosing the pickup action have a
combined level at least the food's level. Each pickup contributor earns

    food_level * agent_level / (sum of spawned food levels * sum of loader levels)

so the per-agent contributions over a fully solved episode sum to exactly 1.
The shared extrinsic reward of a step is the sum of contributions.

Observations are (row, col, level) triplets: foods first (spawn order),
then the observing agent itself, then the other agents by ascending index.
Entities outside the sight window (Chebyshev distance > sight) and consumed
foods are masked with the sentinel triplet (-1, -1, 0).
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .base import Env, EnvSpec, StepResult

SENTINEL = (-1.0, -1.0, 0.0)

ACTION_NOOP = 0
ACTION_NORTH = 1
ACTION_SOUTH = 2
ACTION_WEST = 3
ACTION_EAST = 4
ACTION_LOAD = 5

_MOVES = {
    ACTION_NORTH: (-1, 0),
    ACTION_SOUTH: (1, 0),
    ACTION_WEST: (0, -1),
    ACTION_EAST: (0, 1),
}

N_ACTIONS = 6
MAX_AGENT_LEVEL = 2


class GridForage(Env):
    """Grid-world foraging task with shared, normalized pickup rewards."""

    def __init__(self, grid_size: int, sight: int, n_agents: int, n_foods: int,
                 coop: bool = False, max_episode_len: int = 50,
                 rng: np.random.Generator | None = None, name: str | None = None):
        if grid_size < 3:
            raise ConfigError("grid_size must be at least 3 (foods spawn off-border)")
        if n_agents < 1 or n_foods < 1:
            raise ConfigError("need at least one agent and one food")
        if n_agents + n_foods > grid_size * grid_size:
            raise ConfigError("grid too small for the requested entities")
        if sight < 1:
            raise ConfigError("sight must be positive")
        self.grid_size = grid_size
        self.sight = sight
        self.n_agents = n_agents
        self.n_foods = n_foods
        self.coop = coop
        self.rng = rng if rng is not None else np.random.default_rng()
        obs_dim = 3 * (n_agents + n_foods)
        self.spec = EnvSpec(
            name=name or f"{sight}s-{grid_size}x{grid_size}-{n_agents}p-{n_foods}f"
            + ("-coop" if coop else ""),
            n_agents=n_agents,
            obs_dim=obs_dim,
            n_actions=N_ACTIONS,
            max_episode_len=max_episode_len,
            state_dim=n_agents * obs_dim,
            obs_scale=1.0 / (grid_size - 1),
        )
        self._initialized = False

    # ---- episode lifecycle ---------------------------------------------

    def reset(self, seed: int | None = None):
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self._spawn()
        self.steps = 0
        self.terminated = False
        self._initialized = True
        return self.observations(), self.state()

    def _spawn(self) -> None:
        size = self.grid_size
        # agents anywhere, foods on interior cells and not adjacent to each
        # other, all on distinct cells
        taken: set[tuple[int, int]] = set()
        food_pos = []
        while len(food_pos) < self.n_foods:
            r = int(self.rng.integers(1, size - 1))
            c = int(self.rng.integers(1, size - 1))
            if (r, c) in taken:
                continue
            if any(max(abs(r - fr), abs(c - fc)) <= 1 for fr, fc in food_pos):
                continue
            food_pos.append((r, c))
            taken.add((r, c))
        agent_pos = []
        while len(agent_pos) < self.n_agents:
            r = int(self.rng.integers(0, size))
            c = int(self.rng.integers(0, size))
            if (r, c) in taken:
                continue
            agent_pos.append((r, c))
            taken.add((r, c))
        self.agent_pos = np.array(agent_pos, dtype=np.int64)
        self.agent_levels = self.rng.integers(1, MAX_AGENT_LEVEL + 1,
                                              size=self.n_agents).astype(np.int64)
        self.food_pos = np.array(food_pos, dtype=np.int64)
        if self.coop:
            # forced cooperation: every pickup needs all agents loading
            level_cap = int(self.agent_levels.sum())
            self.food_levels = np.full(self.n_foods, level_cap, dtype=np.int64)
        else:
            # solo-solvable: the strongest agent can always collect alone,
            # though joint loading still speeds the episode up
            level_cap = int(self.agent_levels.max())
            self.food_levels = self.rng.integers(1, level_cap + 1,
                                                 size=self.n_foods).astype(np.int64)
        self.food_consumed = np.zeros(self.n_foods, dtype=bool)
        self.food_levels_spawned = int(self.food_levels.sum())

    @classmethod
    def from_layout(cls, grid_size: int, sight: int, agent_pos, agent_levels,
                    food_pos, food_levels, max_episode_len: int = 50,
                    coop: bool = False) -> "GridForage":
        """Build an explicit state, validating solvability."""
        env = cls(grid_size, sight, len(agent_pos), len(food_pos), coop=coop,
                  max_episode_len=max_episode_len)
        agent_levels = np.asarray(agent_levels, dtype=np.int64)
        food_levels = np.asarray(food_levels, dtype=np.int64)
        if food_levels.size and int(food_levels.max()) > int(agent_levels.sum()):
            raise ConfigError("unsolvable layout: food level exceeds sum of agent levels")
        positions = [tuple(p) for p in list(agent_pos) + list(food_pos)]
        if len(set(positions)) != len(positions):
            raise ConfigError("overlapping spawn positions")
        for r, c in positions:
            if not (0 <= r < grid_size and 0 <= c < grid_size):
                raise ConfigError("spawn position off-grid")
        env.agent_pos = np.asarray(agent_pos, dtype=np.int64).copy()
        env.agent_levels = agent_levels.copy()
        env.food_pos = np.asarray(food_pos, dtype=np.int64).copy()
        env.food_levels = food_levels.copy()
        env.food_consumed = np.zeros(len(food_pos), dtype=bool)
        env.food_levels_spawned = int(food_levels.sum())
        env.steps = 0
        env.terminated = False
        env._initialized = True
        return env

    # ---- observations ----------------------------------------------------

    def _visible(self, viewer: np.ndarray, pos: np.ndarray) -> bool:
        return max(abs(int(pos[0] - viewer[0])), abs(int(pos[1] - viewer[1]))) <= self.sight

    def observe(self, agent_id: int, full_sight: bool = False) -> np.ndarray:
        """Triplet observation for one agent; see the module docstring."""
        me = self.agent_pos[agent_id]
        out = np.empty(self.spec.obs_dim, dtype=np.float64)
        k = 0
        for f in range(self.n_foods):
            if self.food_consumed[f] or not (full_sight or self._visible(me, self.food_pos[f])):
                out[k:k + 3] = SENTINEL
            else:
                out[k] = self.food_pos[f, 0]
                out[k + 1] = self.food_pos[f, 1]
                out[k + 2] = self.food_levels[f]
            k += 3
        order = [agent_id] + [a for a in range(self.n_agents) if a != agent_id]
        for a in order:
            if full_sight or self._visible(me, self.agent_pos[a]):
                out[k] = self.agent_pos[a, 0]
                out[k + 1] = self.agent_pos[a, 1]
                out[k + 2] = self.agent_levels[a]
            else:
                out[k:k + 3] = SENTINEL
            k += 3
        return out

    def observations(self) -> np.ndarray:
        return np.stack([self.observe(i) for i in range(self.n_agents)])

    def state(self) -> np.ndarray:
        """Joint state: concatenation of all agents' full-sight observations."""
        return np.concatenate([self.observe(i, full_sight=True)
                               for i in range(self.n_agents)])

    # ---- dynamics ----------------------------------------------------------

    def step(self, actions) -> StepResult:
        if not self._initialized:
            raise ConfigError("step before reset")
        if self.terminated:
            raise ConfigError("step on terminated episode; call reset first")
        actions = np.asarray(actions, dtype=np.int64)
        if actions.shape != (self.n_agents,):
            raise ValueError(f"expected {self.n_agents} actions")
        if np.any((actions < 0) | (actions >= N_ACTIONS)):
            raise ValueError("action out of range")

        self._move(actions)
        contributions = self._resolve_pickups(actions)

        self.steps += 1
        self.terminated = bool(self.food_consumed.all()) or self.steps >= self.spec.max_episode_len
        return StepResult(
            obs=self.observations(),
            reward=float(contributions.sum()),
            reward_contributions=contributions,
            terminal=self.terminated,
            state=self.state(),
        )

    def _move(self, actions: np.ndarray) -> None:
        size = self.grid_size
        live_food = {tuple(p) for p, dead in zip(self.food_pos, self.food_consumed)
                     if not dead}
        current = [tuple(p) for p in self.agent_pos]
        proposed = []
        for i, a in enumerate(actions):
            r, c = current[i]
            if a in _MOVES:
                dr, dc = _MOVES[int(a)]
                nr, nc = r + dr, c + dc
                # blocked by the border, food cells and standing agents
                if 0 <= nr < size and 0 <= nc < size and (nr, nc) not in live_food \
                        and (nr, nc) not in (current[:i] + current[i + 1:]):
                    proposed.append((nr, nc))
                    continue
            proposed.append((r, c))
        # two agents contesting one cell both stay put
        counts: dict[tuple[int, int], int] = {}
        for p in proposed:
            counts[p] = counts.get(p, 0) + 1
        for i, p in enumerate(proposed):
            if counts[p] > 1:
                proposed[i] = current[i]
        self.agent_pos = np.array(proposed, dtype=np.int64)

    def _resolve_pickups(self, actions: np.ndarray) -> np.ndarray:
        """Jointly resolve pickup attempts; each food is settled independently."""
        contributions = np.zeros(self.n_agents, dtype=np.float64)
        loaders_all = [i for i in range(self.n_agents) if actions[i] == ACTION_LOAD]
        for f in range(self.n_foods):
            if self.food_consumed[f]:
                continue
            fr, fc = self.food_pos[f]
            loaders = [i for i in loaders_all
                       if abs(int(self.agent_pos[i, 0]) - fr)
                       + abs(int(self.agent_pos[i, 1]) - fc) == 1]
            if not loaders:
                continue
            loader_levels = int(self.agent_levels[loaders].sum())
            if loader_levels < int(self.food_levels[f]):
                continue
            self.food_consumed[f] = True
            for i in loaders:
                contributions[i] += (
                    float(self.food_levels[f]) * float(self.agent_levels[i])
                    / (self.food_levels_spawned * loader_levels)
                )
        return contributions
