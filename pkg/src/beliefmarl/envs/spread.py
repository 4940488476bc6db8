"""Cooperative navigation: N point agents must cover N static landmarks.

Physics per step, with dt=0.1, damping=0.25, accel=5.0:

    v <- v * (1 - damping) + a * accel * dt
    p <- p + v * dt

where ``a`` is the unit impulse of the chosen discrete action (noop, +x,
-x, +y, -y). The shared reward is the summed negative minimum agent
distance per landmark, minus 1 per colliding agent pair (distance below
two agent radii). Episodes run to the fixed step cap.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .base import Env, EnvSpec, StepResult

DT = 0.1
DAMPING = 0.25
ACCEL = 5.0
AGENT_RADIUS = 0.15

N_ACTIONS = 5
_IMPULSES = np.array([
    [0.0, 0.0],   # noop
    [1.0, 0.0],   # right
    [-1.0, 0.0],  # left
    [0.0, 1.0],   # up
    [0.0, -1.0],  # down
])


def spread_reward(agent_pos: np.ndarray, landmark_pos: np.ndarray) -> float:
    """Shared reward for a configuration; positions are (N, 2) arrays."""
    dists = np.linalg.norm(agent_pos[None, :, :] - landmark_pos[:, None, :], axis=-1)
    reward = -dists.min(axis=1).sum()
    n = agent_pos.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(agent_pos[i] - agent_pos[j]) < 2.0 * AGENT_RADIUS:
                reward -= 1.0
    return float(reward)


class ParticleSpread(Env):
    """Continuous-space spread task with N agents and N landmarks."""

    def __init__(self, n_agents: int, max_episode_len: int = 25,
                 rng: np.random.Generator | None = None, name: str | None = None):
        if n_agents < 1:
            raise ConfigError("need at least one agent")
        self.n_agents = n_agents
        self.n_landmarks = n_agents
        self.rng = rng if rng is not None else np.random.default_rng()
        obs_dim = 4 + 2 * self.n_landmarks + 2 * (n_agents - 1)
        self.spec = EnvSpec(
            name=name or f"spread-{n_agents}",
            n_agents=n_agents,
            obs_dim=obs_dim,
            n_actions=N_ACTIONS,
            max_episode_len=max_episode_len,
            state_dim=n_agents * obs_dim,
        )
        self._initialized = False

    def reset(self, seed: int | None = None):
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.agent_pos = self.rng.uniform(-1.0, 1.0, size=(self.n_agents, 2))
        self.agent_vel = np.zeros((self.n_agents, 2))
        self.landmark_pos = self.rng.uniform(-1.0, 1.0, size=(self.n_landmarks, 2))
        self.steps = 0
        self.terminated = False
        self._initialized = True
        return self.observations(), self.state()

    def observe(self, agent_id: int) -> np.ndarray:
        """[own vel, own pos, landmark offsets, other-agent offsets]."""
        me = self.agent_pos[agent_id]
        parts = [self.agent_vel[agent_id], me, (self.landmark_pos - me).ravel()]
        others = [a for a in range(self.n_agents) if a != agent_id]
        if others:
            parts.append((self.agent_pos[others] - me).ravel())
        return np.concatenate(parts)

    def observations(self) -> np.ndarray:
        return np.stack([self.observe(i) for i in range(self.n_agents)])

    def state(self) -> np.ndarray:
        return np.concatenate([self.observe(i) for i in range(self.n_agents)])

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

        impulse = _IMPULSES[actions]
        self.agent_vel = self.agent_vel * (1.0 - DAMPING) + impulse * ACCEL * DT
        self.agent_pos = self.agent_pos + self.agent_vel * DT
        if not np.all(np.isfinite(self.agent_pos)):
            raise ConfigError("non-finite positions in physics update")

        reward = spread_reward(self.agent_pos, self.landmark_pos)
        self.steps += 1
        self.terminated = self.steps >= self.spec.max_episode_len
        contributions = np.full(self.n_agents, reward / self.n_agents)
        return StepResult(
            obs=self.observations(),
            reward=reward,
            reward_contributions=contributions,
            terminal=self.terminated,
            state=self.state(),
        )
