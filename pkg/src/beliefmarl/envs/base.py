"""Shared environment contracts for the cooperative multi-agent tasks.

Environments are episodic, fully seeded, and expose both per-agent partial
observations and a joint state vector (the concatenation of all agents'
full-visibility observations) for centralized critics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnvSpec:
    """Static description of a task instance.

    ``obs_scale`` is a constant the function approximators multiply their
    observation-valued inputs by (grid coordinates are O(grid size));
    observations themselves are reported unscaled.
    """

    name: str
    n_agents: int
    obs_dim: int
    n_actions: int
    max_episode_len: int
    state_dim: int
    obs_scale: float = 1.0


@dataclass
class StepResult:
    """Outcome of one synchronized joint step.

    ``reward`` is the shared extrinsic reward (the sum of the per-agent
    contributions in ``reward_contributions``); ``state`` is the joint
    state after the transition.
    """

    obs: np.ndarray
    reward: float
    reward_contributions: np.ndarray
    terminal: bool
    state: np.ndarray


class Env:
    """Minimal duck-typed base; subclasses fill in the actual dynamics."""

    spec: EnvSpec

    def reset(self, seed: int | None = None):
        raise NotImplementedError

    def step(self, actions) -> StepResult:
        raise NotImplementedError

    def observations(self) -> np.ndarray:
        raise NotImplementedError

    def state(self) -> np.ndarray:
        raise NotImplementedError
