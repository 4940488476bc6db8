"""Discounted TD target computation over padded episode batches."""

from __future__ import annotations

import numpy as np


def td_targets(rewards: np.ndarray, boot_values: np.ndarray,
               terminals: np.ndarray, lengths: np.ndarray,
               gamma: float, n_step: int = 1) -> np.ndarray:
    """n-step bootstrapped targets, zero beyond each episode's length.

    ``rewards`` is (E, T) or (E, T, N); ``boot_values`` matches and holds
    the target-network value of the state reached at each index (so entry
    t is V'(s_{t+1})). Terminal steps bootstrap zero. With n_step=1 this
    is r_t + gamma * V'(s_{t+1}) * (1 - terminal_t).
    """
    if n_step < 1:
        raise ValueError("n_step must be >= 1")
    live = ~terminals
    if n_step == 1:
        scale = live.astype(np.float64)
        if rewards.ndim == 3 and scale.ndim == 2:
            scale = scale[..., None]
        return np.where(_length_mask(rewards, lengths),
                        rewards + gamma * boot_values * scale, 0.0)

    y = np.zeros_like(rewards)
    n_envs = rewards.shape[0]
    for e in range(n_envs):
        episode_len = int(lengths[e])
        for t in range(episode_len):
            j = min(t + n_step, episode_len)
            acc = np.zeros_like(rewards[e, 0])
            g = 1.0
            for k in range(t, j):
                acc = acc + g * rewards[e, k]
                g *= gamma
            if not terminals[e, j - 1]:
                acc = acc + g * boot_values[e, j - 1]
            y[e, t] = acc
    return y


def _length_mask(rewards: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    t_max = rewards.shape[1]
    mask = np.arange(t_max)[None, :] < lengths[:, None]
    if rewards.ndim == 3:
        mask = mask[..., None]
    return mask
