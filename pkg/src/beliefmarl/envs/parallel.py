"""Synchronized rollout collection across parallel environment instances.

All environments step together; ones that terminate early simply stop
contributing while the rest run to their own terminal. The resulting
batch holds one episode per environment, padded to the longest length
with a validity mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrajectoryBatch:
    """On-policy rollout data for one round of parallel episodes.

    Arrays are padded over time; ``mask[e, t]`` marks real steps and
    ``lengths[e]`` gives each episode's true length. ``extras`` carries
    whatever per-step data the acting policy returned (belief samples,
    reparameterization noise, hidden states).
    """

    lengths: np.ndarray          # (E,)
    mask: np.ndarray             # (E, T) bool
    obs: np.ndarray              # (E, T, N, obs_dim) observation before acting
    next_obs: np.ndarray         # (E, T, N, obs_dim)
    actions: np.ndarray          # (E, T, N) int
    rewards: np.ndarray          # (E, T) shared extrinsic
    intrinsic: np.ndarray        # (E, T, N)
    mixed: np.ndarray            # (E, T, N)
    states: np.ndarray           # (E, T, state_dim)
    next_states: np.ndarray      # (E, T, state_dim)
    terminals: np.ndarray        # (E, T) bool, True exactly at episode end
    extras: dict = field(default_factory=dict)

    @property
    def n_envs(self) -> int:
        return len(self.lengths)

    @property
    def n_steps(self) -> int:
        return int(self.lengths.sum())


def run_parallel(envs, policy, reward_hook=None,
                 max_joint_steps: int | None = None) -> TrajectoryBatch:
    """Step all (already reset) envs with ``policy`` until each terminates.

    ``policy(t, env_ids, obs)`` receives the stacked observations of the
    still-active envs and returns ``(actions, extras)`` where extras is a
    dict of arrays with the same leading dimension. ``reward_hook(env_id,
    result, extras_row)`` may return per-agent ``(intrinsic, mixed)``
    rewards; without it the mixed reward equals the shared extrinsic one.
    Policy or hook exceptions abort the batch and propagate.

    ``max_joint_steps`` caps the total number of joint env transitions;
    episodes cut off by the cap simply end without a terminal flag, so
    value targets keep bootstrapping through the cut.
    """
    n_envs = len(envs)
    n_agents = envs[0].spec.n_agents
    cur_obs = [e.observations() for e in envs]
    cur_state = [e.state() for e in envs]
    records = [[] for _ in range(n_envs)]
    extra_records: dict[str, list] = {}
    active = [e for e in range(n_envs) if not getattr(envs[e], "terminated", False)]
    if len(active) != n_envs:
        raise ValueError("run_parallel requires all envs freshly reset")
    budget = max_joint_steps if max_joint_steps is not None else -1

    t = 0
    while active and budget != 0:
        obs_stack = np.stack([cur_obs[e] for e in active])
        actions, extras = policy(t, list(active), obs_stack)
        actions = np.asarray(actions)
        still_active = []
        for k, e in enumerate(active):
            if budget == 0:
                break
            result = envs[e].step(actions[k])
            budget -= 1
            extras_row = {key: val[k] for key, val in extras.items()}
            if reward_hook is not None:
                r_hat, r_mix = reward_hook(e, result, extras_row)
            else:
                r_hat = np.zeros(n_agents)
                r_mix = np.full(n_agents, result.reward)
            records[e].append((cur_obs[e], result.obs, actions[k], result.reward,
                               np.asarray(r_hat, dtype=np.float64),
                               np.asarray(r_mix, dtype=np.float64),
                               cur_state[e], result.state, result.terminal))
            for key, val in extras_row.items():
                extra_records.setdefault(key, [[] for _ in range(n_envs)])
                extra_records[key][e].append(val)
            cur_obs[e] = result.obs
            cur_state[e] = result.state
            if not result.terminal:
                still_active.append(e)
        active = still_active
        t += 1

    return _assemble(records, extra_records)


def _assemble(records, extra_records) -> TrajectoryBatch:
    n_envs = len(records)
    lengths = np.array([len(r) for r in records], dtype=np.int64)
    t_max = int(lengths.max())
    if t_max == 0:
        raise ValueError("empty batch: no env stepped at all")
    first = next(r for r in records if r)[0]
    n_agents, obs_dim = first[0].shape
    state_dim = first[6].shape[0]

    batch = TrajectoryBatch(
        lengths=lengths,
        mask=np.zeros((n_envs, t_max), dtype=bool),
        obs=np.zeros((n_envs, t_max, n_agents, obs_dim)),
        next_obs=np.zeros((n_envs, t_max, n_agents, obs_dim)),
        actions=np.zeros((n_envs, t_max, n_agents), dtype=np.int64),
        rewards=np.zeros((n_envs, t_max)),
        intrinsic=np.zeros((n_envs, t_max, n_agents)),
        mixed=np.zeros((n_envs, t_max, n_agents)),
        states=np.zeros((n_envs, t_max, state_dim)),
        next_states=np.zeros((n_envs, t_max, state_dim)),
        terminals=np.zeros((n_envs, t_max), dtype=bool),
    )
    for e, rec in enumerate(records):
        for t, (obs, next_obs, act, rew, r_hat, r_mix, s, s_next, term) in enumerate(rec):
            batch.mask[e, t] = True
            batch.obs[e, t] = obs
            batch.next_obs[e, t] = next_obs
            batch.actions[e, t] = act
            batch.rewards[e, t] = rew
            batch.intrinsic[e, t] = r_hat
            batch.mixed[e, t] = r_mix
            batch.states[e, t] = s
            batch.next_states[e, t] = s_next
            batch.terminals[e, t] = term
    for key, per_env in extra_records.items():
        sample = np.asarray(per_env[0][0])
        arr = np.zeros((n_envs, t_max) + sample.shape, dtype=sample.dtype)
        for e, rows in enumerate(per_env):
            for t, row in enumerate(rows):
                arr[e, t] = row
        batch.extras[key] = arr
    return batch
