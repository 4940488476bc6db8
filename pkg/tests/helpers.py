"""Shared test utilities: tiny configs and a plain-numpy backbone oracle."""

import numpy as np

from beliefmarl.config import parse_config


def tiny_config(**overrides):
    """Small, fast trainer config for unit tests."""
    base = {
        "env": "5s-5x5-2p-1f",
        "horizon": 10_000,
        "seed": 7,
        "n_envs": 3,
        "hidden_dim": 12,
        "latent_dim": 4,
        "max_episode_len": 8,
        "eval_episodes": 2,
        "metrics_interval": 50,
    }
    base.update(overrides)
    return parse_config(None, base)


def snapshot_params(bank):
    return {g: {n: p.value.copy() for n, p in bank.group(g).items()}
            for g in bank.groups()}


def _relu(x):
    return np.maximum(x, 0.0)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def mlp_forward_np(group, x, n_layers):
    for k in range(n_layers):
        x = x @ group[f"l{k}_w"] + group[f"l{k}_b"]
        if k < n_layers - 1:
            x = _relu(x)
    return x


def actor_forward_np(group, inputs_by_t):
    """relu FC -> GRU -> logits over a full episode, plain numpy."""
    t_max = len(inputs_by_t)
    h = np.zeros((inputs_by_t[0].shape[0], group["hr_w"].shape[0]))
    logits = []
    for t in range(t_max):
        y = _relu(inputs_by_t[t] @ group["fc_in_w"] + group["fc_in_b"])
        r = _sigmoid(y @ group["ir_w"] + group["ir_b"] + h @ group["hr_w"] + group["hr_b"])
        u = _sigmoid(y @ group["iz_w"] + group["iz_b"] + h @ group["hz_w"] + group["hz_b"])
        n = np.tanh(y @ group["in_w"] + group["in_b"]
                    + r * (h @ group["hn_w"] + group["hn_b"]))
        h = (1.0 - u) * n + u * h
        logits.append(h @ group["fc_out_w"] + group["fc_out_b"])
    return logits


def log_softmax_np(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def maa2c_reference_losses(params, batch, gamma, entropy_coef, n_agents,
                           n_actions, latent_dim, shared_policy, obs_scale=1.0):
    """Plain multi-agent A2C losses, written directly from the update rules.

    Actor: mean over steps/agents of -log pi(a|h) * (r + gamma V'(s') - V(s))
    minus the entropy bonus; critic: mean squared TD error against the
    target network. Beliefs are zeroed, rewards are the shared extrinsic
    ones, every forward pass is recomputed here in plain numpy.
    """
    e_envs, t_max = batch.mask.shape
    mask = batch.mask.astype(np.float64)
    n_valid = mask.sum()

    state_rows = batch.states.reshape(e_envs * t_max, -1) * obs_scale
    next_rows = batch.next_states.reshape(e_envs * t_max, -1) * obs_scale
    v = mlp_forward_np(params["critic"], state_rows, 3)[:, 0].reshape(e_envs, t_max)
    v_next = mlp_forward_np(params["critic_target"], next_rows, 3)[:, 0].reshape(
        e_envs, t_max)
    live = (~batch.terminals).astype(np.float64)
    y = batch.rewards + gamma * v_next * live
    advantage = (y - v) * mask

    critic_terms = ((y - v) ** 2) * mask
    critic_loss = critic_terms.sum() * n_agents / (n_valid * n_agents)

    actor_total = 0.0
    for i in range(n_agents):
        group = params["actor_0" if shared_policy else f"actor_{i}"]
        inputs = []
        prev = np.full(e_envs, -1, dtype=np.int64)
        for t in range(t_max):
            onehot = np.zeros((e_envs, n_actions))
            rows = np.nonzero(prev >= 0)[0]
            onehot[rows, prev[rows]] = 1.0
            parts = [batch.obs[:, t, i, :] * obs_scale, onehot]
            if shared_policy:
                ids = np.zeros((e_envs, n_agents))
                ids[:, i] = 1.0
                parts.append(ids)
            parts.append(np.zeros((e_envs, latent_dim)))
            inputs.append(np.concatenate(parts, axis=1))
            prev = batch.actions[:, t, i]
        logits = actor_forward_np(group, inputs)
        for t in range(t_max):
            logp = log_softmax_np(logits[t])
            p = np.exp(logp)
            entropy = -(p * logp).sum(axis=1)
            taken = logp[np.arange(e_envs), batch.actions[:, t, i]]
            actor_total += (-taken * advantage[:, t]
                            - entropy_coef * entropy * mask[:, t]).sum()
    actor_loss = actor_total / (n_valid * n_agents)
    return actor_loss, critic_loss
