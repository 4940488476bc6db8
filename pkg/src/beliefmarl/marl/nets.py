"""Actor and critic networks for the belief-augmented actor-critic."""

from __future__ import annotations

import numpy as np

from ..errors import TrainingFault
from ..nncore import GruCell, Mlp, ParamBank, Tape, Var, linear, linear_params


class RecurrentActor:
    """FC-ReLU into a GRU into action logits.

    The input row is [observation, one-hot previous action, optional
    one-hot agent id, belief z]; the hidden state carries the
    action-observation history across an episode.
    """

    def __init__(self, bank: ParamBank, group: str, input_dim: int,
                 n_actions: int, hidden_dim: int, rng: np.random.Generator):
        self.bank = bank
        self.group_name = group
        self.input_dim = input_dim
        self.n_actions = n_actions
        self.hidden_dim = hidden_dim
        linear_params(bank, group, "fc_in", input_dim, hidden_dim, rng)
        self.gru = GruCell(bank, group, hidden_dim, hidden_dim, rng)
        linear_params(bank, group, "fc_out", hidden_dim, n_actions, rng)

    def step(self, tape: Tape, x: Var, h: Var,
             trainable: bool = True) -> tuple[Var, Var]:
        group = self.bank.group(self.group_name)
        y = tape.relu(linear(tape, group, "fc_in", x, trainable))
        h_new = self.gru.step(tape, y, h, trainable)
        logits = linear(tape, group, "fc_out", h_new, trainable)
        if not np.all(np.isfinite(logits.value)):
            raise TrainingFault("non-finite actor logits")
        return logits, h_new


def make_value_net(bank: ParamBank, group: str, input_dim: int,
                   hidden_dim: int, rng: np.random.Generator) -> Mlp:
    return Mlp(bank, group, [input_dim, hidden_dim, hidden_dim, 1], rng)


def build_hat_state(tape: Tape, own_obs: Var, others_obs: Var, weights: Var) -> Var:
    """Filtered state: own observation, then weighted other observations.

    All arguments are row-batched; ``others_obs`` and ``weights`` are
    already flattened to (rows, (N-1)*obs_dim) in ascending other index.
    """
    return tape.concat([own_obs, tape.mul(weights, others_obs)], axis=1)


def log_policy(tape: Tape, logits: Var) -> tuple[Var, Var]:
    """Log-probabilities and per-row entropy from logits."""
    lse = tape.logsumexp(logits)
    lse_col = tape.reshape(lse, (logits.value.shape[0], 1))
    logp = tape.sub(logits, lse_col)
    p = tape.exp(logp)
    entropy = tape.neg(tape.sum(tape.mul(p, logp), axis=1))
    return logp, entropy
