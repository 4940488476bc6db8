"""Per-agent variational belief models with agent-modelling filters.

Each agent i owns three networks, never shared across agents:

* encoder: current observation -> diagonal Gaussian over a latent belief z
* decoder: z -> prediction of the other agents' observations, ordered by
  ascending other-agent index
* filter net: any other agent's observation -> per-feature weights in
  (0, 1), plus a frozen target copy refreshed by scheduled hard updates

The reconstruction loss compares target-filtered true observations with
live-filtered predictions; a negative-squared-norm term keeps the filters
from collapsing to zero and a KL term anchors the encoder to a standard
normal prior. Training batches are single joint observations drawn from a
FIFO replay buffer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .nncore import (
    GaussianHead,
    LOG_SIGMA_MAX,
    LOG_SIGMA_MIN,
    Mlp,
    ParamBank,
    Tape,
    Var,
    adam_step,
    clip_grad_norm,
    gaussian_sample,
    hard_copy,
    linear,
    linear_params,
)

DEFAULT_BUFFER_CAPACITY = 50_000
DEFAULT_BATCH_SIZE = 16


@dataclass
class BeliefSample:
    """One latent draw with the Gaussian parameters it came from."""

    z: np.ndarray
    mu: np.ndarray
    log_sigma: np.ndarray
    obs_index: int | None = None


@dataclass
class FilterVector:
    """Live and target filter weights for one agent over the others."""

    agent_id: int
    live: np.ndarray    # (n_agents - 1, obs_dim), ascending other index
    target: np.ndarray


class EDBuffer:
    """Ring buffer of joint observations with FIFO eviction."""

    def __init__(self, capacity: int, n_agents: int, obs_dim: int):
        if capacity < 1:
            raise ConfigError("buffer capacity must be positive")
        self.capacity = capacity
        self._data = np.zeros((capacity, n_agents, obs_dim))
        self._next = 0
        self._size = 0

    def add(self, joint_obs: np.ndarray) -> None:
        self._data[self._next] = joint_obs
        self._next = (self._next + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def __len__(self) -> int:
        return self._size

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Uniform draw without replacement within the batch."""
        if n > self._size:
            raise ConfigError("not enough buffered transitions to sample")
        idx = rng.choice(self._size, size=n, replace=False)
        return self._data[idx].copy()


class StateBeliefModel:
    """All belief networks for one cohort of agents, plus their losses."""

    def __init__(self, bank: ParamBank, n_agents: int, obs_dim: int,
                 latent_dim: int, hidden_dim: int, rng: np.random.Generator, *,
                 lambda_rec: float = 1.0, lambda_kl: float = 0.1,
                 lambda_norm: float = 0.1, lr_ed: float = 0.0005,
                 lr_w: float = 0.0005, use_filters: bool = True,
                 buffer_capacity: int = DEFAULT_BUFFER_CAPACITY,
                 batch_size: int = DEFAULT_BATCH_SIZE,
                 input_scale: float = 1.0, max_grad_norm: float = 10.0):
        if n_agents < 2:
            raise ConfigError("belief modelling needs at least two agents")
        self.bank = bank
        self.n_agents = n_agents
        self.obs_dim = obs_dim
        self.latent_dim = latent_dim
        self.lambda_rec = lambda_rec
        self.lambda_kl = lambda_kl
        self.lambda_norm = lambda_norm
        self.lr_ed = lr_ed
        self.lr_w = lr_w
        self.use_filters = use_filters
        self.batch_size = batch_size
        self.max_grad_norm = max_grad_norm
        # constant factor applied to observation-valued network inputs; the
        # loss targets stay in raw observation units
        self.input_scale = input_scale
        self.buffer = EDBuffer(buffer_capacity, n_agents, obs_dim)
        self.last_losses = {"rec": 0.0, "kl": 0.0, "norm": 0.0}

        self._enc_body = []
        self._decoders = []
        self._filters = []
        self._filter_targets = []
        for i in range(n_agents):
            self._enc_body.append(Mlp(bank, f"encoder_{i}",
                                      [obs_dim, hidden_dim, hidden_dim],
                                      rng, head="relu"))
            linear_params(bank, f"encoder_{i}", "mu", hidden_dim, latent_dim, rng)
            linear_params(bank, f"encoder_{i}", "ls", hidden_dim, latent_dim, rng)
            self._decoders.append(Mlp(bank, f"decoder_{i}",
                                      [latent_dim, hidden_dim, hidden_dim,
                                       (n_agents - 1) * obs_dim], rng))
            self._filters.append(Mlp(bank, f"filter_{i}",
                                     [obs_dim, hidden_dim, hidden_dim, obs_dim],
                                     rng, head="sigmoid"))
            self._filter_targets.append(Mlp(bank, f"filter_target_{i}",
                                            [obs_dim, hidden_dim, hidden_dim,
                                             obs_dim], rng, head="sigmoid"))
            hard_copy(bank.group(f"filter_{i}"), bank.group(f"filter_target_{i}"))

    # ---- network forwards -------------------------------------------------

    def encode(self, tape: Tape, agent_id: int, obs: Var | np.ndarray,
               trainable: bool = True) -> GaussianHead:
        """Gaussian belief parameters from the raw current observation only."""
        if not isinstance(obs, Var):
            obs = tape.const(obs)
        if obs.value.shape[-1] != self.obs_dim:
            raise ConfigError(f"encode: obs dim {obs.value.shape[-1]} != {self.obs_dim}")
        if self.input_scale != 1.0:
            obs = tape.scale(obs, self.input_scale)
        body = self._enc_body[agent_id](tape, obs, trainable)
        group = self.bank.group(f"encoder_{agent_id}")
        mu = linear(tape, group, "mu", body, trainable)
        log_sigma = tape.clip(linear(tape, group, "ls", body, trainable),
                              LOG_SIGMA_MIN, LOG_SIGMA_MAX)
        return GaussianHead(mu=mu, log_sigma=log_sigma)

    def sample(self, tape: Tape, head: GaussianHead, noise: np.ndarray) -> Var:
        return gaussian_sample(tape, head, noise)

    def decode(self, tape: Tape, agent_id: int, z: Var, trainable: bool = True) -> Var:
        return self._decoders[agent_id](tape, z, trainable)

    def filter_weights(self, tape: Tape, agent_id: int, other_obs: Var,
                       use_target: bool = False, trainable: bool = True) -> Var:
        """Filter net applied to rows of other agents' observations.

        When ``use_filters`` is off the weights are constant ones, which
        reduces the reconstruction loss to a plain squared error.
        """
        if not self.use_filters:
            return tape.const(np.ones_like(other_obs.value))
        if self.input_scale != 1.0:
            other_obs = tape.scale(other_obs, self.input_scale)
        if use_target:
            return self._filter_targets[agent_id](tape, other_obs, trainable=False)
        return self._filters[agent_id](tape, other_obs, trainable=trainable)

    def compute_filters(self, agent_id: int, other_obs: np.ndarray) -> FilterVector:
        """Both live and target weights for one stack of other-agent rows."""
        tape = Tape()
        rows = tape.const(np.asarray(other_obs, dtype=np.float64))
        live = self.filter_weights(tape, agent_id, rows, use_target=False,
                                   trainable=False)
        target = self.filter_weights(tape, agent_id, rows, use_target=True)
        return FilterVector(agent_id, live.value.copy(), target.value.copy())

    def belief(self, agent_id: int, obs: np.ndarray,
               noise: np.ndarray | None = None) -> BeliefSample:
        """Convenience forward for acting: sampled when noise given, else mu."""
        tape = Tape()
        head = self.encode(tape, agent_id, np.atleast_2d(obs), trainable=False)
        if noise is None:
            z = head.mu.value
        else:
            z = self.sample(tape, head, np.atleast_2d(noise)).value
        return BeliefSample(z=z[0].copy(), mu=head.mu.value[0].copy(),
                            log_sigma=head.log_sigma.value[0].copy())

    # ---- losses -------------------------------------------------------------

    def _other_rows(self, tape: Tape, obs_batch: np.ndarray, agent_id: int):
        others = [j for j in range(self.n_agents) if j != agent_id]
        flat = obs_batch[:, others, :].reshape(-1, self.obs_dim)
        return tape.const(flat), len(others)

    def encodings_losses(self, tape: Tape, agent_id: int, obs_batch: np.ndarray,
                         noise: np.ndarray, trainable: bool = True) -> dict[str, Var]:
        """Reconstruction, KL and filter-norm terms on one joint-obs batch."""
        n_batch = obs_batch.shape[0]
        head = self.encode(tape, agent_id, obs_batch[:, agent_id, :], trainable)
        z = self.sample(tape, head, noise)
        pred = self.decode(tape, agent_id, z, trainable)

        other_rows, n_others = self._other_rows(tape, obs_batch, agent_id)
        w_live = self.filter_weights(tape, agent_id, other_rows,
                                     use_target=False, trainable=trainable)
        w_target = self.filter_weights(tape, agent_id, other_rows, use_target=True)
        flat_shape = (n_batch, n_others * self.obs_dim)
        live_flat = tape.reshape(w_live, flat_shape)
        target_flat = tape.reshape(w_target, flat_shape)
        others_flat = tape.reshape(other_rows, flat_shape)

        diff = tape.sub(tape.mul(target_flat, others_flat), tape.mul(live_flat, pred))
        rec = tape.scale(tape.mean(tape.sum(tape.square(diff), axis=1)), 1.0 / n_others)

        sigma_sq = tape.exp(tape.scale(head.log_sigma, 2.0))
        kl_terms = tape.sub(tape.add(tape.square(head.mu), sigma_sq),
                            tape.add_scalar(tape.scale(head.log_sigma, 2.0), 1.0))
        kl = tape.scale(tape.mean(tape.sum(kl_terms, axis=1)), 0.5)

        norm = tape.neg(tape.mean(tape.sum(tape.square(w_live), axis=1)))
        return {"rec": rec, "kl": kl, "norm": norm}

    def rec_loss(self, tape: Tape, agent_id: int, obs_batch: np.ndarray,
                 noise: np.ndarray, trainable: bool = True) -> Var:
        return self.encodings_losses(tape, agent_id, obs_batch, noise, trainable)["rec"]

    def kl_loss(self, tape: Tape, agent_id: int, obs_batch: np.ndarray,
                trainable: bool = True) -> Var:
        head = self.encode(tape, agent_id, obs_batch[:, agent_id, :], trainable)
        sigma_sq = tape.exp(tape.scale(head.log_sigma, 2.0))
        terms = tape.sub(tape.add(tape.square(head.mu), sigma_sq),
                         tape.add_scalar(tape.scale(head.log_sigma, 2.0), 1.0))
        return tape.scale(tape.mean(tape.sum(terms, axis=1)), 0.5)

    def norm_loss(self, tape: Tape, agent_id: int, obs_batch: np.ndarray,
                  trainable: bool = True) -> Var:
        other_rows, _ = self._other_rows(tape, obs_batch, agent_id)
        w = self.filter_weights(tape, agent_id, other_rows, trainable=trainable)
        return tape.neg(tape.mean(tape.sum(tape.square(w), axis=1)))

    # ---- updates -------------------------------------------------------------

    def ed_update(self, rng: np.random.Generator) -> dict[str, float] | None:
        """One scheduled minimization step per agent; None if data is short."""
        if len(self.buffer) < self.batch_size:
            return None
        totals = {"rec": 0.0, "kl": 0.0, "norm": 0.0}
        for i in range(self.n_agents):
            batch = self.buffer.sample(rng, self.batch_size)
            noise = rng.standard_normal((self.batch_size, self.latent_dim))
            groups = [self.bank.group(f"encoder_{i}"), self.bank.group(f"decoder_{i}")]
            if self.use_filters:
                groups.append(self.bank.group(f"filter_{i}"))
            for g in groups:
                for p in g.values():
                    p.grad[:] = 0.0
            tape = Tape()
            losses = self.encodings_losses(tape, i, batch, noise)
            total = tape.scale(losses["rec"], self.lambda_rec)
            if self.lambda_kl != 0.0:
                total = tape.add(total, tape.scale(losses["kl"], self.lambda_kl))
            if self.lambda_norm != 0.0 and self.use_filters:
                total = tape.add(total, tape.scale(losses["norm"], self.lambda_norm))
            tape.backward(total)
            clip_grad_norm(groups, self.max_grad_norm)
            adam_step(self.bank.group(f"encoder_{i}"), self.lr_ed)
            adam_step(self.bank.group(f"decoder_{i}"), self.lr_ed)
            if self.use_filters:
                adam_step(self.bank.group(f"filter_{i}"), self.lr_w)
            for key in totals:
                totals[key] += float(losses[key].value)
        self.last_losses = {k: v / self.n_agents for k, v in totals.items()}
        return dict(self.last_losses)

    def filter_target_update(self) -> None:
        for i in range(self.n_agents):
            hard_copy(self.bank.group(f"filter_{i}"),
                      self.bank.group(f"filter_target_{i}"))

    # ---- inspection -----------------------------------------------------------

    def dump_embeddings(self, agent_id: int, episode_obs: np.ndarray,
                        eval_mode: bool = True,
                        rng: np.random.Generator | None = None) -> tuple[list[str], list[list[float]]]:
        """Tabular belief records for one episode of joint observations.

        Returns (header, rows); one row per time step with the latent draw,
        the Gaussian mean, and the mean filter weight per other agent.
        """
        episode_obs = np.asarray(episode_obs, dtype=np.float64)
        t_len = episode_obs.shape[0]
        others = [j for j in range(self.n_agents) if j != agent_id]
        header = (["agent_id", "t"]
                  + [f"z_{d}" for d in range(self.latent_dim)]
                  + [f"mu_{d}" for d in range(self.latent_dim)]
                  + [f"w_mean_{j}" for j in others])
        rows = []
        for t in range(t_len):
            obs_t = episode_obs[t]
            if eval_mode:
                sample = self.belief(agent_id, obs_t[agent_id])
            else:
                if rng is None:
                    raise ConfigError("sampling dump requires an rng")
                sample = self.belief(agent_id, obs_t[agent_id],
                                     rng.standard_normal(self.latent_dim))
            fv = self.compute_filters(agent_id, obs_t[others])
            rows.append([float(agent_id), float(t), *sample.z.tolist(),
                         *sample.mu.tolist(), *fv.live.mean(axis=1).tolist()])
        return header, rows
