"""Belief-augmented multi-agent actor-critic training loop.

One trainer owns everything a run needs: parallel environments, the
belief models, both critics with their targets, the exploration counters
and every schedule. Acting is forward-only; each round of parallel
episodes is followed by one actor update, one update per critic, and any
belief-model or target-network updates whose env-step schedule came due.

Execution stays decentralized: action selection reads only the agent's
own observation, its recurrent history and its own belief; joint states
and filters are training-time inputs of the critics only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..config import RunConfig
from ..envs.parallel import TrajectoryBatch, run_parallel
from ..envs.presets import parse_env_name
from ..errors import ConfigError, TrainingFault
from ..explore import BeliefExplorer
from ..metrics import MetricsRow
from ..nncore import ParamBank, PeriodicSchedule, Tape, adam_step, clip_grad_norm, hard_copy
from ..statemodel import StateBeliefModel
from .nets import RecurrentActor, build_hat_state, log_policy, make_value_net
from .returns import td_targets


@dataclass
class LossReport:
    """All named loss values of one update round."""

    step: int
    actor_loss: float
    critic_loss: float
    critic_w_loss: float
    rec_loss: float
    kl_loss: float
    norm_loss: float
    encodings_loss: float
    entropy: float
    mean_r_hat: float


def _onehot(idx: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((len(idx), n))
    valid = idx >= 0
    out[np.nonzero(valid)[0], idx[valid]] = 1.0
    return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class Trainer:
    """Runs the full training loop for one seeded configuration.

    ``zero_belief`` is a diagnostic switch (not one of the ablation flags)
    that replaces every belief input with zeros; together with all
    component ablations it reduces the algorithm to its plain actor-critic
    backbone, which the tests exploit.
    """

    def __init__(self, config: RunConfig, zero_belief: bool = False):
        if config.lambda_rec is None or config.latent_dim is None:
            raise ConfigError("config must be resolved (call RunConfig.resolve)")
        self.config = config
        self.flags = config.ablation
        self.zero_belief = zero_belief
        self.preset = parse_env_name(config.env)
        seed = config.seed

        self.envs = [
            self.preset.make(
                rng=np.random.default_rng(np.random.SeedSequence([seed, 1, e])),
                max_episode_len=config.max_episode_len)
            for e in range(config.n_envs)
        ]
        self.spec = self.envs[0].spec
        n = self.spec.n_agents
        if n < 2:
            raise ConfigError("training needs at least two agents")

        init_rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
        self.train_rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))

        self.bank = ParamBank()
        self.model = StateBeliefModel(
            self.bank, n, self.spec.obs_dim, config.latent_dim, config.hidden_dim,
            init_rng,
            lambda_rec=config.lambda_rec,
            lambda_kl=0.0 if self.flags.no_kl else config.lambda_kl,
            lambda_norm=0.0 if self.flags.no_L2_norm else config.lambda_norm,
            lr_ed=config.lr_ed, lr_w=config.lr_w,
            use_filters=not self.flags.no_filters,
            buffer_capacity=config.buffer_capacity,
            batch_size=config.ed_batch_size,
            input_scale=self.spec.obs_scale,
            max_grad_norm=config.max_grad_norm,
        )

        self.shared_policy = bool(config.shared_policy)
        actor_input = (self.spec.obs_dim + self.spec.n_actions
                       + (n if self.shared_policy else 0) + config.latent_dim)
        n_actor_groups = 1 if self.shared_policy else n
        self.actors = [
            RecurrentActor(self.bank, f"actor_{k}", actor_input,
                           self.spec.n_actions, config.hidden_dim, init_rng)
            for k in range(n_actor_groups)
        ]
        self.actor_group_names = [a.group_name for a in self.actors]

        self.critic = make_value_net(self.bank, "critic", self.spec.state_dim,
                                     config.hidden_dim, init_rng)
        self.critic_target = make_value_net(self.bank, "critic_target",
                                            self.spec.state_dim,
                                            config.hidden_dim, init_rng)
        hat_dim = n * self.spec.obs_dim
        self.critic_w = make_value_net(self.bank, "critic_w", hat_dim,
                                       config.hidden_dim, init_rng)
        self.critic_w_target = make_value_net(self.bank, "critic_w_target",
                                              hat_dim, config.hidden_dim, init_rng)
        hard_copy(self.bank.group("critic"), self.bank.group("critic_target"))
        hard_copy(self.bank.group("critic_w"), self.bank.group("critic_w_target"))

        self.explorer = None
        if not self.flags.no_intr:
            mode = "obs" if self.flags.obs_rew else "belief"
            dim = self.spec.obs_dim if self.flags.obs_rew else config.latent_dim
            self.explorer = BeliefExplorer(n, dim, bits=config.hash_bits,
                                           seed=seed, mode=mode)

        self.env_steps = 0
        self.episodes_done = 0
        self.rl_rounds = 0
        self.ed_schedule = PeriodicSchedule(config.n_ed)
        self.wtup_schedule = PeriodicSchedule(config.n_wtup)
        self.tup_schedule = PeriodicSchedule(config.n_tup)
        self._eval_round = 0
        self._window_r_hat_sum = 0.0
        self._window_r_hat_n = 0

    # ------------------------------------------------------------------
    # acting
    # ------------------------------------------------------------------

    def _actor_for(self, agent_id: int) -> RecurrentActor:
        return self.actors[0 if self.shared_policy else agent_id]

    def _actor_static_input(self, obs_i: np.ndarray, prev_actions_i: np.ndarray,
                            agent_id: int) -> np.ndarray:
        parts = [obs_i * self.spec.obs_scale,
                 _onehot(prev_actions_i, self.spec.n_actions)]
        if self.shared_policy:
            ids = np.zeros((obs_i.shape[0], self.spec.n_agents))
            ids[:, agent_id] = 1.0
            parts.append(ids)
        return np.concatenate(parts, axis=1)

    def _make_policy(self, greedy: bool):
        """Closure for run_parallel; keeps per-env recurrent state."""
        n = self.spec.n_agents
        hidden_dim = self.config.hidden_dim
        latent = self.config.latent_dim
        hiddens: dict[int, np.ndarray] = {}
        prev_actions: dict[int, np.ndarray] = {}

        def policy(t, env_ids, obs_stack):
            k_envs = len(env_ids)
            for e in env_ids:
                if e not in hiddens:
                    hiddens[e] = np.zeros((n, hidden_dim))
                    prev_actions[e] = np.full(n, -1, dtype=np.int64)
            if greedy:
                noise = None
            else:
                noise = self.train_rng.standard_normal((k_envs, n, latent))
            z_store = np.zeros((k_envs, n, latent))
            hid_store = np.stack([hiddens[e] for e in env_ids])
            prev = np.stack([prev_actions[e] for e in env_ids])
            tape = Tape()
            x_rows, h_rows = [], []
            for i in range(n):
                obs_i = obs_stack[:, i, :]
                head = self.model.encode(tape, i, obs_i, trainable=False)
                if self.zero_belief:
                    z = np.zeros((k_envs, latent))
                elif greedy:
                    z = head.mu.value
                else:
                    z = head.mu.value + np.exp(head.log_sigma.value) * noise[:, i, :]
                z_store[:, i, :] = z
                static = self._actor_static_input(obs_i, prev[:, i], i)
                x_rows.append(np.concatenate([static, z], axis=1))
                h_rows.append(hid_store[:, i, :])
            logits, h_new = self._actor_rows(tape, x_rows, h_rows, trainable=False)
            # logits/h_new rows are agent-major: agent i occupies rows
            # [i*k_envs, (i+1)*k_envs)
            if greedy:
                flat_actions = logits.argmax(axis=1)
            else:
                probs = _softmax(logits)
                u = self.train_rng.random((k_envs, n))
                flat_actions = np.minimum(
                    (probs.cumsum(axis=1) < u.T.reshape(-1, 1)).sum(axis=1),
                    self.spec.n_actions - 1)
            actions = flat_actions.reshape(n, k_envs).T.astype(np.int64)
            h_next = h_new.reshape(n, k_envs, hidden_dim)
            for k, e in enumerate(env_ids):
                hiddens[e] = h_next[:, k, :].copy()
                prev_actions[e] = actions[k].copy()
            extras = {"z": z_store, "hidden": hid_store}
            if noise is not None:
                extras["noise"] = noise
            if self.explorer is not None and self.explorer.mode == "obs":
                extras["obs_in"] = obs_stack
            return actions, extras

        return policy

    def _actor_rows(self, tape: Tape, x_rows: list, h_rows: list,
                    trainable: bool) -> tuple:
        """Forward all agents' actor inputs, stacking rows when shared.

        ``x_rows``/``h_rows`` hold one entry per agent, each either a Var
        or a plain (rows, dim) array. Returns logits and new hidden values
        as arrays (or Vars when training) with agent-major row blocks.
        """
        n = self.spec.n_agents
        if self.shared_policy:
            x = (tape.concat([self._as_var(tape, r) for r in x_rows], axis=0)
                 if n > 1 else self._as_var(tape, x_rows[0]))
            h = tape.concat([self._as_var(tape, r) for r in h_rows], axis=0) \
                if n > 1 else self._as_var(tape, h_rows[0])
            logits, h_new = self.actors[0].step(tape, x, h, trainable)
            if trainable:
                return logits, h_new
            return logits.value, h_new.value
        outs = []
        for i in range(n):
            logits, h_new = self.actors[i].step(
                tape, self._as_var(tape, x_rows[i]),
                self._as_var(tape, h_rows[i]), trainable)
            outs.append((logits, h_new))
        if trainable:
            return (tape.concat([o[0] for o in outs], axis=0),
                    tape.concat([o[1] for o in outs], axis=0))
        return (np.concatenate([o[0].value for o in outs], axis=0),
                np.concatenate([o[1].value for o in outs], axis=0))

    @staticmethod
    def _as_var(tape: Tape, rows):
        from ..nncore import Var
        return rows if isinstance(rows, Var) else tape.const(rows)

    def _reward_hook(self):
        n = self.spec.n_agents
        beta = self.config.beta

        def hook(env_id, result, extras_row):
            if self.explorer is None:
                return np.zeros(n), np.full(n, result.reward)
            r_hat = np.empty(n)
            for i in range(n):
                v = (extras_row["obs_in"][i] if self.explorer.mode == "obs"
                     else extras_row["z"][i])
                r_hat[i] = self.explorer.intrinsic_reward(i, v)
            return r_hat, result.reward + beta * r_hat

        return hook

    def collect_batch(self, max_joint_steps: int | None = None) -> TrajectoryBatch:
        """Restart every env, roll one episode each, feed the replay buffer."""
        for env in self.envs:
            env.reset()
        batch = run_parallel(self.envs, self._make_policy(greedy=False),
                             self._reward_hook(), max_joint_steps=max_joint_steps)
        t_max = batch.mask.shape[1]
        for t in range(t_max):
            for e in range(batch.n_envs):
                if batch.mask[e, t]:
                    self.model.buffer.add(batch.obs[e, t])
        self.env_steps += batch.n_steps
        self.episodes_done += int(batch.terminals.any(axis=1).sum())
        valid = batch.mask
        self._window_r_hat_sum += float(batch.intrinsic[valid].sum())
        self._window_r_hat_n += int(valid.sum()) * self.spec.n_agents
        return batch

    # ------------------------------------------------------------------
    # losses (each builds on a caller-supplied tape)
    # ------------------------------------------------------------------

    def _values(self, net, rows: np.ndarray) -> np.ndarray:
        """Forward a value net without gradients; returns a flat vector."""
        tape = Tape()
        out = net(tape, tape.const(rows), trainable=False)
        return out.value[:, 0]

    def _hat_rows(self, tape: Tape, obs4: np.ndarray, agent_id: int,
                  trainable: bool):
        """Filtered-state rows for one agent over a padded (E,T,N,D) block.

        The rows are built in the critic's scaled input units; the filter
        weights themselves come from the raw observations (the filter net
        applies the model's input scaling internally).
        """
        e_envs, t_max, n, d = obs4.shape
        rows = e_envs * t_max
        scale = self.spec.obs_scale
        others = [j for j in range(n) if j != agent_id]
        own = obs4[:, :, agent_id, :].reshape(rows, d) * scale
        others_flat = obs4[:, :, others, :].reshape(rows, (n - 1) * d)
        w = self.model.filter_weights(
            tape, agent_id, tape.const(others_flat.reshape(rows * (n - 1), d)),
            trainable=trainable)
        w_flat = tape.reshape(w, (rows, (n - 1) * d))
        return build_hat_state(tape, tape.const(own),
                               tape.const(others_flat * scale), w_flat)

    def _hat_values(self, obs4: np.ndarray, agent_id: int, net) -> np.ndarray:
        tape = Tape()
        hat = self._hat_rows(tape, obs4, agent_id, trainable=False)
        return net(tape, hat, trainable=False).value[:, 0]

    def compute_targets(self, batch: TrajectoryBatch) -> dict[str, np.ndarray]:
        """TD targets and actor advantages from pre-update parameters."""
        cfg, flags = self.config, self.flags
        e_envs, t_max = batch.mask.shape
        n = self.spec.n_agents
        out: dict[str, np.ndarray] = {}

        if not flags.no_standard_critic:
            scale = self.spec.obs_scale
            v_live = self._values(self.critic,
                                  batch.states.reshape(e_envs * t_max, -1) * scale)
            v_next = self._values(self.critic_target,
                                  batch.next_states.reshape(e_envs * t_max, -1) * scale)
            boot = np.broadcast_to(v_next.reshape(e_envs, t_max)[..., None],
                                   batch.mixed.shape)
            out["y_critic"] = td_targets(batch.mixed, boot, batch.terminals,
                                         batch.lengths, cfg.gamma, cfg.n_step)
            out["advantage"] = ((out["y_critic"]
                                 - v_live.reshape(e_envs, t_max)[..., None])
                                * batch.mask[..., None])

        if not flags.no_critic_w or flags.no_standard_critic:
            vk_next = np.stack(
                [self._hat_values(batch.next_obs, i, self.critic_w_target)
                 .reshape(e_envs, t_max) for i in range(n)], axis=-1)
            out["y_critic_w"] = td_targets(batch.mixed, vk_next, batch.terminals,
                                           batch.lengths, cfg.gamma, cfg.n_step)

        if flags.no_standard_critic:
            vk_live = np.stack(
                [self._hat_values(batch.obs, i, self.critic_w)
                 .reshape(e_envs, t_max) for i in range(n)], axis=-1)
            out["advantage"] = (out["y_critic_w"] - vk_live) * batch.mask[..., None]
        return out

    def _actor_input_part(self, tape: Tape, batch: TrajectoryBatch, t: int,
                          prev: np.ndarray, agent_id: int):
        """One agent's actor input rows at step t, on-tape when beliefs train."""
        obs_t = batch.obs[:, t, agent_id, :]
        static = self._actor_static_input(obs_t, prev, agent_id)
        if self.zero_belief:
            zeros = np.zeros((obs_t.shape[0], self.config.latent_dim))
            return tape.const(np.concatenate([static, zeros], axis=1))
        head = self.model.encode(tape, agent_id, obs_t, trainable=True)
        z = self.model.sample(tape, head, batch.extras["noise"][:, t, agent_id, :])
        return tape.concat([tape.const(static), z], axis=1)

    def actor_loss(self, tape: Tape, batch: TrajectoryBatch,
                   advantage: np.ndarray) -> tuple:
        """Policy-gradient loss with entropy bonus; advantage is constant data.

        Gradients reach the actor parameters and, through the belief
        samples, each agent's encoder. Critics never appear on this tape.
        When the policy is shared, all agents ride one row-stacked forward
        pass per time step (rows agent-major).
        """
        cfg = self.config
        e_envs, t_max = batch.mask.shape
        n = self.spec.n_agents
        mask = batch.mask.astype(np.float64)
        n_terms = mask.sum() * n
        total = None
        entropy_sum = 0.0

        if self.shared_policy:
            h = tape.const(np.zeros((e_envs * n, cfg.hidden_dim)))
            prev = np.full((e_envs, n), -1, dtype=np.int64)
            for t in range(t_max):
                parts = [self._actor_input_part(tape, batch, t, prev[:, i], i)
                         for i in range(n)]
                x = tape.concat(parts, axis=0)
                logits, h = self.actors[0].step(tape, x, h, trainable=True)
                acts = batch.actions[:, t, :].T.reshape(-1)
                adv = advantage[:, t, :].T.reshape(-1)
                mask_t = np.tile(mask[:, t], n)
                total, ent = self._accumulate_pg_terms(
                    tape, logits, acts, adv, mask_t, total)
                entropy_sum += ent
                prev = batch.actions[:, t, :]
        else:
            for i in range(n):
                actor = self._actor_for(i)
                h = tape.const(np.zeros((e_envs, cfg.hidden_dim)))
                prev = np.full(e_envs, -1, dtype=np.int64)
                for t in range(t_max):
                    x = self._actor_input_part(tape, batch, t, prev, i)
                    logits, h = actor.step(tape, x, h, trainable=True)
                    total, ent = self._accumulate_pg_terms(
                        tape, logits, batch.actions[:, t, i],
                        advantage[:, t, i], mask[:, t], total)
                    entropy_sum += ent
                    prev = batch.actions[:, t, i]

        loss = tape.scale(total, 1.0 / n_terms)
        return loss, entropy_sum / n_terms

    def _accumulate_pg_terms(self, tape: Tape, logits, actions, advantage,
                             mask_rows, total):
        """Add one step's -logpi*A - beta_H*H terms into the running sum."""
        logp, entropy = log_policy(tape, logits)
        logp_taken = tape.take_per_row(logp, actions)
        term = tape.add(
            tape.mul(logp_taken, tape.const(-advantage)),
            tape.mul(entropy, tape.const(-self.config.entropy_coef * mask_rows)))
        summed = tape.sum(term)
        total = summed if total is None else tape.add(total, summed)
        return total, float((entropy.value * mask_rows).sum())

    def critic_loss(self, tape: Tape, batch: TrajectoryBatch,
                    targets: np.ndarray):
        """Mean squared TD error of the joint-state critic (per-agent rewards)."""
        e_envs, t_max = batch.mask.shape
        n = self.spec.n_agents
        rows = e_envs * t_max
        v = self.critic(tape,
                        tape.const(batch.states.reshape(rows, -1) * self.spec.obs_scale),
                        trainable=True)
        diff = tape.sub(tape.const(targets.reshape(rows, n)), v)
        masked = tape.mul(tape.square(diff),
                          tape.const(batch.mask.reshape(rows, 1).astype(np.float64)))
        return tape.scale(tape.sum(masked), 1.0 / (batch.mask.sum() * n))

    def critic_w_loss(self, tape: Tape, batch: TrajectoryBatch,
                      targets: np.ndarray):
        """TD loss of the filtered-state critic; trains the filters too."""
        e_envs, t_max = batch.mask.shape
        n = self.spec.n_agents
        rows = e_envs * t_max
        mask_rows = tape.const(batch.mask.reshape(rows, 1).astype(np.float64))
        total = None
        for i in range(n):
            hat = self._hat_rows(tape, batch.obs, i, trainable=True)
            v = self.critic_w(tape, hat, trainable=True)
            diff = tape.sub(tape.const(targets[:, :, i].reshape(rows, 1)), v)
            masked = tape.mul(tape.square(diff), mask_rows)
            summed = tape.sum(masked)
            total = summed if total is None else tape.add(total, summed)
        return tape.scale(total, 1.0 / (batch.mask.sum() * n))

    # ------------------------------------------------------------------
    # updates
    # ------------------------------------------------------------------

    def train_step(self, batch: TrajectoryBatch) -> LossReport:
        """One round of actor, critic and filtered-critic updates."""
        cfg, flags = self.config, self.flags
        n = self.spec.n_agents
        self.bank.zero_grads()
        targets = self.compute_targets(batch)

        tape = Tape()
        loss_actor, entropy_mean = self.actor_loss(tape, batch, targets["advantage"])
        if not np.isfinite(loss_actor.value):
            raise TrainingFault(f"non-finite actor loss at step {self.env_steps}")
        tape.backward(loss_actor)
        actor_groups = [self.bank.group(name) for name in self.actor_group_names]
        if not self.zero_belief:
            actor_groups += [self.bank.group(f"encoder_{i}") for i in range(n)]
        clip_grad_norm(actor_groups, cfg.max_grad_norm)
        for name in self.actor_group_names:
            adam_step(self.bank.group(name), cfg.lr)
        if not self.zero_belief:
            for i in range(n):
                adam_step(self.bank.group(f"encoder_{i}"), cfg.lr_ed)

        critic_value = 0.0
        if not flags.no_standard_critic:
            tape_c = Tape()
            loss_c = self.critic_loss(tape_c, batch, targets["y_critic"])
            if not np.isfinite(loss_c.value):
                raise TrainingFault(f"non-finite critic loss at step {self.env_steps}")
            tape_c.backward(loss_c)
            clip_grad_norm(self.bank.group("critic"), cfg.max_grad_norm)
            adam_step(self.bank.group("critic"), cfg.lr)
            critic_value = float(loss_c.value)

        critic_w_value = 0.0
        if not flags.no_critic_w:
            tape_w = Tape()
            loss_w = self.critic_w_loss(tape_w, batch, targets["y_critic_w"])
            if not np.isfinite(loss_w.value):
                raise TrainingFault(f"non-finite critic_w loss at step {self.env_steps}")
            tape_w.backward(loss_w)
            w_groups = [self.bank.group("critic_w")]
            if self.model.use_filters:
                w_groups += [self.bank.group(f"filter_{i}") for i in range(n)]
            clip_grad_norm(w_groups, cfg.max_grad_norm)
            adam_step(self.bank.group("critic_w"), cfg.lr)
            if self.model.use_filters:
                for i in range(n):
                    adam_step(self.bank.group(f"filter_{i}"), cfg.lr_w_critic)
            critic_w_value = float(loss_w.value)

        self.rl_rounds += 1
        # N_tup counts update rounds: the stale target is a deliberate
        # stabilizer for the TD targets
        for _ in range(self.tup_schedule.due(self.rl_rounds)):
            hard_copy(self.bank.group("critic"), self.bank.group("critic_target"))
            hard_copy(self.bank.group("critic_w"), self.bank.group("critic_w_target"))

        rec = self.model.last_losses["rec"]
        kl = self.model.last_losses["kl"]
        norm = self.model.last_losses["norm"]
        encodings = (critic_w_value + self.model.lambda_rec * rec
                     + self.model.lambda_norm * norm + self.model.lambda_kl * kl)
        mean_r_hat = (float(batch.intrinsic[batch.mask].mean())
                      if self.explorer is not None else 0.0)
        return LossReport(
            step=self.env_steps, actor_loss=float(loss_actor.value),
            critic_loss=critic_value, critic_w_loss=critic_w_value,
            rec_loss=rec, kl_loss=kl, norm_loss=norm, encodings_loss=encodings,
            entropy=entropy_mean, mean_r_hat=mean_r_hat,
        )

    def scheduled_updates(self) -> None:
        """Env-step driven updates: belief models and filter targets."""
        for _ in range(self.ed_schedule.due(self.env_steps)):
            result = self.model.ed_update(self.train_rng)
            if result is None:
                continue
            if self.config.reset_counts_on_ed_update and self.explorer is not None:
                self.explorer.reset_counts()
        for _ in range(self.wtup_schedule.due(self.env_steps)):
            self.model.filter_target_update()

    # ------------------------------------------------------------------
    # evaluation and the full loop
    # ------------------------------------------------------------------

    def evaluate(self, n_episodes: int, seed_key: tuple) -> float:
        """Greedy episodes (argmax actions, z = mu); mean extrinsic return."""
        envs = [
            self.preset.make(
                rng=np.random.default_rng(np.random.SeedSequence(list(seed_key) + [e])),
                max_episode_len=self.config.max_episode_len)
            for e in range(n_episodes)
        ]
        for env in envs:
            env.reset()
        batch = run_parallel(envs, self._make_policy(greedy=True))
        return float(batch.rewards.sum(axis=1).mean())

    def run(self):
        """Generator over MetricsRow, one row per metrics interval."""
        cfg = self.config
        start = time.perf_counter()
        next_metrics = cfg.metrics_interval
        while self.env_steps < cfg.horizon:
            batch = self.collect_batch(max_joint_steps=cfg.horizon - self.env_steps)
            report = self.train_step(batch)
            self.scheduled_updates()
            if self.env_steps >= next_metrics:
                eval_return = self.evaluate(cfg.eval_episodes,
                                            (cfg.seed, 3, self._eval_round))
                self._eval_round += 1
                window_mean = (self._window_r_hat_sum / self._window_r_hat_n
                               if self._window_r_hat_n else 0.0)
                sizes = (self.explorer.table_sizes() if self.explorer is not None
                         else [0])
                yield MetricsRow(
                    step=self.env_steps, episodes_done=self.episodes_done,
                    eval_return=eval_return, mean_r_hat=window_mean,
                    actor_loss=report.actor_loss, critic_loss=report.critic_loss,
                    critic_w_loss=report.critic_w_loss, rec_loss=report.rec_loss,
                    kl_loss=report.kl_loss, norm_loss=report.norm_loss,
                    encodings_loss=report.encodings_loss, entropy=report.entropy,
                    count_table_size=float(np.mean(sizes)),
                    wall_clock_s=time.perf_counter() - start,
                )
                self._window_r_hat_sum = 0.0
                self._window_r_hat_n = 0
                next_metrics = (self.env_steps // cfg.metrics_interval + 1) \
                    * cfg.metrics_interval
