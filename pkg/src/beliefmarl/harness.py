"""Run orchestration: output artifacts, snapshots, standalone evaluation.

A run writes into its output directory:

* ``config.txt``      resolved flat key=value config (re-parses equal)
* ``metrics.csv``     deterministic metrics, one row per interval
* ``timings.csv``     wall-clock seconds per metrics row
* ``snapshot.npz``    final parameters plus the embedded config
* ``embeddings.csv``  per-agent belief dump of one greedy episode (optional)
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .config import RunConfig, parse_config_text, serialize_config
from .envs.parallel import run_parallel
from .errors import ConfigError
from .marl.trainer import Trainer
from .metrics import (
    format_metrics_row,
    format_timings_row,
    metrics_header,
    timings_header,
)

CONFIG_KEY = "__config__"


def save_snapshot(trainer: Trainer, path: Path) -> None:
    arrays = {
        f"{g}/{n}": p.value
        for g in trainer.bank.groups()
        for n, p in trainer.bank.group(g).items()
    }
    arrays[CONFIG_KEY] = np.frombuffer(
        serialize_config(trainer.config).encode("utf-8"), dtype=np.uint8)
    np.savez(path, **arrays)


def load_snapshot(path: Path) -> tuple[RunConfig, dict[str, np.ndarray]]:
    with np.load(path) as data:
        if CONFIG_KEY not in data.files:
            raise ConfigError(f"{path} is not a parameter snapshot")
        text = data[CONFIG_KEY].tobytes().decode("utf-8")
        arrays = {k: data[k] for k in data.files if k != CONFIG_KEY}
    return parse_config_text(text, source=str(path)), arrays


def restore_trainer(path: Path) -> Trainer:
    """Rebuild a trainer from a snapshot (parameters loaded, no training state)."""
    config, arrays = load_snapshot(path)
    trainer = Trainer(config)
    for key, value in arrays.items():
        group, name = key.split("/", 1)
        target = trainer.bank.group(group)[name]
        if target.value.shape != value.shape:
            raise ConfigError(
                f"snapshot shape mismatch for {key}: {value.shape} vs "
                f"{target.value.shape} (env preset {config.env})")
        target.value[:] = value
    return trainer


def run(config: RunConfig, out_dir: str | Path | None = None,
        zero_belief: bool = False) -> Path:
    """Execute a full training run and write every artifact. Returns outdir."""
    out = Path(out_dir) if out_dir is not None else (
        Path(config.out_dir) / f"{config.env}-seed{config.seed}")
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(serialize_config(config), encoding="utf-8")

    trainer = Trainer(config, zero_belief=zero_belief)
    with open(out / "metrics.csv", "w", encoding="utf-8", newline="\n") as mf, \
            open(out / "timings.csv", "w", encoding="utf-8", newline="\n") as tf:
        mf.write(metrics_header() + "\n")
        tf.write(timings_header() + "\n")
        for row in trainer.run():
            mf.write(format_metrics_row(row) + "\n")
            tf.write(format_timings_row(row) + "\n")

    save_snapshot(trainer, out / "snapshot.npz")
    if config.dump_embeddings:
        write_embeddings(trainer, out / "embeddings.csv")
    return out


def write_embeddings(trainer: Trainer, path: Path) -> None:
    """Dump per-agent beliefs over one greedy episode to a CSV file."""
    env = trainer.preset.make(
        rng=np.random.default_rng(np.random.SeedSequence([trainer.config.seed, 4])),
        max_episode_len=trainer.config.max_episode_len)
    env.reset()
    batch = run_parallel([env], trainer._make_policy(greedy=True))
    episode_obs = batch.obs[0][batch.mask[0]]
    buf = io.StringIO()
    header_written = False
    for agent_id in range(trainer.spec.n_agents):
        header, rows = trainer.model.dump_embeddings(agent_id, episode_obs)
        if not header_written:
            buf.write(",".join(header) + "\n")
            header_written = True
        for row in rows:
            buf.write(",".join(repr(v) for v in row) + "\n")
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def evaluate(snapshot_path: str | Path, n_episodes: int, seed: int) -> float:
    """Mean greedy episodic extrinsic return of a saved parameter snapshot."""
    trainer = restore_trainer(Path(snapshot_path))
    return trainer.evaluate(n_episodes, (seed, 5))
