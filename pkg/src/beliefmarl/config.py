"""Run configuration: defaults, flat key=value parsing, validation.

Every hyperparameter has a documented default; fields left as ``None``
are resolved from the env family (gridforage vs spread) presets. The
serialized form in a run's output directory re-parses to an equal config.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .envs.presets import parse_env_name
from .errors import ConfigError

ABLATION_NAMES = ("no_intr", "no_filters", "no_kl", "no_L2_norm", "obs_rew",
                  "no_critic_w", "no_standard_critic")


@dataclass
class AblationFlags:
    """Independent component switches mirroring the ablation study."""

    no_intr: bool = False
    no_filters: bool = False
    no_kl: bool = False
    no_L2_norm: bool = False
    obs_rew: bool = False
    no_critic_w: bool = False
    no_standard_critic: bool = False

    @classmethod
    def from_csv(cls, text: str) -> "AblationFlags":
        flags = cls()
        for token in filter(None, (t.strip() for t in text.split(","))):
            if token not in ABLATION_NAMES:
                raise ConfigError(f"unknown ablation flag {token!r}")
            setattr(flags, token, True)
        return flags

    def to_csv(self) -> str:
        return ",".join(n for n in ABLATION_NAMES if getattr(self, n))


@dataclass
class RunConfig:
    """All knobs of a training run. None means "use the env family default"."""

    env: str = "2s-9x9-3p-2f"
    horizon: int = 10_000_000
    seed: int = 1
    out_dir: str = "runs"

    n_envs: int = 10
    gamma: float = 0.99
    lr: float = 0.0005
    lr_ed: float = 0.0005
    lr_w: float | None = None
    lr_w_critic: float | None = None
    lambda_rec: float | None = None
    lambda_kl: float = 0.1
    lambda_norm: float | None = None
    beta: float | None = None
    entropy_coef: float = 0.01
    max_grad_norm: float = 10.0

    n_ed: int = 2000
    buffer_capacity: int = 50_000
    ed_batch_size: int = 16
    n_wtup: int = 100_000
    n_tup: int = 100
    n_step: int = 1

    hidden_dim: int = 128
    latent_dim: int | None = None
    hash_bits: int = 16
    shared_policy: bool | None = None
    max_episode_len: int | None = None

    eval_episodes: int = 10
    metrics_interval: int = 1000
    dump_embeddings: bool = False
    reset_counts_on_ed_update: bool = False

    ablation: AblationFlags = field(default_factory=AblationFlags)

    # ---- resolution and validation ------------------------------------------

    def resolve(self) -> "RunConfig":
        """Fill None fields from the env family defaults and validate."""
        preset = parse_env_name(self.env)
        d = preset.defaults
        cfg = dataclasses.replace(
            self,
            lr_w=self.lr_w if self.lr_w is not None else d.lr_w,
            lr_w_critic=(self.lr_w_critic if self.lr_w_critic is not None
                         else d.lr_w_critic),
            lambda_rec=(self.lambda_rec if self.lambda_rec is not None
                        else d.lambda_rec),
            lambda_norm=(self.lambda_norm if self.lambda_norm is not None
                         else d.lambda_norm),
            beta=self.beta if self.beta is not None else d.beta,
            latent_dim=(self.latent_dim if self.latent_dim is not None
                        else d.latent_dim),
            shared_policy=(self.shared_policy if self.shared_policy is not None
                           else d.shared_policy),
            max_episode_len=(self.max_episode_len if self.max_episode_len is not None
                             else d.max_episode_len),
            ablation=dataclasses.replace(self.ablation),
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not (0.0 <= self.gamma < 1.0):
            raise ConfigError(f"gamma must be in [0, 1), got {self.gamma}")
        for name in ("horizon", "n_envs", "n_ed", "buffer_capacity",
                     "ed_batch_size", "n_wtup", "n_tup", "n_step", "hidden_dim",
                     "eval_episodes", "metrics_interval"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.max_grad_norm <= 0:
            raise ConfigError("max_grad_norm must be positive")
        for name in ("lr", "lr_ed", "lr_w", "lr_w_critic"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.hash_bits < 1 or self.hash_bits > 62:
            raise ConfigError("hash_bits must be in [1, 62]")
        parse_env_name(self.env)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _parse_value(name: str, text: str):
    ftype = _FIELD_TYPES.get(name)
    if ftype is None:
        raise ConfigError(f"unknown config key {name!r}")
    text = text.strip()
    if name == "ablation":
        return AblationFlags.from_csv(text)
    if ftype in ("str", str):
        return text
    if ftype in ("bool", "bool | None"):
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"bad boolean for {name}: {text!r}")
    try:
        if "float" in str(ftype):
            return float(text)
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc


def parse_config_text(text: str, overrides: dict | None = None,
                      source: str = "<config>") -> RunConfig:
    """Parse flat key=value text, apply overrides, resolve and validate."""
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        setattr(cfg, key, _parse_value(key, value))
    for key, value in (overrides or {}).items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(value, str):
            value = _parse_value(key, value)
        setattr(cfg, key, value)
    return cfg.resolve()


def parse_config(path: str | Path | None = None,
                 overrides: dict | None = None) -> RunConfig:
    """Load a flat key=value file, apply overrides, resolve and validate."""
    text = "" if path is None else Path(path).read_text(encoding="utf-8")
    return parse_config_text(text, overrides, source=str(path))


def serialize_config(cfg: RunConfig) -> str:
    """Stable key=value text; parses back to an equal resolved config."""
    lines = []
    for f in sorted(dataclasses.fields(RunConfig), key=lambda f: f.name):
        value = getattr(cfg, f.name)
        if f.name == "ablation":
            lines.append(f"ablation={value.to_csv()}")
        elif isinstance(value, bool):
            lines.append(f"{f.name}={'true' if value else 'false'}")
        else:
            lines.append(f"{f.name}={value}")
    return "\n".join(lines) + "\n"
