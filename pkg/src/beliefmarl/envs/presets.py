"""Task naming and per-family default hyperparameters.

Grid foraging tasks follow the ``Ss-GxG-Pp-Ff[-coop]`` convention (sight,
grid size, players, foods); spread tasks are ``spread-N``. The family
defaults fill any hyperparameter the run config leaves unset.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .gridforage import GridForage
from .spread import ParticleSpread

_GRID_RE = re.compile(r"^(\d+)s-(\d+)x(\d+)-(\d+)p-(\d+)f(-coop)?$")
_SPREAD_RE = re.compile(r"^spread-(\d+)$")


@dataclass(frozen=True)
class FamilyDefaults:
    latent_dim: int
    lambda_rec: float
    lambda_norm: float
    beta: float
    lr_w: float
    lr_w_critic: float
    shared_policy: bool
    max_episode_len: int


GRIDFORAGE_DEFAULTS = FamilyDefaults(
    latent_dim=32, lambda_rec=0.5, lambda_norm=1.0, beta=0.1,
    lr_w=0.0005, lr_w_critic=0.00005, shared_policy=True, max_episode_len=50,
)

# The spread family trains without intrinsic rewards by default (beta=0)
# and shares policy parameters only from 8 agents up.
def _spread_defaults(n_agents: int) -> FamilyDefaults:
    return FamilyDefaults(
        latent_dim=64, lambda_rec=1.0, lambda_norm=0.1, beta=0.0,
        lr_w=0.0005, lr_w_critic=0.0000005, shared_policy=n_agents >= 8,
        max_episode_len=25,
    )


@dataclass(frozen=True)
class EnvPreset:
    name: str
    family: str
    defaults: FamilyDefaults
    kwargs: dict

    def make(self, rng: np.random.Generator | None = None,
             max_episode_len: int | None = None):
        kwargs = dict(self.kwargs)
        kwargs["max_episode_len"] = (max_episode_len if max_episode_len is not None
                                     else self.defaults.max_episode_len)
        if self.family == "gridforage":
            return GridForage(rng=rng, name=self.name, **kwargs)
        return ParticleSpread(rng=rng, name=self.name, **kwargs)


def parse_env_name(name: str) -> EnvPreset:
    m = _GRID_RE.match(name)
    if m:
        sight, rows, cols, players, foods = (int(m.group(i)) for i in range(1, 6))
        if rows != cols:
            raise ConfigError(f"grid must be square, got {rows}x{cols}")
        kwargs = dict(grid_size=rows, sight=sight, n_agents=players,
                      n_foods=foods, coop=m.group(6) is not None)
        # constructor errors (too many entities etc.) surface here
        GridForage(**kwargs)
        return EnvPreset(name, "gridforage", GRIDFORAGE_DEFAULTS, kwargs)
    m = _SPREAD_RE.match(name)
    if m:
        n = int(m.group(1))
        if n < 1:
            raise ConfigError("spread needs at least one agent")
        return EnvPreset(name, "spread", _spread_defaults(n), dict(n_agents=n))
    raise ConfigError(
        f"unknown env {name!r}; expected 'Ss-GxG-Pp-Ff[-coop]' or 'spread-N'"
    )
