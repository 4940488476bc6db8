"""Dec-POMDP tasks: grid foraging, particle spread, and the parallel runner."""

from .base import Env, EnvSpec, StepResult
from .gridforage import GridForage
from .parallel import TrajectoryBatch, run_parallel
from .presets import EnvPreset, parse_env_name
from .spread import ParticleSpread, spread_reward

__all__ = [
    "Env",
    "EnvSpec",
    "StepResult",
    "GridForage",
    "ParticleSpread",
    "spread_reward",
    "TrajectoryBatch",
    "run_parallel",
    "EnvPreset",
    "parse_env_name",
]
