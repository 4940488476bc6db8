"""Actor-critic backbone with belief-conditioned actors and dual critics."""

from .nets import RecurrentActor, build_hat_state, log_policy, make_value_net
from .returns import td_targets
from .trainer import LossReport, Trainer

__all__ = [
    "RecurrentActor",
    "build_hat_state",
    "log_policy",
    "make_value_net",
    "td_targets",
    "LossReport",
    "Trainer",
]
