"""Minimal differentiable numerics: tape autodiff, layers, Adam, gradcheck."""

from .gradcheck import GradCheckReport, finite_diff_check
from .layers import (
    LOG_SIGMA_MAX,
    LOG_SIGMA_MIN,
    GaussianHead,
    GruCell,
    Mlp,
    gaussian_sample,
    linear,
    linear_params,
)
from .params import (
    Param,
    ParamBank,
    PeriodicSchedule,
    adam_step,
    clip_grad_norm,
    hard_copy,
    zero_grads,
)
from .tape import Tape, Var

__all__ = [
    "GradCheckReport",
    "finite_diff_check",
    "GaussianHead",
    "GruCell",
    "Mlp",
    "gaussian_sample",
    "linear",
    "linear_params",
    "LOG_SIGMA_MIN",
    "LOG_SIGMA_MAX",
    "Param",
    "ParamBank",
    "PeriodicSchedule",
    "adam_step",
    "clip_grad_norm",
    "hard_copy",
    "zero_grads",
    "Tape",
    "Var",
]
