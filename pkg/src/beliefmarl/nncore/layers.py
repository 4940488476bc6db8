"""Network building blocks: dense stacks, a GRU cell, the Gaussian head.

Initialization follows the uniform fan-in rule: W, b ~ U(-1/sqrt(fan_in),
+1/sqrt(fan_in)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, TrainingFault
from .params import Param, ParamBank
from .tape import Tape, Var

LOG_SIGMA_MIN = -10.0
LOG_SIGMA_MAX = 2.0


def _uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def linear_params(bank: ParamBank, group: str, name: str, n_in: int, n_out: int,
                  rng: np.random.Generator) -> None:
    bank.add(group, f"{name}_w", _uniform_init(rng, n_in, (n_in, n_out)))
    bank.add(group, f"{name}_b", _uniform_init(rng, n_in, (n_out,)))


def linear(tape: Tape, group: dict[str, Param], name: str, x: Var,
           trainable: bool = True) -> Var:
    wrap = tape.param if trainable else (lambda p: tape.const(p.value))
    w, b = group[f"{name}_w"], group[f"{name}_b"]
    if x.value.shape[-1] != w.value.shape[0]:
        raise ConfigError(
            f"linear {name}: input dim {x.value.shape[-1]} != {w.value.shape[0]}"
        )
    return tape.add(tape.matmul(x, wrap(w)), wrap(b))


class Mlp:
    """Dense stack with ReLU hidden layers and a configurable head.

    ``sizes`` lists every layer width, input first. ``head`` is one of
    ``"linear"``, ``"sigmoid"``, ``"relu"``.
    """

    def __init__(self, bank: ParamBank, group: str, sizes: list[int],
                 rng: np.random.Generator, head: str = "linear", prefix: str = "l"):
        if head not in ("linear", "sigmoid", "relu"):
            raise ConfigError(f"unknown head activation {head!r}")
        self.bank = bank
        self.group_name = group
        self.prefix = prefix
        self.sizes = list(sizes)
        self.head = head
        for k in range(len(sizes) - 1):
            linear_params(bank, group, f"{prefix}{k}", sizes[k], sizes[k + 1], rng)

    def __call__(self, tape: Tape, x: Var, trainable: bool = True) -> Var:
        group = self.bank.group(self.group_name)
        n_layers = len(self.sizes) - 1
        for k in range(n_layers):
            x = linear(tape, group, f"{self.prefix}{k}", x, trainable)
            if k < n_layers - 1:
                x = tape.relu(x)
        if self.head == "sigmoid":
            x = tape.sigmoid(x)
        elif self.head == "relu":
            x = tape.relu(x)
        return x


class GruCell:
    """Standard gated recurrent unit: h' = (1 - u) * n + u * h."""

    GATES = ("ir", "iz", "in", "hr", "hz", "hn")

    def __init__(self, bank: ParamBank, group: str, n_in: int, n_hidden: int,
                 rng: np.random.Generator):
        self.bank = bank
        self.group_name = group
        self.n_in = n_in
        self.n_hidden = n_hidden
        for gate in ("ir", "iz", "in"):
            linear_params(bank, group, gate, n_in, n_hidden, rng)
        for gate in ("hr", "hz", "hn"):
            linear_params(bank, group, gate, n_hidden, n_hidden, rng)

    def step(self, tape: Tape, x: Var, h: Var, trainable: bool = True) -> Var:
        group = self.bank.group(self.group_name)
        r = tape.sigmoid(tape.add(linear(tape, group, "ir", x, trainable),
                                  linear(tape, group, "hr", h, trainable)))
        u = tape.sigmoid(tape.add(linear(tape, group, "iz", x, trainable),
                                  linear(tape, group, "hz", h, trainable)))
        n = tape.tanh(tape.add(linear(tape, group, "in", x, trainable),
                               tape.mul(r, linear(tape, group, "hn", h, trainable))))
        one_minus_u = tape.add_scalar(tape.neg(u), 1.0)
        h_new = tape.add(tape.mul(one_minus_u, n), tape.mul(u, h))
        if not np.all(np.isfinite(h_new.value)):
            raise TrainingFault("non-finite GRU hidden state")
        return h_new


@dataclass
class GaussianHead:
    """Diagonal-Gaussian parameters; log_sigma is clamped to a safe band."""

    mu: Var
    log_sigma: Var


def gaussian_sample(tape: Tape, head: GaussianHead, noise: np.ndarray) -> Var:
    """Reparameterized draw z = mu + exp(log_sigma) * noise.

    ``noise`` is data, not a Var: the gradient flows only to mu/log_sigma.
    """
    sigma = tape.exp(head.log_sigma)
    return tape.add(head.mu, tape.mul(sigma, tape.const(noise)))
