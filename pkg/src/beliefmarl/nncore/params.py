"""Named parameter groups with gradient buffers and Adam state.

One :class:`ParamBank` owns every trainable array in a run: actors,
critics and their targets, encoders, decoders, filter networks and their
targets. Groups are plain dicts of :class:`Param`, addressed by a group
name like ``"encoder_0"`` and a short array name like ``"w1"``.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, TrainingFault

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class Param:
    """One trainable array plus its gradient buffer and Adam moments."""

    __slots__ = ("value", "grad", "m", "v", "step")

    def __init__(self, value: np.ndarray):
        self.value = np.array(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.m = np.zeros_like(self.value)
        self.v = np.zeros_like(self.value)
        self.step = 0


class ParamBank:
    """Registry of named parameter groups."""

    def __init__(self):
        self._groups: dict[str, dict[str, Param]] = {}

    def add(self, group: str, name: str, value: np.ndarray) -> Param:
        g = self._groups.setdefault(group, {})
        if name in g:
            raise ConfigError(f"duplicate parameter {group}/{name}")
        p = Param(value)
        g[name] = p
        return p

    def group(self, name: str) -> dict[str, Param]:
        return self._groups[name]

    def groups(self) -> list[str]:
        return sorted(self._groups)

    def zero_grads(self, group: str | None = None) -> None:
        names = [group] if group is not None else self._groups
        for n in names:
            for p in self._groups[n].values():
                p.grad[:] = 0.0

    def save(self, path) -> None:
        arrays = {
            f"{g}/{n}": p.value
            for g, params in self._groups.items()
            for n, p in params.items()
        }
        np.savez(path, **arrays)

    def load(self, path) -> None:
        with np.load(path) as data:
            for key in data.files:
                g, n = key.split("/", 1)
                self._groups[g][n].value[:] = data[key]


def zero_grads(group: dict[str, Param]) -> None:
    for p in group.values():
        p.grad[:] = 0.0


def hard_copy(src: dict[str, Param], dst: dict[str, Param]) -> None:
    """dst <- src, value-exact and non-aliasing. Optimizer state untouched."""
    if set(src) != set(dst):
        raise ConfigError("hard_copy: mismatched parameter names")
    for name, p in src.items():
        if dst[name].value.shape != p.value.shape:
            raise ConfigError(f"hard_copy: shape mismatch for {name}")
        dst[name].value[:] = p.value


def clip_grad_norm(groups, max_norm: float) -> float:
    """Jointly rescale the grads of one loss pathway to a norm cap.

    ``groups`` is an iterable of param-group dicts. Returns the pre-clip
    global norm.
    """
    if isinstance(groups, dict):
        groups = [groups]
    total = 0.0
    for group in groups:
        for p in group.values():
            total += float((p.grad * p.grad).sum())
    norm = np.sqrt(total)
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for group in groups:
            for p in group.values():
                p.grad *= scale
    return norm


def adam_step(group: dict[str, Param], lr: float) -> None:
    """One Adam update from the current grad buffers.

    The learning rate is passed per call so that pathway-specific rates
    (filter updates from the reconstruction loss vs. from the critic loss)
    reuse one set of moment buffers per parameter.
    """
    for name, p in group.items():
        g = p.grad
        if not np.all(np.isfinite(g)):
            raise TrainingFault(f"non-finite gradient in parameter {name}")
        p.step += 1
        p.m = ADAM_BETA1 * p.m + (1.0 - ADAM_BETA1) * g
        p.v = ADAM_BETA2 * p.v + (1.0 - ADAM_BETA2) * (g * g)
        m_hat = p.m / (1.0 - ADAM_BETA1**p.step)
        v_hat = p.v / (1.0 - ADAM_BETA2**p.step)
        p.value -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


class PeriodicSchedule:
    """Counts how many period boundaries a monotone counter has crossed.

    ``due(t)`` returns the number of actions owed so that exactly
    ``floor(t / period)`` actions have happened after servicing them all.
    """

    def __init__(self, period: int):
        if period <= 0:
            raise ConfigError("schedule period must be positive")
        self.period = period
        self.done = 0

    def due(self, counter: int) -> int:
        owed = counter // self.period - self.done
        self.done += max(owed, 0)
        return max(owed, 0)
