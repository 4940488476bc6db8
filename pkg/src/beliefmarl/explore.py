"""Count-based intrinsic rewards over hashed belief embeddings.

Each agent owns a fixed random projection A (k x dim, standard normal
entries). A vector hashes to the k-bit key formed by the signs of A @ v,
packed little-endian with sign(0) mapped to +1. Visit counts per key feed
the bonus 1 / sqrt(n), which is mixed into the shared extrinsic reward as
r + beta * bonus. The count is incremented before the bonus is computed,
so the first visit to a key is worth exactly 1.

The ``obs`` mode runs the identical pipeline on raw observations instead
of beliefs (projection shaped k x obs_dim, separate count tables).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

DEFAULT_HASH_BITS = 16


class HashProjection:
    """Immutable sign-hash projection for one agent."""

    def __init__(self, dim: int, bits: int, rng: np.random.Generator):
        if bits < 1 or bits > 62:
            raise ConfigError("hash bits must be in [1, 62] to fit an int key")
        self.dim = dim
        self.bits = bits
        self.matrix = rng.standard_normal((bits, dim))
        self.matrix.flags.writeable = False
        self._weights = (1 << np.arange(bits, dtype=np.int64))

    def key(self, v: np.ndarray) -> int:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.dim,):
            raise ConfigError(f"hash input dim {v.shape} != ({self.dim},)")
        bits = (self.matrix @ v) >= 0.0
        return int(bits @ self._weights)


def simhash(proj: HashProjection, v: np.ndarray) -> int:
    return proj.key(v)


class CountTable:
    """Visit counts per hash key; absent keys count as zero."""

    def __init__(self):
        self._counts: dict[int, int] = {}

    def visit(self, key: int) -> int:
        n = self._counts.get(key, 0) + 1
        self._counts[key] = n
        return n

    def count(self, key: int) -> int:
        return self._counts.get(key, 0)

    def __len__(self) -> int:
        return len(self._counts)

    def reset(self) -> None:
        self._counts.clear()


def mix_reward(r: float, r_hat: float, beta: float) -> float:
    return r + beta * r_hat


class BeliefExplorer:
    """Per-agent SimHash counting over beliefs (or raw observations)."""

    def __init__(self, n_agents: int, dim: int, bits: int = DEFAULT_HASH_BITS,
                 seed: int = 0, mode: str = "belief"):
        if mode not in ("belief", "obs"):
            raise ConfigError(f"unknown exploration mode {mode!r}")
        self.mode = mode
        self.n_agents = n_agents
        root = np.random.SeedSequence([seed, 0x51A7] if mode == "belief"
                                      else [seed, 0x0B57])
        streams = root.spawn(n_agents)
        self.projections = [HashProjection(dim, bits, np.random.default_rng(s))
                            for s in streams]
        self.tables = [CountTable() for _ in range(n_agents)]

    def intrinsic_reward(self, agent_id: int, v: np.ndarray) -> float:
        """Record a visit and return 1/sqrt(count) for it."""
        key = self.projections[agent_id].key(v)
        n = self.tables[agent_id].visit(key)
        return 1.0 / np.sqrt(n)

    def table_sizes(self) -> list[int]:
        return [len(t) for t in self.tables]

    def reset_counts(self) -> None:
        """Optional hook for clearing counts when the belief encoder jumps."""
        for t in self.tables:
            t.reset()
