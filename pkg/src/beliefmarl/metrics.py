"""Metrics records and deterministic file writers.

The metrics file must be byte-identical across reruns with the same
config and seed, so the wall-clock column is written to a separate
timings file instead of metrics.csv.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


@dataclass
class MetricsRow:
    step: int
    episodes_done: int
    eval_return: float
    mean_r_hat: float
    actor_loss: float
    critic_loss: float
    critic_w_loss: float
    rec_loss: float
    kl_loss: float
    norm_loss: float
    encodings_loss: float
    entropy: float
    count_table_size: float
    wall_clock_s: float


_DETERMINISTIC_COLUMNS = [f.name for f in fields(MetricsRow) if f.name != "wall_clock_s"]


def metrics_header() -> str:
    return ",".join(_DETERMINISTIC_COLUMNS)


def format_metrics_row(row: MetricsRow) -> str:
    parts = []
    for name in _DETERMINISTIC_COLUMNS:
        value = getattr(row, name)
        parts.append(str(value) if isinstance(value, int) else repr(float(value)))
    return ",".join(parts)


def timings_header() -> str:
    return "step,wall_clock_s"


def format_timings_row(row: MetricsRow) -> str:
    return f"{row.step},{row.wall_clock_s:.3f}"
