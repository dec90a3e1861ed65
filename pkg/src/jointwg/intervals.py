"""Interval container and the order-statistic quantile rule shared by all methods."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

METHODS = ("ACI", "boot-p", "boot-t", "boot-BC", "boot-BCa", "CRI")

PARAM_NAMES = ("alpha", "theta", "beta")


def param_label(index: int, k: int) -> str:
    """Name of entry ``index`` in the (alpha_1..alpha_k, theta_1.., beta_1..) ordering."""
    kind, h = divmod(index, k)
    return f"{PARAM_NAMES[kind]}_{h + 1}"


@dataclass(frozen=True)
class IntervalEstimate:
    lower: float
    upper: float
    method: str
    level: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown interval method {self.method!r}")
        if not self.lower <= self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")

    @property
    def length(self) -> float:
        return self.upper - self.lower


def quantile_rank(q: float, n: int) -> int:
    """1-based rank ``ceil(q * n)`` clipped to ``[1, n]``.

    A relative slack of 1e-9 absorbs representation error, so that
    ``0.025 * 1000`` maps to rank 25 rather than 26.
    """
    if n < 1:
        raise ValueError("need at least one value")
    rank = math.ceil(q * n - 1e-9 * max(1.0, q * n))
    return min(max(rank, 1), n)


def order_stat_quantile(sorted_values: np.ndarray, q: float) -> float:
    """Type-1 empirical quantile of already sorted values."""
    return float(sorted_values[quantile_rank(q, sorted_values.shape[0]) - 1])


def clamp_nonneg(iv: IntervalEstimate) -> IntervalEstimate:
    """Raise a negative lower endpoint to 0 and record it in ``meta``."""
    if iv.lower >= 0:
        return iv
    meta = dict(iv.meta, clamped=True, raw_lower=iv.lower)
    return IntervalEstimate(0.0, max(iv.upper, 0.0), iv.method, iv.level, meta)
