"""Comparing production lines by reliability.

After the transform ``y = (t/alpha_h)^theta_h`` every line is WG(1, 1, beta_h),
with reliability ``(1 + y)^(-beta_h)``.  On that standardized scale the
line with the smallest ``beta`` is the most reliable at every ``y > 0``.
A raw-time mode compares ``survival(p_h, t)`` directly, which can change
order with ``t`` when the lines differ in ``alpha`` or ``theta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import WGParams, logsf

__all__ = ["LineRanking", "standardized_reliability", "rank_lines", "reliability_curve"]


@dataclass(frozen=True)
class LineRanking:
    """Lines ordered from most to least reliable at time ``t``.

    ``order`` holds 1-based line labels; ``reliabilities[h]`` belongs to
    line ``h + 1``.  Ties are broken by the smaller line label.
    """

    t: float
    order: tuple
    reliabilities: tuple
    mode: str = "standardized"


def _log_standardized(beta, t):
    beta = np.asarray(beta, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(beta <= 0) or np.any(~np.isfinite(beta)):
        raise ValueError("beta must be positive and finite")
    if np.any(np.isnan(t)) or np.any(t < 0):
        raise ValueError("t must be >= 0")
    return -beta * np.log1p(t)


def standardized_reliability(beta_hat, t):
    """``(1 + t)^(-beta_hat)`` for standardized time ``t >= 0``."""
    out = np.exp(_log_standardized(beta_hat, t))
    return float(out) if np.ndim(out) == 0 else out


def _as_params(items):
    out = []
    for x in items:
        if isinstance(x, WGParams):
            out.append(x)
        elif hasattr(x, "estimates"):
            out.extend(x.estimates)
        else:
            return None
    return out


def rank_lines(lines, t: float = 1.0, mode: str = "standardized") -> LineRanking:
    """Rank lines by reliability at ``t``.

    Parameters
    ----------
    lines : sequence of float, sequence of WGParams, or a FitResult
        Per-line ``beta`` estimates, or full parameter sets.  Raw-time mode
        needs full parameter sets.
    t : float
        Standardized time in ``"standardized"`` mode, lifetime units in
        ``"raw"`` mode.
    mode : {"standardized", "raw"}
    """
    if hasattr(lines, "estimates"):
        lines = lines.estimates
    lines = list(lines)
    params = _as_params(lines)
    if mode == "standardized":
        betas = [p.beta for p in params] if params is not None else [float(b) for b in lines]
        logs = _log_standardized(np.array(betas), t)
    elif mode == "raw":
        if params is None:
            raise ValueError("raw-time ranking needs full parameter sets")
        if t < 0:
            raise ValueError("t must be >= 0")
        logs = np.array([logsf(p, t) for p in params])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    # compare log reliabilities so that underflow to 0 cannot create false ties
    order = sorted(range(len(logs)), key=lambda h: (-logs[h], h))
    return LineRanking(
        t=float(t),
        order=tuple(h + 1 for h in order),
        reliabilities=tuple(float(v) for v in np.exp(logs)),
        mode=mode,
    )


def reliability_curve(beta_hat: float, t_grid) -> list[tuple[float, float]]:
    """Pairs ``(t, (1 + t)^(-beta_hat))`` over a nondecreasing grid."""
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1:
        raise ValueError("grid must be one-dimensional")
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be nondecreasing")
    values = np.atleast_1d(standardized_reliability(beta_hat, grid))
    return [(float(t), float(v)) for t, v in zip(grid, values)]
