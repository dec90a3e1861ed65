"""Planning forecasts: how many failures each line will contribute.

``expected_failures_approx`` works before any test, from the plan and
assumed parameters.  It is a recursive at-risk approximation written for
this package: the i-th joint failure time is replaced by the pooled
mixture quantile at the expected i-th progressively censored uniform
order statistic, and each line takes a share of the failure proportional
to its expected survivors times its hazard there.  ``mean_exact_failures``
simulates the test and averages the observed counts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .censoring import CensoringPlan, InfeasibleWithdrawal, check_plan, generate_joint_sample
from .dist import WGParams, cdf, logpdf, logsf, quantile, survival

__all__ = [
    "ForecastResult",
    "prob_first_less",
    "mean_exact_failures",
    "expected_failures_approx",
    "expected_uniform_order",
]


@dataclass
class ForecastResult:
    """Per-line failure forecasts for one plan.

    ``aeb`` is the approximate expectation before the test, ``mea`` the
    simulated mean, ``mea_se`` its Monte Carlo standard error and ``p`` the
    probability that a line-1 unit fails before a line-2 unit.
    """

    aeb: np.ndarray | None = None
    mea: np.ndarray | None = None
    mea_se: np.ndarray | None = None
    p: float | None = None
    replications: int = 0
    abort_rate: float = 0.0
    meta: dict = field(default_factory=dict)


def prob_first_less(p1: WGParams, p2: WGParams) -> float:
    """``P(X1 < X2)`` for independent ``X1 ~ p1`` and ``X2 ~ p2``.

    The integral of ``S2(x) f1(x)`` over ``x > 0`` is taken in the
    probability scale of ``X1``, as the integral of ``S2(Q1(u))`` over
    ``u`` in (0, 1), which keeps the integrand bounded.
    """

    def integrand(u):
        if u >= 1.0:
            return 0.0
        return survival(p2, quantile(p1, u))

    value, err = quad(integrand, 0.0, 1.0, epsabs=1e-10, epsrel=1e-10, limit=200)
    if not err < 1e-6:
        raise ArithmeticError(f"quadrature did not reach 1e-6 (error estimate {err:.2e})")
    return min(max(value, 0.0), 1.0)


def mean_exact_failures(
    params, plan: CensoringPlan, replications: int = 1000, rng=None
) -> ForecastResult:
    """Average per-line failure counts over simulated tests.

    Draws that hit an infeasible withdrawal are counted in ``abort_rate``
    and left out of the mean; more than half aborted raises ``RuntimeError``.
    """
    if replications < 100:
        raise ValueError("replications must be at least 100")
    check_plan(plan)
    if len(params) != plan.k:
        raise ValueError(f"expected {plan.k} parameter sets")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    counts = np.zeros((replications, plan.k))
    ok = np.zeros(replications, dtype=bool)
    for j in range(replications):
        try:
            s = generate_joint_sample(params, plan, gen)
        except InfeasibleWithdrawal:
            continue
        counts[j] = s.M
        ok[j] = True
    abort = 1.0 - ok.mean()
    if abort > 0.5:
        raise RuntimeError(f"{abort:.0%} of simulated tests hit an infeasible withdrawal")
    good = counts[ok]
    return ForecastResult(
        mea=good.mean(axis=0),
        mea_se=good.std(axis=0, ddof=1) / math.sqrt(good.shape[0]),
        replications=int(ok.sum()),
        abort_rate=float(abort),
    )


def expected_uniform_order(plan: CensoringPlan) -> np.ndarray:
    """Expected progressively censored uniform order statistics.

    With ``g_j = N - j + 1 - (R_1 + ... + R_{j-1})`` units at risk before the
    j-th failure, the i-th value is ``1 - prod_{j <= i} g_j / (g_j + 1)``.
    """
    R = plan.R_array
    j = np.arange(1, plan.r + 1)
    g = plan.N - j + 1 - np.concatenate([[0], np.cumsum(R)[:-1]])
    return 1.0 - np.cumprod(g / (g + 1.0))


def _mixture_quantile(params, weights, p):
    lo = min(quantile(q, p) for q in params)
    hi = max(quantile(q, p) for q in params)
    if hi - lo <= 1e-14 * max(hi, 1.0):
        return hi

    def f(x):
        return sum(w * cdf(q, x) for q, w in zip(params, weights)) - p

    return brentq(f, lo, hi, xtol=1e-14, rtol=1e-13)


def expected_failures_approx(params, plan: CensoringPlan) -> ForecastResult:
    """Recursive at-risk approximation of the expected failures per line.

    Expected survivors start at ``n``.  At step ``i`` the failure time is
    approximated by the quantile of the mixture ``sum_h n_h F_h / N`` at
    :func:`expected_uniform_order`, line ``h`` receives the share
    ``m_h hazard_h / sum_g m_g hazard_g``, and then the withdrawals leave:
    ``s_i(h)`` for a fixed plan, or ``R_i`` split in proportion to the
    survivors for a pooled plan.  The shares sum to ``r``.
    """
    check_plan(plan)
    k = plan.k
    if len(params) != k:
        raise ValueError(f"expected {k} parameter sets")
    if k == 1:
        return ForecastResult(aeb=np.array([float(plan.r)]), meta={"method": "recursive at-risk"})
    n = np.array(plan.n, dtype=float)
    weights = n / n.sum()
    u = expected_uniform_order(plan)
    m = n.copy()
    aeb = np.zeros(k)
    clipped = False
    s = None if plan.allocation == "pooled" else plan.s_matrix.astype(float)
    R = plan.R_array.astype(float)
    times = []
    for i in range(plan.r):
        t = _mixture_quantile(params, weights, u[i])
        times.append(t)
        with np.errstate(divide="ignore"):
            logh = np.array([logpdf(p, t) - logsf(p, t) for p in params]) + np.log(np.maximum(m, 0.0))
        if np.all(np.isneginf(logh)):
            share = np.full(k, 1.0 / k)
        else:
            share = np.exp(logh - logh.max())
            share /= share.sum()
        aeb += share
        m -= share
        if i == plan.r - 1:
            break
        if s is None:
            total = m.clip(min=0).sum()
            m -= R[i] * (m.clip(min=0) / total if total > 0 else np.full(k, 1.0 / k))
        else:
            m -= s[i]
        if np.any(m < -1e-12):
            clipped = True
            m = m.clip(min=0.0)
    if clipped:
        warnings.warn("expected survivors went negative and were clipped at 0", RuntimeWarning)
    return ForecastResult(aeb=aeb, meta={"method": "recursive at-risk", "times": times, "clipped": clipped})
