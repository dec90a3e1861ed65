"""Parametric bootstrap under the fitted model and four interval constructions.

Replicate samples are drawn with the original plan at the fitted
parameters and refitted by maximum likelihood, starting from the original
estimates.  Each replicate owns a child of the root ``SeedSequence``, so a
seed fixes the ensemble regardless of how replicates are scheduled.

Empirical quantiles use the order statistic of rank ``ceil(q * B)``.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .censoring import CensoringPlan, InfeasibleWithdrawal, JointSample, generate_joint_sample
from .intervals import IntervalEstimate, clamp_nonneg, order_stat_quantile, param_label, quantile_rank
from .mle import FitResult, InsufficientFailures, fit_mle

__all__ = [
    "BootstrapEnsemble",
    "BiasCorrectionError",
    "AccelerationError",
    "resample",
    "boot_p",
    "boot_t",
    "boot_bc",
    "boot_bca",
    "bias_constant",
    "jackknife_estimates",
    "acceleration",
    "jackknife_acceleration",
    "delete_failure",
]


class BiasCorrectionError(ValueError):
    """Every replicate lies on one side of the original estimate, so z0 is infinite."""


class AccelerationError(ValueError):
    """``1 - a (z0 + z)`` is not positive, so the BCa level is undefined."""


@dataclass
class BootstrapEnsemble:
    """Successful replicate fits and their bookkeeping.

    Attributes
    ----------
    estimates : ndarray, shape (n_ok, 3k)
        Replicate estimates in the (alpha.., theta.., beta..) order.
    variances : ndarray, shape (n_ok, 3k)
        Diagonal of each replicate's inverse observed information; NaN
        where the information was not positive definite.
    origin : FitResult
        The fit the replicates were drawn from.
    attempted : int
    failures : int
        Replicates that were dropped: the refit raised, or it stopped at
        the parameter-space boundary while ``require_converged`` was set.
    boundary : int
        Kept replicates whose refit stopped short of convergence.
    """

    estimates: np.ndarray
    variances: np.ndarray
    origin: FitResult
    attempted: int
    failures: int
    failure_reasons: dict = field(default_factory=dict)
    boundary: int = 0
    retries: int = 0
    seed: object = None

    def __post_init__(self):
        self.estimates.setflags(write=False)
        self.variances.setflags(write=False)

    @property
    def B(self) -> int:
        return self.estimates.shape[0]

    @property
    def status(self) -> str:
        return "warning" if self.failures > 0.2 * self.attempted else "ok"


def _seed_sequence(rng):
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        return np.random.SeedSequence(int(rng.integers(2**63)))
    return np.random.SeedSequence(rng)


def resample(
    fit: FitResult,
    plan: CensoringPlan | None = None,
    B: int = 1000,
    rng=None,
    max_retries: int = 10,
    require_converged: bool = True,
    fit_options: dict | None = None,
) -> BootstrapEnsemble:
    """Draw ``B`` parametric bootstrap replicates and refit each one.

    Parameters
    ----------
    fit : FitResult
        Supplies the generating parameters and the refit starting point.
    plan : CensoringPlan, optional
        Defaults to the plan of ``fit.sample``.
    B : int
        Number of replicates, at least 100.
    rng : int, SeedSequence or Generator
        Root of the per-replicate sub-streams.
    max_retries : int
        Fresh draws allowed after an infeasible withdrawal before the
        replicate counts as failed.
    require_converged : bool
        Count refits that stop short of convergence (typically at the
        parameter-space boundary) as failures.  When False their last
        iterates are kept and counted in ``boundary``.
    """
    if B < 100:
        raise ValueError("B must be at least 100")
    if plan is None:
        if fit.sample is None:
            raise ValueError("no plan given and the fit carries no sample")
        plan = fit.sample.plan
    if not fit.converged:
        warnings.warn("resampling from a fit that did not converge", RuntimeWarning, stacklevel=2)
    opts = {"restarts": 0}
    opts.update(fit_options or {})
    root = _seed_sequence(rng)
    children = root.spawn(B)
    rows, var_rows = [], []
    reasons = Counter()
    retries = 0
    boundary = 0
    for child in children:
        gen = np.random.default_rng(child)
        sample = None
        for _ in range(max_retries + 1):
            try:
                sample = generate_joint_sample(fit.estimates, plan, gen)
                break
            except InfeasibleWithdrawal:
                retries += 1
        if sample is None:
            reasons["infeasible withdrawal"] += 1
            continue
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                rep = fit_mle(sample, init=fit.estimates, **opts)
        except InsufficientFailures:
            reasons["line without failures"] += 1
            continue
        if require_converged and not rep.converged:
            reasons["refit did not converge"] += 1
            continue
        est = rep.vector
        if not np.all(np.isfinite(est)) or np.any(est <= 0):
            reasons["non-finite estimate"] += 1
            continue
        boundary += not rep.converged
        rows.append(est)
        var_rows.append(rep.variances)
    k3 = 3 * len(fit.estimates)
    ens = BootstrapEnsemble(
        estimates=np.array(rows, dtype=float).reshape(-1, k3),
        variances=np.array(var_rows, dtype=float).reshape(-1, k3),
        origin=fit,
        attempted=B,
        failures=B - len(rows),
        failure_reasons=dict(reasons),
        boundary=boundary,
        retries=retries,
        seed=root.entropy,
    )
    if ens.status == "warning":
        warnings.warn(
            f"{ens.failures} of {B} bootstrap replicates failed ({dict(reasons)})", RuntimeWarning, stacklevel=2
        )
    return ens


def _tail(level):
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    return (1 - level) / 2


def _column(ens: BootstrapEnsemble, index: int) -> np.ndarray:
    if ens.B == 0:
        raise ValueError("bootstrap ensemble has no successful replicates")
    return np.sort(ens.estimates[:, index])


def _check_tail(B, q):
    if B * q < 1:
        raise ValueError(f"B={B} replicates cannot resolve a tail of {q:g}")


def _finish(lower, upper, method, level, meta, clamp):
    iv = IntervalEstimate(float(lower), float(upper), method, level, meta)
    return clamp_nonneg(iv) if clamp else iv


def boot_p(ens: BootstrapEnsemble, index: int, level: float = 0.95, clamp: bool = False) -> IntervalEstimate:
    """Percentile interval: the ``q`` and ``1 - q`` empirical quantiles, ``q = (1 - level)/2``."""
    q = _tail(level)
    col = _column(ens, index)
    _check_tail(col.shape[0], q)
    meta = {"param": param_label(index, ens.origin.k), "B": int(col.shape[0])}
    return _finish(order_stat_quantile(col, q), order_stat_quantile(col, 1 - q), "boot-p", level, meta, clamp)


def boot_t(ens: BootstrapEnsemble, index: int, level: float = 0.95, clamp: bool = False) -> IntervalEstimate:
    """Studentized interval.

    Pivots are ``sqrt(B) (est* - est) / sd*`` with ``sd*`` from each
    replicate's own information matrix.  Endpoints are
    ``est + B^(-1/2) sd W^-1(q)`` at both tails, where ``W^-1`` is the
    empirical pivot quantile and ``sd`` comes from the original fit, so the
    ``sqrt(B)`` factors cancel.  Replicates without a positive variance are
    dropped and counted in ``meta["dropped"]``.
    """
    q = _tail(level)
    if ens.B == 0:
        raise ValueError("bootstrap ensemble has no successful replicates")
    est = ens.origin.vector[index]
    if ens.origin.vcov is None:
        raise ValueError("the original fit has no variance-covariance matrix")
    sd = math.sqrt(max(ens.origin.vcov[index, index], 0.0))
    var = ens.variances[:, index]
    good = np.isfinite(var) & (var > 0)
    n = int(good.sum())
    if n == 0:
        raise ValueError("no replicate has a positive variance")
    _check_tail(n, q)
    rootB = math.sqrt(n)
    pivots = np.sort(rootB * (ens.estimates[good, index] - est) / np.sqrt(var[good]))
    lower = est + sd * order_stat_quantile(pivots, q) / rootB
    upper = est + sd * order_stat_quantile(pivots, 1 - q) / rootB
    meta = {"param": param_label(index, ens.origin.k), "B": n, "dropped": int(ens.B - n), "sd": sd}
    return _finish(lower, upper, "boot-t", level, meta, clamp)


def bias_constant(ens: BootstrapEnsemble, index: int) -> float:
    """``z0 = Phi^-1(#{est* < est} / B)``."""
    col = ens.estimates[:, index]
    if col.shape[0] == 0:
        raise ValueError("bootstrap ensemble has no successful replicates")
    frac = float(np.count_nonzero(col < ens.origin.vector[index])) / col.shape[0]
    if frac <= 0.0 or frac >= 1.0:
        side = "above" if frac == 0 else "below"
        raise BiasCorrectionError(
            f"all replicates of {param_label(index, ens.origin.k)} lie {side} the original estimate "
            "(monotone bias), so the bias-correction constant is infinite"
        )
    return float(norm.ppf(frac))


def _adjusted_level(q, z0, a):
    if z0 == 0.0 and a == 0.0:
        return q
    zq = norm.ppf(q)
    denom = 1.0 - a * (z0 + zq)
    if denom <= 0:
        raise AccelerationError(f"1 - a (z0 + z) = {denom:.4g} is not positive (a={a:.4g}, z0={z0:.4g})")
    return float(norm.cdf(z0 + (z0 + zq) / denom))


def _bca(ens, index, level, z0, a, method, clamp, extra):
    q = _tail(level)
    col = _column(ens, index)
    _check_tail(col.shape[0], q)
    lo = _adjusted_level(q, z0, a)
    hi = _adjusted_level(1 - q, z0, a)
    meta = {"param": param_label(index, ens.origin.k), "B": int(col.shape[0]), "z0": z0, "a": a, "levels": (lo, hi)}
    meta.update(extra)
    # a level that lands between order statistics is rounded by the rank rule
    meta["ranks"] = (quantile_rank(lo, col.shape[0]), quantile_rank(hi, col.shape[0]))
    return _finish(order_stat_quantile(col, lo), order_stat_quantile(col, hi), method, level, meta, clamp)


def boot_bc(
    ens: BootstrapEnsemble, index: int, level: float = 0.95, clamp: bool = False, z0: float | None = None
) -> IntervalEstimate:
    """Bias-corrected interval ``G^-1[Phi(2 z0 + z_q)]`` at both tails.

    ``z0`` is estimated by :func:`bias_constant` unless supplied.
    """
    if z0 is None:
        z0 = bias_constant(ens, index)
    return _bca(ens, index, level, float(z0), 0.0, "boot-BC", clamp, {})


def boot_bca(
    ens: BootstrapEnsemble,
    sample: JointSample | None = None,
    index: int = 0,
    level: float = 0.95,
    clamp: bool = False,
    z0: float | None = None,
    a: float | None = None,
    jackknife: np.ndarray | None = None,
) -> IntervalEstimate:
    """Bias-corrected accelerated interval.

    Endpoints are ``G^-1[Phi(z0 + (z0 + z_q) / (1 - a (z0 + z_q)))]``.  The
    acceleration ``a`` comes from leave-one-out refits of ``sample``
    (default: the origin's sample) unless given directly or through a
    precomputed ``jackknife`` matrix.  With ``a = 0`` the result equals
    :func:`boot_bc` exactly.
    """
    if z0 is None:
        z0 = bias_constant(ens, index)
    extra = {}
    if a is None:
        if jackknife is None:
            sample = sample if sample is not None else ens.origin.sample
            jackknife = jackknife_estimates(sample, init=ens.origin.estimates)
        a, degenerate = acceleration(jackknife[:, index])
        extra["a_degenerate"] = degenerate
    return _bca(ens, index, level, float(z0), float(a), "boot-BCa", clamp, extra)


# ---------------------------------------------------------------------------
# jackknife
# ---------------------------------------------------------------------------


def delete_failure(sample: JointSample, i: int) -> JointSample:
    """Remove the failure at 0-based position ``i``.

    The deleted unit and the withdrawals made at its failure are moved to
    the previous step (to the following step when ``i == 0``), so the unit
    is treated as withdrawn and every line keeps its sample size.
    """
    r = sample.r
    if not 0 <= i < r:
        raise IndexError(f"failure index {i} out of range for r={r}")
    if r < 2:
        raise ValueError("cannot delete from a single-failure sample")
    W = np.array(sample.withdrawn, dtype=np.int64)
    target = i - 1 if i > 0 else i + 1
    W[target] += W[i]
    W[target, sample.line_of[i] - 1] += 1
    keep = np.arange(r) != i
    W = W[keep]
    plan = CensoringPlan(n=sample.plan.n, r=r - 1, s=W)
    return JointSample(times=sample.times[keep], line_of=sample.line_of[keep], plan=plan, withdrawn=W)


def jackknife_estimates(sample: JointSample, init=None, fit_options: dict | None = None) -> np.ndarray:
    """Leave-one-out estimates, one row per deleted failure.

    Rows are NaN where the reduced sample leaves a line without failures.
    """
    if sample.r < 3:
        raise ValueError("jackknife needs r >= 3")
    opts = {"restarts": 0}
    opts.update(fit_options or {})
    out = np.full((sample.r, 3 * sample.k), np.nan)
    for i in range(sample.r):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            reduced = delete_failure(sample, i)
            try:
                out[i] = fit_mle(reduced, init=init, **opts).vector
            except InsufficientFailures:
                continue
    return out


def acceleration(values) -> tuple[float, bool]:
    """``a = sum (m - v)^3 / (6 [sum (m - v)^2]^1.5)`` over finite ``values``.

    Returns ``(a, degenerate)``; ``a`` is 0 and ``degenerate`` True when all
    values coincide.
    """
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.shape[0] == 0:
        raise ValueError("no finite leave-one-out estimates")
    dev = v.mean() - v
    ss = float(np.sum(dev**2))
    if ss == 0.0:
        return 0.0, True
    return float(np.sum(dev**3) / (6.0 * ss**1.5)), False


def jackknife_acceleration(sample: JointSample, index: int, init=None) -> float:
    """Acceleration constant for parameter ``index`` from leave-one-out refits."""
    return acceleration(jackknife_estimates(sample, init=init)[:, index])[0]
