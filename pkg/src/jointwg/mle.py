"""Maximum likelihood for k Weibull-Gamma lines under joint progressive censoring.

Parameter vectors are ordered ``(alpha_1..alpha_k, theta_1..theta_k,
beta_1..beta_k)``.  The log-likelihood is a sum of per-line terms, so every
line is fitted on its own.  Within a line ``beta`` has the closed form

    beta(alpha, theta) = M_h / sum_i (delta_i(h) + s_i(h)) log(1 + (t_i/alpha)^theta)

and Newton-Raphson runs on ``(log alpha, log theta)`` of the profile.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, gammaln
from scipy.stats import norm

from .censoring import JointSample
from .dist import WGParams
from .intervals import IntervalEstimate, clamp_nonneg, param_label

__all__ = [
    "FitResult",
    "InsufficientFailures",
    "params_to_vector",
    "vector_to_params",
    "log_likelihood",
    "log_normalizing_constant",
    "score",
    "observed_info",
    "beta_profile",
    "fit_mle",
    "evaluate_fit",
    "aci",
    "beta_uniqueness_curve",
]


class InsufficientFailures(ValueError):
    """A line contributed no failures, so its parameters are not identified."""


def params_to_vector(params) -> np.ndarray:
    arr = np.array([p.as_tuple() for p in params], dtype=float)
    return arr.T.reshape(-1)


def vector_to_params(x) -> list[WGParams]:
    x = np.asarray(x, dtype=float)
    k = x.shape[0] // 3
    return [WGParams(x[h], x[k + h], x[2 * k + h]) for h in range(k)]


def _data(sample: JointSample):
    logt = np.log(sample.times)
    d = sample.delta
    w = sample.weights
    M = d.sum(axis=1)
    sumlog = d @ logt
    return logt, d, w, M, sumlog


def _line_loglik(a, th, b, logt, d, w, M, sumlog):
    la = math.log(a)
    z = np.logaddexp(0.0, th * (logt - la))
    return M * (math.log(th) + math.log(b) - th * la) + (th - 1.0) * sumlog - np.dot(b * w + d, z)


def log_normalizing_constant(sample: JointSample) -> float:
    """Log of the parameter-free multiplier ``c_r`` of the joint likelihood.

    Counts the ways the labelled failures and withdrawals can occur; raises
    ``ValueError`` when the sample's counts are inconsistent with its plan.
    """
    plan = sample.plan
    n = np.array(plan.n, dtype=float)
    s = sample.withdrawn.astype(float)
    lines = sample.line_of - 1
    failed = np.zeros(plan.k)
    removed = np.zeros(plan.k)
    total_removed = 0.0
    out = 0.0
    for i in range(sample.r):
        h = lines[i]
        at_risk = n[h] - failed[h] - removed[h]
        if at_risk <= 0:
            raise ValueError(f"line {h + 1} has no units at risk at failure {i + 1}")
        out += math.log(at_risk)
        failed[h] += 1
        if i < sample.r - 1:
            for g in range(plan.k):
                avail = n[g] - failed[g] - removed[g]
                if s[i, g] > avail:
                    raise ValueError(f"withdrawal s_{i + 1}({g + 1}) exceeds survivors of line {g + 1}")
                out += gammaln(avail + 1) - gammaln(s[i, g] + 1) - gammaln(avail - s[i, g] + 1)
            pool = plan.N - (i + 1) - total_removed
            Ri = s[i].sum()
            out -= gammaln(pool + 1) - gammaln(Ri + 1) - gammaln(pool - Ri + 1)
        removed += s[i]
        total_removed += s[i].sum()
    return float(out)


def log_likelihood(params, sample: JointSample, include_constant: bool = False) -> float:
    """Joint log-likelihood; adds ``log c_r`` when ``include_constant``."""
    logt, d, w, M, sumlog = _data(sample)
    total = 0.0
    for h, p in enumerate(params):
        total += _line_loglik(p.alpha, p.theta, p.beta, logt, d[h], w[h], M[h], sumlog[h])
    if include_constant:
        total += log_normalizing_constant(sample)
    return float(total)


def _line_score(a, th, b, logt, d, w, M, sumlog):
    la = math.log(a)
    lu = th * (logt - la)
    z = np.logaddexp(0.0, lu)
    sig = expit(lu)
    c = b * w + d
    g_a = -M * th / a + (th / a) * np.dot(c, sig)
    g_t = M / th - M * la + sumlog - np.dot(c * (logt - la), sig)
    g_b = M / b - np.dot(w, z)
    return g_a, g_t, g_b


def score(params, sample: JointSample) -> np.ndarray:
    """Gradient of the log-likelihood, ordered (alpha.., theta.., beta..)."""
    logt, d, w, M, sumlog = _data(sample)
    k = len(params)
    out = np.empty(3 * k)
    for h, p in enumerate(params):
        out[h], out[k + h], out[2 * k + h] = _line_score(p.alpha, p.theta, p.beta, logt, d[h], w[h], M[h], sumlog[h])
    return out


def observed_info(params, sample: JointSample, symmetrize: bool = True) -> np.ndarray:
    """Negative Hessian by central differences of the analytic score.

    The step for coordinate j is ``max(1e-5, 1e-5 * |x_j|)``, shrunk when
    needed so the perturbed point stays inside the parameter space.
    """
    x = params_to_vector(params)
    n = x.shape[0]
    H = np.empty((n, n))
    for j in range(n):
        h = max(1e-5, 1e-5 * abs(x[j]))
        if x[j] - h <= 0:
            h = 0.5 * x[j]
            if h <= 1e-300:
                raise FloatingPointError(f"step underflow at coordinate {j} near the domain boundary")
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        H[:, j] = (score(vector_to_params(xp), sample) - score(vector_to_params(xm), sample)) / (2 * h)
    info = -H
    if symmetrize:
        info = 0.5 * (info + info.T)
    return info


def beta_profile(sample: JointSample, line: int, alpha: float, theta: float) -> float:
    """Root in beta of the beta score for 1-based ``line`` at fixed (alpha, theta)."""
    logt, d, w, M, _ = _data(sample)
    h = line - 1
    if M[h] < 1:
        raise InsufficientFailures(f"line {line} has no failures")
    z = np.logaddexp(0.0, theta * (logt - math.log(alpha)))
    return float(M[h] / np.dot(w[h], z))


def beta_uniqueness_curve(sample: JointSample, line: int, alpha: float, theta: float, grid):
    """Pairs ``(beta, 1/beta - C)`` whose single zero is the profiled beta."""
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise ValueError("beta grid must be positive")
    C = 1.0 / beta_profile(sample, line, alpha, theta)
    return [(float(b), float(1.0 / b - C)) for b in grid]


@dataclass
class FitResult:
    """Outcome of a likelihood fit.

    ``info`` and ``vcov`` are on the raw parameter scale in the
    (alpha.., theta.., beta..) ordering; ``vcov`` is None when the
    observed information is not positive definite.
    """

    estimates: list
    loglik: float
    info: np.ndarray
    vcov: np.ndarray | None
    trace: list
    converged: bool
    sample: JointSample | None = None
    include_constant: bool = False
    message: str = ""
    score: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def k(self) -> int:
        return len(self.estimates)

    @property
    def vector(self) -> np.ndarray:
        return params_to_vector(self.estimates)

    @property
    def variances(self) -> np.ndarray:
        if self.vcov is None:
            return np.full(3 * self.k, np.nan)
        return np.diag(self.vcov).copy()


def _profile_point(x, logt, d, w, M, sumlog):
    a, th = math.exp(x[0]), math.exp(x[1])
    z = np.logaddexp(0.0, th * (logt - x[0]))
    b = M / np.dot(w, z)
    ll = _line_loglik(a, th, b, logt, d, w, M, sumlog)
    g_a, g_t, _ = _line_score(a, th, b, logt, d, w, M, sumlog)
    # envelope theorem: the beta score is zero on the profile
    return ll, np.array([a * g_a, th * g_t]), b


def _profile_hessian(x, logt, d, w, M, sumlog):
    H = np.empty((2, 2))
    for j in range(2):
        h = 1e-5 * max(1.0, abs(x[j]))
        e = np.zeros(2)
        e[j] = h
        gp = _profile_point(x + e, logt, d, w, M, sumlog)[1]
        gm = _profile_point(x - e, logt, d, w, M, sumlog)[1]
        H[:, j] = (gp - gm) / (2 * h)
    return 0.5 * (H + H.T)


def _newton_line(x0, logt, d, w, M, sumlog, tmax, tol_step, tol_grad, max_iter, r):
    """Damped Newton ascent on the profile log-likelihood of one line."""
    x = np.asarray(x0, dtype=float).copy()
    ll, g, b = _profile_point(x, logt, d, w, M, sumlog)
    log_tmax = math.log(tmax)
    steps = []
    status = "max-iter"
    for it in range(1, max_iter + 1):
        H = _profile_hessian(x, logt, d, w, M, sumlog)
        A = -H  # Hessian of the negative profile
        eig_min = np.linalg.eigvalsh(A)[0]
        tau = 0.0 if eig_min > 1e-12 * max(1.0, abs(A).max()) else 1e-6 - eig_min
        accepted = False
        for _ in range(60):
            try:
                step = np.linalg.solve(A + tau * np.eye(2), g)
            except np.linalg.LinAlgError:
                tau = max(2 * tau, 1e-6)
                continue
            step = np.clip(step, -3.0, 3.0)
            ll_new, g_new, b_new = _profile_point(x + step, logt, d, w, M, sumlog)
            if np.isfinite(ll_new) and ll_new >= ll - 1e-12 * max(1.0, abs(ll)):
                accepted = True
                break
            tau = max(2 * tau, 1e-6)
        if not accepted:
            status = "stalled"
            break
        x = x + step
        ll, g, b = ll_new, g_new, b_new
        a, th = math.exp(x[0]), math.exp(x[1])
        raw_grad = max(abs(g[0] / a), abs(g[1] / th))
        steps.append(
            {"iter": it, "loglik": float(ll), "grad": float(raw_grad), "step": float(np.abs(step).max()), "damping": tau}
        )
        # (t/alpha)^theta below 1e-6 for every t: the model is Weibull to
        # working precision and the likelihood only improves as alpha grows
        if th * (log_tmax - x[0]) < math.log(1e-6) or b > 1e12:
            status = "boundary: alpha and beta diverge (Weibull limit)"
            break
        if th > 1e3:
            status = "boundary: theta diverges (degenerate spike)"
            break
        if np.abs(step).max() <= tol_step and raw_grad < tol_grad * r:
            status = "converged"
            break
    return x, ll, b, status, steps


def fit_mle(
    sample: JointSample,
    init=None,
    tol_step: float = 1e-8,
    tol_grad: float = 1e-6,
    max_iter: int = 200,
    restarts: int = 3,
    include_constant: bool = False,
    seed: int = 20240601,
) -> FitResult:
    """Newton-Raphson maximum likelihood fit.

    Parameters
    ----------
    sample : JointSample
    init : list of WGParams, optional
        Starting values.  By default each line starts at the median of its
        failure times with ``theta = 1``.
    tol_step : float
        Convergence threshold on the largest change of ``log alpha`` or
        ``log theta`` between iterates.
    tol_grad : float
        Per-failure bound on the raw-scale score at convergence.
    restarts : int
        Extra starts jittered around the first one.  The best converged
        start wins.
    seed : int
        Seed of the jitter, so fits are deterministic.

    Returns
    -------
    FitResult
        ``converged`` is False when no start met the tolerances, for
        instance when the likelihood keeps increasing toward the Weibull
        limit ``alpha, beta -> inf``; the best iterate is returned then.
    """
    logt, d, w, M, sumlog = _data(sample)
    k = sample.k
    for h in range(k):
        if M[h] < 1:
            raise InsufficientFailures(f"line {h + 1} has no failures; its parameters are not identified")
    tmax = float(sample.times.max())
    jitter = np.random.default_rng(seed)
    estimates = []
    trace = []
    ok = True
    messages = []
    for h in range(k):
        if init is not None:
            x_first = np.log([init[h].alpha, init[h].theta])
        else:
            x_first = np.array([math.log(float(np.median(sample.line_times(h + 1)))), 0.0])
        starts = [x_first] + [x_first + jitter.normal(0.0, 0.5, size=2) for _ in range(restarts)]
        best = None
        for j, x0 in enumerate(starts):
            x, ll, b, status, steps = _newton_line(
                x0, logt, d[h], w[h], M[h], sumlog[h], tmax, tol_step, tol_grad, max_iter, sample.r
            )
            trace.append({"line": h + 1, "start": j, "init": np.exp(x0).tolist(), "status": status, "iterations": steps})
            cand = (status == "converged", ll, x, b, status)
            if best is None or (cand[0], cand[1]) > (best[0], best[1]):
                best = cand
        conv, ll, x, b, status = best
        ok = ok and conv
        if not conv:
            messages.append(f"line {h + 1}: {status}")
        estimates.append(WGParams(math.exp(x[0]), math.exp(x[1]), b))
    result = _assemble(estimates, sample, trace, ok, include_constant)
    result.message = "; ".join(messages) if messages else "converged"
    return result


def _assemble(estimates, sample, trace, converged, include_constant):
    loglik = log_likelihood(estimates, sample, include_constant=include_constant)
    try:
        info = observed_info(estimates, sample)
    except FloatingPointError:
        info = np.full((3 * len(estimates),) * 2, np.nan)
    vcov = None
    if np.all(np.isfinite(info)):
        try:
            np.linalg.cholesky(info)
            vcov = np.linalg.inv(info)
            vcov = 0.5 * (vcov + vcov.T)
        except np.linalg.LinAlgError:
            warnings.warn("observed information is not positive definite; no variance-covariance", RuntimeWarning)
    return FitResult(
        estimates=list(estimates),
        loglik=loglik,
        info=info,
        vcov=vcov,
        trace=trace,
        converged=converged,
        sample=sample,
        include_constant=include_constant,
        score=score(estimates, sample),
    )


def evaluate_fit(params, sample: JointSample, tol_grad: float = 1e-6, include_constant: bool = False) -> FitResult:
    """Build a FitResult at supplied estimates, e.g. published ones.

    ``converged`` reports whether the score vanishes there (to
    ``tol_grad * r``); information and covariance are computed regardless.
    """
    s = score(params, sample)
    conv = bool(np.max(np.abs(s)) < tol_grad * sample.r)
    result = _assemble(list(params), sample, [], conv, include_constant)
    result.message = "evaluated at supplied estimates" + ("" if conv else f"; max |score| = {np.max(np.abs(s)):.3g}")
    return result


def aci(fit: FitResult, level: float = 0.95, clamp: bool = False) -> list[IntervalEstimate]:
    """Normal-approximation intervals ``est +/- z * sd`` from the observed information."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if fit.vcov is None:
        raise ValueError("fit has no variance-covariance matrix")
    if not fit.converged:
        warnings.warn("intervals from a fit that did not converge", RuntimeWarning)
    z = norm.ppf(1 - (1 - level) / 2)
    est = fit.vector
    var = np.diag(fit.vcov)
    out = []
    for j in range(est.shape[0]):
        sd = math.sqrt(max(var[j], 0.0))
        iv = IntervalEstimate(
            est[j] - z * sd, est[j] + z * sd, "ACI", level, {"param": param_label(j, fit.k), "z": z, "sd": sd}
        )
        out.append(clamp_nonneg(iv) if clamp else iv)
    return out
