"""Hot loops: the joint progressive-censoring walk and the MH-within-Gibbs sweep.

Each kernel has a loop form written in the numba subset and a pure numpy
form.  ``_accel.ENABLED`` picks which one the public modules call; both
consume the same pre-drawn random numbers, so a seed gives the same result
on either path.
"""

import math

import numpy as np

from . import _accel

# ---------------------------------------------------------------------------
# joint progressive Type-II walk
# ---------------------------------------------------------------------------
#
# Inputs (all 0-based):
#   times   (N,) lifetimes, any order
#   lines   (N,) line index of each unit
#   fail_order (N,) unit indices sorted by (time, line, within-line index)
#   key_order  (N,) unit indices sorted by withdrawal key (ascending)
#   s       (r, k) per-line withdrawals; ignored when pooled
#   R       (r,) total withdrawals
# Outputs:
#   out_times (r,), out_lines (r,), withdrawn (r, k), status
# status is -1 on success, otherwise step * k + line of the first shortfall.
# The last step always withdraws every remaining unit.


def _walk_loop(times, lines, fail_order, key_order, s, R, k, pooled):
    N = times.shape[0]
    r = R.shape[0]
    alive = np.ones(N, dtype=np.bool_)
    alive_per_line = np.zeros(k, dtype=np.int64)
    for u in range(N):
        alive_per_line[lines[u]] += 1
    out_times = np.empty(r)
    out_lines = np.empty(r, dtype=np.int64)
    withdrawn = np.zeros((r, k), dtype=np.int64)
    ptr = 0
    for i in range(r):
        while not alive[fail_order[ptr]]:
            ptr += 1
        u = fail_order[ptr]
        alive[u] = False
        alive_per_line[lines[u]] -= 1
        out_times[i] = times[u]
        out_lines[i] = lines[u]
        if i == r - 1:
            for h in range(k):
                withdrawn[i, h] = alive_per_line[h]
            break
        if pooled:
            need = R[i]
            j = 0
            while need > 0:
                v = key_order[j]
                if alive[v]:
                    alive[v] = False
                    alive_per_line[lines[v]] -= 1
                    withdrawn[i, lines[v]] += 1
                    need -= 1
                j += 1
        else:
            for h in range(k):
                if s[i, h] > alive_per_line[h]:
                    return out_times, out_lines, withdrawn, i * k + h
            for h in range(k):
                need = s[i, h]
                j = 0
                while need > 0:
                    v = key_order[j]
                    if alive[v] and lines[v] == h:
                        alive[v] = False
                        alive_per_line[h] -= 1
                        withdrawn[i, h] += 1
                        need -= 1
                    j += 1
    return out_times, out_lines, withdrawn, -1


def _walk_numpy(times, lines, fail_order, key_order, s, R, k, pooled):
    N = times.shape[0]
    r = R.shape[0]
    alive = np.ones(N, dtype=bool)
    # position of each unit in failure order, for fast "next alive" lookup
    out_times = np.empty(r)
    out_lines = np.empty(r, dtype=np.int64)
    withdrawn = np.zeros((r, k), dtype=np.int64)
    key_lines = lines[key_order]
    for i in range(r):
        u = fail_order[alive[fail_order]][0]
        alive[u] = False
        out_times[i] = times[u]
        out_lines[i] = lines[u]
        if i == r - 1:
            withdrawn[i] = np.bincount(lines[alive], minlength=k)
            break
        if pooled:
            take = key_order[alive[key_order]][: R[i]]
            alive[take] = False
            withdrawn[i] = np.bincount(lines[take], minlength=k)
        else:
            counts = np.bincount(lines[alive], minlength=k)
            short = np.nonzero(s[i] > counts)[0]
            if short.size:
                return out_times, out_lines, withdrawn, i * k + int(short[0])
            for h in np.nonzero(s[i])[0]:
                cand = key_order[alive[key_order] & (key_lines == h)]
                alive[cand[: s[i, h]]] = False
                withdrawn[i, h] = s[i, h]
    return out_times, out_lines, withdrawn, -1


_walk_jit = _accel.optional_njit(cache=True)(_walk_loop)


def joint_walk(times, lines, fail_order, key_order, s, R, k, pooled):
    """Dispatch to the compiled loop or the numpy fallback."""
    if _accel.ENABLED:
        return _walk_jit(times, lines, fail_order, key_order, s, R, k, pooled)
    return _walk_numpy(times, lines, fail_order, key_order, s, R, k, pooled)


# ---------------------------------------------------------------------------
# Metropolis-Hastings within Gibbs
# ---------------------------------------------------------------------------
#
# Per line h the data enter only through
#   logt  (r,)   log failure times
#   d     (k, r) failure indicators
#   w     (k, r) d + withdrawals
#   M     (k,)   failures per line
#   sumlog(k,)   sum of log times of line-h failures
# Random inputs, all pre-drawn:
#   gam  (Q, k)    standard gamma(M_h + p_h) variates
#   z    (Q, k, 2) standard normals for the alpha / theta proposals
#   lu   (Q, k, 2) log uniforms for the acceptance tests


def _log_cond_alpha(a, th, b, logt, d_h, w_h, M_h, mu, lam):
    # alpha block of the joint posterior: (mu-1) log a - lam a - th M log a - sum (b w + d) log1p
    la = math.log(a)
    acc = 0.0
    for i in range(logt.shape[0]):
        if w_h[i] != 0.0:
            x = th * (logt[i] - la)
            if x > 0:
                z = x + math.log1p(math.exp(-x))
            else:
                z = math.log1p(math.exp(x))
            acc += (b * w_h[i] + d_h[i]) * z
    return (mu - 1.0) * la - lam * a - th * M_h * la - acc


def _log_cond_theta(a, th, b, logt, d_h, w_h, M_h, sumlog_h, q, wr):
    la = math.log(a)
    acc = 0.0
    for i in range(logt.shape[0]):
        if w_h[i] != 0.0:
            x = th * (logt[i] - la)
            if x > 0:
                z = x + math.log1p(math.exp(-x))
            else:
                z = math.log1p(math.exp(x))
            acc += (b * w_h[i] + d_h[i]) * z
    return (M_h + q - 1.0) * math.log(th) - th * (wr + M_h * la - sumlog_h) - acc


def _beta_rate(a, th, logt, w_h, v):
    la = math.log(a)
    acc = 0.0
    for i in range(logt.shape[0]):
        if w_h[i] != 0.0:
            x = th * (logt[i] - la)
            if x > 0:
                z = x + math.log1p(math.exp(-x))
            else:
                z = math.log1p(math.exp(x))
            acc += w_h[i] * z
    return v + acc


def _mcmc_loop(start, logt, d, w, M, sumlog, hyper, scales, gam, z, lu, log_scale):
    # start (k, 3); hyper (k, 6) = mu, lam, q, wr, p, v; scales (k, 2)
    Q = gam.shape[0]
    k = start.shape[0]
    draws = np.empty((Q, k, 3))
    accepted = np.zeros((k, 2), dtype=np.int64)
    cur = start.copy()
    for l in range(Q):
        for h in range(k):
            a = cur[h, 0]
            th = cur[h, 1]
            mu, lam, q, wr, p, v = hyper[h, 0], hyper[h, 1], hyper[h, 2], hyper[h, 3], hyper[h, 4], hyper[h, 5]
            b = gam[l, h] / _beta_rate(a, th, logt, w[h], v)

            # alpha | theta, beta
            if log_scale:
                prop = a * math.exp(scales[h, 0] * z[l, h, 0])
            else:
                prop = a + scales[h, 0] * z[l, h, 0]
            if prop > 0.0:
                ratio = _log_cond_alpha(prop, th, b, logt, d[h], w[h], M[h], mu, lam) - _log_cond_alpha(
                    a, th, b, logt, d[h], w[h], M[h], mu, lam
                )
                if log_scale:
                    ratio += math.log(prop) - math.log(a)
                if lu[l, h, 0] <= ratio:
                    a = prop
                    accepted[h, 0] += 1

            # theta | alpha (new), beta
            if log_scale:
                prop = th * math.exp(scales[h, 1] * z[l, h, 1])
            else:
                prop = th + scales[h, 1] * z[l, h, 1]
            if prop > 0.0:
                ratio = _log_cond_theta(a, prop, b, logt, d[h], w[h], M[h], sumlog[h], q, wr) - _log_cond_theta(
                    a, th, b, logt, d[h], w[h], M[h], sumlog[h], q, wr
                )
                if log_scale:
                    ratio += math.log(prop) - math.log(th)
                if lu[l, h, 1] <= ratio:
                    th = prop
                    accepted[h, 1] += 1

            cur[h, 0] = a
            cur[h, 1] = th
            cur[h, 2] = b
            draws[l, h, 0] = a
            draws[l, h, 1] = th
            draws[l, h, 2] = b
    return draws, accepted


def _log1p_pow(th, logt, la):
    return np.logaddexp(0.0, th * (logt - la))


def _mcmc_numpy(start, logt, d, w, M, sumlog, hyper, scales, gam, z, lu, log_scale):
    Q = gam.shape[0]
    k = start.shape[0]
    draws = np.empty((Q, k, 3))
    accepted = np.zeros((k, 2), dtype=np.int64)
    cur = start.copy()

    def cond_alpha(a, th, b, h):
        la = np.log(a)
        zz = _log1p_pow(th, logt, la)
        return (hyper[h, 0] - 1.0) * la - hyper[h, 1] * a - th * M[h] * la - np.dot(b * w[h] + d[h], zz)

    def cond_theta(a, th, b, h):
        la = np.log(a)
        zz = _log1p_pow(th, logt, la)
        return (
            (M[h] + hyper[h, 2] - 1.0) * np.log(th)
            - th * (hyper[h, 3] + M[h] * la - sumlog[h])
            - np.dot(b * w[h] + d[h], zz)
        )

    for l in range(Q):
        for h in range(k):
            a, th = cur[h, 0], cur[h, 1]
            rate = hyper[h, 5] + np.dot(w[h], _log1p_pow(th, logt, np.log(a)))
            b = gam[l, h] / rate
            if log_scale:
                prop = a * np.exp(scales[h, 0] * z[l, h, 0])
            else:
                prop = a + scales[h, 0] * z[l, h, 0]
            if prop > 0.0:
                ratio = cond_alpha(prop, th, b, h) - cond_alpha(a, th, b, h)
                if log_scale:
                    ratio += np.log(prop) - np.log(a)
                if lu[l, h, 0] <= ratio:
                    a = prop
                    accepted[h, 0] += 1
            if log_scale:
                prop = th * np.exp(scales[h, 1] * z[l, h, 1])
            else:
                prop = th + scales[h, 1] * z[l, h, 1]
            if prop > 0.0:
                ratio = cond_theta(a, prop, b, h) - cond_theta(a, th, b, h)
                if log_scale:
                    ratio += np.log(prop) - np.log(th)
                if lu[l, h, 1] <= ratio:
                    th = prop
                    accepted[h, 1] += 1
            cur[h] = (a, th, b)
            draws[l, h] = (a, th, b)
    return draws, accepted


_log_cond_alpha_jit = _accel.optional_njit(cache=True)(_log_cond_alpha)
_log_cond_theta_jit = _accel.optional_njit(cache=True)(_log_cond_theta)
_beta_rate_jit = _accel.optional_njit(cache=True)(_beta_rate)

if _accel.ENABLED:
    # the loop resolves helpers through module globals at compile time
    _log_cond_alpha = _log_cond_alpha_jit  # noqa: F811
    _log_cond_theta = _log_cond_theta_jit  # noqa: F811
    _beta_rate = _beta_rate_jit  # noqa: F811

_mcmc_jit = _accel.optional_njit(cache=True)(_mcmc_loop)


def mcmc_sweeps(start, logt, d, w, M, sumlog, hyper, scales, gam, z, lu, log_scale):
    """Run ``gam.shape[0]`` sweeps; returns draws (Q, k, 3) and accept counts (k, 2)."""
    if _accel.ENABLED:
        return _mcmc_jit(start, logt, d, w, M, sumlog, hyper, scales, gam, z, lu, log_scale)
    return _mcmc_numpy(start, logt, d, w, M, sumlog, hyper, scales, gam, z, lu, log_scale)
