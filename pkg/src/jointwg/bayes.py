"""Bayesian estimation with independent gamma priors.

The posterior is explored by Metropolis-Hastings within Gibbs.  For each
line and sweep, ``beta_h`` is drawn exactly from its gamma conditional

    beta_h | alpha_h, theta_h ~ Gamma(M_h + p_h, v_h + sum_i (delta_i + s_i) log(1 + (t_i/alpha_h)^theta_h)),

then ``alpha_h`` and ``theta_h`` take one random-walk Metropolis step each,
on the raw scale by default.  All random numbers of a chain are drawn up
front from one generator, so the compiled and the numpy sweeps give the
same chain for a seed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .censoring import JointSample
from .dist import WGParams
from .intervals import IntervalEstimate, param_label, quantile_rank
from .mle import FitResult, fit_mle, log_likelihood

__all__ = [
    "PriorSpec",
    "PosteriorChain",
    "log_prior",
    "log_posterior",
    "sample_beta_conditional",
    "run_chain",
    "estimate_sel",
    "estimate_linex",
    "credible_interval",
    "merge_chains",
    "export_chain",
]

_HYPER = ("mu", "lam", "q", "w", "p", "v")


@dataclass(frozen=True)
class PriorSpec:
    """Independent gamma priors, per line.

    ``alpha_h ~ Gamma(mu_h, rate=lam_h)``, ``theta_h ~ Gamma(q_h, rate=w_h)``
    and ``beta_h ~ Gamma(p_h, rate=v_h)``.  Each field holds one value per line.
    """

    mu: tuple
    lam: tuple
    q: tuple
    w: tuple
    p: tuple
    v: tuple

    def __post_init__(self):
        lengths = set()
        for name in _HYPER:
            vals = tuple(float(x) for x in np.atleast_1d(getattr(self, name)))
            if any(not math.isfinite(x) or x <= 0 for x in vals):
                raise ValueError(f"prior hyperparameter {name} must be positive, got {vals}")
            object.__setattr__(self, name, vals)
            lengths.add(len(vals))
        if len(lengths) != 1:
            raise ValueError("every hyperparameter needs one value per line")

    @property
    def k(self) -> int:
        return len(self.mu)

    @classmethod
    def uniform(cls, k: int, shape: float = 0.01, rate: float = 2.0) -> "PriorSpec":
        """All shapes equal to ``shape`` and all rates to ``rate``."""
        return cls(*([(shape,) * k, (rate,) * k] * 3))

    @classmethod
    def from_mapping(cls, mapping: dict, k: int) -> "PriorSpec":
        """Build from ``{"mu": 0.01 or [..], ...}``; missing keys take the defaults."""
        unknown = set(mapping) - set(_HYPER)
        if unknown:
            raise ValueError(f"unknown prior keys {sorted(unknown)}")
        default = cls.uniform(k)
        values = {}
        for name in _HYPER:
            raw = mapping.get(name, getattr(default, name))
            vals = np.atleast_1d(np.asarray(raw, dtype=float))
            if vals.shape[0] == 1:
                vals = np.repeat(vals, k)
            if vals.shape[0] != k:
                raise ValueError(f"prior {name} has {vals.shape[0]} values for {k} lines")
            values[name] = tuple(vals)
        return cls(**values)

    def as_dict(self) -> dict:
        return {name: list(getattr(self, name)) for name in _HYPER}

    def as_array(self) -> np.ndarray:
        """(k, 6) array with columns mu, lam, q, w, p, v."""
        return np.array([getattr(self, name) for name in _HYPER]).T


def log_prior(params, prior: PriorSpec) -> float:
    """Log of the joint gamma prior density, without normalizing constants."""
    total = 0.0
    for h, prm in enumerate(params):
        total += (prior.mu[h] - 1) * math.log(prm.alpha) - prior.lam[h] * prm.alpha
        total += (prior.q[h] - 1) * math.log(prm.theta) - prior.w[h] * prm.theta
        total += (prior.p[h] - 1) * math.log(prm.beta) - prior.v[h] * prm.beta
    return total


def log_posterior(params, sample: JointSample, prior: PriorSpec) -> float:
    """Unnormalized log posterior: log-likelihood kernel plus log prior."""
    if prior.k != len(params):
        raise ValueError("prior and parameters have different line counts")
    return log_likelihood(params, sample) + log_prior(params, prior)


def _beta_shape_rate(sample, h, alpha, theta, prior):
    d = sample.delta[h]
    w = sample.weights[h]
    z = np.logaddexp(0.0, theta * (np.log(sample.times) - math.log(alpha)))
    return float(d.sum() + prior.p[h]), float(prior.v[h] + np.dot(w, z))


def sample_beta_conditional(
    sample: JointSample, line: int, alpha: float, theta: float, prior: PriorSpec, rng, size=None
):
    """Draw ``beta_h`` from its exact gamma conditional (``line`` is 1-based)."""
    if alpha <= 0 or theta <= 0:
        raise ValueError("alpha and theta must be positive")
    shape, rate = _beta_shape_rate(sample, line - 1, alpha, theta, prior)
    return rng.standard_gamma(shape, size=size) / rate


@dataclass
class PosteriorChain:
    """Stored sweeps of one or more chains.

    Attributes
    ----------
    draws : ndarray, shape (Q, 3k)
        Every sweep, burn-in included, in the (alpha.., theta.., beta..) order.
    burn_in : int
        Leading sweeps ignored by the estimators.
    acceptance : ndarray, shape (k, 2)
        Metropolis acceptance rates of the alpha and theta updates.
    seed : object
        Root seed of the chain.
    meta : dict
        Proposal scales, fallback flags and diagnostics.
    """

    draws: np.ndarray
    burn_in: int
    acceptance: np.ndarray
    seed: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.burn_in < self.draws.shape[0]:
            raise ValueError("need 0 <= burn_in < number of sweeps")
        self.draws.setflags(write=False)

    @property
    def k(self) -> int:
        return self.draws.shape[1] // 3

    @property
    def Q(self) -> int:
        return self.draws.shape[0]

    @property
    def kept(self) -> np.ndarray:
        return self.draws[self.burn_in :]


def _start_and_scales(sample, init, proposal_scales):
    meta = {}
    if init is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            init = fit_mle(sample)
        if not init.converged:
            warnings.warn(f"chain starts from a fit that did not converge ({init.message})", RuntimeWarning)
    if isinstance(init, FitResult):
        start = [p.as_tuple() for p in init.estimates]
        vcov = init.vcov
    else:
        start = [p.as_tuple() for p in init]
        vcov = None
    start = np.array(start, dtype=float)
    k = start.shape[0]
    if proposal_scales is not None:
        scales = np.array(proposal_scales, dtype=float).reshape(k, 2)
        if np.any(~np.isfinite(scales)) or np.any(scales <= 0):
            raise ValueError("proposal scales must be positive")
        meta["scale_source"] = "user"
    else:
        scales = 0.05 * start[:, :2]
        meta["scale_source"] = "5% of start"
        if vcov is not None:
            var = np.diag(vcov)
            sd = np.sqrt(np.column_stack([var[:k], var[k : 2 * k]]).clip(min=0))
            ok = np.isfinite(sd) & (sd > 0)
            scales = np.where(ok, sd, scales)
            meta["scale_source"] = "vcov" if ok.all() else "vcov with 5% fallback"
    meta["proposal_scales"] = scales.tolist()
    return start, scales, meta


def _drift(kept, batches=25):
    """Labels whose first-half and second-half means differ by > 3 MC standard errors."""
    n = kept.shape[0]
    half = n // 2
    if half < 2 * batches:
        return []
    out = []
    k = kept.shape[1] // 3
    for j in range(kept.shape[1]):
        a = kept[:half, j]
        b = kept[half : 2 * half, j]
        se2 = 0.0
        for part in (a, b):
            means = part[: (part.shape[0] // batches) * batches].reshape(batches, -1).mean(axis=1)
            se2 += means.var(ddof=1) / batches
        diff = abs(a.mean() - b.mean())
        if diff > 3 * math.sqrt(se2) and diff > 0:
            out.append(param_label(j, k))
    return out


def run_chain(
    sample: JointSample,
    prior: PriorSpec | None = None,
    Q: int = 52000,
    M: int = 2000,
    rng=None,
    init=None,
    proposal_scales=None,
    log_scale: bool = False,
) -> PosteriorChain:
    """Metropolis-Hastings within Gibbs.

    Parameters
    ----------
    sample : JointSample
    prior : PriorSpec, optional
        Defaults to shapes 0.01 and rates 2 on every parameter.
    Q, M : int
        Total sweeps and burn-in.
    rng : int, SeedSequence or Generator
    init : FitResult or list of WGParams, optional
        Starting point.  A FitResult also provides proposal standard
        deviations from its covariance diagonal.  Defaults to a fresh
        maximum likelihood fit.
    proposal_scales : array_like, shape (k, 2), optional
        Standard deviations of the alpha and theta random walks.  Where
        none are available, 5% of the starting value is used.
    log_scale : bool
        Propose multiplicatively, ``x * exp(scale * z)``, with the scales
        then read as log-scale standard deviations.
    """
    k = sample.k
    prior = prior if prior is not None else PriorSpec.uniform(k)
    if prior.k != k:
        raise ValueError("prior and sample have different line counts")
    if not Q > M >= 0:
        raise ValueError("need Q > M >= 0")
    start, scales, meta = _start_and_scales(sample, init, proposal_scales)
    if log_scale and proposal_scales is None:
        scales = scales / start[:, :2]
        meta["proposal_scales"] = scales.tolist()
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    d = sample.delta
    w = sample.weights
    Mh = d.sum(axis=1)
    logt = np.log(sample.times)
    sumlog = d @ logt
    hyper = prior.as_array()
    gam = gen.standard_gamma(Mh + hyper[:, 4], size=(Q, k))
    z = gen.standard_normal((Q, k, 2))
    lu = np.log(gen.random((Q, k, 2)))
    draws, accepted = _kernels.mcmc_sweeps(
        start, logt, d, w, Mh.astype(float), sumlog, hyper, scales, gam, z, lu, bool(log_scale)
    )
    flat = np.concatenate([draws[:, :, 0], draws[:, :, 1], draws[:, :, 2]], axis=1)
    acc = accepted / Q
    meta["log_scale"] = bool(log_scale)
    meta["start"] = start.tolist()
    if np.any(acc == 0):
        meta["warning"] = "zero acceptance for some alpha/theta update"
        warnings.warn(meta["warning"], RuntimeWarning)
    chain = PosteriorChain(draws=flat, burn_in=M, acceptance=acc, seed=rng if isinstance(rng, (int, np.integer)) else None, meta=meta)
    drift = _drift(chain.kept)
    if drift:
        chain.meta["drift"] = drift
        warnings.warn(f"chain means drift between halves for {drift}", RuntimeWarning)
    return chain


def _kept(chain):
    kept = chain.kept
    if kept.shape[0] == 0:
        raise ValueError("no draws after burn-in")
    return kept


def _to_params(vec):
    k = vec.shape[0] // 3
    return [WGParams(vec[h], vec[k + h], vec[2 * k + h]) for h in range(k)]


def _exact_constants(kept, vec):
    # a constant column must come back unchanged, whatever the rounding of the reduction
    const = np.all(kept == kept[0], axis=0)
    return np.where(const, kept[0], vec)


def estimate_sel(chain: PosteriorChain) -> list[WGParams]:
    """Posterior means (Bayes estimates under squared-error loss)."""
    kept = _kept(chain)
    return _to_params(_exact_constants(kept, kept.mean(axis=0)))


def estimate_linex(chain: PosteriorChain, c: float) -> list[WGParams]:
    """Bayes estimates under LINEX loss, ``-(1/c) log mean exp(-c x)``."""
    if c == 0:
        raise ValueError("LINEX constant must be nonzero; use estimate_sel for c = 0")
    kept = _kept(chain)
    n = kept.shape[0]
    vec = -(logsumexp(-c * kept, axis=0) - math.log(n)) / c
    return _to_params(_exact_constants(kept, vec))


def credible_interval(chain: PosteriorChain, index: int, level: float = 0.95) -> IntervalEstimate:
    """Equal-tail interval from the sorted kept draws.

    The endpoints are the draws of rank ``ceil((1-level)/2 * n)`` and
    ``ceil((1+level)/2 * n)``, ``n`` being the number of kept draws.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    col = np.sort(_kept(chain)[:, index])
    n = col.shape[0]
    q = (1 - level) / 2
    if n * q < 1:
        raise ValueError(f"{n} draws cannot resolve a tail of {q:g}")
    lo, hi = quantile_rank(q, n), quantile_rank(1 - q, n)
    return IntervalEstimate(
        float(col[lo - 1]), float(col[hi - 1]), "CRI", level, {"param": param_label(index, chain.k), "ranks": (lo, hi)}
    )


def merge_chains(chains) -> PosteriorChain:
    """Pool the kept draws of several chains into one chain without burn-in."""
    chains = list(chains)
    if not chains:
        raise ValueError("nothing to merge")
    if len({c.k for c in chains}) != 1:
        raise ValueError("chains have different line counts")
    draws = np.concatenate([c.kept for c in chains], axis=0)
    weights = np.array([c.kept.shape[0] for c in chains], dtype=float)
    acc = np.tensordot(weights / weights.sum(), np.stack([c.acceptance for c in chains]), axes=1)
    return PosteriorChain(draws=draws, burn_in=0, acceptance=acc, seed=[c.seed for c in chains], meta={"merged": len(chains)})


def export_chain(chain: PosteriorChain, path, include_burn_in: bool = True) -> None:
    """Write one CSV row per sweep: sweep index, then every parameter."""
    start = 0 if include_burn_in else chain.burn_in
    draws = chain.draws[start:]
    sweeps = np.arange(start + 1, start + 1 + draws.shape[0])
    header = ",".join(["sweep"] + [param_label(j, chain.k) for j in range(draws.shape[1])])
    np.savetxt(path, np.column_stack([sweeps, draws]), delimiter=",", header=header, comments="", fmt="%.10g")

