"""Joint progressive Type-II censoring of k production lines.

Units from every line go on test together.  At the i-th observed failure
``s_i(h)`` surviving units of line ``h`` are withdrawn at random, so that
``R_i = sum_h s_i(h)`` units leave the pooled test.  The test stops at the
r-th failure, when every remaining unit is withdrawn.

A plan either fixes the per-line allocation ``s`` (``allocation="fixed"``)
or only the totals ``R`` (``allocation="pooled"``), in which case the
``R_i`` units are drawn uniformly from the pooled survivors.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dist import WGParams, sample

__all__ = [
    "CensoringPlan",
    "JointSample",
    "PlanError",
    "InfeasibleWithdrawal",
    "InconsistentSampleWarning",
    "validate_plan",
    "check_plan",
    "is_joint_type2",
    "censor_complete",
    "generate_joint_sample",
    "parse_scheme",
    "format_scheme",
    "complete_plan",
]


class PlanError(ValueError):
    """A censoring plan violates one of its counting identities."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InfeasibleWithdrawal(RuntimeError):
    """Line ``line`` had fewer survivors than ``s_i(h)`` at failure ``step`` (both 1-based)."""

    def __init__(self, step, line, wanted, available=None):
        self.step = step
        self.line = line
        self.wanted = wanted
        self.available = available
        msg = f"infeasible withdrawal at step {step}: line {line} needs {wanted} survivors"
        if available is not None:
            msg += f", has {available}"
        super().__init__(msg)


class InconsistentSampleWarning(UserWarning):
    """Observed failures plus withdrawals exceed a line's sample size."""


@dataclass(frozen=True, eq=False)
class CensoringPlan:
    """Sample sizes, number of failures and withdrawal scheme.

    Parameters
    ----------
    n : sequence of int
        Units put on test from each line.
    r : int
        Number of observed failures.
    s : array_like of shape (r, k), optional
        Units withdrawn from line ``h`` at failure ``i``.
    R : sequence of int, optional
        Total withdrawals per failure; used alone for a pooled plan.
    """

    n: tuple
    r: int
    s: tuple | None = None
    R: tuple = field(default=())

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "r", int(self.r))
        if self.s is not None:
            s = np.asarray(self.s, dtype=np.int64)
            if s.ndim == 1 and len(n) == 1:
                s = s[:, None]
            object.__setattr__(self, "s", tuple(tuple(int(v) for v in row) for row in s))
            R = tuple(int(v) for v in s.sum(axis=1)) if s.ndim == 2 else ()
            if self.R and tuple(int(v) for v in self.R) != R:
                raise PlanError(["R does not equal the row sums of s"])
            object.__setattr__(self, "R", R)
        elif self.R is None or len(self.R) == 0:
            raise PlanError(["a plan needs either s or R"])
        else:
            object.__setattr__(self, "R", tuple(int(v) for v in self.R))

    @property
    def k(self) -> int:
        return len(self.n)

    @property
    def N(self) -> int:
        return sum(self.n)

    @property
    def allocation(self) -> str:
        return "pooled" if self.s is None else "fixed"

    @property
    def s_matrix(self) -> np.ndarray:
        if self.s is None:
            raise ValueError("pooled plan has no per-line allocation")
        return np.array(self.s, dtype=np.int64).reshape(len(self.s), self.k)

    @property
    def R_array(self) -> np.ndarray:
        return np.array(self.R, dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, CensoringPlan):
            return NotImplemented
        return (self.n, self.r, self.s, self.R) == (other.n, other.r, other.s, other.R)

    def __hash__(self):
        return hash((self.n, self.r, self.s, self.R))

    def __repr__(self):
        return f"CensoringPlan({format_scheme(self)!r})"

    @classmethod
    def pooled(cls, n, r, R):
        return cls(n=n, r=r, s=None, R=tuple(R))


def complete_plan(n) -> CensoringPlan:
    """No censoring: every unit of every line is observed to fail."""
    n = tuple(int(v) for v in np.atleast_1d(n))
    N = sum(n)
    return CensoringPlan(n=n, r=N, s=np.zeros((N, len(n)), dtype=np.int64))


def validate_plan(plan: CensoringPlan) -> list[str]:
    """Return the list of violated plan identities; empty means the plan is usable."""
    out = []
    if plan.k < 1:
        out.append("line count: need at least one line")
    if any(v < 1 for v in plan.n):
        out.append("sample sizes: every n_h must be >= 1")
    N, r = plan.N, plan.r
    if not 1 <= r <= N:
        out.append(f"failure count: need 1 <= r <= N, got r={r}, N={N}")
    R = plan.R_array
    if R.shape[0] != r:
        out.append(f"arity: scheme has {R.shape[0]} steps but r={r}")
        return out
    if np.any(R < 0):
        i = int(np.nonzero(R < 0)[0][0]) + 1
        out.append(f"non-negativity: R_{i} < 0")
    if plan.s is not None:
        s = plan.s_matrix
        if np.any(s < 0):
            i, h = (int(v) + 1 for v in np.argwhere(s < 0)[0])
            out.append(f"non-negativity: s_{i}({h}) < 0")
    if R.sum() != N - r:
        out.append(f"terminal-count identity: sum(R)={int(R.sum())} but N - r = {N - r}")
    prefix = np.cumsum(R) + np.arange(1, r + 1)
    bad = np.nonzero(prefix > N)[0]
    if bad.size:
        out.append(f"prefix feasibility: failures plus withdrawals exceed N at step {int(bad[0]) + 1}")
    if plan.s is not None:
        cum = np.cumsum(plan.s_matrix, axis=0)
        for h in range(plan.k):
            bad = np.nonzero(cum[:, h] > plan.n[h])[0]
            if bad.size:
                out.append(
                    f"line feasibility: withdrawals from line {h + 1} exceed n_{h + 1}={plan.n[h]} "
                    f"by step {int(bad[0]) + 1}"
                )
    return out


def check_plan(plan: CensoringPlan) -> CensoringPlan:
    violations = validate_plan(plan)
    if violations:
        raise PlanError(violations)
    return plan


def is_joint_type2(plan: CensoringPlan) -> bool:
    """True when nothing is withdrawn before the last failure."""
    return bool(np.all(plan.R_array[:-1] == 0))


@dataclass(frozen=True, eq=False)
class JointSample:
    """Ordered failure times with their source lines.

    ``line_of`` holds 1-based line labels.  ``withdrawn`` is the realized
    (r, k) withdrawal matrix that enters the likelihood; it defaults to the
    plan's fixed allocation.
    """

    times: np.ndarray
    line_of: np.ndarray
    plan: CensoringPlan
    withdrawn: np.ndarray | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).copy()
        line_of = np.asarray(self.line_of, dtype=np.int64).copy()
        plan = self.plan
        if times.ndim != 1 or times.shape != line_of.shape:
            raise ValueError("times and line_of must be 1-d and of equal length")
        if times.shape[0] != plan.r:
            raise ValueError(f"sample has {times.shape[0]} failures but plan has r={plan.r}")
        if np.any(~np.isfinite(times)) or np.any(times <= 0):
            raise ValueError("failure times must be finite and > 0")
        if np.any(np.diff(times) < 0):
            raise ValueError("failure times must be nondecreasing")
        if np.any(line_of < 1) or np.any(line_of > plan.k):
            raise ValueError(f"line labels must lie in 1..{plan.k}")
        if self.withdrawn is None:
            withdrawn = plan.s_matrix
        else:
            withdrawn = np.asarray(self.withdrawn, dtype=np.int64).reshape(plan.r, plan.k)
        if np.any(withdrawn < 0):
            raise ValueError("withdrawals must be >= 0")
        times.setflags(write=False)
        line_of.setflags(write=False)
        withdrawn = withdrawn.copy()
        withdrawn.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "line_of", line_of)
        object.__setattr__(self, "withdrawn", withdrawn)
        used = self.M + withdrawn.sum(axis=0)
        over = [h + 1 for h in range(plan.k) if used[h] > plan.n[h]]
        if over:
            warnings.warn(
                f"failures plus withdrawals exceed the sample size of line(s) {over}",
                InconsistentSampleWarning,
                stacklevel=3,
            )

    @property
    def r(self) -> int:
        return self.times.shape[0]

    @property
    def k(self) -> int:
        return self.plan.k

    @property
    def delta(self) -> np.ndarray:
        """(k, r) failure indicators."""
        return (self.line_of[None, :] == np.arange(1, self.k + 1)[:, None]).astype(float)

    @property
    def weights(self) -> np.ndarray:
        """(k, r) ``delta + withdrawn``: units leaving line h at each failure."""
        return self.delta + self.withdrawn.T

    @property
    def M(self) -> np.ndarray:
        """Failures per line."""
        return np.bincount(self.line_of - 1, minlength=self.k)

    def line_times(self, h: int) -> np.ndarray:
        """Failure times of 1-based line ``h``."""
        return self.times[self.line_of == h]

    def __eq__(self, other):
        if not isinstance(other, JointSample):
            return NotImplemented
        return (
            self.plan == other.plan
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.line_of, other.line_of)
            and np.array_equal(self.withdrawn, other.withdrawn)
        )


def censor_complete(lifetimes, plan: CensoringPlan, rng) -> JointSample:
    """Apply ``plan`` to complete per-line lifetimes.

    ``lifetimes`` is a list of k arrays.  Withdrawn units are chosen with
    uniform keys from ``rng.random(N)``.  Ties in time are broken by line
    index, then by position within the line.
    """
    if len(lifetimes) != plan.k:
        raise ValueError(f"expected {plan.k} lifetime arrays, got {len(lifetimes)}")
    for h, x in enumerate(lifetimes):
        if len(x) != plan.n[h]:
            raise ValueError(f"line {h + 1} has {len(x)} lifetimes but n_{h + 1}={plan.n[h]}")
    times = np.concatenate([np.asarray(x, dtype=float) for x in lifetimes])
    lines = np.concatenate([np.full(len(x), h, dtype=np.int64) for h, x in enumerate(lifetimes)])
    within = np.concatenate([np.arange(len(x)) for x in lifetimes])
    keys = np.asarray(rng.random(times.shape[0]), dtype=float)
    fail_order = np.lexsort((within, lines, times)).astype(np.int64)
    key_order = np.argsort(keys, kind="stable").astype(np.int64)
    pooled = plan.allocation == "pooled"
    s = np.zeros((plan.r, plan.k), dtype=np.int64) if pooled else plan.s_matrix
    out_t, out_l, withdrawn, status = _kernels.joint_walk(
        times, lines, fail_order, key_order, s, plan.R_array, plan.k, pooled
    )
    if status >= 0:
        step, h = divmod(int(status), plan.k)
        raise InfeasibleWithdrawal(step + 1, h + 1, int(s[step, h]))
    return JointSample(times=out_t, line_of=out_l + 1, plan=plan, withdrawn=withdrawn)


def generate_joint_sample(params, plan: CensoringPlan, rng) -> JointSample:
    """Simulate one joint progressively censored sample.

    Lifetimes are drawn line by line (``n_h`` uniforms each), followed by
    ``N`` withdrawal keys, so the result is a deterministic function of the
    generator state.
    """
    if len(params) != plan.k:
        raise ValueError(f"expected {plan.k} parameter sets, got {len(params)}")
    lifetimes = [sample(p, n_h, rng) for p, n_h in zip(params, plan.n)]
    return censor_complete(lifetimes, plan, rng)


# ---------------------------------------------------------------------------
# text form
# ---------------------------------------------------------------------------

_S_KEY = re.compile(r"^s\(?(\d+)\)?$")


def _int_list(text, what):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "*" in tok:
            value, count = tok.split("*", 1)
            try:
                out.extend([int(value)] * int(count))
            except ValueError:
                raise ValueError(f"{what}: bad repeat token {tok!r}") from None
            continue
        try:
            out.append(int(tok))
        except ValueError:
            raise ValueError(f"{what}: {tok!r} is not an integer") from None
    return out


def parse_scheme(text: str, validate: bool = True) -> CensoringPlan:
    """Parse ``n=20,10; r=20; s1=2,0,...; s2=0,2,...``.

    Fields are separated by ``;``.  Accepted keys are ``n``, ``r``, ``s1`` ..
    ``sk`` (also written ``s(1)``), and ``R`` for a pooled plan.  The first
    two fields may be given without keys as ``n`` and ``r``.  A token
    ``v*m`` repeats ``v`` m times, so ``R=0*9,20`` is nine zeros then 20.
    """
    fields = [f.strip() for f in text.replace("\n", ";").split(";") if f.strip()]
    n = r = R = None
    rows = {}
    for pos, f in enumerate(fields):
        if "=" in f:
            key, value = (x.strip() for x in f.split("=", 1))
        elif pos == 0:
            key, value = "n", f
        elif pos == 1:
            key, value = "r", f
        else:
            raise ValueError(f"scheme field {f!r} has no key")
        if key == "n":
            n = _int_list(value, "n")
        elif key == "r":
            try:
                r = int(value)
            except ValueError:
                raise ValueError(f"r: {value!r} is not an integer") from None
        elif key == "R":
            R = _int_list(value, "R")
        elif _S_KEY.match(key):
            rows[int(_S_KEY.match(key).group(1))] = _int_list(value, key)
        else:
            raise ValueError(f"unknown scheme key {key!r}")
    if n is None or r is None:
        raise ValueError("scheme needs both n and r")
    k = len(n)
    if rows:
        if sorted(rows) != list(range(1, k + 1)):
            raise ValueError(f"scheme needs rows s1..s{k}, got {sorted(rows)}")
        for h, row in rows.items():
            if len(row) != r:
                raise ValueError(f"arity: s{h} has {len(row)} entries but r={r}")
        s = np.array([rows[h] for h in range(1, k + 1)], dtype=np.int64).T
        plan = CensoringPlan(n=tuple(n), r=r, s=s, R=tuple(R) if R else ())
    elif R is not None:
        if len(R) != r:
            raise ValueError(f"arity: R has {len(R)} entries but r={r}")
        plan = CensoringPlan.pooled(tuple(n), r, R)
    else:
        raise ValueError("scheme needs s rows or R")
    if validate:
        check_plan(plan)
    return plan


def format_scheme(plan: CensoringPlan) -> str:
    """Canonical text form accepted by :func:`parse_scheme`."""
    parts = ["n=" + ",".join(map(str, plan.n)), f"r={plan.r}"]
    if plan.s is None:
        parts.append("R=" + ",".join(map(str, plan.R)))
    else:
        s = plan.s_matrix
        for h in range(plan.k):
            parts.append(f"s{h + 1}=" + ",".join(map(str, s[:, h])))
    return "; ".join(parts)
