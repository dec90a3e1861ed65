"""Command-line front end.

Every run starts from one integer seed (default ``DEFAULT_SEED``), which is
split into independent streams for censoring, bootstrap, MCMC and
simulation.  Reports echo the full configuration, including an ``argv``
list that reproduces the run.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
import warnings
from pathlib import Path

import numpy as np

from . import bayes, bootstrap, datasets, forecast, gof, mle, reliability
from .censoring import JointSample, censor_complete, format_scheme, generate_joint_sample, parse_scheme
from .dist import WGParams, survival
from .intervals import param_label
from .report import render, versions

DEFAULT_SEED = 20240601
DEFAULT_LINEX = (1e-4, -2.0, 2.0)
CI_METHODS = ("aci", "boot-p", "boot-t", "boot-bc", "boot-bca", "cri")
MAX_LINES = 9

# stream indices of the root SeedSequence
_CENSOR, _BOOT, _MCMC, _SIM = range(4)


class UsageError(ValueError):
    """Inconsistent or missing command-line inputs."""


# ---------------------------------------------------------------------------
# input parsing
# ---------------------------------------------------------------------------


def _data_rows(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    for row, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        if body.strip():
            yield row, line, body


def _tokens(line, body):
    col = 0
    for tok in body.replace(",", " ").split():
        col = line.index(tok, col) + 1
        yield col, tok
        col += len(tok) - 1


def parse_dataset(path) -> list[float]:
    """Positive decimals separated by whitespace or commas; ``#`` starts a comment."""
    out = []
    for row, line, body in _data_rows(path):
        for col, tok in _tokens(line, body):
            try:
                value = float(tok)
            except ValueError:
                raise UsageError(f"{path}: row {row}, column {col}: {tok!r} is not a number") from None
            if not np.isfinite(value) or value <= 0:
                raise UsageError(f"{path}: row {row}, column {col}: {tok!r} is not a positive value")
            out.append(value)
    if not out:
        raise UsageError(f"{path}: no observations")
    return out


def parse_joint_file(path, plan) -> JointSample:
    """Rows ``time line [w_1 ... w_k]``; the optional counts are the realized withdrawals."""
    times, lines, withdrawn = [], [], []
    for row, line, body in _data_rows(path):
        toks = body.replace(",", " ").split()
        if len(toks) not in (2, 2 + plan.k):
            raise UsageError(f"{path}: row {row}: expected 2 or {2 + plan.k} fields, got {len(toks)}")
        try:
            times.append(float(toks[0]))
            lines.append(int(toks[1]))
            withdrawn.append([int(v) for v in toks[2:]])
        except ValueError:
            raise UsageError(f"{path}: row {row}: malformed entry {body.strip()!r}") from None
    if not times:
        raise UsageError(f"{path}: no observations")
    w = None
    if all(withdrawn):
        w = np.array(withdrawn)
    elif any(withdrawn):
        raise UsageError(f"{path}: withdrawal columns must be given on every row or on none")
    return JointSample(times=np.array(times), line_of=np.array(lines), plan=plan, withdrawn=w)


def _read_arg(value):
    if value is not None and value.startswith("@"):
        try:
            return Path(value[1:]).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {value[1:]}: {exc.strerror}") from None
    return value


def parse_params(text) -> list[WGParams]:
    """``"a,t,b;a,t,b"`` with one triple per line."""
    out = []
    for part in text.split(";"):
        if not part.strip():
            continue
        vals = [v for v in part.replace(" ", ",").split(",") if v]
        if len(vals) != 3:
            raise UsageError(f"parameter triple {part!r} needs alpha,theta,beta")
        try:
            out.append(WGParams(*(float(v) for v in vals)))
        except ValueError as exc:
            raise UsageError(f"parameter triple {part!r}: {exc}") from None
    if not out:
        raise UsageError("no parameter triples given")
    return out


def _floats(text, what):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="root seed (default %(default)s)")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--out", help="write the report here instead of stdout")


def _add_sample(p):
    p.add_argument("--scheme", help="censoring scheme text, or @FILE")
    p.add_argument("--sample", help="joint sample file: rows 'time line [w_1 .. w_k]'")
    for h in range(1, MAX_LINES + 1):
        p.add_argument(f"--data{h}", help=argparse.SUPPRESS if h > 2 else f"complete data of line {h}")
    p.add_argument("--example", choices=("simulated", "jute"), help="use a bundled example sample")
    p.add_argument("--estimates", help="use these estimates 'a,t,b;a,t,b' instead of fitting")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jointwg", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a joint progressively censored sample")
    _add_common(p)
    p.add_argument("--params", required=True, help="'a,t,b;a,t,b', one triple per line")
    p.add_argument("--scheme", required=True)
    p.add_argument("--sample-out", help="also write the sample as a joint sample file")

    p = sub.add_parser("fit", help="maximum likelihood estimates")
    _add_common(p)
    _add_sample(p)
    p.add_argument("--include-constant", action="store_true", help="add the combinatorial constant to log L")

    p = sub.add_parser("ci", help="confidence and credible intervals")
    _add_common(p)
    _add_sample(p)
    p.add_argument("--method", default=",".join(CI_METHODS), help="comma list from " + ",".join(CI_METHODS))
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--B", type=int, default=1000, help="bootstrap replicates")
    p.add_argument("--keep-boundary", action="store_true", help="keep replicate fits that stop at the boundary")
    p.add_argument("--Q", type=int, default=52000)
    p.add_argument("--M", type=int, default=2000)
    p.add_argument("--prior", help="@FILE with a JSON prior mapping")
    p.add_argument("--clamp-nonneg", action="store_true")

    p = sub.add_parser("bayes", help="posterior estimates by MCMC")
    _add_common(p)
    _add_sample(p)
    p.add_argument("--Q", type=int, default=52000)
    p.add_argument("--M", type=int, default=2000)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--linex-c", default=",".join(f"{c:g}" for c in DEFAULT_LINEX))
    p.add_argument("--prior", help="@FILE with a JSON prior mapping")
    p.add_argument("--log-scale", action="store_true", help="multiplicative random-walk proposals")
    p.add_argument("--export-chain", help="write every sweep to this CSV file")

    p = sub.add_parser("compare", help="rank lines by reliability")
    _add_common(p)
    _add_sample(p)
    p.add_argument("--mode", choices=("standardized", "raw"), default="standardized")
    p.add_argument("--t", default="0.5,1,2", help="evaluation times for the ranking")
    p.add_argument("--grid", default="0,0.5,1,1.5,2,2.5,3,3.5,4,4.5,5", help="curve grid")

    p = sub.add_parser("forecast", help="expected failures per line and P(X1 < X2)")
    _add_common(p)
    p.add_argument("--params", required=True)
    p.add_argument("--scheme", required=True)
    p.add_argument("--replications", type=int, default=1000)

    p = sub.add_parser("gof", help="Kolmogorov-Smirnov fit of complete data sets")
    _add_common(p)
    for h in range(1, MAX_LINES + 1):
        p.add_argument(f"--data{h}", help=argparse.SUPPRESS if h > 2 else f"complete data set {h}")
    p.add_argument("--params", help="test against these 'a,t,b;..' instead of fitting")
    return parser


def _argv(parser, args) -> list[str]:
    """Canonical argument list that reproduces ``args``."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    subparser = sub.choices[args.command]
    out = [args.command]
    for action in subparser._actions:
        if not action.option_strings or action.dest in ("help", "out"):
            continue
        value = getattr(args, action.dest, None)
        flag = action.option_strings[0]
        if isinstance(action, argparse._StoreTrueAction):
            if value:
                out.append(flag)
        elif value is not None:
            out.extend([flag, str(value)])
    return out


# ---------------------------------------------------------------------------
# pipeline pieces
# ---------------------------------------------------------------------------


def _resolve_scheme(args):
    text = _read_arg(getattr(args, "scheme", None))
    if text is None:
        return None
    plan = parse_scheme(text)
    args.scheme = format_scheme(plan)
    return plan


def _line_files(args):
    files = [getattr(args, f"data{h}", None) for h in range(1, MAX_LINES + 1)]
    last = max((i for i, f in enumerate(files) if f), default=-1)
    if any(f is None for f in files[: last + 1]):
        raise UsageError("data files must be given for lines 1..k without gaps")
    return files[: last + 1]


def _load_sample(args, streams) -> JointSample:
    plan = _resolve_scheme(args)
    sources = [bool(args.sample), bool(_line_files(args)), bool(args.example)]
    if sum(sources) != 1:
        raise UsageError("give exactly one of --sample, --data1.., or --example")
    if args.example:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sample = datasets.simulated_example() if args.example == "simulated" else datasets.jute_example()
        if plan is not None and plan != sample.plan:
            raise UsageError("--scheme conflicts with the example's own scheme")
        args.scheme = format_scheme(sample.plan)
        return sample
    if plan is None:
        raise UsageError("--scheme is required with --sample or --data files")
    if args.sample:
        return parse_joint_file(args.sample, plan)
    data = [parse_dataset(f) for f in _line_files(args)]
    if len(data) != plan.k:
        raise UsageError(f"scheme has {plan.k} lines but {len(data)} data files were given")
    if tuple(len(d) for d in data) != plan.n:
        raise UsageError(f"data set sizes {tuple(len(d) for d in data)} differ from the scheme's n={plan.n}")
    return censor_complete([np.array(d) for d in data], plan, np.random.default_rng(streams[_CENSOR]))


def _start_fit(args, sample, include_constant=False):
    if args.estimates:
        params = parse_params(args.estimates)
        if len(params) != sample.k:
            raise UsageError(f"--estimates has {len(params)} triples for {sample.k} lines")
        return mle.evaluate_fit(params, sample, include_constant=include_constant)
    return mle.fit_mle(sample, include_constant=include_constant)


def _sample_summary(sample):
    return {
        "scheme": format_scheme(sample.plan),
        "r": sample.r,
        "failures_per_line": sample.M.tolist(),
    }


def _fit_summary(fit):
    sd = np.sqrt(np.clip(fit.variances, 0, None))
    k = fit.k
    rows = []
    for h, p in enumerate(fit.estimates):
        rows.append(
            {
                "line": h + 1,
                "alpha": p.alpha,
                "theta": p.theta,
                "beta": p.beta,
                "sd_alpha": sd[h],
                "sd_theta": sd[k + h],
                "sd_beta": sd[2 * k + h],
            }
        )
    return {
        "source": "supplied estimates" if not fit.trace else "maximum likelihood",
        "converged": fit.converged,
        "message": fit.message,
        "loglik": fit.loglik,
        "max_abs_score": float(np.max(np.abs(fit.score))),
        "estimates": rows,
    }


def _prior(args, k):
    text = _read_arg(args.prior)
    if text is None:
        return bayes.PriorSpec.uniform(k)
    try:
        mapping = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"prior is not valid JSON: {exc}") from None
    return bayes.PriorSpec.from_mapping(mapping, k)


def _interval_row(iv):
    return {
        "param": iv.meta.get("param"),
        "method": iv.method,
        "lower": iv.lower,
        "upper": iv.upper,
        "length": iv.length,
        "clamped": bool(iv.meta.get("clamped", False)),
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_simulate(args, streams):
    params = parse_params(args.params)
    plan = _resolve_scheme(args)
    sample = generate_joint_sample(params, plan, np.random.default_rng(streams[_SIM]))
    rows = [
        {"time": float(t), "line": int(h), **{f"w_{g + 1}": int(w) for g, w in enumerate(ws)}}
        for t, h, ws in zip(sample.times, sample.line_of, sample.withdrawn)
    ]
    if args.sample_out:
        lines = ["# time line " + " ".join(f"w_{g + 1}" for g in range(plan.k)), f"# scheme: {args.scheme}"]
        lines += [f"{t:.10g} {h} " + " ".join(str(int(w)) for w in ws) for t, h, ws in zip(sample.times, sample.line_of, sample.withdrawn)]
        Path(args.sample_out).write_text("\n".join(lines) + "\n")
    return {"params": [p.as_tuple() for p in params], "sample": rows, "failures_per_line": sample.M.tolist()}


def cmd_fit(args, streams):
    sample = _load_sample(args, streams)
    fit = _start_fit(args, sample, include_constant=args.include_constant)
    return {"sample": _sample_summary(sample), "fit": _fit_summary(fit)}


def cmd_ci(args, streams):
    methods = [m.strip().lower() for m in args.method.split(",") if m.strip()]
    bad = sorted(set(methods) - set(CI_METHODS))
    if bad:
        raise UsageError(f"unknown interval methods {bad}")
    sample = _load_sample(args, streams)
    fit = _start_fit(args, sample)
    n = 3 * fit.k
    rows, errors, out = [], [], {"sample": _sample_summary(sample), "fit": _fit_summary(fit)}
    clamp = args.clamp_nonneg
    if "aci" in methods:
        rows += [_interval_row(iv) for iv in mle.aci(fit, args.level, clamp=clamp)]
    boot_methods = [m for m in methods if m.startswith("boot")]
    if boot_methods:
        ens = bootstrap.resample(fit, B=args.B, rng=streams[_BOOT], require_converged=not args.keep_boundary)
        out["bootstrap"] = {
            "B": args.B,
            "used": ens.B,
            "failures": ens.failures,
            "boundary": ens.boundary,
            "reasons": dict(sorted(ens.failure_reasons.items())),
        }
        jack = bootstrap.jackknife_estimates(sample, init=fit.estimates) if "boot-bca" in methods else None
        makers = {
            "boot-p": lambda j: bootstrap.boot_p(ens, j, args.level, clamp),
            "boot-t": lambda j: bootstrap.boot_t(ens, j, args.level, clamp),
            "boot-bc": lambda j: bootstrap.boot_bc(ens, j, args.level, clamp),
            "boot-bca": lambda j: bootstrap.boot_bca(ens, sample, j, args.level, clamp, jackknife=jack),
        }
        for m in boot_methods:
            for j in range(n):
                try:
                    rows.append(_interval_row(makers[m](j)))
                except ValueError as exc:
                    errors.append({"param": param_label(j, fit.k), "method": m, "error": str(exc)})
    if "cri" in methods:
        chain = bayes.run_chain(sample, _prior(args, sample.k), args.Q, args.M, rng=streams[_MCMC], init=fit)
        rows += [_interval_row(bayes.credible_interval(chain, j, args.level)) for j in range(n)]
        out["chain"] = {"Q": args.Q, "M": args.M, "acceptance": chain.acceptance.tolist()}
    out["intervals"] = rows
    out["errors"] = errors
    return out


def cmd_bayes(args, streams):
    sample = _load_sample(args, streams)
    fit = _start_fit(args, sample)
    cs = _floats(args.linex_c, "--linex-c")
    if any(c == 0 for c in cs):
        raise UsageError("LINEX constants must be nonzero")
    chain = bayes.run_chain(
        sample, _prior(args, sample.k), args.Q, args.M, rng=streams[_MCMC], init=fit, log_scale=args.log_scale
    )
    if args.export_chain:
        bayes.export_chain(chain, args.export_chain)
    sel = mle.params_to_vector(bayes.estimate_sel(chain))
    linex = {c: mle.params_to_vector(bayes.estimate_linex(chain, c)) for c in cs}
    rows = []
    for j in range(3 * sample.k):
        row = {"param": param_label(j, sample.k), "ML": fit.vector[j], "SEL": sel[j]}
        row.update({f"LINEX c={c:g}": v[j] for c, v in linex.items()})
        rows.append(row)
    return {
        "sample": _sample_summary(sample),
        "start": _fit_summary(fit),
        "estimates": rows,
        "intervals": [_interval_row(bayes.credible_interval(chain, j, args.level)) for j in range(3 * sample.k)],
        "chain": {
            "Q": args.Q,
            "M": args.M,
            "acceptance": chain.acceptance.tolist(),
            "proposal_scales": chain.meta["proposal_scales"],
            "scale_source": chain.meta["scale_source"],
            "drift": chain.meta.get("drift", []),
        },
    }


def cmd_compare(args, streams):
    sample = _load_sample(args, streams)
    fit = _start_fit(args, sample)
    ts = _floats(args.t, "--t")
    grid = _floats(args.grid, "--grid")
    rankings = []
    for t in ts:
        rk = reliability.rank_lines(fit.estimates, t, mode=args.mode)
        row = {"t": t, "order": list(rk.order)}
        row.update({f"R_{h + 1}": v for h, v in enumerate(rk.reliabilities)})
        rankings.append(row)
    curves = []
    for t in grid:
        row = {"t": t}
        for h, p in enumerate(fit.estimates):
            row[f"R_{h + 1}"] = (
                reliability.standardized_reliability(p.beta, t) if args.mode == "standardized" else survival(p, t)
            )
        curves.append(row)
    return {"fit": _fit_summary(fit), "mode": args.mode, "rankings": rankings, "curve": curves}


def cmd_forecast(args, streams):
    params = parse_params(args.params)
    plan = _resolve_scheme(args)
    if len(params) != plan.k:
        raise UsageError(f"--params has {len(params)} triples for {plan.k} lines")
    approx = forecast.expected_failures_approx(params, plan)
    exact = forecast.mean_exact_failures(params, plan, args.replications, rng=np.random.default_rng(streams[_SIM]))
    out = {
        "lines": [
            {"line": h + 1, "aeb": approx.aeb[h], "mea": exact.mea[h], "mea_se": exact.mea_se[h]}
            for h in range(plan.k)
        ],
        "replications": exact.replications,
        "abort_rate": exact.abort_rate,
    }
    if plan.k == 2:
        out["p"] = forecast.prob_first_less(params[0], params[1])
    return out


def cmd_gof(args, streams):
    files = _line_files(args)
    if not files:
        raise UsageError("give at least --data1")
    fixed = parse_params(args.params) if args.params else None
    if fixed is not None and len(fixed) != len(files):
        raise UsageError("--params needs one triple per data set")
    rows = []
    for i, path in enumerate(files):
        rep = gof.gof_test(parse_dataset(path), None if fixed is None else fixed[i])
        rows.append(
            {
                "data": f"data{i + 1}",
                "n": rep.n,
                "D": rep.d,
                "p_asymptotic": rep.p_value,
                "p_exact": rep.p_exact,
                "alpha": rep.fitted.alpha,
                "theta": rep.fitted.theta,
                "beta": rep.fitted.beta,
                "fit_converged": rep.converged,
            }
        )
    return {"tests": rows, "note": gof.ESTIMATED_NOTE}


HANDLERS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "ci": cmd_ci,
    "bayes": cmd_bayes,
    "compare": cmd_compare,
    "forecast": cmd_forecast,
    "gof": cmd_gof,
}


def _failing_module(exc) -> str:
    if isinstance(exc, UsageError):
        return "cli"
    name = "cli"
    for frame, _ in traceback.walk_tb(exc.__traceback__):
        mod = frame.f_globals.get("__name__", "")
        if mod.startswith("jointwg.") and not mod.startswith("jointwg._"):
            name = mod.split(".", 1)[1]
    return name


def run(argv=None) -> tuple[dict, str, int]:
    """Parse ``argv`` and execute; returns the report document, its rendering and the exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    streams = np.random.SeedSequence(args.seed).spawn(4)
    status = 0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            result = HANDLERS[args.command](args, streams)
        except Exception as exc:  # reported with a nonzero exit status
            result = {"error": {"module": _failing_module(exc), "type": type(exc).__name__, "message": str(exc)}}
            status = 1
    if status == 0 and result.get("errors"):
        status = 1
    messages = []
    for w in caught:
        msg = f"{w.category.__name__}: {w.message}"
        if msg not in messages:
            messages.append(msg)
    doc = {
        "command": args.command,
        "status": "ok" if status == 0 else "error",
        "config": {"seed": args.seed, "argv": _argv(parser, args)},
        "versions": versions(),
        "result": result,
        "warnings": messages,
    }
    if args.out:
        doc["config"]["out"] = args.out
    return doc, render(doc, args.format), status


def main(argv=None) -> int:
    doc, text, status = run(argv)
    out = doc["config"].get("out")
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    err = doc["result"].get("error")
    if err:
        sys.stderr.write(f"jointwg: error in {err['module']}: {err['message']}\n")
    elif status:
        sys.stderr.write("jointwg: some intervals could not be computed; see the report\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
