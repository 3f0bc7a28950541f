"""Command-line interface.

Results go to stdout (or ``--out``), diagnostics to stderr.  Exit codes: 0 on
success, 1 on usage or data errors, 2 when a fit does not converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import distribution as dist
from . import properties as props
from . import reference
from .datasets import load_dataset
from .distribution import MoeggParams
from .exceptions import DataError, DomainError
from .gof import MODEL_ORDER, compare_models, curve_data, fit_model, get_model, gof_report
from .inference import PARAM_NAMES, FitConfig, confidence_intervals, fit_mle

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NONCONVERGED = 2
SIG_DIGITS = 10


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# argument helpers


def parse_params(text, dim=4):
    try:
        values = [float(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"--params must be comma-separated numbers, got {text!r}") from None
    if len(values) != dim:
        raise UsageError(f"--params needs {dim} values, got {len(values)}")
    return values


def parse_grid(text):
    """``MIN:MAX:STEP`` to an inclusive grid."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise UsageError(f"--grid must look like MIN:MAX:STEP, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--grid must look like MIN:MAX:STEP, got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and step > 0 and hi >= lo):
        raise UsageError("--grid needs MIN <= MAX and STEP > 0")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    if count > 1_000_000:
        raise UsageError("--grid has more than 10^6 points")
    return lo + step * np.arange(count)


def parse_list(text, name):
    try:
        return [float(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"{name} must be comma-separated numbers, got {text!r}") from None


# ---------------------------------------------------------------------------
# rendering


def _clean(value):
    """Round floats to 10 significant digits; non-finite becomes None."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return float(f"{v:.{SIG_DIGITS}g}") if math.isfinite(v) else None
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in value]
    return value


def render_json(doc) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def _fmt(value):
    if value is None:
        return "nan"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.{SIG_DIGITS}g}"
    return str(value)


def render_table(title, sections) -> str:
    out = [title]
    for name, headers, rows in sections:
        cells = [[_fmt(v) for v in row] for row in _clean(rows)]
        widths = [max([len(h)] + [len(r[i]) for r in cells]) for i, h in enumerate(headers)]
        out.append("")
        out.append(f"[{name}]")
        out.append("  ".join(h.rjust(w) for h, w in zip(headers, widths)))
        for r in cells:
            out.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
    return "\n".join(out) + "\n"


def render_csv(sections) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for k, (name, headers, rows) in enumerate(sections):
        if len(sections) > 1:
            if k:
                buf.write("\n")
            buf.write(f"# {name}\n")
        writer.writerow(headers)
        for row in _clean(rows):
            writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


class Output:
    """Collected results for one command."""

    def __init__(self, command, dataset=None):
        self.command = command
        self.dataset = dataset
        self.results = {}
        self.diagnostics = {}
        self.sections = []
        self.exit_code = EXIT_OK

    def document(self):
        ds = None
        if self.dataset is not None:
            ds = {"name": self.dataset.name, "n": self.dataset.n, "summary": self.dataset.summary()}
        return {"command": self.command, "dataset": ds, "results": self.results, "diagnostics": self.diagnostics}

    def render(self, fmt) -> str:
        if fmt == "json":
            return render_json(self.document())
        if fmt == "csv":
            return render_csv(self.sections)
        title = self.command if self.dataset is None else f"{self.command}: {self.dataset.name} (n = {self.dataset.n})"
        return render_table(title, self.sections)


def _warn(message):
    print(f"moegg: {message}", file=sys.stderr)


# ---------------------------------------------------------------------------
# commands


def _fit_config(args):
    return FitConfig(seed=args.seed) if args.seed is not None else FitConfig()


def _reference_rows(model, dataset, values):
    """Side-by-side comparison with the published glass-fibre figures."""
    if dataset.name != "glass-fibres" or model not in reference.GLASS_STATS:
        return None
    ref = reference.GLASS_STATS[model]
    return {key: {"computed": values[key], "reference": ref[key], "difference": values[key] - ref[key]}
            for key in ref if key in values}


def cmd_fit(args, out: Output):
    d = load_dataset(args.data, args.column)
    out.dataset = d
    m = get_model(args.model)
    cfg = _fit_config(args)
    if m.name == "MOEGG":
        fr = fit_mle(d, cfg)
        params, se, cov, nll = fr.params.as_array(), fr.std_errors, fr.covariance, fr.neg_loglik
        converged, status = fr.converged, fr.stop_reason
        extra = {"iterations": fr.iterations, "score_norm": fr.score_norm_at_solution,
                 "start_index": fr.start_index, "information_positive_definite": fr.information_positive_definite}
        cis = confidence_intervals(fr, args.level)
        ci_rows = [[c.name, c.estimate, c.lower, c.upper, c.violates_positivity] for c in cis]
        for c in cis:
            if c.violates_positivity:
                _warn(f"{c.name}: Wald interval lower bound {c.lower:.4g} is below zero")
    else:
        fit = fit_model(m, d, cfg)
        params, se, cov, nll = fit.params, fit.std_errors, fit.covariance, fit.neg_loglik
        converged, status = fit.converged, fit.message or "converged"
        extra = {"gradient_norm": fit.gradient_norm}
        from scipy import stats

        z = float(stats.norm.ppf(0.5 * (1 + args.level)))
        ci_rows = [[n, p, p - z * s, p + z * s, bool(p - z * s < 0)] for n, p, s in zip(m.param_names, params, se)]
    report = gof_report(m, params, d, nll, se, converged, "", args.method)
    names = m.param_names
    out.results = {
        "model": m.name,
        "params": dict(zip(names, params)),
        "std_errors": dict(zip(names, se)),
        "confidence_intervals": {r[0]: {"lower": r[2], "upper": r[3], "violates_positivity": r[4]} for r in ci_rows},
        "level": args.level,
        "neg_loglik": nll,
        "aic": report.aic, "caic": report.caic, "bic": report.bic, "aicc": report.aicc,
        "ks": report.ks, "p_value": report.p_value, "cm": report.cm, "ad": report.ad,
        "covariance": np.asarray(cov).tolist(),
        "converged": converged,
    }
    out.diagnostics = {"status": status, **extra}
    ref = _reference_rows(m.name, d, out.results)
    if ref is not None:
        out.diagnostics["reference"] = ref
    out.sections = [
        ("estimates", ["param", "estimate", "std_error", "lower", "upper", "below_zero"],
         [[r[0], r[1], s, r[2], r[3], r[4]] for r, s in zip(ci_rows, se)]),
        ("fit", ["model", "neg_loglik", "aic", "caic", "bic", "ks", "p_value", "cm", "ad", "converged"],
         [[m.name, nll, report.aic, report.caic, report.bic, report.ks, report.p_value, report.cm, report.ad, converged]]),
        ("covariance", ["param"] + list(names), [[n] + list(row) for n, row in zip(names, np.asarray(cov))]),
    ]
    if not converged:
        _warn(f"{m.name} fit did not converge ({status})")
        out.exit_code = EXIT_NONCONVERGED


def cmd_compare(args, out: Output):
    d = load_dataset(args.data, args.column)
    out.dataset = d
    models = MODEL_ORDER if args.models is None else [get_model(s.strip()).name for s in args.models.split(",") if s.strip()]
    reports = compare_models(d, models, _fit_config(args), args.method)
    out.results = {"ranking": [r.as_dict() for r in reports]}
    refs = {}
    for r in reports:
        ref = _reference_rows(r.model, d, r.as_dict())
        if ref is not None:
            refs[r.model] = ref
        if not r.converged:
            _warn(f"{r.model}: {r.note or 'fit did not converge'}")
    if refs:
        out.diagnostics["reference"] = refs
        flagged = [m for m in reference.INCONSISTENT_P_VALUES if m in refs]
        if flagged:
            out.diagnostics["reference_p_value_inconsistent"] = flagged
    width = max(r.dim for r in reports)
    out.sections = [
        ("estimates", ["model"] + [f"p{i + 1}" for i in range(width)] + [f"se{i + 1}" for i in range(width)],
         [[r.model] + _pad(r.params, width) + _pad(r.std_errors, width) for r in reports]),
        ("criteria", ["model", "neg_loglik", "aic", "caic", "bic", "ks", "p_value"],
         [[r.model, r.neg_loglik, r.aic, r.caic, r.bic, r.ks, r.p_value] for r in reports]),
        ("edf", ["model", "cm", "ad"], [[r.model, r.cm, r.ad] for r in reports]),
    ]
    if args.curves:
        grid = parse_grid(args.grid) if args.grid else None
        cd = curve_data(reports, d, grid)
        _write_curves(args.curves, cd)
        out.diagnostics["curves"] = args.curves
    if any(not r.converged for r in reports):
        out.exit_code = EXIT_NONCONVERGED


def _pad(values, width):
    vals = [float(v) for v in values]
    return vals + [math.nan] * (width - len(vals))


def _write_curves(path, cd):
    models = list(cd.pdf)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "ecdf"] + [f"pdf_{m}" for m in models] + [f"cdf_{m}" for m in models])
        for k, x in enumerate(cd.x):
            row = [x, cd.ecdf[k]] + [cd.pdf[m][k] for m in models] + [cd.cdf[m][k] for m in models]
            writer.writerow([_fmt(v) for v in _clean(row)])
        fh.write("\n")
        writer.writerow(["plotting_position"] + [f"fitted_{m}" for m in models])
        for k, e in enumerate(cd.pp_empirical):
            writer.writerow([_fmt(v) for v in _clean([e] + [cd.pp_fitted[m][k] for m in models])])


def _moegg_params(args):
    if args.params is None:
        raise UsageError("--params alpha,beta,lam,theta is required")
    try:
        return MoeggParams(*parse_params(args.params, 4))
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _params_dict(p):
    return dict(zip(PARAM_NAMES, p.as_array()))


def cmd_eval(args, out: Output):
    p = _moegg_params(args)
    xs = parse_grid(args.grid) if args.grid else np.linspace(0.1, 3.0, 30)
    if np.any(xs < 0):
        raise UsageError("--grid values must be nonnegative")
    probs = np.asarray(parse_list(args.probs, "--probs"))
    rows = [[x, dist.pdf(p, x), dist.cdf(p, x), dist.sf(p, x), dist.hazard(p, x)] for x in xs]
    qrows = [[u, dist.quantile(p, u)] for u in probs]
    out.results = {
        "params": _params_dict(p),
        "grid": [dict(zip(("x", "pdf", "cdf", "sf", "hazard"), r)) for r in rows],
        "quantiles": [dict(zip(("u", "quantile"), r)) for r in qrows],
    }
    out.sections = [("grid", ["x", "pdf", "cdf", "sf", "hazard"], rows), ("quantiles", ["u", "quantile"], qrows)]


def cmd_moments(args, out: Output):
    p = _moegg_params(args)
    s = props.central_stats(p)
    out.results = {
        "params": _params_dict(p),
        "raw_moments": {f"E[X^{r}]": v for r, v in enumerate(s.raw_moments, start=1)},
        "mean": s.raw_moments[0],
        "variance": s.variance,
        "skewness": s.skewness,
        "kurtosis": s.kurtosis,
        "excess_kurtosis": s.excess_kurtosis,
    }
    rows = [[f"E[X^{r}]", v] for r, v in enumerate(s.raw_moments, start=1)]
    rows += [["mean", s.raw_moments[0]], ["variance", s.variance], ["skewness", s.skewness],
             ["kurtosis", s.kurtosis], ["excess_kurtosis", s.excess_kurtosis]]
    out.sections = [("moments", ["quantity", "value"], rows)]


def cmd_sample(args, out: Output):
    p = _moegg_params(args)
    if args.n is None or args.n < 1:
        raise UsageError("--n must be a positive integer")
    seed = 0 if args.seed is None else args.seed
    values = dist.sample(p, args.n, seed)
    out.results = {"params": _params_dict(p), "seed": seed, "n": args.n, "values": values.tolist()}
    out.sections = [("sample", ["x"], [[v] for v in values])]


def cmd_gof(args, out: Output):
    d = load_dataset(args.data, args.column)
    out.dataset = d
    m = get_model(args.model)
    converged, note, se = True, "", None
    if args.params is None:
        fit = fit_model(m, d, _fit_config(args))
        params, nll, se, converged, note = fit.params, fit.neg_loglik, fit.std_errors, fit.converged, fit.message
    else:
        params, nll = parse_params(args.params, m.dim), None
    r = gof_report(m, params, d, nll, se, converged, note, args.method)
    out.results = r.as_dict()
    out.results["method"] = args.method
    out.diagnostics["fitted"] = args.params is None
    out.sections = [("gof", ["model", "neg_loglik", "aic", "caic", "bic", "ks", "p_value", "cm", "ad"],
                     [[r.model, r.neg_loglik, r.aic, r.caic, r.bic, r.ks, r.p_value, r.cm, r.ad]])]
    if not converged:
        _warn(f"{m.name} fit did not converge ({note})")
        out.exit_code = EXIT_NONCONVERGED


def cmd_props(args, out: Output):
    p = _moegg_params(args)
    ts = parse_list(args.t, "--t")
    ss = parse_list(args.s, "--s")
    d1, d2 = props.mean_deviations(p)
    mrl = [[t, props.mean_residual_life(p, t)] for t in ts]
    renyi = [[s, props.renyi_entropy(p, s)] for s in ss]
    out.results = {
        "params": _params_dict(p),
        "mean_deviation_mean": d1,
        "mean_deviation_median": d2,
        "median": dist.quantile(p, 0.5),
        "mean_residual_life": [{"t": t, "value": v} for t, v in mrl],
        "renyi_entropy": [{"s": s, "value": v} for s, v in renyi],
    }
    out.sections = [
        ("deviations", ["quantity", "value"], [["delta1", d1], ["delta2", d2], ["median", out.results["median"]]]),
        ("mean_residual_life", ["t", "value"], mrl),
        ("renyi_entropy", ["s", "value"], renyi),
    ]


COMMANDS = {
    "fit": cmd_fit,
    "compare": cmd_compare,
    "eval": cmd_eval,
    "moments": cmd_moments,
    "sample": cmd_sample,
    "gof": cmd_gof,
    "props": cmd_props,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="moegg", description="MOEGG distribution toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--format", choices=("table", "json", "csv"), default="table")
        sp.add_argument("--out", help="write results to this file instead of stdout")
        sp.add_argument("--seed", type=int)

    def data(sp):
        sp.add_argument("--data", required=True, help="file path or built-in name (glass-fibers)")
        sp.add_argument("--column", help="column name or zero-based index for delimited input")

    sp = sub.add_parser("fit", help="maximum-likelihood fit with standard errors and intervals")
    data(sp)
    common(sp)
    sp.add_argument("--model", default="MOEGG")
    sp.add_argument("--level", type=float, default=0.95)
    sp.add_argument("--method", choices=("transformed", "plain"), default="transformed")

    sp = sub.add_parser("compare", help="fit and rank all models")
    data(sp)
    common(sp)
    sp.add_argument("--models", help="comma-separated subset of " + ",".join(MODEL_ORDER))
    sp.add_argument("--method", choices=("transformed", "plain"), default="transformed")
    sp.add_argument("--curves", help="write curve data CSV to this path")
    sp.add_argument("--grid", help="MIN:MAX:STEP grid for curve data")

    sp = sub.add_parser("eval", help="pdf, cdf, survival, hazard and quantiles")
    common(sp)
    sp.add_argument("--params")
    sp.add_argument("--grid", help="MIN:MAX:STEP (default 0.1 to 3.0 in 30 points)")
    sp.add_argument("--probs", default="0.1,0.25,0.5,0.75,0.9")

    sp = sub.add_parser("moments", help="raw moments, variance, skewness and kurtosis")
    common(sp)
    sp.add_argument("--params")

    sp = sub.add_parser("sample", help="seeded random draws")
    common(sp)
    sp.add_argument("--params")
    sp.add_argument("--n", type=int)

    sp = sub.add_parser("gof", help="goodness-of-fit statistics for one model")
    data(sp)
    common(sp)
    sp.add_argument("--model", default="MOEGG")
    sp.add_argument("--params", help="evaluate at these parameters instead of fitting")
    sp.add_argument("--method", choices=("transformed", "plain"), default="transformed")

    sp = sub.add_parser("props", help="mean deviations, mean residual life and Renyi entropy")
    common(sp)
    sp.add_argument("--params")
    sp.add_argument("--t", default="0.5", help="comma-separated ages for the mean residual life")
    sp.add_argument("--s", default="0.2", help="comma-separated Renyi orders")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if hasattr(args, "level") and not 0 < args.level < 1:
            raise UsageError("--level must lie in (0, 1)")
        out = Output(args.command)
        COMMANDS[args.command](args, out)
        text = out.render(args.format)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return out.exit_code
    except UsageError as exc:
        _warn(str(exc))
        return EXIT_USAGE
    except (DataError, DomainError, OSError) as exc:
        _warn(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
