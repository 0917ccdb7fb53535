"""Command-line front end: ``trisig assess|generate|mintable|preprocess``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from pathlib import Path

from . import __version__
from .estimation import tables_to_json
from .exceptions import TrisigError
from .harness import format_number, min_obs_grid, write_grid_csv
from .io import read_tensor, read_triclusters, write_tensor, write_triclusters
from .preprocessing import PiecewiseAggregateApproximation, TensorDiscretizer
from .significance import TriclusterSignificance
from .synthgen import GenSpec, generate

EXIT_OK, EXIT_INPUT, EXIT_PARTIAL = 0, 2, 3
REPORT_HEADER = [
    "id",
    "nI",
    "nJ",
    "nK",
    "log10_p_pattern",
    "p_value",
    "p_value_span",
    "q_value",
    "tier",
    "assessable",
    "error",
]
LOG10 = math.log(10)


def format_log(log_x):
    """Format ``exp(log_x)`` like :func:`format_number` without underflow."""
    if math.isnan(log_x):
        return "nan"
    if log_x == -math.inf:
        return "0"
    l10 = log_x / LOG10
    if l10 >= -4:
        return format_number(math.exp(log_x))
    exp = math.floor(l10)
    mant = round(10 ** (l10 - exp), 5)
    if mant >= 10:
        mant, exp = mant / 10, exp + 1
    return f"{mant:.5f}e{exp:+03d}"


def _fmt_float(x):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6g}"


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _gate_line(est):
    if est.span_correction != "auto":
        return f"span_correction={est.span_correction}"
    gof = est.gof_
    if gof is None:
        return "span_correction=auto gate=not_run identically_distributed=true"
    verdict = "true" if gof.identically_distributed else "false"
    return (
        f"span_correction=auto gate=run identically_distributed={verdict} "
        f"pairs={len(gof.pairs)} rejected={sum(p.rejected for p in gof.pairs)} "
        f"threshold={format_number(gof.threshold) if gof.threshold is not None else '-'}"
    )


def _records(ids, results, report):
    for tid, res, entry in zip(ids, results, report.entries):
        q = format_log(entry.log_qvalue)
        yield {
            "id": str(tid),
            "nI": res.shape[0],
            "nJ": res.shape[1],
            "nK": res.shape[2],
            "log10_p_pattern": _fmt_float(res.log10_p_pattern),
            "p_value": format_log(res.log_pvalue_raw),
            "p_value_span": format_log(res.log_pvalue_span),
            "q_value": q,
            "tier": entry.tier,
            "assessable": "true" if res.assessable else "false",
            "error": res.error or "",
        }


def cmd_assess(args):
    t = read_tensor(args.tensor, temporal=args.temporal)
    entries = read_triclusters(args.triclusters, t)
    ids = [e[0] for e in entries]
    est = TriclusterSignificance(
        var_dep=args.var_dep,
        ctx_model=args.ctx,
        span_correction=args.span_correction,
        smoothing=args.smoothing,
        alpha=args.alpha,
        fdr=args.fdr,
    )
    est.fit(t)
    results, report = est.report([e[1] for e in entries])
    rows = list(_records(ids, results, report))
    gate = _gate_line(est)
    if args.format == "json":
        doc = {"header": gate, "records": rows}
        text = json.dumps(doc, indent=1) + "\n"
    else:
        buf = io.StringIO()
        buf.write(f"# {gate}\n")
        w = csv.DictWriter(buf, REPORT_HEADER, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    _emit(text, args.out)
    if args.dump_tables:
        doc = tables_to_json(est.tables_, transitions=args.ctx == "tc")
        Path(args.dump_tables).write_text(json.dumps(doc) + "\n", encoding="utf-8")
    return EXIT_PARTIAL if any(r.failed for r in results) else EXIT_OK


GEN_FLAGS = {
    "n_obs": int,
    "n_vars": int,
    "n_ctx": int,
    "background": str,
    "mu": float,
    "sigma": float,
    "cardinality": int,
    "n_planted": int,
}


def cmd_generate(args):
    spec = {}
    if args.spec:
        spec = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    for name in list(GEN_FLAGS) + ["obs_range", "var_range", "ctx_range", "contiguous", "temporal", "seed"]:
        value = getattr(args, name)
        if value is not None:
            spec[name] = value
    gen = GenSpec.from_dict(spec)
    t, manifest = generate(gen)
    write_tensor(t, args.out_tensor)
    write_triclusters(manifest.triclusters, args.out_manifest, t, manifest.patterns)
    return EXIT_OK


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def cmd_mintable(args):
    cells = min_obs_grid(args.obs, args.vars, args.ctxs, args.L, args.J, args.K, args.alpha)
    buf = io.StringIO()
    write_grid_csv(cells, buf)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_preprocess(args):
    t = read_tensor(args.tensor, kind="real", temporal=args.temporal)
    sidecar = {"paa_segments": args.paa, "strategy": args.strategy, "n_bins": args.discretize}
    if args.paa is not None:
        t = PiecewiseAggregateApproximation(args.paa).fit_transform(t)
    if args.discretize is not None:
        disc = TensorDiscretizer(args.discretize, args.strategy).fit(t)
        t = disc.transform(t)
        sidecar["bin_edges"] = {
            t.var_labels[j]: (None if e is None else [float(x) for x in e]) for j, e in enumerate(disc.bin_edges_)
        }
    write_tensor(t, args.out)
    Path(str(args.out) + ".bins.json").write_text(json.dumps(sidecar, indent=1) + "\n", encoding="utf-8")
    return EXIT_OK


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="trisig", description="Statistical significance of triclusters.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assess", formatter_class=fmt, help="score triclusters against a tensor")
    p.add_argument("--tensor", required=True, help="tensor CSV or JSON")
    p.add_argument("--triclusters", required=True, help="tricluster JSON")
    p.add_argument("--var-dep", choices=["mi", "md"], default="mi", help="variable dependency")
    p.add_argument("--ctx", choices=["mi", "md", "tc"], default="md", help="context model")
    p.add_argument("--alpha", type=float, default=0.05, help="nominal level")
    p.add_argument("--fdr", type=float, default=0.05, help="Benjamini-Hochberg FDR")
    p.add_argument(
        "--span-correction", choices=["auto", "on", "off"], default="auto", help="C(|Y|,|J|) correction; auto runs the gate"
    )
    p.add_argument("--smoothing", type=float, default=0.0, help="additive pseudo-count")
    p.add_argument("--temporal", action="store_true", help="treat a CSV without metadata as temporal")
    p.add_argument("--out", default="-", help="report path ('-' for stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv", help="report format")
    p.add_argument("--dump-tables", default=None, help="write estimated tables as JSON")
    p.set_defaults(func=cmd_assess)

    g = sub.add_parser("generate", formatter_class=fmt, help="synthetic tensor with planted triclusters")
    g.add_argument("--spec", default=None, help="generator JSON; flags override it")
    for name, typ in GEN_FLAGS.items():
        default = getattr(GenSpec, name)
        g.add_argument("--" + name.replace("_", "-"), type=typ, default=None, help=f"spec default: {default}")
    for name in ("obs_range", "var_range", "ctx_range"):
        g.add_argument(
            "--" + name.replace("_", "-"),
            type=int,
            nargs=2,
            metavar=("LOW", "HIGH"),
            default=None,
            help=f"spec default: {getattr(GenSpec, name)}",
        )
    g.add_argument("--contiguous", action=argparse.BooleanOptionalAction, default=None, help="spec default: True")
    g.add_argument("--temporal", action=argparse.BooleanOptionalAction, default=None, help="spec default: True")
    g.add_argument("--seed", type=int, default=None, help="spec default: 0")
    g.add_argument("--out-tensor", required=True, help="tensor path (.csv or .json)")
    g.add_argument("--out-manifest", required=True, help="manifest JSON path")
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("mintable", formatter_class=fmt, help="minimum significant tricluster sizes")
    m.add_argument("--obs", type=int, default=1000, help="observations |X|")
    m.add_argument("--vars", type=int, default=50, help="variables |Y|")
    m.add_argument("--ctxs", type=int, default=50, help="contexts |Z|")
    m.add_argument("--L", type=_int_list, default=[3, 5], help="comma-separated cardinalities")
    m.add_argument("--J", type=_int_list, default=[2, 3, 4, 5], help="comma-separated |J| values")
    m.add_argument("--K", type=_int_list, default=[2, 3, 4, 5], help="comma-separated |K| values")
    m.add_argument("--alpha", type=float, default=0.01, help="significance level")
    m.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
    m.set_defaults(func=cmd_mintable)

    r = sub.add_parser("preprocess", formatter_class=fmt, help="PAA and discretization")
    r.add_argument("--tensor", required=True, help="real-valued tensor CSV or JSON")
    r.add_argument("--discretize", type=int, default=None, help="number of bins")
    r.add_argument(
        "--strategy", choices=["equal-width", "equal-frequency"], default="equal-width", help="binning strategy"
    )
    r.add_argument("--paa", type=int, default=None, help="number of PAA segments")
    r.add_argument("--temporal", action="store_true", help="treat a CSV without metadata as temporal")
    r.add_argument("--out", required=True, help="output tensor; bin edges go to <out>.bins.json")
    r.set_defaults(func=cmd_preprocess)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return args.func(args)
    except (TrisigError, OSError, ValueError, TypeError, KeyError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"trisig: error: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
