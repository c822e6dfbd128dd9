"""Command-line front end: analyze, involutivity, tensors, verify.

Exit codes::

    0  conformally flat leaves at every evaluated point (verify: all checks pass)
    1  not conformally flat (verify: a deviation exceeds the limit)
    2  indeterminate (some residual within 10x of the tolerance)
    3  bad configuration or command line
    4  degenerate everywhere (no sample point could be evaluated)
    5  the distribution is not integrable
"""

from __future__ import annotations

import argparse
import sys
import time

from . import analysis as an
from .biconformal import evaluate_point, project_all
from .config import bundled_configs, parse_config
from .errors import (
    CfoliationError,
    ConfigError,
    DegenerateDistributionError,
    DomainError,
    InvolutivityError,
    SingularMetricError,
)
from .oracle import compare_B, compare_L, compare_T
from .report import analysis_report, dumps, header

EXIT_FLAT = 0
EXIT_NOT_FLAT = 1
EXIT_INDETERMINATE = 2
EXIT_BAD_CONFIG = 3
EXIT_DEGENERATE = 4
EXIT_NOT_INTEGRABLE = 5

VERDICT_EXIT = {
    an.CONFORMALLY_FLAT: EXIT_FLAT,
    an.NOT_CONFORMALLY_FLAT: EXIT_NOT_FLAT,
    an.NEAR_TOLERANCE: EXIT_INDETERMINATE,
    an.INDETERMINATE: EXIT_DEGENERATE,
}


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the bad-configuration code, not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", required=True,
                   help="config file path or bundled name (%s)" % ", ".join(bundled_configs()))
    p.add_argument("--tol-abs", type=float, default=None, help="absolute tolerance")
    p.add_argument("--tol-rel", type=float, default=None, help="relative tolerance")
    p.add_argument("--jobs", type=int, default=1, help="worker processes over sample points")
    p.add_argument("--report", default=None, help="write the JSON report here ('-' = stdout)")
    p.add_argument("--seed", type=int, default=None, help="override the box-sampling seed")
    p.add_argument("-q", "--quiet", action="store_true", help="suppress the summary")


def build_parser():
    parser = _Parser(prog="cfoliation", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _common(sub.add_parser("analyze", help="run the conformal-flatness test"))
    _common(sub.add_parser("involutivity", help="Frobenius and non-degeneracy checks only"))
    t = sub.add_parser("tensors", help="dump intermediate tensors at the sample points")
    _common(t)
    _variants(t)
    v = sub.add_parser("verify", help="compare against the intrinsic leaf geometry (slices)")
    _common(v)
    _variants(v)
    v.add_argument("--slice", default=None, help="slice coordinate (name or index)")
    v.add_argument("--max-deviation", type=float, default=1e-6)
    return parser


def _variants(p):
    p.add_argument("--t-denominator", choices=("leaf", "printed"), default="leaf")
    p.add_argument("--l1-variant", choices=("barred", "printed"), default="barred")


def _load(args):
    cfg = parse_config(args.config)
    tol = cfg.tolerances
    atol = tol.atol if args.tol_abs is None else args.tol_abs
    rtol = tol.rtol if args.tol_rel is None else args.tol_rel
    if atol < 0 or rtol < 0:
        raise ConfigError("tolerances must be non-negative", "--tol-abs/--tol-rel")
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1", "--jobs")
    plan = cfg.plan if args.seed is None else cfg.plan.with_seed(args.seed)
    return cfg, an.Tolerances(atol, rtol), plan


def _emit(report, args, cfg):
    path = args.report or cfg.report_path
    if not path:
        return
    text = dumps(report)
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _say(args, *lines):
    if not args.quiet:
        for line in lines:
            print(line)


def _fmt(x):
    return "-" if x is None else f"{x:.3e}"


def cmd_analyze(args):
    cfg, tol, plan = _load(args)
    t0 = time.perf_counter()
    try:
        verdict = an.analyze(cfg.chart, cfg.distribution, plan, tol, jobs=args.jobs)
    except InvolutivityError as exc:
        rep = header("analyze", cfg)
        rep["verdict"] = {"aggregate": "not-integrable", "explanation": str(exc),
                          "exit_code": EXIT_NOT_INTEGRABLE}
        rep["diagnostics"] = {"involutivity": {"ok": False, "point": exc.point,
                                               "witness": exc.witness}}
        rep["timing"] = {"seconds": time.perf_counter() - t0}
        _emit(rep, args, cfg)
        _say(args, f"involutivity failure: {exc}")
        return EXIT_NOT_INTEGRABLE
    code = VERDICT_EXIT[verdict.aggregate]
    _emit(analysis_report(cfg, verdict, tol, code, time.perf_counter() - t0), args, cfg)
    coords = cfg.chart.coords
    lines = []
    for r in verdict.records:
        pt = ", ".join(f"{x:.6g}" for x in r.point)
        if r.status == "skipped":
            lines.append(f"  [{r.index}] ({pt}) skipped: {r.skipped_reason}")
            continue
        comp = "" if r.status == "pass" or r.component is None else \
            " worst " + "".join(coords[i] + " " for i in r.component).strip()
        lines.append(f"  [{r.index}] ({pt}) {r.case} {r.status} residual {_fmt(r.residual)}"
                     f" scale {_fmt(r.scale)}{comp}")
    _say(args, f"{cfg.name}: {verdict.aggregate} (flat leaves: {verdict.flatness})", *lines,
         verdict.explanation)
    return code


def cmd_involutivity(args):
    cfg, tol, plan = _load(args)
    points = plan.sample(cfg.chart.n)
    t0 = time.perf_counter()
    inv = an.check_involutive(cfg.distribution, cfg.chart, points)
    nd = []
    for i, p in enumerate(points):
        try:
            c = an.check_nondegenerate(cfg.distribution, cfg.chart, p)
            nd.append({"index": i, "point": list(p), "ok": c.ok, "value": c.value,
                       "reason": c.reason or None})
        except DomainError as exc:
            nd.append({"index": i, "point": list(p), "ok": False, "value": None,
                       "reason": str(exc)})
    rep = header("involutivity", cfg)
    rep["involutivity"] = {"ok": inv.ok, "max_residual": inv.max_residual,
                           "points_checked": inv.checked, "point": inv.point,
                           "witness": inv.witness}
    rep["nondegeneracy"] = nd
    code = EXIT_FLAT if inv.ok else EXIT_NOT_INTEGRABLE
    if inv.ok and not any(r["ok"] for r in nd):
        code = EXIT_DEGENERATE
    rep["exit_code"] = code
    rep["timing"] = {"seconds": time.perf_counter() - t0}
    _emit(rep, args, cfg)
    _say(args, f"{cfg.name}: integrable={inv.ok} (max residual {_fmt(inv.max_residual)}, "
               f"{inv.checked} points); non-degenerate at "
               f"{sum(r['ok'] for r in nd)}/{len(nd)} points")
    return code


def _tensor_dict(t):
    if t is None:
        return None
    return {"variance": "".join(t.variance), "components": t.value.tolist()}


def cmd_tensors(args):
    cfg, tol, plan = _load(args)
    t0 = time.perf_counter()
    out = []
    for i, p in enumerate(plan.sample(cfg.chart.n)):
        entry = {"index": i, "point": list(p)}
        try:
            res = evaluate_point(cfg.chart, p, cfg.distribution.projectors,
                                 t_denominator=args.t_denominator, l1_variant=args.l1_variant)
        except (DomainError, SingularMetricError, DegenerateDistributionError) as exc:
            entry["skipped_reason"] = str(exc)
            out.append(entry)
            continue
        o = res.obstructions
        pp = res.projectors
        named = {
            "g": res.g, "g_inv": res.g_inv, "christoffel": res.lc.coeffs,
            "P_ud": pp.P_ud, "Pi_ud": pp.Pi_ud, "P_dd": pp.P_dd, "Pi_dd": pp.Pi_dd,
            "M": res.deformation.M, "E": res.deformation.E, "W": res.deformation.W,
            "L": res.deformation.L, "bar_christoffel": res.bar.coeffs,
            "riemann": res.riemann, "bar_riemann": res.barR, "L_Pi": o.L_Pi,
            "T_parallel": o.T_parallel, "B_parallel": o.B_parallel,
            "barR_parallel": o.barR_parallel,
        }
        entry["p"] = pp.p
        entry["R_Pi"] = o.R_Pi
        entry["scales"] = dict(o.scales)
        entry["tensors"] = {k: _tensor_dict(v) for k, v in named.items()}
        if o.L_Pi is not None:
            entry["tensors"]["L_Pi_parallel"] = _tensor_dict(
                project_all(o.L_Pi.truncate(0), pp.Pi_ud))
        out.append(entry)
    rep = header("tensors", cfg)
    rep["options"] = {"t_denominator": args.t_denominator, "l1_variant": args.l1_variant}
    rep["slot_layout"] = ("christoffel [a, b, c] = G^a_bc; riemann [b, a, d, c] = R_bad^c; "
                          "M [a, b, c]; T_parallel [b, a, c, d]; B_parallel [r, s, q]")
    rep["points"] = out
    rep["timing"] = {"seconds": time.perf_counter() - t0}
    if not (args.report or cfg.report_path):
        args.report = "-"
        args.quiet = True
    _emit(rep, args, cfg)
    _say(args, f"{cfg.name}: dumped tensors at {len(out)} points")
    return EXIT_FLAT


def _slice_index(args, cfg):
    coords = cfg.chart.coords
    if args.slice is not None:
        if args.slice in coords:
            return coords.index(args.slice)
        if args.slice.isdigit() and int(args.slice) < len(coords):
            return int(args.slice)
        raise ConfigError(f"unknown slice coordinate {args.slice!r}", "--slice")
    if cfg.slice_index is not None:
        return cfg.slice_index
    dist = cfg.distribution
    if dist.kind == "oneform":
        nonzero = [i for i, a in enumerate(dist.omega) if not (a.kind == "const" and a.value == 0)]
        if len(nonzero) == 1 and dist.omega[nonzero[0]].kind == "const":
            return nonzero[0]
    raise ConfigError("verify needs a coordinate-slice foliation; pass --slice", "--slice")


def cmd_verify(args):
    cfg, tol, plan = _load(args)
    k = _slice_index(args, cfg)
    points = plan.sample(cfg.chart.n)
    leaf = cfg.chart.n - 1
    opts = {"t_denominator": args.t_denominator, "l1_variant": args.l1_variant}
    t0 = time.perf_counter()
    checks = {}
    try:
        if leaf >= 2:
            checks["L_Pi"] = compare_L(cfg.chart, k, points, **opts)
        if leaf >= 4:
            checks["T"] = compare_T(cfg.chart, k, points, **opts)
        if leaf == 3:
            checks["B"] = compare_B(cfg.chart, k, points, **opts)
    except (DomainError, SingularMetricError, DegenerateDistributionError) as exc:
        _say(args, f"verify: cannot evaluate: {exc}")
        return EXIT_DEGENERATE
    ok = all(c.deviation <= args.max_deviation for c in checks.values())
    code = EXIT_FLAT if ok else EXIT_NOT_FLAT
    rep = header("verify", cfg)
    rep["slice"] = {"index": k, "coordinate": cfg.chart.coords[k]}
    rep["options"] = dict(opts, max_deviation=args.max_deviation)
    rep["checks"] = {
        name: {"deviation": c.deviation, "worst_point": c.worst_point,
               "worst_index": c.worst_index, "pass": c.deviation <= args.max_deviation}
        for name, c in checks.items()
    }
    rep["exit_code"] = code
    rep["timing"] = {"seconds": time.perf_counter() - t0}
    _emit(rep, args, cfg)
    _say(args, f"{cfg.name}: slice {cfg.chart.coords[k]}", *(
        f"  {name}: deviation {c.deviation:.3e} {'ok' if c.deviation <= args.max_deviation else 'FAIL'}"
        for name, c in checks.items()))
    return code


COMMANDS = {
    "analyze": cmd_analyze,
    "involutivity": cmd_involutivity,
    "tensors": cmd_tensors,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except (CfoliationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())

