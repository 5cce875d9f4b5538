"""Command-line front end.

Exit codes: 0 success, 1 configuration or domain error, 2 solver did not
converge (best iterate still written), 3 a table or verification check failed.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from .config import ConfigError, RunConfig, merge, read_config
from .corrkernels import EXPONENTIAL, limit_kernel, ml_eval, rho_eval
from .design_core import (
    DesignDensity,
    basis_by_name,
    default_criterion,
    efficiency,
    format_float,
    read_density_csv,
    write_density_csv,
)
from .errors import AccuracyError, ConvergenceError, DomainError, SingularDesignError
from .finite_n import convergence_report
from .multiparam import MaximinProblem, OptimizerOptions, maximin_design, optimize_density
from .oneparam import solve_one_param
from .shortrange import ShortRangeContext, solve_shortrange
from .tables import TABLE_IDS, build_table

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_CHECK = 0, 1, 2, 3


class CommandError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else format_float(v) for v in row])


def _parse_floats(text, name):
    """``a,b,c`` or ``start:stop:step`` (inclusive stop)."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(round((stop - start) / step)) + 1
            return [round(start + i * step, 12) for i in range(n)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--{name}: cannot parse {text!r}") from None


# --------------------------------------------------------------------------
# argument parsing


def _common_parser():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", help="INI run configuration")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--grid-n", type=int, dest="grid_n", help="number of grid nodes (odd)")
    p.add_argument("--tol", type=float, help="solver tolerance")
    p.add_argument("--seed", type=int, help="seed for diagnostic restarts")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _model_parser():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--family", choices=("cauchy", "mittag_leffler", "svf", "exponential"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--lambda", type=float, dest="lam")
    p.add_argument("--gamma", type=float)
    p.add_argument("--T", type=float, dest="T", help="design interval half-width")
    p.add_argument("--basis", choices=("location", "through_origin", "linear"))
    p.add_argument("--criterion", choices=("D", "single", "slope"))
    p.add_argument("--max-iter", type=int, dest="max_iter")
    return p


def build_parser() -> argparse.ArgumentParser:
    common, model = _common_parser(), _model_parser()
    parser = argparse.ArgumentParser(prog="lrdesign", description="Design densities for regression with long-memory errors.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("density", parents=[common, model], help="optimal design density for a model")

    p = sub.add_parser("table", parents=[common], help="recompute a published table and diff it")
    p.add_argument("table_id", type=int, choices=TABLE_IDS)

    p = sub.add_parser("verify", parents=[common, model], help="finite-N check of the covariance limit")
    p.add_argument("--N", dest="N_list", default="200,800,3200", help="comma list of sample sizes")
    p.add_argument("--design", choices=("uniform", "optimal"), default="uniform")
    p.add_argument("--density", metavar="CSV", help="density file (overrides --design)")

    p = sub.add_parser("mlf", parents=[common], help="Mittag-Leffler function E_{nu,beta}(-t)")
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--t", required=True, help="argument(s), comma list")

    p = sub.add_parser("rho", parents=[common, model], help="correlation function values")
    p.add_argument("--t", required=True, help="argument(s), comma list")

    p = sub.add_parser("maximin", parents=[common, model], help="standardized maximin design")
    p.add_argument("--alphas", default="0.1:0.9:0.1", help="comma list or start:stop:step")

    p = sub.add_parser("efficiency", parents=[common, model], help="efficiency of a design density")
    p.add_argument("--design", required=True, metavar="CSV", help="candidate density file")
    p.add_argument("--reference", metavar="CSV", help="reference density (default: the optimum)")
    return parser


def resolve_config(args, gamma_zero_ok=False) -> RunConfig:
    file_values = read_config(args.config) if getattr(args, "config", None) else {}
    cfg = merge(RunConfig(), file_values, vars(args))
    return cfg.validate(gamma_zero_ok=gamma_zero_ok)


def _outdir(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


# --------------------------------------------------------------------------
# commands


def _context(cfg):
    model = cfg.model()
    if cfg.family == EXPONENTIAL:
        return ShortRangeContext(cfg.lam, cfg.gamma)
    return limit_kernel(model)


def _optimum(cfg, basis, context, grid, kind):
    """Optimal density, a solution record and the optimizer trace (``None`` for p = 1).

    Raises ConvergenceError.
    """
    if basis.p == 1:
        solver = solve_shortrange if isinstance(context, ShortRangeContext) else solve_one_param
        s = solver(basis, context, grid, tol=cfg.tol, max_iter=cfg.max_iter)
        return s.density, {"mu": s.mu, "tau": s.tau, "edge": s.edge, "residual": s.residual_norm,
                           "iterations": s.iterations}, None
    # multiplicative steps are cheap but many: 100 per multiplier-solver iteration.  The
    # optimizer's tolerance is a relative first-order violation, which roundoff in the
    # criterion keeps from going much below its default.
    opts = OptimizerOptions(max_iter=100 * cfg.max_iter, tol=max(cfg.tol, OptimizerOptions.tol), seed=cfg.seed)
    r = optimize_density(basis, kind, context, grid, opts, raise_on_failure=True)
    return r.density, {"criterion": kind, "value": r.value, "violation": r.violation,
                       "iterations": r.iterations}, r.trace


def cmd_density(args):
    cfg = resolve_config(args)
    basis = basis_by_name(cfg.basis)
    kind = cfg.criterion or default_criterion(basis)
    context = _context(cfg)
    grid = cfg.grid()
    out = _outdir(cfg)
    code = EXIT_OK
    try:
        density, record, trace = _optimum(cfg, basis, context, grid, kind)
    except ConvergenceError as exc:
        res = exc.result
        density = res.density
        if hasattr(res, "mu"):
            record = {"mu": res.mu, "tau": res.tau, "edge": res.edge, "residual": res.residual_norm,
                      "iterations": res.iterations}
            trace = None
        else:
            record = {"criterion": kind, "value": res.value, "violation": res.violation,
                      "iterations": res.iterations}
            trace = res.trace
        print(f"warning: {exc}", file=sys.stderr)
        code = EXIT_NONCONVERGED
    write_density_csv(os.path.join(out, "density.csv"), density)
    _write_rows(os.path.join(out, "solution.csv"), list(record), [list(record.values())])
    if trace is not None:
        _write_rows(os.path.join(out, "run_log.csv"), ["iteration", "criterion", "violation"], trace)
    print(",".join(f"{k}={v if isinstance(v, str) else format(v, '.6g')}" for k, v in record.items()))
    return code


def cmd_table(args):
    cfg = resolve_config(args)
    try:
        res = build_table(args.table_id, cfg.grid(), tol=min(cfg.tol, 1e-10))
    except ConvergenceError as exc:
        raise CommandError(f"table {args.table_id}: {exc}", EXIT_CONFIG) from None
    out = _outdir(cfg)
    res.write_csv(os.path.join(out, f"table{args.table_id}.csv"))
    res.write_diff(os.path.join(out, f"table{args.table_id}_diff.csv"))
    bad = [c for c in res.cells if not c.ok]
    print(f"table {args.table_id}: {len(res.cells) - len(bad)}/{len(res.cells)} cells within tolerance, "
          f"max deviation {res.max_deviation():.4f}")
    for c in bad:
        print(f"  {c.row} {c.column}: computed {c.computed:.4f}, reference {c.reference:.4f}", file=sys.stderr)
    return EXIT_OK if res.ok else EXIT_CHECK


def cmd_verify(args):
    cfg = resolve_config(args, gamma_zero_ok=True)
    model = cfg.model()
    if not model.is_long_range:
        raise ConfigError("verify needs a long-range model")
    basis = basis_by_name(cfg.basis)
    Ns = [int(x) for x in _parse_floats(args.N_list, "N")]
    grid = cfg.grid()
    if args.density:
        phi = read_density_csv(args.density)
    elif args.design == "optimal":
        kind = cfg.criterion or default_criterion(basis)
        phi, _, _ = _optimum(cfg, basis, limit_kernel(model), grid, kind)
    else:
        phi = DesignDensity.uniform(grid)
    rep = convergence_report(basis, phi, model, cfg.gamma, Ns)
    out = _outdir(cfg)
    rep.write_csv(os.path.join(out, "report.csv"))
    if rep.degenerate:
        print("note: gamma = 0 is pure white noise; errors are absolute and the prediction is 0")
    for n, e in zip(rep.N, rep.errors):
        print(f"N={n} error={e:.6g}")
    if basis.p > 1:
        print("scaled covariance at largest N:", np.array2string(rep.scaled[-1], precision=6))
    print(f"slope={rep.slope:.4g} monotone={rep.monotone()} halved={rep.halved()}")
    return EXIT_OK if rep.monotone() else EXIT_CHECK


def _print_values(label, ts, vals, out_path=None):
    rows = list(zip(ts, vals))
    for t, v in rows:
        print(f"{format_float(t)}\t{format_float(v)}")
    if out_path:
        _write_rows(out_path, ["t", label], rows)


def cmd_mlf(args):
    ts = _parse_floats(args.t, "t")
    vals = [ml_eval(args.nu, args.beta, t) for t in ts]
    out = os.path.join(args.out, "mlf.csv") if args.out else None
    if out:
        os.makedirs(args.out, exist_ok=True)
    _print_values("E", ts, vals, out)
    return EXIT_OK


def cmd_rho(args):
    cfg = resolve_config(args)
    ts = _parse_floats(args.t, "t")
    model = cfg.model()
    vals = [rho_eval(model, t) for t in ts]
    out = os.path.join(cfg.out, "rho.csv") if args.out else None
    if out:
        os.makedirs(cfg.out, exist_ok=True)
    _print_values("rho", ts, vals, out)
    return EXIT_OK


def cmd_maximin(args):
    cfg = resolve_config(args)
    alphas = _parse_floats(args.alphas, "alphas")
    basis = basis_by_name(cfg.basis)
    grid = cfg.grid()
    kind = cfg.criterion or default_criterion(basis)
    problem = MaximinProblem.build(alphas, grid, basis, kind, tol=min(cfg.tol, 1e-10))
    res = maximin_design(problem, grid, OptimizerOptions(max_iter=3000, seed=cfg.seed))
    out = _outdir(cfg)
    write_density_csv(os.path.join(out, "maximin_density.csv"), res.density)
    _write_rows(os.path.join(out, "maximin_profile.csv"), ["alpha", "efficiency", "active"],
                [[a, e, str(int(a in res.active))] for a, e in zip(problem.alphas, res.profile)])
    _write_rows(os.path.join(out, "maximin_trace.csv"), ["step", "min_efficiency"], res.trace)
    for a, e in zip(problem.alphas, res.profile):
        print(f"{a:g}\t{e:.4f}")
    print(f"min efficiency {res.min_efficiency:.4f} at alpha in {list(res.active)}")
    return EXIT_OK


def cmd_efficiency(args):
    cfg = resolve_config(args)
    basis = basis_by_name(cfg.basis)
    kind = cfg.criterion or default_criterion(basis)
    context = _context(cfg)
    design = read_density_csv(args.design)
    if args.reference:
        ref = read_density_csv(args.reference)
    else:
        ref, _, _ = _optimum(cfg, basis, context, design.grid, kind)
    print(format_float(efficiency(design, ref, basis, context, kind)))
    return EXIT_OK


COMMANDS = {
    "density": cmd_density,
    "table": cmd_table,
    "verify": cmd_verify,
    "mlf": cmd_mlf,
    "rho": cmd_rho,
    "maximin": cmd_maximin,
    "efficiency": cmd_efficiency,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, DomainError, SingularDesignError, AccuracyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
