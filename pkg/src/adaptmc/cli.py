"""Command-line entry point.

    adaptmc complete --n-grid 200,500 --m-grid 30,40,50 --trials 20 -o sweep.csv
    adaptmc approx --p-grid 0.2,0.4 --methods adaptive,passive -o approx.csv
    adaptmc validate-bounds --d 2000 --r 5 --m-grid 300,600 --delta 0.05
    adaptmc lowerbound --d 100 --n 200 --r 5 --block 4 --m-grid 100
    adaptmc gen --d 50 --n 80 --r 3 -o X.txt
    adaptmc report sweep.csv
    adaptmc plots sweep.csv --kind completion --outdir plots/

Environment: ``ADAPTMC_OUTPUT_DIR`` prefixes relative output paths and
``ADAPTMC_THREADS`` sets the default worker count.
"""

import argparse
import sys
import warnings

from .config import load_config, resolve_output
from .harness import PLOT_KINDS, emit_plot_scripts, read_csv, run_experiment, summary_table
from .instances import NORM_MODES, ROW_MODES, InstanceSpec, make_low_rank
from .matio import save_matrix
from .sampling import InvalidArgument

_KIND = {
    "complete": "complete-sweep",
    "approx": "approx-sweep",
    "validate-bounds": "bounds-validate",
    "lowerbound": "lowerbound-demo",
}


def _ints(s):
    return [int(float(v)) for v in s.split(",") if v.strip()]


def _floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def _strs(s):
    return [v.strip() for v in s.split(",") if v.strip()]


def _instance_flags(p):
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--mu0", type=float)
    p.add_argument("--row-mode", choices=ROW_MODES)
    p.add_argument("--column-norm-mode", choices=NORM_MODES)
    p.add_argument("--noise-sigma", type=float)


def _sweep_parser(sub, name, help_):
    p = sub.add_parser(name, help=help_)
    p.add_argument("--config", help="INI file; flags override its values")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", dest="base_seed", type=int)
    p.add_argument("-o", "--output")
    p.add_argument("--workers", type=int)
    _instance_flags(p)
    p.add_argument("--square", action=argparse.BooleanOptionalAction, default=None,
                   help="set d = n for every n on the grid")
    p.add_argument("--m", type=int)
    p.add_argument("--m1", type=int)
    p.add_argument("--m1-frac", type=float)
    p.add_argument("--tau-rel", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--block", type=int, help="hidden block size l (lowerbound)")
    p.add_argument("--n-grid", type=_ints)
    p.add_argument("--r-grid", type=_ints)
    p.add_argument("--mu0-grid", type=_floats)
    p.add_argument("--m-grid", type=_ints)
    p.add_argument("--p-grid", type=_floats)
    p.add_argument("--delta-grid", type=_floats)
    p.add_argument("--norm-modes", type=_strs)
    p.add_argument("--methods", type=_strs)
    p.add_argument("--budget-fracs", type=_floats)
    return p


_NOT_CONFIG = {"command", "config", "func"}


def build_parser():
    ap = argparse.ArgumentParser(prog="adaptmc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    _sweep_parser(sub, "complete", "exact-recovery success vs samples per column")
    _sweep_parser(sub, "approx", "excess risk of adaptive and passive approximation")
    _sweep_parser(sub, "validate-bounds", "coverage of the residual sandwich bound")
    _sweep_parser(sub, "lowerbound", "passive vs adaptive on the hidden-direction family")

    g = sub.add_parser("gen", help="write a synthetic instance to disk")
    _instance_flags(g)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--format", choices=("auto", "text", "binary"), default="auto")

    r = sub.add_parser("report", help="summary table of a result CSV")
    r.add_argument("csv", nargs="+")

    pl = sub.add_parser("plots", help="write standalone plotting scripts")
    pl.add_argument("csv", nargs="*")
    pl.add_argument("--kind", choices=PLOT_KINDS, required=True)
    pl.add_argument("--outdir", default="plots")
    return ap


def _cmd_sweep(args):
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    overrides["kind"] = _KIND[args.command]
    cfg = load_config(args.config, overrides)
    rows, path = run_experiment(cfg)
    print(summary_table(rows))
    print(f"wrote {len(rows)} rows to {path}")


def _cmd_gen(args):
    spec = InstanceSpec(
        d=args.d or 100, n=args.n or args.d or 100, r=args.r or 5,
        mu0_target=args.mu0 or 1.0,
        row_mode=args.row_mode or "incoherent-gaussian",
        column_norm_mode=args.column_norm_mode or "constant",
        noise_sigma=args.noise_sigma or 0.0, seed=args.seed,
    )
    inst = make_low_rank(spec)
    out = resolve_output(args.output)
    save_matrix(out, inst.matrix, args.format)
    print(f"wrote {spec.d}x{spec.n} rank-{inst.true_rank} matrix "
          f"(mu0={inst.realized_mu0:.4g}) to {out}")


def _cmd_report(args):
    rows = [row for path in args.csv for row in read_csv(path)]
    print(summary_table(rows))


def _cmd_plots(args):
    for path in emit_plot_scripts(args.csv, args.kind, resolve_output(args.outdir)):
        print(path)


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {
        "gen": _cmd_gen, "report": _cmd_report, "plots": _cmd_plots,
    }.get(args.command, _cmd_sweep)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            handler(args)
    except (InvalidArgument, OSError) as exc:
        print(f"adaptmc: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
