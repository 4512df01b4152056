"""Locate the empirical sample thresholds frozen into the acceptance tests.

Prints m* (smallest m reaching the target success rate) via a
coarse-to-fine sweep, either on the coherence-controlled generator or on
the hidden-direction family. Rerun after changing the completion
algorithm and copy the printed values into tests/test_acceptance.py.

    python3 scripts/locate_thresholds.py --target 0.99 --mu0 1
    python3 scripts/locate_thresholds.py --hard --d 100 --n 200 --r 5 --block 4 --target 0.9
"""

import argparse
import warnings

from adaptmc.config import ExperimentConfig
from adaptmc.harness import locate_threshold, run_lowerbound_demo, success_curve, threshold_crossing


def locate_hard(args):
    cfg = ExperimentConfig(
        kind="lowerbound-demo", trials=args.trials, base_seed=args.seed, d=args.d, n=args.n,
        r=args.r, block=args.block, budget_fracs=[1.0],
        m_grid=sorted({min(args.d, v) for v in (10, 20, 40, 60, 80, 90, 95, 100, args.d)}),
    ).validate()
    rows = run_lowerbound_demo(cfg)
    curve = next(iter(success_curve(rows, key=("d",), method="adaptive").values()))
    for m, rate in curve:
        print(f"  m={m:g}: success {rate:.3f}")
    print(f"hidden-direction family d={args.d} n={args.n} r={args.r} l={args.block} "
          f"target={args.target}: m*={threshold_crossing(curve, args.target):.2f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--target", type=float, default=0.99)
    ap.add_argument("--d", type=int, default=500)
    ap.add_argument("--n", type=int, default=None)
    ap.add_argument("--r", type=int, default=10)
    ap.add_argument("--mu0", type=float, nargs="+", default=[1.0])
    ap.add_argument("--hard", action="store_true", help="sweep the hidden-direction family")
    ap.add_argument("--block", type=int, default=4)
    args = ap.parse_args()
    args.n = args.n or args.d
    warnings.simplefilter("ignore")
    if args.hard:
        locate_hard(args)
        return
    for mu0 in args.mu0:
        cfg = ExperimentConfig(
            kind="complete-sweep", trials=args.trials, base_seed=args.seed,
            d=args.d, n=args.n, square=False, r=args.r, mu0=mu0, m_grid=[1],
        )
        m_star, rows = locate_threshold(cfg, args.target)
        tested = sorted({int(row["m"]) for row in rows if row["trial"] == "agg"})
        print(f"d={args.d} n={args.n} r={args.r} mu0={mu0:g} target={args.target}: "
              f"m*={m_star:.2f} (grid {tested})")


if __name__ == "__main__":
    main()
