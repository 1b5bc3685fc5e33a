"""Run the JmSW^NI(p) scenario suite over several seeds and tabulate verdicts.

Default is the desk-scale protocol (offset 0.05, 10^6 arrivals, 20 seeds).
``--full`` switches to offset 0.002 with 10^7 arrivals, which takes hours and
is often inconclusive this close to the critical value.

    python scripts/run_figure_suite.py --jobs 8 --out-dir results/figures
"""
import argparse
import os
from collections import Counter, defaultdict
from pathlib import Path

from palloc.experiments import Verdict, build_figure_suite, run_suite, write_summary


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--s", type=int, default=4)
    ap.add_argument("--offset", type=float, default=0.05)
    ap.add_argument("--horizon", type=int, default=10**6)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--first-seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out-dir", default=None, help="write per-run sample CSVs and a summary here")
    ap.add_argument("--full", action="store_true", help="offset 0.002, 10^7 arrivals")
    args = ap.parse_args()
    if args.full:
        args.offset, args.horizon = 0.002, 10**7

    scenarios = []
    for seed in range(args.first_seed, args.first_seed + args.seeds):
        scenarios += build_figure_suite(args.s, args.horizon, args.offset, seed)
    results = run_suite(scenarios, args.out_dir, args.jobs)

    tally = defaultdict(Counter)
    for r in results:
        tally[r.scenario.name][r.verdict.verdict] += 1
    print(f"{'scenario':<20} {'rho':>8} {'stable':>7} {'unstable':>9} {'inconcl.':>9}")
    seen = {}
    for r in results:
        seen.setdefault(r.scenario.name, r.scenario.rho)
    for name, rho in seen.items():
        c = tally[name]
        print(f"{name:<20} {rho:8.4f} {c[Verdict.STABLE_LOOKING]:7d} {c[Verdict.UNSTABLE_LOOKING]:9d} "
              f"{c[Verdict.INCONCLUSIVE]:9d}")
    if args.out_dir:
        meta = {"s": args.s, "offset": args.offset, "horizon": args.horizon, "seeds": args.seeds,
                "first_seed": args.first_seed}
        print("summary:", write_summary(results, Path(args.out_dir) / "summary.csv", meta))


if __name__ == "__main__":
    main()
