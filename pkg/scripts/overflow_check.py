"""Compare the measured overflow rate during split episodes with the loss-system
prediction, for front groups of size m-1 = 1 and 2.

    python scripts/overflow_check.py --lam 3.85 --horizon 2000000 --seeds 5
"""
import argparse

import numpy as np

from palloc.analytics import erlang_distribution, erlang_loss
from palloc.ctmc import Variant
from palloc.desim import QueueBased, SimConfig, busy_front_distribution, measure_overflow_rate, simulate
from palloc.errors import UndefinedMeasurement
from palloc.policy import error_allocation
from palloc.state import SystemParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--s", type=int, default=4)
    ap.add_argument("--lam", type=float, default=3.85)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--m", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--horizon", type=int, default=10**6)
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args()

    a = args.lam / args.mu
    for m in args.m:
        predicted = args.lam * erlang_loss(m - 1, a)
        law = erlang_distribution(m - 1, a)
        print(f"m={m}: predicted overflow {predicted:.5f}, busy-front law {np.round(law, 4).tolist()}")
        for seed in range(args.seeds):
            cfg = SimConfig(SystemParams(args.s, args.lam, args.mu), QueueBased(error_allocation(args.s, m, 1.0)),
                            Variant.NON_IDLING, args.horizon, seed, sample_stride=1000, split_m=m)
            rep = simulate(cfg)
            try:
                rate = measure_overflow_rate(rep)
                busy = busy_front_distribution(rep)
            except UndefinedMeasurement as exc:
                print(f"  seed {seed}: {exc}")
                continue
            observed = sum(e.arrivals_observed for e in rep.split_episodes)
            print(f"  seed {seed}: rate {rate:.5f} ({100 * (rate / predicted - 1):+.2f}%), "
                  f"busy law {np.round(busy, 4).tolist()}, {observed} arrivals observed, "
                  f"{len(rep.split_episodes)} episodes")


if __name__ == "__main__":
    main()
