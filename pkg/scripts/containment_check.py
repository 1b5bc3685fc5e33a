"""Look for seeds where an idling p-allocation policy looks stable while its
non-idling version looks unstable.

    python scripts/containment_check.py --seeds 10
"""
import argparse

from palloc.ctmc import Variant
from palloc.desim import QueueBased, SimConfig
from palloc.experiments import containment_runs
from palloc.policy import error_allocation, pw_allocation
from palloc.state import SystemParams

SETTINGS = [
    (2, error_allocation(2, 2, 1.0), 0.7),
    (4, error_allocation(4, 2, 1.0), 0.9),
    (4, error_allocation(4, 2, 0.9), 0.9),
    (3, error_allocation(3, 3, 1.0), 0.75),
    (4, pw_allocation(4, 2), 0.9),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--horizon", type=int, default=10**6)
    args = ap.parse_args()
    stride = max(1, args.horizon // 5000)
    for s, p, rho in SETTINGS:
        base = SimConfig(SystemParams.from_rho(s, rho), QueueBased(p), Variant.IDLING, args.horizon,
                         sample_stride=stride)
        runs = containment_runs(base, range(args.seeds))
        pairs = sorted({(r.idling.value, r.nonidling.value) for r in runs})
        bad = [r.seed for r in runs if r.violates]
        print(f"s={s} p={[round(v, 3) for v in p.probs]} rho={rho}: {pairs} violations={bad}")


if __name__ == "__main__":
    main()
