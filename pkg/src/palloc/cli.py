"""Command-line entry point: ``palloc {vcr,policy-check,ctmc,simulate,experiment}``.

Exit codes: 0 success, 1 usage or I/O error, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analytics, ctmc, experiments
from .config import (CTMC_KEYS, EXPERIMENT_KEYS, SIM_KEYS, ConfigError, load_config, merge,
                     parse_policy, sim_config, system_params)
from .desim import QueueBased, measure_overflow_rate, simulate, write_samples_csv
from .errors import ConvergenceFailure, InternalError, InvalidParameter, PallocError, UndefinedMeasurement
from .policy import (AllocationVector, error_allocation, gsc_compare, jsq_allocation,
                     pw_allocation, satisfies_maximality_condition, tail_sums, uniform_allocation)

EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _prob(text):
    v = float(text)
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {text}")
    return v


def cmd_vcr(args) -> int:
    if (args.p is None) == (args.m is None):
        raise UsageError("give exactly one of --p or --m")
    if args.p is not None:
        rep = analytics.v_cr(args.p, args.s)
    else:
        rep = analytics.v_cr_1m(args.s, args.m, args.tol)
    print(f"value={rep.value:.10f}")
    print(f"method={rep.method.value}")
    print(f"residual={rep.residual:.3e}")
    return 0


def _allocation_from_args(args) -> AllocationVector:
    given = [a for a in ("pw", "error", "vec", "uniform", "jsq") if getattr(args, a) is not None]
    if len(given) != 1:
        raise UsageError("give exactly one of --pw, --error, --vec, --uniform, --jsq")
    try:
        if args.pw is not None:
            return pw_allocation(int(args.pw[0]), int(args.pw[1]))
        if args.error is not None:
            s, m, p = args.error
            return error_allocation(int(s), int(m), float(p))
        if args.uniform is not None:
            return uniform_allocation(args.uniform)
        if args.jsq is not None:
            return jsq_allocation(args.jsq)
        return AllocationVector(tuple(float(v) for v in args.vec.split(",")))
    except InvalidParameter:
        raise
    except ValueError as exc:
        raise UsageError(f"malformed allocation: {exc}") from None


def cmd_policy_check(args) -> int:
    p = _allocation_from_args(args)
    uni = uniform_allocation(p.s) if p.s >= 2 else None
    print("allocation=" + ",".join(f"{v:.10g}" for v in p.probs))
    print("tail_sums=" + ",".join(f"{v:.10g}" for v in tail_sums(p.probs)))
    if uni is None:
        print("comparison=Equal")
        print("certified_maximal=true")
        return 0
    print("uniform_tail_sums=" + ",".join(f"{v:.10g}" for v in tail_sums(uni.probs)))
    cmp = gsc_compare(p.probs, uni.probs)
    print(f"comparison={cmp.value}")
    ok = satisfies_maximality_condition(p)
    print(f"certified_maximal={'true' if ok else 'false'}")
    return 0


def _load(path, keys):
    if path is None:
        return {}
    return load_config(path, keys)


def cmd_ctmc(args) -> int:
    values = merge(_load(args.config, CTMC_KEYS), {
        "s": args.s, "lam": args.lam, "rho": args.rho, "mu": args.mu, "policy": args.policy,
        "variant": args.variant, "cap": args.cap, "tol": args.tol})
    params = system_params(values)
    policy = parse_policy(values.get("policy", "jsq"), params.s)
    if not isinstance(policy, QueueBased):
        raise ConfigError("the ctmc command needs a queue-based allocation policy")
    variant = ctmc.Variant.parse(str(values.get("variant", "idling")))
    cap = int(values.get("cap", 30))
    tol = float(values.get("tol", 1e-10))
    chain = ctmc.build_generator(params, policy.allocation, variant, cap)
    pi = ctmc.stationary_distribution(chain, tol)
    name = values.get("name") or "ctmc"
    out = Path(args.out or f"{name}_stationary.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    meta = {"s": params.s, "lam": params.lam, "mu": params.mu, "rho": params.rho,
            "policy": policy.describe(), "variant": variant.value, "cap": cap, "tol": tol}
    with open(out, "w", newline="") as fh:
        fh.write("# config: " + json.dumps(meta, sort_keys=True) + "\n")
        fh.write(",".join([f"q{i + 1}" for i in range(params.s)] + ["probability"]) + "\n")
        for x, prob in zip(chain.states, pi.tolist()):
            fh.write(",".join(str(v) for v in x) + f",{prob!r}\n")
    print(f"states={chain.n_states}")
    print(f"mean_total={ctmc.mean_total(chain, pi):.10g}")
    print(f"boundary_mass={ctmc.boundary_mass(chain, pi):.3e}")
    print(f"output={out}")
    return 0


def cmd_simulate(args) -> int:
    values = merge(_load(args.config, SIM_KEYS), {
        "s": args.s, "lam": args.lam, "rho": args.rho, "mu": args.mu, "policy": args.policy,
        "variant": args.variant, "horizon_arrivals": args.horizon, "seed": args.seed,
        "sample_stride": args.stride, "split_m": args.split_m})
    cfg = sim_config(values)
    report = simulate(cfg)
    name = values.get("name") or "run"
    out = Path(args.out or f"{name}_{cfg.seed}.csv")
    write_samples_csv(report, out, cfg)
    print(f"arrivals={report.arrivals_processed}")
    print(f"end_time={report.end_time:.10g}")
    print(f"time_avg_total_load={report.time_avg_total_load:.10g}")
    print(f"empty_visits={report.empty_visits}")
    if len(report.samples) >= experiments.MIN_SAMPLES:
        v = experiments.classify_stability(report)
        print(f"verdict={v.verdict.value} slope={v.slope:.6g} late_empty_visits={v.late_empty_visits}")
    if cfg.split_m:
        print(f"split_episodes={len(report.split_episodes)}")
        try:
            print(f"overflow_rate={measure_overflow_rate(report):.10g}")
        except UndefinedMeasurement:
            print("overflow_rate=undefined")
    print(f"output={out}")
    return 0


def cmd_experiment(args) -> int:
    values = merge(_load(args.config, EXPERIMENT_KEYS), {
        "suite": args.suite, "s": args.s, "offset": args.offset, "horizon": args.horizon,
        "seed": args.seed, "seeds": args.seeds, "sample_stride": args.stride, "jobs": args.jobs})
    suite = values.get("suite", "all")
    s = int(values.get("s", 4))
    offset = float(values.get("offset", 0.05))
    horizon = int(values.get("horizon", 10**6))
    seed = int(values.get("seed", 0))
    n_seeds = int(values.get("seeds", 1))
    stride = values.get("sample_stride")
    jobs = int(values.get("jobs", 1))
    if n_seeds < 1:
        raise ConfigError("seeds must be >= 1")
    scenarios = []
    for k in range(n_seeds):
        scenarios += experiments.build_figure_suite(s, horizon, offset, seed + k,
                                                    None if stride is None else int(stride), suite)
    out_dir = Path(args.out_dir)
    results = experiments.run_suite(scenarios, out_dir, jobs)
    meta = {"suite": suite, "s": s, "offset": offset, "horizon": horizon, "seed": seed,
            "seeds": n_seeds, "sample_stride": scenarios[0].config.sample_stride}
    summary = experiments.write_summary(results, out_dir / f"summary_{suite}_{seed}.csv", meta)
    for r in results:
        sc = r.scenario
        print(f"{sc.name} seed={sc.config.seed} rho={sc.rho:.4f} critical={sc.critical_value:.4f} "
              f"verdict={r.verdict.verdict.value}")
    print(f"summary={summary}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="palloc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("vcr", help="critical traffic intensity")
    p.add_argument("--s", type=int, required=True, help="number of servers")
    p.add_argument("--p", type=_prob, help="error probability of J2SQ^NI(p), in (0, 1]")
    p.add_argument("--m", type=int, help="rank m of JmSQ^NI (p = 1)")
    p.add_argument("--tol", type=float, default=analytics.DEFAULT_TOL,
                   help="bisection bracket width for --m (default: %(default)g)")
    p.set_defaults(func=cmd_vcr)

    p = sub.add_parser("policy-check", help="gsc certification of an allocation vector")
    p.add_argument("--pw", nargs=2, metavar=("S", "D"), help="power-of-d allocation")
    p.add_argument("--error", nargs=3, metavar=("S", "M", "P"), help="(1-p) on shortest, p on m-th shortest")
    p.add_argument("--vec", help="explicit comma-separated probabilities")
    p.add_argument("--uniform", type=int, metavar="S", help="uniform splitting")
    p.add_argument("--jsq", type=int, metavar="S", help="join the shortest queue")
    p.set_defaults(func=cmd_policy_check)

    def system_flags(q):
        q.add_argument("--config", help="YAML run configuration; flags override its values")
        q.add_argument("--s", type=int, help="number of servers")
        q.add_argument("--lam", type=float, help="arrival rate (alternative to --rho)")
        q.add_argument("--rho", type=float, help="traffic intensity lam/(s mu)")
        q.add_argument("--mu", type=float, help="per-server service rate (default: 1)")
        q.add_argument("--policy", help="jsq | uniform | pw:D | error:M:P | vec:a,b,.. | workload:M:P")
        q.add_argument("--variant", choices=["idling", "nonidling"], help="routing variant (default: idling)")

    p = sub.add_parser("ctmc", help="stationary law of the truncated ordered chain")
    system_flags(p)
    p.add_argument("--cap", type=int, help="per-queue truncation bound (default: 30)")
    p.add_argument("--tol", type=float, help="residual tolerance (default: 1e-10)")
    p.add_argument("--out", help="output file (default: <name>_stationary.csv)")
    p.set_defaults(func=cmd_ctmc)

    p = sub.add_parser("simulate", help="one seeded simulation run")
    system_flags(p)
    p.add_argument("--horizon", type=int, help="number of arrivals")
    p.add_argument("--seed", type=int, help="root seed (default: 0)")
    p.add_argument("--stride", type=int, help="record every k-th event (default: 1)")
    p.add_argument("--split-m", type=int, dest="split_m", help="track split episodes with m-1 front servers")
    p.add_argument("--out", help="output file (default: <name>_<seed>.csv)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="JmSW^NI(p) scenario suite")
    p.add_argument("--config", help="YAML experiment configuration; flags override its values")
    p.add_argument("--suite", choices=["figure1", "figure2", "all"], help="scenario set (default: all)")
    p.add_argument("--s", type=int, help="number of servers (default: 4)")
    p.add_argument("--offset", type=float, help="distance from the critical value (default: 0.05)")
    p.add_argument("--horizon", type=int, help="arrivals per run (default: 1000000)")
    p.add_argument("--seed", type=int, help="first seed (default: 0)")
    p.add_argument("--seeds", type=int, help="number of consecutive seeds (default: 1)")
    p.add_argument("--stride", type=int, help="sample stride (default: horizon // 10000)")
    p.add_argument("--jobs", type=int, help="parallel runs (default: 1)")
    p.add_argument("--out-dir", default="results", help="output directory (default: %(default)s)")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"palloc: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"palloc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceFailure, InternalError, UndefinedMeasurement) as exc:
        print(f"palloc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidParameter, PallocError) as exc:
        print(f"palloc: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
