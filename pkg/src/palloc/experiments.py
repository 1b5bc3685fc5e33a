"""Scenario suites for the JmSW^NI(p) experiments and a rule-based stability
classifier for simulated sample paths."""
from __future__ import annotations

import csv
import enum
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analytics import v_cr, v_cr_1m
from .ctmc import Variant
from .desim import MetricsReport, SimConfig, WorkloadBased, simulate, write_samples_csv
from .errors import InvalidParameter
from .state import SystemParams

THETA = 0.01
WINDOW = 0.5
MIN_SAMPLES = 100
SUMMARY_COLUMNS = ("scenario", "rho", "critical_value", "verdict", "slope", "empty_visits")


class Verdict(enum.Enum):
    STABLE_LOOKING = "StableLooking"
    UNSTABLE_LOOKING = "UnstableLooking"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: Verdict
    slope: float
    late_empty_visits: int


@dataclass(frozen=True)
class Scenario:
    name: str
    config: SimConfig
    rho_offset: float
    critical_value: float

    @property
    def rho(self) -> float:
        return self.critical_value + self.rho_offset


def _scenario(name, s, m, p, cv, offset, horizon, seed, stride, mu=1.0) -> Scenario:
    params = SystemParams(s, (cv + offset) * s * mu, mu)
    cfg = SimConfig(params, WorkloadBased(m, p), Variant.NON_IDLING, horizon, seed, stride)
    return Scenario(name, cfg, offset, cv)


def _tag(x: float) -> str:
    return f"{x:g}".replace(".", "")


def build_figure_suite(s: int = 4, horizon: int = 10**6, offset: float = 0.05, seed: int = 0,
                       stride: int | None = None, suite: str = "all") -> list[Scenario]:
    """J2SW^NI(p) for p in {0.8, 0.9, 1} (``figure1``) and J3SW^NI(1) (``figure2``),
    each at critical value minus and plus ``offset``."""
    if not offset > 0:
        raise InvalidParameter(f"offset must be positive, got {offset}")
    if suite not in ("figure1", "figure2", "all"):
        raise InvalidParameter(f"unknown suite {suite!r}")
    if stride is None:
        stride = max(1, horizon // 10_000)
    out = []
    if suite in ("figure1", "all"):
        for p in (0.8, 0.9, 1.0):
            cv = v_cr(p, s).value
            for side, off in (("below", -offset), ("above", offset)):
                out.append(_scenario(f"J2SW_NI_p{_tag(p)}_{side}", s, 2, p, cv, off, horizon, seed, stride))
    if suite in ("figure2", "all"):
        if s < 3:
            raise InvalidParameter("the m=3 scenarios need s >= 3")
        cv = v_cr_1m(s, 3).value
        for side, off in (("below", -offset), ("above", offset)):
            out.append(_scenario(f"J3SW_NI_p1_{side}", s, 3, 1.0, cv, off, horizon, seed, stride))
    return out


def _count_zero_runs(total: np.ndarray) -> int:
    zero = total == 0
    if not zero.any():
        return 0
    starts = zero & ~np.concatenate([[False], zero[:-1]])
    return int(starts.sum())


def classify_stability(report: MetricsReport, theta: float = THETA, window: float = WINDOW,
                       stable_tol: float | None = None) -> StabilityVerdict:
    """Least-squares slope of max load vs time over the last ``window`` of samples,
    plus the number of visits to the empty system in that window.

    Unstable-looking: slope > theta * lam / s and no late empty visit.
    Stable-looking: slope <= stable_tol (default theta * lam / s) and at least
    one late empty visit. Anything else is inconclusive.
    """
    smp = report.samples
    if len(smp) < MIN_SAMPLES:
        raise InvalidParameter(f"need at least {MIN_SAMPLES} samples, got {len(smp)}")
    if not 0 < window <= 1:
        raise InvalidParameter(f"window must lie in (0, 1], got {window}")
    late = smp[len(smp) - max(2, int(round(window * len(smp)))):]
    t, y = late["time"], late["max_load"]
    tc = t - t.mean()
    denom = float(tc @ tc)
    slope = float(tc @ (y - y.mean()) / denom) if denom > 0 else 0.0
    t0 = float(t[0])
    exact = int(np.count_nonzero(report.empty_visit_times >= t0))
    # both counts are lower bounds on the true number of visits
    late_empty = max(exact, _count_zero_runs(late["total_load"]))
    grow = theta * report.lam / report.s
    flat = grow if stable_tol is None else stable_tol
    if slope > grow and late_empty == 0:
        v = Verdict.UNSTABLE_LOOKING
    elif slope <= flat and late_empty >= 1:
        v = Verdict.STABLE_LOOKING
    else:
        v = Verdict.INCONCLUSIVE
    return StabilityVerdict(v, slope, late_empty)


@dataclass(frozen=True)
class ContainmentRun:
    seed: int
    idling: Verdict
    nonidling: Verdict

    @property
    def violates(self) -> bool:
        return self.idling is Verdict.STABLE_LOOKING and self.nonidling is Verdict.UNSTABLE_LOOKING

    @property
    def inconclusive(self) -> bool:
        return Verdict.INCONCLUSIVE in (self.idling, self.nonidling)


def containment_runs(base: SimConfig, seeds) -> list[ContainmentRun]:
    if base.variant is not Variant.IDLING:
        raise InvalidParameter("containment check starts from the idling variant")
    runs = []
    for seed in seeds:
        idle = classify_stability(simulate(replace(base, seed=seed))).verdict
        ni = classify_stability(simulate(replace(base, seed=seed, variant=Variant.NON_IDLING))).verdict
        runs.append(ContainmentRun(seed, idle, ni))
    return runs


def containment_check(base: SimConfig, seeds) -> bool:
    """No seed may look stable under the idling policy yet unstable under its
    non-idling version. Inconclusive runs are reported by ``containment_runs``."""
    return not any(r.violates for r in containment_runs(base, seeds))


@dataclass(frozen=True)
class ScenarioResult:
    scenario: Scenario
    verdict: StabilityVerdict
    path: str | None


def run_scenario(scenario: Scenario, out_dir=None) -> ScenarioResult:
    report = simulate(scenario.config)
    verdict = classify_stability(report)
    path = None
    if out_dir is not None:
        path = str(write_samples_csv(report, Path(out_dir) / f"{scenario.name}_{scenario.config.seed}.csv",
                                     scenario.config))
    return ScenarioResult(scenario, verdict, path)


def run_suite(scenarios: list[Scenario], out_dir=None, jobs: int = 1) -> list[ScenarioResult]:
    if jobs <= 1:
        return [run_scenario(sc, out_dir) for sc in scenarios]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_scenario, scenarios, [out_dir] * len(scenarios)))


def write_summary(results: list[ScenarioResult], path, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("# config: " + json.dumps(meta or {}, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for r in results:
            sc = r.scenario
            w.writerow([sc.name, repr(sc.rho), repr(sc.critical_value), r.verdict.verdict.value,
                        repr(r.verdict.slope), r.verdict.late_empty_visits])
    return path
