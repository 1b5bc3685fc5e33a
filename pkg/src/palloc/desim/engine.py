from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from ..ctmc import Variant
from ..errors import InvalidParameter, ResourceLimitError, UndefinedMeasurement
from ..policy import AllocationVector
from ..state import OrderedState, SystemParams
from . import _kernels as K
from .streams import check_seed, make_buffers

SAMPLE_DTYPE = np.dtype([
    ("event_index", np.int64),
    ("time", np.float64),
    ("max_load", np.float64),
    ("total_load", np.float64),
    ("min_load", np.float64),
])
SAMPLE_COLUMNS = SAMPLE_DTYPE.names
OUT_BLOCK = 1 << 15


@dataclass(frozen=True)
class QueueBased:
    allocation: AllocationVector

    def describe(self) -> dict:
        return {"kind": "queue", "probs": list(self.allocation.probs)}


@dataclass(frozen=True)
class WorkloadBased:
    """JmSW(p): smallest workload w.p. 1-p, m-th smallest w.p. p."""

    m: int
    p: float

    def describe(self) -> dict:
        return {"kind": "workload", "m": self.m, "p": self.p}


Policy = Union[QueueBased, WorkloadBased]


@dataclass(frozen=True)
class SimConfig:
    params: SystemParams
    policy: Policy
    variant: Variant = Variant.IDLING
    horizon_arrivals: int = 10**6
    seed: int = 0
    sample_stride: int = 1
    split_m: int | None = None  # front size + 1 for split-episode tracking (queue-based only)
    max_samples: int = 10**7

    def __post_init__(self):
        if self.horizon_arrivals < 1:
            raise InvalidParameter(f"horizon must be >= 1 arrivals, got {self.horizon_arrivals}")
        if self.sample_stride < 1:
            raise InvalidParameter(f"sample stride must be >= 1, got {self.sample_stride}")
        check_seed(self.seed)
        s = self.params.s
        if isinstance(self.policy, QueueBased):
            if self.policy.allocation.s != s:
                raise InvalidParameter(f"allocation has {self.policy.allocation.s} entries for {s} servers")
        elif isinstance(self.policy, WorkloadBased):
            if not 1 <= self.policy.m <= s:
                raise InvalidParameter(f"need 1 <= m <= s, got m={self.policy.m}")
            if not 0.0 <= self.policy.p <= 1.0:
                raise InvalidParameter(f"need p in [0, 1], got {self.policy.p}")
            if self.split_m is not None:
                raise InvalidParameter("split tracking is only available for queue-based policies")
        else:
            raise InvalidParameter(f"unknown policy {self.policy!r}")
        if self.split_m is not None and not 2 <= self.split_m <= s:
            raise InvalidParameter(f"need 2 <= split_m <= s, got {self.split_m}")

    def describe(self) -> dict:
        return {
            "s": self.params.s, "lam": self.params.lam, "mu": self.params.mu,
            "rho": self.params.rho, "policy": self.policy.describe(),
            "variant": self.variant.value, "horizon_arrivals": self.horizon_arrivals,
            "seed": self.seed, "sample_stride": self.sample_stride, "split_m": self.split_m,
        }


@dataclass
class SplitEpisode:
    start_time: float
    end_time: float | None  # None while the episode is still open at the horizon
    overflow_count: int
    overflow_exposure_time: float
    regeneration_time: float | None
    arrivals_observed: int
    busy_front_counts: np.ndarray  # arrivals seeing k busy front servers, k = 0..m-1


@dataclass
class MetricsReport:
    samples: np.ndarray  # structured, SAMPLE_DTYPE
    empty_visits: int
    split_episodes: list[SplitEpisode]
    arrivals_processed: int
    lam: float  # arrival rate and server count, for rate-relative thresholds
    s: int
    empty_visit_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    end_time: float = 0.0
    time_avg_total_load: float = 0.0
    load_kind: str = "queue"

    def same_as(self, other: "MetricsReport") -> bool:
        if (self.empty_visits, self.arrivals_processed, self.end_time, self.time_avg_total_load,
                len(self.split_episodes)) != (other.empty_visits, other.arrivals_processed, other.end_time,
                                               other.time_avg_total_load, len(other.split_episodes)):
            return False
        if self.samples.tobytes() != other.samples.tobytes():
            return False
        if self.empty_visit_times.tobytes() != other.empty_visit_times.tobytes():
            return False
        for a, b in zip(self.split_episodes, other.split_episodes):
            if (a.start_time, a.end_time, a.overflow_count, a.overflow_exposure_time, a.regeneration_time,
                    a.arrivals_observed) != (b.start_time, b.end_time, b.overflow_count,
                                             b.overflow_exposure_time, b.regeneration_time, b.arrivals_observed):
                return False
            if not np.array_equal(a.busy_front_counts, b.busy_front_counts):
                return False
        return True


def detect_split(state, m: int) -> bool:
    """True iff the first m-1 queues hold at most one job and the rest at least two."""
    q = state.queues if isinstance(state, OrderedState) else tuple(state)
    if not 2 <= m <= len(q):
        raise InvalidParameter(f"need 2 <= m <= s, got m={m}, s={len(q)}")
    return all(v in (0, 1) for v in q[:m - 1]) and all(v >= 2 for v in q[m - 1:])


class _Outputs:
    def __init__(self, s: int, block: int = OUT_BLOCK):
        self.s_idx = np.zeros(block, np.int64)
        self.s_time = np.zeros(block)
        self.s_max = np.zeros(block)
        self.s_tot = np.zeros(block)
        self.s_min = np.zeros(block)
        self.e_time = np.zeros(block)
        self.ep_start = np.zeros(block)
        self.ep_end = np.zeros(block)
        self.ep_regen = np.zeros(block)
        self.ep_overflow = np.zeros(block, np.int64)
        self.ep_obs = np.zeros(block, np.int64)
        self.ep_hist = np.zeros((block, s), np.int64)
        self.open_hist = np.zeros(s, np.int64)
        self.sample_chunks: list[np.ndarray] = []
        self.empty_chunks: list[np.ndarray] = []
        self.episodes: list[SplitEpisode] = []
        self.n_samples = 0

    def flush(self, ist, nf: int, max_samples: int) -> None:
        n = int(ist[K.I_NSAMP])
        if n:
            chunk = np.empty(n, SAMPLE_DTYPE)
            chunk["event_index"] = self.s_idx[:n]
            chunk["time"] = self.s_time[:n]
            chunk["max_load"] = self.s_max[:n]
            chunk["total_load"] = self.s_tot[:n]
            chunk["min_load"] = self.s_min[:n]
            self.sample_chunks.append(chunk)
            self.n_samples += n
            if self.n_samples > max_samples:
                raise ResourceLimitError(f"sample buffer exceeded {max_samples} rows; raise sample_stride")
        n = int(ist[K.I_NEMPTY])
        if n:
            self.empty_chunks.append(self.e_time[:n].copy())
        for r in range(int(ist[K.I_NEP])):
            regen = float(self.ep_regen[r])
            regen = None if np.isnan(regen) else regen
            end = float(self.ep_end[r])
            self.episodes.append(SplitEpisode(
                start_time=float(self.ep_start[r]), end_time=end,
                overflow_count=int(self.ep_overflow[r]),
                overflow_exposure_time=0.0 if regen is None else end - regen,
                regeneration_time=regen, arrivals_observed=int(self.ep_obs[r]),
                busy_front_counts=self.ep_hist[r, :nf + 1].copy()))
        ist[K.I_NSAMP] = ist[K.I_NEMPTY] = ist[K.I_NEP] = 0

    def samples(self) -> np.ndarray:
        if not self.sample_chunks:
            return np.empty(0, SAMPLE_DTYPE)
        return np.concatenate(self.sample_chunks)

    def empty_times(self) -> np.ndarray:
        if not self.empty_chunks:
            return np.empty(0)
        return np.concatenate(self.empty_chunks)


def simulate(config: SimConfig) -> MetricsReport:
    """Run one seeded simulation up to ``horizon_arrivals`` arrivals.

    Queue-based runs are event driven (arrivals and departures); workload-based
    runs are observed at arrival epochs, where the residual work of every server
    is depleted deterministically between arrivals.
    """
    params = config.params
    s = params.s
    bufs = make_buffers(config.seed)
    names = ("arrivals", "service", "routing", "ties")
    pos = np.zeros(4, np.int64)
    fst = np.zeros(K.N_FST)
    fst[K.F_NEXT_ARRIVAL] = np.nan
    fst[K.F_EP_START] = np.nan
    fst[K.F_EP_REGEN_TIME] = np.nan
    ist = np.zeros(K.N_IST, np.int64)
    out = _Outputs(s)
    queue_based = isinstance(config.policy, QueueBased)
    split_m = config.split_m or 0
    nf = max(split_m - 1, 0)
    nonidling = config.variant is Variant.NON_IDLING
    if queue_based:
        state = np.zeros(s, np.int64)
        pcum = np.cumsum(config.policy.allocation.as_array())
    else:
        state = np.zeros(s)

    while True:
        for name, i in zip(names, range(4)):
            b = bufs[name]
            b.pos = int(pos[i])
            b.ensure(K._RESERVE + 1)
            pos[i] = b.pos
        if queue_based:
            status = K.queue_kernel(
                state, fst, ist, params.lam, params.mu, pcum, nonidling, split_m,
                config.horizon_arrivals, config.sample_stride,
                bufs["arrivals"].buf, bufs["service"].buf, bufs["routing"].buf, pos,
                out.s_idx, out.s_time, out.s_max, out.s_tot, out.s_min, out.e_time,
                out.ep_start, out.ep_end, out.ep_regen, out.ep_overflow, out.ep_obs,
                out.ep_hist, out.open_hist)
        else:
            status = K.workload_kernel(
                state, fst, ist, params.lam, params.mu, config.policy.m, config.policy.p, nonidling,
                config.horizon_arrivals, config.sample_stride,
                bufs["arrivals"].buf, bufs["service"].buf, bufs["routing"].buf, bufs["ties"].buf, pos,
                out.s_idx, out.s_time, out.s_max, out.s_tot, out.s_min, out.e_time)
        out.flush(ist, nf, config.max_samples)
        if status == K.DONE:
            break

    end_time = float(fst[K.F_TIME])
    episodes = out.episodes
    if split_m and ist[K.I_EP_OPEN] == 1:
        regen = float(fst[K.F_EP_REGEN_TIME]) if ist[K.I_EP_REGEN] == 1 else None
        episodes.append(SplitEpisode(
            start_time=float(fst[K.F_EP_START]), end_time=None,
            overflow_count=int(ist[K.I_EP_OVERFLOW]),
            overflow_exposure_time=0.0 if regen is None else end_time - regen,
            regeneration_time=regen, arrivals_observed=int(ist[K.I_EP_OBS]),
            busy_front_counts=out.open_hist[:nf + 1].copy()))
    return MetricsReport(
        samples=out.samples(),
        empty_visits=int(ist[K.I_EMPTY]),
        split_episodes=episodes,
        arrivals_processed=int(ist[K.I_ARRIVALS]),
        empty_visit_times=out.empty_times(),
        end_time=end_time,
        time_avg_total_load=float(fst[K.F_AREA] / end_time) if end_time > 0 else 0.0,
        load_kind="queue" if queue_based else "workload",
        lam=params.lam,
        s=s,
    )


def measure_overflow_rate(report: MetricsReport) -> float:
    """Overflows to back servers per unit of post-regeneration split time."""
    exposure = sum(e.overflow_exposure_time for e in report.split_episodes)
    if not exposure > 0:
        raise UndefinedMeasurement("no post-regeneration split exposure in this run")
    return sum(e.overflow_count for e in report.split_episodes) / exposure


def busy_front_distribution(report: MetricsReport) -> np.ndarray:
    """Empirical law of the number of busy front servers seen by arrivals after
    regeneration, pooled over episodes."""
    if not report.split_episodes:
        raise UndefinedMeasurement("run has no split episodes")
    counts = np.sum([e.busy_front_counts for e in report.split_episodes], axis=0)
    if counts.sum() == 0:
        raise UndefinedMeasurement("no arrivals observed after regeneration")
    return counts / counts.sum()


def write_samples_csv(report: MetricsReport, path, config: SimConfig | None = None) -> Path:
    """Header comment with the resolved configuration, then
    ``event_index,time,max_load,total_load,min_load`` rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = config.describe() if config is not None else {}
    smp = report.samples
    with open(path, "w", newline="") as fh:
        fh.write("# config: " + json.dumps(meta, sort_keys=True) + "\n")
        fh.write(",".join(SAMPLE_COLUMNS) + "\n")
        for row in zip(smp["event_index"].tolist(), smp["time"].tolist(), smp["max_load"].tolist(),
                       smp["total_load"].tolist(), smp["min_load"].tolist()):
            fh.write("%d,%r,%r,%r,%r\n" % row)
    return path


def read_samples_csv(path) -> np.ndarray:
    rows = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    out = np.empty(len(rows), SAMPLE_DTYPE)
    for j, name in enumerate(SAMPLE_COLUMNS):
        out[name] = rows[:, j]
    return out
