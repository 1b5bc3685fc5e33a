"""Truncated generator of the ordered queue process, its stationary law, and
numerical checks of the quadratic Lyapunov drift."""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceFailure, InvalidParameter
from .policy import AllocationVector, tie_aware_routing_distribution
from .state import OrderedState, SystemParams

MAX_SCAN_STATES = 10**7


class Variant(enum.Enum):
    IDLING = "idling"
    NON_IDLING = "nonidling"

    @classmethod
    def parse(cls, text: str) -> "Variant":
        key = text.strip().lower().replace("-", "").replace("_", "")
        for v in cls:
            if v.value == key:
                return v
        raise InvalidParameter(f"unknown variant {text!r} (expected idling or nonidling)")


@dataclass
class TruncatedChain:
    params: SystemParams
    allocation: AllocationVector
    variant: Variant
    cap: int
    states: list[tuple[int, ...]]
    index: dict[tuple[int, ...], int] = field(repr=False)
    rates: sp.csr_matrix = field(repr=False)  # off-diagonal transition rates

    @property
    def n_states(self) -> int:
        return len(self.states)

    def transitions(self, i: int) -> list[tuple[int, float]]:
        row = self.rates.getrow(i)
        return list(zip(row.indices.tolist(), row.data.tolist()))

    def outflow(self) -> np.ndarray:
        return np.asarray(self.rates.sum(axis=1)).ravel()

    def generator(self) -> sp.csr_matrix:
        return (self.rates - sp.diags(self.outflow())).tocsr()

    def totals(self) -> np.ndarray:
        return np.array([sum(x) for x in self.states], dtype=float)


def ordered_states(s: int, cap: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations_with_replacement(range(cap + 1), s))


def _bump(x: tuple[int, ...], i: int, delta: int) -> tuple[int, ...]:
    y = list(x)
    y[i] += delta
    return tuple(sorted(y))


def state_transitions(x: tuple[int, ...], params: SystemParams, p: AllocationVector,
                      variant: Variant, cap: int | None = None) -> dict[tuple[int, ...], float]:
    """Outgoing rates from ordered state ``x``; arrivals beyond ``cap`` are dropped."""
    out: dict[tuple[int, ...], float] = {}
    if variant is Variant.NON_IDLING and x[0] == 0:
        route = np.zeros(len(x))
        route[0] = 1.0  # any idle server gives the same ordered successor
    else:
        route = tie_aware_routing_distribution(x, p)
    for i, w in enumerate(route):
        if w <= 0.0:
            continue
        if cap is not None and x[i] + 1 > cap:
            continue
        y = _bump(x, i, +1)
        out[y] = out.get(y, 0.0) + params.lam * w
    for i, v in enumerate(x):
        if v > 0:
            y = _bump(x, i, -1)
            out[y] = out.get(y, 0.0) + params.mu
    return out


def build_generator(params: SystemParams, p: AllocationVector, variant: Variant = Variant.IDLING,
                    cap: int = 30) -> TruncatedChain:
    if cap < 1:
        raise InvalidParameter(f"cap must be >= 1, got {cap}")
    if p.s != params.s:
        raise InvalidParameter(f"allocation has {p.s} entries for {params.s} servers")
    states = ordered_states(params.s, cap)
    index = {x: i for i, x in enumerate(states)}
    rows, cols, vals = [], [], []
    for i, x in enumerate(states):
        for y, r in state_transitions(x, params, p, variant, cap).items():
            rows.append(i)
            cols.append(index[y])
            vals.append(r)
    n = len(states)
    rates = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return TruncatedChain(params, p, variant, cap, states, index, rates)


def stationary_distribution(chain: TruncatedChain, tol: float = 1e-10, refine: int = 3) -> np.ndarray:
    """Solve pi G = 0, sum(pi) = 1 by a direct sparse solve with iterative refinement."""
    G = chain.generator()
    n = chain.n_states
    A = G.T.tolil()
    A[0, :] = np.ones(n)
    A = A.tocsc()
    rhs = np.zeros(n)
    rhs[0] = 1.0
    lu = spla.splu(A)
    pi = lu.solve(rhs)
    for _ in range(refine):
        pi += lu.solve(rhs - A @ pi)
    pi = np.where(pi < 0, 0.0, pi)
    pi /= pi.sum()
    residual = float(np.abs(G.T @ pi).max())
    if not np.isfinite(residual) or residual > tol:
        raise ConvergenceFailure("stationary solve did not reach tolerance", residual)
    return pi


def boundary_mass(chain: TruncatedChain, pi: np.ndarray) -> float:
    """Stationary mass of states with some queue at the cap."""
    at_cap = np.array([x[-1] == chain.cap for x in chain.states])
    return float(pi[at_cap].sum())


def mean_total(chain: TruncatedChain, pi: np.ndarray) -> float:
    return float(pi @ chain.totals())


def compact_set_threshold(params: SystemParams) -> float:
    """Bound on the total queue outside of which the quadratic drift is negative."""
    if params.rho >= 1.0:
        raise InvalidParameter(f"threshold undefined for rho = {params.rho} >= 1")
    s, lam, mu = params.s, params.lam, params.mu
    return s * (lam + s * mu) / (2.0 * (s * mu - lam))


@dataclass(frozen=True)
class DriftReport:
    state: OrderedState
    drift: float
    in_K: bool


def embedded_drift(x, params: SystemParams, p: AllocationVector) -> DriftReport:
    """One-step drift of sum(x_i^2) for the jump chain of the (idling) process.

    ``in_K`` is False whenever rho >= 1, where the compact set is undefined.
    """
    state = x if isinstance(x, OrderedState) else OrderedState(tuple(x))
    xs = np.asarray(state.queues, dtype=float)
    lam, mu = params.lam, params.mu
    pos = state.pos()
    weighted = float(tie_aware_routing_distribution(state, p) @ xs)
    total_rate = lam + pos * mu
    drift = (2.0 * (lam * weighted - mu * xs.sum()) + lam + pos * mu) / total_rate
    in_K = params.rho < 1.0 and xs.sum() <= compact_set_threshold(params)
    return DriftReport(state, float(drift), bool(in_K))


def _count_ordered(s: int, lo_excl: int, hi: int) -> int:
    # partitions of n into at most s parts, for lo_excl < n <= hi
    table = np.zeros((s + 1, hi + 1), dtype=object)
    table[:, 0] = 1
    for k in range(1, s + 1):
        for n in range(1, hi + 1):
            table[k, n] = table[k - 1, n] + (table[k, n - k] if n >= k else 0)
    return int(sum(table[s, lo_excl + 1:hi + 1]))


def _ordered_with_total(s: int, lo_excl: int, hi: int) -> np.ndarray:
    """All non-decreasing length-s vectors with lo_excl < sum <= hi, as rows."""
    out = []

    def rec(prefix, last, remaining_slots, total):
        if remaining_slots == 0:
            if total > lo_excl:
                out.append(prefix)
            return
        # each remaining entry is >= v, so total + remaining_slots * v <= hi
        v = last
        while total + remaining_slots * v <= hi:
            rec(prefix + (v,), v, remaining_slots - 1, total + v)
            v += 1

    rec((), 0, s, 0)
    return np.array(out, dtype=np.int64).reshape(-1, s)


def verify_negative_drift(params: SystemParams, p: AllocationVector, scan_bound: int) -> bool:
    """Exhaustively check that the drift is negative on every ordered state whose
    total lies in (threshold, scan_bound].

    Intended for gsc-certified ``p``; for other vectors the scan simply reports
    whether a non-negative drift state exists.
    """
    threshold = compact_set_threshold(params)
    if scan_bound <= threshold:
        raise InvalidParameter(f"scan bound {scan_bound} must exceed threshold {threshold:.4g}")
    lo = math.floor(threshold)
    if _count_ordered(params.s, lo, scan_bound) > MAX_SCAN_STATES:
        raise InvalidParameter(f"more than {MAX_SCAN_STATES} states below scan bound {scan_bound}")
    X = _ordered_with_total(params.s, lo, scan_bound)
    if X.size == 0:
        return True
    # within a tie group x is constant, so sum(tie_aware * x) == p @ x
    weighted = X @ p.as_array()
    totals = X.sum(axis=1)
    pos = (X > 0).sum(axis=1)
    lam, mu = params.lam, params.mu
    drift = (2.0 * (lam * weighted - mu * totals) + lam + pos * mu) / (lam + pos * mu)
    return bool(np.all(drift < 0))
