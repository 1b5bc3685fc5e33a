"""Allocation vectors and the generalized Schur-convex (gsc) order.

An allocation vector ``p`` routes an arrival to the i-th shortest queue with
probability ``p[i]``. Vectors are compared through their tail sums: ``a`` is
gsc-smaller than ``b`` when every tail sum of ``a`` is at most the matching tail
sum of ``b``. A vector gsc-below the uniform one yields a policy that is stable
for every traffic intensity below one.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidParameter
from .state import OrderedState

TAIL_TOL = 1e-12
SUM_TOL = 1e-12
MAX_PW_SERVERS = 60


@dataclass(frozen=True)
class AllocationVector:
    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(v) for v in self.probs)
        if not probs:
            raise InvalidParameter("allocation vector must have at least one entry")
        if any(not (0.0 <= v <= 1.0) for v in probs):
            raise InvalidParameter(f"entries must lie in [0, 1]: {probs}")
        if abs(sum(probs) - 1.0) > SUM_TOL:
            raise InvalidParameter(f"entries must sum to 1, got {sum(probs)!r}")
        object.__setattr__(self, "probs", probs)

    @property
    def s(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def __len__(self):
        return len(self.probs)

    def __iter__(self):
        return iter(self.probs)

    def __getitem__(self, i):
        return self.probs[i]


class OrderComparison(enum.Enum):
    LESS_OR_EQUAL = "LessOrEqual"
    GREATER_OR_EQUAL = "GreaterOrEqual"
    EQUAL = "Equal"
    INCOMPARABLE = "Incomparable"


def uniform_allocation(s: int) -> AllocationVector:
    if s < 2:
        raise InvalidParameter(f"need s >= 2, got {s}")
    return AllocationVector((1.0 / s,) * s)


def pw_allocation(s: int, d: int) -> AllocationVector:
    """Power-of-d: sample ``d`` servers uniformly, join the shortest sampled.

    Entry i (1-based) is C(s-i, d-1) / C(s, d). The ratio is built by the
    recurrence r_1 = d/s, r_{i+1} = r_i (s-i-d+1)/(s-i), which avoids large
    binomials.
    """
    if s < 1 or s > MAX_PW_SERVERS:
        raise InvalidParameter(f"pw_allocation supports 1 <= s <= {MAX_PW_SERVERS}, got {s}")
    if not 1 <= d <= s:
        raise InvalidParameter(f"need 1 <= d <= s, got d={d}, s={s}")
    probs = [0.0] * s
    r = d / s
    for i in range(1, s - d + 2):
        probs[i - 1] = r
        if i < s:
            r *= (s - i - d + 1) / (s - i)
    # absorb rounding so the vector passes the sum check
    total = sum(probs)
    probs = [v / total for v in probs]
    return AllocationVector(tuple(probs))


def jsq_allocation(s: int) -> AllocationVector:
    return pw_allocation(s, s)


def error_allocation(s: int, m: int, p: float) -> AllocationVector:
    """Mass ``1 - p`` on the shortest queue and ``p`` on the m-th shortest.

    Only ``m = 2`` with general ``p`` and ``p = 1`` with general ``m`` carry
    proven critical values; other (m, p) pairs are an extrapolation.
    """
    if s < 2:
        raise InvalidParameter(f"need s >= 2, got {s}")
    if not 2 <= m <= s:
        raise InvalidParameter(f"need 2 <= m <= s, got m={m}, s={s}")
    if not 0.0 <= p <= 1.0:
        raise InvalidParameter(f"error probability must lie in [0, 1], got {p}")
    probs = [0.0] * s
    probs[0] = 1.0 - p
    probs[m - 1] = p
    return AllocationVector(tuple(probs))


def tail_sums(a: Sequence[float]) -> np.ndarray:
    """``out[k] = sum(a[k:])``."""
    arr = np.asarray(a, dtype=float)
    return np.cumsum(arr[::-1])[::-1]


def gsc_compare(a: Sequence[float], b: Sequence[float], tol: float = TAIL_TOL) -> OrderComparison:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidParameter(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise InvalidParameter("vectors must be non-empty")
    if (a < 0).any() or (b < 0).any():
        raise InvalidParameter("gsc order is defined on non-negative vectors")
    ta, tb = tail_sums(a), tail_sums(b)
    le = bool(np.all(ta <= tb + tol))
    ge = bool(np.all(ta >= tb - tol))
    if le and ge:
        return OrderComparison.EQUAL
    if le:
        return OrderComparison.LESS_OR_EQUAL
    if ge:
        return OrderComparison.GREATER_OR_EQUAL
    return OrderComparison.INCOMPARABLE


def gsc_le(a, b, tol: float = TAIL_TOL) -> bool:
    return gsc_compare(a, b, tol) in (OrderComparison.LESS_OR_EQUAL, OrderComparison.EQUAL)


def satisfies_maximality_condition(p: AllocationVector) -> bool:
    """Sufficient condition for stability on all of [0, 1): ``p`` is gsc-below uniform.

    Necessary as well only within the (1-p, p, 0, ..., 0) family.
    """
    return gsc_le(p.probs, uniform_allocation(p.s).probs)


def hadamard(x: Sequence[float], a: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    if x.shape != a.shape:
        raise InvalidParameter(f"length mismatch: {x.shape} vs {a.shape}")
    return x * a


def tie_groups(queues: Sequence[int]) -> list[tuple[int, int]]:
    """Maximal runs ``(j, k)`` (inclusive, 0-based) of equal values in a sorted sequence."""
    groups = []
    j = 0
    n = len(queues)
    for k in range(1, n + 1):
        if k == n or queues[k] != queues[j]:
            groups.append((j, k - 1))
            j = k
    return groups


def tie_aware_routing_distribution(state, p: AllocationVector) -> np.ndarray:
    """Probability that an arrival joins each sorted position of ``state``.

    Servers sharing a queue length are labeled uniformly at random, so each
    member of a tie group j..k receives the group's average p-mass.
    """
    queues = state.queues if isinstance(state, OrderedState) else tuple(state)
    if len(queues) != p.s:
        raise InvalidParameter(f"state has {len(queues)} queues, allocation has {p.s}")
    if any(a > b for a, b in zip(queues, queues[1:])):
        raise InvalidParameter(f"state {queues} is not sorted")
    probs = p.as_array()
    out = np.empty_like(probs)
    for j, k in tie_groups(queues):
        out[j:k + 1] = probs[j:k + 1].sum() / (k - j + 1)
    return out
