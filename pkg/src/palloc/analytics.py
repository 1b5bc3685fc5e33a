"""Critical traffic intensities and the loss-system quantities behind them."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InternalError, InvalidParameter, NonErgodicError
from .state import SystemParams

DEFAULT_TOL = 1e-9


class Method(enum.Enum):
    CLOSED_FORM = "ClosedForm"
    BISECTION = "Bisection"


@dataclass(frozen=True)
class CriticalValueReport:
    value: float
    method: Method
    residual: float = 0.0

    def __post_init__(self):
        if not self.value > 0 or not self.residual >= 0:
            raise InternalError(f"malformed critical value report: {self}")


@dataclass(frozen=True)
class FrontServerDistribution:
    p0: float
    busy: float
    geometric_ratio: float


def v_cr(p: float, s: int) -> CriticalValueReport:
    """Critical intensity of J2SQ^NI(p): above it the overflow into the s-1 back
    servers outpaces their capacity."""
    if s < 2:
        raise InvalidParameter(f"need s >= 2, got {s}")
    if not 0.0 < p <= 1.0:
        raise InvalidParameter(f"error probability must lie in (0, 1], got {p}")
    value = (s - 1) / (2 * s) * (1.0 + math.sqrt(1.0 + 4.0 / (p * (s - 1))))
    return CriticalValueReport(value, Method.CLOSED_FORM, 0.0)


def erlang_loss(n_servers: int, offered_load: float) -> float:
    """Erlang-B blocking probability via B(n) = a B(n-1) / (n + a B(n-1))."""
    if n_servers < 0 or int(n_servers) != n_servers:
        raise InvalidParameter(f"server count must be a non-negative integer, got {n_servers}")
    if not offered_load > 0:
        raise InvalidParameter(f"offered load must be positive, got {offered_load}")
    b = 1.0
    for n in range(1, int(n_servers) + 1):
        b = offered_load * b / (n + offered_load * b)
    return b


def erlang_distribution(n_servers: int, offered_load: float) -> np.ndarray:
    """Stationary number-busy distribution of an n-server loss system."""
    if n_servers < 0:
        raise InvalidParameter(f"server count must be non-negative, got {n_servers}")
    # log-space weights a^k / k! keep large loads finite
    k = np.arange(n_servers + 1)
    logw = k * math.log(offered_load) - np.array([math.lgamma(i + 1) for i in k])
    w = np.exp(logw - logw.max())
    return w / w.sum()


def _overflow_excess(rho: float, s: int, m: int) -> float:
    """Overflow from m-1 loss servers minus the capacity of the s-m+1 back servers
    (in units of mu)."""
    a = s * rho
    return a * erlang_loss(m - 1, a) - (s - m + 1)


def g_membership(rho: float, s: int, m: int) -> bool:
    if not 2 <= m <= s:
        raise InvalidParameter(f"need 2 <= m <= s, got m={m}, s={s}")
    if not 0.0 < rho < 1.0:
        raise InvalidParameter(f"rho must lie in (0, 1), got {rho}")
    return _overflow_excess(rho, s, m) < 0


def _check_boundary_monotone(s: int, m: int, points: int = 2001) -> None:
    grid = np.linspace(0.0, 1.0, points)[1:-1]
    member = np.array([_overflow_excess(r, s, m) < 0 for r in grid])
    # pattern must be True...True False...False
    flips = np.flatnonzero(member[1:] != member[:-1])
    if len(flips) > 1 or (len(flips) == 1 and not member[0]):
        raise InternalError(f"membership boundary for s={s}, m={m} is not monotone on (0, 1)")


def v_cr_1m(s: int, m: int, tol: float = DEFAULT_TOL) -> CriticalValueReport:
    """Critical intensity of JmSQ^NI: supremum of loads at which m-1 front loss
    servers overflow less than the back servers can absorb."""
    if not 2 <= m <= s:
        raise InvalidParameter(f"need 2 <= m <= s, got m={m}, s={s}")
    if not tol > 0:
        raise InvalidParameter(f"tol must be positive, got {tol}")
    _check_boundary_monotone(s, m)
    lo = (s - m + 1) / s - 1e-9
    if _overflow_excess(lo, s, m) >= 0:
        raise InternalError(f"lower bracket {lo} is not inside the membership set")
    hi = lo
    while _overflow_excess(hi, s, m) < 0:
        hi *= 2.0
        if hi > 10.0:
            raise InternalError(f"no upper bracket below 10 for s={s}, m={m}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _overflow_excess(mid, s, m) < 0:
            lo = mid
        else:
            hi = mid
    value = min(0.5 * (lo + hi), 1.0)
    return CriticalValueReport(value, Method.BISECTION, hi - lo)


def front_server_distribution(params: SystemParams, p: float) -> FrontServerDistribution:
    """Stationary law of the front server during a split of J2SQ^NI(p).

    The front is a birth-death chain with birth rate lam at 0, lam(1-p) elsewhere,
    and death rate mu.
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidParameter(f"error probability must lie in [0, 1], got {p}")
    lam, mu = params.lam, params.mu
    ratio = lam * (1.0 - p) / mu
    if ratio >= 1.0:
        raise NonErgodicError(f"front server not ergodic: lam(1-p) = {lam * (1 - p)} >= mu = {mu}")
    busy = lam / (mu + lam * p)
    return FrontServerDistribution(p0=1.0 - busy, busy=busy, geometric_ratio=ratio)


def overflow_rate(lam: float, mu: float) -> float:
    """Long-run rate at which a stationary single-server loss system rejects arrivals."""
    if not lam > 0 or not mu > 0:
        raise InvalidParameter(f"rates must be positive, got lam={lam}, mu={mu}")
    return lam * lam / (lam + mu)
