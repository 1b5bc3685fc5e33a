from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import InvalidParameter


@dataclass(frozen=True)
class SystemParams:
    """Homogeneous parallel-server system: ``s`` servers, Poisson(``lam``) arrivals,
    exponential(``mu``) service at every server."""

    s: int
    lam: float
    mu: float

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 2:
            raise InvalidParameter(f"need s >= 2 servers, got {self.s!r}")
        if not self.lam > 0:
            raise InvalidParameter(f"arrival rate must be positive, got {self.lam!r}")
        if not self.mu > 0:
            raise InvalidParameter(f"service rate must be positive, got {self.mu!r}")
        object.__setattr__(self, "s", int(self.s))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def rho(self) -> float:
        return self.lam / (self.s * self.mu)

    @classmethod
    def from_rho(cls, s: int, rho: float, mu: float = 1.0) -> "SystemParams":
        return cls(s, rho * s * mu, mu)


@dataclass(frozen=True)
class OrderedState:
    """Queue lengths sorted in non-decreasing order."""

    queues: tuple[int, ...]

    def __post_init__(self):
        q = tuple(int(v) for v in self.queues)
        if not q:
            raise InvalidParameter("empty state")
        if any(v < 0 for v in q):
            raise InvalidParameter(f"negative queue length in {q}")
        if any(a > b for a, b in zip(q, q[1:])):
            raise InvalidParameter(f"state {q} is not sorted")
        object.__setattr__(self, "queues", q)

    @classmethod
    def of(cls, values: Iterable[int]) -> "OrderedState":
        """Sort arbitrary queue lengths into an ordered state."""
        return cls(tuple(sorted(int(v) for v in values)))

    @property
    def s(self) -> int:
        return len(self.queues)

    def pos(self) -> int:
        return sum(1 for v in self.queues if v > 0)

    def total(self) -> int:
        return sum(self.queues)

    def __iter__(self):
        return iter(self.queues)

    def __len__(self):
        return len(self.queues)

    def __getitem__(self, i):
        return self.queues[i]
