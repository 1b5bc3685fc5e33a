"""Named, independent uniform streams derived from one root seed.

Each stream is a PCG64 generator spawned from ``SeedSequence(seed)`` in the
fixed order of ``STREAM_NAMES``. Exponentials are drawn by inverse transform,
``-log1p(-u) / rate``, so a path can be reproduced from the uniforms alone.
"""
from __future__ import annotations

import numpy as np

from ..errors import InvalidParameter

STREAM_NAMES = ("arrivals", "service", "routing", "ties")
REFILL = 1 << 16


def check_seed(seed: int) -> int:
    if int(seed) != seed or not 0 <= seed < 2**64:
        raise InvalidParameter(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def spawn_generators(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(check_seed(seed)).spawn(len(STREAM_NAMES))
    return {name: np.random.Generator(np.random.PCG64(c)) for name, c in zip(STREAM_NAMES, children)}


class UniformBuffer:
    """Block-drawn uniforms with carry-over, so the consumed sequence does not
    depend on the block size."""

    def __init__(self, gen: np.random.Generator, block: int = REFILL):
        self.gen = gen
        self.block = block
        self.buf = np.empty(0)
        self.pos = 0

    def ensure(self, n: int) -> None:
        if self.buf.size - self.pos < n:
            fresh = self.gen.random(max(n, self.block))
            self.buf = np.concatenate([self.buf[self.pos:], fresh])
            self.pos = 0


def make_buffers(seed: int, block: int = REFILL) -> dict[str, UniformBuffer]:
    return {name: UniformBuffer(g, block) for name, g in spawn_generators(seed).items()}
