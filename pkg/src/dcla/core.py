"""Shared numeric types, counter-based normal streams and chain state.

Every chain owns a ``RandomStream`` keyed by ``(seed, stream_index)``.  The
k-th standard normal drawn from a stream is a pure function of
``(seed, stream_index, k)``: a SplitMix64-style hash of the counter gives a
53-bit uniform which is mapped through the inverse normal CDF.  Because of
this, a block of chains can be advanced in one vectorized call and still
produce exactly the values a chain-by-chain loop would.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_REKEY = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


def _mix64(z):
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _stream_keys(seed, stream_index):
    seed_arr = np.asarray([int(seed) & _MASK64], dtype=np.uint64)
    streams = np.asarray(stream_index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = _mix64(seed_arr ^ _GOLDEN)
        k1 = _mix64(base + (streams + np.uint64(1)) * _GOLDEN)
        k2 = _mix64(k1 ^ _REKEY)
    return k1, k2


def normal_block(seed, stream_indices, counter, d):
    """Standard normals for several streams at once.

    Parameters
    ----------
    seed : int
        64-bit seed shared by all streams.
    stream_indices : array_like of int, shape (n,)
        Stream (chain) indices.
    counter : int
        Draw index of the first value; each stream yields the values with
        draw indices ``counter, ..., counter + d - 1``.
    d : int
        Number of values per stream.

    Returns
    -------
    ndarray, shape (n, d)
    """
    k1, k2 = _stream_keys(seed, np.atleast_1d(stream_indices))
    ctr = np.uint64(counter) + np.arange(d, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _mix64(k1[:, None] + (ctr[None, :] + np.uint64(1)) * _GOLDEN)
        u = _mix64(h ^ k2[:, None])
    unif = ((u >> _S11).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)
    return ndtri(unif)


@dataclass
class RandomStream:
    """One chain's source of i.i.d. N(0, 1) draws.

    ``counter`` is the number of scalar draws consumed so far.
    """

    seed: int
    stream_index: int = 0
    counter: int = 0

    def __post_init__(self):
        if self.stream_index < 0:
            raise ValueError("stream_index must be non-negative")
        if self.counter < 0:
            raise ValueError("counter must be non-negative")

    def normal(self, d):
        z = normal_block(self.seed, [self.stream_index], self.counter, d)[0]
        self.counter += d
        return z


def draw_normal(stream, d):
    """Draw a length-``d`` standard normal vector and advance ``stream``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return stream.normal(d)


def as_point(x):
    """Validate and return ``x`` as a finite float64 vector of length >= 1."""
    arr = np.array(x, dtype=np.float64).reshape(-1)
    if arr.size < 1:
        raise ValueError("a point needs at least one coordinate")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point has non-finite coordinates")
    return arr


@dataclass
class ChainState:
    x: np.ndarray
    step_count: int = 0

    def __post_init__(self):
        self.x = as_point(self.x)
        if self.step_count < 0:
            raise ValueError("step_count must be non-negative")


class SamplerKind(str, enum.Enum):
    ULA = "ULA"
    MOREAU_ULA = "MoreauULA"
    PSGLA = "PSGLA"
    DCLA = "DCLA"
    DCLAS = "DCLAS"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        for kind in cls:
            if kind.value.lower() == str(name).lower():
                return kind
        raise ValueError(f"unknown sampler kind {name!r}")


@dataclass
class SamplerConfig:
    gamma: float
    lam: float = 0.01
    n_chains: int = 1
    n_steps: int = 1000
    seed: int = 0
    kind: SamplerKind = field(default=SamplerKind.DCLA)

    def __post_init__(self):
        self.kind = SamplerKind.parse(self.kind)
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.n_chains < 1:
            raise ValueError("n_chains must be >= 1")
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")
