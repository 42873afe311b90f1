"""Seeded random streams plus samplers, densities and quantiles.

The distribution kinds here are exactly the ones the conditional fiducial
constructions need as primary random variables or as closed-form
conditionals.  Sampling is reproducible: a stream is keyed by
(seed, stream_id) on a counter-based Philox generator, so identical keys
replay identical sequences and distinct stream_ids are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import special as _sp

from .errors import DomainError
from .specfun import ln_gamma

__all__ = [
    "RngStream",
    "Normal",
    "TruncatedNormal",
    "Gamma",
    "ChiSquare",
    "ScaledInvChiSquare",
    "Exponential",
    "StudentT",
    "Dist",
    "sample",
    "log_density",
    "quantile",
]

_LOG_2PI = math.log(2.0 * math.pi)
_U64 = 2**64


class RngStream:
    """Single-owner random stream keyed by (seed, stream_id).

    Wraps ``numpy.random.Philox`` with the 128-bit key set to
    (seed, stream_id); the counter-based design makes distinct keys
    statistically independent streams.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if not (0 <= int(seed) < _U64):
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if not (0 <= int(stream_id) < _U64):
            raise DomainError(f"stream_id must be a 64-bit unsigned integer, got {stream_id}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, stream_id: int) -> "RngStream":
        """Independent stream under the same seed."""
        return RngStream(self.seed, stream_id)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def _require(cond: bool, msg: str):
    if not cond:
        raise DomainError(msg)


def _finite(*vals) -> bool:
    return all(math.isfinite(float(v)) for v in vals)


@dataclass(frozen=True)
class Normal:
    mean: float
    var: float

    def __post_init__(self):
        _require(_finite(self.mean, self.var) and self.var > 0.0,
                 f"Normal requires finite mean and var > 0, got ({self.mean}, {self.var})")


@dataclass(frozen=True)
class TruncatedNormal:
    mean: float
    var: float
    lo: float
    hi: float

    def __post_init__(self):
        _require(_finite(self.mean, self.var, self.lo, self.hi) and self.var > 0.0,
                 f"TruncatedNormal requires finite parameters and var > 0, got {self}")
        _require(self.lo < self.hi, f"TruncatedNormal requires lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class Gamma:
    shape: float
    rate: float

    def __post_init__(self):
        _require(_finite(self.shape, self.rate) and self.shape > 0.0 and self.rate > 0.0,
                 f"Gamma requires shape > 0 and rate > 0, got ({self.shape}, {self.rate})")


@dataclass(frozen=True)
class ChiSquare:
    df: float

    def __post_init__(self):
        _require(_finite(self.df) and self.df > 0.0, f"ChiSquare requires df > 0, got {self.df}")


@dataclass(frozen=True)
class ScaledInvChiSquare:
    df: float
    scale: float

    def __post_init__(self):
        _require(_finite(self.df, self.scale) and self.df > 0.0 and self.scale > 0.0,
                 f"ScaledInvChiSquare requires df > 0 and scale > 0, got ({self.df}, {self.scale})")


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        _require(_finite(self.rate) and self.rate > 0.0,
                 f"Exponential requires rate > 0, got {self.rate}")


@dataclass(frozen=True)
class StudentT:
    df: float
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        _require(_finite(self.df, self.loc, self.scale) and self.df > 0.0 and self.scale > 0.0,
                 f"StudentT requires df > 0 and scale > 0, got {self}")


Dist = Union[Normal, TruncatedNormal, Gamma, ChiSquare, ScaledInvChiSquare, Exponential, StudentT]


@lru_cache(maxsize=512)
def _trunc_bounds(d: TruncatedNormal):
    sd = math.sqrt(d.var)
    a = (d.lo - d.mean) / sd
    b = (d.hi - d.mean) / sd
    pa = float(_sp.ndtr(a))
    pb = float(_sp.ndtr(b))
    if pb <= pa:
        raise DomainError(f"truncation interval [{d.lo}, {d.hi}] carries no probability mass")
    return sd, pa, pb


def sample(dist: Dist, rng: RngStream) -> float:
    """One draw from the named distribution."""
    g = rng.gen
    if isinstance(dist, Normal):
        return float(g.normal(dist.mean, math.sqrt(dist.var)))
    if isinstance(dist, TruncatedNormal):
        # Inversion of the normal CDF restricted to [lo, hi].
        sd, pa, pb = _trunc_bounds(dist)
        u = g.uniform()
        z = _sp.ndtri(pa + u * (pb - pa))
        return float(min(max(dist.mean + sd * z, dist.lo), dist.hi))
    if isinstance(dist, Gamma):
        return float(g.gamma(dist.shape, 1.0 / dist.rate))
    if isinstance(dist, ChiSquare):
        return float(g.chisquare(dist.df))
    if isinstance(dist, ScaledInvChiSquare):
        # Exact transformation df*scale / X with X ~ chi^2(df).
        return float(dist.df * dist.scale / g.chisquare(dist.df))
    if isinstance(dist, Exponential):
        return float(g.exponential(1.0 / dist.rate))
    if isinstance(dist, StudentT):
        return float(dist.loc + dist.scale * g.standard_t(dist.df))
    raise DomainError(f"unknown distribution {dist!r}")


def log_density(dist: Dist, x: float) -> float:
    """Log density at x; -inf outside the support."""
    x = float(x)
    if not math.isfinite(x):
        return -math.inf
    if isinstance(dist, Normal):
        return -0.5 * (_LOG_2PI + math.log(dist.var)) - 0.5 * (x - dist.mean) ** 2 / dist.var
    if isinstance(dist, TruncatedNormal):
        if x < dist.lo or x > dist.hi:
            return -math.inf
        sd, pa, pb = _trunc_bounds(dist)
        base = -0.5 * (_LOG_2PI + math.log(dist.var)) - 0.5 * (x - dist.mean) ** 2 / dist.var
        return base - math.log(pb - pa)
    if isinstance(dist, Gamma):
        if x < 0.0:
            return -math.inf
        if x == 0.0:
            if dist.shape == 1.0:
                return math.log(dist.rate)
            return math.inf if dist.shape < 1.0 else -math.inf
        return (dist.shape * math.log(dist.rate) + (dist.shape - 1.0) * math.log(x)
                - dist.rate * x - ln_gamma(dist.shape))
    if isinstance(dist, ChiSquare):
        return log_density(Gamma(dist.df / 2.0, 0.5), x)
    if isinstance(dist, ScaledInvChiSquare):
        if x <= 0.0:
            return -math.inf
        half_df = dist.df / 2.0
        return (half_df * math.log(half_df * dist.scale) - ln_gamma(half_df)
                - (half_df + 1.0) * math.log(x) - half_df * dist.scale / x)
    if isinstance(dist, Exponential):
        if x < 0.0:
            return -math.inf
        return math.log(dist.rate) - dist.rate * x
    if isinstance(dist, StudentT):
        z = (x - dist.loc) / dist.scale
        return (ln_gamma((dist.df + 1.0) / 2.0) - ln_gamma(dist.df / 2.0)
                - 0.5 * math.log(dist.df * math.pi) - math.log(dist.scale)
                - 0.5 * (dist.df + 1.0) * math.log1p(z * z / dist.df))
    raise DomainError(f"unknown distribution {dist!r}")


def quantile(dist: Dist, p: float) -> float:
    """Inverse CDF at probability p, 0 < p < 1."""
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"quantile requires 0 < p < 1, got {p}")
    if isinstance(dist, Normal):
        return float(dist.mean + math.sqrt(dist.var) * _sp.ndtri(p))
    if isinstance(dist, TruncatedNormal):
        sd, pa, pb = _trunc_bounds(dist)
        return float(dist.mean + sd * _sp.ndtri(pa + p * (pb - pa)))
    if isinstance(dist, Gamma):
        return float(_sp.gammaincinv(dist.shape, p) / dist.rate)
    if isinstance(dist, ChiSquare):
        return float(2.0 * _sp.gammaincinv(dist.df / 2.0, p))
    if isinstance(dist, ScaledInvChiSquare):
        return float(dist.df * dist.scale / quantile(ChiSquare(dist.df), 1.0 - p))
    if isinstance(dist, Exponential):
        return float(-math.log1p(-p) / dist.rate)
    if isinstance(dist, StudentT):
        return float(dist.loc + dist.scale * _sp.stdtrit(dist.df, p))
    raise DomainError(f"unknown distribution {dist!r}")
