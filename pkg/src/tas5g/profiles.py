"""Builtin bridge delay profiles.

These are synthetic pools, calibrated (not measured) to published summary
statistics of a 5G testbed: minimum, mean, 99.9th percentile and maximum of
the ZWSL delay. Pools are built deterministically from shifted-lognormal
quantiles, so the percentile statistics hold exactly.

A profile name may carry a burst size, ``"exp1@29"``: that is the base-delay
pool which, pushed through the FIFO bridge with bursts of 29 back-to-back
packets, reproduces the named profile as its output distribution.
"""
from __future__ import annotations

import functools
import math

import numpy as np
from scipy.special import ndtri

from .delay import nearest_rank
from .errors import ConfigError

MS_NS = 1_000_000
POOL_SIZE = 100_000
P999 = 0.999

# (min, mean, p99.9, max) in ms
EXP1_STATS = (4.5, 6.8, 15.0, 18.41)
EXP4_MEANS = (10.27, 17.79)  # 1 flow, 7 flows
EXP4_P999 = (18.0, 22.0)
EXP4_MAX_ABOVE_P999 = 1.5
BE_LOADS_MBPS = (600, 650, 700, 750, 800, 850, 900, 950, 980)
EXP5_STATS = {
    600: EXP1_STATS,
    650: (4.5, 6.9, 15.0, 18.6),
    700: (4.5, 7.5, 20.5, 24.0),
    750: (4.5, 8.0, 21.5, 26.0),
    800: (4.5, 12.0, 52.0, 60.0),
    850: (4.5, 60.0, 300.0, 350.0),
    900: (4.5, 120.0, 500.0, 560.0),
    950: (4.5, 200.0, 700.0, 760.0),
    980: (4.5, 260.0, 780.0, 800.0),
}


def lognormal_shape(lo: float, mean: float, upper: float, p: float = P999) -> tuple[float, float]:
    """(sigma, scale) of ``lo + scale * LogNormal(0, sigma)`` with the given mean and p-quantile."""
    z = float(ndtri(p))
    if not lo < mean < upper:
        raise ConfigError("need lo < mean < upper quantile")
    # z*s - s^2/2 = log((upper - lo) / (mean - lo)); take the smaller root
    rhs = math.log((upper - lo) / (mean - lo))
    disc = z * z - 2 * rhs
    if disc < 0:
        raise ConfigError("tail too heavy for a lognormal with this mean")
    sigma = z - math.sqrt(disc)
    return sigma, (upper - lo) / math.exp(z * sigma)


def calibrated_pool(lo_ms, mean_ms, p999_ms, max_ms, n: int = POOL_SIZE, p: float = P999) -> np.ndarray:
    """Sorted int-ns pool with min, p-percentile (nearest rank) and max exactly as given.

    The body up to the percentile rank follows lognormal quantiles; the tail
    above it is linear up to the maximum.
    """
    rank = nearest_rank(p, n)
    sigma, scale = lognormal_shape(lo_ms, mean_ms, p999_ms, p)
    u = p * np.arange(rank) / (rank - 1)
    with np.errstate(divide="ignore"):
        body = lo_ms + scale * np.exp(sigma * ndtri(u))
    body[0], body[-1] = lo_ms, p999_ms
    tail = p999_ms + (max_ms - p999_ms) * np.arange(1, n - rank + 1) / (n - rank)
    pool = np.rint(np.concatenate([body, tail]) * MS_NS).astype(np.int64)
    return np.maximum.accumulate(pool)


def _burst_level(u: np.ndarray, burst: int) -> np.ndarray:
    # mean over k = 1..burst of u**k: the output CDF level when the k-th packet
    # of a burst sees the maximum of k base draws
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    one = u >= 1.0
    uu = u[~one]
    out[~one] = uu * (1 - uu**burst) / ((1 - uu) * burst)
    out[one] = 1.0
    return out


def burst_base_pool(target: np.ndarray, burst: int, n: int | None = None) -> np.ndarray:
    """Base-delay pool whose FIFO running maximum over a burst matches ``target``.

    Ignores the few-microsecond spacing between packets of a burst, which is
    small next to millisecond-scale delays.
    """
    target = np.sort(np.asarray(target, dtype=np.int64))
    if burst <= 1:
        return target.copy()
    n = n or target.size
    levels = _burst_level((np.arange(n) + 0.5) / n, burst)
    idx = np.minimum((levels * target.size).astype(np.int64), target.size - 1)
    pool = target[idx]
    pool[0] = target[0]
    return pool


def exp4_stats(flows: int) -> tuple[float, float, float, float]:
    if not 1 <= flows <= 7:
        raise ConfigError("exp4 profiles cover 1..7 flows")
    f = (flows - 1) / 6
    mean = EXP4_MEANS[0] + f * (EXP4_MEANS[1] - EXP4_MEANS[0])
    p999 = EXP4_P999[0] + f * (EXP4_P999[1] - EXP4_P999[0])
    return 4.5, mean, p999, p999 + EXP4_MAX_ABOVE_P999


def _stats_for(name: str):
    if name == "exp1":
        return EXP1_STATS
    if name == "exp4":
        return exp4_stats(7)
    if name.startswith("exp4_k"):
        return exp4_stats(int(name[6:]))
    if name.startswith("exp5_"):
        load = int(name[5:])
        if load not in EXP5_STATS:
            raise ConfigError(f"no exp5 calibration for {load} Mb/s")
        return EXP5_STATS[load]
    raise ConfigError(f"unknown bridge profile {name!r}")


@functools.lru_cache(maxsize=64)
def _cached(name: str) -> np.ndarray:
    base, _, burst = name.partition("@")
    try:
        pool = calibrated_pool(*_stats_for(base))
        if burst:
            pool = burst_base_pool(pool, int(burst))
    except ValueError as e:
        raise ConfigError(f"bad profile name {name!r}: {e}") from None
    pool.setflags(write=False)
    return pool


def profile_samples(name: str) -> np.ndarray:
    """Sample pool (int ns) of a builtin profile."""
    return _cached(name)


def profile_names() -> list[str]:
    return ["exp1", "exp4"] + [f"exp4_k{k}" for k in range(1, 8)] + [f"exp5_{l}" for l in BE_LOADS_MBPS]
