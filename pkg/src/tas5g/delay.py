"""Delay composition, empirical delay distributions and the stochastic 5G bridge.

The bridge is a black box: every packet gets an i.i.d. base delay from a
distribution, then waits FIFO behind earlier packets at a bottleneck whose
service time is ``size * 8 / bottleneck_rate``. Random draws come from
counter-style streams keyed by ``(seed, stream, key...)`` so that the draw for
position k of a burst does not depend on how long the burst is.
"""
from __future__ import annotations

import csv
import enum
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError, DomainError
from .model import MS, SL, Topology, transmission_delay_ns

STREAM_BRIDGE = 1
STREAM_SYNC = 2

DEFAULT_SYNC_ERROR_BOUND_NS = 250
DEFAULT_WARMUP_NS = 180 * 1_000_000_000


# ---------------------------------------------------------------- composition


@dataclass(frozen=True)
class DelayComponents:
    """Per-node delay terms (ns)."""

    que_in: int = 0
    proc: int = 0
    que_out: int = 0

    def __post_init__(self):
        if min(self.que_in, self.proc, self.que_out) < 0:
            raise ConfigError("delay components must be >= 0")

    @property
    def total(self) -> int:
        return self.que_in + self.proc + self.que_out


@dataclass(frozen=True)
class LinkDelay:
    tran: int = 0
    prop: int = 0

    def __post_init__(self):
        if min(self.tran, self.prop) < 0:
            raise ConfigError("link delays must be >= 0")

    @property
    def total(self) -> int:
        return self.tran + self.prop

    @classmethod
    def for_packet(cls, size_bytes: int, rate_bps: float, prop_ns: int = 0) -> "LinkDelay":
        return cls(transmission_delay_ns(size_bytes, rate_bps), prop_ns)


def _node_sum(names, nodes: Mapping[str, DelayComponents]) -> int:
    try:
        return sum(nodes[n].total for n in names)
    except KeyError as e:
        raise ConfigError(f"no delay components for node {e}") from None


def _link_sum(keys, links: Mapping[tuple, LinkDelay]) -> int:
    try:
        return sum(links[k].total for k in keys)
    except KeyError as e:
        raise ConfigError(f"no delay entry for link {e}") from None


def compose_e2e(topology: Topology, nodes: Mapping[str, DelayComponents], links: Mapping[tuple, LinkDelay]) -> int:
    """Sum of node terms over every node plus tran+prop over every link."""
    return _node_sum(topology.nodes, nodes) + _link_sum([l.key for l in topology.links], links)


def compose_5g(topology: Topology, nodes: Mapping[str, DelayComponents], links: Mapping[tuple, LinkDelay]) -> int:
    return _node_sum(topology.fiveg_nodes, nodes) + _link_sum(topology.fiveg_links, links)


def ms_sl_delay(topology: Topology, nodes: Mapping[str, DelayComponents], links: Mapping[tuple, LinkDelay]) -> int:
    """MS output port to SL output port, including SL output queuing."""
    sl = nodes.get(SL)
    if sl is None:
        raise ConfigError("no delay components for node SL")
    return _link_sum(topology.tsn_links, links) + compose_5g(topology, nodes, links) + sl.total


def zwsl_delay(topology: Topology, nodes: Mapping[str, DelayComponents], links: Mapping[tuple, LinkDelay]) -> int:
    """MS output port to the end of SL processing (no SL output queuing)."""
    return ms_sl_delay(topology, nodes, links) - nodes[SL].que_out


def apply_sync_error(true_delay: int, delta: int) -> int:
    return true_delay + delta


def e2e_empirical(topology: Topology, nodes: Mapping[str, DelayComponents], links: Mapping[tuple, LinkDelay], delta: int) -> int:
    """End-to-end delay as measured with an MS/SL clock offset ``delta``."""
    ms = nodes.get(MS)
    if ms is None:
        raise ConfigError("no delay components for node MS")
    return ms.total + apply_sync_error(ms_sl_delay(topology, nodes, links), delta)


# ---------------------------------------------------------------- distributions


@functools.lru_cache(maxsize=256)
def _decimal(p: float) -> Fraction:
    return Fraction(repr(p))


def nearest_rank(p: float, n: int) -> int:
    """Smallest 1-based rank r with r / n >= p (1 when p == 0).

    ``p`` is taken at its decimal value, so 0.1 of 40 samples is rank 4 even
    though the binary float 0.1 is a hair above one tenth.
    """
    if not 0 <= p < 1:
        raise DomainError(f"percentile fraction must be in [0, 1), got {p}")
    return max(1, math.ceil(_decimal(float(p)) * n))


class EmpiricalDistribution:
    """Sorted delay samples (int ns)."""

    def __init__(self, samples):
        a = np.sort(np.asarray(samples, dtype=np.int64).ravel())
        if a.size == 0:
            raise DomainError("empirical distribution needs at least one sample")
        a.setflags(write=False)
        self._s = a

    @property
    def samples(self) -> np.ndarray:
        return self._s

    @property
    def count(self) -> int:
        return int(self._s.size)

    def __len__(self):
        return self.count

    @property
    def min(self) -> int:
        return int(self._s[0])

    @property
    def max(self) -> int:
        return int(self._s[-1])

    @property
    def mean(self) -> float:
        return float(self._s.mean())

    def percentile(self, p: float) -> int:
        return int(self._s[nearest_rank(p, self.count) - 1])

    def cdf(self, x) -> float:
        return float(np.searchsorted(self._s, x, side="right")) / self.count

    def exceedance(self, x) -> float:
        return 1.0 - self.cdf(x)

    def cdf_table(self, points: int = 1000) -> list[tuple[int, float]]:
        """(delay, F(delay)) at ``points`` evenly spaced quantile levels, last one the max."""
        out = []
        for k in range(1, points + 1):
            q = k / points
            v = self.max if q >= 1 else self.percentile(q)
            out.append((v, self.cdf(v)))
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["delay_ns"])
            w.writerows([int(v)] for v in self._s)

    @classmethod
    def from_csv(cls, path) -> "EmpiricalDistribution":
        values = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or header[0].strip() != "delay_ns":
                raise ConfigError(f"{path}: expected a 'delay_ns' header")
            for i, row in enumerate(reader, start=2):
                if not row or not row[0].strip():
                    continue
                try:
                    values.append(int(float(row[0])))
                except ValueError:
                    raise ConfigError(f"{path}:{i}: not a number: {row[0]!r}") from None
        if not values:
            raise ConfigError(f"{path}: no samples")
        return cls(values)

    def __repr__(self):
        return f"EmpiricalDistribution(n={self.count}, min={self.min}, max={self.max})"


def percentile(dist: EmpiricalDistribution, p: float) -> int:
    return dist.percentile(p)


@dataclass(frozen=True)
class UncertaintyInterval:
    lo: int
    hi: int
    p: float = 0.999

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"uncertainty interval lo={self.lo} > hi={self.hi}")

    def to_dict(self) -> dict:
        return {"lo_ns": self.lo, "hi_ns": self.hi, "p": self.p}


def uncertainty_interval(dist: EmpiricalDistribution, p: float) -> UncertaintyInterval:
    return UncertaintyInterval(dist.min, dist.percentile(p), p)


def jitter(interval: UncertaintyInterval) -> int:
    return interval.hi - interval.lo


# ---------------------------------------------------------------- random streams


def stream(seed, *key) -> np.random.Generator:
    """Generator for the stream ``(seed, *key)``; independent of draw counts elsewhere."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(k) & 0xFFFFFFFFFFFFFFFF for k in key]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def uniforms(seed, key: Sequence[int], n: int) -> np.ndarray:
    # Generator.random is one 64-bit draw per value, so prefixes agree across n
    return stream(seed, *key).random(n)


# ---------------------------------------------------------------- bridge model


class BridgeKind(str, enum.Enum):
    EMPIRICAL_BOOTSTRAP = "empirical_bootstrap"
    SHIFTED_LOGNORMAL = "shifted_lognormal"
    CONSTANT = "constant"


@dataclass
class BridgeModel:
    """Black-box delay process between the MS and SL ports.

    ``params`` by kind:
      constant: ``delay_ns``
      empirical_bootstrap: ``samples`` (array of ns); optional ``profile`` name
      shifted_lognormal: ``loc_ns``, ``mu``, ``sigma`` (log-space, ns units)
    ``bottleneck_rate_bps`` of ``inf`` disables FIFO accumulation.
    """

    kind: BridgeKind
    params: dict = field(default_factory=dict)
    bottleneck_rate_bps: float = math.inf
    sync_error_bound_ns: int = DEFAULT_SYNC_ERROR_BOUND_NS
    sync_per_packet: bool = False

    def __post_init__(self):
        self.kind = BridgeKind(self.kind)
        if not self.bottleneck_rate_bps > 0:
            raise ConfigError("bottleneck_rate_bps must be > 0")
        if self.sync_error_bound_ns < 0:
            raise ConfigError("sync_error_bound_ns must be >= 0")
        if self.kind is BridgeKind.CONSTANT:
            if int(self.params.get("delay_ns", -1)) < 0:
                raise ConfigError("constant bridge needs delay_ns >= 0")
        elif self.kind is BridgeKind.EMPIRICAL_BOOTSTRAP:
            s = np.asarray(self.params.get("samples", ()), dtype=np.int64)
            if s.size == 0:
                raise ConfigError("bootstrap bridge needs a non-empty sample pool")
            if s.min() < 0:
                raise ConfigError("bootstrap samples must be >= 0")
            self.params = dict(self.params, samples=np.sort(s))
        else:
            for k in ("loc_ns", "mu", "sigma"):
                if k not in self.params:
                    raise ConfigError(f"shifted lognormal bridge needs {k}")
            if self.params["sigma"] < 0 or self.params["loc_ns"] < 0:
                raise ConfigError("lognormal loc and sigma must be >= 0")
            if self.params["mu"] > 40:
                # exp(40) ns is already ~7 years; larger mu is a ns value passed as log-space
                raise ConfigError("lognormal mu is log-space (log ns); got %r" % self.params["mu"])

    # constructors
    @classmethod
    def constant(cls, delay_ns: int, **kw) -> "BridgeModel":
        return cls(BridgeKind.CONSTANT, {"delay_ns": int(delay_ns)}, **kw)

    @classmethod
    def bootstrap(cls, samples, profile: str | None = None, **kw) -> "BridgeModel":
        params = {"samples": np.asarray(samples, dtype=np.int64)}
        if profile:
            params["profile"] = profile
        return cls(BridgeKind.EMPIRICAL_BOOTSTRAP, params, **kw)

    @classmethod
    def lognormal(cls, loc_ns: float, mu: float, sigma: float, **kw) -> "BridgeModel":
        return cls(BridgeKind.SHIFTED_LOGNORMAL, {"loc_ns": float(loc_ns), "mu": float(mu), "sigma": float(sigma)}, **kw)

    @classmethod
    def fit_lognormal(cls, lo_ns: float, median_ns: float, upper_ns: float, p: float = 0.999, **kw) -> "BridgeModel":
        """Shifted lognormal with location ``lo_ns`` matching a median and the p-quantile."""
        if not lo_ns < median_ns < upper_ns:
            raise ConfigError("need lo < median < upper quantile")
        mu = math.log(median_ns - lo_ns)
        sigma = (math.log(upper_ns - lo_ns) - mu) / float(ndtri(p))
        return cls.lognormal(lo_ns, mu, sigma, **kw)

    def base_delays(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms in [0, 1) to base delays (int ns)."""
        u = np.asarray(u, dtype=float)
        if self.kind is BridgeKind.CONSTANT:
            return np.full(u.shape, int(self.params["delay_ns"]), dtype=np.int64)
        if self.kind is BridgeKind.EMPIRICAL_BOOTSTRAP:
            s = self.params["samples"]
            idx = np.minimum((u * s.size).astype(np.int64), s.size - 1)
            return s[idx]
        loc, mu, sigma = self.params["loc_ns"], self.params["mu"], self.params["sigma"]
        with np.errstate(divide="ignore"):
            v = loc + np.exp(mu + sigma * ndtri(u))
        return np.rint(v).astype(np.int64)

    def service_ns(self, size_bytes: int) -> int:
        return transmission_delay_ns(size_bytes, self.bottleneck_rate_bps)

    def support(self, p: float = 0.999) -> UncertaintyInterval:
        """Uncertainty interval of the base-delay distribution at percentile p."""
        if self.kind is BridgeKind.CONSTANT:
            d = int(self.params["delay_ns"])
            return UncertaintyInterval(d, d, p)
        if self.kind is BridgeKind.EMPIRICAL_BOOTSTRAP:
            return uncertainty_interval(EmpiricalDistribution(self.params["samples"]), p)
        if not 0 <= p < 1:
            raise DomainError(f"percentile fraction must be in [0, 1), got {p}")
        lo = int(round(self.params["loc_ns"]))
        hi = int(self.base_delays(np.array([p]))[0])
        return UncertaintyInterval(lo, max(lo, hi), p)

    def draw_sync_errors(self, seed, key: Sequence[int], n: int) -> np.ndarray:
        b = self.sync_error_bound_ns
        if b == 0:
            return np.zeros(n, dtype=np.int64)
        u = uniforms(seed, (STREAM_SYNC, *key), n)
        return (np.floor(u * (2 * b + 1)).astype(np.int64) - b)

    def to_dict(self, inline_samples: bool = False) -> dict:
        d = {
            "kind": self.kind.value,
            "bottleneck_rate_bps": None if math.isinf(self.bottleneck_rate_bps) else self.bottleneck_rate_bps,
            "sync_error_bound_ns": self.sync_error_bound_ns,
            "sync_per_packet": self.sync_per_packet,
        }
        if self.kind is BridgeKind.EMPIRICAL_BOOTSTRAP:
            if self.params.get("profile") and not inline_samples:
                d["profile"] = self.params["profile"]
            elif self.params.get("samples_file") and not inline_samples:
                d["samples_file"] = str(self.params["samples_file"])
            else:
                d["samples"] = [int(v) for v in self.params["samples"]]
        else:
            d.update({k: v for k, v in self.params.items()})
        return d

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "BridgeModel":
        d = dict(d)
        kind = BridgeKind(d.pop("kind"))
        rate = d.pop("bottleneck_rate_bps", None)
        kw = {
            "bottleneck_rate_bps": math.inf if rate is None else float(rate),
            "sync_error_bound_ns": int(d.pop("sync_error_bound_ns", DEFAULT_SYNC_ERROR_BOUND_NS)),
            "sync_per_packet": bool(d.pop("sync_per_packet", False)),
        }
        if kind is BridgeKind.EMPIRICAL_BOOTSTRAP:
            if "profile" in d:
                from . import profiles

                name = d["profile"]
                return cls.bootstrap(profiles.profile_samples(name), profile=name, **kw)
            if "samples_file" in d:
                path = Path(d["samples_file"])
                if base_dir is not None and not path.is_absolute():
                    path = Path(base_dir) / path
                model = cls.bootstrap(EmpiricalDistribution.from_csv(path).samples, **kw)
                model.params["samples_file"] = d["samples_file"]
                return model
            return cls.bootstrap(d.get("samples", ()), **kw)
        return cls(kind, d, **kw)


class BridgeQueue:
    """FIFO bottleneck state carried across bursts."""

    def __init__(self, model: BridgeModel, busy_until: int | None = None):
        self.model = model
        self.busy_until = busy_until

    def admit(self, release: int, base: int, size_bytes: int) -> int:
        start = release + int(base)
        if self.busy_until is not None and self.busy_until > start:
            start = self.busy_until
        arrival = start + self.model.service_ns(size_bytes)
        self.busy_until = arrival
        return arrival


def sample_bridge_burst(model: BridgeModel, release_times, sizes, rng_seed, busy_until: int | None = None) -> np.ndarray:
    """Arrival times at the SL input for a burst released into the bridge.

    ``rng_seed`` is an int or a tuple ``(seed, *key)``; draw k depends only on
    the key and k.
    """
    release_times = np.asarray(release_times, dtype=np.int64)
    sizes = np.asarray(sizes, dtype=np.int64)
    if release_times.shape != sizes.shape:
        raise ConfigError("release_times and sizes must be parallel")
    n = release_times.size
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if np.any(np.diff(release_times) < 0):
        raise ConfigError("release_times must be non-decreasing")
    seed, *key = rng_seed if isinstance(rng_seed, (tuple, list)) else (rng_seed,)
    bases = model.base_delays(uniforms(seed, (STREAM_BRIDGE, *key), n))
    q = BridgeQueue(model, busy_until)
    return np.array([q.admit(int(r), int(b), int(s)) for r, b, s in zip(release_times, bases, sizes)], dtype=np.int64)
