"""Presets for the five testbed experiments, scaled to desk runs.

Every preset uses 200-byte DC frames (100 bytes in exp4) counted on the wire,
a 1 Gb/s egress, N = floor(W / d_tran) packets per window and bridge pools
from :mod:`tas5g.profiles`. The default run is 66 s with a 6 s warm-up,
about 60k target packets per point; pass ``duration_ns``/``warmup_ns`` to
run the full 33 min / 3 min.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .delay import BridgeModel
from .errors import ConfigError
from .model import FlowSpec, dc_flow
from .profiles import BE_LOADS_MBPS, profile_samples
from .sim import SimConfig, build_config

MS = 1_000_000
US = 1_000
S = 1_000_000_000

PACKET_BYTES = 200
EXP4_PACKET_BYTES = 100
EXP4_BURST_PER_FLOW = 312  # 250 us of 100-byte frames at 1 Gb/s
CYCLE_NS = 30 * MS
WINDOW_NS = 46_500
DEFAULT_DURATION_NS = 66 * S
DEFAULT_WARMUP_NS = 6 * S
DEFAULT_SEED = 1
DEFAULT_OFFSET_NS = 20 * MS

EXP1_WINDOWS_NS = (10_500, 19_500, 28_500, 37_500, 46_500)
EXP2_OFFSETS_NS = tuple(d * MS for d in (5, 10, 15, 20, 25, 30))
EXP3_CYCLES = ((6.0, 9.0), (8.0, 12.0), (10.0, 15.0), (12.5, 18.0), (15.0, 22.5), (17.5, 25.5), (20.0, 30.0), (22.5, 33.0))
EXP3_VALUES = tuple((int(t * MS), int(w * US)) for t, w in EXP3_CYCLES)
EXP4_FLOWS = tuple(range(1, 8))


def bridge_profile(name: str, burst: int) -> BridgeModel:
    """Bootstrap bridge whose output over ``burst``-packet bursts follows profile ``name``."""
    key = f"{name}@{burst}"
    return BridgeModel.bootstrap(profile_samples(key), profile=key)


@dataclass
class ExperimentPreset:
    name: str
    title: str
    axis: str
    values: tuple
    build: Callable[..., SimConfig]
    calibration: Callable[[], dict] | None = None
    aliases: tuple = ()
    notes: str = ""
    defaults: dict = field(default_factory=dict)

    def base_config(self, **overrides) -> SimConfig:
        kw = dict(self.defaults)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return self.build(**kw)

    def label(self, value) -> str:
        if isinstance(value, (tuple, list)):
            return ":".join(str(v) for v in value)
        return str(value)


def _dc(size: int, burst: int, name: str = "DC") -> FlowSpec:
    return dc_flow(size, CYCLE_NS, burst, overhead_bytes=0, name=name)


def _common(flows, window_ns, offset_ns, bridge, sl_gated, duration_ns=DEFAULT_DURATION_NS,
            warmup_ns=DEFAULT_WARMUP_NS, seed=DEFAULT_SEED, length_aware=False, generation="batch",
            bridge_override=None, **kw) -> SimConfig:
    if kw:
        raise ConfigError(f"unknown preset overrides: {sorted(kw)}")
    return build_config(
        flows, CYCLE_NS, window_ns, offset_ns, bridge_override or bridge, duration_ns, warmup_ns, seed,
        sl_gated=sl_gated, length_aware=length_aware, generation=generation,
    )


def _exp1(**kw):
    kw.setdefault("sl_gated", False)
    return _common([_dc(PACKET_BYTES, 29)], WINDOW_NS, kw.pop("offset_ns", 0), bridge_profile("exp1", 29), **kw)


def _exp2(**kw):
    kw.setdefault("sl_gated", True)
    return _common([_dc(PACKET_BYTES, 29)], WINDOW_NS, kw.pop("offset_ns", DEFAULT_OFFSET_NS), bridge_profile("exp1", 29), **kw)


_exp3 = _exp2


def _exp4(**kw):
    kw.setdefault("sl_gated", False)
    kw.setdefault("duration_ns", 12 * S)
    kw.setdefault("warmup_ns", 2 * S)
    flow = dc_flow(EXP4_PACKET_BYTES, CYCLE_NS, EXP4_BURST_PER_FLOW, overhead_bytes=0, name="DC")
    return _common([flow], 250 * US, kw.pop("offset_ns", DEFAULT_OFFSET_NS), bridge_profile("exp4_k1", EXP4_BURST_PER_FLOW), **kw)


def _exp4_calibration():
    return {k: bridge_profile(f"exp4_k{k}", EXP4_BURST_PER_FLOW * k) for k in EXP4_FLOWS}


def _exp5(**kw):
    kw.setdefault("sl_gated", False)
    return _common([_dc(PACKET_BYTES, 29)], WINDOW_NS, kw.pop("offset_ns", 0), bridge_profile("exp5_600", 29), **kw)


def _exp5_calibration():
    return {load: bridge_profile(f"exp5_{load}", 29) for load in BE_LOADS_MBPS}


PRESETS = {
    p.name: p
    for p in (
        ExperimentPreset("exp1", "DC generation rate sweep, TAS at MS only", "window", EXP1_WINDOWS_NS, _exp1,
                         aliases=("exp1_rate_sweep",),
                         notes="rates 350-1550 kb/s give windows 10.5-46.5 us; SL gate always open"),
        ExperimentPreset("exp2", "offset sweep, identical TAS at MS and SL", "offset", EXP2_OFFSETS_NS, _exp2,
                         aliases=("exp2_offset_sweep",)),
        ExperimentPreset("exp3", "network cycle sweep at offset 20 ms", "cycle", EXP3_VALUES, _exp3,
                         aliases=("exp3_cycle_sweep",),
                         notes="W co-scaled with T_nc to hold about 1.55 Mb/s"),
        ExperimentPreset("exp4", "same-priority DC flows, 1 to 7", "same_priority_flows", EXP4_FLOWS, _exp4,
                         calibration=_exp4_calibration, aliases=("exp4_same_priority",),
                         notes="100-byte frames, 250 us of window per flow; sl_gated=True enables TAS at SL"),
        ExperimentPreset("exp5", "BE load sweep, TAS at MS only", "be_load", BE_LOADS_MBPS, _exp5,
                         calibration=_exp5_calibration, aliases=("exp5_be_load",),
                         notes="BE load acts through the calibrated bridge profile per load"),
    )
}


def get_preset(name: str) -> ExperimentPreset:
    if name in PRESETS:
        return PRESETS[name]
    for p in PRESETS.values():
        if name in p.aliases:
            return p
    raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
