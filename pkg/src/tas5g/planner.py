"""Offset and network-cycle planning for a DC flow crossing the 5G bridge.

All quantities are integer ns. ``interval`` is the uncertainty interval of the
ZWSL delay, ``W`` the DC window and ``T`` the network cycle, identical at both
switches.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from .delay import EmpiricalDistribution, UncertaintyInterval, jitter, uncertainty_interval
from .errors import ConfigError, DomainError, InfeasiblePlanError
from .model import FlowClass, FlowSpec, Link


class Scenario(str, enum.Enum):
    S1 = "S1_early_arrival"
    S2 = "S2_unused_first_window"
    S3 = "S3_partial_arrival"
    S4 = "S4_delayed_arrival"

    @property
    def deterministic(self) -> bool:
        return self in (Scenario.S1, Scenario.S2)

    @property
    def short(self) -> str:
        return self.value[:2]


def min_offset(interval: UncertaintyInterval) -> int:
    """Smallest offset that lets the p-fraction of packets reach the SL first."""
    return interval.hi


def network_cycle_offset(offset_ns: int, cycle_ns: int) -> int:
    if cycle_ns <= 0:
        raise DomainError("network cycle must be > 0")
    if offset_ns < 0:
        raise DomainError("offset must be >= 0")
    return offset_ns if offset_ns < cycle_ns else offset_ns % cycle_ns


def check_c1_c2(cycle_offset: int, W: int, T: int, interval: UncertaintyInterval) -> tuple[bool, bool]:
    # burst fully queued before the window at δ' opens; that window closed
    # before the next burst can arrive
    return interval.hi <= cycle_offset, cycle_offset + W <= interval.lo + T


def check_c3_c4(cycle_offset: int, W: int, T: int, interval: UncertaintyInterval) -> tuple[bool, bool]:
    # same, but targeting the window one cycle later
    return interval.hi <= cycle_offset + T, cycle_offset + W <= interval.lo


def feasibility(T: int, W: int, jit: int) -> bool:
    if not T > W >= 0:
        raise DomainError(f"need T_nc > W >= 0, got T_nc={T}, W={W}")
    return T - W >= jit


def classify(cycle_offset: int, W: int, T: int, interval: UncertaintyInterval) -> Scenario:
    if not 0 <= cycle_offset < T:
        raise DomainError(f"cycle offset {cycle_offset} outside [0, {T})")
    if not 0 <= W < T:
        raise DomainError(f"window {W} must satisfy 0 <= W < T_nc={T}")
    if not feasibility(T, W, jitter(interval)):
        return Scenario.S4
    lo, hi = interval.lo, interval.hi
    if lo + T - W >= cycle_offset >= hi:
        return Scenario.S1
    if lo - W >= cycle_offset >= hi - T:
        return Scenario.S2
    return Scenario.S3


_REASONS = {
    Scenario.S1: "every packet reaches the SL before the window at the cycle offset, which closes before the next burst can arrive",
    Scenario.S2: "the window at the cycle offset closes before the earliest arrival; the whole burst leaves in the following window",
    Scenario.S3: "arrivals straddle a window boundary, so a burst is split over two SL windows",
    Scenario.S4: "the delay spread exceeds T_nc - W, so no offset keeps a burst in a single window",
}


@dataclass(frozen=True)
class OffsetPlan:
    offset_ns: int
    cycle_offset_ns: int
    percentile: float
    interval: UncertaintyInterval
    window_ns: int
    network_cycle_ns: int
    feasible: bool
    scenario: Scenario
    conditions: dict

    def __post_init__(self):
        if not 0 <= self.cycle_offset_ns < self.network_cycle_ns:
            raise ConfigError("cycle offset outside [0, T_nc)")
        if self.cycle_offset_ns != network_cycle_offset(self.offset_ns, self.network_cycle_ns):
            raise ConfigError("cycle offset inconsistent with offset mod T_nc")
        if self.scenario.deterministic and not self.feasible:
            raise ConfigError("deterministic scenario on an infeasible plan")

    @property
    def jitter_ns(self) -> int:
        return jitter(self.interval)

    @property
    def reason(self) -> str:
        return _REASONS[self.scenario]

    def to_dict(self) -> dict:
        return {
            "offset_ns": self.offset_ns,
            "cycle_offset_ns": self.cycle_offset_ns,
            "percentile": self.percentile,
            "interval": self.interval.to_dict(),
            "jitter_ns": self.jitter_ns,
            "window_ns": self.window_ns,
            "network_cycle_ns": self.network_cycle_ns,
            "feasible": self.feasible,
            "conditions": dict(self.conditions),
            "scenario": self.scenario.value,
            "reason": self.reason,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "OffsetPlan":
        iv = d["interval"]
        return cls(
            offset_ns=int(d["offset_ns"]),
            cycle_offset_ns=int(d["cycle_offset_ns"]),
            percentile=float(d["percentile"]),
            interval=UncertaintyInterval(int(iv["lo_ns"]), int(iv["hi_ns"]), float(iv["p"])),
            window_ns=int(d["window_ns"]),
            network_cycle_ns=int(d["network_cycle_ns"]),
            feasible=bool(d["feasible"]),
            scenario=Scenario(d["scenario"]),
            conditions={k: bool(v) for k, v in d["conditions"].items()},
        )


def make_plan(offset_ns: int, W: int, T: int, interval: UncertaintyInterval) -> OffsetPlan:
    """Evaluate every condition for a given offset, window and cycle."""
    dp = network_cycle_offset(offset_ns, T)
    c1, c2 = check_c1_c2(dp, W, T, interval)
    c3, c4 = check_c3_c4(dp, W, T, interval)
    return OffsetPlan(
        offset_ns=offset_ns,
        cycle_offset_ns=dp,
        percentile=interval.p,
        interval=interval,
        window_ns=W,
        network_cycle_ns=T,
        feasible=feasibility(T, W, jitter(interval)),
        scenario=classify(dp, W, T, interval),
        conditions={"C1": c1, "C2": c2, "C3": c3, "C4": c4},
    )


def recommend(
    dist: EmpiricalDistribution,
    flow: FlowSpec,
    link: Link,
    p: float = 0.999,
    margin: int | None = None,
    max_cycle_ns: int | None = None,
    cycle_ns: int | None = None,
) -> OffsetPlan:
    """Pick W, T_nc and the offset for ``flow`` from its ZWSL delay samples.

    W is the smallest window holding the burst. Unless ``cycle_ns`` forces a
    cycle, T_nc is the smallest multiple of the application cycle leaving
    room for the jitter and exceeding the upper delay bound, and the offset is
    the upper bound plus ``margin`` (default half the jitter), capped so the
    window still closes before the next burst's earliest arrival.
    """
    if flow.traffic_class is not FlowClass.DC:
        raise ConfigError("recommend plans DC flows only")
    interval = uncertainty_interval(dist, p)
    jit = jitter(interval)
    if margin is None:
        margin = jit // 2
    if margin < 0:
        raise DomainError("margin must be >= 0")
    W = flow.burst_count * flow.tx_ns(link.capacity_bps)

    if cycle_ns is not None:
        if W >= cycle_ns:
            raise InfeasiblePlanError(f"window {W} ns does not fit in T_nc={cycle_ns} ns", "window_bounds")
        return make_plan(min_offset(interval) + margin, W, cycle_ns, interval)

    T_app = flow.app_cycle_ns
    need = max(jit + W, interval.hi + 1, W + 1)
    T = -(-need // T_app) * T_app
    if max_cycle_ns is not None and T > max_cycle_ns:
        if jit + W > max_cycle_ns:
            raise InfeasiblePlanError(
                f"T_nc - W >= jitter needs T_nc >= {jit + W} ns, above the maximum {max_cycle_ns} ns", "feasibility"
            )
        if W >= max_cycle_ns:
            raise InfeasiblePlanError(f"window {W} ns does not fit below {max_cycle_ns} ns", "window_bounds")
        raise InfeasiblePlanError(
            f"C1 needs a cycle above the delay bound {interval.hi} ns; the smallest multiple of "
            f"T_app={T_app} ns is {T} ns, above the maximum {max_cycle_ns} ns",
            "C1",
        )
    offset = min(min_offset(interval) + margin, interval.lo + T - W, T - 1)
    return make_plan(offset, W, T, interval)
