"""Discrete-event simulation of MS -> 5G bridge -> SL for DC traffic.

One run is single threaded. Events sit in a heap keyed by
``(time, node rank, packet seq, kind)`` so simultaneous events always resolve
the same way. DC packets are the only simulated traffic; best-effort load
enters through the bridge calibration.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import heapq
import json
import logging
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .delay import (
    STREAM_BRIDGE,
    STREAM_SYNC,
    BridgeModel,
    BridgeQueue,
    EmpiricalDistribution,
    stream,
    uncertainty_interval,
)
from .errors import ConfigError
from .model import (
    DEFAULT_GUARD_BAND_NS,
    QUEUE_DC,
    QUEUE_PTP,
    FlowClass,
    FlowSpec,
    GclConfig,
    Topology,
    WindowAssignment,

    WindowVerdict,
    assign_window,
    check_window_bounds,
    default_topology,
    earliest_start,
    make_gcl,
    open_gcl,
    window_histogram,
    window_instance,
)
from .planner import Scenario, classify, network_cycle_offset

log = logging.getLogger(__name__)

DEFAULT_SL_QUEUE_BYTES = 6600
GENERATION_MODES = ("batch", "continuous")
AXES = ("window", "offset", "cycle", "same_priority_flows", "be_load")
SEED_MODES = ("common", "derived")
RECORD_COLUMNS = (
    "seq", "flow", "t_ms_out_ns", "t_sl_in_ns", "t_sl_out_ns",
    "d_emp_ns", "d_zwsl_ns", "cycle_index", "window_index", "dropped",
)

# node ranks for event tie-breaking
_RANK_MS, _RANK_SL = 0, 2
# event kinds, in tie-break order
_EV_BURST, _EV_GEN, _EV_MS_START, _EV_SL_ARRIVE, _EV_SL_START = range(5)


@dataclass
class SimConfig:
    """Everything a run needs; validated on construction.

    ``length_aware`` makes both ports refuse to start a frame that would not
    finish before its window closes. ``generation`` is ``"batch"`` (each DC
    flow queues N packets at every application-cycle start) or
    ``"continuous"`` (one packet every T_app / N).
    """

    flows: tuple
    ms_gcl: GclConfig
    sl_gcl: GclConfig
    offset_ns: int
    bridge: BridgeModel
    duration_ns: int
    warmup_ns: int = 0
    seed: int = 0
    topology: Topology = field(default_factory=default_topology)
    sl_queue_capacity_bytes: int = DEFAULT_SL_QUEUE_BYTES
    length_aware: bool = True
    generation: str = "batch"
    sl_proc_ns: int = 0
    sl_egress_bps: float | None = None
    be_load_mbps: float | None = None
    label: str = ""

    def __post_init__(self):
        self.flows = tuple(self.flows)
        problems = self.problems()
        if problems:
            raise ConfigError("; ".join(problems))

    # -- derived
    @property
    def target(self) -> FlowSpec:
        return self.flows[0]

    @property
    def dc_flows(self) -> tuple:
        return tuple(f for f in self.flows if f.traffic_class is FlowClass.DC)

    @property
    def cycle_ns(self) -> int:
        return self.ms_gcl.network_cycle_ns

    @property
    def ms_rate_bps(self) -> float:
        return self.topology.ms_egress.capacity_bps

    @property
    def sl_rate_bps(self) -> float:
        return self.ms_rate_bps if self.sl_egress_bps is None else self.sl_egress_bps

    @property
    def sl_gated(self) -> bool:
        return not self.sl_gcl.always_open(QUEUE_DC)

    def problems(self) -> list[str]:
        out = []
        if not self.duration_ns > self.warmup_ns >= 0:
            out.append("need duration_ns > warmup_ns >= 0")
        if self.offset_ns < 0:
            out.append("offset_ns must be >= 0")
        if self.sl_queue_capacity_bytes <= 0:
            out.append("sl_queue_capacity_bytes must be > 0")
        if self.sl_proc_ns < 0:
            out.append("sl_proc_ns must be >= 0")
        if self.sl_egress_bps is not None and not self.sl_egress_bps > 0:
            out.append("sl_egress_bps must be > 0")
        if self.generation not in GENERATION_MODES:
            out.append(f"generation must be one of {GENERATION_MODES}")
        if not self.flows:
            out.append("at least one flow is required")
            return out
        if self.flows[0].traffic_class is not FlowClass.DC:
            out.append("the first flow is the target and must be DC")
        names = [f.name for f in self.flows]
        if len(set(names)) != len(names):
            out.append("flow names must be unique")
        T = self.ms_gcl.network_cycle_ns
        if self.sl_gcl.network_cycle_ns != T:
            out.append("MS and SL must share one network cycle")
        for tag, gcl in (("ms_gcl", self.ms_gcl), ("sl_gcl", self.sl_gcl)):
            try:
                gcl.window(QUEUE_DC)
            except ConfigError:
                out.append(f"{tag} has no DC window")
        if out:
            return out
        want = self.ms_gcl.base_time_ns + network_cycle_offset(self.offset_ns, T)
        if self.sl_gcl.base_time_ns != want:
            out.append(
                f"sl_gcl.base_time_ns must be ms base + offset mod T_nc = {want}, got {self.sl_gcl.base_time_ns}"
            )
        if self.ms_gcl.always_open(QUEUE_DC):
            out.append("the MS DC gate must be scheduled")
            return out
        verdict = check_window_bounds(self.target, self.ms_gcl, self.topology.ms_egress, QUEUE_DC)
        if verdict is not WindowVerdict.OK:
            out.append(f"MS window bound check failed for the target flow: {verdict.value}")
        W = self.ms_gcl.window(QUEUE_DC).length
        burst = sum(f.burst_count * f.tx_ns(self.ms_rate_bps) for f in self.dc_flows)
        if burst > W:
            out.append(f"combined DC burst needs {burst} ns but the MS window is {W} ns")
        if self.length_aware and self.sl_gated:
            W_sl = self.sl_gcl.window(QUEUE_DC).length
            if any(f.tx_ns(self.sl_rate_bps) > W_sl for f in self.dc_flows):
                out.append("a DC frame does not fit the SL window")
        if any(f.wire_bytes > self.sl_queue_capacity_bytes for f in self.dc_flows):
            out.append("a DC frame exceeds the SL queue capacity")
        return out

    # -- serialization
    def to_dict(self) -> dict:
        return {
            "topology": self.topology.to_dict(),
            "flows": [f.to_dict() for f in self.flows],
            "ms_gcl": self.ms_gcl.to_dict(),
            "sl_gcl": self.sl_gcl.to_dict(),
            "offset_ns": self.offset_ns,
            "bridge": self.bridge.to_dict(),
            "duration_ns": self.duration_ns,
            "warmup_ns": self.warmup_ns,
            "seed": self.seed,
            "sl_queue_capacity_bytes": self.sl_queue_capacity_bytes,
            "length_aware": self.length_aware,
            "generation": self.generation,
            "sl_proc_ns": self.sl_proc_ns,
            "sl_egress_bps": self.sl_egress_bps,
            "be_load_mbps": self.be_load_mbps,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "SimConfig":
        problems = config_problems(d, base_dir)
        if problems:
            raise ConfigError("; ".join(problems))
        return _from_dict(d, base_dir)

    def replace(self, **kw) -> "SimConfig":
        return dataclasses.replace(self, **kw)


_SCALARS = {
    "offset_ns": int, "duration_ns": int, "warmup_ns": int, "seed": int,
    "sl_queue_capacity_bytes": int, "length_aware": bool, "generation": str,
    "sl_proc_ns": int, "label": str,
}


def _parts(d: dict, base_dir, problems: list):
    parts = {}

    def attempt(key, fn):
        try:
            parts[key] = fn()
        except (ConfigError, KeyError, TypeError, ValueError) as e:
            problems.append(f"{key}: {e}")

    attempt("topology", lambda: Topology.from_dict(d["topology"]) if "topology" in d else default_topology())
    attempt("flows", lambda: tuple(FlowSpec.from_dict(f) for f in d["flows"]))
    attempt("ms_gcl", lambda: GclConfig.from_dict(d["ms_gcl"]))
    attempt("bridge", lambda: BridgeModel.from_dict(d["bridge"], base_dir))
    for k, conv in _SCALARS.items():
        if k in d:
            attempt(k, lambda k=k, conv=conv: conv(d[k]))
    for k in ("sl_egress_bps", "be_load_mbps"):
        if d.get(k) is not None:
            attempt(k, lambda k=k: float(d[k]))
    for k in ("offset_ns", "duration_ns"):
        if k not in d:
            problems.append(f"{k}: missing")
    if "sl_gcl" in d:
        attempt("sl_gcl", lambda: GclConfig.from_dict(d["sl_gcl"]))
    elif "ms_gcl" in parts and "offset_ns" in parts:
        # derive the SL schedule from the MS one
        ms = parts["ms_gcl"]
        base = ms.base_time_ns + network_cycle_offset(parts["offset_ns"], ms.network_cycle_ns)
        if d.get("sl_gated", True):
            parts["sl_gcl"] = ms.shifted(base)
        else:
            parts["sl_gcl"] = open_gcl(ms.network_cycle_ns, base)
    unknown = set(d) - set(SimConfig.__dataclass_fields__) - {"sl_gated"}
    for k in sorted(unknown):
        problems.append(f"{k}: unknown field")
    return parts


def config_problems(d: dict, base_dir=None) -> list[str]:
    """Every problem found in a config document, not just the first."""
    problems: list[str] = []
    parts = _parts(d, base_dir, problems)
    if problems:
        return problems
    try:
        SimConfig(**parts)
    except ConfigError as e:
        problems.extend(str(e).split("; "))
    return problems


def _from_dict(d, base_dir):
    problems: list[str] = []
    parts = _parts(d, base_dir, problems)
    return SimConfig(**parts)


def load_config(path) -> SimConfig:
    """Read a JSON config; a run's summary.json is accepted too (its ``config`` block)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"{path}: {e}") from None
    if "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]
    return SimConfig.from_dict(doc, base_dir=path.parent)


def save_config(config: SimConfig, path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2))


def layout_like(gcl: GclConfig, cycle_ns: int, window_ns: int, base_time_ns: int) -> GclConfig:
    """Same layout as ``gcl`` (open or guard band/DC/PTP/BE) with a new cycle and DC window."""
    if gcl.always_open(QUEUE_DC):
        return open_gcl(cycle_ns, base_time_ns)
    try:
        ptp = gcl.window(QUEUE_PTP).length
    except ConfigError:
        ptp = 0
    return make_gcl(cycle_ns, window_ns, gcl.guard_band_ns, ptp, base_time_ns)


def build_config(
    flows: Sequence[FlowSpec],
    cycle_ns: int,
    window_ns: int,
    offset_ns: int,
    bridge: BridgeModel,
    duration_ns: int,
    warmup_ns: int = 0,
    seed: int = 0,
    sl_gated: bool = True,
    guard_band_ns: int = DEFAULT_GUARD_BAND_NS,
    ptp_window_ns: int = 160,
    ms_base_ns: int = 0,
    **kw,
) -> SimConfig:
    """Config with the testbed GCL layout at both switches and the SL base derived from the offset."""
    ms = make_gcl(cycle_ns, window_ns, guard_band_ns, ptp_window_ns, ms_base_ns)
    sl_base = ms_base_ns + network_cycle_offset(offset_ns, cycle_ns)
    sl = ms.shifted(sl_base) if sl_gated else open_gcl(cycle_ns, sl_base)
    return SimConfig(tuple(flows), ms, sl, offset_ns, bridge, duration_ns, warmup_ns, seed, **kw)


# ---------------------------------------------------------------- records


@dataclass(slots=True)
class PacketRecord:
    seq: int
    flow: str
    t_ms_out: int
    t_sl_in: int
    t_sl_out: int | None
    d_emp: int | None
    d_zwsl: int
    assignment: WindowAssignment | None
    dropped: bool
    delta: int = 0
    in_window: bool = True

    def row(self) -> list:
        a = self.assignment
        return [
            self.seq, self.flow, self.t_ms_out, self.t_sl_in,
            "" if self.t_sl_out is None else self.t_sl_out,
            "" if self.d_emp is None else self.d_emp,
            self.d_zwsl,
            "" if a is None else a.cycle_index,
            "" if a is None else a.window_index,
            int(self.dropped),
        ]


@dataclass
class SimResult:
    config: SimConfig
    records: list
    warmup_records: list
    window_histogram: dict
    drops: int
    delays: EmpiricalDistribution | None
    zwsl: EmpiricalDistribution | None
    counters: dict
    sync_error_ns: int | None
    first_ms_out: int | None
    outside_window: int = 0

    def target_records(self, departed_only: bool = True) -> list:
        name = self.config.target.name
        return [r for r in self.records if r.flow == name and (not departed_only or not r.dropped)]

    @property
    def all_records(self) -> list:
        return self.warmup_records + self.records

    def observed_windows(self) -> list[int]:
        return sorted(self.window_histogram)

    def predicted_scenario(self, p: float = 0.999) -> Scenario | None:
        """Classifier verdict for this run's schedule and its own ZWSL interval."""
        cfg = self.config
        if not cfg.sl_gated or self.zwsl is None:
            return None
        T = cfg.cycle_ns
        W = cfg.sl_gcl.window(QUEUE_DC).length
        interval = uncertainty_interval(self.zwsl, p)
        return classify(network_cycle_offset(cfg.offset_ns, T), W, T, interval)

    def summary(self, p: float = 0.999) -> dict:
        pred = self.predicted_scenario(p)
        return {
            "version": __version__,
            "config": self.config.to_dict(),
            "counters": dict(self.counters),
            "drops": self.drops,
            "sync_error_ns": self.sync_error_ns,
            "records": len(self.records),
            "warmup_records": len(self.warmup_records),
            "outside_window": self.outside_window,
            "histogram": [
                {"window_index": i, "count": s.count, "probability": s.probability, "min_delay_ns": s.min_delay_ns}
                for i, s in self.window_histogram.items()
            ],
            "percentiles": {
                "d_emp": percentile_table(self.delays),
                "d_zwsl": percentile_table(self.zwsl),
            },
            "predicted_scenario": None if pred is None else pred.value,
            "observed_windows": self.observed_windows(),
        }


def percentile_table(dist: EmpiricalDistribution | None) -> dict | None:
    if dist is None:
        return None
    return {
        "count": dist.count,
        "min": dist.min,
        "p50": dist.percentile(0.5),
        "p99": dist.percentile(0.99),
        "p99.9": dist.percentile(0.999),
        "max": dist.max,
        "mean": dist.mean,
    }


def write_records_csv(result: SimResult, path, include_warmup: bool = False) -> None:
    rows = result.all_records if include_warmup else result.records
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_COLUMNS)
        for r in rows:
            w.writerow(r.row())


def write_summary_json(result: SimResult, path, p: float = 0.999, extra: dict | None = None) -> dict:
    doc = result.summary(p)
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2))
    return doc


# ---------------------------------------------------------------- engine


class _Port:
    """Gated FIFO egress port."""

    __slots__ = ("gcl", "rate", "length_aware", "fifo", "free_at", "pending", "bytes")

    def __init__(self, gcl, rate, length_aware):
        self.gcl = gcl
        self.rate = rate
        self.length_aware = length_aware
        self.fifo = deque()
        self.free_at = None
        self.pending = False
        self.bytes = 0

    def start_time(self, t, tx):
        if self.free_at is not None and self.free_at > t:
            t = self.free_at
        return earliest_start(self.gcl, QUEUE_DC, t, tx, self.length_aware)


class _Draws:
    """Per-MS-cycle uniform streams; draw k of cycle n never depends on burst length."""

    BLOCK = 64

    def __init__(self, seed, stream_id):
        self.seed = seed
        self.stream_id = stream_id
        self.cycle = None
        self.gen = None
        self.buf = None
        self.pos = 0

    def next(self, cycle):
        if cycle != self.cycle:
            self.cycle = cycle
            self.gen = stream(self.seed, self.stream_id, cycle)
            self.buf = self.gen.random(self.BLOCK)
            self.pos = 0
        elif self.pos == self.buf.size:
            self.buf = self.gen.random(self.BLOCK)
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return u


def run(config: SimConfig) -> SimResult:
    cfg = config
    bridge = cfg.bridge
    T = cfg.cycle_ns
    ms_gcl, sl_gcl = cfg.ms_gcl, cfg.sl_gcl
    ms_w = ms_gcl.window(QUEUE_DC)
    ms_base = ms_gcl.base_time_ns
    end = ms_base + cfg.duration_ns
    flows = cfg.dc_flows
    names = [f.name for f in flows]
    sizes = [f.wire_bytes for f in flows]
    ms_tx = [f.tx_ns(cfg.ms_rate_bps) for f in flows]
    sl_tx = [f.tx_ns(cfg.sl_rate_bps) for f in flows]
    proc = cfg.sl_proc_ns
    cap = cfg.sl_queue_capacity_bytes

    ms = _Port(ms_gcl, cfg.ms_rate_bps, cfg.length_aware)
    sl = [_Port(sl_gcl, cfg.sl_rate_bps, cfg.length_aware) for _ in flows]
    bq = BridgeQueue(bridge)
    base_draws = _Draws(cfg.seed, STREAM_BRIDGE)
    sync_draws = _Draws(cfg.seed, STREAM_SYNC)
    run_delta = None
    if not bridge.sync_per_packet:
        run_delta = int(bridge.draw_sync_errors(cfg.seed, (), 1)[0])
    b = bridge.sync_error_bound_ns

    # per-packet state, indexed by seq
    p_flow: list[int] = []
    p_ms_out: list[int] = []
    p_sl_in: list[int] = []
    p_delta: list[int] = []
    p_cycle: list[int] = []

    heap: list = []
    push = heapq.heappush
    records: list[PacketRecord] = []
    counters = {"released": 0, "departed": 0, "dropped": 0}
    in_bridge = 0
    last_cycle = None
    position = 0

    def new_packet(f):
        p_flow.append(f)
        p_ms_out.append(-1)
        p_sl_in.append(-1)
        p_delta.append(0)
        p_cycle.append(-1)
        counters["released"] += 1
        return len(p_flow) - 1

    def ms_enqueue(t, pid):
        ms.fifo.append(pid)
        if not ms.pending:
            ms.pending = True
            push(heap, (ms.start_time(t, ms_tx[p_flow[pid]]), _RANK_MS, pid, _EV_MS_START, 0))

    # generation schedule
    groups: dict[int, list[int]] = {}
    if cfg.generation == "batch":
        for i, f in enumerate(flows):
            groups.setdefault(f.app_cycle_ns, []).append(i)
        group_keys = sorted(groups)
        for gi, Tapp in enumerate(group_keys):
            push(heap, (ms_base, _RANK_MS, -len(group_keys) + gi, _EV_BURST, (gi, 0)))
    else:
        for i, f in enumerate(flows):
            push(heap, (ms_base, _RANK_MS, -len(flows) + i, _EV_GEN, (i, 0)))
        group_keys = []

    while heap:
        t, _, key, kind, arg = heapq.heappop(heap)
        if t >= end:
            break
        if kind == _EV_BURST:
            gi, n = arg
            members = groups[group_keys[gi]]
            # round-robin interleave of same-cycle flows
            for k in range(max(flows[i].burst_count for i in members)):
                for i in members:
                    if k < flows[i].burst_count:
                        ms_enqueue(t, new_packet(i))
            push(heap, (ms_base + (n + 1) * group_keys[gi], _RANK_MS, key, _EV_BURST, (gi, n + 1)))
        elif kind == _EV_GEN:
            i, j = arg
            ms_enqueue(t, new_packet(i))
            f = flows[i]
            push(heap, (ms_base + (j + 1) * f.app_cycle_ns // f.burst_count, _RANK_MS, key, _EV_GEN, (i, j + 1)))
        elif kind == _EV_MS_START:
            pid = ms.fifo.popleft()
            fi = p_flow[pid]
            p_ms_out[pid] = t
            n, _inside = window_instance(t, ms_base, ms_w, T)
            if n != last_cycle:
                last_cycle, position = n, 0
            p_cycle[pid] = n
            position += 1
            base = int(bridge.base_delays(np.array([base_draws.next(n)]))[0])
            if run_delta is None:
                u = sync_draws.next(n)
                p_delta[pid] = int(math.floor(u * (2 * b + 1))) - b if b else 0
            else:
                p_delta[pid] = run_delta
            arrival = bq.admit(t, base, sizes[fi])
            p_sl_in[pid] = arrival
            in_bridge += 1
            push(heap, (arrival + proc, _RANK_SL, pid, _EV_SL_ARRIVE, 0))
            ms.free_at = t + ms_tx[fi]
            if ms.fifo:
                nxt = ms.fifo[0]
                push(heap, (ms.start_time(ms.free_at, ms_tx[p_flow[nxt]]), _RANK_MS, nxt, _EV_MS_START, 0))
            else:
                ms.pending = False
        elif kind == _EV_SL_ARRIVE:
            pid = key
            in_bridge -= 1
            fi = p_flow[pid]
            port = sl[fi]
            if port.bytes + sizes[fi] > cap:
                counters["dropped"] += 1
                records.append(_record(pid, names[fi], p_ms_out, p_sl_in, None, proc, p_delta, sl_gcl, cfg))
                continue
            port.fifo.append(pid)
            port.bytes += sizes[fi]
            if not port.pending:
                port.pending = True
                push(heap, (port.start_time(t, sl_tx[fi]), _RANK_SL, pid, _EV_SL_START, 0))
        else:  # _EV_SL_START
            fi = p_flow[key]
            port = sl[fi]
            pid = port.fifo.popleft()
            port.bytes -= sizes[fi]
            counters["departed"] += 1
            records.append(_record(pid, names[fi], p_ms_out, p_sl_in, t, proc, p_delta, sl_gcl, cfg))
            port.free_at = t + sl_tx[fi]
            if port.fifo:
                nxt = port.fifo[0]
                push(heap, (port.start_time(port.free_at, sl_tx[fi]), _RANK_SL, nxt, _EV_SL_START, 0))
            else:
                port.pending = False

    counters["in_flight"] = len(ms.fifo) + in_bridge + sum(len(p.fifo) for p in sl)
    return _collect(cfg, records, counters, run_delta, p_ms_out)


def _record(pid, name, p_ms_out, p_sl_in, t_out, proc, p_delta, sl_gcl, cfg):
    t_ms = p_ms_out[pid]
    delta = p_delta[pid]
    d_zwsl = p_sl_in[pid] + proc - t_ms + delta
    if t_out is None:
        return PacketRecord(pid, name, t_ms, p_sl_in[pid], None, None, d_zwsl, None, True, delta)
    assignment, inside = assign_window(t_ms, t_out, sl_gcl, cfg.offset_ns)
    return PacketRecord(pid, name, t_ms, p_sl_in[pid], t_out, t_out - t_ms + delta, d_zwsl, assignment, False, delta, inside)


def _collect(cfg, records, counters, run_delta, p_ms_out) -> SimResult:
    records.sort(key=lambda r: r.seq)
    first = None
    for t in p_ms_out:
        if t >= 0 and (first is None or t < first):
            first = t
    cutoff = (first if first is not None else 0) + cfg.warmup_ns
    warm = [r for r in records if r.t_ms_out < cutoff]
    post = [r for r in records if r.t_ms_out >= cutoff]
    outside = sum(1 for r in post if not r.dropped and not r.in_window)
    name = cfg.target.name
    tgt = [r for r in post if r.flow == name and not r.dropped]
    hist = window_histogram([r.assignment.window_index for r in tgt], [r.d_emp for r in tgt]) if tgt else {}
    delays = EmpiricalDistribution([r.d_emp for r in tgt]) if tgt else None
    zwsl = EmpiricalDistribution([r.d_zwsl for r in tgt]) if tgt else None
    return SimResult(
        config=cfg,
        records=post,
        warmup_records=warm,
        window_histogram=hist,
        drops=counters["dropped"],
        delays=delays,
        zwsl=zwsl,
        counters=counters,
        sync_error_ns=run_delta,
        first_ms_out=first,
        outside_window=outside,
    )


# ---------------------------------------------------------------- sweeps


def derive_seed(seed: int, axis: str, value) -> int:
    h = hashlib.blake2b(f"{seed}|{axis}|{value!r}".encode(), digest_size=8).digest()
    return int.from_bytes(h, "big") >> 1


def _fill_burst(flow: FlowSpec, window_ns: int, rate_bps: float) -> FlowSpec:
    n = window_ns // flow.tx_ns(rate_bps)
    if n < 1:
        raise ConfigError(f"a {window_ns} ns window holds no {flow.wire_bytes}-byte frame")
    return dataclasses.replace(flow, burst_count=int(n), gen_rate_bps=None)


def apply_axis(base: SimConfig, axis: str, value, calibration: Mapping | None = None) -> SimConfig:
    """``base`` with one sweep coordinate changed."""
    if axis not in AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {AXES}")
    T = base.cycle_ns
    W = base.ms_gcl.window(QUEUE_DC).length
    ms_base = base.ms_gcl.base_time_ns
    kw: dict = {}
    offset = base.offset_ns
    flows = list(base.flows)
    if axis == "offset":
        offset = int(value)
    elif axis == "window":
        W = int(value)
        flows[0] = _fill_burst(flows[0], W, base.ms_rate_bps)
    elif axis == "cycle":
        if isinstance(value, (tuple, list)):
            T_new, W = int(value[0]), int(value[1])
        else:
            T_new = int(value)
            W = W * T_new // T  # keep the injected rate
        T = T_new
        flows = [dataclasses.replace(f, app_cycle_ns=T, gen_rate_bps=None) if f.traffic_class is FlowClass.DC else f
                 for f in flows]
        flows[0] = _fill_burst(flows[0], W, base.ms_rate_bps)
    elif axis == "same_priority_flows":
        k = int(value)
        if k < 1:
            raise ConfigError("same_priority_flows needs at least one flow")
        W = W // len(base.dc_flows) * k
        target = flows[0]
        others = [f for f in flows[1:] if f.traffic_class is not FlowClass.DC]
        copies = [dataclasses.replace(target, name=f"{target.name}_{i}") for i in range(1, k)]
        flows = [target] + copies + others
    elif axis == "be_load":
        if calibration is None or value not in calibration:
            raise ConfigError(f"no bridge calibration for BE load {value}")
        kw["be_load_mbps"] = float(value)
    if calibration is not None and value in calibration:
        kw["bridge"] = calibration[value]
    ms_gcl = layout_like(base.ms_gcl, T, W, ms_base)
    sl_base = ms_base + network_cycle_offset(offset, T)
    sl_gcl = layout_like(base.sl_gcl, T, W, sl_base)
    return base.replace(flows=tuple(flows), ms_gcl=ms_gcl, sl_gcl=sl_gcl, offset_ns=offset, **kw)


def sweep_configs(base, axis, values, seed_mode="common", calibration=None) -> list[SimConfig]:
    if seed_mode not in SEED_MODES:
        raise ConfigError(f"seed_mode must be one of {SEED_MODES}")
    out = []
    for v in values:
        cfg = apply_axis(base, axis, v, calibration)
        if seed_mode == "derived":
            cfg = cfg.replace(seed=derive_seed(base.seed, axis, v))
        out.append(cfg)
    return out


def sweep(
    base: SimConfig,
    axis: str,
    values: Sequence,
    seed_mode: str = "common",
    calibration: Mapping | None = None,
    workers: int = 1,
) -> list[tuple]:
    """Independent runs over ``values`` of one axis.

    ``seed_mode="common"`` reuses the base seed at every point (common random
    numbers, so points differ only by the swept parameter); ``"derived"``
    hashes (seed, axis, value) into a per-point seed.
    """
    configs = sweep_configs(base, axis, values, seed_mode, calibration)
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, configs))
    else:
        results = [run(c) for c in configs]
    return list(zip(values, results))
