"""Domain types for the MS -> 5G bridge -> SL path and the gate-schedule math.

All times are integer nanoseconds, sizes are bytes and rates are bits/s.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConfigError

# node identifiers, in path order
MS = "MS"
NW_TT = "NW-TT"
UPF = "UPF"
GNB = "gNB"
UE = "UE"
DS_TT = "DS-TT"
SL = "SL"
PATH = (MS, NW_TT, UPF, GNB, UE, DS_TT, SL)
FIVEG_NODES = frozenset({NW_TT, UPF, GNB, UE, DS_TT})
TSN_NODES = frozenset({MS, SL})

# queue ids follow the PCP values used on the testbed
QUEUE_BE = 0
QUEUE_DC = 2
QUEUE_PTP = 3

NS_PER_S = 1_000_000_000
DEFAULT_OVERHEAD_BYTES = 42
DEFAULT_GUARD_BAND_NS = 6_260
DEFAULT_PTP_WINDOW_NS = 160


def transmission_delay_ns(size_bytes: int, rate_bps: float) -> int:
    """Serialization time of ``size_bytes`` on a link of ``rate_bps``, rounded up to 1 ns.

    An infinite rate gives 0.
    """
    if rate_bps <= 0:
        raise ConfigError(f"link rate must be positive, got {rate_bps}")
    if math.isinf(rate_bps):
        return 0
    bits = int(size_bytes) * 8
    if float(rate_bps).is_integer():
        r = int(rate_bps)
        return -(-bits * NS_PER_S // r)
    return math.ceil(bits * NS_PER_S / rate_bps)


@dataclass(frozen=True)
class Link:
    src: str
    dst: str
    capacity_bps: float
    prop_ns: int = 0

    @property
    def key(self) -> tuple[str, str]:
        return (self.src, self.dst)


@dataclass(frozen=True)
class Topology:
    """Sequential MS -> SL path.

    ``fiveg_links`` and ``tsn_links`` hold link keys ``(src, dst)``.
    """

    nodes: frozenset
    links: tuple[Link, ...]
    fiveg_nodes: frozenset = FIVEG_NODES
    fiveg_links: frozenset = frozenset()
    tsn_nodes: frozenset = TSN_NODES
    tsn_links: frozenset = frozenset()

    def __post_init__(self):
        if not self.links:
            raise ConfigError("topology needs at least one link")
        if self.links[0].src != MS or self.links[-1].dst != SL:
            raise ConfigError("links must run from MS to SL")
        for a, b in zip(self.links, self.links[1:]):
            if a.dst != b.src:
                raise ConfigError(f"links are not a single path: {a.key} then {b.key}")
        on_path = [l.src for l in self.links] + [self.links[-1].dst]
        if len(set(on_path)) != len(on_path):
            raise ConfigError("path visits a node twice")
        if set(on_path) != set(self.nodes):
            raise ConfigError("node set does not match the link path")
        keys = {l.key for l in self.links}
        if not self.fiveg_links <= keys or not self.tsn_links <= keys:
            raise ConfigError("5G/TSN link subsets must be subsets of the links")
        if self.fiveg_links & self.tsn_links:
            raise ConfigError("5G and TSN link subsets overlap")
        for l in self.links:
            if not l.capacity_bps > 0:
                raise ConfigError(f"link {l.key} capacity must be > 0")
            if l.prop_ns < 0:
                raise ConfigError(f"link {l.key} propagation delay must be >= 0")

    def link(self, src: str, dst: str) -> Link:
        for l in self.links:
            if l.key == (src, dst):
                return l
        raise ConfigError(f"no link {src}->{dst}")

    @property
    def ms_egress(self) -> Link:
        return self.links[0]

    def to_dict(self) -> dict:
        return {
            "links": [
                {"src": l.src, "dst": l.dst, "capacity_bps": l.capacity_bps, "prop_ns": l.prop_ns} for l in self.links
            ],
            "fiveg_links": sorted(list(k) for k in self.fiveg_links),
            "tsn_links": sorted(list(k) for k in self.tsn_links),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Topology":
        try:
            links = tuple(Link(l["src"], l["dst"], float(l["capacity_bps"]), int(l.get("prop_ns", 0))) for l in d["links"])
        except (KeyError, TypeError) as e:
            raise ConfigError(f"bad topology link entry: {e}") from None
        nodes = frozenset([l.src for l in links] + [l.dst for l in links])
        return cls(
            nodes=nodes,
            links=links,
            fiveg_nodes=frozenset(nodes - TSN_NODES),
            fiveg_links=frozenset(tuple(k) for k in d.get("fiveg_links", ())),
            tsn_links=frozenset(tuple(k) for k in d.get("tsn_links", ())),
        )


def default_topology(wired_bps: float = 1e9, radio_bps: float = 100e6, prop_ns: int = 0) -> Topology:
    """The testbed path; every wired link at ``wired_bps``, the gNB->UE hop at ``radio_bps``."""
    links = []
    for a, b in zip(PATH, PATH[1:]):
        rate = radio_bps if (a, b) == (GNB, UE) else wired_bps
        links.append(Link(a, b, rate, prop_ns))
    return Topology(
        nodes=frozenset(PATH),
        links=tuple(links),
        fiveg_links=frozenset({(NW_TT, UPF), (UPF, GNB), (GNB, UE), (UE, DS_TT)}),
        tsn_links=frozenset({(MS, NW_TT), (DS_TT, SL)}),
    )


class FlowClass(str, enum.Enum):
    DC = "DC"
    BE = "BE"
    PTP = "PTP"


_DEFAULT_PCP = {FlowClass.DC: QUEUE_DC, FlowClass.BE: QUEUE_BE, FlowClass.PTP: QUEUE_PTP}


@dataclass(frozen=True)
class FlowSpec:
    """A traffic flow.

    ``packet_size`` is the payload-level size L_s; ``overhead_bytes`` is added on
    the wire. Pass ``overhead_bytes=0`` when ``packet_size`` already counts it.
    """

    traffic_class: FlowClass
    packet_size: int
    app_cycle_ns: int
    burst_count: int = 1
    gen_rate_bps: float | None = None
    delay_bound_ns: int | None = None
    pcp: int | None = None
    overhead_bytes: int = DEFAULT_OVERHEAD_BYTES
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "traffic_class", FlowClass(self.traffic_class))
        if self.pcp is None:
            object.__setattr__(self, "pcp", _DEFAULT_PCP[self.traffic_class])
        if self.burst_count < 1:
            raise ConfigError("burst_count must be >= 1")
        if self.packet_size < 64:
            raise ConfigError("packet_size must be >= 64 bytes")
        if self.app_cycle_ns <= 0:
            raise ConfigError("app_cycle_ns must be > 0")
        if self.gen_rate_bps is None:
            object.__setattr__(self, "gen_rate_bps", self.nominal_rate_bps)
        if not self.name:
            object.__setattr__(self, "name", self.traffic_class.value)
        if not 0 <= self.pcp <= 7:
            raise ConfigError("pcp must be in 0..7")
        if self.overhead_bytes < 0:
            raise ConfigError("overhead_bytes must be >= 0")
        if self.traffic_class is FlowClass.DC and abs(self.gen_rate_bps - self.nominal_rate_bps) > 1.0:
            raise ConfigError(
                f"DC generation rate {self.gen_rate_bps} b/s does not match "
                f"N*L*8/T = {self.nominal_rate_bps} b/s"
            )

    @property
    def nominal_rate_bps(self) -> float:
        return self.burst_count * self.packet_size * 8 * NS_PER_S / self.app_cycle_ns

    @property
    def wire_bytes(self) -> int:
        return self.packet_size + self.overhead_bytes

    def tx_ns(self, rate_bps: float) -> int:
        return transmission_delay_ns(self.wire_bytes, rate_bps)

    def to_dict(self) -> dict:
        return {
            "traffic_class": self.traffic_class.value,
            "packet_size": self.packet_size,
            "app_cycle_ns": self.app_cycle_ns,
            "burst_count": self.burst_count,
            "gen_rate_bps": self.gen_rate_bps,
            "delay_bound_ns": self.delay_bound_ns,
            "pcp": self.pcp,
            "overhead_bytes": self.overhead_bytes,
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FlowSpec":
        return cls(**d)


def dc_flow(packet_size: int, app_cycle_ns: int, burst_count: int, **kw) -> FlowSpec:
    return FlowSpec(FlowClass.DC, packet_size, app_cycle_ns, burst_count, **kw)


def validate_flow_set(flows: Sequence[FlowSpec]) -> None:
    """Cross-flow invariants: PTP cycles at least 10x every DC cycle."""
    dc = [f.app_cycle_ns for f in flows if f.traffic_class is FlowClass.DC]
    ptp = [f.app_cycle_ns for f in flows if f.traffic_class is FlowClass.PTP]
    if dc and ptp and min(ptp) < 10 * max(dc):
        raise ConfigError("PTP application cycle must be >= 10x the DC application cycle")


@dataclass(frozen=True)
class Window:
    queue: int
    open_ns: int
    close_ns: int

    @property
    def length(self) -> int:
        return self.close_ns - self.open_ns


@dataclass(frozen=True)
class GclConfig:
    """Periodic gate schedule of one egress port.

    A queue's gate is open on ``(base + n*T + open, base + n*T + close]`` for n >= 0.
    """

    network_cycle_ns: int
    windows: tuple[Window, ...]
    guard_band_ns: int = 0
    base_time_ns: int = 0

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(self.windows))
        T = self.network_cycle_ns
        if T <= 0:
            raise ConfigError("network_cycle_ns must be > 0")
        if self.guard_band_ns < 0:
            raise ConfigError("guard_band_ns must be >= 0")
        queues = [w.queue for w in self.windows]
        if len(set(queues)) != len(queues):
            raise ConfigError("one window per queue")
        for w in self.windows:
            if not 0 <= w.open_ns < w.close_ns <= T:
                raise ConfigError(f"window {w} must satisfy 0 <= open < close <= T_nc")
        ordered = sorted(self.windows, key=lambda w: w.open_ns)
        for a, b in zip(ordered, ordered[1:]):
            if b.open_ns < a.close_ns:
                raise ConfigError(f"windows overlap: {a} and {b}")
        if sum(w.length for w in self.windows) + self.guard_band_ns > T:
            raise ConfigError("windows plus guard band exceed the network cycle")

    def window(self, queue: int) -> Window:
        for w in self.windows:
            if w.queue == queue:
                return w
        raise ConfigError(f"queue {queue} has no window in this GCL")

    def always_open(self, queue: int) -> bool:
        w = self.window(queue)
        return w.open_ns == 0 and w.close_ns == self.network_cycle_ns

    def shifted(self, base_time_ns: int) -> "GclConfig":
        return GclConfig(self.network_cycle_ns, self.windows, self.guard_band_ns, base_time_ns)

    def to_dict(self) -> dict:
        return {
            "base_time_ns": self.base_time_ns,
            "network_cycle_ns": self.network_cycle_ns,
            "guard_band_ns": self.guard_band_ns,
            "windows": [
                {"queue": w.queue, "open_ns": w.open_ns, "close_ns": w.close_ns} for w in self.windows
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GclConfig":
        try:
            windows = tuple(Window(int(w["queue"]), int(w["open_ns"]), int(w["close_ns"])) for w in d["windows"])
            return cls(int(d["network_cycle_ns"]), windows, int(d.get("guard_band_ns", 0)), int(d.get("base_time_ns", 0)))
        except KeyError as e:
            raise ConfigError(f"GCL document missing field {e}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GclConfig":
        return cls.from_dict(json.loads(text))


def make_gcl(
    cycle_ns: int,
    dc_window_ns: int,
    guard_band_ns: int = DEFAULT_GUARD_BAND_NS,
    ptp_window_ns: int = DEFAULT_PTP_WINDOW_NS,
    base_time_ns: int = 0,
) -> GclConfig:
    """Testbed layout: guard band, DC window, PTP slot, BE window filling the rest."""
    dc_open = guard_band_ns
    dc_close = dc_open + dc_window_ns
    windows = [Window(QUEUE_DC, dc_open, dc_close)]
    end = dc_close
    if ptp_window_ns:
        windows.append(Window(QUEUE_PTP, end, end + ptp_window_ns))
        end += ptp_window_ns
    if end < cycle_ns:
        windows.append(Window(QUEUE_BE, end, cycle_ns))
    elif end > cycle_ns:
        raise ConfigError("guard band + DC + PTP windows exceed the network cycle")
    return GclConfig(cycle_ns, tuple(windows), guard_band_ns, base_time_ns)


def open_gcl(cycle_ns: int, base_time_ns: int = 0, queue: int = QUEUE_DC) -> GclConfig:
    """A port whose gate for ``queue`` never closes (TAS disabled)."""
    return GclConfig(cycle_ns, (Window(queue, 0, cycle_ns),), 0, base_time_ns)


def gate_state(gcl: GclConfig, q: int, t: int) -> bool:
    w = gcl.window(q)
    u = t - gcl.base_time_ns
    if u <= 0:
        return False
    T = gcl.network_cycle_ns
    r = u % T
    if w.open_ns < r <= w.close_ns:
        return True
    # r == 0 is the closing instant of the previous cycle's window when close == T
    return r == 0 and w.close_ns == T


def next_gate_open(gcl: GclConfig, q: int, t: int) -> int:
    """Earliest integer instant >= t at which the gate of ``q`` is open."""
    if gate_state(gcl, q, t):
        return t
    w = gcl.window(q)
    T = gcl.network_cycle_ns
    u = t - gcl.base_time_ns
    if u < 0:
        return gcl.base_time_ns + w.open_ns + 1
    r = u % T
    if r <= w.open_ns:
        return t + (w.open_ns - r) + 1
    return t + (T - r) + w.open_ns + 1


def earliest_start(gcl: GclConfig, q: int, t: int, tx_ns: int, length_aware: bool = True) -> int:
    """First instant >= t at which a frame of ``tx_ns`` may start on queue ``q``.

    A frame occupies ns slots [s, s + tx); with ``length_aware`` it must end
    by the close of the window it starts in.
    """
    if gcl.always_open(q):
        return t
    s = next_gate_open(gcl, q, t)
    if not length_aware:
        return s
    w = gcl.window(q)
    if tx_ns > w.length:
        raise ConfigError(f"a {tx_ns} ns frame never fits the {w.length} ns window of queue {q}")
    T = gcl.network_cycle_ns
    m = (s - gcl.base_time_ns - w.open_ns - 1) // T
    close = gcl.base_time_ns + m * T + w.close_ns
    if s + tx_ns <= close + 1:
        return s
    return gcl.base_time_ns + (m + 1) * T + w.open_ns + 1


class WindowVerdict(str, enum.Enum):
    OK = "ok"
    TOO_SHORT = "too_short"
    TOO_LONG = "too_long"


def check_window_bounds(flow: FlowSpec, gcl: GclConfig, egress_link: Link, queue: int | None = None) -> WindowVerdict:
    q = flow.pcp if queue is None else queue
    W = gcl.window(q).length
    if flow.burst_count * flow.tx_ns(egress_link.capacity_bps) > W:
        return WindowVerdict.TOO_SHORT
    if W >= gcl.network_cycle_ns:
        return WindowVerdict.TOO_LONG
    return WindowVerdict.OK


@dataclass(frozen=True)
class WindowAssignment:
    """Which SL window carried a packet.

    ``cycle_index`` is the MS network cycle that released the packet.
    ``window_index`` counts SL windows from the reference window of that cycle:
    the window opening at the network-cycle offset after the MS window opens,
    or one full cycle later when the offset is a positive multiple of T_nc.
    """

    cycle_index: int
    window_index: int


def window_instance(t: int, base: int, w: Window, T: int) -> tuple[int, bool]:
    """Index of the window instance containing ``t``; outside any window, the nearest one."""
    u = t - base
    m = (u - w.open_ns - 1) // T
    r = u - m * T  # in [open + 1, open + T]
    if r <= w.close_ns:
        return m, True
    gap_after = r - w.close_ns
    gap_before = w.open_ns + T + 1 - r
    return (m if gap_after <= gap_before else m + 1), False


def reference_shift(offset_ns: int, cycle_ns: int) -> int:
    return 1 if offset_ns > 0 and offset_ns % cycle_ns == 0 else 0


def assign_window(t_ms: int, t_out: int, sl_gcl: GclConfig, offset_ns: int, queue: int = QUEUE_DC) -> tuple[WindowAssignment, bool]:
    """Assign a departure at ``t_out`` (SL) of a packet sent at ``t_ms`` (MS).

    The MS schedule is taken to be ``sl_gcl`` shifted back by the network-cycle
    offset. The flag is False when ``t_out`` lies outside every window; the
    nearest window instance is used then.
    """
    T = sl_gcl.network_cycle_ns
    w = sl_gcl.window(queue)
    ms_base = sl_gcl.base_time_ns - offset_ns % T
    n, _ = window_instance(t_ms, ms_base, w, T)
    m, inside = window_instance(t_out, sl_gcl.base_time_ns, w, T)
    return WindowAssignment(n, m - n - reference_shift(offset_ns, T)), inside


@dataclass(frozen=True)
class WindowStat:
    count: int
    probability: float
    min_delay_ns: int


def window_histogram(indices: Sequence[int], delays: Sequence[int]) -> dict[int, WindowStat]:
    """Per window index: packet count, share of all packets and the smallest delay."""
    total = len(indices)
    if total != len(delays):
        raise ValueError("indices and delays must be parallel")
    counts: dict[int, int] = {}
    mins: dict[int, int] = {}
    for i, d in zip(indices, delays):
        i = int(i)
        d = int(d)
        counts[i] = counts.get(i, 0) + 1
        if i not in mins or d < mins[i]:
            mins[i] = d
    return {i: WindowStat(counts[i], counts[i] / total, mins[i]) for i in sorted(counts)}


def windows_overlap_free(gcl: GclConfig, times: Iterable[int]) -> bool:
    """True when no instant in ``times`` has two gates open at once."""
    for t in times:
        if sum(gate_state(gcl, w.queue, t) for w in gcl.windows) > 1:
            return False
    return True
