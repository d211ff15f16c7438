"""
When the cycle is too short for the jitter
==========================================

With T - W below the bridge jitter no offset is deterministic. Under the
FIFO bridge the backlog settles quickly: after the first bursts every packet
waits for the same later window, so the run shows one bar one cycle late
rather than a spread over many windows.
"""
import numpy as np

from tas5g import sim
from tas5g.delay import BridgeModel, UncertaintyInterval
from tas5g.model import dc_flow, default_topology
from tas5g.planner import classify, feasibility

MS = 1_000_000
T, W, offset = 10 * MS, 5 * MS, 7_500_000
iv = UncertaintyInterval(7_500_000, 15 * MS)
print("feasible:", feasibility(T, W, iv.hi - iv.lo), "->", classify(offset, W, T, iv).value)

# 25 frames spread over the 5 ms window, bridge delays uniform on the interval
tx = W // 25
pool = np.linspace(iv.lo, iv.hi, 1001).astype(np.int64)
cfg = sim.build_config([dc_flow(200, T, 25, overhead_bytes=0)], T, W, offset,
                       BridgeModel.bootstrap(pool, sync_error_bound_ns=0), 200 * T,
                       topology=default_topology(wired_bps=200 * 8e9 / tx),
                       guard_band_ns=0, ptp_window_ns=0, length_aware=False)
r = sim.run(cfg)
for i, s in r.window_histogram.items():
    print(f"window {i}: {s.count} packets, p={s.probability:.3f}, min delay {s.min_delay_ns / MS:.2f} ms")
