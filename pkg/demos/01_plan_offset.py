"""
Choosing a TAS offset from bridge delay samples
===============================================

The 5G bridge between the master switch (MS) and the slave switch (SL) adds a
random delay. We take its 99.9th-percentile interval, pick an offset for the
SL gate that every likely packet beats, and check the four arrival scenarios.
"""
import numpy as np

from tas5g.delay import EmpiricalDistribution, jitter, uncertainty_interval
from tas5g.model import Link, dc_flow
from tas5g.planner import classify, feasibility, network_cycle_offset, recommend
from tas5g.profiles import profile_samples

MS = 1_000_000

# the calibrated exp1 pool: min 4.5 ms, p99.9 15 ms, max 18.41 ms
dist = EmpiricalDistribution(profile_samples("exp1"))
iv = uncertainty_interval(dist, 0.999)
print(f"interval [{iv.lo / MS}, {iv.hi / MS}] ms, jitter {jitter(iv) / MS} ms, mean {dist.mean / MS:.2f} ms")

# 29 frames of 200 bytes every 30 ms, 1 Gb/s egress
flow = dc_flow(200, 30 * MS, 29, overhead_bytes=0)
plan = recommend(dist, flow, Link("MS", "NW-TT", 1e9), 0.999, margin=5 * MS)
print(f"offset {plan.offset_ns / MS} ms, cycle {plan.network_cycle_ns / MS} ms, window {plan.window_ns} ns -> {plan.scenario.value}")

# a toy interval [7.5, 15] ms with W = 5 ms: one offset per scenario
toy = uncertainty_interval(EmpiricalDistribution(np.linspace(7.5 * MS, 15 * MS, 1001).astype(np.int64)), 0.999)
for T, offset in ((20 * MS, 15 * MS), (20 * MS, 22_500_000), (20 * MS, 25 * MS), (10 * MS, 7_500_000)):
    d = network_cycle_offset(offset, T)
    s = classify(d, 5 * MS, T, toy)
    print(f"T={T / MS:>4} ms offset={offset / MS:>4} ms  {s.value:<22} feasible={feasibility(T, 5 * MS, jitter(toy))}")
