"""
Offset sweep with TAS at both switches
======================================

Short version of the exp2 preset (about 2k packets per point instead of 60k).
Late offsets put every packet in the first SL window; early ones split the
traffic over two windows, one network cycle apart.
"""
from tas5g import sim
from tas5g.experiments import EXP2_OFFSETS_NS, get_preset

MS = 1_000_000
S = 1_000_000_000

preset = get_preset("exp2")
base = preset.base_config(duration_ns=3 * S, warmup_ns=0)

for offset, r in sim.sweep(base, "offset", EXP2_OFFSETS_NS):
    bars = "  ".join(f"w{i}: {s.probability:.3f} (min {s.min_delay_ns / MS:.2f} ms)" for i, s in r.window_histogram.items())
    print(f"offset {offset // MS:>2} ms  {r.predicted_scenario().short}  {bars}")

# the share in the second window follows the bridge's own exceedance of the offset
_, r10 = sim.sweep(base, "offset", [10 * MS])[0]
second = r10.window_histogram.get(1)
print(f"offset 10 ms: second-window share {second.probability:.3f} vs P(ZWSL > 10 ms) {r10.zwsl.exceedance(10 * MS):.3f}")
