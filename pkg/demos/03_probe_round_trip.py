"""
From simulator records to probe logs and back
=============================================

The simulator writes what two port probes would have logged: sequence
numbers and departure timestamps at the MS and at the SL. Matching the two
files recovers the per-packet delays exactly.
"""
import tempfile
from pathlib import Path

import numpy as np

from tas5g import sim, trace
from tas5g.experiments import get_preset

MS = 1_000_000
S = 1_000_000_000

cfg = get_preset("exp2").base_config(duration_ns=20 * S, warmup_ns=2 * S, offset_ns=15 * MS)
r = sim.run(cfg)

with tempfile.TemporaryDirectory() as tmp:
    ms, sl, fmt = trace.split_probe_logs(r.all_records, tmp)
    print(Path(ms).read_text().splitlines()[:3])
    s = trace.analyze(ms, sl, trace.ProbeFormat.load(fmt), cfg.sl_gcl, cfg.offset_ns, Path(tmp) / "out", warmup_ns=2 * S)
    print(sorted(p.name for p in (Path(tmp) / "out").iterdir()))

print(f"{s['count']} pairs, {s['warmup_discarded']} warm-up rows dropped")
print(f"min {s['min'] / MS:.3f} ms, p99.9 {s['percentiles']['0.999'] / MS:.3f} ms, max {s['max'] / MS:.3f} ms")
print("windows:", [(w["window_index"], round(w["probability"], 4)) for w in s["windows"]])
assert s["count"] == r.delays.count and s["max"] == r.delays.max and np.isclose(s["mean"], r.delays.mean)
