"""Probe-log ingestion, sequence matching and delay statistics.

A probe log is a CSV of (sequence number, departure timestamp) rows written
at one switch port. Matching the MS and SL logs on sequence number gives the
measured MS->SL delay per packet.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .delay import DEFAULT_WARMUP_NS, EmpiricalDistribution, jitter, uncertainty_interval
from .errors import ConfigError, TraceError
from .model import QUEUE_DC, GclConfig, WindowStat, assign_window, window_histogram

log = logging.getLogger(__name__)

TIME_UNITS = {"ns": 1, "us": 1_000, "ms": 1_000_000, "s": 1_000_000_000}
MAX_BAD_FRACTION = 0.01
DEFAULT_REORDER_HORIZON_NS = 1_000_000_000


@dataclass(frozen=True)
class ProbeFormat:
    """Column names and timestamp unit of a probe CSV. The unit is never guessed."""

    time_unit: str
    seq_column: str = "seq"
    time_column: str = "timestamp"
    seq_bits: int = 32
    reorder_horizon_ns: int = DEFAULT_REORDER_HORIZON_NS

    def __post_init__(self):
        if self.time_unit not in TIME_UNITS:
            raise ConfigError(f"time_unit must be one of {sorted(TIME_UNITS)}, got {self.time_unit!r}")
        if not 1 <= self.seq_bits <= 63:
            raise ConfigError("seq_bits must be in 1..63")

    @classmethod
    def from_dict(cls, d: dict) -> "ProbeFormat":
        if "time_unit" not in d:
            raise ConfigError("probe format must declare time_unit")
        known = {"time_unit", "seq_column", "time_column", "seq_bits", "reorder_horizon_ns"}
        return cls(**{k: v for k, v in d.items() if k in known})

    @classmethod
    def load(cls, path) -> "ProbeFormat":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"{path}: {e}") from None

    def to_dict(self) -> dict:
        return {
            "seq_column": self.seq_column,
            "time_column": self.time_column,
            "time_unit": self.time_unit,
            "seq_bits": self.seq_bits,
            "reorder_horizon_ns": self.reorder_horizon_ns,
        }


@dataclass
class ProbeLog:
    port: str
    seqs: np.ndarray
    times: np.ndarray
    source: str = ""
    errors: list = field(default_factory=list)

    def __len__(self):
        return int(self.seqs.size)


def _to_ns(text: str, scale: int) -> int:
    v = Decimal(text.strip()) * scale
    if v != v.to_integral_value():
        # sub-ns digits are truncated toward zero
        v = v.to_integral_value(rounding="ROUND_DOWN")
    return int(v)


class SeqUnwrapper:
    """Extends wrapping n-bit counters to monotone integers (half-range rule)."""

    def __init__(self, bits: int = 32):
        self.mod = 1 << bits
        self.half = self.mod >> 1
        self.prev_raw = None
        self.prev = None

    def __call__(self, raw: int) -> int:
        if not 0 <= raw < self.mod:
            raise ValueError(f"sequence number {raw} outside the {self.mod.bit_length() - 1}-bit range")
        if self.prev_raw is None:
            out = raw
        else:
            step = (raw - self.prev_raw) % self.mod
            if step >= self.half:
                step -= self.mod
            out = self.prev + step
        self.prev_raw, self.prev = raw, out
        return out


def parse_probe_csv(path, fmt: ProbeFormat, port: str | None = None) -> ProbeLog:
    """Parse one probe CSV. Bad rows are collected; more than 1% of them is fatal."""
    path = Path(path)
    scale = TIME_UNITS[fmt.time_unit]
    seqs, times, errors = [], [], []
    seen = set()
    unwrap = SeqUnwrapper(fmt.seq_bits)
    high = None
    total = 0
    try:
        fh = open(path, newline="")
    except OSError as e:
        raise TraceError(f"{path}: {e}") from None
    with fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        for c in (fmt.seq_column, fmt.time_column):
            if c not in cols:
                raise TraceError(f"{path}: missing column {c!r} (have {cols})")
        for lineno, row in enumerate(reader, start=2):
            total += 1
            try:
                raw_seq = row[fmt.seq_column]
                raw_t = row[fmt.time_column]
                if raw_seq is None or raw_t is None:
                    raise ValueError("short row")
                seq = unwrap(int(raw_seq.strip()))
                t = _to_ns(raw_t, scale)
            except (ValueError, InvalidOperation, AttributeError) as e:
                errors.append(f"line {lineno}: {e or 'bad value'}")
                continue
            if seq in seen:
                errors.append(f"line {lineno}: duplicate seq {seq}")
                continue
            if high is not None and t < high - fmt.reorder_horizon_ns:
                errors.append(f"line {lineno}: timestamp {t} more than the reorder horizon before {high}")
                continue
            seen.add(seq)
            seqs.append(seq)
            times.append(t)
            high = t if high is None else max(high, t)
    if total and len(errors) > MAX_BAD_FRACTION * total:
        raise TraceError(f"{path}: {len(errors)} of {total} rows malformed (first: {errors[0]})")
    for e in errors[:5]:
        log.warning("%s: %s", path, e)
    return ProbeLog(port or path.stem, np.array(seqs, dtype=np.int64), np.array(times, dtype=np.int64), str(path), errors)


@dataclass
class MatchedTrace:
    seqs: np.ndarray
    t_ms: np.ndarray
    t_sl: np.ndarray
    unmatched_ms: int
    unmatched_sl: int
    negative: int = 0
    warmup_discarded: int = 0

    @property
    def delays(self) -> np.ndarray:
        return self.t_sl - self.t_ms

    def __len__(self):
        return int(self.seqs.size)

    def distribution(self) -> EmpiricalDistribution:
        return EmpiricalDistribution(self.delays)


def match(ms: ProbeLog, sl: ProbeLog, warmup_ns: int = DEFAULT_WARMUP_NS, start_ns: int | None = None) -> MatchedTrace:
    """Inner join on seq.

    Rows whose MS timestamp is before ``start + warmup`` are dropped first
    (start defaults to the first MS timestamp); SL rows of those packets go
    with them. Pairs with negative delay are counted and left out.
    """
    if len(ms) == 0 or len(sl) == 0:
        raise TraceError("cannot match an empty probe log")
    start = int(ms.times.min()) if start_ns is None else int(start_ns)
    keep = ms.times >= start + warmup_ns
    warm_seqs = ms.seqs[~keep]
    ms_seqs, ms_times = ms.seqs[keep], ms.times[keep]
    sl_keep = ~np.isin(sl.seqs, warm_seqs)
    sl_seqs, sl_times = sl.seqs[sl_keep], sl.times[sl_keep]
    common, i_ms, i_sl = np.intersect1d(ms_seqs, sl_seqs, assume_unique=True, return_indices=True)
    if common.size == 0:
        raise TraceError("MS and SL logs share no sequence numbers after warm-up")
    t_ms, t_sl = ms_times[i_ms], sl_times[i_sl]
    ok = t_sl >= t_ms
    return MatchedTrace(
        seqs=common[ok],
        t_ms=t_ms[ok],
        t_sl=t_sl[ok],
        unmatched_ms=int(ms_seqs.size - common.size),
        unmatched_sl=int(sl_seqs.size - common.size),
        negative=int(np.count_nonzero(~ok)),
        warmup_discarded=int(warm_seqs.size),
    )


def window_report(trace: MatchedTrace, sl_gcl: GclConfig, offset_ns: int, queue: int = QUEUE_DC) -> tuple[dict[int, WindowStat], int]:
    """Window histogram of the pairs and how many were assigned from outside any window."""
    idx, outside = [], 0
    for tm, ts in zip(trace.t_ms.tolist(), trace.t_sl.tolist()):
        a, inside = assign_window(tm, ts, sl_gcl, offset_ns, queue)
        idx.append(a.window_index)
        outside += not inside
    if not idx:
        raise TraceError("no pairs to assign")
    return window_histogram(idx, trace.delays), outside


def stats(trace: MatchedTrace, p_list: Sequence[float] = (0.5, 0.99, 0.999), cdf_points: int = 1000) -> dict:
    if len(trace) == 0:
        raise TraceError("empty trace")
    dist = trace.distribution()
    table = dist.cdf_table(cdf_points)
    return {
        "count": dist.count,
        "min": dist.min,
        "max": dist.max,
        "mean": dist.mean,
        "percentiles": {str(p): dist.percentile(p) for p in p_list},
        "jitter": {str(p): jitter(uncertainty_interval(dist, p)) for p in p_list},
        "cdf": table,
        "ccdf": [(v, 1.0 - c) for v, c in table],
        "negative": trace.negative,
        "unmatched_ms": trace.unmatched_ms,
        "unmatched_sl": trace.unmatched_sl,
        "warmup_discarded": trace.warmup_discarded,
    }


# ---------------------------------------------------------------- files


def write_probe_csv(path, seqs: Iterable[int], times: Iterable[int], fmt: ProbeFormat | None = None) -> None:
    fmt = fmt or ProbeFormat("ns")
    if fmt.time_unit != "ns":
        raise ConfigError("probe files are written in ns")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([fmt.seq_column, fmt.time_column])
        for s, t in zip(seqs, times):
            w.writerow([int(s) % (1 << fmt.seq_bits), int(t)])


def split_probe_logs(records, out_dir, flow: str | None = None) -> tuple[Path, Path, Path]:
    """Write MS and SL probe CSVs (plus format.json) from simulator records.

    The SL timestamp is ``t_ms_out + d_emp``, i.e. the departure as read on the
    SL clock. Dropped packets appear only in the MS log.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = sorted((r for r in records if flow is None or r.flow == flow), key=lambda r: r.seq)
    fmt = ProbeFormat("ns")
    ms_path, sl_path, fmt_path = out / "ms.csv", out / "sl.csv", out / "format.json"
    write_probe_csv(ms_path, [r.seq for r in rows], [r.t_ms_out for r in rows], fmt)
    sent = [r for r in rows if not r.dropped]
    sent.sort(key=lambda r: (r.t_ms_out + r.d_emp, r.seq))
    write_probe_csv(sl_path, [r.seq for r in sent], [r.t_ms_out + r.d_emp for r in sent], fmt)
    fmt_path.write_text(json.dumps(fmt.to_dict(), indent=2))
    return ms_path, sl_path, fmt_path


def write_matched_csv(trace: MatchedTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seq", "t_ms_ns", "t_sl_ns", "delay_ns"])
        for s, a, b in zip(trace.seqs.tolist(), trace.t_ms.tolist(), trace.t_sl.tolist()):
            w.writerow([s, a, b, b - a])


def write_cdf_csv(table, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delay_ns", "cdf"])
        for v, c in table:
            w.writerow([int(v), repr(float(c))])


def write_windows_csv(hist: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window_index", "count", "probability", "min_delay_ns"])
        for i, s in hist.items():
            w.writerow([i, s.count, repr(s.probability), s.min_delay_ns])


def analyze(
    ms_csv,
    sl_csv,
    fmt: ProbeFormat,
    sl_gcl: GclConfig | None,
    offset_ns: int,
    out_dir,
    warmup_ns: int = DEFAULT_WARMUP_NS,
    p_list: Sequence[float] = (0.5, 0.99, 0.999),
    cdf_points: int = 1000,
    extra: dict | None = None,
) -> dict:
    """Parse, match, summarize and write matched.csv, summary.json, cdf.csv and windows.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ms = parse_probe_csv(ms_csv, fmt, "MS")
    sl = parse_probe_csv(sl_csv, fmt, "SL")
    trace = match(ms, sl, warmup_ns)
    summary = stats(trace, p_list, cdf_points)
    write_matched_csv(trace, out / "matched.csv")
    write_cdf_csv(summary.pop("cdf"), out / "cdf.csv")
    summary.pop("ccdf")
    if sl_gcl is not None:
        hist, outside = window_report(trace, sl_gcl, offset_ns)
        write_windows_csv(hist, out / "windows.csv")
        summary["windows"] = [
            {"window_index": i, "count": s.count, "probability": s.probability, "min_delay_ns": s.min_delay_ns}
            for i, s in hist.items()
        ]
        summary["outside_window"] = outside
    summary["parse_errors"] = {"MS": len(ms.errors), "SL": len(sl.errors)}
    summary["inputs"] = {
        "ms_csv": str(ms_csv),
        "sl_csv": str(sl_csv),
        "format": fmt.to_dict(),
        "sl_gcl": None if sl_gcl is None else sl_gcl.to_dict(),
        "offset_ns": offset_ns,
        "warmup_ns": warmup_ns,
        "version": __version__,
    }
    if extra:
        summary.update(extra)
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary
