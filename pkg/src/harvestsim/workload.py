"""Invocation traces: Poisson generation, CSV ingestion, time rescaling."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import Allocation, ConfigError, FunctionSpec

TRACE_HEADER = ["invocation_id", "function_id", "arrival_time_s", "input_scale"]
CATALOG_HEADER = [
    "function_id", "user_cpu_cores", "user_mem_mb", "base_latency_s", "sat_cpu_base",
    "sat_mem_base", "cpu_exponent", "mem_exponent", "sat_jitter",
]


class TraceParseError(ConfigError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


class UnknownFunctionError(ConfigError):
    pass


@dataclass(frozen=True)
class Call:
    function_id: str
    arrival_time_s: float
    input_scale: float = 1.0


@dataclass(frozen=True)
class Trace:
    calls: tuple[Call, ...]
    catalog: dict[str, FunctionSpec]

    def __post_init__(self):
        prev = -math.inf
        for c in self.calls:
            if c.arrival_time_s < prev:
                raise ValueError("trace arrivals must be non-decreasing")
            prev = c.arrival_time_s
            if c.function_id not in self.catalog:
                raise UnknownFunctionError(f"unknown function {c.function_id!r}")

    def __len__(self):
        return len(self.calls)

    def mean_iat(self) -> float:
        """Mean gap between arrivals, counting the first gap from t=0."""
        if not self.calls:
            return 0.0
        return self.calls[-1].arrival_time_s / len(self.calls)


def _as_catalog(catalog) -> dict[str, FunctionSpec]:
    if isinstance(catalog, dict):
        return dict(catalog)
    return {f.id: f for f in catalog}


def generate_poisson_trace(catalog: Iterable[FunctionSpec], mean_iat_s: float, n_calls: int,
                           seed: int, scale_range: tuple[float, float] = (0.5, 2.0),
                           weights: Optional[Sequence[float]] = None) -> Trace:
    """Exponential inter-arrival gaps; function ids uniform (or weighted).

    Input scales are log-uniform over ``scale_range``.
    """
    cat = _as_catalog(catalog)
    if not cat:
        raise ConfigError("catalog is empty")
    if not mean_iat_s > 0:
        raise ConfigError("mean_iat_s must be > 0")
    if n_calls < 1:
        raise ConfigError("n_calls must be >= 1")
    lo, hi = scale_range
    if not 0 < lo <= hi:
        raise ConfigError("scale_range must satisfy 0 < lo <= hi")
    ids = sorted(cat)
    p = None
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(ids),) or (w < 0).any() or w.sum() <= 0:
            raise ConfigError("weights must be one non-negative value per function")
        p = w / w.sum()

    rng = np.random.default_rng(seed)
    arrivals = np.cumsum(rng.exponential(mean_iat_s, size=n_calls))
    picks = rng.choice(len(ids), size=n_calls, p=p)
    scales = np.exp(rng.uniform(math.log(lo), math.log(hi), size=n_calls))
    calls = tuple(Call(ids[k], float(t), float(s)) for k, t, s in zip(picks, arrivals, scales))
    return Trace(calls, cat)


def rescale_trace(trace: Trace, factor: float) -> Trace:
    if not factor > 0:
        raise ValueError("factor must be > 0")
    return Trace(tuple(replace(c, arrival_time_s=c.arrival_time_s * factor) for c in trace.calls),
                 trace.catalog)


def _data_lines(fh):
    # comment lines (seed/config provenance headers) are skipped
    for lineno, line in enumerate(fh, start=1):
        if line.startswith("#") or not line.strip():
            continue
        yield lineno, line


def _read_rows(path, header):
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        lines = list(_data_lines(fh))
    if not lines:
        raise TraceParseError(path, 1, "empty file")
    first_no, first = lines[0]
    got = first.rstrip("\r\n").split(",")
    if got != header:
        raise TraceParseError(path, first_no, f"bad header {got!r}, expected {header!r}")
    for lineno, line in lines[1:]:
        row = next(csv.reader([line]))
        if len(row) != len(header):
            raise TraceParseError(path, lineno, f"expected {len(header)} fields, got {len(row)}")
        yield lineno, row


def load_catalog(path) -> dict[str, FunctionSpec]:
    cat = {}
    for lineno, row in _read_rows(path, CATALOG_HEADER):
        try:
            fid = row[0]
            spec = FunctionSpec(
                id=fid,
                user_alloc=Allocation(int(row[1]), int(row[2])),
                base_latency_s=float(row[3]),
                sat_cpu_base=float(row[4]),
                sat_mem_base=float(row[5]),
                cpu_exponent=float(row[6]),
                mem_exponent=float(row[7]),
                sat_jitter=float(row[8]),
            )
        except (ValueError, TypeError) as e:
            raise TraceParseError(path, lineno, str(e)) from None
        if fid in cat:
            raise TraceParseError(path, lineno, f"duplicate function {fid!r}")
        cat[fid] = spec
    if not cat:
        raise ConfigError(f"{path}: catalog has no functions")
    return cat


def load_trace(path, catalog_path) -> Trace:
    cat = load_catalog(catalog_path)
    rows = []
    for lineno, row in _read_rows(path, TRACE_HEADER):
        try:
            inv_id = int(row[0])
            t = float(row[2])
            scale = float(row[3])
        except ValueError as e:
            raise TraceParseError(path, lineno, str(e)) from None
        if not (math.isfinite(t) and math.isfinite(scale) and scale > 0):
            raise TraceParseError(path, lineno, "arrival time must be finite and input_scale > 0")
        if row[1] not in cat:
            raise UnknownFunctionError(f"{path}:{lineno}: unknown function {row[1]!r}")
        rows.append((t, inv_id, Call(row[1], t, scale)))
    # stable re-sort by arrival; file order breaks ties
    rows.sort(key=lambda r: r[0])
    return Trace(tuple(r[2] for r in rows), cat)


def _fmt(x: float) -> str:
    return repr(float(x))


def trace_csv(trace: Trace, header_comment: str | None = None) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    buf.write(",".join(TRACE_HEADER) + "\n")
    for i, c in enumerate(trace.calls):
        buf.write(f"{i},{c.function_id},{_fmt(c.arrival_time_s)},{_fmt(c.input_scale)}\n")
    return buf.getvalue()


def catalog_csv(catalog, header_comment: str | None = None) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    buf.write(",".join(CATALOG_HEADER) + "\n")
    for f in _as_catalog(catalog).values():
        buf.write(",".join([
            f.id, str(f.user_alloc.cpu), str(f.user_alloc.mem), _fmt(f.base_latency_s),
            _fmt(f.sat_cpu_base), _fmt(f.sat_mem_base), _fmt(f.cpu_exponent),
            _fmt(f.mem_exponent), _fmt(f.sat_jitter),
        ]) + "\n")
    return buf.getvalue()


def write_trace(trace: Trace, path, header_comment=None):
    Path(path).write_text(trace_csv(trace, header_comment), encoding="utf-8")


def write_catalog(catalog, path, header_comment=None):
    Path(path).write_text(catalog_csv(catalog, header_comment), encoding="utf-8")


def synthetic_catalog(n_functions: int = 10, seed: int = 0) -> dict[str, FunctionSpec]:
    """A mixed catalog shaped after common benchmark defaults.

    Most functions are configured at 4 cores / 512 MB and a few at
    8 cores / 1024 MB; saturation bases are drawn so that both
    over- and under-provisioned functions occur.
    """
    if n_functions < 1:
        raise ConfigError("n_functions must be >= 1")
    rng = np.random.default_rng(seed)
    cat = {}
    for k in range(n_functions):
        big = k % 10 >= 7
        user = Allocation(8, 1024) if big else Allocation(4, 512)
        # ratio of saturation to user config, spanning harvestable to acceleratable
        r_cpu = float(rng.uniform(0.25, 1.6))
        r_mem = float(rng.uniform(0.25, 1.6))
        cat[f"fn{k:02d}"] = FunctionSpec(
            id=f"fn{k:02d}",
            user_alloc=user,
            base_latency_s=round(float(rng.uniform(1.0, 6.0)), 3),
            sat_cpu_base=round(user.cpu * r_cpu, 3),
            sat_mem_base=round(user.mem * r_mem, 1),
            cpu_exponent=1.0,
            mem_exponent=1.0,
            sat_jitter=0.1,
        )
    return cat


def desk_catalog() -> dict[str, FunctionSpec]:
    """Four functions: two over-provisioned, two under-provisioned on both
    resources for every input scale in [0.5, 2.0] under jitter 0.1."""
    fs = [
        FunctionSpec("over_a", Allocation(6, 768), 2.0, 1.5, 192.0, sat_jitter=0.1),
        FunctionSpec("over_b", Allocation(4, 512), 3.0, 1.0, 128.0, sat_jitter=0.1),
        FunctionSpec("under_a", Allocation(1, 128), 1.5, 3.0, 320.0, sat_jitter=0.1),
        FunctionSpec("under_b", Allocation(2, 256), 2.5, 4.5, 576.0, sat_jitter=0.1),
    ]
    return {f.id: f for f in fs}
