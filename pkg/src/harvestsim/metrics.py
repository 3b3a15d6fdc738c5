"""Slowdown, percentiles, categories and report exports."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .model import Allocation, ClusterConfig, InvocationRecord

CATEGORIES = ("Default", "Accelerate", "Harvest", "Safeguard", "Mixed")
REPORT_HEADER = "inv_id,function_id,category,slowdown,latency_s,delta_cpu,delta_mem"
CDF_HEADER = "percentile,latency_s,slowdown"


class MissingBaselineError(ValueError):
    pass


def slowdown(e_i: float, e_b: float | None) -> float:
    if e_b is None or not e_b > 0:
        raise MissingBaselineError(f"baseline latency must be > 0, got {e_b}")
    return e_i / e_b


def avg_slowdown(records: Iterable[InvocationRecord]) -> float:
    vals = [r.slowdown for r in records]
    if not vals:
        raise ValueError("avg_slowdown of an empty workload")
    return math.fsum(vals) / len(vals)


def percentile(values: Sequence[float], p) -> float:
    """Order statistic at index ceil((n-1) * p / 100), no interpolation.

    ``p`` is converted through ``str`` to an exact fraction so that e.g.
    p=99 over 100 values selects index 99 regardless of float rounding.
    """
    if not values:
        raise ValueError("percentile of an empty sequence")
    frac = Fraction(str(p))
    if not 0 <= frac <= 100:
        raise ValueError("p must lie in [0, 100]")
    xs = sorted(values)
    k = math.ceil((len(xs) - 1) * frac / 100)
    return xs[k]


def categorize(rec: InvocationRecord, user_alloc: Allocation) -> str:
    if rec.was_safeguard:
        return "Safeguard"
    dc = rec.allocation.cpu - user_alloc.cpu
    dm = rec.allocation.mem - user_alloc.mem
    if dc == 0 and dm == 0:
        return "Default"
    if dc <= 0 and dm <= 0:
        return "Harvest"
    if dc >= 0 and dm >= 0:
        return "Accelerate"
    return "Mixed"


def first_invocations(records: Iterable[InvocationRecord]) -> set[int]:
    firsts: dict[str, int] = {}
    for r in records:
        if r.function_id not in firsts or r.inv_id < firsts[r.function_id]:
            firsts[r.function_id] = r.inv_id
    return set(firsts.values())


def safe_rate(records: Sequence[InvocationRecord]) -> float:
    """Share of safeguard invocations among non-first invocations."""
    firsts = first_invocations(records)
    rest = [r for r in records if r.inv_id not in firsts]
    if not rest:
        return 0.0
    return sum(r.was_safeguard for r in rest) / len(rest)


@dataclass
class ReportRow:
    inv_id: int
    function_id: str
    category: str
    slowdown: float
    latency_s: float
    delta_cpu: int
    delta_mem: int


@dataclass
class WorkloadReport:
    rows: list[ReportRow]
    avg_slowdown: float
    p50_latency_s: float
    p99_latency_s: float
    p99_slowdown: float
    max_slowdown: float
    shares: dict[str, float]
    slo_violation_rate: float
    safe_rate: float
    cdf: list[tuple[int, float, float]]

    def aggregates(self) -> dict[str, float]:
        out = {
            "invocations": len(self.rows),
            "avg_slowdown": self.avg_slowdown,
            "p50_latency_s": self.p50_latency_s,
            "p99_latency_s": self.p99_latency_s,
            "p99_slowdown": self.p99_slowdown,
            "max_slowdown": self.max_slowdown,
            "slo_violation_rate": self.slo_violation_rate,
            "safe_rate": self.safe_rate,
        }
        for c in CATEGORIES:
            out[f"share_{c.lower()}"] = self.shares[c]
        return out

    def rows_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        buf.write(REPORT_HEADER + "\n")
        for r in self.rows:
            buf.write(f"{r.inv_id},{r.function_id},{r.category},{r.slowdown!r},"
                      f"{r.latency_s!r},{r.delta_cpu},{r.delta_mem}\n")
        return buf.getvalue()

    def aggregates_text(self, header_comment: str | None = None) -> str:
        lines = [f"# {header_comment}"] if header_comment else []
        lines += [f"{k}={v!r}" for k, v in self.aggregates().items()]
        return "\n".join(lines) + "\n"

    def cdf_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        buf.write(CDF_HEADER + "\n")
        for p, lat, sd in self.cdf:
            buf.write(f"{p},{lat!r},{sd!r}\n")
        return buf.getvalue()


def report(records: Sequence[InvocationRecord], catalog, cfg: ClusterConfig) -> WorkloadReport:
    if not records:
        raise ValueError("cannot report on an empty run")
    recs = sorted(records, key=lambda r: r.inv_id)
    rows = []
    for r in recs:
        user = catalog[r.function_id].user_alloc
        rows.append(ReportRow(r.inv_id, r.function_id, categorize(r, user), r.slowdown,
                              r.response_latency_s, r.allocation.cpu - user.cpu,
                              r.allocation.mem - user.mem))
    sds = [r.slowdown for r in recs]
    lats = [r.response_latency_s for r in recs]
    n = len(rows)
    shares = {c: sum(row.category == c for row in rows) / n for c in CATEGORIES}
    cdf = [(p, percentile(lats, p), percentile(sds, p)) for p in range(0, 101)]
    return WorkloadReport(
        rows=rows,
        avg_slowdown=avg_slowdown(recs),
        p50_latency_s=percentile(lats, 50),
        p99_latency_s=percentile(lats, 99),
        p99_slowdown=percentile(sds, 99),
        max_slowdown=max(sds),
        shares=shares,
        slo_violation_rate=sum(s > cfg.slo_threshold for s in sds) / n,
        safe_rate=safe_rate(recs),
        cdf=cdf,
    )
