"""Benchmark report rows and their CSV / Markdown rendering.

CSV keeps full float precision (``repr`` round-trips in IEEE 754); the
Markdown view renders accuracy as percent with one decimal, "68.9 ± 0.9".
Output is byte-deterministic and locale-independent.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import asdict, dataclass

from .classifier import TrainConfig
from .ensembles import MethodSpec
from .errors import EmptyReport

CSV_HEADER = "dataset,method,ways,shots,mean,ci95,episodes,seed,config_fingerprint"


@dataclass(frozen=True)
class ReportRow:
    dataset: str
    method: str
    ways: int
    shots: int
    mean: float
    ci95: float
    episodes: int
    seed: int
    config_fingerprint: str

    def __post_init__(self):
        if not 0.0 <= self.mean <= 1.0:
            raise ValueError(f"mean accuracy {self.mean} outside [0, 1]")
        if self.ci95 < 0.0:
            raise ValueError(f"ci95 {self.ci95} negative")


@dataclass(frozen=True)
class BenchmarkReport:
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    def merged_with(self, other: "BenchmarkReport") -> "BenchmarkReport":
        return BenchmarkReport(rows=self.rows + other.rows)


def config_fingerprint(config: TrainConfig, method: MethodSpec) -> str:
    """Stable short hash identifying (hyperparameters, method) pairs.

    The training seed is excluded: it is derived per episode and already
    recorded via the run seed column.
    """
    payload = {k: v for k, v in asdict(config).items() if k != "seed"}
    payload["method"] = {
        "variant": method.variant,
        "members": list(method.members) if method.members is not None else None,
        "average_logits": method.average_logits,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def _csv_field(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(report: BenchmarkReport, fmt: str = "csv") -> str:
    """Render a report as 'csv' or 'markdown' text."""
    if not report.rows:
        raise EmptyReport("report has no rows")
    if fmt == "csv":
        out = io.StringIO()
        out.write(CSV_HEADER + "\n")
        for r in report.rows:
            out.write(
                ",".join(
                    _csv_field(v)
                    for v in (
                        r.dataset,
                        r.method,
                        r.ways,
                        r.shots,
                        r.mean,
                        r.ci95,
                        r.episodes,
                        r.seed,
                        r.config_fingerprint,
                    )
                )
                + "\n"
            )
        return out.getvalue()
    if fmt == "markdown":
        lines = [
            "| dataset | method | ways | shots | accuracy | episodes | seed | config |",
            "| --- | --- | --- | --- | --- | --- | --- | --- |",
        ]
        for r in report.rows:
            cell = f"{100 * r.mean:.1f} ± {100 * r.ci95:.1f}"
            lines.append(
                f"| {r.dataset} | {r.method} | {r.ways} | {r.shots} | {cell} "
                f"| {r.episodes} | {r.seed} | {r.config_fingerprint} |"
            )
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def parse_csv(text: str) -> BenchmarkReport:
    """Inverse of ``emit(..., 'csv')`` for finite values."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("missing or unexpected CSV header")
    rows = []
    for ln in lines[1:]:
        f = ln.split(",")
        if len(f) != 9:
            raise ValueError(f"expected 9 fields, got {len(f)}: {ln!r}")
        rows.append(
            ReportRow(
                dataset=f[0],
                method=f[1],
                ways=int(f[2]),
                shots=int(f[3]),
                mean=float(f[4]),
                ci95=float(f[5]),
                episodes=int(f[6]),
                seed=int(f[7]),
                config_fingerprint=f[8],
            )
        )
    return BenchmarkReport(rows=tuple(rows))
