"""Replication control, report aggregation, and CSV export.

A report is a flat table of (object name, data source, category, statistic,
value) rows.  Each replication contributes one integer total per
(object, data source) pair; the aggregate carries four statistic rows per
pair: Total (sum across replications), Mean, Min and Max.  Mean values are
quantized to six significant digits at aggregation time so that the written
CSV reproduces every row exactly when parsed back.

Reports are byte-deterministic for a fixed config and seed: replications use
independent derived streams, aggregation reduces in replication order, and
no timestamp enters the CSV (run metadata stays on the result object).
"""

from __future__ import annotations

import csv
import datetime
import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, TextIO

from . import __version__
from .errors import ConfigurationError, SimulationError
from .kernel import dump_trace, initialize
from .model import (
    ModelConfig,
    RunStats,
    build_consanguinity_model,
    collect_run_stats,
    validate_config,
)

CSV_HEADER = ("object_name", "data_source", "category", "statistic", "value")
STATISTICS = ("Total", "Mean", "Min", "Max")


@dataclass(frozen=True)
class ReportRow:
    """One aggregated statistic; (object, source, statistic) is unique per report."""

    object_name: str
    data_source: str
    category: str
    statistic: str
    value: float


@dataclass
class ExperimentResult:
    """Aggregated rows plus the raw per-replication statistics and run metadata."""

    rows: list[ReportRow]
    per_replication: list[RunStats]
    metadata: dict = field(default_factory=dict)

    def row_value(self, object_name: str, data_source: str, statistic: str) -> float:
        for row in self.rows:
            if (row.object_name, row.data_source, row.statistic) == (
                object_name, data_source, statistic,
            ):
                return row.value
        raise KeyError((object_name, data_source, statistic))


def _quantize(value: float) -> float:
    """Round to six significant digits, the precision the CSV carries."""
    return float(format(value, ".6g"))


def run_experiment(
    config: ModelConfig,
    *,
    builder: Callable[[ModelConfig, int], object] = build_consanguinity_model,
    trace_path: Optional[str] = None,
) -> ExperimentResult:
    """Run the configured replications and aggregate their statistics.

    Replication ``r`` builds a fresh model seeded from (base_seed, r) and
    runs it to ``run_length``.  Kernel failures are re-raised with the
    replication index attached.  ``trace_path``, when given, captures the
    event trace of replication 0.
    """
    violations = validate_config(config)
    if violations:
        summary = "; ".join(str(v) for v in violations)
        raise ConfigurationError(f"invalid model config: {summary}")
    per_replication: list[RunStats] = []
    for r in range(config.replications):
        spec = builder(config, r)
        record = trace_path is not None and r == 0
        handle = initialize(spec, 0.0, record_trace=record)
        try:
            handle.run_until(config.run_length)
        except SimulationError as exc:
            raise SimulationError(f"replication {r}: {exc}") from exc
        if record:
            with open(trace_path, "w", encoding="utf-8", newline="") as fh:
                dump_trace(handle.trace, fh)
        per_replication.append(collect_run_stats(handle))
    rows = _aggregate(per_replication)
    metadata = {
        "config": config.to_dict(),
        "base_seed": config.base_seed,
        "replications": config.replications,
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "version": __version__,
    }
    return ExperimentResult(rows=rows, per_replication=per_replication, metadata=metadata)


def _aggregate(per_replication: Sequence[RunStats]) -> list[ReportRow]:
    n = len(per_replication)
    values: dict[tuple[str, str], list[int]] = {}
    categories: dict[tuple[str, str], str] = {}
    for stats in per_replication:
        for object_name, data_source, category, value in stats.rows:
            key = (object_name, data_source)
            values.setdefault(key, []).append(value)
            categories[key] = category
    rows: list[ReportRow] = []
    for key in sorted(values):
        object_name, data_source = key
        samples = values[key]
        total = sum(samples)
        per_stat = {
            "Total": float(total),
            "Mean": _quantize(total / n),
            "Min": float(min(samples)),
            "Max": float(max(samples)),
        }
        for statistic in sorted(STATISTICS):
            rows.append(ReportRow(object_name, data_source, categories[key], statistic, per_stat[statistic]))
    return rows


def _format_value(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return format(value, ".6g")


def _write_rows(rows: Sequence[ReportRow], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    ordered = sorted(rows, key=lambda r: (r.object_name, r.data_source, r.statistic))
    for row in ordered:
        writer.writerow(
            (row.object_name, row.data_source, row.category, row.statistic, _format_value(row.value))
        )


def export_csv(result: ExperimentResult, path: str) -> None:
    """Write the report as UTF-8 CSV with LF line endings.

    Rows are sorted by (object name, data source, statistic); integral
    values carry no decimal point and the rest at most six significant
    digits, so repeated exports of the same result are byte-identical.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _write_rows(result.rows, fh)


def csv_text(result: ExperimentResult) -> str:
    """The exact text :func:`export_csv` would write."""
    buffer = io.StringIO()
    _write_rows(result.rows, buffer)
    return buffer.getvalue()


def read_csv(path: str) -> list[ReportRow]:
    """Parse a report CSV back into rows (inverse of :func:`export_csv`)."""
    rows: list[ReportRow] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ConfigurationError(f"{path}: unexpected header {header!r}")
        for record in reader:
            object_name, data_source, category, statistic, value = record
            rows.append(ReportRow(object_name, data_source, category, statistic, float(value)))
    return rows
