"""Batch experiments: seed sweeps, outcome aggregation, and report output.

Sweeps aggregate incrementally so that large traces never accumulate in
memory; a per-run callback lets callers inspect each trace before it is
discarded. All emitted text is byte-deterministic for a given config and
seed list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, IO, Iterable

from .measures import MeasureKind
from .process import ABSOLUTE, CYCLE, DEFERRED_CHOICE, RELATIVE, GuardRecord, Outcome
from .scenario import ScenarioConfig
from .sim import RunTrace, run

CONSTRAINT_ORDER = (ABSOLUTE, RELATIVE, CYCLE, DEFERRED_CHOICE)

RECORD_HEADER = "scenario,seed,measure,constraint,element,ground_truth_ms,measured_ms,outcome"
REPORT_HEADER = (
    "measure,constraint_type,tp,tn,fp,fn,match,mismatch,stuck,"
    "mean_abs_err_ms,max_abs_err_ms"
)


@dataclass
class CellStats:
    """Aggregated outcomes for one (measure, constraint type) pair."""

    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    match: int = 0
    mismatch: int = 0
    stuck: int = 0
    err_sum: int = 0
    err_count: int = 0
    err_max: int = 0

    def add(self, record: GuardRecord) -> None:
        if record.outcome is Outcome.TP:
            self.tp += 1
        elif record.outcome is Outcome.TN:
            self.tn += 1
        elif record.outcome is Outcome.FP:
            self.fp += 1
        elif record.outcome is Outcome.FN:
            self.fn += 1
        elif record.outcome is Outcome.MATCH:
            self.match += 1
        elif record.outcome is Outcome.MISMATCH:
            self.mismatch += 1
        else:
            self.stuck += 1
        if record.measured_ms is not None and record.ground_truth_ms is not None:
            err = abs(record.measured_ms - record.ground_truth_ms)
            self.err_sum += err
            self.err_count += 1
            self.err_max = max(self.err_max, err)

    @property
    def mean_abs_err(self) -> float | None:
        return self.err_sum / self.err_count if self.err_count else None


@dataclass
class MetricsReport:
    """Sweep results: one CellStats per (measure, constraint type)."""

    scenario: str
    seeds: tuple[int, ...]
    cells: dict[tuple[MeasureKind, str], CellStats] = field(default_factory=dict)
    runs: int = 0

    def cell(self, measure: MeasureKind, constraint: str) -> CellStats:
        return self.cells.setdefault((measure, constraint), CellStats())

    def add_trace(self, trace: RunTrace) -> None:
        self.runs += 1
        for record in trace.records:
            self.cell(trace.measure, record.constraint_type).add(record)

    def sorted_keys(self) -> list[tuple[MeasureKind, str]]:
        measure_rank = {m: i for i, m in enumerate(MeasureKind)}
        constraint_rank = {c: i for i, c in enumerate(CONSTRAINT_ORDER)}
        return sorted(
            self.cells,
            key=lambda key: (measure_rank[key[0]], constraint_rank.get(key[1], 99)),
        )


def run_single(
    config: ScenarioConfig, seed: int, measure: MeasureKind | None = None
) -> RunTrace:
    return run(config, seed, measure)


def sweep(
    config: ScenarioConfig,
    seeds: Iterable[int],
    measures: Iterable[MeasureKind] | None = None,
    per_run: Callable[[RunTrace], None] | None = None,
) -> MetricsReport:
    """Run every (seed, measure) combination, aggregating as it goes."""
    seed_list = tuple(seeds)
    chosen = tuple(measures) if measures is not None else config.measures
    report = MetricsReport(scenario=config.name, seeds=seed_list)
    for seed in seed_list:
        for measure in chosen:
            trace = run(config, seed, measure)
            report.add_trace(trace)
            if per_run is not None:
                per_run(trace)
    return report


# ---------------------------------------------------------------------------
# Text output
# ---------------------------------------------------------------------------

def record_lines(trace: RunTrace) -> list[str]:
    """One decision per line, in the documented record-stream format."""
    lines = []
    for record in trace.records:
        truth = "" if record.ground_truth_ms is None else str(record.ground_truth_ms)
        measured = "" if record.measured_ms is None else str(record.measured_ms)
        lines.append(
            f"{trace.scenario},{trace.seed},{trace.measure.value},"
            f"{record.constraint_type},{record.element},{truth},{measured},"
            f"{record.outcome.value}"
        )
    return lines


def write_records(trace: RunTrace, stream: IO[str]) -> None:
    stream.write(RECORD_HEADER + "\n")
    for line in record_lines(trace):
        stream.write(line + "\n")


def emit_report(report: MetricsReport, fmt: str = "csv") -> str:
    if fmt == "csv":
        return _emit_csv(report)
    if fmt == "markdown":
        return _emit_markdown(report)
    raise ValueError(f"unknown report format {fmt!r}; use 'csv' or 'markdown'")


def _row(measure: MeasureKind, constraint: str, stats: CellStats) -> list[str]:
    mean = stats.mean_abs_err
    return [
        measure.value,
        constraint,
        str(stats.tp),
        str(stats.tn),
        str(stats.fp),
        str(stats.fn),
        str(stats.match),
        str(stats.mismatch),
        str(stats.stuck),
        "" if mean is None else f"{mean:.3f}",
        "" if stats.err_count == 0 else str(stats.err_max),
    ]


def _emit_csv(report: MetricsReport) -> str:
    lines = [REPORT_HEADER]
    for measure, constraint in report.sorted_keys():
        lines.append(",".join(_row(measure, constraint, report.cells[(measure, constraint)])))
    return "\n".join(lines) + "\n"


# Design-level ratings of each measure, asserted from qualitative analysis
# rather than simulation output (more dots = better).
REFERENCE_CRITERIA_RATINGS = {
    "accuracy": {"block_timestamp": 2, "block_number": 0, "parameter": 3,
                 "storage_oracle": 1, "request_response_oracle": 1},
    "trust": {"block_timestamp": 2, "block_number": 3, "parameter": 0,
              "storage_oracle": 1, "request_response_oracle": 1},
    "immediacy": {"block_timestamp": 3, "block_number": 3, "parameter": 3,
                  "storage_oracle": 3, "request_response_oracle": 0},
    "cost": {"block_timestamp": 3, "block_number": 3, "parameter": 2,
             "storage_oracle": 0, "request_response_oracle": 0},
    "reliability": {"block_timestamp": 3, "block_number": 3, "parameter": 2,
                    "storage_oracle": 1, "request_response_oracle": 0},
}

REFERENCE_CONSTRAINT_RATINGS = {
    "absolute": {"block_timestamp": 2, "block_number": 0, "parameter": 3,
                 "storage_oracle": 1, "request_response_oracle": 1},
    "relative": {"block_timestamp": 2, "block_number": 1, "parameter": 3,
                 "storage_oracle": 0, "request_response_oracle": 0},
}


def _dots(level: int) -> str:
    return "●" * level + "○" * (3 - level)


def _emit_markdown(report: MetricsReport) -> str:
    out = [
        f"# Sweep report: {report.scenario}",
        "",
        f"Runs: {report.runs} ({len(report.seeds)} seeds)",
        "",
        "## Measured outcomes",
        "",
        "| measure | constraint | TP | TN | FP | FN | Match | Mismatch | Stuck "
        "| mean abs err (ms) | max abs err (ms) |",
        "|---|---|---|---|---|---|---|---|---|---|---|",
    ]
    for measure, constraint in report.sorted_keys():
        row = _row(measure, constraint, report.cells[(measure, constraint)])
        out.append("| " + " | ".join(value or "-" for value in row) + " |")
    out += [
        "",
        "## Reference ratings (design-level, not measured)",
        "",
        "| criterion | " + " | ".join(m.value for m in MeasureKind) + " |",
        "|---|---|---|---|---|---|",
    ]
    for criterion, ratings in REFERENCE_CRITERIA_RATINGS.items():
        out.append(
            f"| {criterion} | "
            + " | ".join(_dots(ratings[m.value]) for m in MeasureKind)
            + " |"
        )
    out += [
        "",
        "| constraint fit | " + " | ".join(m.value for m in MeasureKind) + " |",
        "|---|---|---|---|---|---|",
    ]
    for constraint, ratings in REFERENCE_CONSTRAINT_RATINGS.items():
        out.append(
            f"| {constraint} | "
            + " | ".join(_dots(ratings[m.value]) for m in MeasureKind)
            + " |"
        )
    return "\n".join(out) + "\n"
