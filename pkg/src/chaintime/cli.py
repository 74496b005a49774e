"""Command-line front end.

Subcommands: run (one seeded run, record stream out), sweep (seed range,
aggregated report), report (re-aggregate saved record streams), parse-timer,
demo-invoice, and print-config. Exit codes: 0 success, 1 scenario/input
error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict

from .experiment import (
    CellStats,
    MetricsReport,
    RECORD_HEADER,
    emit_report,
    sweep,
    write_records,
)
from .measures import MeasureKind
from .scenario import (
    SCENARIO_PRESETS,
    SchemaError,
    ScenarioConfig,
    dump_config_yaml,
    load_scenario,
)
from .sim import run
from .timers import TimerParseError, due_times, format_timer, parse_timer

EXIT_OK = 0
EXIT_SCENARIO = 1
EXIT_RUNTIME = 2


class ScenarioInputError(Exception):
    pass


def _resolve_scenario(name: str) -> ScenarioConfig:
    if name in SCENARIO_PRESETS:
        return SCENARIO_PRESETS[name]()
    try:
        return load_scenario(name)
    except FileNotFoundError:
        raise ScenarioInputError(
            f"no such scenario file or preset: {name!r}; presets: {sorted(SCENARIO_PRESETS)}"
        ) from None


def _measure_arg(value: str | None) -> MeasureKind | None:
    if value is None:
        return None
    try:
        return MeasureKind(value)
    except ValueError:
        raise ScenarioInputError(
            f"unknown measure {value!r}; valid kinds: {[m.value for m in MeasureKind]}"
        ) from None


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _write_out(path: str | None, text: str) -> None:
    stream, close = _open_out(path)
    try:
        stream.write(text)
    finally:
        if close:
            stream.close()


def _cmd_run(args) -> int:
    config = _resolve_scenario(args.scenario)
    trace = run(config, args.seed, _measure_arg(args.measure))
    stream, close = _open_out(args.out)
    try:
        write_records(trace, stream)
    finally:
        if close:
            stream.close()
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8") as fh:
            trace.export_trace(fh)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _resolve_scenario(args.scenario)
    seeds = range(args.seed, args.seed + args.seeds)
    measure = _measure_arg(args.measure)
    report = sweep(config, seeds, measures=(measure,) if measure else None)
    _write_out(args.out, emit_report(report, args.format))
    return EXIT_OK


def _cmd_report(args) -> int:
    report = MetricsReport(scenario="records", seeds=())
    for path in args.records:
        _ingest_record_file(report, path)
    _write_out(args.out, emit_report(report, args.format))
    return EXIT_OK


def _ingest_record_file(report: MetricsReport, path: str) -> None:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError:
        raise ScenarioInputError(f"no such record file: {path!r}") from None
    for lineno, line in enumerate(lines, 1):
        if not line or line == RECORD_HEADER:
            continue
        parts = line.split(",")
        if len(parts) != 8:
            raise ScenarioInputError(f"{path}:{lineno}: malformed record line")
        _, _, measure_name, constraint, _, truth, measured, outcome = parts
        measure = _measure_arg(measure_name)
        stats = report.cell(measure, constraint)
        _ingest_outcome(stats, outcome, truth, measured, f"{path}:{lineno}")
        report.runs = max(report.runs, 1)


def _ingest_outcome(stats: CellStats, outcome: str, truth: str, measured: str, where: str):
    counters = {
        "TP": "tp", "TN": "tn", "FP": "fp", "FN": "fn",
        "Match": "match", "Mismatch": "mismatch", "StuckPending": "stuck",
    }
    attr = counters.get(outcome)
    if attr is None:
        raise ScenarioInputError(f"{where}: unknown outcome {outcome!r}")
    setattr(stats, attr, getattr(stats, attr) + 1)
    if truth and measured:
        err = abs(int(measured) - int(truth))
        stats.err_sum += err
        stats.err_count += 1
        stats.err_max = max(stats.err_max, err)


def _cmd_parse_timer(args) -> int:
    try:
        spec = parse_timer(args.text)
    except TimerParseError as exc:
        print(f"parse error at position {exc.position}: {exc.reason}", file=sys.stderr)
        return EXIT_SCENARIO
    fields = ", ".join(f"{k}={v}" for k, v in asdict(spec).items())
    print(f"{type(spec).__name__}({fields})")
    print(f"canonical: {format_timer(spec)}")
    dues = due_times(spec, args.enablement, limit=5)
    for i, due in enumerate(dues[:5]):
        print(f"due[{i}] = {due}")
    return EXIT_OK


def _cmd_demo_invoice(args) -> int:
    config = SCENARIO_PRESETS["invoice-demo"]()
    report = sweep(config, range(args.seed, args.seed + args.seeds))
    _write_out(args.out, emit_report(report, args.format))
    return EXIT_OK


def _cmd_print_config(args) -> int:
    config = _resolve_scenario(args.scenario)
    _write_out(args.out, dump_config_yaml(config))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaintime",
        description="Deterministic simulation of on-chain time measures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one seeded run; emits the record stream")
    p_run.add_argument("--scenario", default="invoice-demo")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--measure", default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--trace-out", default=None, help="also export the chain trace")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="seed sweep with aggregated report")
    p_sweep.add_argument("--scenario", default="invoice-demo")
    p_sweep.add_argument("--seed", type=int, default=0, help="first seed")
    p_sweep.add_argument("--seeds", type=int, default=10, help="number of seeds")
    p_sweep.add_argument("--measure", default=None)
    p_sweep.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_report = sub.add_parser("report", help="aggregate saved record streams")
    p_report.add_argument("records", nargs="+")
    p_report.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p_report.add_argument("--out", default=None)
    p_report.set_defaults(func=_cmd_report)

    p_timer = sub.add_parser("parse-timer", help="parse a timer definition")
    p_timer.add_argument("text")
    p_timer.add_argument(
        "--enablement", type=int, default=0, help="enablement instant for due times (ms)"
    )
    p_timer.set_defaults(func=_cmd_parse_timer)

    p_demo = sub.add_parser("demo-invoice", help="run the invoicing demo sweep")
    p_demo.add_argument("--seed", type=int, default=0)
    p_demo.add_argument("--seeds", type=int, default=1)
    p_demo.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    p_demo.add_argument("--out", default=None)
    p_demo.set_defaults(func=_cmd_demo_invoice)

    p_config = sub.add_parser("print-config", help="show the effective configuration")
    p_config.add_argument("--scenario", default="invoice-demo")
    p_config.add_argument("--out", default=None)
    p_config.set_defaults(func=_cmd_print_config)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioInputError, SchemaError, TimerParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
