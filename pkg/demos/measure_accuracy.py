"""Compare the five time measures on the invoicing demo across seeds.

For each measure, reports the mean and maximum absolute error between the
measured value and the transaction's true creation instant, plus the
classification counts. Expected picture: parameter exact, block timestamp
off by the inclusion delay, both oracles off by their update cadence or
round-trip latency, block number off by accumulated drift (worst).

Run with: python3 demos/measure_accuracy.py [n_seeds]
"""

import sys
from collections import Counter

from chaintime import MeasureKind
from chaintime.experiment import sweep
from chaintime.scenario import invoice_demo_scenario


def main() -> None:
    n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 5
    config = invoice_demo_scenario()
    errors: dict[MeasureKind, list[int]] = {m: [] for m in MeasureKind}
    outcomes: dict[MeasureKind, Counter] = {m: Counter() for m in MeasureKind}

    def collect(trace):
        for record in trace.records:
            outcomes[trace.measure][record.outcome.value] += 1
            if record.raw_measured_ms is None or record.tx_id is None:
                continue
            created = trace.tx_meta[record.tx_id].created_at
            errors[trace.measure].append(abs(record.raw_measured_ms - created))

    sweep(config, range(n_seeds), per_run=collect)

    print(f"{n_seeds} seeds, {len(config.measures)} measures\n")
    print(f"{'measure':<26}{'mean err':>12}{'max err':>12}  outcomes")
    for measure in MeasureKind:
        errs = errors[measure]
        mean = sum(errs) / len(errs) if errs else 0.0
        peak = max(errs) if errs else 0
        counts = ", ".join(f"{k}={v}" for k, v in sorted(outcomes[measure].items()))
        print(f"{measure.value:<26}{mean:>10.0f}ms{peak:>10d}ms  {counts}")


if __name__ == "__main__":
    main()
