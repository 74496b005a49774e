"""Simulator: schedules, determinism, tx placement, and oracle mechanics."""

import numpy as np
import pytest

from chaintime.dists import constant, normal, uniform
from chaintime.measures import MeasureKind
from chaintime.process import Outcome
from chaintime.scenario import (
    FaultConfig,
    NetworkConfig,
    ScenarioConfig,
    deferred_overtake_scenario,
    invoice_demo_scenario,
)
from chaintime.sim import block_schedule, run


def plain_config(**kwargs) -> ScenarioConfig:
    defaults = dict(
        name="plain",
        network=NetworkConfig(
            block_time=normal(15_190, 2_710, 4_460, 30_310),
            mining_time=uniform(500, 2_500),
            inclusion_delay=uniform(500, 6_000),
        ),
        horizon_ms=40_000_000,
        measures=(MeasureKind.BLOCK_TIMESTAMP,),
    )
    defaults.update(kwargs)
    return ScenarioConfig(**defaults)


class TestBlockSchedule:
    def test_deterministic_per_seed(self):
        config = plain_config()
        a = block_schedule(config, seed=5)
        b = block_schedule(config, seed=5)
        for left, right in zip(a, b):
            assert np.array_equal(left, right)
        c = block_schedule(config, seed=6)
        assert not np.array_equal(a[0], c[0])

    def test_gaps_respect_clamp(self):
        starts, _, _ = block_schedule(plain_config(), seed=0)
        gaps = np.diff(starts)
        assert gaps.min() >= 4_460 and gaps.max() <= 30_310

    def test_covers_horizon(self):
        config = plain_config()
        starts, timestamps, mining = block_schedule(config, seed=1)
        assert starts[0] == config.network.genesis_timestamp_ms
        assert starts[-1] <= config.horizon_ms
        assert len(starts) == len(timestamps) == len(mining)
        assert mining[0] == 0

    def test_without_drift_timestamps_equal_starts(self):
        starts, timestamps, _ = block_schedule(plain_config(), seed=2)
        assert np.array_equal(starts, timestamps)

    def test_drift_keeps_timestamps_strictly_increasing(self):
        config = plain_config(
            faults=FaultConfig(
                miner_drift_enabled=True, miner_drift_min_ms=0, miner_drift_max_ms=60_000
            )
        )
        starts, timestamps, _ = block_schedule(config, seed=3)
        assert np.all(np.diff(timestamps) > 0)
        assert np.all(timestamps >= starts)  # non-negative drift only adds
        assert not np.array_equal(starts, timestamps)


class TestRunMechanics:
    def test_same_seed_same_everything(self):
        config = invoice_demo_scenario()
        a = run(config, seed=9, measure=MeasureKind.STORAGE_ORACLE)
        b = run(config, seed=9, measure=MeasureKind.STORAGE_ORACLE)
        assert a.records == b.records
        assert a.oracle_events == b.oracle_events
        assert np.array_equal(a.chain.timestamps, b.chain.timestamps)
        assert a.tx_meta == b.tx_meta

    def test_tx_lands_in_first_block_after_visibility(self):
        config = invoice_demo_scenario()
        trace = run(config, seed=4, measure=MeasureKind.PARAMETER)
        starts = trace.real_starts
        checked = 0
        for meta in trace.tx_meta.values():
            if meta.block is None:
                continue
            assert starts[meta.block] >= meta.visible_at
            if meta.block > 1:
                assert starts[meta.block - 1] < meta.visible_at
            checked += 1
        assert checked > 10

    def test_genesis_block_stays_empty(self):
        trace = run(deferred_overtake_scenario(), seed=0)
        assert trace.chain.block(0).transactions == ()

    def test_storage_oracle_reads_lag_block_timestamp(self):
        config = invoice_demo_scenario()
        trace = run(config, seed=11, measure=MeasureKind.STORAGE_ORACLE)
        guard_records = [r for r in trace.records if r.raw_measured_ms is not None]
        assert guard_records
        for record in guard_records:
            assert record.raw_measured_ms <= int(trace.chain.timestamps[record.block_number])

    def test_pull_oracle_values_follow_block_visibility(self):
        config = invoice_demo_scenario()
        trace = run(config, seed=12, measure=MeasureKind.REQUEST_RESPONSE_ORACLE)
        starts = trace.real_starts
        mining = trace.chain.mining_durations
        resolved = [r for r in trace.records if r.raw_measured_ms is not None]
        assert resolved
        for record in resolved:
            block = record.block_number
            assert record.raw_measured_ms >= int(starts[block]) + int(mining[block])

    def test_pull_outage_leads_to_stuck_pending(self):
        base = invoice_demo_scenario()
        from dataclasses import replace
        from chaintime.measures import PullOracleConfig

        config = replace(
            base,
            pull_oracles=(
                PullOracleConfig(
                    provider="timeserver",
                    latency_ms=30_000,
                    outages=((base.network.genesis_timestamp_ms, base.horizon_ms + 1),),
                ),
            ),
        )
        trace = run(config, seed=1, measure=MeasureKind.REQUEST_RESPONSE_ORACLE)
        assert trace.stuck
        assert all(r.outcome is Outcome.STUCK_PENDING for r in trace.stuck)

    def test_parameter_lies_shift_measured_values(self):
        from dataclasses import replace

        base = invoice_demo_scenario()
        config = replace(base, faults=FaultConfig(parameter_lies={"mno": 3_600_000}))
        trace = run(config, seed=2, measure=MeasureKind.PARAMETER)
        lied = [
            r for r in trace.records
            if r.constraint_type == "absolute" and r.raw_measured_ms is not None
        ]
        assert lied
        # the dishonest sender's claims measure an hour ahead of creation
        for record in lied:
            created = trace.tx_meta[record.tx_id].created_at
            assert record.raw_measured_ms == created + 3_600_000

    def test_unused_oracles_not_simulated_by_default(self):
        trace = run(invoice_demo_scenario(), seed=3, measure=MeasureKind.BLOCK_TIMESTAMP)
        assert trace.oracle_events == []

    def test_miner_ordering_does_not_touch_block_schedule(self):
        from dataclasses import replace

        base = deferred_overtake_scenario()
        reordered = replace(
            base, network=replace(base.network, miner_ordering="adversarial_reorder")
        )
        a = run(base, seed=7)
        b = run(reordered, seed=7)
        assert np.array_equal(a.chain.timestamps, b.chain.timestamps)

    def test_trace_export_includes_oracle_lines(self):
        import io

        config = invoice_demo_scenario()
        trace = run(config, seed=5, measure=MeasureKind.STORAGE_ORACLE)
        out = io.StringIO()
        trace.export_trace(out)
        lines = out.getvalue().splitlines()
        assert any(line.startswith("oracle,timefeed,update,") for line in lines)
        assert any(line.startswith("block,") for line in lines)
        assert any(line.startswith("tx,") for line in lines)


class TestDemoNarrative:
    def test_invoice_run_reaches_the_patience_cycle(self):
        trace = run(invoice_demo_scenario(), seed=0, measure=MeasureKind.PARAMETER)
        by_type = {}
        for record in trace.records:
            by_type.setdefault(record.constraint_type, []).append(record)
        assert set(by_type) >= {"absolute", "relative", "cycle", "deferred_choice"}
        cycle_accepts = [r for r in by_type["cycle"] if r.accepted]
        assert len(cycle_accepts) == 7  # all patience iterations execute
        assert len(by_type["deferred_choice"]) == 2  # timer round, then complaint
