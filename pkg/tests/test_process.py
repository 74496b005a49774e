"""Process engine: classification rules and guarded execution paths."""

import pytest
from hypothesis import given, strategies as st

from chaintime.chain import Transaction
from chaintime.measures import ChainParams, MeasureKind, TxContext
from chaintime.process import (
    ABSOLUTE,
    CYCLE,
    DEFERRED_CHOICE,
    RELATIVE,
    CycleExhausted,
    CycleState,
    ElementNotEnabled,
    EventGateway,
    GuardRejected,
    MessageCatch,
    ModelError,
    Outcome,
    ProcessInstance,
    ProcessModel,
    StartTimer,
    Task,
    TimerCatch,
    apply_transaction,
    check_relative,
    classify_absolute,
    cycle_advance,
    resolve_deferred_choice,
)
from chaintime.timers import parse_timer


class TestClassifyAbsolute:
    # [PAPER] definitions: FN iff measured < s_e <= s_tx; FP iff s_tx < s_e <= measured
    def test_quadrants(self):
        assert classify_absolute(s_tx=100, s_e=50, measured=80) is Outcome.TP
        assert classify_absolute(s_tx=10, s_e=50, measured=20) is Outcome.TN
        assert classify_absolute(s_tx=10, s_e=50, measured=80) is Outcome.FP
        assert classify_absolute(s_tx=100, s_e=50, measured=20) is Outcome.FN

    def test_boundary_deadline_equals_creation(self):
        # deadline reached exactly at creation counts as elapsed
        assert classify_absolute(s_tx=50, s_e=50, measured=49) is Outcome.FN
        assert classify_absolute(s_tx=50, s_e=50, measured=50) is Outcome.TP

    @given(st.integers(0, 1000), st.integers(0, 1000), st.integers(0, 1000))
    def test_partition(self, s_tx, s_e, measured):
        truth = s_e <= s_tx
        reported = s_e <= measured
        expected = {
            (True, True): Outcome.TP,
            (False, False): Outcome.TN,
            (False, True): Outcome.FP,
            (True, False): Outcome.FN,
        }[(truth, reported)]
        assert classify_absolute(s_tx, s_e, measured) is expected


class TestCheckRelative:
    def test_quadrants(self):
        assert check_relative(0, 100, 50, 0, 100) is Outcome.TP
        assert check_relative(0, 40, 50, 0, 40) is Outcome.TN
        assert check_relative(0, 100, 50, 0, 40) is Outcome.FP
        assert check_relative(0, 40, 50, 0, 100) is Outcome.FN

    def test_negative_measured_delta_counts_as_not_met(self):
        assert check_relative(100, 90, 5, 0, 100) is Outcome.FN


class TestCycleAdvance:
    def test_accepts_in_order(self):
        state = CycleState(due_schedule=(100, 200, 300))
        state, accepted, missed = cycle_advance(state, 150)
        assert accepted and state.next_index == 1 and missed == []

    def test_rejects_before_due(self):
        state = CycleState(due_schedule=(100, 200))
        same, accepted, missed = cycle_advance(state, 99)
        assert not accepted and same.next_index == 0

    def test_reports_missed_iterations(self):
        state = CycleState(due_schedule=(100, 200, 300, 400))
        state, accepted, missed = cycle_advance(state, 350)
        assert accepted and missed == [1, 2]
        # missed iterations are still consumable afterwards
        state, accepted, missed = cycle_advance(state, 350)
        assert accepted and state.next_index == 2

    def test_exhaustion(self):
        state = CycleState(due_schedule=(100,), next_index=1)
        with pytest.raises(CycleExhausted):
            cycle_advance(state, 500)


class TestDeferredChoice:
    def test_first_eligible_wins(self):
        winner, truth, outcome = resolve_deferred_choice(
            [("a", False), ("b", True), ("c", True)], {"b": 10}
        )
        assert winner == "b" and truth == "b" and outcome is Outcome.MATCH

    def test_mismatch_when_truth_differs(self):
        winner, truth, outcome = resolve_deferred_choice(
            [("timer", True)], {"timer": 100, "msg": 50}
        )
        assert winner == "timer" and truth == "msg" and outcome is Outcome.MISMATCH

    def test_trigger_tie_broken_by_applied_order(self):
        winner, truth, outcome = resolve_deferred_choice(
            [("a", True), ("b", True)], {"a": 50, "b": 50}
        )
        assert truth == "a" and outcome is Outcome.MATCH


# ---------------------------------------------------------------------------
# Engine walkthroughs (parameter measure: measured == payload timestamp)
# ---------------------------------------------------------------------------

PARAMS = ChainParams(genesis_timestamp=0, assumed_mean_block_time_ms=10_000)


def race_model() -> ProcessModel:
    elements = {
        "start": StartTimer(id="start", spec=parse_timer("1970-01-01T00:00:01Z")),
        "gate": EventGateway(id="gate", branches=("wait", "note")),
        "wait": TimerCatch(id="wait", spec=parse_timer("PT2S")),
        "note": MessageCatch(id="note", message="note"),
        "cycle": TimerCatch(id="cycle", spec=parse_timer("R2/PT1S")),
    }
    flows = {"start": "gate", "wait": "cycle", "note": None, "cycle": None}
    return ProcessModel(elements=elements, flows=flows, start="start")


def make_instance(measure=MeasureKind.PARAMETER) -> ProcessInstance:
    return ProcessInstance(race_model(), measure, PARAMS)


def claim(element: str, at: int, tx_id: str = None, sender: str = "p") -> Transaction:
    return Transaction(
        id=tx_id or f"{element}-{at}",
        sender=sender,
        created_at=at,
        payload={"op": element, "timestamp": at},
    )


def ctx_for(tx: Transaction, block: int = 1, block_ts: int = None) -> TxContext:
    return TxContext(
        tx=tx,
        block_number=block,
        block_timestamp=block_ts if block_ts is not None else tx.created_at + 100,
        position_in_block=0,
        chain_params=PARAMS,
    )


class TestEngineAbsolute:
    def test_rejects_before_deadline_with_tn_record(self):
        inst = make_instance()
        tx = claim("start", 500)
        result = inst.apply(tx, ctx_for(tx), real_now=600)
        assert result.status == "rejected" and result.reason == "deadline_not_reached"
        assert result.records[0].outcome is Outcome.TN
        assert inst.is_enabled("start")

    def test_accepts_after_deadline_and_enables_gateway(self):
        inst = make_instance()
        tx = claim("start", 1_500)
        result = inst.apply(tx, ctx_for(tx), real_now=1_600)
        assert result.accepted
        assert result.records[0].outcome is Outcome.TP
        assert sorted(result.newly_enabled) == ["note", "wait"]

    def test_unknown_element_rejected(self):
        inst = make_instance()
        tx = claim("nope", 1_500)
        with pytest.raises(ElementNotEnabled):
            apply_transaction(inst, tx, ctx_for(tx))

    def test_wrapper_raises_on_guard_rejection(self):
        inst = make_instance()
        tx = claim("start", 10)
        with pytest.raises(GuardRejected):
            apply_transaction(inst, tx, ctx_for(tx))


def started(inst: ProcessInstance, at: int = 1_500) -> None:
    tx = claim("start", at)
    assert inst.apply(tx, ctx_for(tx), real_now=at + 100).accepted


class TestEngineRelativeAndRace:
    def test_relative_guard_measures_delta_from_anchor(self):
        inst = make_instance()
        started(inst, at=1_500)
        early = claim("wait", 3_000)  # delta 1500 < 2000
        result = inst.apply(early, ctx_for(early), real_now=3_100)
        assert result.status == "rejected"
        assert result.records[0].outcome is Outcome.TN
        late = claim("wait", 3_600)  # delta 2100 >= 2000
        result = inst.apply(late, ctx_for(late), real_now=3_700)
        assert result.accepted
        record = next(r for r in result.records if r.constraint_type == RELATIVE)
        assert record.outcome is Outcome.TP and record.measured_ms == 2_100

    def test_timer_win_with_earlier_message_is_mismatch(self):
        inst = make_instance()
        started(inst, at=1_500)
        inst.note_message_created("note", 2_000)  # created but included late
        tx = claim("wait", 3_600)
        result = inst.apply(tx, ctx_for(tx), real_now=3_700)
        gateway = next(r for r in result.records if r.constraint_type == DEFERRED_CHOICE)
        assert gateway.outcome is Outcome.MISMATCH
        assert gateway.winner == "wait" and gateway.truth_winner == "note"
        assert not inst.is_enabled("note")

    def test_message_win_is_match_and_ends_process(self):
        inst = make_instance()
        started(inst, at=1_500)
        inst.note_message_created("note", 2_000)
        tx = claim("note", 2_000, sender="customer")
        result = inst.apply(tx, ctx_for(tx), real_now=2_100)
        assert result.accepted
        gateway = next(r for r in result.records if r.constraint_type == DEFERRED_CHOICE)
        assert gateway.outcome is Outcome.MATCH
        assert inst.done


class TestEngineCycle:
    def advance_to_cycle(self, inst):
        started(inst, at=1_500)
        tx = claim("wait", 3_600)
        assert inst.apply(tx, ctx_for(tx), real_now=3_700).accepted

    def test_iterations_consume_in_order_then_advance(self):
        inst = make_instance()
        self.advance_to_cycle(inst)
        # dues: anchor 3600 + 1s, + 2s
        early = claim("cycle", 4_500)
        assert inst.apply(early, ctx_for(early), real_now=4_600).status == "rejected"
        first = claim("cycle", 4_700)
        result = inst.apply(first, ctx_for(first), real_now=4_800)
        assert result.accepted and result.records[0].iteration == 0
        assert inst.cycle_next_index("cycle") == 1
        second = claim("cycle", 5_700)
        result = inst.apply(second, ctx_for(second), real_now=5_800)
        assert result.accepted and result.records[0].iteration == 1
        assert inst.done

    def test_missed_iterations_reported_not_skipped(self):
        inst = make_instance()
        self.advance_to_cycle(inst)
        tardy = claim("cycle", 9_000)
        result = inst.apply(tardy, ctx_for(tardy), real_now=9_100)
        assert result.accepted
        assert result.records[0].missed_iterations == (1,)
        assert inst.cycle_next_index("cycle") == 1  # second iteration still pending


class TestRequestResponse:
    def test_guard_parks_and_resolves_at_requesting_block(self):
        inst = make_instance(MeasureKind.REQUEST_RESPONSE_ORACLE)
        tx = claim("start", 1_500)
        result = inst.apply(tx, ctx_for(tx, block=4), real_now=1_600)
        assert result.status == "parked"
        request = result.requests[0]
        cb = Transaction(
            id="cb-0", sender="oracle:pull", created_at=2_000,
            payload={"op": "__callback__", "request_id": request.request_id, "value": 2_000},
        )
        done = inst.on_callback(request.request_id, 2_000, cb, ctx_for(cb, block=6), 2_100)
        assert done.accepted
        record = done.records[0]
        assert record.block_number == 4  # decision attributed to requesting block
        # deadline 1000 <= s_tx 1500 and <= measured 2000: a true positive
        assert record.measured_ms == 2_000 and record.outcome is Outcome.TP

    def test_unresolved_guard_becomes_stuck_at_horizon(self):
        inst = make_instance(MeasureKind.REQUEST_RESPONSE_ORACLE)
        tx = claim("start", 1_500)
        assert inst.apply(tx, ctx_for(tx), real_now=1_600).status == "parked"
        stuck = inst.finalize(horizon_ms=10_000)
        assert len(stuck) == 1
        assert stuck[0].outcome is Outcome.STUCK_PENDING
        assert stuck[0].constraint_type == ABSOLUTE


class TestModelValidation:
    def test_gateway_needs_two_branches(self):
        elements = {
            "start": StartTimer(id="start", spec=parse_timer("P1D")),
            "g": EventGateway(id="g", branches=("w",)),
            "w": TimerCatch(id="w", spec=parse_timer("P1D")),
        }
        model = ProcessModel(elements=elements, flows={"start": "g", "w": None}, start="start")
        with pytest.raises(ModelError):
            model.validate()

    def test_unreachable_elements_rejected(self):
        elements = {
            "start": StartTimer(id="start", spec=parse_timer("P1D")),
            "orphan": Task(id="orphan", name="x", performer="p"),
        }
        model = ProcessModel(elements=elements, flows={"start": None}, start="start")
        with pytest.raises(ModelError):
            model.validate()

    def test_start_must_be_timer(self):
        elements = {"t": Task(id="t", name="x", performer="p")}
        model = ProcessModel(elements=elements, flows={"t": None}, start="t")
        with pytest.raises(ModelError):
            model.validate()
