"""Seeded discrete-event simulator tying the chain, oracles, participants,
and the process contract together.

The block schedule (mining starts, durations, optional miner clock drift) is
precomputed vectorially; the event loop only carries dynamic events, ordered
by (time, kind, insertion). At equal instants transaction creations apply
before oracle update ticks, then block sealing, block visibility, and oracle
callbacks.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np

from .chain import Chain, SimTime, Transaction
from .measures import (
    ChainParams,
    MeasureKind,
    OracleCell,
    PullOracleConfig,
    PushOracleConfig,
    TxContext,
    in_outage,
    so_provider_tick,
    so_update_times,
)
from .process import MessageCatch, ProcessInstance
from .rng import substream
from .scenario import Participant, ScenarioConfig, ScriptEntry

# event kind ranks; ties at one instant resolve in this order
K_TX_CREATED = 0
K_ORACLE_UPDATE = 1
K_BLOCK_SEAL = 2
K_BLOCK_VISIBLE = 3
K_ORACLE_CALLBACK = 4

_SCHEDULE_CHUNK = 1 << 16


@dataclass(frozen=True)
class TxMeta:
    created_at: SimTime
    sender: str
    visible_at: SimTime
    block: int | None


@dataclass
class RunTrace:
    """Everything one run produced: the ledger, oracle activity, and every
    guard decision with its ground-truth classification."""

    scenario: str
    seed: int
    measure: MeasureKind
    chain: Chain
    real_starts: np.ndarray
    records: list = field(default_factory=list)
    oracle_events: list[tuple[str, str, SimTime, int]] = field(default_factory=list)
    tx_meta: dict[str, TxMeta] = field(default_factory=dict)
    dropped: list[str] = field(default_factory=list)
    stuck: list = field(default_factory=list)

    def export_trace(self, stream) -> None:
        self.chain.export_trace(stream)
        for provider, kind, at, value in sorted(self.oracle_events, key=lambda e: e[2]):
            stream.write(f"oracle,{provider},{kind},{at},{value}\n")


def block_schedule(
    config: ScenarioConfig, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(real mining starts, reported timestamps, mining durations).

    Reported timestamps differ from the real starts only when miner clock
    drift is enabled; a running clamp keeps them strictly increasing.
    """
    net = config.network
    rng_block = substream(seed, "chain/block_time")
    genesis = net.genesis_timestamp_ms
    chunks = [np.array([genesis], dtype=np.int64)]
    last = genesis
    while last <= config.horizon_ms:
        gaps = np.maximum(net.block_time.sample(rng_block, _SCHEDULE_CHUNK), 1)
        chunk = last + np.cumsum(gaps)
        chunks.append(chunk)
        last = int(chunk[-1])
    starts = np.concatenate(chunks)
    starts = starts[starts <= config.horizon_ms]
    n = len(starts)

    rng_mining = substream(seed, "chain/mining")
    mining = np.maximum(net.mining_time.sample(rng_mining, n), 0)
    mining[0] = 0

    if config.faults.miner_drift_enabled:
        rng_drift = substream(seed, "chain/drift")
        drift = rng_drift.integers(
            config.faults.miner_drift_min_ms,
            config.faults.miner_drift_max_ms + 1,
            size=n,
            dtype=np.int64,
        )
        drift[0] = 0
        index = np.arange(n, dtype=np.int64)
        # running clamp: ts_i = max(ts_{i-1} + 1, starts_i + drift_i)
        timestamps = np.maximum.accumulate(starts + drift - index) + index
    else:
        timestamps = starts.copy()
    return starts, timestamps, mining


@dataclass
class _PendingTx:
    tx: Transaction
    visible_at: SimTime
    arrival: int


class _Runner:
    def __init__(self, config: ScenarioConfig, seed: int, measure: MeasureKind):
        config.validate()
        self.config = config
        self.seed = seed
        self.measure = measure
        self.starts, self.timestamps, self.mining = block_schedule(config, seed)
        self.n_blocks = len(self.starts)
        self.chain_params = ChainParams(
            genesis_timestamp=int(self.timestamps[0]),
            assumed_mean_block_time_ms=config.network.assumed_mean_block_time_ms,
        )
        self.instance = None
        if config.process is not None:
            self.instance = ProcessInstance(
                model=config.process,
                measure_kind=measure,
                chain_params=self.chain_params,
                activation_floor_ms=config.activation_floor_ms,
                cycle_limit=config.cycle_limit,
            )
        drive_all = config.simulate_unused_oracles
        self.push_configs = tuple(
            config.push_oracles
            if (drive_all or measure is MeasureKind.STORAGE_ORACLE)
            else ()
        )
        self.pull_config: PullOracleConfig | None = None
        if config.pull_oracles and (
            drive_all or measure is MeasureKind.REQUEST_RESPONSE_ORACLE
        ):
            self.pull_config = config.pull_oracles[0]
        self.cells = {p.provider: OracleCell(p.provider) for p in self.push_configs}
        self.read_cell = (
            self.cells[self.push_configs[0].provider] if self.push_configs else None
        )

        self.heap: list = []
        self.seq = itertools.count()
        self.tx_counters: dict[str, itertools.count] = {}
        self.delay_rngs: dict[str, np.random.Generator] = {}
        self.actor_rngs: dict[str, np.random.Generator] = {}
        self.miner_rng = substream(seed, "miner/order")
        self.participants: dict[str, Participant] = {
            p.name: p for p in config.participants
        }

        self.pending_by_block: dict[int, list[_PendingTx]] = {}
        self.sealed_scheduled: set[int] = set()
        self.executed: dict[int, list[Transaction]] = {}
        self.requests_by_block: dict[int, list[int]] = {}
        self.enabled_by_block: dict[int, list[str]] = {}

        self.trace = RunTrace(
            scenario=config.name,
            seed=seed,
            measure=measure,
            chain=Chain(),
            real_starts=self.starts,
        )

    # -- event plumbing ----------------------------------------------------

    def _push(self, at: SimTime, kind: int, payload) -> None:
        heapq.heappush(self.heap, (at, kind, next(self.seq), payload))

    def _next_tx_id(self, sender: str) -> str:
        counter = self.tx_counters.setdefault(sender, itertools.count())
        return f"{sender}-{next(counter)}"

    def _delay_for(self, sender: str) -> int:
        dist = self.config.network.inclusion_delay
        participant = self.participants.get(sender)
        if participant is not None and participant.inclusion_delay is not None:
            dist = participant.inclusion_delay
        rng = self.delay_rngs.get(sender)
        if rng is None:
            rng = self.delay_rngs[sender] = substream(self.seed, f"delay/{sender}")
        return max(0, dist.sample_one(rng))

    def _actor_rng(self, name: str) -> np.random.Generator:
        rng = self.actor_rngs.get(name)
        if rng is None:
            rng = self.actor_rngs[name] = substream(self.seed, f"participant/{name}")
        return rng

    def _submit(self, tx: Transaction) -> None:
        """Assign a created transaction to the first block mined after it
        becomes visible to the network."""
        visible = tx.created_at + self._delay_for(tx.sender)
        idx = int(np.searchsorted(self.starts, visible, side="left"))
        idx = max(idx, 1)  # genesis carries no transactions
        if idx >= self.n_blocks:
            self.trace.dropped.append(tx.id)
            self.trace.tx_meta[tx.id] = TxMeta(tx.created_at, tx.sender, visible, None)
            return
        self.trace.tx_meta[tx.id] = TxMeta(tx.created_at, tx.sender, visible, idx)
        self.pending_by_block.setdefault(idx, []).append(
            _PendingTx(tx=tx, visible_at=visible, arrival=next(self.seq))
        )
        if idx not in self.sealed_scheduled:
            self.sealed_scheduled.add(idx)
            self._push(int(self.starts[idx]), K_BLOCK_SEAL, idx)

    # -- block sealing -----------------------------------------------------

    def _order_block(self, entries: list[_PendingTx]) -> list[_PendingTx]:
        policy = self.config.network.miner_ordering
        if policy == "fifo_by_arrival":
            return sorted(entries, key=lambda e: (e.visible_at, e.arrival))
        if policy == "priority_then_arrival":
            return sorted(entries, key=lambda e: (-e.tx.priority, e.visible_at, e.arrival))
        order = self.miner_rng.permutation(len(entries))
        return [entries[int(i)] for i in order]

    def _seal_block(self, number: int) -> None:
        entries = self._order_block(self.pending_by_block.pop(number, []))
        real_now = int(self.starts[number])
        executed = self.executed.setdefault(number, [])
        for entry in entries:
            position = len(executed)
            executed.append(entry.tx)
            self._execute(entry.tx, number, position, real_now)
        self._push(real_now + int(self.mining[number]), K_BLOCK_VISIBLE, number)

    def _execute(self, tx: Transaction, number: int, position: int, real_now: SimTime) -> None:
        op = tx.payload.get("op")
        if op == "__oracle_update__":
            provider = str(tx.payload["provider"])
            value = int(tx.payload["value"])
            self.cells[provider].write((number, position), value)
            self.trace.oracle_events.append((provider, "update", real_now, value))
            return
        if self.instance is None:
            return
        ctx = TxContext(
            tx=tx,
            block_number=number,
            block_timestamp=int(self.timestamps[number]),
            position_in_block=position,
            chain_params=self.chain_params,
            oracle_view=self.read_cell,
        )
        if op == "__callback__":
            result = self.instance.on_callback(
                int(tx.payload["request_id"]), int(tx.payload["value"]), tx, ctx, real_now
            )
        else:
            result = self.instance.apply(tx, ctx, real_now)
        for request in result.requests:
            self.requests_by_block.setdefault(number, []).append(request.request_id)
        if result.newly_enabled:
            self.enabled_by_block.setdefault(number, []).extend(result.newly_enabled)

    def _block_visible(self, number: int) -> None:
        visible_at = int(self.starts[number]) + int(self.mining[number])
        for request_id in self.requests_by_block.pop(number, ()):
            self._observe_request(request_id, visible_at)
        enabled = self.enabled_by_block.pop(number, None)
        if enabled:
            self._notify(enabled, visible_at)

    # -- pull oracle -------------------------------------------------------

    def _observe_request(self, request_id: int, observed_at: SimTime) -> None:
        pull = self.pull_config
        if pull is None:
            return  # no provider is listening; the guard stays pending
        self.trace.oracle_events.append((pull.provider, "request", observed_at, request_id))
        if in_outage(pull.outages, observed_at):
            return
        self._push(observed_at + pull.latency_ms, K_ORACLE_CALLBACK, request_id)

    def _create_callback(self, request_id: int, now: SimTime) -> None:
        pull = self.pull_config
        sender = f"oracle:{pull.provider}"
        tx = Transaction(
            id=self._next_tx_id(sender),
            sender=sender,
            created_at=now,
            payload={"op": "__callback__", "request_id": request_id, "value": now},
        )
        self.trace.oracle_events.append((pull.provider, "callback", now, now))
        self._submit(tx)

    # -- push oracle -------------------------------------------------------

    def _oracle_tick(self, push: PushOracleConfig, now: SimTime) -> None:
        value = so_provider_tick(push, now)
        if value is None:
            return
        sender = f"oracle:{push.provider}"
        tx = Transaction(
            id=self._next_tx_id(sender),
            sender=sender,
            created_at=now,
            payload={"op": "__oracle_update__", "provider": push.provider, "value": value},
        )
        self._submit(tx)

    # -- participants ------------------------------------------------------

    def _lie_for(self, participant: Participant) -> int:
        return participant.lie_ms + self.config.faults.parameter_lies.get(
            participant.name, 0
        )

    def _create_claim(self, participant: Participant, entry: ScriptEntry, now: SimTime) -> None:
        tx = Transaction(
            id=self._next_tx_id(participant.name),
            sender=participant.name,
            created_at=now,
            payload={"op": entry.element, "timestamp": now + self._lie_for(participant)},
            priority=entry.priority,
        )
        if self.instance is not None:
            element = self.config.process.elements.get(entry.element)
            if isinstance(element, MessageCatch):
                self.instance.note_message_created(entry.element, now)
        self._submit(tx)

    def _notify(self, enabled: list[str], now: SimTime) -> None:
        enabled_set = set(enabled)
        for participant in self.config.participants:
            for entry in participant.script:
                if entry.element not in enabled_set:
                    continue
                if entry.on_enabled_delay_ms is not None:
                    self._push(
                        now + entry.on_enabled_delay_ms,
                        K_TX_CREATED,
                        ("claim", participant.name, entry),
                    )
                elif entry.on_due:
                    self._schedule_due_claims(participant, entry, now)

    def _schedule_due_claims(
        self, participant: Participant, entry: ScriptEntry, now: SimTime
    ) -> None:
        dues = self.instance.element_due_times(entry.element)
        rng = self._actor_rng(participant.name)
        for iteration, due in enumerate(dues):
            jitter = entry.jitter.sample_one(rng) if entry.jitter is not None else 0
            first = max(now, due + entry.jitter_offset_ms + jitter)
            self._push(
                first,
                K_TX_CREATED,
                ("attempt", participant.name, entry, iteration, entry.max_attempts),
            )

    def _run_attempt(
        self, participant: Participant, entry: ScriptEntry, iteration: int,
        attempts_left: int, now: SimTime,
    ) -> None:
        instance = self.instance
        if instance.done or not instance.is_enabled(entry.element):
            return
        if instance.cycle_next_index(entry.element) > iteration:
            return
        self._create_claim(participant, entry, now)
        if attempts_left > 1:
            self._push(
                now + entry.retry_ms,
                K_TX_CREATED,
                ("attempt", participant.name, entry, iteration, attempts_left - 1),
            )

    # -- main loop ---------------------------------------------------------

    def run(self) -> RunTrace:
        for push in self.push_configs:
            for tick in so_update_times(push, self.config.horizon_ms):
                self._push(tick, K_ORACLE_UPDATE, push)
        for participant in self.config.participants:
            for entry in participant.script:
                if entry.at_ms is not None:
                    self._push(entry.at_ms, K_TX_CREATED, ("claim", participant.name, entry))
        if self.instance is not None:
            initial = self.instance.enabled_elements()
            if initial:
                self._notify(initial, int(self.starts[0]))

        horizon = self.config.horizon_ms
        while self.heap:
            at, kind, _, payload = heapq.heappop(self.heap)
            if at > horizon:
                break
            if kind == K_TX_CREATED:
                tag = payload[0]
                if tag == "claim":
                    _, name, entry = payload
                    self._create_claim(self.participants[name], entry, at)
                else:
                    _, name, entry, iteration, attempts_left = payload
                    self._run_attempt(
                        self.participants[name], entry, iteration, attempts_left, at
                    )
            elif kind == K_ORACLE_UPDATE:
                self._oracle_tick(payload, at)
            elif kind == K_BLOCK_SEAL:
                self._seal_block(payload)
            elif kind == K_BLOCK_VISIBLE:
                self._block_visible(payload)
            else:
                self._create_callback(payload, at)

        if self.instance is not None:
            self.trace.stuck = self.instance.finalize(horizon)
            self.trace.records = list(self.instance.records)
        self.trace.chain = Chain.from_schedule(
            self.timestamps,
            self.mining,
            {number: tuple(txs) for number, txs in self.executed.items() if txs},
        )
        return self.trace


def run(config: ScenarioConfig, seed: int, measure: MeasureKind | None = None) -> RunTrace:
    """Execute one seeded run of a scenario under one time measure."""
    chosen = measure if measure is not None else config.measures[0]
    return _Runner(config, seed, chosen).run()
