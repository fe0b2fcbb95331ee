"""Discrete-event loop tying arrivals, dispatch, allocation, and completions together.

Events at equal timestamps run in the order TaskFinish, TaskArrival,
Dispatch, AllocationCycle, OfferHoldExpiry, so resources freed at a
tick are visible to that tick's dispatch and allocation.

The only randomness is the agent advertisement order, drawn from
``random.Random(seed)`` (MT19937).
"""

from __future__ import annotations

import heapq
import itertools
import logging
import random
import time
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from typing import Any, Optional

from . import __version__
from .dispatch import (
    DEMAND_DRF_FORMULAS,
    Dispatchers,
    PolicyKind,
    dispatch_cycle,
    submit,
    take_snapshot,
)
from .mesos import (
    ClusterState,
    apply_decision,
    allocation_cycle,
    build_cluster,
    finish,
    second_level_schedule,
)
from .metrics import FairnessSeries
from .scenario import ScenarioConfig
from .workload import TaskSpec, generate

log = logging.getLogger(__name__)

ENGINE_VERSION = __version__


class EventKind(IntEnum):
    # value is the same-timestamp priority
    TASK_FINISH = 0
    TASK_ARRIVAL = 1
    DISPATCH = 2
    ALLOCATION_CYCLE = 3
    OFFER_HOLD_EXPIRY = 4


@dataclass(frozen=True, order=True)
class SimEvent:
    time: Fraction
    kind: EventKind
    seq: int
    payload: Any = field(default=None, compare=False)


@dataclass
class RunRecord:
    scenario: ScenarioConfig
    policy: PolicyKind
    seed: int
    tasks: list[TaskSpec]
    fairness: FairnessSeries
    event_count: int
    end_time: Fraction
    engine_version: str = ENGINE_VERSION
    wall_clock_s: float = 0.0
    unlaunched: list[int] = field(default_factory=list)
    capped: bool = False
    max_running: int = 0

    def framework_names(self) -> list[str]:
        return [f.name for f in self.scenario.frameworks]

    def comparable(self) -> tuple:
        """Everything except wall-clock time."""
        return (
            self.scenario, self.policy, self.seed, self.engine_version,
            [(t.id, t.framework_id, t.submit_time, t.release_time, t.launch_time,
              t.finish_time, t.agent_id) for t in self.tasks],
            self.fairness.points, self.event_count, self.end_time,
            self.unlaunched, self.capped, self.max_running,
        )


def _ms(t: Fraction) -> int:
    ms = t * 1000
    if ms.denominator != 1:
        raise ValueError(f"simulation time {t} is not a whole number of milliseconds")
    return ms.numerator


class Simulation:
    """One run of a scenario under one policy.

    With ``check_invariants`` the resource-conservation identity and offer
    exclusivity are verified after every event.
    """

    def __init__(self, cfg: ScenarioConfig, policy: Optional[PolicyKind] = None,
                 seed: Optional[int] = None, check_invariants: bool = False):
        self.cfg = cfg
        self.policy = cfg.policy if policy is None else policy
        self.seed = cfg.seed if seed is None else seed
        self.check_invariants = check_invariants
        self.rng = random.Random(self.seed)
        self.formula = DEMAND_DRF_FORMULAS[cfg.demand_drf_formula]

        self.cluster: ClusterState = build_cluster(
            cfg.nodes, cfg.node_resources, [(f.name, f.behavior) for f in cfg.frameworks]
        )
        fids = [f.id for f in self.cluster.frameworks]
        self.dispatchers = Dispatchers(fids, self.cluster.totals.kinds)
        self.fairness = FairnessSeries(
            {fid: [] for fid in fids}, cfg.fair_level(), cfg.capacity_in_tasks()
        )
        self.arrivals = generate(cfg.arrival_profiles())
        self.events: list[tuple[int, int, int, SimEvent]] = []
        self._seq = itertools.count()
        self.event_count = 0
        self.max_running = 0
        self.now = Fraction(0)

    def _push(self, t: Fraction, kind: EventKind, payload: Any = None) -> None:
        # integer-millisecond key keeps heap comparisons cheap; times are ms-exact
        ev = SimEvent(t, kind, next(self._seq), payload)
        heapq.heappush(self.events, (_ms(t), int(kind), ev.seq, ev))

    def _work_left(self) -> bool:
        return len(self.cluster.finished) < len(self.arrivals)

    def _sample(self, fid: int) -> None:
        self.fairness.record(fid, self.now, len(self.cluster.framework(fid).running))

    # -- event handlers --------------------------------------------------------

    def _on_arrival(self, task: TaskSpec) -> None:
        self.cluster.tasks[task.id] = task
        submit(self.dispatchers, task, self.now)

    def _snapshot(self):
        fws = self.cluster.frameworks
        return take_snapshot(
            {f.id: f.consumed for f in fws},
            {f.id: f.pending_demand for f in fws},
            self.dispatchers, self.cluster.totals, self.now,
        )

    def _on_dispatch(self) -> None:
        if self.dispatchers.queued_count():
            dispatch_cycle(
                self.policy, self._snapshot(), self.dispatchers, self.now,
                deliver=lambda t: self.cluster.framework(t.framework_id).add_pending(t),
                refresh=self._snapshot, period=self.cfg.dispatch_period,
                formula=self.formula,
            )
        if self._work_left():
            self._push(self.now + self.cfg.dispatch_period, EventKind.DISPATCH)

    def _schedule(self, fw, offers) -> None:
        decision = second_level_schedule(fw, offers, self.now, self.cluster.totals)
        for finish_at, tid in apply_decision(self.cluster, decision, self.now):
            self._push(finish_at, EventKind.TASK_FINISH, tid)
        if decision.launches:
            self._sample(fw.id)
        for oid in decision.holds:
            offer = self.cluster.offers[oid]
            expiry = offer.issued_at + fw.behavior.hold_duration
            if offer.issued_at == self.now:
                self._push(expiry, EventKind.OFFER_HOLD_EXPIRY, oid)

    def _on_allocation(self) -> None:
        issued = allocation_cycle(self.cluster, self.rng)
        by_fw: dict[int, list] = {}
        for o in issued:
            by_fw.setdefault(o.framework_id, []).append(o)
        for fw in self.cluster.frameworks:
            offers = list(fw.held_offers) + by_fw.get(fw.id, [])
            if offers:
                self._schedule(fw, offers)
        if self._work_left():
            self._push(self.now + self.cfg.allocation_period, EventKind.ALLOCATION_CYCLE)

    def _on_hold_expiry(self, offer_id: int) -> None:
        offer = self.cluster.offers.get(offer_id)
        if offer is None:
            return
        fw = self.cluster.framework(offer.framework_id)
        self._schedule(fw, list(fw.held_offers))

    def _on_finish(self, task_id: int) -> None:
        task = self.cluster.tasks[task_id]
        finish(self.cluster, task_id, self.now)
        self._sample(task.framework_id)

    # -- main loop -------------------------------------------------------------

    def run(self) -> RunRecord:
        started = time.perf_counter()
        for a in self.arrivals:
            self._push(a.time, EventKind.TASK_ARRIVAL, a.task)
        if self.arrivals:
            self._push(Fraction(0), EventKind.DISPATCH)
            self._push(Fraction(0), EventKind.ALLOCATION_CYCLE)

        capped = False
        handlers = {
            EventKind.TASK_FINISH: self._on_finish,
            EventKind.TASK_ARRIVAL: self._on_arrival,
            EventKind.OFFER_HOLD_EXPIRY: self._on_hold_expiry,
        }
        while self.events:
            ev = self.events[0][3]
            if ev.time > self.cfg.time_cap:
                capped = True
                break
            heapq.heappop(self.events)
            if ev.time < self.now:
                raise AssertionError(f"event time went backwards: {ev}")
            self.now = ev.time
            self.cluster.clock = ev.time
            self.event_count += 1
            if ev.kind is EventKind.DISPATCH:
                self._on_dispatch()
            elif ev.kind is EventKind.ALLOCATION_CYCLE:
                self._on_allocation()
            else:
                handlers[ev.kind](ev.payload)
            running = self.cluster.running_count()
            if running > self.max_running:
                self.max_running = running
            if self.check_invariants:
                self.cluster.check_conservation()

        tasks = [a.task for a in self.arrivals]
        unlaunched = [t.id for t in tasks if t.launch_time is None]
        if capped and unlaunched:
            log.warning("time cap %s reached with %d unlaunched tasks", self.cfg.time_cap, len(unlaunched))
        return RunRecord(
            scenario=self.cfg,
            policy=self.policy,
            seed=self.seed,
            tasks=tasks,
            fairness=self.fairness,
            event_count=self.event_count,
            end_time=self.now,
            wall_clock_s=time.perf_counter() - started,
            unlaunched=unlaunched,
            capped=capped,
            max_running=self.max_running,
        )


def run(scenario: ScenarioConfig, policy: Optional[PolicyKind] = None, seed: Optional[int] = None,
        check_invariants: bool = False) -> RunRecord:
    return Simulation(scenario, policy, seed, check_invariants).run()


def replay_check(record: RunRecord) -> bool:
    """Re-simulate from the record's inputs; True iff the result is identical.

    A record stamped by a different engine version is never considered
    reproducible.
    """
    if record.engine_version != ENGINE_VERSION:
        log.warning("record from engine %s, this is %s", record.engine_version, ENGINE_VERSION)
        return False
    again = run(record.scenario, record.policy, record.seed)
    return again.comparable() == record.comparable()
