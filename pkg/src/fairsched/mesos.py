"""Simulated Mesos master, agents, and framework second-level schedulers."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional

from .core import (
    ResourceVector,
    dominant_share,
    share_value,
    vec_add,
    vec_fits,
    vec_sub_checked,
    vec_sum,
)
from .workload import TaskSpec


class SimulationError(RuntimeError):
    """An operation violated the cluster state machine."""


@dataclass
class Agent:
    id: int
    total: ResourceVector
    available: ResourceVector = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.available is None:
            self.available = self.total
        if not vec_fits(self.available, self.total):
            raise ValueError(f"agent {self.id}: available exceeds total")


@dataclass
class Offer:
    """Resources of one agent granted to one framework.

    ``resources`` is the unused remainder; launches against the offer debit it.
    """

    id: int
    agent_id: int
    resources: ResourceVector
    framework_id: int
    issued_at: Fraction


class Behavior(str, Enum):
    GREEDY_BIN_PACK = "greedy-binpack"
    HOLD_OFFERS = "hold-offers"
    FIRST_FIT = "first-fit"


@dataclass(frozen=True)
class SecondLevelBehavior:
    variant: Behavior = Behavior.FIRST_FIT
    hold_duration: Fraction = Fraction(60)
    decline_filter: Fraction = Fraction(5)

    def __post_init__(self):
        object.__setattr__(self, "variant", Behavior(self.variant))
        if self.hold_duration < 0 or self.decline_filter < 0:
            raise ValueError("hold_duration and decline_filter must be >= 0")


@dataclass
class FrameworkState:
    id: int
    name: str
    behavior: SecondLevelBehavior
    # released-but-unlaunched tasks, FIFO by release (dicts keep insertion order)
    pending: dict[int, TaskSpec] = field(default_factory=dict)
    running: set[int] = field(default_factory=set)
    consumed: ResourceVector = field(default_factory=ResourceVector.zero)
    held_offers: list[Offer] = field(default_factory=list)
    # agent id -> time until which that agent is not offered to us
    filters: dict[int, Fraction] = field(default_factory=dict)
    pending_demand: ResourceVector = field(default_factory=ResourceVector.zero)

    def add_pending(self, task: TaskSpec) -> None:
        if task.id in self.pending or task.id in self.running:
            raise SimulationError(f"task {task.id} is already known to framework {self.id}")
        self.pending[task.id] = task
        self.pending_demand = vec_add(self.pending_demand, task.demand)


@dataclass
class ClusterState:
    agents: list[Agent]
    frameworks: list[FrameworkState]
    clock: Fraction = Fraction(0)
    tasks: dict[int, TaskSpec] = field(default_factory=dict)
    offers: dict[int, Offer] = field(default_factory=dict)
    finished: set[int] = field(default_factory=set)
    next_offer_id: int = 0

    def __post_init__(self):
        kinds = self.agents[0].total.kinds if self.agents else ResourceVector.zero().kinds
        self.totals = vec_sum((a.total for a in self.agents), kinds)
        self._agents = {a.id: a for a in self.agents}
        self._frameworks = {f.id: f for f in self.frameworks}

    def agent(self, agent_id: int) -> Agent:
        return self._agents[agent_id]

    def framework(self, framework_id: int) -> FrameworkState:
        try:
            return self._frameworks[framework_id]
        except KeyError:
            raise SimulationError(f"unknown framework id {framework_id}") from None

    def available(self) -> ResourceVector:
        return vec_sum((a.available for a in self.agents), self.totals.kinds)

    def offered(self, framework_id: Optional[int] = None) -> ResourceVector:
        return vec_sum(
            (o.resources for o in self.offers.values()
             if framework_id is None or o.framework_id == framework_id),
            self.totals.kinds,
        )

    def running_count(self) -> int:
        return sum(len(f.running) for f in self.frameworks)

    def check_conservation(self) -> None:
        """Raise if free + offered + consumed differs from the cluster totals."""
        total = vec_add(self.available(), self.offered())
        for f in self.frameworks:
            total = vec_add(total, f.consumed)
        if total != self.totals:
            raise SimulationError(f"conservation violated: {total} != {self.totals}")
        seen = set()
        for o in self.offers.values():
            if o.agent_id in seen:
                raise SimulationError(f"agent {o.agent_id} in two outstanding offers")
            seen.add(o.agent_id)


def build_cluster(nodes: int, node_resources: ResourceVector,
                  frameworks: list[tuple[str, SecondLevelBehavior]]) -> ClusterState:
    agents = [Agent(i, node_resources) for i in range(nodes)]
    fws = [
        FrameworkState(i, name, behavior,
                       consumed=ResourceVector.zero(node_resources.kinds),
                       pending_demand=ResourceVector.zero(node_resources.kinds))
        for i, (name, behavior) in enumerate(frameworks)
    ]
    return ClusterState(agents, fws)


def advertise(cluster: ClusterState, rng: random.Random) -> list[tuple[int, ResourceVector]]:
    """Agents with free resources, in PRNG-shuffled order.

    Agents already inside an outstanding offer are not advertised again, so an
    agent's resources are never split across two live offers.
    """
    busy = {o.agent_id for o in cluster.offers.values()}
    entries = [
        (a.id, a.available) for a in cluster.agents
        if a.id not in busy and not a.available.is_zero()
    ]
    rng.shuffle(entries)
    return entries


def allocation_cycle(cluster: ClusterState, rng: random.Random) -> list[Offer]:
    """One DRF round of the master's allocator.

    Each advertised agent's whole free bundle goes to the eligible framework
    with the least dominant share, counting outstanding offers (held ones and
    those issued earlier in this cycle) as consumption.
    """
    now = cluster.clock
    totals = cluster.totals
    alloc = {f.id: f.consumed for f in cluster.frameworks}
    for o in cluster.offers.values():
        alloc[o.framework_id] = vec_add(alloc[o.framework_id], o.resources)
    share = {fid: share_value(v, totals) for fid, v in alloc.items()}

    issued = []
    for agent_id, avail in advertise(cluster, rng):
        eligible = [
            f for f in cluster.frameworks
            if f.filters.get(agent_id, Fraction(-1)) <= now
        ]
        if not eligible:
            continue
        # min() keeps the first of equal shares, i.e. registration order
        fw = min(eligible, key=lambda f: share[f.id])
        agent = cluster.agent(agent_id)
        offer = Offer(cluster.next_offer_id, agent_id, avail, fw.id, now)
        cluster.next_offer_id += 1
        agent.available = vec_sub_checked(agent.available, avail)
        cluster.offers[offer.id] = offer
        alloc[fw.id] = vec_add(alloc[fw.id], avail)
        share[fw.id] = share_value(alloc[fw.id], totals)
        issued.append(offer)
    return issued


@dataclass
class SchedulingDecision:
    launches: list[tuple[int, int]] = field(default_factory=list)  # (task_id, agent_id)
    declines: list[int] = field(default_factory=list)
    holds: list[int] = field(default_factory=list)


def _dominant_fraction(task: TaskSpec, reference: ResourceVector) -> Fraction:
    return share_value(task.demand, reference)


def second_level_schedule(fw: FrameworkState, offers: list[Offer], now: Fraction,
                          totals: Optional[ResourceVector] = None) -> SchedulingDecision:
    """Match the framework's pending tasks to its offers.

    Pure: nothing is mutated; the caller applies the decision.  Offers that
    end up with no launches and are not held are declined, as are the unused
    remainders of non-held offers.
    """
    for o in offers:
        if o.framework_id != fw.id:
            raise SimulationError(f"offer {o.id} is not addressed to framework {fw.id}")
    variant = fw.behavior.variant
    remaining = {o.id: o.resources for o in offers}
    ordered = sorted(offers, key=lambda o: (o.issued_at, o.id))
    decision = SchedulingDecision()

    tasks = list(fw.pending.values())
    if variant is Behavior.GREEDY_BIN_PACK:
        ref = totals if totals is not None else vec_sum((o.resources for o in offers), fw.consumed.kinds)
        if not ref.is_zero():
            # stable sort: equal-sized tasks stay FIFO
            tasks.sort(key=lambda t: _dominant_fraction(t, _positive(ref)), reverse=True)

    usable = ordered
    if variant is Behavior.HOLD_OFFERS:
        # hold everything unless the whole pending set fits what is held;
        # offers held for hold_duration are used regardless
        held = vec_sum((o.resources for o in ordered), fw.consumed.kinds)
        if not vec_fits(fw.pending_demand, held):
            usable = [o for o in ordered if now - o.issued_at >= fw.behavior.hold_duration]

    for task in tasks:
        placed = False
        for o in usable:
            if vec_fits(task.demand, remaining[o.id]):
                remaining[o.id] = vec_sub_checked(remaining[o.id], task.demand)
                decision.launches.append((task.id, o.agent_id))
                placed = True
                break
        if not placed and variant is Behavior.FIRST_FIT:
            # strict FIFO: the head blocks everything behind it
            break

    for o in ordered:
        if variant is Behavior.HOLD_OFFERS:
            expired = now - o.issued_at >= fw.behavior.hold_duration
            if remaining[o.id].is_zero() or expired:
                decision.declines.append(o.id)
            else:
                decision.holds.append(o.id)
        else:
            decision.declines.append(o.id)
    return decision


def _positive(ref: ResourceVector) -> ResourceVector:
    # avoid dividing by a zero component when ranking task sizes
    return ResourceVector._from_units(tuple(u if u > 0 else 1 for u in ref.units), ref.kinds)


def launch(cluster: ClusterState, task_id: int, agent_id: int, now: Fraction) -> Fraction:
    """Start a pending task on an agent and return its finish time.

    The demand is taken from the framework's outstanding offer for that agent
    if there is one, otherwise straight from the agent's free pool.
    """
    task = cluster.tasks.get(task_id)
    if task is None:
        raise SimulationError(f"unknown task id {task_id}")
    fw = cluster.framework(task.framework_id)
    if task_id not in fw.pending:
        raise SimulationError(f"task {task_id} is not pending in framework {fw.id}")
    offer = next(
        (o for o in cluster.offers.values()
         if o.agent_id == agent_id and o.framework_id == fw.id),
        None,
    )
    if offer is not None:
        if not vec_fits(task.demand, offer.resources):
            raise SimulationError(f"task {task_id} demand exceeds offer {offer.id} remainder")
        offer.resources = vec_sub_checked(offer.resources, task.demand)
    else:
        agent = cluster.agent(agent_id)
        if not vec_fits(task.demand, agent.available):
            raise SimulationError(f"task {task_id} demand exceeds agent {agent_id} availability")
        agent.available = vec_sub_checked(agent.available, task.demand)
    del fw.pending[task_id]
    fw.pending_demand = vec_sub_checked(fw.pending_demand, task.demand)
    fw.running.add(task_id)
    fw.consumed = vec_add(fw.consumed, task.demand)
    task.launch_time = now
    task.agent_id = agent_id
    return now + task.duration


def finish(cluster: ClusterState, task_id: int, now: Fraction) -> None:
    task = cluster.tasks.get(task_id)
    if task is None or task_id in cluster.finished:
        raise SimulationError(f"task {task_id} is unknown or already finished")
    fw = cluster.framework(task.framework_id)
    if task_id not in fw.running:
        raise SimulationError(f"task {task_id} is not running")
    agent = cluster.agent(task.agent_id)
    agent.available = vec_add(agent.available, task.demand)
    fw.running.remove(task_id)
    fw.consumed = vec_sub_checked(fw.consumed, task.demand)
    cluster.finished.add(task_id)
    task.finish_time = now


def decline(cluster: ClusterState, offer_id: int, now: Fraction) -> None:
    """Return an offer's remainder to its agent; a non-empty remainder starts the decline filter."""
    offer = cluster.offers.pop(offer_id)
    fw = cluster.framework(offer.framework_id)
    if offer in fw.held_offers:
        fw.held_offers.remove(offer)
    if not offer.resources.is_zero():
        agent = cluster.agent(offer.agent_id)
        agent.available = vec_add(agent.available, offer.resources)
        if fw.behavior.decline_filter > 0:
            fw.filters[offer.agent_id] = now + fw.behavior.decline_filter


def hold(cluster: ClusterState, offer_id: int) -> None:
    offer = cluster.offers[offer_id]
    fw = cluster.framework(offer.framework_id)
    if offer not in fw.held_offers:
        fw.held_offers.append(offer)


def apply_decision(cluster: ClusterState, decision: SchedulingDecision, now: Fraction) -> list[tuple[Fraction, int]]:
    """Apply launches, then declines and holds; returns (finish_time, task_id) pairs."""
    finishes = [(launch(cluster, tid, aid, now), tid) for tid, aid in decision.launches]
    for oid in decision.declines:
        decline(cluster, oid, now)
    for oid in decision.holds:
        hold(cluster, oid)
    return finishes


def framework_dominant_share(cluster: ClusterState, framework_id: int):
    return dominant_share(cluster.framework(framework_id).consumed, cluster.totals)
