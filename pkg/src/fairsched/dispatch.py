"""Demand- and DRF-aware queue manager sitting in front of the frameworks.

Tasks are submitted to a per-framework dispatcher queue.  Each dispatch
cycle the manager snapshots cluster consumption and a policy decides which
queue heads are released to their frameworks.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional

from .core import (
    DominantDemandShare,
    DominantShare,
    ResourceVector,
    dominant_demand_share,
    dominant_share,
    share_value,
    vec_add,
    vec_fits,
    vec_sub_checked,
    vec_sub_saturating,
)
from .workload import TaskSpec


class DispatchError(ValueError):
    pass


class PolicyKind(str, Enum):
    PASSTHROUGH = "passthrough"
    DRF_AWARE = "drf"
    DEMAND_AWARE = "demand"
    DEMAND_DRF_AWARE = "demand-drf"

    @classmethod
    def parse(cls, name: str) -> "PolicyKind":
        aliases = {
            "passthrough": cls.PASSTHROUGH, "none": cls.PASSTHROUGH,
            "drf": cls.DRF_AWARE, "drf-aware": cls.DRF_AWARE,
            "demand": cls.DEMAND_AWARE, "demand-aware": cls.DEMAND_AWARE,
            "demand-drf": cls.DEMAND_DRF_AWARE, "demand-drf-aware": cls.DEMAND_DRF_AWARE,
        }
        try:
            return aliases[name.lower().replace("_", "-")]
        except KeyError:
            raise DispatchError(f"unknown policy {name!r}") from None


QUEUE_MANAGER_POLICIES = (PolicyKind.DRF_AWARE, PolicyKind.DEMAND_AWARE, PolicyKind.DEMAND_DRF_AWARE)


@dataclass
class DispatcherQueue:
    framework_id: int
    kinds: tuple[str, ...]
    queue: deque = field(default_factory=deque)
    aggregate_demand: ResourceVector = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.aggregate_demand is None:
            self.aggregate_demand = ResourceVector.zero(self.kinds)

    def push(self, task: TaskSpec) -> None:
        self.queue.append(task)
        self.aggregate_demand = vec_add(self.aggregate_demand, task.demand)

    def pop(self) -> TaskSpec:
        task = self.queue.popleft()
        self.aggregate_demand = vec_sub_checked(self.aggregate_demand, task.demand)
        return task

    def __len__(self) -> int:
        return len(self.queue)


class Dispatchers:
    """The per-framework dispatcher queues, in framework registration order."""

    def __init__(self, framework_ids: list[int], kinds: tuple[str, ...]):
        self.kinds = kinds
        self.queues: dict[int, DispatcherQueue] = {
            fid: DispatcherQueue(fid, kinds) for fid in framework_ids
        }

    @property
    def order(self) -> list[int]:
        return list(self.queues)

    def __getitem__(self, framework_id: int) -> DispatcherQueue:
        return self.queues[framework_id]

    def queued_count(self) -> int:
        return sum(len(q) for q in self.queues.values())


def submit(dispatchers: Dispatchers, task: TaskSpec, now: Fraction) -> None:
    q = dispatchers.queues.get(task.framework_id)
    if q is None:
        raise DispatchError(f"task {task.id} names unregistered framework {task.framework_id}")
    task.submit_time = now
    q.push(task)


@dataclass(frozen=True)
class FrameworkView:
    consumed: ResourceVector
    pending: ResourceVector
    ds: DominantShare
    dds: DominantDemandShare


@dataclass(frozen=True)
class ManagerSnapshot:
    """What the manager knows at the start of a dispatch cycle.

    ``consumed`` is what the master reports as used by running tasks.
    ``pending`` is demand already released to a framework but not launched
    yet; planning counts it as consumption.  ``available`` is the cluster
    total minus running consumption.
    """

    frameworks: dict[int, FrameworkView]
    totals: ResourceVector
    available: ResourceVector
    taken_at: Fraction


def take_snapshot(consumed: dict[int, ResourceVector], pending: dict[int, ResourceVector],
                  dispatchers: Dispatchers, totals: ResourceVector, now: Fraction) -> ManagerSnapshot:
    views = {}
    used = ResourceVector.zero(totals.kinds)
    for fid in dispatchers.order:
        c = consumed[fid]
        used = vec_add(used, c)
        views[fid] = FrameworkView(
            consumed=c,
            pending=pending.get(fid, ResourceVector.zero(totals.kinds)),
            ds=dominant_share(c, totals),
            dds=dominant_demand_share(dispatchers[fid].aggregate_demand, totals),
        )
    return ManagerSnapshot(views, totals, vec_sub_checked(totals, used), now)


@dataclass
class ReleasePlan:
    releases: list[tuple[int, int]] = field(default_factory=list)  # (framework_id, task_id)

    @property
    def frameworks(self) -> list[int]:
        return [fid for fid, _ in self.releases]

    def __len__(self) -> int:
        return len(self.releases)


# A priority key maps (projected DS, projected DDS) to a number; larger wins.
PriorityKey = Callable[[Fraction, Fraction], Fraction]


def factor_difference(ds: Fraction, dds: Fraction) -> Fraction:
    return dds - ds


def factor_ratio(ds: Fraction, dds: Fraction, eps: Fraction = Fraction(1, 1000)) -> Fraction:
    return dds / (ds + eps)


DEMAND_DRF_FORMULAS: dict[str, PriorityKey] = {
    "difference": factor_difference,
    "ratio": factor_ratio,
}


def _plan(snapshot: ManagerSnapshot, dispatchers: Dispatchers, key: PriorityKey) -> ReleasePlan:
    """Greedy release loop shared by all policies.

    At each step the candidates are frameworks whose queue head fits the
    projected free capacity; the one with the largest key wins.  Ties go to
    the framework released from in the previous step, then registration
    order.  Heads that do not fit are skipped; the loop ends when no head fits.
    """
    totals = snapshot.totals
    projected = {}
    free = snapshot.available
    for fid in dispatchers.order:
        view = snapshot.frameworks[fid]
        projected[fid] = vec_add(view.consumed, view.pending)
        free = vec_sub_saturating(free, view.pending)
    demand = {fid: dispatchers[fid].aggregate_demand for fid in dispatchers.order}
    cursor = {fid: 0 for fid in dispatchers.order}

    plan = ReleasePlan()
    last: Optional[int] = None
    while True:
        best_fid, best_key = None, None
        for fid in dispatchers.order:
            q = dispatchers[fid].queue
            if cursor[fid] >= len(q):
                continue
            head = q[cursor[fid]]
            if not vec_fits(head.demand, free):
                continue
            k = key(share_value(projected[fid], totals), share_value(demand[fid], totals))
            if best_key is None or k > best_key or (k == best_key and fid == last):
                best_fid, best_key = fid, k
        if best_fid is None:
            return plan
        head = dispatchers[best_fid].queue[cursor[best_fid]]
        cursor[best_fid] += 1
        projected[best_fid] = vec_add(projected[best_fid], head.demand)
        demand[best_fid] = vec_sub_checked(demand[best_fid], head.demand)
        free = vec_sub_checked(free, head.demand)
        plan.releases.append((best_fid, head.id))
        last = best_fid


def plan_drf_aware(snapshot: ManagerSnapshot, dispatchers: Dispatchers) -> ReleasePlan:
    """Release from the framework with the least projected dominant share."""
    return _plan(snapshot, dispatchers, lambda ds, dds: -ds)


def plan_demand_aware(snapshot: ManagerSnapshot, dispatchers: Dispatchers) -> ReleasePlan:
    """Release from the framework with the largest remaining dominant demand share."""
    return _plan(snapshot, dispatchers, lambda ds, dds: dds)


def plan_demand_drf(snapshot: ManagerSnapshot, dispatchers: Dispatchers,
                    formula: PriorityKey = factor_difference) -> ReleasePlan:
    """Release by the combined demand/share factor (``DDS - DS`` by default)."""
    return _plan(snapshot, dispatchers, formula)


def plan_passthrough(snapshot: ManagerSnapshot, dispatchers: Dispatchers) -> ReleasePlan:
    plan = ReleasePlan()
    for fid in dispatchers.order:
        plan.releases.extend((fid, t.id) for t in dispatchers[fid].queue)
    return plan


def make_plan(policy: PolicyKind, snapshot: ManagerSnapshot, dispatchers: Dispatchers,
              formula: PriorityKey = factor_difference) -> ReleasePlan:
    if policy is PolicyKind.PASSTHROUGH:
        return plan_passthrough(snapshot, dispatchers)
    if policy is PolicyKind.DRF_AWARE:
        return plan_drf_aware(snapshot, dispatchers)
    if policy is PolicyKind.DEMAND_AWARE:
        return plan_demand_aware(snapshot, dispatchers)
    return plan_demand_drf(snapshot, dispatchers, formula)


def dispatch_cycle(policy: PolicyKind, snapshot: ManagerSnapshot, dispatchers: Dispatchers,
                   now: Fraction, deliver: Callable[[TaskSpec], None],
                   refresh: Optional[Callable[[], ManagerSnapshot]] = None,
                   period: Fraction = Fraction(1),
                   formula: PriorityKey = factor_difference) -> ReleasePlan:
    """Plan this cycle's releases and hand each released task to ``deliver``.

    A snapshot older than one dispatch period is replaced by ``refresh()``
    before planning.
    """
    if refresh is not None and now - snapshot.taken_at > period:
        snapshot = refresh()
    plan = make_plan(policy, snapshot, dispatchers, formula)
    for fid, tid in plan.releases:
        task = dispatchers[fid].pop()
        if task.id != tid:
            raise DispatchError(f"plan released task {tid} but head of framework {fid} is {task.id}")
        task.release_time = now
        deliver(task)
    return plan
