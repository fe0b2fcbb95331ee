"""Deterministic task arrival streams."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .core import ResourceVector, to_fraction

DEFAULT_TASK_DURATION = Fraction(300)


@dataclass
class TaskSpec:
    """A task and its lifecycle timestamps (simulated seconds)."""

    id: int
    framework_id: int
    demand: ResourceVector
    duration: Fraction
    submit_time: Optional[Fraction] = None
    release_time: Optional[Fraction] = None
    launch_time: Optional[Fraction] = None
    finish_time: Optional[Fraction] = None
    agent_id: Optional[int] = None

    def __post_init__(self):
        if self.demand.is_zero():
            raise ValueError(f"task {self.id} has an all-zero demand")
        if self.duration < 0:
            raise ValueError(f"task {self.id} has negative duration")


# Metrics code refers to finished tasks as records; same shape.
TaskRecord = TaskSpec


@dataclass(frozen=True)
class ArrivalProfile:
    framework_id: int
    count: int
    interval: Fraction
    demand: ResourceVector
    duration: Fraction = DEFAULT_TASK_DURATION
    start_offset: Fraction = Fraction(0)

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if self.interval <= 0:
            raise ValueError("interval must be > 0")
        for name in ("interval", "duration", "start_offset"):
            object.__setattr__(self, name, to_fraction(getattr(self, name)))


@dataclass(frozen=True, order=True)
class Arrival:
    time: Fraction
    framework_order: int
    index: int
    task: TaskSpec = field(compare=False)


def _stream(order: int, p: ArrivalProfile):
    for k in range(p.count):
        yield p.start_offset + k * p.interval, order, k, p


def generate(profiles: list[ArrivalProfile], first_task_id: int = 0) -> list[Arrival]:
    """Merge the profiles' arrivals into one time-ordered list.

    Task ``k`` of a profile arrives at ``start_offset + k * interval``.  Ties
    are ordered by the profile's position in ``profiles`` (registration order)
    and then by task index.  Task ids are assigned in the merged order.
    """
    streams = [_stream(order, p) for order, p in enumerate(profiles)]
    out = []
    next_id = first_task_id
    for t, order, k, p in heapq.merge(*streams):
        task = TaskSpec(next_id, p.framework_id, p.demand, p.duration)
        out.append(Arrival(t, order, k, task))
        next_id += 1
    return out
