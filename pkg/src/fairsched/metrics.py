"""Waiting-time statistics and running-task fairness curves."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .workload import TaskRecord


class MetricsError(ValueError):
    pass


@dataclass
class FairnessSeries:
    """Per-framework running-task count as a right-continuous step function.

    ``points[fid]`` holds ``(time, running_count)`` samples; the count holds
    from that time until the next sample.  Before the first sample it is 0.
    """

    points: dict[int, list[tuple[Fraction, int]]]
    fair_level: int
    capacity: int = 0

    def record(self, framework_id: int, t: Fraction, count: int) -> None:
        pts = self.points[framework_id]
        if pts and pts[-1][0] == t:
            pts[-1] = (t, count)
        elif pts and t < pts[-1][0]:
            raise MetricsError("fairness samples must be time-ordered")
        else:
            pts.append((t, count))

    def value_at(self, framework_id: int, t: Fraction) -> int:
        v = 0
        for pt, c in self.points[framework_id]:
            if pt > t:
                break
            v = c
        return v

    def integral(self, framework_id: int, t_i: Fraction, t_j: Fraction) -> Fraction:
        """Exact area under the step curve over ``[t_i, t_j]``."""
        pts = self.points.get(framework_id)
        if pts is None:
            raise MetricsError(f"no series for framework {framework_id}")
        area = Fraction(0)
        level = 0
        prev = t_i
        for t, c in pts:
            if t <= t_i:
                level = c
                continue
            if t >= t_j:
                break
            area += level * (t - prev)
            prev, level = t, c
        area += level * (t_j - prev)
        return area

    def mean_running(self, framework_id: int, t_i: Fraction, t_j: Fraction) -> Fraction:
        return self.integral(framework_id, t_i, t_j) / (t_j - t_i)

    def span(self) -> tuple[Fraction, Fraction]:
        times = [t for pts in self.points.values() for t, _ in pts]
        if not times:
            raise MetricsError("empty fairness series")
        return min(times), max(times)

    def total_running(self) -> list[tuple[Fraction, int]]:
        """Cluster-wide running count as a step series."""
        merged: dict[Fraction, dict[int, int]] = {}
        for fid, pts in self.points.items():
            for t, c in pts:
                merged.setdefault(t, {})[fid] = c
        current = {fid: 0 for fid in self.points}
        out = []
        for t in sorted(merged):
            current.update(merged[t])
            out.append((t, sum(current.values())))
        return out

    def rows(self) -> Iterable[tuple[Fraction, int, int]]:
        """(time, framework_id, count) sorted by time then framework."""
        flat = [(t, fid, c) for fid, pts in self.points.items() for t, c in pts]
        flat.sort(key=lambda r: (r[0], r[1]))
        return flat


def unfairness(series: FairnessSeries, framework_id: int, t_i, t_j) -> Fraction:
    """Area under a framework's running curve over ``[t_i, t_j]`` as a percent of the fair-level area."""
    t_i, t_j = Fraction(t_i), Fraction(t_j)
    if not any(series.points.values()):
        raise MetricsError("empty fairness series")
    if not t_i < t_j:
        raise MetricsError(f"degenerate interval [{t_i}, {t_j}]")
    if series.fair_level <= 0:
        raise MetricsError("fair level must be positive")
    fair_area = series.fair_level * (t_j - t_i)
    return series.integral(framework_id, t_i, t_j) / fair_area * 100


def saturated_window(series: FairnessSeries, threshold: Fraction = Fraction(95, 100)) -> Optional[tuple[Fraction, Fraction]]:
    """First and last time the cluster-wide running count is at least ``threshold * capacity``."""
    need = threshold * series.capacity
    hits = [t for t, n in series.total_running() if n >= need]
    if len(hits) < 2 or hits[0] == hits[-1]:
        return None
    return hits[0], hits[-1]


def contended_window(series: FairnessSeries, tasks: Iterable[TaskRecord],
                     threshold: Fraction = Fraction(95, 100)) -> Optional[tuple[Fraction, Fraction]]:
    """Saturated window cut off when the first framework runs out of work to launch.

    Past that point the remaining frameworks legitimately split the cluster
    between fewer parties, so a per-framework fair level no longer applies.
    """
    sat = saturated_window(series, threshold)
    if sat is None:
        return None
    last_launch: dict[int, Fraction] = {}
    for t in tasks:
        if t.launch_time is None:
            continue
        if t.launch_time > last_launch.get(t.framework_id, Fraction(-1)):
            last_launch[t.framework_id] = t.launch_time
    if set(last_launch) != set(series.points):
        return None
    end = min(sat[1], min(last_launch.values()))
    if end <= sat[0]:
        return None
    return sat[0], end


def waiting_time(task: TaskRecord) -> Fraction:
    if task.launch_time is None:
        raise MetricsError(f"task {task.id} was never launched")
    if task.submit_time is None:
        raise MetricsError(f"task {task.id} has no submit time")
    return task.launch_time - task.submit_time


def release_wait(task: TaskRecord) -> Optional[Fraction]:
    """Release-to-launch latency, for diagnostics."""
    if task.launch_time is None or task.release_time is None:
        return None
    return task.launch_time - task.release_time


@dataclass
class FrameworkWait:
    count: int
    total_wait: Fraction
    mean_wait: Fraction
    bucket_means: list[Fraction]
    deviation_pct: Fraction = Fraction(0)


@dataclass
class WaitStats:
    frameworks: dict[int, FrameworkWait] = field(default_factory=dict)
    cluster_total: Fraction = Fraction(0)
    cluster_count: int = 0
    cluster_mean: Fraction = Fraction(0)


def bucket_means(waits: list[Fraction], bucket: int = 100) -> list[Fraction]:
    if bucket <= 0:
        raise MetricsError("bucket size must be positive")
    return [
        sum(waits[i:i + bucket], Fraction(0)) / len(waits[i:i + bucket])
        for i in range(0, len(waits), bucket)
    ]


def wait_stats(tasks: list[TaskRecord], bucket: int = 100) -> WaitStats:
    """Per-framework and cluster waiting-time summary.

    Buckets follow submission order; a trailing partial bucket gets its own
    mean.  ``deviation_pct`` is ``(mean_F - mean_cluster) / mean_cluster * 100``
    and is 0 when the cluster mean is 0.
    """
    by_fw: dict[int, list[TaskRecord]] = {}
    for t in tasks:
        by_fw.setdefault(t.framework_id, []).append(t)

    stats = WaitStats()
    for fid in sorted(by_fw):
        ordered = sorted(by_fw[fid], key=lambda t: (t.submit_time, t.id))
        waits = [waiting_time(t) for t in ordered]
        total = sum(waits, Fraction(0))
        stats.frameworks[fid] = FrameworkWait(
            count=len(waits), total_wait=total, mean_wait=total / len(waits),
            bucket_means=bucket_means(waits, bucket),
        )
        stats.cluster_total += total
        stats.cluster_count += len(waits)
    if stats.cluster_count:
        stats.cluster_mean = stats.cluster_total / stats.cluster_count
    for fw in stats.frameworks.values():
        if stats.cluster_mean:
            fw.deviation_pct = (fw.mean_wait - stats.cluster_mean) / stats.cluster_mean * 100
    return stats


def deviation_pct(mean_framework, mean_cluster) -> Fraction:
    mean_framework, mean_cluster = Fraction(mean_framework), Fraction(mean_cluster)
    if mean_cluster == 0:
        raise MetricsError("cluster mean waiting time is zero")
    return (mean_framework - mean_cluster) / mean_cluster * 100
