from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fairsched.core import ResourceVector
from fairsched.metrics import (
    FairnessSeries,
    MetricsError,
    bucket_means,
    contended_window,
    deviation_pct,
    saturated_window,
    unfairness,
    wait_stats,
    waiting_time,
)
from fairsched.workload import TaskSpec

TASK = ResourceVector.of(1, 1)


def task(tid, fid, submit, launch):
    return TaskSpec(tid, fid, TASK, Fraction(1), submit_time=Fraction(submit),
                    launch_time=None if launch is None else Fraction(launch))


def test_waiting_time():
    assert waiting_time(task(0, 0, 10, 25)) == 15
    assert waiting_time(task(0, 0, 7, 7)) == 0
    with pytest.raises(MetricsError):
        waiting_time(task(0, 0, 7, None))


def flat(level, fair=42):
    return FairnessSeries({0: [(Fraction(0), level)]}, fair_level=fair, capacity=128)


def test_unfairness_trivial_levels():
    assert unfairness(flat(42), 0, 10, 110) == 100
    assert unfairness(flat(21), 0, 10, 110) == 50
    assert unfairness(flat(0), 0, 10, 110) == 0


def test_unfairness_rejects_bad_input():
    with pytest.raises(MetricsError):
        unfairness(flat(42), 0, 5, 5)
    with pytest.raises(MetricsError):
        unfairness(FairnessSeries({0: []}, 42), 0, 0, 1)


def test_step_integral_is_exact():
    s = FairnessSeries({0: [(Fraction(0), 2), (Fraction(3), 5), (Fraction(4), 1)]}, 1)
    assert s.integral(0, Fraction(1), Fraction(6)) == 2 * 2 + 5 + 1 * 2
    assert s.value_at(0, Fraction(3)) == 5


def test_deviation_direction():
    assert deviation_pct(Fraction("144.24"), 100) == Fraction("44.24")
    with pytest.raises(MetricsError):
        deviation_pct(1, 0)


def test_single_framework_has_zero_deviation():
    stats = wait_stats([task(i, 0, 0, i) for i in range(5)])
    assert stats.frameworks[0].deviation_pct == 0


def test_bucket_sizes():
    waits = [Fraction(i) for i in range(250)]
    means = bucket_means(waits, 100)
    assert len(means) == 3
    assert means == [Fraction(99, 2), Fraction(299, 2), Fraction(449, 2)]


def test_wait_stats_buckets_follow_submission():
    tasks = [task(1, 0, 5, 9), task(0, 0, 1, 1)]
    assert wait_stats(tasks, bucket=1).frameworks[0].bucket_means == [0, 4]


def test_saturated_and_contended_windows():
    s = FairnessSeries({
        0: [(Fraction(0), 1), (Fraction(2), 2), (Fraction(9), 0)],
        1: [(Fraction(0), 1), (Fraction(5), 2), (Fraction(12), 0)],
    }, fair_level=2, capacity=4)
    # total running: 2 @0, 3 @2, 4 @5, 2 @9, 0 @12
    assert saturated_window(s, Fraction(3, 4)) == (2, 5)
    tasks = [task(0, 0, 0, 4), task(1, 1, 0, 3)]
    assert contended_window(s, tasks, Fraction(3, 4)) == (2, 3)
    assert saturated_window(s, Fraction(1)) is None


@given(st.lists(st.tuples(st.integers(1, 50), st.integers(0, 40)), min_size=1, max_size=8),
       st.integers(1, 9))
def test_unfairness_time_rescaling(steps, c):
    t = Fraction(0)
    pts = []
    for gap, level in steps:
        pts.append((t, level))
        t += gap
    a = FairnessSeries({0: pts}, 10)
    b = FairnessSeries({0: [(x * c, n) for x, n in pts]}, 10)
    assert unfairness(a, 0, 0, t) == unfairness(b, 0, 0, t * c)


@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 50), st.integers(0, 30)), min_size=1, max_size=40))
def test_weighted_deviations_sum_to_zero(rows):
    tasks = [task(i, f, s, s + w) for i, (f, s, w) in enumerate(rows)]
    stats = wait_stats(tasks)
    total = sum(fw.deviation_pct * fw.count for fw in stats.frameworks.values())
    assert total == 0
