from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fairsched.core import ResourceVector, vec_sum
from fairsched.scenario import BUILTIN_NAMES, builtin_scenario
from fairsched.workload import ArrivalProfile, TaskSpec, generate

TASK = ResourceVector.of("0.5", 1024)


def profiles(*rows):
    return [ArrivalProfile(i, n, Fraction(iv), TASK) for i, (n, iv) in enumerate(rows)]


def test_exp2_arrivals():
    arrivals = generate(profiles((733, 1), (733, "1.5"), (733, 2)))
    assert len(arrivals) == 2199
    first = [a for a in arrivals if a.task.framework_id == 0]
    assert first[-1].time == 732


def test_exp3_arrivals():
    assert len(generate(profiles((1000, 1), (700, "1.5"), (500, 2)))) == 2200


def test_zero_count_gives_no_events():
    assert generate(profiles((0, 1))) == []


def test_ties_follow_registration_order_and_ids_follow_merge():
    arrivals = generate(profiles((3, 1), (2, 2)))
    assert [(a.time, a.task.framework_id) for a in arrivals] == [(0, 0), (0, 1), (1, 0), (2, 0), (2, 1)]
    assert [a.task.id for a in arrivals] == [0, 1, 2, 3, 4]


def test_start_offset_shifts_stream():
    [a, b] = generate([ArrivalProfile(0, 2, Fraction(5), TASK, start_offset=Fraction(7))])
    assert (a.time, b.time) == (7, 12)


def test_invalid_profiles():
    with pytest.raises(ValueError):
        ArrivalProfile(0, -1, Fraction(1), TASK)
    with pytest.raises(ValueError):
        ArrivalProfile(0, 1, Fraction(-1), TASK)
    with pytest.raises(ValueError):
        TaskSpec(0, 0, ResourceVector.zero(), Fraction(1))


@given(st.lists(st.tuples(st.integers(0, 40), st.integers(1, 7)), min_size=1, max_size=4))
def test_deterministic_and_complete(rows):
    ps = [ArrivalProfile(i, n, Fraction(iv, 2), TASK) for i, (n, iv) in enumerate(rows)]
    one, two = generate(ps), generate(ps)
    assert [(a.time, a.task.framework_id, a.task.id) for a in one] == \
           [(a.time, a.task.framework_id, a.task.id) for a in two]
    assert len(one) == sum(n for n, _ in rows)
    times = [a.time for a in one]
    assert times == sorted(times)
    # FIFO within each framework
    for i in range(len(rows)):
        mine = [a.index for a in one if a.framework_order == i]
        assert mine == sorted(mine)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_builtin_demand_totals_are_exact(name):
    cfg = builtin_scenario(name)
    arrivals = generate(cfg.arrival_profiles())
    for p in cfg.profiles:
        fid = cfg.framework_ids()[p.framework]
        tasks = [a.task for a in arrivals if a.task.framework_id == fid]
        assert vec_sum(t.demand for t in tasks) == p.demand.scale(p.count)
