import json
from fractions import Fraction

import pytest

from fairsched.dispatch import PolicyKind
from fairsched.mesos import Behavior
from fairsched.scenario import BUILTIN_NAMES, ConfigError, builtin_scenario, from_json, load, to_json


def test_exp1_table():
    cfg = builtin_scenario("exp1")
    assert [p.count for p in cfg.profiles] == [1000, 700, 500]
    assert [p.interval for p in cfg.profiles] == [1, Fraction(3, 2), 2]
    behaviors = {f.name: f.behavior.variant for f in cfg.frameworks}
    assert behaviors == {"marathon": Behavior.GREEDY_BIN_PACK, "scylla": Behavior.FIRST_FIT,
                         "aurora": Behavior.HOLD_OFFERS}
    assert cfg.policy is PolicyKind.PASSTHROUGH


def test_fair_levels():
    assert builtin_scenario("motivation").fair_level() == 16
    assert builtin_scenario("exp2").fair_level() == 42
    assert builtin_scenario("exp2").capacity_in_tasks() == 128
    assert builtin_scenario("motivation").capacity_in_tasks() == 32


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_json_roundtrip(name):
    cfg = builtin_scenario(name)
    assert from_json(json.loads(json.dumps(to_json(cfg)))) == cfg


def test_unknown_builtin():
    with pytest.raises(ConfigError):
        builtin_scenario("exp9")
    with pytest.raises(ConfigError):
        load("no-such-file.json")


def _base():
    return to_json(builtin_scenario("exp2"))


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d["profiles"][0].__setitem__("interval", -1), "profiles[0].interval"),
    (lambda d: d["profiles"][1].__setitem__("count", -3), "profiles[1].count"),
    (lambda d: d["frameworks"][0].__setitem__("behavior", "lazy"), "frameworks[0].behavior"),
    (lambda d: d["cluster"].__setitem__("nodes", 0), "cluster.nodes"),
    (lambda d: d["profiles"][0].__setitem__("framework", "ghost"), "profiles[0].framework"),
    (lambda d: d.__setitem__("demand_drf_formula", "product"), "demand_drf_formula"),
])
def test_errors_name_the_field(mutate, field):
    data = _base()
    mutate(data)
    with pytest.raises(ConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
        from_json(data)


def test_duplicate_framework_names():
    data = _base()
    data["frameworks"][1]["name"] = data["frameworks"][0]["name"]
    with pytest.raises(ConfigError, match="duplicate"):
        from_json(data)


def test_load_from_file(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(_base()))
    assert load(str(path)) == builtin_scenario("exp2")
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load(str(path))
