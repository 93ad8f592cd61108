import json

import pytest

from flockwatch.domain import ConfigurationError
from flockwatch.simulator import (
    BehaviorScript,
    load_scenario,
    save_scenario,
    scenario_from_dict,
)
from flockwatch.simulator.scenario import ancient_population

from conftest import make_scenario


def test_roundtrip(tmp_path):
    sc = make_scenario(
        behaviors=(
            BehaviorScript(kind="spike", target="alpha", schedule=(60.0,), magnitude=50),
        )
    )
    path = tmp_path / "s.json"
    save_scenario(sc, path)
    assert load_scenario(path) == sc


def test_overrides(tmp_path):
    path = tmp_path / "s.json"
    save_scenario(make_scenario(), path)
    sc = load_scenario(path, seed=9, duration=120.0)
    assert sc.seed == 9 and sc.duration == 120.0


def test_duration_must_be_positive():
    with pytest.raises(ConfigurationError):
        make_scenario(duration=0.0).validate()


def test_behavior_target_must_exist():
    with pytest.raises(ConfigurationError, match="not in scenario targets"):
        make_scenario(
            behaviors=(
                BehaviorScript(kind="spike", target="ghost", schedule=(1.0,), magnitude=5),
            )
        ).validate()


@pytest.mark.parametrize(
    "script,msg",
    [
        (dict(kind="spike", target="alpha", schedule=(1.0,), magnitude=0), "magnitude"),
        (dict(kind="sawtooth", target="alpha", schedule=(1.0,), magnitude=5), "magnitude"),
        (dict(kind="spike", target="alpha", schedule=(), magnitude=5), "schedule"),
        (dict(kind="spike", target="alpha", schedule=(5.0, 1.0), magnitude=5), "sorted"),
        (dict(kind="circulation", target="alpha", cohort_size=0, schedule=(0.0,), period=60.0), "cohort_size"),
        (dict(kind="sleeper", target="alpha", cohort_size=3, schedule=(0.0,), gap=0), "gap"),
        (dict(kind="wiggle", target="alpha", schedule=(0.0,)), "kind"),
    ],
)
def test_behavior_validation(script, msg):
    with pytest.raises(ConfigurationError, match=msg):
        make_scenario(behaviors=(BehaviorScript(**script),)).validate()


def test_unknown_fields_rejected():
    with pytest.raises(ConfigurationError, match="unknown fields"):
        scenario_from_dict(
            {
                "seed": 1,
                "duration": 10,
                "targets": [{"handle": "a", "category": "candidate"}],
                "mystery": True,
            }
        )


def test_bad_json_reports_line(tmp_path):
    path = tmp_path / "s.json"
    path.write_text('{\n "seed": 1,\n oops\n}', encoding="utf-8")
    with pytest.raises(ConfigurationError, match=r":3"):
        load_scenario(path)


def test_ordering_noise_bounds():
    with pytest.raises(ConfigurationError):
        make_scenario(ordering_noise=1.5).validate()


def test_ancient_population_counts_cohorts_and_scripts():
    sc = make_scenario(
        population=(
            make_scenario().population[0],  # 18-digit, not ancient
        ),
        behaviors=(
            BehaviorScript(
                kind="sleeper", target="alpha", cohort_size=25,
                schedule=(100.0,), gap=40_000_000.0, digits=(7,),
            ),
        ),
    )
    assert ancient_population(sc) == 25


def test_scenario_file_is_plain_json(tmp_path):
    path = tmp_path / "s.json"
    save_scenario(make_scenario(), path)
    doc = json.loads(path.read_text())
    assert doc["seed"] == 1234
    assert doc["targets"][0]["handle"] == "alpha"
