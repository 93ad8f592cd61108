import pytest

from flockwatch.simulator import (
    PopulationCohort,
    Scenario,
    TargetSpec,
    build_world,
)


def make_scenario(**overrides) -> Scenario:
    """Small, quiet scenario with one target; override anything."""
    base = dict(
        seed=1234,
        duration=3600.0,
        population=(
            PopulationCohort(
                size=2000,
                creation_era_digits=18,
                organic_follow_rate=0.0,
                organic_unfollow_rate=0.0,
                tweet_rate=0.0,
                initial_follow_fraction=0.5,
            ),
        ),
        targets=(TargetSpec(handle="alpha", category="candidate"),),
        behaviors=(),
    )
    base.update(overrides)
    return Scenario(**base)


@pytest.fixture
def quiet_world():
    world = build_world(make_scenario())
    world.advance(world.end)
    return world
