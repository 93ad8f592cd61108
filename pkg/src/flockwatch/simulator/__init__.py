from .connector import Connector, ConnectorError, SimConnector
from .scenario import (
    BehaviorScript,
    PopulationCohort,
    Scenario,
    TargetSpec,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from .world import (
    CursorInvalidated,
    GroundTruthLog,
    GTEvent,
    PageCursor,
    UnknownEntityError,
    World,
    build_world,
    derived_rng,
    derived_seed,
)

__all__ = [
    "BehaviorScript",
    "Connector",
    "ConnectorError",
    "CursorInvalidated",
    "GTEvent",
    "GroundTruthLog",
    "PageCursor",
    "PopulationCohort",
    "Scenario",
    "SimConnector",
    "TargetSpec",
    "UnknownEntityError",
    "World",
    "build_world",
    "derived_rng",
    "derived_seed",
    "load_scenario",
    "save_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
]
