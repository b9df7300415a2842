"""Discrete-event MANET simulator with DSR, black-hole attackers and an AIS-based route defense."""
from .config import ScenarioConfig, load_scenario, parse_scenario
from .world import World, run_experiment

__all__ = ["ScenarioConfig", "load_scenario", "parse_scenario", "World", "run_experiment"]
__version__ = "0.1.0"
