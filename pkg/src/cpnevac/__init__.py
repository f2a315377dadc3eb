"""Building evacuation routing with cognitive packets."""

from .cpn import CpnEngine, CpnParams, NoRoute, remove_loops
from .goals import EvacueeClass, goal_distance, goal_energy, goal_safety, goal_time, predict_congestion
from .graph import BuildingGraph, Path, ScenarioError, effective_length, load_graph, rotation_angle, shortest_path
from .hazard import HazardState, SensorReading, compute_reach_times
from .scenario import Scenario, demo_scenario, load_scenario
from .sim import MODES, OscillationPolicy, SimConfig, SimResult, Simulation, run

__version__ = "0.1.0"
