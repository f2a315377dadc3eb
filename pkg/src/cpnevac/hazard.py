"""Deterministic fire spread over the building graph and per-node sensing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .graph import INF, BuildingGraph, ScenarioError, dijkstra

DEFAULT_PENALTY = 1.0
DEFAULT_BLOCK = 10.0


def compute_reach_times(graph: BuildingGraph, source: int, a: float) -> dict[int, float]:
    """Seconds for the fire to reach each node: geodesic distance from ``source`` over ``a``."""
    if not a > 0:
        raise ValueError("spread rate must be positive")
    if not 0 <= source < graph.n_nodes:
        raise KeyError(f"unknown fire source {source}")
    dist, _ = dijkstra(graph, [source])
    return {k: (d / a if d != INF else INF) for k, d in enumerate(dist)}


@dataclass(frozen=True)
class HazardState:
    source: int
    spread_rate: float
    growth_rate: float
    reach_time: Mapping[int, float]
    start_time: float = 0.0
    penalty: float = DEFAULT_PENALTY
    block_threshold: float = DEFAULT_BLOCK

    @classmethod
    def build(
        cls,
        graph: BuildingGraph,
        source: int,
        spread_rate: float,
        growth_rate: float,
        start_time: float = 0.0,
        penalty: float = DEFAULT_PENALTY,
        block_threshold: float = DEFAULT_BLOCK,
    ) -> "HazardState":
        if growth_rate < 0:
            raise ValueError("growth rate must be nonnegative")
        reach = compute_reach_times(graph, source, spread_rate)
        return cls(source, spread_rate, growth_rate, reach, start_time, penalty, block_threshold)

    def arrival(self, node: int) -> float:
        """Absolute simulation time at which the fire reaches ``node``."""
        return self.start_time + self.reach_time[node]

    def intensity(self, node: int, t: float) -> float:
        elapsed = t - self.arrival(node)
        if elapsed < 0:
            return 0.0
        return self.growth_rate * elapsed

    def intensities(self, n_nodes: int, t: float) -> list[float]:
        return [self.intensity(k, t) for k in range(n_nodes)]

    def is_blocked(self, node: int, t: float) -> bool:
        return self.intensity(node, t) > self.block_threshold


def intensity(hazard: HazardState, node: int, t: float) -> float:
    return hazard.intensity(node, t)


def hazard_from_dict(graph: BuildingGraph, raw: dict | None) -> HazardState | None:
    if raw is None:
        return None
    try:
        source = int(raw["source"])
        a = float(raw["spread_rate_cm_s"])
        b = float(raw["growth_rate_per_s"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"hazard: {exc}") from exc
    if not 0 <= source < graph.n_nodes:
        raise ScenarioError(f"hazard: unknown source node {source}")
    if not a > 0 or b < 0:
        raise ScenarioError("hazard: need spread_rate_cm_s > 0 and growth_rate_per_s >= 0")
    return HazardState.build(
        graph,
        source,
        a,
        b,
        start_time=float(raw.get("start_time_s", 0.0)),
        penalty=float(raw.get("penalty", DEFAULT_PENALTY)),
        block_threshold=float(raw.get("block_threshold", DEFAULT_BLOCK)),
    )


def hazard_to_dict(hazard: HazardState) -> dict:
    return {
        "source": hazard.source,
        "spread_rate_cm_s": hazard.spread_rate,
        "growth_rate_per_s": hazard.growth_rate,
        "start_time_s": hazard.start_time,
        "penalty": hazard.penalty,
        "block_threshold": hazard.block_threshold,
    }


@dataclass(frozen=True)
class SensorReading:
    node: int
    queue_length: float = 0.0
    arrival_rate: float = 0.0
    departure_rate: float = 0.0
    hazard_intensity: float = 0.0


def sensor_read(node: int, sim) -> SensorReading:
    """What the sensor at ``node`` reports right now.

    ``sim`` is anything exposing ``reading(node)``; the evacuation simulator does.
    """
    return sim.reading(node)
