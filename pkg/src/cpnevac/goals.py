"""Goal functions minimised by the packet routing layer.

Every function takes a path (node sequence or :class:`~cpnevac.graph.Path`),
the building graph and per-node sensor readings indexed by node id. Edge
lengths are hazard-penalised using the intensities carried by the readings,
so a goal value reflects what the packets measured rather than ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .graph import INF, BuildingGraph, Path, edge_penalty, rotation_angle
from .hazard import DEFAULT_BLOCK, DEFAULT_PENALTY, HazardState, SensorReading

GOALS = ("time", "energy", "safety", "distance")
T_NODE_MAX = 300.0

Readings = Union[Sequence[SensorReading], Mapping[int, SensorReading]]


@dataclass(frozen=True)
class EvacueeClass:
    name: str = "normal"
    speed: float = 120.0
    goal: str = "time"
    c_b: float = 0.0
    c_s: float = 0.0
    c_t: float = 0.0
    health: float = 100.0

    def __post_init__(self) -> None:
        if not self.speed > 0:
            raise ValueError(f"class {self.name}: speed must be positive")
        if min(self.c_b, self.c_s, self.c_t) < 0:
            raise ValueError(f"class {self.name}: energy constants must be nonnegative")
        if self.goal not in GOALS:
            raise ValueError(f"class {self.name}: unknown goal {self.goal!r}")


NORMAL = EvacueeClass("normal", 120.0, "time", 0.0, 0.0, 0.0, 100.0)
WHEELCHAIR = EvacueeClass("wheelchair", 60.0, "energy", 10.0, 0.01, 0.2, 100.0)
SICK = EvacueeClass("sick", 80.0, "safety", 0.0, 0.0, 0.0, 60.0)


@dataclass(frozen=True)
class CongestionForecast:
    congestion: int
    total_time: float
    arrival_times: tuple[float, ...] = ()


def clamp(x: float) -> float:
    """Negative part removed: 0 below zero, identity otherwise."""
    return x if x >= 0 else 0.0


def _nodes(path) -> tuple[int, ...]:
    return path.nodes if isinstance(path, Path) else tuple(path)


def _edge_lengths(nodes, graph, readings, penalty, block) -> list[float]:
    return [
        edge_penalty(
            graph.length(u, v),
            readings[u].hazard_intensity,
            readings[v].hazard_intensity,
            penalty,
            block,
        )
        for u, v in zip(nodes, nodes[1:])
    ]


def predict_congestion(
    path,
    graph: BuildingGraph,
    readings: Readings,
    cls: EvacueeClass,
    *,
    penalty: float = DEFAULT_PENALTY,
    block: float = DEFAULT_BLOCK,
    t_node_max: float = T_NODE_MAX,
) -> CongestionForecast:
    """Walk the path accumulating travel and forecast queueing delay.

    For each edge leaving ``path[i]`` the queue at ``path[i]`` is projected to
    the moment the evacuee gets there, ``q0 + (lam - mu) * T``. A positive
    projection counts as one congestion event and costs ``Q / lam`` seconds.
    The final node of the path contributes no node delay.
    """
    nodes = _nodes(path)
    lengths = _edge_lengths(nodes, graph, readings, penalty, block)
    total = 0.0
    count = 0
    arrivals = [0.0]
    for i, e_len in enumerate(lengths):
        r = readings[nodes[i]]
        t_edge = e_len / cls.speed
        q = r.queue_length + r.arrival_rate * total - r.departure_rate * total
        t_node = 0.0
        if q > 0:
            t_node = q / r.arrival_rate if r.arrival_rate > 0 else t_node_max
            count += 1
        total += t_edge + t_node
        arrivals.append(total)
    return CongestionForecast(count, total, tuple(arrivals))


def goal_time(path, graph: BuildingGraph, readings: Readings, cls: EvacueeClass, **kw) -> float:
    nodes = _nodes(path)
    penalty = kw.get("penalty", DEFAULT_PENALTY)
    block = kw.get("block", DEFAULT_BLOCK)
    t_node_max = kw.get("t_node_max", T_NODE_MAX)
    total = 0.0
    for (u, v), e_len in zip(zip(nodes, nodes[1:]), _edge_lengths(nodes, graph, readings, penalty, block)):
        r = readings[u]
        backlog = r.queue_length + r.arrival_rate * total - r.departure_rate * total
        if r.arrival_rate > 0:
            delay = clamp(backlog / r.arrival_rate)
        else:
            delay = t_node_max if backlog > 0 else 0.0
        total += e_len / cls.speed + delay
    return total


def suffix_times(path, graph: BuildingGraph, readings: Readings, cls: EvacueeClass, **kw) -> tuple[float, ...]:
    """``goal_time`` of every suffix of ``path``, sharing the edge-length work."""
    nodes = _nodes(path)
    penalty = kw.get("penalty", DEFAULT_PENALTY)
    block = kw.get("block", DEFAULT_BLOCK)
    t_node_max = kw.get("t_node_max", T_NODE_MAX)
    hops = [e_len / cls.speed for e_len in _edge_lengths(nodes, graph, readings, penalty, block)]
    sensed = [readings[u] for u in nodes[:-1]]
    out = []
    for k in range(len(nodes)):
        total = 0.0
        for r, t_edge in zip(sensed[k:], hops[k:]):
            backlog = r.queue_length + r.arrival_rate * total - r.departure_rate * total
            if r.arrival_rate > 0:
                delay = clamp(backlog / r.arrival_rate)
            else:
                delay = t_node_max if backlog > 0 else 0.0
            total += t_edge + delay
        out.append(total)
    return tuple(out)


def goal_energy(path, graph: BuildingGraph, readings: Readings, cls: EvacueeClass, **kw) -> float:
    nodes = _nodes(path)
    penalty = kw.get("penalty", DEFAULT_PENALTY)
    block = kw.get("block", DEFAULT_BLOCK)
    forecast = predict_congestion(nodes, graph, readings, cls, penalty=penalty, block=block)
    straight = sum(_edge_lengths(nodes, graph, readings, penalty, block))
    turning = sum(rotation_angle(a, b, c, graph) for a, b, c in zip(nodes, nodes[1:], nodes[2:]))
    return cls.c_b * forecast.congestion + cls.c_s * straight + cls.c_t * turning


def goal_safety(
    path,
    graph: BuildingGraph,
    hazard: HazardState | None,
    readings: Readings,
    cls: EvacueeClass,
    t_current: float,
) -> float:
    """Forecast hazard exposure along the path plus each edge's baseline exposure.

    Exposure at a node is ``b * (arrival - fire_arrival)`` once the evacuee would
    get there after the fire did, and nothing before.
    """
    nodes = _nodes(path)
    kw = {}
    if hazard is not None:
        kw = {"penalty": hazard.penalty, "block": hazard.block_threshold}
    arrivals = predict_congestion(nodes, graph, readings, cls, **kw).arrival_times
    longest = graph.max_length
    total = 0.0
    for i, (u, v) in enumerate(zip(nodes, nodes[1:])):
        if hazard is not None:
            late = arrivals[i + 1] + t_current - hazard.arrival(v)
            if late >= 0:
                total += hazard.growth_rate * late
        total += graph.length(u, v) / longest
    return total


def goal_distance(path, graph: BuildingGraph, hazard: HazardState | None = None, t: float = 0.0) -> float:
    nodes = _nodes(path)
    total = 0.0
    for u, v in zip(nodes, nodes[1:]):
        length = graph.length(u, v)
        if hazard is not None:
            length = edge_penalty(
                length, hazard.intensity(u, t), hazard.intensity(v, t), hazard.penalty, hazard.block_threshold
            )
        total += length
    return total


def goal_distance_measured(path, graph: BuildingGraph, readings: Readings, penalty=DEFAULT_PENALTY, block=DEFAULT_BLOCK):
    """Distance goal computed from measured intensities instead of the hazard model."""
    return sum(_edge_lengths(_nodes(path), graph, readings, penalty, block))


def evaluate(
    goal: str,
    path,
    graph: BuildingGraph,
    readings: Readings,
    cls: EvacueeClass,
    hazard: HazardState | None = None,
    t: float = 0.0,
) -> float:
    """Dispatch to the goal function for ``goal``; returns ``inf`` for blocked paths."""
    kw = {}
    if hazard is not None:
        kw = {"penalty": hazard.penalty, "block": hazard.block_threshold}
    if goal == "distance":
        value = goal_distance_measured(path, graph, readings, **kw)
    elif goal == "time":
        value = goal_time(path, graph, readings, cls, **kw)
    elif goal == "energy":
        value = goal_energy(path, graph, readings, cls, **kw)
    elif goal == "safety":
        if math.isinf(goal_distance_measured(path, graph, readings, **kw)):
            return INF
        value = goal_safety(path, graph, hazard, readings, cls, t)
    else:
        raise ValueError(f"unknown goal {goal!r}")
    return value
