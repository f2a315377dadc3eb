"""Scenario documents: building graph, fire and evacuee classes in one JSON file."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .goals import NORMAL, EvacueeClass
from .graph import (
    SCHEMA_VERSION,
    BuildingGraph,
    GraphEdge,
    GraphNode,
    ScenarioError,
    graph_from_dict,
    graph_to_dict,
    parse_document,
)
from .hazard import HazardState, hazard_from_dict, hazard_to_dict

DEMO_FILE = "demo_building.json"


@dataclass(frozen=True)
class Scenario:
    graph: BuildingGraph
    hazard: HazardState | None = None
    classes: tuple[EvacueeClass, ...] = (NORMAL,)
    name: str = ""
    header: dict = field(default_factory=dict, compare=False)

    def default_class(self) -> EvacueeClass:
        return self.classes[0]

    def class_named(self, name: str) -> EvacueeClass:
        for c in self.classes:
            if c.name == name:
                return c
        raise KeyError(f"no evacuee class {name!r}")


def _class_from_dict(raw: dict, k: int) -> EvacueeClass:
    try:
        return EvacueeClass(
            name=str(raw["name"]),
            speed=float(raw["speed_cm_s"]),
            goal=str(raw.get("goal", "time")),
            c_b=float(raw.get("c_b", 0.0)),
            c_s=float(raw.get("c_s", 0.0)),
            c_t=float(raw.get("c_t", 0.0)),
            health=float(raw.get("health", 100.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"classes[{k}]: {exc}") from exc


def _class_to_dict(c: EvacueeClass) -> dict:
    return {
        "name": c.name,
        "speed_cm_s": c.speed,
        "goal": c.goal,
        "c_b": c.c_b,
        "c_s": c.c_s,
        "c_t": c.c_t,
        "health": c.health,
    }


def scenario_from_dict(doc: dict) -> Scenario:
    graph = graph_from_dict(doc)
    hazard = hazard_from_dict(graph, doc.get("hazard"))
    raw_classes = doc.get("classes") or [_class_to_dict(NORMAL)]
    classes = tuple(_class_from_dict(rc, k) for k, rc in enumerate(raw_classes))
    header = dict(doc.get("header", {}))
    for key, actual in (("node_count", graph.n_nodes), ("edge_count", len(graph.edges)), ("exit_count", len(graph.exits))):
        if key in header and header[key] != actual:
            raise ScenarioError(f"header {key}={header[key]} but document has {actual}")
    return Scenario(graph, hazard, classes, str(doc.get("name", "")), header)


def load_scenario(text: str) -> Scenario:
    return scenario_from_dict(parse_document(text))


def scenario_to_dict(sc: Scenario) -> dict:
    doc = {"schema": SCHEMA_VERSION}
    if sc.name:
        doc["name"] = sc.name
    if sc.header:
        doc["header"] = sc.header
    g = graph_to_dict(sc.graph)
    doc["nodes"] = g["nodes"]
    doc["edges"] = g["edges"]
    if sc.hazard is not None:
        doc["hazard"] = hazard_to_dict(sc.hazard)
    doc["classes"] = [_class_to_dict(c) for c in sc.classes]
    return doc


def dump_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=1) + "\n"


def read_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())


def demo_text() -> str:
    return resources.files("cpnevac.data").joinpath(DEMO_FILE).read_text(encoding="utf-8")


def demo_scenario() -> Scenario:
    """The bundled three-floor building with two ground exits and two staircases."""
    return load_scenario(demo_text())


def without_hazard(sc: Scenario) -> Scenario:
    return Scenario(sc.graph, None, sc.classes, sc.name, sc.header)


def build_demo_document() -> dict:
    """Author the demo building.

    Ground floor: a nine-node east-west corridor with a parallel row of rooms
    to the south, the main exit off the middle of the corridor and a second
    exit past its west end. Floors 1 and 2: narrow corridors with three rooms
    each. A central and an eastern staircase join the floors; the fire starts
    at the east end of the ground corridor beside the eastern staircase.
    """
    nodes: list[GraphNode] = []
    edges: list[GraphEdge] = []

    def add(x, y, floor, capacity, name, is_exit=False):
        nodes.append(GraphNode(len(nodes), float(x), float(y), floor, capacity, is_exit, name))
        return nodes[-1].id

    def link(u, v, length=None):
        if length is None:
            a, b = nodes[u], nodes[v]
            length = ((a.x_cm - b.x_cm) ** 2 + (a.y_cm - b.y_cm) ** 2) ** 0.5
        edges.append(GraphEdge(u, v, float(length)))

    step = 500
    ground = [add(k * step, 0, 0, 1, f"G{k}") for k in range(9)]
    south = [add(k * step, 700, 0, 1, f"S{k}") for k in range(1, 8)]
    main_exit = add(4 * step, -500, 0, 2, "EXIT_MAIN", True)
    west_exit = add(-600, 0, 0, 2, "EXIT_WEST", True)
    stair_c = [add(5 * step, 300, f, 1, f"STAIR_C{f}{f + 1}") for f in (0, 1)]
    stair_e = [add(8 * step, 300, f, 1, f"STAIR_E{f}{f + 1}") for f in (0, 1)]
    floors = []
    for f in (1, 2):
        corridor = [add(k * step, 0, f, 1, f"F{f}C{k}") for k in range(9)]
        rooms = [add(k * step, -600, f, 1, f"F{f}R{k}") for k in (1, 4, 7)]
        floors.append((corridor, rooms))

    for a, b in zip(ground, ground[1:]):
        link(a, b)
    for k, s in enumerate(south, start=1):
        link(ground[k], s)
    for a, b in zip(south, south[1:]):
        link(a, b)
    link(ground[4], main_exit)
    link(ground[0], west_exit)
    flight = 800.0
    (c1, r1), (c2, r2) = floors
    link(ground[5], stair_c[0], flight / 2)
    link(stair_c[0], c1[5], flight / 2)
    link(c1[5], stair_c[1], flight / 2)
    link(stair_c[1], c2[5], flight / 2)
    link(ground[8], stair_e[0], flight / 2)
    link(stair_e[0], c1[8], flight / 2)
    link(c1[8], stair_e[1], flight / 2)
    link(stair_e[1], c2[8], flight / 2)
    for corridor, rooms in floors:
        for a, b in zip(corridor, corridor[1:]):
            link(a, b)
        for r, k in zip(rooms, (1, 4, 7)):
            link(corridor[k], r)

    graph = BuildingGraph(tuple(nodes), tuple(edges))
    doc = graph_to_dict(graph)
    return {
        "schema": SCHEMA_VERSION,
        "name": "three-floor demo building",
        "header": {
            "floors": 3,
            "exit_count": len(graph.exits),
            "staircases": 2,
            "node_count": graph.n_nodes,
            "edge_count": len(graph.edges),
        },
        "nodes": doc["nodes"],
        "edges": doc["edges"],
        "hazard": {
            "source": ground[8],
            "spread_rate_cm_s": 30.0,
            "growth_rate_per_s": 0.2,
            "start_time_s": 0.0,
            "penalty": 1.0,
            "block_threshold": 10.0,
        },
        "classes": [_class_to_dict(c) for c in (NORMAL,)],
    }
