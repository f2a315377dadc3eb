"""Building graph: points of interest, physical links and the Dijkstra baseline."""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from .hazard import HazardState

INF = math.inf
SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Raised when a scenario document cannot be parsed or violates a graph invariant."""


@dataclass(frozen=True)
class GraphNode:
    id: int
    x_cm: float
    y_cm: float
    floor: int
    capacity: int = 1
    is_exit: bool = False
    name: str = ""


@dataclass(frozen=True)
class GraphEdge:
    src: int
    dst: int
    length_cm: float

    def other(self, node: int) -> int:
        return self.dst if node == self.src else self.src


@dataclass(frozen=True)
class Path:
    """A node sequence plus the cost it was selected under."""

    nodes: tuple[int, ...] = ()
    cost: float = INF

    def __len__(self) -> int:
        return len(self.nodes)

    def __bool__(self) -> bool:
        return bool(self.nodes)


@dataclass(frozen=True, eq=False)
class BuildingGraph:
    nodes: tuple[GraphNode, ...]
    edges: tuple[GraphEdge, ...]
    _adj: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    _edge_index: dict = field(init=False, repr=False)

    def __post_init__(self) -> None:
        adj: list[list[int]] = [[] for _ in self.nodes]
        index: dict[tuple[int, int], int] = {}
        for k, e in enumerate(self.edges):
            adj[e.src].append(e.dst)
            adj[e.dst].append(e.src)
            index[(e.src, e.dst)] = k
            index[(e.dst, e.src)] = k
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))
        object.__setattr__(self, "_edge_index", index)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BuildingGraph):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.nodes, self.edges))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def exits(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes if n.is_exit)

    def neighbors(self, node: int) -> tuple[int, ...]:
        """Neighbour ids in ascending order."""
        return self._adj[node]

    def edge(self, u: int, v: int) -> GraphEdge:
        try:
            return self.edges[self._edge_index[(u, v)]]
        except KeyError:
            raise KeyError(f"no edge between {u} and {v}") from None

    def edge_id(self, u: int, v: int) -> int:
        return self._edge_index[(u, v)]

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._edge_index

    def length(self, u: int, v: int) -> float:
        return self.edge(u, v).length_cm

    @property
    def max_length(self) -> float:
        return max(e.length_cm for e in self.edges)

    def path_length(self, nodes: Sequence[int]) -> float:
        return sum(self.length(a, b) for a, b in zip(nodes, nodes[1:]))

    def is_valid_path(self, nodes: Sequence[int]) -> bool:
        return all(self.has_edge(a, b) for a, b in zip(nodes, nodes[1:]))


def _validate(nodes: Sequence[GraphNode], edges: Sequence[GraphEdge]) -> None:
    if not nodes:
        raise ScenarioError("graph has no nodes")
    for k, n in enumerate(nodes):
        if n.id != k:
            raise ScenarioError(f"node ids must be dense 0..N-1: position {k} holds id {n.id}")
        if n.capacity < 1:
            raise ScenarioError(f"node {n.id}: capacity must be >= 1")
    if not any(n.is_exit for n in nodes):
        raise ScenarioError("no exit node")
    seen = set()
    degree = [0] * len(nodes)
    for e in edges:
        for end in (e.src, e.dst):
            if not 0 <= end < len(nodes):
                raise ScenarioError(f"edge {e.src}-{e.dst}: unknown node {end}")
        if e.src == e.dst:
            raise ScenarioError(f"edge {e.src}-{e.dst}: self loop")
        if not e.length_cm > 0:
            raise ScenarioError(f"edge {e.src}-{e.dst}: length must be positive")
        key = (min(e.src, e.dst), max(e.src, e.dst))
        if key in seen:
            raise ScenarioError(f"edge {e.src}-{e.dst}: duplicate")
        seen.add(key)
        degree[e.src] += 1
        degree[e.dst] += 1
    for n in nodes:
        if not n.is_exit and degree[n.id] == 0:
            raise ScenarioError(f"node {n.id}: non-exit node has no neighbour")
    # connectivity
    adj: list[list[int]] = [[] for _ in nodes]
    for e in edges:
        adj[e.src].append(e.dst)
        adj[e.dst].append(e.src)
    stack, reached = [0], {0}
    while stack:
        for v in adj[stack.pop()]:
            if v not in reached:
                reached.add(v)
                stack.append(v)
    if len(reached) != len(nodes):
        raise ScenarioError("graph is not connected")


def _field(obj: dict, key: str, where: str, kind=float):
    if key not in obj:
        raise ScenarioError(f"{where}: missing field '{key}'")
    value = obj[key]
    if kind is bool:
        if not isinstance(value, bool):
            raise ScenarioError(f"{where}: field '{key}' must be a boolean")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: field '{key}' must be numeric")
    if kind is int:
        if int(value) != value:
            raise ScenarioError(f"{where}: field '{key}' must be an integer")
        return int(value)
    return float(value)


def parse_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("parse error: top level must be a JSON object")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema {doc.get('schema')!r}; expected {SCHEMA_VERSION}")
    return doc


def graph_from_dict(doc: dict) -> BuildingGraph:
    raw_nodes = doc.get("nodes")
    raw_edges = doc.get("edges")
    if not isinstance(raw_nodes, list):
        raise ScenarioError("field 'nodes' must be a list")
    if not isinstance(raw_edges, list):
        raise ScenarioError("field 'edges' must be a list")
    nodes = []
    for k, rn in enumerate(raw_nodes):
        where = f"nodes[{k}]"
        if not isinstance(rn, dict):
            raise ScenarioError(f"{where}: must be an object")
        nodes.append(
            GraphNode(
                id=_field(rn, "id", where, int),
                x_cm=_field(rn, "x_cm", where),
                y_cm=_field(rn, "y_cm", where),
                floor=_field(rn, "floor", where, int),
                capacity=_field(rn, "capacity", where, int),
                is_exit=_field(rn, "is_exit", where, bool),
                name=str(rn.get("name", "")),
            )
        )
    nodes.sort(key=lambda n: n.id)
    edges = []
    for k, re_ in enumerate(raw_edges):
        where = f"edges[{k}]"
        if not isinstance(re_, dict):
            raise ScenarioError(f"{where}: must be an object")
        edges.append(
            GraphEdge(
                src=_field(re_, "src", where, int),
                dst=_field(re_, "dst", where, int),
                length_cm=_field(re_, "length_cm", where),
            )
        )
    _validate(nodes, edges)
    return BuildingGraph(tuple(nodes), tuple(edges))


def load_graph(text: str) -> BuildingGraph:
    """Parse and validate the graph part of a scenario document."""
    return graph_from_dict(parse_document(text))


def graph_to_dict(graph: BuildingGraph) -> dict:
    nodes = []
    for n in graph.nodes:
        d = {
            "id": n.id,
            "x_cm": n.x_cm,
            "y_cm": n.y_cm,
            "floor": n.floor,
            "capacity": n.capacity,
            "is_exit": n.is_exit,
        }
        if n.name:
            d["name"] = n.name
        nodes.append(d)
    edges = [{"src": e.src, "dst": e.dst, "length_cm": e.length_cm} for e in graph.edges]
    return {"schema": SCHEMA_VERSION, "nodes": nodes, "edges": edges}


def dump_graph(graph: BuildingGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=1)


def edge_penalty(length: float, i_src: float, i_dst: float, penalty: float, block: float) -> float:
    worst = max(i_src, i_dst)
    if worst > block:
        return INF
    return length * (1.0 + penalty * worst)


def effective_length(edge: GraphEdge, hazard: "HazardState | None", t: float) -> float:
    """Hazard-penalised length of ``edge`` at time ``t``; infinite once an endpoint is blocked."""
    if hazard is None:
        return edge.length_cm
    return edge_penalty(
        edge.length_cm,
        hazard.intensity(edge.src, t),
        hazard.intensity(edge.dst, t),
        hazard.penalty,
        hazard.block_threshold,
    )


def effective_safety(graph: BuildingGraph, u: int, v: int) -> float:
    """Baseline exposure of an edge: its length over the longest edge length."""
    return graph.length(u, v) / graph.max_length


def dijkstra(
    graph: BuildingGraph,
    sources: Iterable[int],
    weight=None,
) -> tuple[list[float], list[int]]:
    """Multi-source Dijkstra.

    ``weight(u, v)`` defaults to physical length. Returns ``(dist, parent)`` where
    ``parent[v]`` is the next node from ``v`` towards its nearest source (-1 at
    sources and unreachable nodes). Among equal-cost predecessors the smaller id
    wins, so ties resolve the same way on every run.
    """
    n = graph.n_nodes
    dist = [INF] * n
    parent = [-1] * n
    heap: list[tuple[float, int, int]] = []
    for s in sources:
        dist[s] = 0.0
        heapq.heappush(heap, (0.0, s, -1))
    done = [False] * n
    while heap:
        d, u, _ = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v in graph.neighbors(u):
            if done[v]:
                continue
            w = graph.length(u, v) if weight is None else weight(u, v)
            if w == INF:
                continue
            nd = d + w
            if nd < dist[v] or (nd == dist[v] and u < parent[v]):
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v, u))
    return dist, parent


def intensity_weight(graph: BuildingGraph, intensities: Sequence[float], penalty: float, block: float):
    def weight(u: int, v: int) -> float:
        return edge_penalty(graph.length(u, v), intensities[u], intensities[v], penalty, block)

    return weight


def exit_tree(graph: BuildingGraph, weight=None) -> tuple[list[float], list[int]]:
    """Distance to the nearest exit and next hop towards it, for every node."""
    return dijkstra(graph, graph.exits, weight)


def path_from_tree(dist: Sequence[float], nxt: Sequence[int], src: int) -> Path:
    if dist[src] == INF:
        return Path((), INF)
    nodes = [src]
    while nxt[nodes[-1]] != -1:
        nodes.append(nxt[nodes[-1]])
    return Path(tuple(nodes), dist[src])


def shortest_path(graph: BuildingGraph, src: int, hazard: "HazardState | None" = None, t: float = 0.0) -> Path:
    """Minimum effective-length path from ``src`` to the nearest exit at time ``t``.

    The search runs backwards from all exits, so the tie rule applies to the
    next hop taken from each node: the smaller node id wins. Returns an empty
    path when no exit is reachable.
    """
    if not 0 <= src < graph.n_nodes:
        raise KeyError(f"unknown node {src}")
    if hazard is None:
        weight = None
    else:
        intens = [hazard.intensity(k, t) for k in range(graph.n_nodes)]
        weight = intensity_weight(graph, intens, hazard.penalty, hazard.block_threshold)
    dist, nxt = exit_tree(graph, weight)
    return path_from_tree(dist, nxt, src)


def rotation_angle(prev: int, cur: int, nxt: int, graph: BuildingGraph) -> float:
    """Absolute turn in degrees at ``cur`` between the floor-plane projections of the two edges."""
    if not graph.has_edge(prev, cur) or not graph.has_edge(cur, nxt):
        raise KeyError(f"missing edge on {prev}-{cur}-{nxt}")
    a, b, c = graph.nodes[prev], graph.nodes[cur], graph.nodes[nxt]
    ux, uy = b.x_cm - a.x_cm, b.y_cm - a.y_cm
    vx, vy = c.x_cm - b.x_cm, c.y_cm - b.y_cm
    if prev == nxt:
        return 180.0
    nu, nv = math.hypot(ux, uy), math.hypot(vx, vy)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    ux, uy, vx, vy = ux / nu, uy / nu, vx / nv, vy / nv
    # atan2 of |cross| and dot stays accurate near 0 and 180 degrees
    return math.degrees(math.atan2(abs(ux * vy - uy * vx), ux * vx + uy * vy))
