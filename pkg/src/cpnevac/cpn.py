"""Cognitive packet routing: per-node random neural networks, smart packets and ACKs.

Each node keeps, per goal class, a small random neural network with one neuron
per neighbour and a bounded routing list of loop-free exit routes ordered by
goal value. Smart packets walk the graph choosing the most excited neuron (or
drifting at random), and every packet that reaches an exit sends an ACK back
along its loop-free reverse path. Each node the ACK passes stores the route
suffix from itself and reinforces the neuron of the hop it took.
"""

from __future__ import annotations

import bisect
import math
import operator
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import goals as goals_mod
from .graph import INF, BuildingGraph, Path
from .hazard import HazardState, SensorReading


class NoRoute(LookupError):
    """The routing list for a goal class holds no usable entry."""


# --- random neural network ---------------------------------------------------

@dataclass
class RnnState:
    """One neuron per neighbour of a node.

    ``w_plus[k]``/``w_minus[k]`` are the excitatory/inhibitory weights into the
    neuron for ``neighbors[k]``. Every neuron fires at the network's total
    synaptic weight, which renormalisation keeps constant; with external
    excitation below external inhibition that bounds ``q`` strictly below 1.
    """

    neighbors: tuple[int, ...]
    w_plus: list[float]
    w_minus: list[float]
    q: list[float]
    threshold: float | None = None
    alpha: float = 0.8
    excitation: float = 0.1
    inhibition: float = 0.2
    total_weight: float = 0.0
    _ranking: tuple = field(default=(None, ()), repr=False, compare=False)

    @classmethod
    def uniform(cls, neighbors: Sequence[int], weight: float = 0.5, **kw) -> "RnnState":
        if not neighbors:
            raise ValueError("a node without neighbours has no neurons")
        n = len(neighbors)
        state = cls(tuple(neighbors), [weight] * n, [weight] * n, [0.0] * n, **kw)
        state.total_weight = 2 * weight * n
        solve_q(state)
        return state

    def index(self, node: int) -> int:
        try:
            return self.neighbors.index(node)
        except ValueError:
            raise KeyError(f"{node} is not a neighbour") from None

    def excitation_of(self, node: int) -> float:
        return self.q[self.index(node)]

    def ranking(self) -> tuple[int, ...]:
        """Neighbours by descending excitation, smaller id first on ties; cached per ``q`` list."""
        source, order = self._ranking
        if source is not self.q:
            order = tuple(node for _, node in sorted(zip((-x for x in self.q), self.neighbors)))
            self._ranking = (self.q, order)
        return order

    def argmax(self, exclude: int = -1) -> int:
        """Most excited neighbour (smallest id on ties), skipping ``exclude`` if possible."""
        ranking = self.ranking()
        if ranking[0] != exclude or len(ranking) == 1:
            return ranking[0]
        return ranking[1]


def solve_q(rnn: RnnState, tol: float = 1e-6, max_iter: int = 100) -> list[float]:
    """Fixed point of the neuron excitation levels, updated in place."""
    n = len(rnn.neighbors)
    base = rnn.total_weight + rnn.inhibition
    lam = rnn.excitation
    w_plus, w_minus = rnn.w_plus, rnn.w_minus
    spread = 1.0 / (n - 1) if n > 1 else 0.0
    q = rnn.q
    for _ in range(max_iter):
        total = sum(q)
        new = [
            (lam + wp * (total - qi) * spread) / (base + wm * (total - qi) * spread)
            for qi, wp, wm in zip(q, w_plus, w_minus)
        ]
        delta = max(map(abs, map(operator.sub, new, q)))
        q = new
        if delta < tol:
            break
    rnn.q = q
    return q


def rnn_reinforce(rnn: RnnState, winner: int, reward: float) -> RnnState:
    """Reinforcement step for the hop ``winner`` earning ``reward``.

    The threshold is an exponential average of past rewards. A reward at or
    above it strengthens the winner and inhibits the rest; a lower one does
    the opposite.
    """
    if not reward > 0:
        raise ValueError("reward must be positive")
    k = rnn.index(winner)
    if rnn.threshold is None:
        rnn.threshold = reward
    rnn.threshold = rnn.alpha * rnn.threshold + (1 - rnn.alpha) * reward
    n = len(rnn.neighbors)
    if reward >= rnn.threshold:
        rnn.w_plus[k] += reward
        for j in range(n):
            if j != k:
                rnn.w_minus[j] += reward / (n - 1)
    else:
        rnn.w_minus[k] += reward
        for j in range(n):
            if j != k:
                rnn.w_plus[j] += reward / (n - 1)
    scale = rnn.total_weight / (sum(rnn.w_plus) + sum(rnn.w_minus))
    rnn.w_plus = [w * scale for w in rnn.w_plus]
    rnn.w_minus = [w * scale for w in rnn.w_minus]
    solve_q(rnn)
    return rnn


def sp_next_hop(node: int, rnn: RnnState, drift_prob: float, rng: random.Random, came_from: int = -1) -> int:
    """Most excited neighbour, or a uniformly random one with probability ``drift_prob``.

    ``came_from`` is never chosen unless it is the only neighbour, so a packet
    does not bounce straight back along the edge it arrived on.
    """
    if not rnn.neighbors:
        raise ValueError(f"node {node} is isolated")
    if drift_prob > 0 and rng.random() < drift_prob:
        choices = [n for n in rnn.neighbors if n != came_from] or list(rnn.neighbors)
        return choices[rng.randrange(len(choices))]
    return rnn.argmax(came_from)


# --- routes ------------------------------------------------------------------

def remove_loops(path: Sequence[int]) -> list[int]:
    """Cut every cycle out of a walk.

    The walk is scanned from its exit end, the way the ACK travels: each node
    kept jumps straight back to that node's earliest visit, so whole detours
    between two visits of a node disappear.
    """
    if not path:
        raise ValueError("empty path")
    first: dict[int, int] = {}
    for k, node in enumerate(path):
        first.setdefault(node, k)
    out = []
    k = len(path) - 1
    while k >= 0:
        node = path[k]
        out.append(node)
        k = first[node] - 1
    out.reverse()
    return out


@dataclass(frozen=True)
class RouteEntry:
    path: tuple[int, ...]
    value: float
    timestamp: float


@dataclass
class RoutingList:
    capacity: int = 5
    entries: list[RouteEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @staticmethod
    def _key(e: RouteEntry):
        return (e.value, e.path)

    def remove(self, path: tuple[int, ...]) -> bool:
        for k, e in enumerate(self.entries):
            if e.path == path:
                del self.entries[k]
                return True
        return False

    def insert(self, path: Sequence[int], value: float, timestamp: float = 0.0) -> bool:
        """Add or refresh ``path``; returns whether the list changed."""
        path = tuple(path)
        refreshed = self.remove(path)
        if math.isinf(value) or math.isnan(value):
            return refreshed
        entry = RouteEntry(path, value, timestamp)
        if not refreshed and len(self.entries) >= self.capacity:
            if self._key(entry) >= self._key(self.entries[-1]):
                return False
            self.entries.pop()
        keys = [self._key(e) for e in self.entries]
        self.entries.insert(bisect.bisect_right(keys, self._key(entry)), entry)
        return True

    def prune(self, now: float, max_age: float) -> None:
        self.entries = [e for e in self.entries if now - e.timestamp <= max_age]

    def top(self) -> RouteEntry:
        if not self.entries:
            raise NoRoute("routing list is empty")
        return self.entries[0]


@dataclass
class CpnNodeState:
    node: int
    rnn: dict[str, RnnState] = field(default_factory=dict)
    routes: dict[str, RoutingList] = field(default_factory=dict)


# --- packets -----------------------------------------------------------------

@dataclass
class SmartPacket:
    origin: int
    goal: str
    visited: list[int]
    measurements: dict[int, SensorReading] = field(default_factory=dict)
    hop_budget: int = 0

    @property
    def hops(self) -> int:
        return len(self.visited) - 1


@dataclass(frozen=True)
class Ack:
    """Return packet. ``reverse_path[0]`` is the exit; ``values[k]`` is the goal
    value of the forward suffix starting at ``reverse_path[-1 - k]``."""

    goal: str
    reverse_path: tuple[int, ...]
    values: tuple[float, ...]
    measurements: Mapping[int, SensorReading]
    timestamp: float = 0.0

    @property
    def forward(self) -> tuple[int, ...]:
        return self.reverse_path[::-1]

    def suffix(self, node: int) -> tuple[tuple[int, ...], float]:
        fwd = self.forward
        try:
            k = fwd.index(node)
        except ValueError:
            raise ValueError(f"node {node} is not on the ACK path") from None
        return fwd[k:], self.values[k]


@dataclass
class CpnParams:
    drift_prob: float = 0.05
    hop_budget: int | None = None  # default 4 * |V|
    list_capacity: int = 5
    batch_size: int = 20
    alpha: float = 0.8
    init_weight: float = 0.5
    max_age: float = INF
    reward_scale: Mapping[str, float] = field(
        default_factory=lambda: {"distance": 1000.0, "time": 10.0, "energy": 10.0, "safety": 1.0}
    )
    goal_cap: float = 1e9


def best_route(state: CpnNodeState, goal: str, now: float | None = None, max_age: float = INF) -> Path:
    routes = state.routes.get(goal)
    if routes is None:
        raise NoRoute(f"node {state.node} has no {goal} routes")
    if now is not None and max_age != INF:
        routes.prune(now, max_age)
    entry = routes.top()
    return Path(entry.path, entry.value)


def process_ack(node: int, ack: Ack, state: CpnNodeState, params: CpnParams | None = None) -> CpnNodeState:
    """Store the ACK's route suffix at ``node`` and reinforce the hop it took."""
    suffix, value = ack.suffix(node)
    learn(state, ack.goal, suffix, value, ack.timestamp, params or CpnParams())
    return state


def learn(state: CpnNodeState, goal: str, suffix: tuple[int, ...], value: float, t: float, params: CpnParams) -> None:
    routes = state.routes.setdefault(goal, RoutingList(params.list_capacity))
    routes.insert(suffix, value, t)
    if len(suffix) >= 2 and goal in state.rnn:
        scale = params.reward_scale.get(goal, 1.0)
        reward = scale / min(max(value, 1e-12), params.goal_cap)
        rnn_reinforce(state.rnn[goal], suffix[1], reward)


class CpnEngine:
    """Routing fabric for one building: all node states plus packet generation.

    ``readings`` passed to :meth:`launch_smart_packets` is what the sensors
    currently report, indexed by node; a packet only ever reads the entries of
    nodes it visits.
    """

    def __init__(
        self,
        graph: BuildingGraph,
        goals: Sequence[str] = ("distance",),
        params: CpnParams | None = None,
        rng: random.Random | None = None,
    ):
        self.graph = graph
        self.params = params or CpnParams()
        self.rng = rng or random.Random(0)
        self.goals = tuple(goals)
        self.hop_budget = self.params.hop_budget or 4 * graph.n_nodes
        self.diagnostics: Counter = Counter()
        self.exits = frozenset(graph.exits)
        self.states: list[CpnNodeState] = []
        for node in range(graph.n_nodes):
            state = CpnNodeState(node)
            for g in self.goals:
                nbrs = graph.neighbors(node)
                if nbrs:
                    state.rnn[g] = RnnState.uniform(nbrs, self.params.init_weight, alpha=self.params.alpha)
                state.routes[g] = RoutingList(self.params.list_capacity)
            self.states.append(state)

    def walk(self, origin: int, goal: str, readings) -> SmartPacket | None:
        sp = SmartPacket(origin, goal, [origin], {origin: readings[origin]}, self.hop_budget)
        node, prev = origin, -1
        drift = self.params.drift_prob
        exits, states, rng = self.exits, self.states, self.rng
        visited, measured = sp.visited, sp.measurements
        hops = 0
        # same choice as sp_next_hop, inlined for speed
        while node not in exits:
            if hops >= sp.hop_budget:
                return None
            rnn = states[node].rnn[goal]
            if drift > 0 and rng.random() < drift:
                choices = [n for n in rnn.neighbors if n != prev] or list(rnn.neighbors)
                nxt = choices[rng.randrange(len(choices))]
            else:
                order = rnn.ranking()
                nxt = order[0] if order[0] != prev or len(order) == 1 else order[1]
            node, prev = nxt, node
            visited.append(node)
            measured[node] = readings[node]
            hops += 1
        return sp

    def make_ack(self, sp: SmartPacket, cls, hazard: HazardState | None, t: float) -> Ack:
        fwd = remove_loops(sp.visited)
        if sp.goal == "time":
            kw = {} if hazard is None else {"penalty": hazard.penalty, "block": hazard.block_threshold}
            values = goals_mod.suffix_times(fwd, self.graph, sp.measurements, cls, **kw)
        else:
            values = tuple(
                goals_mod.evaluate(sp.goal, fwd[k:], self.graph, sp.measurements, cls, hazard, t)
                for k in range(len(fwd))
            )
        return Ack(sp.goal, tuple(reversed(fwd)), values, sp.measurements, t)

    def apply_ack(self, ack: Ack) -> None:
        fwd = ack.forward
        for k, node in enumerate(fwd):
            if node in self.exits:
                continue
            learn(self.states[node], ack.goal, fwd[k:], ack.values[k], ack.timestamp, self.params)
        self.diagnostics["acks_applied"] += 1

    def launch_smart_packets(
        self,
        origin: int,
        goal: str,
        count: int,
        readings,
        cls: goals_mod.EvacueeClass | None = None,
        hazard: HazardState | None = None,
        t: float = 0.0,
    ) -> list[Ack]:
        if count < 1:
            raise ValueError("count must be >= 1")
        cls = cls or goals_mod.NORMAL
        acks = []
        for _ in range(count):
            self.diagnostics["sp_launched"] += 1
            sp = self.walk(origin, goal, readings)
            if sp is None:
                self.diagnostics["sp_dropped"] += 1
                continue
            self.diagnostics["sp_delivered"] += 1
            ack = self.make_ack(sp, cls, hazard, t)
            self.apply_ack(ack)
            acks.append(ack)
        return acks

    def best_route(self, node: int, goal: str, now: float | None = None) -> Path:
        return best_route(self.states[node], goal, now, self.params.max_age)


def quiet_readings(n_nodes: int) -> list[SensorReading]:
    """Readings for an empty, hazard-free building."""
    return [SensorReading(k) for k in range(n_nodes)]
