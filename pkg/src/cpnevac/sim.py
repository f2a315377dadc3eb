"""Fixed-tick evacuation simulator with evacuees acting as dumb packets."""

from __future__ import annotations

import io
import math
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Sequence

from .cpn import CpnEngine, CpnParams, NoRoute
from .goals import EvacueeClass
from .graph import INF, Path, exit_tree, intensity_weight, path_from_tree
from .hazard import SensorReading
from .scenario import Scenario

MODES = {
    "dijkstra": None,
    "cpn-sp": "distance",
    "cpn-st": "time",
    "cpn-energy": "energy",
    "cpn-safety": "safety",
}

MOVING, QUEUED, EXITED, DEAD = "moving", "queued", "exited", "dead"


class ConservationError(AssertionError):
    pass


@dataclass(frozen=True)
class OscillationPolicy:
    movement_depth: int = 3
    switch_prob: float = 0.9
    hazard_check_period: float = 5.0

    def __post_init__(self) -> None:
        if self.movement_depth < 1:
            raise ValueError("movement_depth must be >= 1")
        if not 0.0 <= self.switch_prob <= 1.0:
            raise ValueError("switch_prob must lie in [0, 1]")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.5
    time_cap: float = 900.0
    rate_window: float = 30.0
    exposure_factor: float = 1.0
    refresh_period: float = 5.0
    cpn: CpnParams = field(default_factory=CpnParams)
    strict: bool = True


@dataclass
class Evacuee:
    id: int
    cls: EvacueeClass
    node: int
    health: float
    state: str = QUEUED
    target: int = -1  # far end of the edge being walked
    progress: float = 0.0
    path: tuple[int, ...] = ()
    pos: int = 0  # index of ``node`` in ``path``
    hops_since_replan: int = 0
    path_valid: bool = True
    egress_time: float = math.nan
    exit_node: int = -1


@dataclass
class NodeQueueStats:
    fifo: deque = field(default_factory=deque)
    arrivals: deque = field(default_factory=deque)
    departures: deque = field(default_factory=deque)
    total_arrivals: int = 0
    total_departures: int = 0
    max_queue: int = 0

    def record_arrival(self, t: float) -> None:
        self.arrivals.append(t)
        self.total_arrivals += 1

    def record_departure(self, t: float) -> None:
        self.departures.append(t)
        self.total_departures += 1

    def rates(self, t: float, window: float) -> tuple[float, float]:
        """Window-averaged arrival and departure rates, each smoothed by one pseudo-event."""
        for times in (self.arrivals, self.departures):
            while times and times[0] <= t - window:
                times.popleft()
        return (len(self.arrivals) + 1) / window, (len(self.departures) + 1) / window


@dataclass
class SimResult:
    mode: str
    seed: int
    population: int
    survivors: int
    dead: int
    stranded: int
    egress_times: tuple[float, ...]
    congestion_events: int
    edge_visits: tuple[int, ...]
    max_queue: tuple[int, ...]
    exit_counts: dict[int, int]
    end_time: float
    conservation_violations: int = 0
    diagnostics: dict[str, int] = field(default_factory=dict)
    events: list[tuple[float, str, int, int]] | None = None

    @property
    def exit_shares(self) -> dict[int, float]:
        total = sum(self.exit_counts.values())
        if total == 0:
            return {k: 0.0 for k in self.exit_counts}
        return {k: v / total for k, v in self.exit_counts.items()}

    @property
    def mean_egress(self) -> float:
        times = [x for x in self.egress_times if not math.isnan(x)]
        return sum(times) / len(times) if times else math.nan

    @property
    def last_egress(self) -> float:
        times = [x for x in self.egress_times if not math.isnan(x)]
        return max(times) if times else math.nan

    def summary_row(self) -> dict:
        row = {
            "mode": self.mode,
            "seed": self.seed,
            "population": self.population,
            "survivors": self.survivors,
            "dead": self.dead,
            "stranded": self.stranded,
            "mean_egress_s": repr(self.mean_egress),
            "last_egress_s": repr(self.last_egress),
            "congestion_events": self.congestion_events,
            "end_time_s": repr(self.end_time),
        }
        for k in sorted(self.exit_counts):
            row[f"exit_{k}"] = self.exit_counts[k]
        for k in ("sp_launched", "sp_delivered", "sp_dropped", "acks_applied"):
            row[k] = self.diagnostics.get(k, 0)
        return row

    def to_csv(self) -> str:
        """Full result as CSV text; two runs agree on it byte for byte iff their results agree."""
        out = io.StringIO()
        row = self.summary_row()
        out.write(",".join(row) + "\n")
        out.write(",".join(str(v) for v in row.values()) + "\n")
        out.write("evacuee,egress_s\n")
        for k, x in enumerate(self.egress_times):
            out.write(f"{k},{x!r}\n")
        out.write("edge,visits\n")
        for k, x in enumerate(self.edge_visits):
            out.write(f"{k},{x}\n")
        out.write("node,max_queue\n")
        for k, x in enumerate(self.max_queue):
            out.write(f"{k},{x}\n")
        return out.getvalue()

    def event_log(self) -> str:
        lines = [f"{t!r},{kind},{ev},{node}" for t, kind, ev, node in self.events or ()]
        return "\n".join(["t,event_type,evacuee,node", *lines]) + "\n"


class Simulation:
    """One evacuation run. Deterministic given scenario, mode, policy and seed."""

    def __init__(
        self,
        scenario: Scenario,
        mode: str,
        population: int,
        seed: int = 0,
        policy: OscillationPolicy | None = None,
        config: SimConfig | None = None,
        *,
        evacuee_class: EvacueeClass | None = None,
        start_nodes: Sequence[int] | None = None,
        record_events: bool = False,
    ):
        if mode not in MODES:
            raise ValueError(f"unknown routing mode {mode!r}; choose from {sorted(MODES)}")
        self.scenario = scenario
        self.graph = scenario.graph
        self.hazard = scenario.hazard
        self.mode = mode
        self.goal = MODES[mode]
        self.policy = policy or OscillationPolicy()
        self.config = config or SimConfig()
        self.seed = seed
        self.rng = random.Random(seed)
        self.cls = evacuee_class or scenario.default_class()
        self.t = 0.0
        self.tick_no = 0
        g = self.graph
        self.stats = [NodeQueueStats() for _ in range(g.n_nodes)]
        self.edge_visits = [0] * len(g.edges)
        self.congestion_events = 0
        self.exit_counts = {e: 0 for e in g.exits}
        self.events: list | None = [] if record_events else None
        self.conservation_violations = 0
        self._last_check = -INF
        self._last_refresh = [-INF] * g.n_nodes
        self._tree_cache: tuple[int, tuple] | None = None
        self._readings_cache: tuple[int, list] | None = None
        self._known_hot: set[int] = set()

        self.engine = None
        if self.goal is not None:
            self.engine = CpnEngine(g, (self.goal,), self.config.cpn, random.Random(f"cpn-{seed}"))

        if start_nodes is None:
            spots = [n.id for n in g.nodes if not n.is_exit]
            start_nodes = [self.rng.choice(spots) for _ in range(population)]
        elif len(start_nodes) != population:
            raise ValueError("start_nodes must list one node per evacuee")
        self.evacuees = [Evacuee(k, self.cls, node, self.cls.health) for k, node in enumerate(start_nodes)]
        for ev in self.evacuees:
            self.stats[ev.node].fifo.append(ev)
            self._log("spawn", ev.id, ev.node)
        for s in self.stats:
            s.max_queue = len(s.fifo)

    # --- sensing -----------------------------------------------------------

    def intensity(self, node: int, t: float | None = None) -> float:
        if self.hazard is None:
            return 0.0
        return self.hazard.intensity(node, self.t if t is None else t)

    def reading(self, node: int) -> SensorReading:
        s = self.stats[node]
        lam, mu = s.rates(self.t, self.config.rate_window)
        return SensorReading(node, float(len(s.fifo)), lam, mu, self.intensity(node))

    def readings(self) -> list[SensorReading]:
        if self._readings_cache is None or self._readings_cache[0] != self.tick_no:
            self._readings_cache = (self.tick_no, [self.reading(k) for k in range(self.graph.n_nodes)])
        return self._readings_cache[1]

    def _log(self, kind: str, ev: int, node: int) -> None:
        if self.events is not None:
            self.events.append((self.t, kind, ev, node))

    # --- routing -----------------------------------------------------------

    def _global_tree(self):
        if self._tree_cache is None or self._tree_cache[0] != self.tick_no:
            g = self.graph
            weight = None
            if self.hazard is not None:
                intens = self.hazard.intensities(g.n_nodes, self.t)
                weight = intensity_weight(g, intens, self.hazard.penalty, self.hazard.block_threshold)
            self._tree_cache = (self.tick_no, exit_tree(g, weight))
        return self._tree_cache[1]

    def routing_mode_dijkstra(self, node: int) -> Path:
        """Current global shortest effective path from ``node``."""
        dist, nxt = self._global_tree()
        return path_from_tree(dist, nxt, node)

    def _local_fallback(self, node: int) -> Path:
        g = self.graph
        intens = [0.0] * g.n_nodes
        for k in (node, *g.neighbors(node)):
            intens[k] = self.intensity(k)
        penalty = self.hazard.penalty if self.hazard else 1.0
        block = self.hazard.block_threshold if self.hazard else INF
        dist, nxt = exit_tree(g, intensity_weight(g, intens, penalty, block))
        return path_from_tree(dist, nxt, node)

    def suggest(self, node: int, avoid_hot: bool = False) -> Path:
        if self.engine is None:
            return self.routing_mode_dijkstra(node)
        routes = self.engine.states[node].routes[self.goal]
        if self.config.cpn.max_age != INF:
            routes.prune(self.t, self.config.cpn.max_age)
        if not routes.entries:
            self.engine.diagnostics["fallbacks"] += 1
            return self._local_fallback(node)
        if avoid_hot:
            for entry in routes.entries:
                if not self._known_hot.intersection(entry.path[1:]):
                    return Path(entry.path, entry.value)
        top = routes.entries[0]
        return Path(top.path, top.value)

    def maybe_replan(self, ev: Evacuee, node: int) -> None:
        pol = self.policy
        at_end = ev.pos >= len(ev.path) - 1
        if not ev.path or not ev.path_valid or at_end:
            new = self.suggest(node, avoid_hot=not ev.path_valid)
            self._adopt(ev, new)
            return
        if ev.hops_since_replan < pol.movement_depth:
            return
        new = self.suggest(node)
        if new and self.rng.random() < pol.switch_prob:
            self._adopt(ev, new)

    def _adopt(self, ev: Evacuee, path: Path) -> None:
        ev.path = path.nodes
        ev.pos = 0
        ev.hops_since_replan = 0
        ev.path_valid = True

    def hazard_check(self) -> None:
        """Invalidate cached paths whose remaining nodes the fire has reached."""
        if self.hazard is None:
            return
        hot = {k for k in range(self.graph.n_nodes) if self.intensity(k) > 0}
        self._known_hot = hot
        if not hot:
            return
        for ev in self.evacuees:
            if ev.state in (MOVING, QUEUED) and ev.path and hot.intersection(ev.path[ev.pos:]):
                ev.path_valid = False

    def refresh_routes(self) -> None:
        period = self.config.refresh_period
        batch = self.config.cpn.batch_size
        readings = None
        for node, s in enumerate(self.stats):
            if not s.fifo or self.graph.nodes[node].is_exit:
                continue
            if self.t - self._last_refresh[node] < period:
                continue
            self._last_refresh[node] = self.t
            if readings is None:
                readings = self.readings()
            self.engine.launch_smart_packets(node, self.goal, batch, readings, self.cls, self.hazard, self.t)

    # --- movement ----------------------------------------------------------

    def step_evacuee(self, ev: Evacuee) -> None:
        """Advance a walking evacuee; on reaching the far node it joins that node's queue."""
        g = self.graph
        ev.progress += ev.cls.speed * self.config.dt
        length = g.length(ev.node, ev.target)
        if ev.progress < length:
            return
        node = ev.target
        ev.node, ev.target, ev.progress = node, -1, 0.0
        ev.state = QUEUED
        ev.hops_since_replan += 1
        if ev.pos + 1 < len(ev.path) and ev.path[ev.pos + 1] == node:
            ev.pos += 1
        s = self.stats[node]
        self._log("arrive", ev.id, node)
        if s.fifo:
            self.congestion_events += 1
            self._log("congestion", ev.id, node)
        s.fifo.append(ev)
        s.record_arrival(self.t + self.config.dt)
        s.max_queue = max(s.max_queue, len(s.fifo))

    def _serve(self, node: int) -> None:
        s = self.stats[node]
        gnode = self.graph.nodes[node]
        slots = gnode.capacity
        stuck = []
        while slots and s.fifo:
            ev = s.fifo.popleft()
            slots -= 1
            if gnode.is_exit:
                ev.state = EXITED
                ev.egress_time = self.t
                ev.exit_node = node
                self.exit_counts[node] += 1
                s.record_departure(self.t)
                self._log("exit", ev.id, node)
                continue
            self.maybe_replan(ev, node)
            if len(ev.path) < 2 or ev.pos >= len(ev.path) - 1:
                stuck.append(ev)
                continue
            nxt = ev.path[ev.pos + 1]
            ev.state = MOVING
            ev.target = nxt
            ev.progress = 0.0
            self.edge_visits[self.graph.edge_id(node, nxt)] += 1
            s.record_departure(self.t)
            self._log("depart", ev.id, node)
        s.fifo.extend(stuck)

    def update_health(self, ev: Evacuee) -> None:
        if self.hazard is None:
            return
        node = ev.node
        if ev.state == MOVING and ev.progress > 0.5 * self.graph.length(ev.node, ev.target):
            node = ev.target
        dose = self.intensity(node, self.t + self.config.dt) * self.config.dt * self.config.exposure_factor
        if dose <= 0:
            return
        ev.health -= dose
        if ev.health <= 0:
            if ev.state == QUEUED:
                self.stats[ev.node].fifo.remove(ev)
            ev.state = DEAD
            self._log("death", ev.id, node)

    # --- main loop ---------------------------------------------------------

    def counts(self) -> Counter:
        return Counter(ev.state for ev in self.evacuees)

    def _check_conservation(self) -> None:
        c = self.counts()
        queued = sum(len(s.fifo) for s in self.stats)
        ok = c[MOVING] + c[QUEUED] + c[EXITED] + c[DEAD] == len(self.evacuees) and queued == c[QUEUED]
        if not ok:
            self.conservation_violations += 1
            if self.config.strict:
                raise ConservationError(f"population not conserved at t={self.t}: {dict(c)}, queued={queued}")

    def tick(self) -> None:
        dt = self.config.dt
        if self.t - self._last_check >= self.policy.hazard_check_period - 1e-9:
            self._last_check = self.t
            self.hazard_check()
        if self.engine is not None:
            self.refresh_routes()
        for node in range(self.graph.n_nodes):
            if self.stats[node].fifo:
                self._serve(node)
        for ev in self.evacuees:
            if ev.state == MOVING:
                self.step_evacuee(ev)
        for ev in self.evacuees:
            if ev.state in (MOVING, QUEUED):
                self.update_health(ev)
        self._check_conservation()
        self.tick_no += 1
        self.t = self.tick_no * dt

    def active(self) -> int:
        return sum(1 for ev in self.evacuees if ev.state in (MOVING, QUEUED))

    def run(self) -> SimResult:
        while self.t < self.config.time_cap and self.active():
            self.tick()
        c = self.counts()
        diag = dict(self.engine.diagnostics) if self.engine is not None else {}
        return SimResult(
            mode=self.mode,
            seed=self.seed,
            population=len(self.evacuees),
            survivors=c[EXITED],
            dead=c[DEAD],
            stranded=c[MOVING] + c[QUEUED],
            egress_times=tuple(ev.egress_time for ev in self.evacuees),
            congestion_events=self.congestion_events,
            edge_visits=tuple(self.edge_visits),
            max_queue=tuple(s.max_queue for s in self.stats),
            exit_counts=dict(self.exit_counts),
            end_time=self.t,
            conservation_violations=self.conservation_violations,
            diagnostics=diag,
            events=self.events,
        )


def run(
    scenario: Scenario,
    routing_mode: str,
    policy: OscillationPolicy | None = None,
    seed: int = 0,
    population: int = 120,
    config: SimConfig | None = None,
    **kw,
) -> SimResult:
    return Simulation(scenario, routing_mode, population, seed, policy, config, **kw).run()
