"""Shared builders for small test graphs."""

import itertools
import random

from cpnevac.graph import INF, BuildingGraph, GraphEdge, GraphNode
from cpnevac.hazard import SensorReading


def line_graph(lengths, exit_at_end=True, speed_positions=None):
    """Nodes 0..n on the x axis joined in a line; the last node is the exit."""
    xs = [0.0]
    for L in lengths:
        xs.append(xs[-1] + L)
    nodes = tuple(GraphNode(k, x, 0.0, 0, 1, exit_at_end and k == len(xs) - 1) for k, x in enumerate(xs))
    edges = tuple(GraphEdge(k, k + 1, float(L)) for k, L in enumerate(lengths))
    return BuildingGraph(nodes, edges)


def random_graph(rng: random.Random, n_max=10, int_lengths=True):
    """Connected random graph with 2..n_max nodes, integer lengths and 1..3 exits."""
    n = rng.randint(2, n_max)
    order = list(range(n))
    rng.shuffle(order)
    pairs = set()
    for k in range(1, n):
        u, v = order[k], order[rng.randrange(k)]
        pairs.add((min(u, v), max(u, v)))
    for u, v in itertools.combinations(range(n), 2):
        if rng.random() < 0.25:
            pairs.add((u, v))
    exits = set(rng.sample(range(n), rng.randint(1, min(3, n - 1))))
    nodes = tuple(
        GraphNode(k, float(rng.randint(0, 2000)), float(rng.randint(0, 2000)), 0, rng.randint(1, 2), k in exits)
        for k in range(n)
    )
    edges = tuple(
        GraphEdge(u, v, float(rng.randint(1, 9) if int_lengths else rng.uniform(1, 9) * 100)) for u, v in sorted(pairs)
    )
    return BuildingGraph(nodes, edges)


def enumerate_exit_paths(graph, src, weight=None):
    """Every simple path from ``src`` that stops at the first exit it meets, with its cost."""
    exits = set(graph.exits)
    out = []

    def cost_of(a, b):
        return graph.length(a, b) if weight is None else weight(a, b)

    def extend(path, cost):
        node = path[-1]
        if node in exits:
            out.append((cost, tuple(path)))
            return
        for nxt in graph.neighbors(node):
            if nxt in path:
                continue
            w = cost_of(node, nxt)
            if w == INF:
                continue
            extend(path + [nxt], cost + w)

    extend([src], 0.0)
    return out


# --- deterministic queue oracle ----------------------------------------------

def queue_at(q0, lam, mu, t):
    """Brute-force queue length at time ``t`` (events at ``t`` included).

    One arrival every ``1/lam`` seconds and one departure opportunity every
    ``1/mu`` seconds; an opportunity at an empty queue is lost.
    """
    events = []
    if lam > 0:
        k = 1
        while k / lam <= t:
            events.append((k / lam, 1, +1))
            k += 1
    if mu > 0:
        j = 1
        while j / mu <= t:
            events.append((j / mu, 0, -1))
            j += 1
    q = q0
    for _, _, step in sorted(events):
        if step > 0:
            q += 1
        elif q > 0:
            q -= 1
    return q


def random_queue_instance(rng: random.Random, n_nodes=None):
    """A line path with constant-rate readings whose congestion sign is unambiguous.

    Each non-exit node either sees no arrivals, or sees arrivals at least as
    fast as departures over a non-empty initial queue. In both families the
    sign of the projected queue agrees with the discrete queue's emptiness.
    """
    n = n_nodes or rng.randint(2, 5)
    lengths = [rng.choice([100.0, 250.0, 400.0, 600.0]) for _ in range(n - 1)]
    g = line_graph(lengths)
    rates = [0.0, 0.1, 0.2, 0.25, 0.5, 1.0]
    readings = []
    for node in range(n):
        if rng.random() < 0.5:
            q0, lam, mu = rng.randint(0, 4), 0.0, rng.choice(rates)
        else:
            mu = rng.choice(rates)
            lam = rng.choice([r for r in rates if r >= mu and r > 0])
            q0 = rng.randint(1, 5)
        readings.append(SensorReading(node, q0, lam, mu, 0.0))
    return g, readings


def forecast_vs_oracle(graph, readings, cls):
    """Compare the forecast's projected queues with the brute-force queue at each predicted arrival.

    Returns ``(worst_gap, predicted_congestion, oracle_congestion)``.
    """
    from cpnevac.goals import clamp, predict_congestion

    path = tuple(range(graph.n_nodes))
    fc = predict_congestion(path, graph, readings, cls)
    worst, oracle_c = 0.0, 0
    for node, t in zip(path[:-1], fc.arrival_times):
        r = readings[node]
        projected = r.queue_length + r.arrival_rate * t - r.departure_rate * t
        actual = queue_at(r.queue_length, r.arrival_rate, r.departure_rate, t)
        worst = max(worst, abs(clamp(projected) - actual))
        oracle_c += actual > 0
    return worst, fc.congestion, oracle_c
