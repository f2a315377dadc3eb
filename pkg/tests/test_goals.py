import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpnevac.goals import (
    NORMAL,
    SICK,
    WHEELCHAIR,
    EvacueeClass,
    clamp,
    evaluate,
    goal_distance,
    goal_energy,
    goal_safety,
    goal_time,
    predict_congestion,
    suffix_times,
)
from cpnevac.graph import INF, BuildingGraph, GraphEdge, GraphNode, shortest_path
from cpnevac.hazard import HazardState, SensorReading

from helpers import forecast_vs_oracle, line_graph, random_graph, random_queue_instance

WALKER = EvacueeClass("walker", 100.0, "time")


def quiet(n):
    return [SensorReading(k) for k in range(n)]


def test_single_free_edge():
    g = line_graph([500.0])
    fc = predict_congestion((0, 1), g, quiet(2), WALKER)
    assert (fc.congestion, fc.total_time) == (0, 5.0)


def test_projected_queue_hand_example():
    # node 1 is reached after 5 s: Q = 2 + 0.5*5 - 0.1*5 = 4, delay 4/0.5 = 8 s
    g = line_graph([500.0, 100.0])
    readings = quiet(3)
    readings[1] = SensorReading(1, 2.0, 0.5, 0.1)
    fc = predict_congestion((0, 1, 2), g, readings, WALKER)
    assert fc.congestion == 1
    assert fc.arrival_times == (0.0, 5.0, 14.0)
    assert fc.total_time == 14.0


def test_zero_arrival_rate_is_capped():
    g = line_graph([100.0, 100.0])
    readings = quiet(3)
    readings[1] = SensorReading(1, 3.0, 0.0, 0.0)
    fc = predict_congestion((0, 1, 2), g, readings, WALKER, t_node_max=300.0)
    assert fc.total_time == 302.0 and fc.congestion == 1


def test_exit_node_adds_no_delay():
    g = line_graph([100.0])
    readings = [SensorReading(0), SensorReading(1, 9.0, 1.0, 0.0)]
    assert predict_congestion((0, 1), g, readings, WALKER).congestion == 0


def test_time_goal_examples():
    g = line_graph([300.0, 200.0])
    assert goal_time((0, 1, 2), g, quiet(3), WALKER) == 5.0


def test_clamp():
    assert clamp(-3) == 0
    assert clamp(4) == 4


@given(st.floats(-1e9, 1e9, allow_nan=False))
def test_clamp_properties(x):
    assert clamp(x) >= 0
    if x >= 0:
        assert clamp(x) == x


def _random_readings(rng, n):
    return [
        SensorReading(k, rng.randint(0, 6), rng.choice([0.0, 0.1, 0.3, 1.0]), rng.choice([0.0, 0.2, 0.5]), rng.choice([0.0, 0.0, 1.5]))
        for k in range(n)
    ]


def test_time_goal_equals_forecast_total_exactly():
    rng = random.Random(2)
    for _ in range(300):
        g = random_graph(rng, int_lengths=False)
        src = rng.randrange(g.n_nodes)
        path = shortest_path(g, src).nodes
        readings = _random_readings(rng, g.n_nodes)
        cls = rng.choice([NORMAL, WHEELCHAIR, SICK])
        assert goal_time(path, g, readings, cls) == predict_congestion(path, g, readings, cls).total_time


def test_suffix_times_match_time_goal():
    rng = random.Random(4)
    for _ in range(100):
        g = line_graph([rng.choice([100.0, 350.0, 500.0]) for _ in range(rng.randint(1, 6))])
        path = tuple(range(g.n_nodes))
        readings = _random_readings(rng, g.n_nodes)
        expected = tuple(goal_time(path[k:], g, readings, NORMAL) for k in range(len(path)))
        assert suffix_times(path, g, readings, NORMAL) == expected


def test_quiet_building_has_no_congestion():
    g = line_graph([120.0, 480.0, 600.0])
    fc = predict_congestion((0, 1, 2, 3), g, quiet(4), NORMAL)
    assert fc.congestion == 0
    assert fc.total_time == pytest.approx(1200.0 / NORMAL.speed)


def _growing_readings(rng, n):
    """Readings whose projected queues never shrink: arrivals at least as fast as departures."""
    out = []
    for k in range(n):
        mu = rng.choice([0.0, 0.1, 0.25])
        lam = rng.choice([x for x in (0.1, 0.25, 0.5, 1.0) if x >= mu])
        out.append(SensorReading(k, rng.randint(0, 6), lam, mu))
    return out


@given(st.integers(0, 10 ** 6), st.integers(0, 2), st.integers(1, 5))
def test_forecast_monotone_in_initial_queue(seed, node, extra):
    rng = random.Random(seed)
    g = line_graph([200.0, 300.0, 400.0])
    readings = _growing_readings(rng, 4)
    path = (0, 1, 2, 3)
    before = predict_congestion(path, g, readings, NORMAL)
    r = readings[node]
    readings[node] = SensorReading(r.node, r.queue_length + extra, r.arrival_rate, r.departure_rate, r.hazard_intensity)
    after = predict_congestion(path, g, readings, NORMAL)
    assert after.total_time >= before.total_time
    assert after.congestion >= before.congestion


def test_draining_queue_downstream_can_shorten_forecast():
    # A longer first queue delays arrival at node 1 until its backlog has drained,
    # which removes the capped delay there: the forecast is not globally monotone.
    g = line_graph([100.0, 100.0])
    base = [SensorReading(0, 0.0, 1.0, 0.0), SensorReading(1, 1.0, 0.0, 0.5), SensorReading(2)]
    busier = [SensorReading(0, 1.0, 1.0, 0.0)] + base[1:]
    assert predict_congestion((0, 1, 2), g, base, WALKER).total_time == 302.0
    assert predict_congestion((0, 1, 2), g, busier, WALKER).total_time == 3.0


def test_forecast_matches_discrete_queue_on_three_node_lines():
    rng = random.Random(21)
    for _ in range(50):
        g, readings = random_queue_instance(rng, n_nodes=3)
        gap, predicted, oracle = forecast_vs_oracle(g, readings, WALKER)
        assert gap <= 1.0
        assert predicted == oracle


def test_hazard_penalises_travel_time():
    g = line_graph([500.0])
    readings = [SensorReading(0, hazard_intensity=1.0), SensorReading(1)]
    assert goal_time((0, 1), g, readings, WALKER) == 10.0


# --- energy -------------------------------------------------------------------

def _l_shape():
    nodes = (GraphNode(0, 0, 0, 0), GraphNode(1, 300, 0, 0), GraphNode(2, 300, 400, 0, 1, True), GraphNode(3, 600, 0, 0, 1, True))
    edges = (GraphEdge(0, 1, 300.0), GraphEdge(1, 2, 400.0), GraphEdge(1, 3, 300.0))
    return BuildingGraph(nodes, edges)


def test_energy_examples():
    cls = EvacueeClass("chair", 60.0, "energy", c_b=10.0, c_s=0.01, c_t=0.2)
    g = _l_shape()
    straight = goal_energy((0, 1, 3), g, quiet(4), cls)
    assert straight == pytest.approx(0.01 * 600.0)
    corner = goal_energy((0, 1, 2), g, quiet(4), cls)
    assert corner == pytest.approx(0.01 * 700.0 + 18.0)
    busy = quiet(4)
    busy[0] = SensorReading(0, 2.0, 1.0, 0.0)
    busy[1] = SensorReading(1, 2.0, 1.0, 0.0)
    assert predict_congestion((0, 1, 3), g, busy, cls).congestion == 2
    assert goal_energy((0, 1, 3), g, busy, cls) == pytest.approx(straight + 20.0)


def test_energy_single_edge_has_no_turn():
    cls = EvacueeClass("chair", 60.0, "energy", c_b=1.0, c_s=1.0, c_t=1.0)
    assert goal_energy((1, 3), _l_shape(), quiet(4), cls) == 300.0


# --- safety -------------------------------------------------------------------

def test_safety_without_exposure_is_normalised_length():
    g = line_graph([300.0, 600.0])
    hz = HazardState(0, 1.0, 0.5, {0: 1e6, 1: 1e6, 2: 1e6})
    assert goal_safety((0, 1, 2), g, hz, quiet(3), WALKER, 0.0) == pytest.approx(0.5 + 1.0)


def test_safety_exposure_hand_example():
    # node 1 is reached at t = 20 s; the fire got there at 10 s; b = 0.5 adds 5
    g = line_graph([1000.0, 1000.0])
    hz = HazardState(2, 1.0, 0.5, {0: 1e6, 1: 10.0, 2: 1e6})
    value = goal_safety((0, 1, 2), g, hz, quiet(3), EvacueeClass("s", 100.0, "safety"), 10.0)
    assert value == pytest.approx(5.0 + 2.0)


@given(st.integers(0, 10 ** 6), st.floats(0, 500))
def test_safety_with_zero_growth_is_edge_sum(seed, now):
    rng = random.Random(seed)
    g = random_graph(rng)
    src = rng.randrange(g.n_nodes)
    path = shortest_path(g, src).nodes
    hz = HazardState.build(g, rng.randrange(g.n_nodes), 10.0, 0.0)
    expected = sum(g.length(u, v) / g.max_length for u, v in zip(path, path[1:]))
    assert goal_safety(path, g, hz, _random_readings(rng, g.n_nodes), NORMAL, now) == pytest.approx(expected)


# --- distance -----------------------------------------------------------------

def test_distance_goal_examples():
    g = line_graph([300.0, 200.0])
    assert goal_distance((0, 1, 2), g) == 500.0
    assert goal_distance((1, 2), g) == 200.0
    hz = HazardState(0, 1.0, 1.0, {0: 0.0, 1: 1e6, 2: 1e6})
    assert goal_distance((0, 1), g, hz, t=2.0) == 900.0


def test_distance_goal_matches_dijkstra_cost():
    rng = random.Random(7)
    for _ in range(60):
        g = random_graph(rng)
        for src in range(g.n_nodes):
            p = shortest_path(g, src)
            assert goal_distance(p.nodes, g) == p.cost


def test_evaluate_dispatch_and_blocking():
    g = line_graph([100.0, 100.0])
    readings = quiet(3)
    assert evaluate("distance", (0, 1, 2), g, readings, NORMAL) == 200.0
    assert evaluate("time", (0, 1, 2), g, readings, NORMAL) == goal_time((0, 1, 2), g, readings, NORMAL)
    hot = [SensorReading(0), SensorReading(1, hazard_intensity=11.0), SensorReading(2)]
    hz = HazardState(1, 1.0, 1.0, {0: 1e6, 1: 0.0, 2: 1e6})
    assert math.isinf(evaluate("safety", (0, 1, 2), g, hot, SICK, hz, 11.0))
    with pytest.raises(ValueError):
        evaluate("comfort", (0, 1), g, readings, NORMAL)


def test_class_validation():
    with pytest.raises(ValueError):
        EvacueeClass("x", 0.0)
    with pytest.raises(ValueError):
        EvacueeClass("x", 1.0, "time", c_b=-1)
    with pytest.raises(ValueError):
        EvacueeClass("x", 1.0, "fun")
    assert INF > 0
