# %% [markdown]
# # Goal functions on one route
#
# The same route scored under the four goals, with a queue forming halfway.

# %%
from cpnevac import demo_scenario, predict_congestion, shortest_path
from cpnevac.goals import NORMAL, SICK, WHEELCHAIR, evaluate
from cpnevac.hazard import SensorReading

sc = demo_scenario()
g = sc.graph
room = next(n.id for n in g.nodes if n.name == "F1R1")
route = shortest_path(g, room).nodes
print([g.nodes[k].name for k in route])

# %% [markdown]
# An empty building, then the same route with five people waiting at the
# stair landing and arrivals outpacing departures there.

# %%
quiet = [SensorReading(k) for k in range(g.n_nodes)]
busy = list(quiet)
landing = next(k for k in route if g.nodes[k].name.startswith("STAIR"))
busy[landing] = SensorReading(landing, 5.0, 0.5, 0.2)

for label, readings in (("quiet", quiet), ("busy", busy)):
    fc = predict_congestion(route, g, readings, NORMAL)
    print(label, "forecast congestion", fc.congestion, "time", round(fc.total_time, 1))

# %% [markdown]
# Each class minimises its own goal. The energy goal adds brake events and
# turning on top of distance; safety adds hazard exposure along the way.

# %%
for cls in (NORMAL, WHEELCHAIR, SICK):
    for goal in ("distance", "time", "energy", "safety"):
        v = evaluate(goal, route, g, busy, cls, sc.hazard, t=30.0)
        print(f"{cls.name:10s} {goal:8s} {v:10.2f}")
