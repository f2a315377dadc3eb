# %% [markdown]
# # Smart packets learning routes
#
# Launch batches of smart packets from one room in a fire-free building and
# follow how the best route in its routing list approaches the shortest path.

# %%
import random

from cpnevac import CpnEngine, demo_scenario, shortest_path
from cpnevac.cpn import quiet_readings

g = demo_scenario().graph
origin = next(n.id for n in g.nodes if n.name == "F2R4")
optimum = shortest_path(g, origin).cost
engine = CpnEngine(g, ("distance",), rng=random.Random(0))
readings = quiet_readings(g.n_nodes)

for batch in range(10):
    engine.launch_smart_packets(origin, "distance", 100, readings)
    best = engine.best_route(origin, "distance")
    print(f"{(batch + 1) * 100:5d} packets  best {best.cost:7.0f} cm  ratio {best.cost / optimum:.3f}")

# %% [markdown]
# The routing list at the origin, best first, and the packet bookkeeping.

# %%
for entry in engine.states[origin].routes["distance"].entries:
    print(round(entry.value), [g.nodes[k].name for k in entry.path])
print(dict(engine.diagnostics))
