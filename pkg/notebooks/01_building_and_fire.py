# %% [markdown]
# # The demo building and its fire
#
# Load the bundled three-floor building, list its exits and staircases, and
# watch the fire's reach time grow with distance from the source.

# %%
from cpnevac import compute_reach_times, demo_scenario, shortest_path

sc = demo_scenario()
g = sc.graph
print(sc.name, sc.header)
print("exits:", [g.nodes[e].name for e in g.exits])

# %% [markdown]
# Nodes per floor. Floor 0 holds both exits; the staircases connect floors
# through landing nodes.

# %%
from collections import Counter

print(Counter(n.floor for n in g.nodes))
print([n.name for n in g.nodes if n.name.startswith("STAIR")])

# %% [markdown]
# Reach time of the fire at every named ground-floor node. Spread is along
# corridors, so a node behind a wall is reached later than its straight-line
# distance suggests.

# %%
hz = sc.hazard
src = g.nodes[hz.source].name
print(f"fire starts at {src}: spread {hz.spread_rate} cm/s, growth {hz.growth_rate}/s")
reach = compute_reach_times(g, hz.source, hz.spread_rate)
for n in g.nodes:
    if n.floor == 0:
        print(f"{n.name:10s} {reach[n.id]:7.1f} s")

# %% [markdown]
# The Dijkstra baseline: the shortest effective route from a second-floor
# room, before the fire and a minute into it.

# %%
room = next(n.id for n in g.nodes if n.name == "F2R7")
for t in (0.0, 60.0):
    p = shortest_path(g, room, hz, t)
    print(t, [g.nodes[k].name for k in p.nodes], round(p.cost))
