# %% [markdown]
# # Comparing routing modes
#
# A small version of the full study: three routing modes, 120 evacuees,
# a handful of seeds. The command-line harness runs the full grid:
#
#     python -m cpnevac --populations 30,60,90,120 --replications 10 --out results

# %%
import statistics

from cpnevac import demo_scenario, run

sc = demo_scenario()
seeds = range(5)
results = {m: [run(sc, m, seed=s, population=120) for s in seeds] for m in ("dijkstra", "cpn-sp", "cpn-st")}

for mode, rs in results.items():
    print(
        f"{mode:9s} survivors {statistics.fmean(r.survivors for r in rs):6.1f}"
        f"  congestion {statistics.fmean(r.congestion_events for r in rs):6.1f}"
        f"  mean egress {statistics.fmean(r.mean_egress for r in rs):5.1f} s"
    )

# %% [markdown]
# Exit shares: the time goal sends more people to the secondary exit when the
# main one queues up.

# %%
west = next(e for e in sc.graph.exits if sc.graph.nodes[e].name == "EXIT_WEST")
for mode, rs in results.items():
    print(mode, round(statistics.fmean(r.exit_shares[west] for r in rs), 3))

# %% [markdown]
# Busiest edges under each mode, the data behind an edge-visit heat map.

# %%
names = {n.id: n.name for n in sc.graph.nodes}
for mode, rs in results.items():
    visits = [sum(r.edge_visits[k] for r in rs) for k in range(len(sc.graph.edges))]
    top = sorted(range(len(visits)), key=lambda k: -visits[k])[:5]
    print(mode, [(names[sc.graph.edges[k].src], names[sc.graph.edges[k].dst], visits[k]) for k in top])
