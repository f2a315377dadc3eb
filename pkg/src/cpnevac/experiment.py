"""Replicated experiments: population x mode grids, movement-depth sweeps and CSV emitters."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path as FsPath
from typing import Iterable, Sequence

from .scenario import Scenario, demo_text, load_scenario
from .sim import MODES, OscillationPolicy, SimConfig, SimResult, Simulation

log = logging.getLogger(__name__)

DEFAULT_POPULATIONS = (30, 60, 90, 120)
DEFAULT_MODES = ("dijkstra", "cpn-sp", "cpn-st")
METRICS = ("survivors", "evac_time", "congestion")


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: str | None = None  # path to a scenario file; None means the bundled demo
    populations: tuple[int, ...] = DEFAULT_POPULATIONS
    modes: tuple[str, ...] = DEFAULT_MODES
    replications: int = 10
    seed: int = 0
    seeds: tuple[int, ...] | None = None
    movement_depth: int = 3
    switch_prob: float | None = None
    hazard_check_period: float | None = None
    out: str | None = None
    event_log: bool = False

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.populations:
            raise ValueError("populations must not be empty")
        if min(self.populations) < 1:
            raise ValueError("populations must be positive")
        for m in self.modes:
            if m not in MODES:
                raise ValueError(f"unknown routing mode {m!r}; choose from {sorted(MODES)}")
        if self.seeds is not None and len(self.seeds) != self.replications:
            raise ValueError("need one seed per replication")

    def seed_list(self) -> tuple[int, ...]:
        if self.seeds is not None:
            return tuple(self.seeds)
        return tuple(self.seed + r for r in range(self.replications))

    def policy(self, movement_depth: int | None = None) -> OscillationPolicy:
        kw = {"movement_depth": movement_depth or self.movement_depth}
        if self.switch_prob is not None:
            kw["switch_prob"] = self.switch_prob
        if self.hazard_check_period is not None:
            kw["hazard_check_period"] = self.hazard_check_period
        return OscillationPolicy(**kw)


def scenario_text(spec: ExperimentSpec) -> str:
    if spec.scenario is None:
        return demo_text()
    return FsPath(spec.scenario).read_text(encoding="utf-8")


def blob_hash(data: bytes) -> str:
    """Content hash in git's blob format, so ``git hash-object`` agrees."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def describe(values: Sequence[float]) -> dict[str, float]:
    vals = [v for v in values if not math.isnan(v)]
    if not vals:
        return {"mean": math.nan, "std": math.nan, "min": math.nan, "max": math.nan}
    return {
        "mean": statistics.fmean(vals),
        "std": statistics.stdev(vals) if len(vals) > 1 else 0.0,
        "min": min(vals),
        "max": max(vals),
    }


def metric(result: SimResult, name: str) -> float:
    if name == "survivors":
        return float(result.survivors)
    if name == "evac_time":
        return result.mean_egress
    if name == "congestion":
        return float(result.congestion_events)
    raise KeyError(name)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    scenario: Scenario
    scenario_hash: str
    runs: dict[tuple[int, str], list[SimResult]] = field(default_factory=dict)

    def summary_rows(self) -> list[dict]:
        rows = []
        for (pop, mode), results in self.runs.items():
            row = {"population": pop, "mode": mode, "replications": len(results)}
            for name in METRICS:
                for stat, v in describe([metric(r, name) for r in results]).items():
                    row[f"{name}_{stat}"] = v
            rows.append(row)
        return rows

    def congestion_table(self) -> list[dict]:
        """One row per population, one mean-congestion column per mode."""
        table = []
        for pop in self.spec.populations:
            row = {"population": pop}
            for mode in self.spec.modes:
                row[mode] = statistics.fmean(r.congestion_events for r in self.runs[pop, mode])
            table.append(row)
        return table

    def run_rows(self) -> list[dict]:
        rows = []
        for results in self.runs.values():
            rows.extend(r.summary_row() for r in results)
        return rows


def run_experiment(spec: ExperimentSpec, config: SimConfig | None = None) -> ExperimentResult:
    """Run every population x mode cell for every seed and write outputs if ``spec.out`` is set.

    Raises :class:`~cpnevac.graph.ScenarioError` (or ``OSError``) when the
    scenario cannot be loaded.
    """
    text = scenario_text(spec)
    scenario = load_scenario(text)
    result = ExperimentResult(spec, scenario, blob_hash(text.encode("utf-8")))
    policy = spec.policy()
    out = FsPath(spec.out) if spec.out else None
    if out is not None and spec.event_log:
        (out / "events").mkdir(parents=True, exist_ok=True)
    for pop in spec.populations:
        for mode in spec.modes:
            cell = []
            for seed in spec.seed_list():
                sim = Simulation(scenario, mode, pop, seed, policy, config, record_events=spec.event_log)
                res = sim.run()
                if out is not None and spec.event_log:
                    (out / "events" / f"{mode}_p{pop}_s{seed}.csv").write_text(res.event_log())
                    res.events = None
                cell.append(res)
            result.runs[pop, mode] = cell
            log.info("population %d %s: mean congestion %.1f", pop, mode, statistics.fmean(r.congestion_events for r in cell))
    if out is not None:
        write_outputs(result, out)
    return result


def movement_depth_sweep(
    spec: ExperimentSpec,
    depths: Iterable[int] = range(1, 11),
    mode: str = "cpn-st",
    population: int = 120,
    config: SimConfig | None = None,
) -> list[dict]:
    """Mean/std survivors per movement depth; the best depth (smallest on ties) is flagged."""
    scenario = load_scenario(scenario_text(spec))
    rows = []
    for depth in depths:
        policy = spec.policy(depth)
        survivors = [
            Simulation(scenario, mode, population, seed, policy, config).run().survivors for seed in spec.seed_list()
        ]
        row = {"movement_depth": depth, "mode": mode, "population": population}
        row.update({f"survivors_{k}": v for k, v in describe(survivors).items()})
        rows.append(row)
    best = max(rows, key=lambda r: (r["survivors_mean"], -r["movement_depth"]))
    for row in rows:
        row["argmax"] = int(row is best)
    return rows


def emit_edge_visits(scenario: Scenario, results: dict[str, Sequence[SimResult]]) -> list[dict]:
    """Total visits per edge per mode, summed over the given runs."""
    rows = []
    for mode, runs in results.items():
        for k, edge in enumerate(scenario.graph.edges):
            rows.append({"mode": mode, "src": edge.src, "dst": edge.dst, "visit_count": sum(r.edge_visits[k] for r in runs)})
    return rows


def emit_exit_shares(scenario: Scenario, results: dict[str, Sequence[SimResult]]) -> list[dict]:
    """Per-mode fraction of exited evacuees leaving by each exit, pooled over runs."""
    exits = scenario.graph.exits
    if len(exits) < 2:
        log.warning("scenario has a single exit; exit shares are trivially 1.0")
    names = {e: scenario.graph.nodes[e].name or str(e) for e in exits}
    rows = []
    for mode, runs in results.items():
        counts = {e: sum(r.exit_counts.get(e, 0) for r in runs) for e in exits}
        total = sum(counts.values())
        for e in exits:
            share = counts[e] / total if total else 0.0
            rows.append({"mode": mode, "exit": e, "name": names[e], "exited": counts[e], "share": share})
    return rows


def to_csv(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def manifest(result: ExperimentResult, extra: dict | None = None) -> dict:
    spec = asdict(result.spec)
    spec["seeds"] = list(result.spec.seed_list())
    doc = {"spec": spec, "scenario_sha1": result.scenario_hash, "scenario_name": result.scenario.name}
    if extra:
        doc.update(extra)
    return doc


def write_outputs(result: ExperimentResult, out: FsPath) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.csv").write_text(to_csv(result.summary_rows()))
    (out / "congestion_table.csv").write_text(to_csv(result.congestion_table()))
    (out / "runs.csv").write_text(to_csv(result.run_rows()))
    top = max(result.spec.populations)
    by_mode = {mode: result.runs[top, mode] for mode in result.spec.modes}
    (out / "edge_visits.csv").write_text(to_csv(emit_edge_visits(result.scenario, by_mode)))
    (out / "exit_shares.csv").write_text(to_csv(emit_exit_shares(result.scenario, by_mode)))
    (out / "manifest.json").write_text(json.dumps(manifest(result), indent=1, sort_keys=True) + "\n")
