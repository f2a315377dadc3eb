"""``python -m cpnevac``: run evacuation experiments and write CSV tables."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .experiment import ExperimentSpec, blob_hash, movement_depth_sweep, run_experiment, scenario_text, to_csv
from .graph import ScenarioError
from .sim import MODES


def int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def depth_range(text: str) -> tuple[int, ...]:
    """``1..10`` (inclusive) or a comma list."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return int_list(text)


def mode_list(text: str) -> tuple[str, ...]:
    modes = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in modes if m not in MODES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown mode(s) {', '.join(bad)}; choose from {', '.join(MODES)}")
    return modes


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cpnevac", description="Building evacuation routing experiments.")
    p.add_argument("--scenario", help="scenario JSON (default: bundled demo building)")
    p.add_argument("--modes", type=mode_list, default=("dijkstra", "cpn-sp", "cpn-st"))
    p.add_argument("--populations", type=int_list, default=(30, 60, 90, 120))
    p.add_argument("--replications", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="base seed; replication r uses seed + r")
    p.add_argument("--movement-depth", type=int, default=3)
    p.add_argument("--switch-prob", type=float)
    p.add_argument("--hazard-check-period", type=float)
    p.add_argument("--sweep-depth", type=depth_range, help="run a movement-depth sweep instead, e.g. 1..10")
    p.add_argument("--sweep-mode", default="cpn-st", choices=sorted(MODES))
    p.add_argument("--sweep-population", type=int, default=120)
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--event-log", action="store_true", help="write one event CSV per run")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        spec = ExperimentSpec(
            scenario=args.scenario,
            populations=args.populations,
            modes=args.modes,
            replications=args.replications,
            seed=args.seed,
            movement_depth=args.movement_depth,
            switch_prob=args.switch_prob,
            hazard_check_period=args.hazard_check_period,
            out=args.out,
            event_log=args.event_log,
        )
    except ValueError as exc:
        print(f"cpnevac: {exc}", file=sys.stderr)
        return 2
    try:
        if args.sweep_depth:
            rows = movement_depth_sweep(spec, args.sweep_depth, args.sweep_mode, args.sweep_population)
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / "depth_sweep.csv").write_text(to_csv(rows))
            text = scenario_text(spec)
            meta = {"scenario_sha1": blob_hash(text.encode("utf-8")), "depths": list(args.sweep_depth),
                    "mode": args.sweep_mode, "population": args.sweep_population, "seeds": list(spec.seed_list())}
            (out / "depth_sweep_manifest.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
            best = next(r for r in rows if r["argmax"])
            print(f"best movement depth {best['movement_depth']} ({best['survivors_mean']:.1f} survivors)")
        else:
            result = run_experiment(spec)
            for row in result.congestion_table():
                cells = "  ".join(f"{m}={row[m]:.1f}" for m in spec.modes)
                print(f"population {row['population']}: {cells}")
    except (ScenarioError, OSError) as exc:
        print(f"cpnevac: cannot load scenario: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
