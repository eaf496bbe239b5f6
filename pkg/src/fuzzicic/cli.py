"""Command line: ``simulate``, ``optcompare`` and ``stats``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import SystemParams
from .harness import BENCHMARKS, POLICIES, RunConfig, run_campaign, run_instance, scenario_seeds, write_outputs
from .optimality import ENUM_BUDGET, exhaustive_optimum, make_instance
from .scenario import generate
from .signal_stats import LEVEL_ANCHOR_PS, RATE_ANCHOR_PS, membership_anchors, signal_densities

log = logging.getLogger("fuzzicic")


def _params(args) -> SystemParams:
    params = SystemParams.from_json(args.config) if args.config else SystemParams()
    if getattr(args, "slots", None):
        params = params.replace(n_slots=args.slots)
    return params


def cmd_simulate(args) -> int:
    params = _params(args)
    policies = list(dict.fromkeys(args.policy or ["fuzzy-la"]))
    if not args.no_benchmarks:
        policies += [b for b in BENCHMARKS if b not in policies]
    cfg = RunConfig(params, tuple(policies), args.scenarios, args.seed, args.workers, args.trace)
    out = Path(args.out)
    if args.dump_scenario:
        scen_dir = out / "scenarios"
        scen_dir.mkdir(parents=True, exist_ok=True)
        for i in range(cfg.n_scenarios):
            layout_seed, _, _ = scenario_seeds(cfg.seed, i)
            (scen_dir / f"scenario_{i:05d}.json").write_text(generate(params, layout_seed).to_json())
    results = run_campaign(cfg)
    paths = write_outputs(results, out)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def cmd_optcompare(args) -> int:
    params = _params(args)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("run", "optimal", "fuzzy", "greedy"))
    for k in range(args.runs):
        rng = np.random.default_rng([args.seed, k])
        inst = make_instance(rng, args.cells, args.rbs, args.max_rbs, params, ENUM_BUDGET)
        opt = exhaustive_optimum(inst).c_sys
        row = [k, repr(opt)]
        for policy in ("fuzzy", "greedy"):
            m = run_instance(inst, policy, int(rng.integers(2**32)), params.n_slots)
            row.append(repr(m[-1].system_throughput))
        w.writerow(row)
    return 0


def cmd_stats(args) -> int:
    params = _params(args)
    dens = signal_densities(params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("pathloss_desired", "pathloss_interf", "desired", "interf"):
        d = dens[name]
        c = d.cdf()
        with open(out / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("value", "pdf", "cdf"))
            for x, f, F in zip(d.x, d.values, c.values):
                w.writerow((f"{x:.1f}", repr(float(f)), repr(float(F))))
    with open(out / "txpower.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("value", "pmf", "cdf"))
        total = 0.0
        for watts, mass in sorted(dens["txpower"].atoms):
            total += mass
            w.writerow((repr(float(watts)), repr(float(mass)), repr(total)))
    a = membership_anchors(params)
    anchors = {
        "level_percentiles": list(LEVEL_ANCHOR_PS),
        "rate_percentiles": list(RATE_ANCHOR_PS),
        "signal_dbm": list(a.signal_dbm),
        "interference_dbm": list(a.interference_dbm),
        "rate_bps": list(a.rate_bps),
    }
    (out / "anchors.json").write_text(json.dumps(anchors, indent=2) + "\n")
    print(json.dumps(anchors, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fuzzicic", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo campaign over random deployments")
    sim.add_argument("--config", help="JSON file of SystemParams overrides")
    sim.add_argument("--policy", action="append", choices=POLICIES,
                     help="policy to run (repeatable; default fuzzy-la)")
    sim.add_argument("--no-benchmarks", action="store_true",
                     help="do not add the max-power and ABS benchmarks")
    sim.add_argument("--scenarios", type=int, default=200)
    sim.add_argument("--slots", type=int)
    sim.add_argument("--seed", type=int, default=42)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--out", default="results")
    sim.add_argument("--trace", action="store_true", help="write per-slot decisions to trace.csv")
    sim.add_argument("--dump-scenario", action="store_true",
                     help="write each generated scenario as JSON under OUT/scenarios/")
    sim.set_defaults(func=cmd_simulate)

    opt = sub.add_parser("optcompare", help="exhaustive optimum vs fuzzy vs greedy on small instances")
    opt.add_argument("--config")
    opt.add_argument("--cells", type=int, default=3)
    opt.add_argument("--rbs", type=int, default=8)
    opt.add_argument("--max-rbs", type=int, default=4)
    opt.add_argument("--runs", type=int, default=50)
    opt.add_argument("--slots", type=int)
    opt.add_argument("--seed", type=int, default=0)
    opt.set_defaults(func=cmd_optcompare)

    st = sub.add_parser("stats", help="analytical signal distributions and membership anchors")
    st.add_argument("--config")
    st.add_argument("--out", default="stats")
    st.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
