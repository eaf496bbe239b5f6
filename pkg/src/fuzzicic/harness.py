"""Monte Carlo driver: world construction, the per-slot loop, campaigns and outputs."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .benchmarks import AbsAgent, MaxPowerAgent
from .channel import PathLossParams, realize_channel
from .config import SystemParams
from .icic import (CellAgent, CellObservations, ComplexityCounters, FuzzyAgent, SlotMeasurement,
                   rulebase_for)
from .link_metrics import McsTable, SlotMetrics, default_mcs_table, slot_metrics
from .optimality import GreedySinrAgent, OptInstance
from .scenario import Scenario, UserDemand, generate

log = logging.getLogger(__name__)

POLICIES = ("fuzzy", "fuzzy-la", "maxpower", "abs", "greedy")
BENCHMARKS = ("maxpower", "abs")
METRIC_COLUMNS = ("slot", "policy", "mean_throughput_bps", "mean_energy_eff_bits_per_joule",
                  "availability", "fairness")
TRACE_COLUMNS = ("slot", "cell", "ms", "rb", "power_level", "mcs", "alloc_score")


def make_agent(policy: str, cell: int, demands: list[UserDemand], obs: CellObservations,
               params: SystemParams, table: McsTable, counters: ComplexityCounters,
               rulebase=None) -> CellAgent:
    common = dict(cell=cell, demands=demands, obs=obs, params=params, table=table,
                  counters=counters)
    if policy == "fuzzy":
        return FuzzyAgent(**common, rulebase=rulebase)
    if policy == "fuzzy-la":
        return FuzzyAgent(**common, link_adaptation=True, rulebase=rulebase)
    if policy == "maxpower":
        return MaxPowerAgent(**common)
    if policy == "abs":
        return AbsAgent(**common, blank_prob=params.abs_prob)
    if policy == "greedy":
        return GreedySinrAgent(**common)
    raise ValueError(f"unknown policy {policy!r}; choose from {POLICIES}")


@dataclass
class World:
    """Frozen link gains plus one decision agent per cell.

    ``gain[j, u, m]`` couples FBS ``j`` and MS ``u`` on RB ``m``; the same
    gain is used in both directions.
    """

    gain: np.ndarray           # (J, U, M)
    large_scale: np.ndarray    # (J, U)
    serving: np.ndarray        # (U,)
    demands: list[UserDemand]
    params: SystemParams
    policy: str
    table: McsTable = field(default_factory=default_mcs_table)
    rulebase: object = None

    def __post_init__(self):
        self.serving = np.asarray(self.serving, dtype=int)
        J, U, M = self.gain.shape
        if M != self.params.n_rb:
            raise ValueError("gain tensor RB axis does not match params.n_rb")
        self.counters = ComplexityCounters()
        self.members = [np.flatnonzero(self.serving == j) for j in range(J)]
        users = np.arange(U)
        own = self.gain[self.serving, users, :]
        own_ls = self.large_scale[self.serving, users]
        p = self.params
        self.agents: list[CellAgent] = []
        for j, idx in enumerate(self.members):
            if len(idx) == 0:
                continue
            dem = [self.demands[u] for u in idx]
            n = np.array([d.n_rb for d in dem])
            target = self.table.min_sinr_db[[d.mcs for d in dem]]
            obs = CellObservations.initial(p.p_max_w / n * own_ls[idx], own[idx] / own_ls[idx, None],
                                           target)
            self.agents.append(make_agent(self.policy, j, dem, obs, p, self.table, self.counters,
                                          self.rulebase))
        self.slot = 0

    @property
    def n_users(self) -> int:
        return len(self.serving)


def build_world(scenario: Scenario, channel_rng: np.random.Generator, policy: str,
                table: McsTable | None = None, rulebase=None) -> World:
    p = scenario.params
    ch = realize_channel(channel_rng, scenario.fbs_pos, scenario.ms_pos, p.n_rb, scenario.extent,
                         pathloss=PathLossParams(p.alpha, p.beta), shadow_sigma=p.shadow_sigma,
                         shadow_corr=p.shadow_corr, shadow_resolution=p.shadow_resolution,
                         n_taps=p.n_taps, delay_spread=p.delay_spread, rb_bandwidth=p.rb_bandwidth,
                         min_distance=p.min_distance)
    return World(ch.gain, ch.large_scale, np.asarray(scenario.serving), scenario.demands, p, policy,
                 table or default_mcs_table(), rulebase)


def interference(world: World, p_ms: np.ndarray) -> np.ndarray:
    """Per-MS, per-RB interference power (W) from all other cells."""
    G = world.gain
    J, U, M = G.shape
    serving = world.serving
    if world.params.direction == "downlink":
        p_tx = np.zeros((J, M))
        np.add.at(p_tx, serving, p_ms)
        contrib = p_tx[:, None, :] * G
        contrib[serving, np.arange(U)] = 0.0
        return contrib.sum(axis=0)
    # uplink: the receiver is the serving FBS, interferers are other cells' MSs
    foreign = serving[None, :] != np.arange(J)[:, None]
    at_fbs = np.einsum("jim,ji->jm", p_ms[None, :, :] * G, foreign.astype(float))
    return at_fbs[serving]


def average_sinr(sinr: np.ndarray, used: np.ndarray) -> np.ndarray:
    """Linear mean SINR over the RBs each MS transmitted on; NaN if none."""
    n = used.sum(axis=1)
    total = np.where(used, sinr, 0.0).sum(axis=1)
    return np.where(n > 0, total / np.maximum(n, 1), np.nan)


def run_slot(world: World, rng: np.random.Generator, trace: list | None = None) -> SlotMetrics:
    """Decide, propagate, measure, update observations, adapt links."""
    p = world.params
    U, M = world.n_users, p.n_rb
    users = np.arange(U)
    noise_w = p.noise.watts

    # (1) decisions from last-slot observations
    decisions = [(agent, agent.decide(rng)) for agent in world.agents]
    p_ms = np.zeros((U, M))
    allocated = np.zeros((U, M), dtype=bool)
    mcs = np.zeros(U, dtype=int)
    for agent, allocs in decisions:
        idx = world.members[agent.cell]
        for local, a in enumerate(allocs):
            u = idx[local]
            p_ms[u, a.rbs] = a.power_w
            allocated[u, a.rbs] = True
            mcs[u] = a.mcs
            if trace is not None:
                for k, m in enumerate(a.rbs):
                    trace.append((world.slot + 1, agent.cell, int(u), int(m),
                                  "Max" if a.full_power[k] else "Half", a.mcs,
                                  None if a.scores is None else float(a.scores[k])))

    # (2) cross-cell interference, (3) SINR and throughput
    own_gain = world.gain[world.serving, users, :]
    interf = interference(world, p_ms)
    sinr = p_ms * own_gain / (interf + noise_w)
    target = world.table.min_sinr_db[mcs]
    ok = allocated & (p_ms > 0) & (10.0 * np.log10(np.maximum(sinr, 1e-300)) >= target[:, None])
    n_ok = ok.sum(axis=1)
    throughput = n_ok * p.rb_rate_unit * world.table.efficiency[mcs]
    desired = np.array([d.rate for d in world.demands])
    metrics = slot_metrics(throughput, desired, p_ms.sum(axis=1), n_ok)

    # (4) observation update, (5) link adaptation
    ls = world.large_scale[world.serving, users]
    for agent, _ in decisions:
        idx = world.members[agent.cell]
        tx = (allocated[idx] & (p_ms[idx] > 0))
        n_tx = tx.sum(axis=1)
        mean_sinr = average_sinr(sinr[idx], tx)
        nominal = np.where(n_tx > 0, p.p_max_w / agent.n_rb * ls[idx], np.nan)
        meas = SlotMeasurement(interf[idx], own_gain[idx] / ls[idx, None], nominal, mean_sinr)
        agent.observe(meas, throughput[idx])
        agent.adapt_links()
    world.slot += 1
    return metrics


def instance_world(inst: OptInstance, policy: str) -> World:
    """World for a desk-scale instance: MS ``u`` is served by FBS ``u``."""
    return World(inst.gain, inst.large_scale, np.arange(inst.n_cells), inst.demands(), inst.params,
                 policy, inst.table)


def run_instance(inst: OptInstance, policy: str, seed: int, slots: int = 25) -> list[SlotMetrics]:
    """Per-slot metrics of ``policy`` on a desk-scale instance."""
    world = instance_world(inst, policy)
    rng = np.random.default_rng(seed)
    return [run_slot(world, rng) for _ in range(slots)]


# --- campaigns ----------------------------------------------------------------------

@dataclass
class RunConfig:
    params: SystemParams = field(default_factory=SystemParams)
    policies: tuple[str, ...] = ("fuzzy-la", "maxpower", "abs")
    n_scenarios: int = 2000
    seed: int = 42
    workers: int = 1
    trace: bool = False

    def __post_init__(self):
        if self.n_scenarios < 1:
            raise ValueError("n_scenarios must be >= 1")
        for pol in self.policies:
            if pol not in POLICIES:
                raise ValueError(f"unknown policy {pol!r}; choose from {POLICIES}")


@dataclass
class ScenarioRecord:
    """Per-slot metrics of one scenario under one policy."""

    index: int
    seed: int
    policy: str
    throughput: np.ndarray       # (z,) system throughput
    efficiency: np.ndarray       # (z,) mean user efficiency
    availability: np.ndarray     # (z,)
    fairness: np.ndarray         # (z,)
    n_users: int
    fuzzy_evals: int = 0
    heuristic_evals: int = 0
    trace: list = field(default_factory=list)


@dataclass
class RunResults:
    config: RunConfig
    records: list[ScenarioRecord]

    def by_policy(self, policy: str) -> list[ScenarioRecord]:
        return [r for r in self.records if r.policy == policy]

    def mean_curves(self, policy: str) -> dict[str, np.ndarray]:
        recs = self.by_policy(policy)
        if not recs:
            raise KeyError(policy)
        return {k: np.mean([getattr(r, k) for r in recs], axis=0)
                for k in ("throughput", "efficiency", "availability", "fairness")}

    def final(self, policy: str) -> dict[str, float]:
        return {k: float(v[-1]) for k, v in self.mean_curves(policy).items()}

    def gains(self, policy: str, reference: str) -> dict[str, float]:
        """Relative final-slot gains in percent."""
        a, b = self.final(policy), self.final(reference)
        return {k: (100.0 * (a[k] - b[k]) / b[k]) if b[k] else float("nan") for k in a}


def scenario_seeds(master: int, index: int) -> tuple[int, np.random.SeedSequence,
                                                      np.random.SeedSequence]:
    """(layout seed, channel stream, policy stream) of scenario ``index``."""
    base = np.random.SeedSequence([int(master), int(index)])
    layout, channel, policy = base.spawn(3)
    return int(layout.generate_state(1)[0]), channel, policy


def run_scenario(params: SystemParams, policies: Sequence[str], master: int, index: int,
                 trace: bool = False) -> list[ScenarioRecord]:
    layout_seed, ch_seq, pol_seq = scenario_seeds(master, index)
    scen = generate(params, layout_seed)
    rulebase = rulebase_for(params)
    out = []
    for policy in policies:
        # common random numbers: every policy sees the same layout and channel
        world = build_world(scen, np.random.default_rng(ch_seq), policy, rulebase=rulebase)
        rng = np.random.default_rng(pol_seq)
        rows: list = [] if trace else None
        m = [run_slot(world, rng, rows) for _ in range(params.n_slots)]
        out.append(ScenarioRecord(
            index, layout_seed, policy,
            np.array([x.system_throughput for x in m]),
            np.array([x.mean_efficiency for x in m]),
            np.array([x.availability for x in m]),
            np.array([x.fairness for x in m]),
            world.n_users, world.counters.fuzzy_evals, world.counters.heuristic_evals,
            rows or []))
    return out


def _run_chunk(args):
    params, policies, master, indices, trace = args
    return [rec for i in indices for rec in run_scenario(params, policies, master, i, trace)]


def run_campaign(cfg: RunConfig) -> RunResults:
    indices = list(range(cfg.n_scenarios))
    if cfg.workers <= 1:
        records = _run_chunk((cfg.params, cfg.policies, cfg.seed, indices, cfg.trace))
    else:
        chunks = [indices[k::cfg.workers] for k in range(cfg.workers)]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_run_chunk, [(cfg.params, cfg.policies, cfg.seed, c, cfg.trace)
                                               for c in chunks if c]))
        records = [r for part in parts for r in part]
    # ordered reduction: results never depend on which worker ran what
    order = {p: k for k, p in enumerate(cfg.policies)}
    records.sort(key=lambda r: (r.index, order[r.policy]))
    return RunResults(cfg, records)


# --- outputs --------------------------------------------------------------------------

def metrics_csv(results: RunResults) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_COLUMNS)
    for policy in results.config.policies:
        c = results.mean_curves(policy)
        for s in range(len(c["throughput"])):
            w.writerow([s + 1, policy, repr(float(c["throughput"][s])),
                        repr(float(c["efficiency"][s])), repr(float(c["availability"][s])),
                        repr(float(c["fairness"][s]))])
    return buf.getvalue()


def summary(results: RunResults) -> dict:
    pols = results.config.policies
    out = {
        "n_scenarios": results.config.n_scenarios,
        "seed": results.config.seed,
        "slots": results.config.params.n_slots,
        "final": {p: results.final(p) for p in pols},
        "gains_percent": {},
    }
    for p in pols:
        for ref in BENCHMARKS:
            if ref in pols and p != ref and p not in BENCHMARKS:
                out["gains_percent"][f"{p}_vs_{ref}"] = results.gains(p, ref)
    return out


def trace_csv(results: RunResults) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("scenario", "policy") + TRACE_COLUMNS)
    for r in results.records:
        for row in r.trace:
            w.writerow((r.index, r.policy) + tuple("" if v is None else v for v in row))
    return buf.getvalue()


def write_outputs(results: RunResults, out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {"metrics": out_dir / "metrics_per_slot.csv", "summary": out_dir / "summary.json"}
        paths["metrics"].write_text(metrics_csv(results))
        paths["summary"].write_text(json.dumps(summary(results), indent=2, sort_keys=True) + "\n")
        if results.config.trace:
            paths["trace"] = out_dir / "trace.csv"
            paths["trace"].write_text(trace_csv(results))
    except OSError as exc:
        raise OSError(f"cannot write results to {out_dir}: {exc}") from exc
    return paths
