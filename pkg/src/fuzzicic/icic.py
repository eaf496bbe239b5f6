"""Fuzzy-logic inter-cell interference coordination.

Each cell keeps exponentially averaged observations of interference,
fading, desired signal and SINR for its own users, scores every RB with the
fuzzy rulebase, picks RBs and power levels, and optionally adapts the MCS.
No state is shared between cells.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import SystemParams
from .fuzzy_core import (Antecedent, LinguisticVariable, MembershipFunction, Rule, RuleBase,
                         load_rulebase)
from .link_metrics import McsTable, db, default_mcs_table, w_to_dbm
from .scenario import UserDemand, n_rb_for
from .signal_stats import MembershipAnchors, membership_anchors

log = logging.getLogger(__name__)

FUZZY_INPUTS = ("rate", "signal", "interference", "fading")
PFS_EPS = 1.0  # bits/s, keeps the PFS weight of a starved user strictly positive

# LA bands: (lower bound exclusive, step); checked from the top
_LA_UP = ((7.0, 3), (5.0, 2), (3.0, 1))
_LA_DOWN = ((-7.0, -3), (-5.0, -2), (-3.0, -1))


# --- rulebase ------------------------------------------------------------------

def _levels(name: str, unit: str, universe, a, labels=("Low", "Medium", "High")):
    lo, mid, hi = labels
    return LinguisticVariable(name, universe, (
        (lo, MembershipFunction("left", (a[0], a[1]))),
        (mid, MembershipFunction("trapezoid", (a[0], a[1], a[2], a[3]))),
        (hi, MembershipFunction("right", (a[2], a[3]))),
    ), unit)


def table3_rulebase(anchors: MembershipAnchors, mean_rate: float = 1.25e6) -> RuleBase:
    """The nine RB-allocation rules with percentile-anchored input terms."""
    r = anchors.rate_bps
    rate = LinguisticVariable("rate", (0.0, 10.0 * mean_rate), (
        ("Low", MembershipFunction("left", (r[0], r[1]))),
        ("LowMed", MembershipFunction("trapezoid", (r[0], r[1], r[2], r[3]))),
        ("MedHigh", MembershipFunction("trapezoid", (r[2], r[3], r[4], r[5]))),
        ("High", MembershipFunction("right", (r[4], r[5]))),
    ), "bit/s")
    universe_dbm = (-200.0, 20.0)
    signal = _levels("signal", "dBm", universe_dbm, anchors.signal_dbm)
    interference = _levels("interference", "dBm", universe_dbm, anchors.interference_dbm)
    fading = LinguisticVariable("fading", (0.0, 20.0), (
        ("Deep", MembershipFunction("left", (0.25, 0.75))),
        ("Average", MembershipFunction("trapezoid", (0.25, 0.75, 1.5, 2.5))),
        ("Peak", MembershipFunction("right", (1.5, 2.5))),
    ), "|H|^2")
    low_half = MembershipFunction("trapezoid", (0.0, 0.0, 0.25, 0.75))
    high_half = MembershipFunction("trapezoid", (0.25, 0.75, 1.0, 1.0))
    allocation = LinguisticVariable("allocation", (0.0, 1.0),
                                    (("Yes", low_half), ("No", high_half)))
    power = LinguisticVariable("power", (0.0, 1.0), (("Half", low_half), ("Max", high_half)))

    A = Antecedent
    yes_half = (("allocation", "Yes"), ("power", "Half"))
    yes_max = (("allocation", "Yes"), ("power", "Max"))
    no = (("allocation", "No"),)
    rules = (
        Rule("AND", (A("signal", "Low", True), A("interference", "Low")), yes_half, "1"),
        Rule("AND", (A("rate", "Low"), A("signal", "Low", True), A("interference", "Medium"),
                     A("fading", "Deep")), yes_max, "2"),
        Rule("AND", (A("rate", "Low", True), A("interference", "High")), no, "3"),
        Rule("AND", (A("rate", "LowMed"), A("signal", "Low", True), A("interference", "Medium"),
                     A("fading", "Deep", True)), yes_max, "4"),
        Rule("AND", (A("rate", "MedHigh"), A("signal", "Low", True), A("interference", "Medium"),
                     A("fading", "Peak")), yes_max, "5"),
        Rule("OR", (A("interference", "High"), A("fading", "Deep")), no, "6"),
        Rule("AND", (A("signal", "High"), A("fading", "Deep", True)), yes_half, "7"),
        Rule("AND", (A("signal", "Low"), A("interference", "Low", True)), no, "8"),
        Rule("AND", (A("rate", "MedHigh"), A("signal", "High"), A("interference", "Medium"),
                     A("fading", "Peak")), yes_half, "9"),
    )
    inputs = {v.name: v for v in (rate, signal, interference, fading)}
    outputs = {v.name: v for v in (allocation, power)}
    return RuleBase(inputs, outputs, rules)


BUNDLED_RULEBASE = "table3_rulebase.json"


@lru_cache(maxsize=None)
def bundled_rulebase() -> RuleBase:
    with resources.as_file(resources.files("fuzzicic") / "data" / BUNDLED_RULEBASE) as p:
        return load_rulebase(Path(p))


_STAT_FIELDS = ("mean_rate", "p_max_dbm", "n_rb", "k_sc", "s_sc", "alpha", "beta", "shadow_sigma")


def rulebase_for(params: SystemParams) -> RuleBase:
    """Bundled rulebase for the default statistics, otherwise re-anchored for ``params``."""
    base = SystemParams()
    if all(getattr(params, f) == getattr(base, f) for f in _STAT_FIELDS):
        return bundled_rulebase()
    return _anchored(tuple(getattr(params, f) for f in _STAT_FIELDS))


@lru_cache(maxsize=16)
def _anchored(key) -> RuleBase:
    params = SystemParams(**dict(zip(_STAT_FIELDS, key)))
    return table3_rulebase(membership_anchors(params), params.mean_rate)


# --- observations ----------------------------------------------------------------

@dataclass(frozen=True)
class CellObservations:
    """EMA state of one cell, rows indexed by the cell's own MSs.

    ``interference_w`` holds NaN for never-observed entries.
    """

    interference_w: np.ndarray  # (n_ms, M)
    fading: np.ndarray          # (n_ms, M)
    signal_w: np.ndarray        # (n_ms,)  per-RB desired power at the Max level
    sinr: np.ndarray            # (n_ms,)  linear average SINR
    target_db: np.ndarray       # (n_ms,)

    @classmethod
    def initial(cls, signal_w, fading, target_db) -> "CellObservations":
        fading = np.array(fading, dtype=float, ndmin=2)
        target_db = np.asarray(target_db, dtype=float)
        return cls(np.full(fading.shape, np.nan), fading, np.asarray(signal_w, float),
                   10.0 ** (target_db / 10.0), target_db)

    @property
    def avg_sinr_db(self) -> np.ndarray:
        return db(self.sinr)

    def interference_filled(self, default_w: float) -> np.ndarray:
        return np.where(np.isnan(self.interference_w), default_w, self.interference_w)


@dataclass(frozen=True)
class SlotMeasurement:
    """What a cell's receivers saw in one slot; NaN marks 'not measured'."""

    interference_w: np.ndarray  # (n_ms, M)
    fading: np.ndarray          # (n_ms, M)
    signal_w: np.ndarray        # (n_ms,)
    sinr: np.ndarray            # (n_ms,)


def _ema(old, new, lam):
    old = np.asarray(old, dtype=float)
    new = np.asarray(new, dtype=float)
    out = (1.0 - lam) * old + lam * new
    out = np.where(np.isnan(old), new, out)
    return np.where(np.isnan(new), old, out)


def update_observations(obs: CellObservations, meas: SlotMeasurement,
                        lam: float = 0.5) -> CellObservations:
    """x <- (1 - lam) x + lam * measurement, in the linear power domain."""
    if not 0.0 < lam <= 1.0:
        raise ValueError("EMA weight must lie in (0, 1]")
    return replace(
        obs,
        interference_w=_ema(obs.interference_w, meas.interference_w, lam),
        fading=_ema(obs.fading, meas.fading, lam),
        signal_w=_ema(obs.signal_w, meas.signal_w, lam),
        sinr=_ema(obs.sinr, meas.sinr, lam),
    )


# --- scoring and selection --------------------------------------------------------

@dataclass
class ComplexityCounters:
    fuzzy_evals: int = 0
    heuristic_evals: int = 0
    enum_nodes: int = 0

    def add(self, other: "ComplexityCounters") -> None:
        self.fuzzy_evals += other.fuzzy_evals
        self.heuristic_evals += other.heuristic_evals
        self.enum_nodes += other.enum_nodes


def score_rbs(obs: CellObservations, rates, rulebase: RuleBase, noise_w: float,
              counters: ComplexityCounters | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(allocation score, power score), each (n_ms, M). Lower allocation is better."""
    n_ms, M = obs.fading.shape
    inputs = {
        "rate": np.asarray(rates, dtype=float).reshape(n_ms, 1),
        "signal": w_to_dbm(obs.signal_w, -200.0).reshape(n_ms, 1),
        "interference": w_to_dbm(obs.interference_filled(noise_w), -200.0),
        "fading": obs.fading,
    }
    if counters is not None:
        counters.fuzzy_evals += len(FUZZY_INPUTS) * n_ms * M
    out = rulebase.infer(inputs)
    shape = (n_ms, M)
    return (np.broadcast_to(out["allocation"], shape).copy(),
            np.broadcast_to(out["power"], shape).copy())


def select_rbs(scores, n: int, contiguous: bool = False, available=None,
               tiebreak=None) -> np.ndarray:
    """The ``n`` best (lowest-score) RBs, ordered by score, ties to the lower index.

    ``tiebreak`` is an optional secondary key (lower first), or a stack of
    keys with the most significant first, consulted before the index when
    scores are exactly equal.

    In contiguous mode the window of ``n`` free RBs with least sum-score wins
    (ties to the lower start); if no free window exists it falls back to the
    non-contiguous choice.  Fewer than ``n`` free RBs yields a short set.
    """
    scores = np.asarray(scores, dtype=float)
    free = np.ones(len(scores), bool) if available is None else np.asarray(available, bool)
    idx = np.flatnonzero(free)
    n = min(int(n), len(idx))
    if n <= 0:
        return np.zeros(0, dtype=int)
    if contiguous:
        M = len(scores)
        if n <= M:
            csum = np.concatenate([[0.0], np.cumsum(np.where(free, scores, 0.0))])
            blocked = np.concatenate([[0], np.cumsum(~free)])
            starts = np.arange(M - n + 1)
            ok = blocked[starts + n] - blocked[starts] == 0
            if ok.any():
                sums = np.where(ok, csum[starts + n] - csum[starts], np.inf)
                start = int(np.argmin(sums))
                return np.arange(start, start + n)
        log.debug("no free contiguous window of %d RBs; using best non-contiguous set", n)
    if tiebreak is None:
        order = idx[np.argsort(scores[idx], kind="stable")]
    else:
        keys = np.atleast_2d(np.asarray(tiebreak, dtype=float))
        order = idx[np.lexsort((idx,) + tuple(k[idx] for k in keys[::-1]) + (scores[idx],))]
    return order[:n]


def assign_powers(power_scores, n_rb: int, p_max_w: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-RB watts and Max-level flags: score > 0.5 gives P_max/n, else half of that."""
    if n_rb < 1:
        raise ValueError("n_rb must be >= 1")
    full = np.asarray(power_scores, dtype=float) > 0.5
    return np.where(full, p_max_w / n_rb, p_max_w / (2.0 * n_rb)), full


def la_step(delta_db: float) -> int:
    for bound, step in _LA_UP:
        if delta_db > bound:
            return step
    for bound, step in _LA_DOWN:
        if delta_db < bound:
            return step
    return 0


def link_adapt(avg_sinr_db: float, target_db: float, mcs: int, max_index: int = 15) -> int:
    """New MCS index after comparing average SINR with the MCS target."""
    return int(min(max(mcs + la_step(avg_sinr_db - target_db), 1), max_index))


def schedule_cell(alloc_scores, n_rb: Sequence[int], policy: str = "greedy", *,
                  achieved=None, desired=None, contiguous: bool = False,
                  tiebreak=None) -> list[np.ndarray]:
    """RB sets for every MS of one cell; no RB is given twice.

    greedy: MSs in index order each take their best remaining RBs.
    priority: as greedy, MSs ordered by desired rate (highest first).
    pfs: scores scaled by (achieved + eps) / desired, then a single ascending
    pass over all (MS, RB) pairs.
    """
    scores = np.atleast_2d(np.asarray(alloc_scores, dtype=float))
    n_ms, M = scores.shape
    need = [int(n) for n in n_rb]
    free = np.ones(M, dtype=bool)
    out: list[np.ndarray] = [np.zeros(0, dtype=int)] * n_ms

    if policy in ("greedy", "priority"):
        order = range(n_ms)
        if policy == "priority":
            order = sorted(range(n_ms), key=lambda u: -float(desired[u]))
        for u in order:
            rbs = select_rbs(scores[u], need[u], contiguous, free,
                             None if tiebreak is None else tiebreak[..., u, :])
            free[rbs] = False
            out[u] = rbs
    elif policy == "pfs":
        weight = (np.asarray(achieved, float) + PFS_EPS) / np.asarray(desired, float)
        scaled = scores * weight[:, None]
        keys = (() if tiebreak is None else
                tuple(k.ravel() for k in np.asarray(tiebreak, float).reshape(-1, n_ms, M)[::-1]))
        flat = np.lexsort((np.tile(np.arange(M), n_ms), np.repeat(np.arange(n_ms), M)) + keys
                          + (scaled.ravel(),))
        got: list[list[int]] = [[] for _ in range(n_ms)]
        for k in flat:
            u, m = divmod(int(k), M)
            if free[m] and len(got[u]) < need[u]:
                got[u].append(m)
                free[m] = False
        out = [np.array(g, dtype=int) for g in got]
    else:
        raise ValueError(f"unknown scheduler {policy!r}")

    for u in range(n_ms):
        if len(out[u]) < need[u]:
            log.debug("MS %d short by %d RBs", u, need[u] - len(out[u]))
    return out


# --- cell agents --------------------------------------------------------------------

@dataclass
class Allocation:
    """One MS's decision for a slot."""

    rbs: np.ndarray
    power_w: np.ndarray
    full_power: np.ndarray
    mcs: int
    scores: np.ndarray | None = None
    blank: bool = False

    @property
    def total_power(self) -> float:
        return float(np.sum(self.power_w))


AllocationDecision = Allocation


@dataclass
class CellAgent:
    """Decision state of one cell. Subclasses implement :meth:`decide`."""

    cell: int
    demands: list[UserDemand]
    obs: CellObservations
    params: SystemParams
    table: McsTable = field(default_factory=default_mcs_table)
    counters: ComplexityCounters = field(default_factory=ComplexityCounters)
    link_adaptation: bool = False

    def __post_init__(self):
        self.rate = np.array([d.rate for d in self.demands], dtype=float)
        self.mcs = np.array([d.mcs for d in self.demands], dtype=int)
        self.n_rb = np.array([d.n_rb for d in self.demands], dtype=int)
        self.achieved = np.zeros(len(self.demands))

    @property
    def n_ms(self) -> int:
        return len(self.demands)

    def target_db(self) -> np.ndarray:
        return self.table.min_sinr_db[self.mcs]

    def decide(self, rng: np.random.Generator) -> list[Allocation]:
        raise NotImplementedError

    def observe(self, meas: SlotMeasurement, throughput) -> None:
        self.obs = update_observations(self.obs, meas, self.params.ema_weight)
        self.achieved = np.asarray(throughput, dtype=float).copy()

    def adapt_links(self) -> None:
        if not self.link_adaptation:
            return
        avg = self.obs.avg_sinr_db
        for u in range(self.n_ms):
            new = link_adapt(avg[u], self.obs.target_db[u], int(self.mcs[u]), self.table.max_index)
            if new != self.mcs[u]:
                self.mcs[u] = new
                self.n_rb[u], _ = n_rb_for(self.rate[u], self.table.efficiency[new],
                                           self.params.rb_rate_unit, self.params.n_rb)
        self.obs = replace(self.obs, target_db=self.target_db().astype(float))


@dataclass
class FuzzyAgent(CellAgent):
    rulebase: RuleBase | None = None

    def __post_init__(self):
        super().__post_init__()
        if self.rulebase is None:
            self.rulebase = rulebase_for(self.params)

    def decide(self, rng: np.random.Generator) -> list[Allocation]:
        p = self.params
        alloc, power = score_rbs(self.obs, self.rate, self.rulebase, p.noise.watts, self.counters)
        interf = self.obs.interference_filled(p.noise.watts)
        tb = {"sinr": -self.obs.fading / (interf + p.noise.watts),
              "interference": np.stack([interf, -self.obs.fading]),
              "fading": -self.obs.fading, "index": None}[p.tiebreak]
        sets = schedule_cell(alloc, self.n_rb, p.scheduler, achieved=self.achieved,
                             desired=self.rate, contiguous=p.contiguous, tiebreak=tb)
        out = []
        for u, rbs in enumerate(sets):
            watts, full = assign_powers(power[u, rbs], int(self.n_rb[u]), p.p_max_w)
            out.append(Allocation(rbs, watts, full, int(self.mcs[u]), alloc[u, rbs]))
        return out
