"""Desk-scale baselines: exhaustive sum-throughput search over the policies'
action space, the greedy per-cell SINR heuristic, and complexity accounting.

The exhaustive search covers every joint choice of RB subsets (one MS per
cell) and per-RB power levels from {Half, Max}.  Throughput is a sum of
per-RB terms once the RB occupancy is fixed, so the default search solves
each RB's power sub-problem once per occupancy pattern and then scans the
joint subsets; ``literal=True`` walks every (subsets, levels) node instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import realize_channel
from .config import SystemParams
from .icic import Allocation, CellAgent, ComplexityCounters, select_rbs
from .link_metrics import McsTable, default_mcs_table
from .scenario import UserDemand

ENUM_BUDGET = 10**8
POWER_LEVELS = (0.5, 1.0)   # Half, Max as fractions of P_max / n_RB
FUZZY_INPUTS_K = 4
HEURISTIC_INPUTS_K = 2


class BudgetExceeded(RuntimeError):
    def __init__(self, required: int, budget: int):
        super().__init__(f"enumeration needs {required} nodes, budget is {budget}")
        self.required = required
        self.budget = budget


# --- greedy SINR heuristic ----------------------------------------------------------

@dataclass
class GreedySinrAgent(CellAgent):
    """Each MS (in index order) takes the RBs with the highest potential SINR
    P_max/n * G / (I + eta); unseen interference counts as zero."""

    def decide(self, rng: np.random.Generator) -> list[Allocation]:
        p = self.params
        M = p.n_rb
        interf = np.nan_to_num(self.obs.interference_w, nan=0.0)
        potential = (self.obs.signal_w[:, None] * self.obs.fading) / (interf + p.noise.watts)
        self.counters.heuristic_evals += HEURISTIC_INPUTS_K * self.n_ms * M
        free = np.ones(M, dtype=bool)
        out = []
        for u in range(self.n_ms):
            rbs = select_rbs(-potential[u], int(self.n_rb[u]), False, free)
            free[rbs] = False
            watts = np.full(len(rbs), p.p_max_w / int(self.n_rb[u]))
            out.append(Allocation(rbs, watts, np.ones(len(rbs), bool), int(self.mcs[u])))
        return out


def greedy_sinr_allocate(signal_w, fading, interference_w, n_rb, p_max_w: float,
                         noise_w: float, available=None) -> Allocation:
    """Single-MS form of the heuristic; ``interference_w`` may contain NaN (unseen -> 0)."""
    interf = np.nan_to_num(np.asarray(interference_w, dtype=float), nan=0.0)
    potential = signal_w * np.asarray(fading, float) / (interf + noise_w)
    rbs = select_rbs(-potential, int(n_rb), False, available)
    watts = np.full(len(rbs), p_max_w / int(n_rb))
    return Allocation(rbs, watts, np.ones(len(rbs), bool), -1)


# --- instances -----------------------------------------------------------------------

@dataclass
class OptInstance:
    """One MS per cell; MS ``u`` is served by FBS ``u``."""

    gain: np.ndarray          # (J, J, M): FBS j -> MS u on RB m
    large_scale: np.ndarray   # (J, J)
    n_rb: np.ndarray          # (J,)
    mcs: np.ndarray           # (J,)
    params: SystemParams
    table: McsTable = field(default_factory=default_mcs_table)

    @property
    def n_cells(self) -> int:
        return len(self.n_rb)

    @property
    def n_rbs(self) -> int:
        return self.gain.shape[2]

    @property
    def rb_rate(self) -> np.ndarray:
        return self.params.rb_rate_unit * self.table.efficiency[self.mcs]

    @property
    def rates(self) -> np.ndarray:
        return self.n_rb * self.rb_rate

    def demands(self) -> list[UserDemand]:
        return [UserDemand(float(r), int(k), int(n)) for r, k, n in
                zip(self.rates, self.mcs, self.n_rb)]

    def enumeration_size(self) -> int:
        return enumeration_nodes(self.n_rbs, self.n_rb)


def enumeration_nodes(M: int, n_rb, n_levels: int = len(POWER_LEVELS)) -> int:
    """prod_u C(M, n_u) * levels^(sum n_u)."""
    n_rb = [int(n) for n in n_rb]
    return math.prod(math.comb(M, n) for n in n_rb) * n_levels ** sum(n_rb)


def make_instance(rng: np.random.Generator, n_cells: int = 3, n_rbs: int = 8, max_rbs: int = 4,
                  params: SystemParams | None = None, budget: int = ENUM_BUDGET) -> OptInstance:
    """``n_cells`` apartments of a 2x2 block, one MS each, uniform MCS and n_RB."""
    if not 1 <= n_cells <= 4:
        raise ValueError("instances use 1 to 4 cells of a 2x2 block")
    base = params or SystemParams()
    params = base.replace(grid_rows=2, grid_cols=2, n_rb=n_rbs)
    table = default_mcs_table()
    w = params.apartment_width
    cells = rng.choice(4, size=n_cells, replace=False)
    cells.sort()
    corner = np.column_stack([(cells % 2) * w, (cells // 2) * w]).astype(float)
    fbs = corner + rng.uniform(0.0, w, size=(n_cells, 2))
    ms = corner + rng.uniform(0.0, w, size=(n_cells, 2))
    mcs = rng.integers(1, table.max_index + 1, size=n_cells)
    while True:
        n_rb = rng.integers(1, min(max_rbs, n_rbs) + 1, size=n_cells)
        if enumeration_nodes(n_rbs, n_rb) <= budget:
            break
    ch = realize_channel(rng, fbs, ms, n_rbs, (2 * w, 2 * w), shadow_sigma=params.shadow_sigma,
                         shadow_corr=params.shadow_corr, n_taps=params.n_taps,
                         delay_spread=params.delay_spread, rb_bandwidth=params.rb_bandwidth,
                         min_distance=params.min_distance)
    return OptInstance(ch.gain, ch.large_scale, n_rb, mcs, params, table)


# --- evaluation ----------------------------------------------------------------------

@dataclass
class JointAllocation:
    rbs: tuple[tuple[int, ...], ...]
    levels: tuple[tuple[float, ...], ...]   # per MS, aligned with rbs
    c_sys: float
    nodes: int = 0


def evaluate(inst: OptInstance, rbs, levels) -> np.ndarray:
    """Per-MS throughput of a joint allocation with full cross-interference."""
    J, M = inst.n_cells, inst.n_rbs
    p = np.zeros((J, M))
    for u in range(J):
        p[u, list(rbs[u])] = np.asarray(levels[u], dtype=float) * inst.params.p_max_w / inst.n_rb[u]
    return _throughput(inst, p)


def _throughput(inst: OptInstance, p: np.ndarray) -> np.ndarray:
    G = inst.gain
    J = inst.n_cells
    users = np.arange(J)
    rx = p[:, None, :] * G                    # (tx, rx, M)
    desired = rx[users, users]
    interf = rx.sum(axis=0) - desired
    with np.errstate(divide="ignore"):
        sinr_db = 10 * np.log10(desired / (interf + inst.params.noise.watts))
    target = inst.table.min_sinr_db[inst.mcs]
    ok = (p > 0) & (sinr_db >= target[:, None])
    return ok.sum(axis=1) * inst.rb_rate


def _rb_tables(inst: OptInstance):
    """best[m, T] and the lexicographically first level vector achieving it,
    for every occupancy bitmask T of RB m."""
    J, M = inst.n_cells, inst.n_rbs
    G = inst.gain
    noise = inst.params.noise.watts
    target = inst.table.min_sinr_db[inst.mcs]
    unit_p = inst.params.p_max_w / inst.n_rb
    rb_rate = inst.rb_rate
    best = np.zeros((M, 1 << J))
    choice: dict[tuple[int, int], tuple[float, ...]] = {}
    for mask in range(1, 1 << J):
        users = [u for u in range(J) if mask >> u & 1]
        combos = np.array(list(itertools.product(POWER_LEVELS, repeat=len(users))))  # (L, k)
        pw = combos * unit_p[users]                                                   # (L, k)
        g = G[np.ix_(users, users)]                                                   # (k, k, M)
        rx = pw[:, :, None, None] * g[None]                                          # (L, tx, rx, M)
        k = len(users)
        desired = rx[:, np.arange(k), np.arange(k), :]                                # (L, k, M)
        interf = rx.sum(axis=1) - desired
        sinr_db = 10 * np.log10(desired / (interf + noise))
        ok = sinr_db >= target[users][None, :, None]
        value = (ok * rb_rate[users][None, :, None]).sum(axis=1)                     # (L, M)
        first = np.argmax(value, axis=0)
        best[:, mask] = value[first, np.arange(M)]
        for m in range(M):
            choice[(m, mask)] = tuple(combos[first[m]])
    return best, choice


def exhaustive_optimum(inst: OptInstance, budget: int = ENUM_BUDGET, literal: bool = False,
                       counters: ComplexityCounters | None = None) -> JointAllocation:
    """Maximum C_sys over all joint RB subsets and {Half, Max} levels.

    Ties go to the first maximiser in enumeration order, i.e. the
    lexicographically smallest (subsets, levels) with Half < Max.
    """
    required = inst.enumeration_size()
    if required > budget:
        raise BudgetExceeded(required, budget)
    result = _literal(inst) if literal else _decomposed(inst)
    result.nodes = required if not literal else result.nodes
    if counters is not None:
        counters.enum_nodes += result.nodes
    return result


def _literal(inst: OptInstance) -> JointAllocation:
    J, M = inst.n_cells, inst.n_rbs
    subsets = [list(itertools.combinations(range(M), int(n))) for n in inst.n_rb]
    best_val, best = -1.0, None
    nodes = 0
    for rbs in itertools.product(*subsets):
        for flat in itertools.product(POWER_LEVELS, repeat=int(sum(inst.n_rb))):
            nodes += 1
            levels, k = [], 0
            for u in range(J):
                levels.append(flat[k:k + len(rbs[u])])
                k += len(rbs[u])
            val = float(evaluate(inst, rbs, levels).sum())
            if val > best_val:
                best_val, best = val, (rbs, tuple(levels))
    return JointAllocation(best[0], best[1], best_val, nodes)


def _decomposed(inst: OptInstance) -> JointAllocation:
    J, M = inst.n_cells, inst.n_rbs
    best, choice = _rb_tables(inst)
    subsets = [list(itertools.combinations(range(M), int(n))) for n in inst.n_rb]
    code = np.zeros([len(s) for s in subsets] + [M], dtype=np.int64)
    for u, subs in enumerate(subsets):
        masks = np.zeros((len(subs), M), dtype=np.int64)
        for i, s in enumerate(subs):
            masks[i, list(s)] = 1 << u
        shape = [1] * J + [M]
        shape[u] = len(subs)
        code = code + masks.reshape(shape)
    values = best[np.arange(M), code].sum(axis=-1)
    flat = int(np.argmax(values))        # first maximiser in itertools.product order
    idx = np.unravel_index(flat, values.shape)
    rbs = tuple(subsets[u][idx[u]] for u in range(J))
    levels = []
    for u in range(J):
        lv = []
        for m in rbs[u]:
            mask = int(code[idx][m])
            users = [v for v in range(J) if mask >> v & 1]
            lv.append(choice[(m, mask)][users.index(u)])
        levels.append(tuple(lv))
    return JointAllocation(rbs, tuple(levels), float(values[idx]))


# --- complexity ---------------------------------------------------------------------

def count_complexity(n_users: int, n_rbs: int, slots: int = 1) -> ComplexityCounters:
    """Analytic per-run counts: fuzzy K=4 and heuristic K=2 evaluations per user and RB."""
    return ComplexityCounters(fuzzy_evals=FUZZY_INPUTS_K * n_users * n_rbs * slots,
                              heuristic_evals=HEURISTIC_INPUTS_K * n_users * n_rbs * slots)
