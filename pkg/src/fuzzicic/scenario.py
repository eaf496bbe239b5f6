"""Randomised apartment-grid deployments with closed-access association."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import SystemParams
from .link_metrics import McsTable, default_mcs_table

log = logging.getLogger(__name__)

MAX_REDRAWS = 1000


class ScenarioError(ValueError):
    pass


def user_count_probs(kind: str, max_users: int) -> np.ndarray:
    """P(n users) for n = 1..max_users: ``equal`` or ``halving`` per extra user."""
    if max_users < 1:
        raise ValueError("max_users must be >= 1")
    n = np.arange(max_users)
    if kind == "equal":
        w = np.ones(max_users)
    elif kind == "halving":
        w = 0.5 ** n
    else:
        raise ValueError(f"unknown user-count table {kind!r}")
    return w / w.sum()


@dataclass(frozen=True)
class Station:
    id: int
    kind: str                 # "FBS" | "MS"
    position: tuple[float, float]
    cell: int                 # apartment index (row-major)


@dataclass(frozen=True)
class UserDemand:
    rate: float               # desired bits/s
    mcs: int
    n_rb: int
    clamped: bool = False


def n_rb_for(rate: float, efficiency: float, unit_rate: float, n_max: int) -> tuple[int, bool]:
    """ceil(rate / (k_sc s_sc eps)) clamped to [1, n_max]; flag set when clamped above."""
    # the small slack keeps exact multiples (rate = n * unit * eps) at n despite rounding
    need = math.ceil(rate / (unit_rate * efficiency) - 1e-9)
    if need > n_max:
        return n_max, True
    return max(need, 1), False


def rayleigh_scale(mean: float) -> float:
    return mean * math.sqrt(2.0 / math.pi)


def draw_demand(params: SystemParams, rng: np.random.Generator,
                table: McsTable | None = None) -> UserDemand:
    table = table or default_mcs_table()
    rate = float(rng.rayleigh(rayleigh_scale(params.mean_rate)))
    mcs = int(rng.integers(1, table.max_index + 1))
    n, clamped = n_rb_for(rate, table.efficiency[mcs], params.rb_rate_unit, params.n_rb)
    if clamped:
        log.debug("infeasible demand %.0f bit/s at MCS %d clamped to %d RBs", rate, mcs, n)
    return UserDemand(rate, mcs, n, clamped)


@dataclass
class Scenario:
    seed: int
    params: SystemParams
    fbs: list[Station]
    ms: list[Station]
    demands: list[UserDemand]
    serving: list[int] = field(default_factory=list)   # MS -> index into fbs

    @property
    def fbs_pos(self) -> np.ndarray:
        return np.array([s.position for s in self.fbs], dtype=float).reshape(-1, 2)

    @property
    def ms_pos(self) -> np.ndarray:
        return np.array([s.position for s in self.ms], dtype=float).reshape(-1, 2)

    @property
    def extent(self) -> tuple[float, float]:
        p = self.params
        return (p.grid_cols * p.apartment_width, p.grid_rows * p.apartment_width)

    @property
    def n_clamped(self) -> int:
        return sum(d.clamped for d in self.demands)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "params": self.params.to_dict(),
            "fbs": [asdict(s) for s in self.fbs],
            "ms": [asdict(s) for s in self.ms],
            "demands": [asdict(d) for d in self.demands],
            "serving": list(self.serving),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        st = lambda s: Station(s["id"], s["kind"], tuple(s["position"]), s["cell"])  # noqa: E731
        return cls(
            seed=d["seed"],
            params=SystemParams.from_dict(d["params"]),
            fbs=[st(s) for s in d["fbs"]],
            ms=[st(s) for s in d["ms"]],
            demands=[UserDemand(**x) for x in d["demands"]],
            serving=list(d["serving"]),
        )


def _uniform_in_apartment(rng, cell: int, params: SystemParams) -> tuple[float, float]:
    row, col = divmod(cell, params.grid_cols)
    w = params.apartment_width
    x, y = rng.uniform(0.0, w, size=2)
    return (float(col * w + x), float(row * w + y))


def generate(params: SystemParams, seed: int, table: McsTable | None = None) -> Scenario:
    """Draw active FBSs (redrawing until at least ``params.min_fbs``), users and demands."""
    table = table or default_mcs_table()
    rng = np.random.default_rng(seed)
    n_cells = params.grid_rows * params.grid_cols
    min_fbs = min(params.min_fbs, n_cells)
    for _ in range(MAX_REDRAWS):
        active = np.flatnonzero(rng.random(n_cells) < params.p_act)
        if len(active) >= min_fbs:
            break
    else:
        raise ScenarioError(
            f"p_act={params.p_act} never produced {min_fbs} active FBSs in {MAX_REDRAWS} draws")

    probs = user_count_probs(params.user_table, params.max_users)
    fbs, ms, demands, serving = [], [], [], []
    for cell in active:
        cell = int(cell)
        j = len(fbs)
        fbs.append(Station(j, "FBS", _uniform_in_apartment(rng, cell, params), cell))
        n_users = int(rng.choice(len(probs), p=probs)) + 1
        for _ in range(n_users):
            ms.append(Station(len(ms), "MS", _uniform_in_apartment(rng, cell, params), cell))
            demands.append(draw_demand(params, rng, table))
            serving.append(j)
    scen = Scenario(seed, params, fbs, ms, demands, serving)
    if scen.n_clamped:
        log.info("scenario %d: %d demands clamped to %d RBs", seed, scen.n_clamped, params.n_rb)
    return scen
