"""Radio KPI arithmetic: SINR, per-user throughput, power efficiency,
availability, Jain fairness, and the CQI/MCS table."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np


def dbm_to_w(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def w_to_dbm(w, floor_dbm: float = -np.inf):
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(w) + 30.0
    return np.maximum(out, floor_dbm)


def db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, dtype=float))


def undb(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


@dataclass(frozen=True)
class McsEntry:
    cqi: int
    min_sinr_db: float  # nan for index 0
    modulation: str
    code_rate: float
    efficiency: float


class McsTable:
    """CQI-indexed modulation and coding table (index 0 means no transmission)."""

    def __init__(self, entries: list[McsEntry]):
        entries = sorted(entries, key=lambda e: e.cqi)
        if [e.cqi for e in entries] != list(range(len(entries))):
            raise ValueError("CQI indices must be contiguous from 0")
        eff = np.array([e.efficiency for e in entries])
        thr = np.array([e.min_sinr_db for e in entries[1:]])
        if eff[0] != 0.0 or np.any(np.diff(eff[1:]) <= 0):
            raise ValueError("efficiencies must start at 0 and increase strictly from index 1")
        if np.any(np.diff(thr) < 0):
            raise ValueError("minimum SINR must be nondecreasing")
        self.entries = entries
        self.efficiency = eff
        self.min_sinr_db = np.concatenate([[np.nan], thr])

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, cqi: int) -> McsEntry:
        return self.entries[cqi]

    @property
    def max_index(self) -> int:
        return len(self.entries) - 1

    @classmethod
    def from_csv(cls, path) -> "McsTable":
        entries = []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                entries.append(McsEntry(
                    cqi=int(row["cqi"]),
                    min_sinr_db=float(row["min_sinr_db"]) if row["min_sinr_db"] else math.nan,
                    modulation=row["modulation"],
                    code_rate=float(row["code_rate"]) if row["code_rate"] else math.nan,
                    efficiency=float(row["efficiency"]),
                ))
        return cls(entries)


@lru_cache(maxsize=None)
def default_mcs_table() -> McsTable:
    with resources.as_file(resources.files("fuzzicic") / "data" / "mcs_table.csv") as p:
        return McsTable.from_csv(Path(p))


@dataclass(frozen=True)
class NoiseModel:
    density_dbm_hz: float = -174.0
    rb_bandwidth_hz: float = 180e3

    @property
    def dbm(self) -> float:
        return self.density_dbm_hz + 10.0 * math.log10(self.rb_bandwidth_hz)

    @property
    def watts(self) -> float:
        return float(dbm_to_w(self.dbm))


def sinr(signal_w, interference_w, noise_w):
    """Linear SINR S / (I + noise)."""
    return np.asarray(signal_w, dtype=float) / (np.asarray(interference_w, dtype=float) + noise_w)


def rate_per_rb(efficiency, k_sc: int = 12, s_sc: float = 15e3):
    """Bits/s carried by one RB at spectral efficiency ``efficiency``."""
    return k_sc * s_sc * np.asarray(efficiency, dtype=float)


def achieved_rbs(sinr_linear, target_db) -> int:
    """Number of RBs whose SINR meets the target (the n-tilde count)."""
    s = np.asarray(sinr_linear, dtype=float)
    return int(np.count_nonzero(db(s) >= target_db)) if s.size else 0


def user_throughput(sinr_linear, target_db, efficiency, k_sc: int = 12,
                    s_sc: float = 15e3) -> float:
    """Throughput counting only the RBs that reach ``target_db``."""
    return achieved_rbs(sinr_linear, target_db) * float(rate_per_rb(efficiency, k_sc, s_sc))


def power_efficiency(throughput, powers_w) -> float:
    total = float(np.sum(powers_w))
    if total <= 0.0:
        return 0.0
    return float(throughput) / total


def availability(throughput, desired) -> float:
    c = np.asarray(throughput, dtype=float)
    if c.size == 0:
        raise ValueError("availability needs at least one user")
    return float(np.mean(c >= np.asarray(desired, dtype=float)))


def jain_fairness(throughput) -> float:
    """(sum C)^2 / (n * sum C^2); an all-zero vector counts as perfectly fair."""
    c = np.asarray(throughput, dtype=float)
    sq = float(np.sum(c * c))
    if c.size == 0 or sq == 0.0:
        return 1.0
    return float(np.sum(c)) ** 2 / (c.size * sq)


@dataclass
class SlotMetrics:
    throughput: np.ndarray      # bits/s per MS
    n_achieved: np.ndarray      # RBs meeting target per MS
    power_w: np.ndarray         # total transmit power per MS
    efficiency: np.ndarray      # bits/J per MS
    satisfied: np.ndarray       # bool per MS
    system_throughput: float
    mean_efficiency: float
    availability: float
    fairness: float


def slot_metrics(throughput, desired, power_w, n_achieved) -> SlotMetrics:
    c = np.asarray(throughput, dtype=float)
    p = np.asarray(power_w, dtype=float)
    eff = np.array([power_efficiency(ci, pi) for ci, pi in zip(c, p)])
    active = p > 0.0
    # users that did not transmit this slot (blank subframe) have no efficiency to report
    mean_eff = float(eff[active].mean()) if active.any() else 0.0
    return SlotMetrics(
        throughput=c,
        n_achieved=np.asarray(n_achieved, dtype=int),
        power_w=p,
        efficiency=eff,
        satisfied=c >= np.asarray(desired, dtype=float),
        system_throughput=float(c.sum()),
        mean_efficiency=mean_eff,
        availability=availability(c, desired),
        fairness=jain_fairness(c),
    )
