"""Simulation parameters. Defaults are the femto-cell deployment values
(5x5 apartments of 10 m, 50 RBs of 180 kHz, 10 dBm budget, ...)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .link_metrics import NoiseModel, dbm_to_w


@dataclass(frozen=True)
class SystemParams:
    grid_rows: int = 5
    grid_cols: int = 5
    apartment_width: float = 10.0       # m
    p_act: float = 0.5
    max_users: int = 3
    user_table: str = "equal"           # "equal" | "halving"
    min_fbs: int = 3
    n_rb: int = 50
    rb_bandwidth: float = 180e3         # Hz
    mean_rate: float = 1.25e6           # bits/s
    k_sc: int = 12
    s_sc: float = 15e3                  # symbols/s per subcarrier
    n_slots: int = 25
    abs_prob: float = 0.1
    noise_density_dbm: float = -174.0   # dBm/Hz
    p_max_dbm: float = 10.0
    alpha: float = 97.0
    beta: float = 30.0
    shadow_sigma: float = 10.0          # dB
    shadow_corr: float = 50.0           # m
    shadow_resolution: float = 1.0      # m
    n_taps: int = 6
    delay_spread: float = 50e-9         # s, rms
    min_distance: float = 0.1           # m
    ema_weight: float = 0.5
    direction: str = "downlink"         # "downlink" | "uplink"
    scheduler: str = "greedy"           # "greedy" | "pfs" | "priority"
    contiguous: bool = False
    tiebreak: str = "sinr"              # "sinr" | "fading" | "interference" | "index": order of equal scores

    def __post_init__(self):
        if not 0.0 <= self.p_act <= 1.0:
            raise ValueError("p_act must lie in [0, 1]")
        if self.n_rb < 1 or self.n_slots < 1:
            raise ValueError("n_rb and n_slots must be >= 1")
        if not 0.0 < self.ema_weight <= 1.0:
            raise ValueError("ema_weight must lie in (0, 1]")
        if not 0.0 <= self.abs_prob <= 1.0:
            raise ValueError("abs_prob must lie in [0, 1]")
        if self.direction not in ("downlink", "uplink"):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.scheduler not in ("greedy", "pfs", "priority"):
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        if self.tiebreak not in ("sinr", "fading", "interference", "index"):
            raise ValueError(f"unknown tie-break {self.tiebreak!r}")

    @property
    def p_max_w(self) -> float:
        return float(dbm_to_w(self.p_max_dbm))

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(self.noise_density_dbm, self.rb_bandwidth)

    @property
    def rb_rate_unit(self) -> float:
        """k_sc * s_sc: bits/s per RB per unit spectral efficiency."""
        return self.k_sc * self.s_sc

    def replace(self, **kw) -> "SystemParams":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SystemParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path: str | Path) -> "SystemParams":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
