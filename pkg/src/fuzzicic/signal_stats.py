"""Analytical received-signal statistics for the apartment deployment.

Chain: Tx-Rx distance pdf in a DxD square -> path-loss pdf (change of
variable) -> convolution with Gaussian shadowing -> convolution with the
discrete per-RB transmit-power distribution -> desired (D = 10 m) and
interfering (D = 50 m) received-power densities in dBm.  Monte Carlo
samplers of the same quantities are provided as independent oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr

from .channel import PathLossParams, path_loss
from .config import SystemParams
from .link_metrics import McsTable, default_mcs_table, w_to_dbm
from .scenario import rayleigh_scale

GRID_STEP_DB = 0.1
GRID_DBM = (-200.0, 20.0)

# term boundaries at the 33rd/67th percentiles, each ramp spanning +-5 points
LEVEL_ANCHOR_PS = (0.28, 0.38, 0.62, 0.72)
# rate terms split at the quartiles
RATE_ANCHOR_PS = (0.20, 0.30, 0.45, 0.55, 0.70, 0.80)


@dataclass
class SampledDensity:
    """A density on a grid, optionally with discrete atoms (location, mass)."""

    x: np.ndarray
    values: np.ndarray
    kind: str = "pdf"
    atoms: list[tuple[float, float]] = field(default_factory=list)

    @property
    def step(self) -> float:
        return float(self.x[1] - self.x[0])

    def total_mass(self) -> float:
        cont = float(np.trapezoid(self.values, self.x)) if self.kind == "pdf" and len(self.x) > 1 else 0.0
        return cont + sum(m for _, m in self.atoms)

    def cdf(self) -> "SampledDensity":
        if self.kind == "cdf":
            return self
        if self.atoms and not np.any(self.values):
            locs = np.array([a for a, _ in self.atoms])
            masses = np.array([m for _, m in self.atoms])
            order = np.argsort(locs)
            return SampledDensity(locs[order], np.cumsum(masses[order]), "cdf")
        dx = np.diff(self.x)
        inc = 0.5 * (self.values[1:] + self.values[:-1]) * dx
        c = np.concatenate([[0.0], np.cumsum(inc)])
        return SampledDensity(self.x, c, "cdf")


def _check_grid(a: SampledDensity, b: SampledDensity) -> float:
    if not math.isclose(a.step, b.step, rel_tol=1e-9):
        raise ValueError(f"grid spacing mismatch: {a.step} vs {b.step}")
    return a.step


def convolve(a: SampledDensity, b: SampledDensity) -> SampledDensity:
    """Density of the sum of independent variables with pdfs ``a`` and ``b``."""
    step = _check_grid(a, b)
    vals = np.convolve(a.values, b.values) * step
    x = a.x[0] + b.x[0] + step * np.arange(len(vals))
    return SampledDensity(x, vals)


# --- distance and path loss ---------------------------------------------------

def distance_pdf(d, D: float):
    """Density of the distance between two uniform points in a DxD square."""
    t = np.asarray(d, dtype=float) / D
    out = np.zeros_like(t)
    inner = (t >= 0) & (t <= 1)
    ti = t[inner]
    out[inner] = 2 * ti * (ti**2 - 4 * ti + np.pi)
    outer = (t > 1) & (t <= math.sqrt(2))
    to = t[outer]
    r = np.sqrt(to**2 - 1)
    out[outer] = 2 * to * (4 * r - (to**2 + 2 - np.pi) - 4 * np.arctan(r))
    out = np.maximum(out, 0.0) / D
    return out if out.ndim else float(out)


def distance_from_loss(l, params: PathLossParams = PathLossParams()):
    return 10.0 ** ((np.asarray(l, dtype=float) - params.alpha) / params.beta)


def pathloss_support(D: float, params: PathLossParams = PathLossParams(),
                     d_min: float = 0.1) -> tuple[float, float]:
    return (path_loss(d_min, params), path_loss(math.sqrt(2) * D, params))


def pathloss_pdf(l, D: float, params: PathLossParams = PathLossParams()):
    """Density of alpha + beta log10(d) in dB for square-uniform endpoints."""
    rho = distance_from_loss(l, params)
    out = math.log(10) / params.beta * rho * distance_pdf(rho, D)
    return out


def pathloss_density(D: float, params: PathLossParams = PathLossParams(),
                     step: float = GRID_STEP_DB, d_min: float = 0.1) -> SampledDensity:
    lo, hi = pathloss_support(D, params, d_min)
    x = np.arange(math.floor(lo / step), math.ceil(hi / step) + 1) * step
    return SampledDensity(x, pathloss_pdf(x, D, params))


def gaussian_density(sigma: float, step: float = GRID_STEP_DB, width: float = 8.0) -> SampledDensity:
    n = int(math.ceil(width * sigma / step))
    x = np.arange(-n, n + 1) * step
    # cell-averaged so the discrete kernel sums to one even for narrow sigma
    edges = np.concatenate([x - step / 2, [x[-1] + step / 2]])
    mass = np.diff(ndtr(edges / sigma))
    return SampledDensity(x, mass / step)


def total_loss_density(D: float, params: PathLossParams = PathLossParams(),
                       sigma: float = 10.0, step: float = GRID_STEP_DB) -> SampledDensity:
    """Path loss plus zero-mean Gaussian shadowing, in dB."""
    pl = pathloss_density(D, params, step)
    if sigma <= 0:
        return pl
    return convolve(pl, gaussian_density(sigma, step))


# --- transmit power -----------------------------------------------------------

def rayleigh_cdf(mean: float) -> Callable[[np.ndarray], np.ndarray]:
    s = rayleigh_scale(mean)
    return lambda r: np.where(np.asarray(r) > 0, 1.0 - np.exp(-np.asarray(r, float) ** 2 / (2 * s * s)), 0.0)


def txpower_masses(rate_cdf: Callable, efficiencies: Sequence[float], p_max_w: float,
                   n_rb: int, unit_rate: float = 180e3,
                   weights: Sequence[float] | None = None) -> SampledDensity:
    """Exact atom masses of P_t = P_max / n_RB with n_RB = ceil(C*/(unit*eps)) in [1, M].

    ``efficiencies`` is the MCS mixture (uniform unless ``weights`` given).
    Atoms are reported in watts.
    """
    eff = np.asarray(efficiencies, dtype=float)
    w = np.full(len(eff), 1.0 / len(eff)) if weights is None else np.asarray(weights, float)
    n = np.arange(1, n_rb + 1)
    mass = np.zeros(n_rb)
    for e, wi in zip(eff, w):
        a = unit_rate * e
        upper = rate_cdf(n * a)
        lower = rate_cdf((n - 1) * a)
        upper[-1] = 1.0
        lower[0] = 0.0
        mass += wi * (upper - lower)
    atoms = [(p_max_w / k, float(mk)) for k, mk in zip(n, mass) if mk > 0]
    return SampledDensity(np.zeros(0), np.zeros(0), "pdf", atoms)


def txpower_density(params: SystemParams, table: McsTable | None = None) -> SampledDensity:
    table = table or default_mcs_table()
    return txpower_masses(rayleigh_cdf(params.mean_rate), table.efficiency[1:],
                          params.p_max_w, params.n_rb, params.rb_rate_unit)


def atoms_dbm(tx: SampledDensity) -> list[tuple[float, float]]:
    return [(float(w_to_dbm(p)), m) for p, m in tx.atoms]


# --- received power -------------------------------------------------------------

def received_power_density(tx: SampledDensity, loss: SampledDensity,
                           grid: tuple[float, float] = GRID_DBM,
                           step: float | None = None) -> SampledDensity:
    """pdf of P_t,dB - L_dB for discrete P_t atoms (watts) and a loss pdf in dB."""
    step = loss.step if step is None else step
    if not math.isclose(step, loss.step, rel_tol=1e-9):
        raise ValueError("received-power grid must share the loss grid spacing")
    x = np.arange(round(grid[0] / step), round(grid[1] / step) + 1) * step
    vals = np.zeros_like(x)
    for theta, mass in atoms_dbm(tx):
        # atoms stay exact: the loss pdf is read at theta - x rather than rebinned
        vals += mass * np.interp(theta - x, loss.x, loss.values, left=0.0, right=0.0)
    return SampledDensity(x, vals)


def signal_densities(params: SystemParams = SystemParams(), table: McsTable | None = None,
                     d_desired: float = 10.0, d_interf: float = 50.0) -> dict[str, SampledDensity]:
    pl = PathLossParams(params.alpha, params.beta)
    tx = txpower_density(params, table)
    return {
        "txpower": tx,
        "pathloss_desired": pathloss_density(d_desired, pl),
        "pathloss_interf": pathloss_density(d_interf, pl),
        "desired": received_power_density(tx, total_loss_density(d_desired, pl, params.shadow_sigma)),
        "interf": received_power_density(tx, total_loss_density(d_interf, pl, params.shadow_sigma)),
    }


def percentiles(density: SampledDensity, ps) -> np.ndarray:
    """Inverse CDF by linear interpolation."""
    ps = np.atleast_1d(np.asarray(ps, dtype=float))
    if np.any((ps <= 0) | (ps >= 1)):
        raise ValueError("percentiles need p in (0, 1)")
    c = density.cdf()
    cv = c.values / c.values[-1]
    # strictly increasing support for interpolation
    keep = np.concatenate([[True], np.diff(cv) > 0])
    return np.interp(ps, cv[keep], c.x[keep])


def rayleigh_quantiles(mean: float, ps) -> np.ndarray:
    ps = np.asarray(ps, dtype=float)
    return rayleigh_scale(mean) * np.sqrt(-2.0 * np.log1p(-ps))


@dataclass(frozen=True)
class MembershipAnchors:
    signal_dbm: tuple[float, ...]
    interference_dbm: tuple[float, ...]
    rate_bps: tuple[float, ...]


def membership_anchors(params: SystemParams = SystemParams(),
                       table: McsTable | None = None) -> MembershipAnchors:
    dens = signal_densities(params, table)
    return MembershipAnchors(
        tuple(float(v) for v in percentiles(dens["desired"], LEVEL_ANCHOR_PS)),
        tuple(float(v) for v in percentiles(dens["interf"], LEVEL_ANCHOR_PS)),
        tuple(float(v) for v in rayleigh_quantiles(params.mean_rate, RATE_ANCHOR_PS)),
    )


# --- Monte Carlo oracles --------------------------------------------------------

def sample_distances(rng: np.random.Generator, D: float, n: int) -> np.ndarray:
    p = rng.uniform(0.0, D, size=(n, 4))
    return np.hypot(p[:, 0] - p[:, 2], p[:, 1] - p[:, 3])


def sample_txpower(rng: np.random.Generator, params: SystemParams, n: int,
                   table: McsTable | None = None) -> np.ndarray:
    """Per-RB transmit power (W) of ``n`` independent demand draws."""
    table = table or default_mcs_table()
    rate = rng.rayleigh(rayleigh_scale(params.mean_rate), size=n)
    mcs = rng.integers(1, table.max_index + 1, size=n)
    nrb = np.clip(np.ceil(rate / (params.rb_rate_unit * table.efficiency[mcs])), 1, params.n_rb)
    return params.p_max_w / nrb


def sample_received_dbm(rng: np.random.Generator, params: SystemParams, D: float, n: int,
                        table: McsTable | None = None, min_distance: float = 0.1) -> np.ndarray:
    pl = PathLossParams(params.alpha, params.beta)
    d = np.maximum(sample_distances(rng, D, n), min_distance)
    loss = path_loss(d, pl) + rng.normal(0.0, params.shadow_sigma, size=n)
    return w_to_dbm(sample_txpower(rng, params, n, table)) - loss
