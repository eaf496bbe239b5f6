"""Link gains: distance path loss, spatially correlated log-normal
shadowing maps, and tapped-delay-line frequency-selective fading.

Gain composition per link and RB:  G = |H|^2 * 10^((-L(d) + X) / 10).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PathLossParams:
    alpha: float = 97.0  # dB
    beta: float = 30.0   # dB/decade

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("path-loss slope beta must be positive")


def path_loss(d, params: PathLossParams = PathLossParams()):
    """alpha + beta*log10(d) in dB; ``d`` in metres, must be positive."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("path loss needs d > 0")
    out = params.alpha + params.beta * np.log10(d)
    return out if out.ndim else float(out)


def distance(a, b, min_distance: float = 0.1):
    """Pairwise distances between point sets ``a`` (N,2) and ``b`` (K,2), floored."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    d = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    return np.maximum(d, min_distance)


# --- shadowing ---------------------------------------------------------------

@lru_cache(maxsize=8)
def _shadow_factor(nx: int, ny: int, resolution: float, decorrelation: float) -> np.ndarray:
    xs = np.arange(nx) * resolution
    ys = np.arange(ny) * resolution
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    dist = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    cov = np.exp(-dist / decorrelation)
    cov[np.diag_indices_from(cov)] += 1e-10
    return np.linalg.cholesky(cov)


@dataclass(frozen=True)
class ShadowingMap:
    """Gaussian shadowing field in dB sampled on a regular grid from the origin."""

    values: np.ndarray      # (ny, nx) dB
    resolution: float       # m per cell
    sigma: float            # dB
    decorrelation: float    # m

    @property
    def extent(self) -> tuple[float, float]:
        ny, nx = self.values.shape
        return ((nx - 1) * self.resolution, (ny - 1) * self.resolution)

    def sample(self, pos) -> np.ndarray | float:
        """Bilinear interpolation at ``pos`` ((2,) or (N, 2)); clamps outside the map."""
        p = np.atleast_2d(np.asarray(pos, dtype=float))
        ny, nx = self.values.shape
        fx = p[:, 0] / self.resolution
        fy = p[:, 1] / self.resolution
        if np.any((fx < 0) | (fx > nx - 1) | (fy < 0) | (fy > ny - 1)):
            log.info("shadowing sample outside map; clamping to boundary")
        fx = np.clip(fx, 0, nx - 1)
        fy = np.clip(fy, 0, ny - 1)
        x0 = np.minimum(np.floor(fx).astype(int), max(nx - 2, 0))
        y0 = np.minimum(np.floor(fy).astype(int), max(ny - 2, 0))
        x1 = np.minimum(x0 + 1, nx - 1)
        y1 = np.minimum(y0 + 1, ny - 1)
        tx = fx - x0
        ty = fy - y0
        v = self.values
        out = ((1 - tx) * (1 - ty) * v[y0, x0] + tx * (1 - ty) * v[y0, x1]
               + (1 - tx) * ty * v[y1, x0] + tx * ty * v[y1, x1])
        return out if np.ndim(pos) > 1 else float(out[0])


def shadowing_maps(rng: np.random.Generator, count: int, extent: tuple[float, float],
                   sigma: float = 10.0, decorrelation: float = 50.0,
                   resolution: float = 1.0) -> list[ShadowingMap]:
    """``count`` independent maps with exponential correlation exp(-dist/decorrelation).

    Each map is the Cholesky factor of the grid covariance applied to white
    Gaussian noise, so the marginal std is exactly ``sigma``.
    """
    nx = int(round(extent[0] / resolution)) + 1
    ny = int(round(extent[1] / resolution)) + 1
    factor = _shadow_factor(nx, ny, float(resolution), float(decorrelation))
    white = rng.standard_normal((nx * ny, count))
    fields = sigma * (factor @ white)
    return [ShadowingMap(fields[:, i].reshape(ny, nx), resolution, sigma, decorrelation)
            for i in range(count)]


# --- fast fading -------------------------------------------------------------

def exponential_pdp(n_taps: int, rms_delay: float) -> tuple[np.ndarray, np.ndarray]:
    """Tap delays (s) and unit-sum powers of an exponential power-delay profile.

    Taps sit at multiples of ``rms_delay``; the decay constant is solved so the
    discrete profile's rms delay spread equals ``rms_delay``.
    """
    if n_taps < 1:
        raise ValueError("need at least one tap")
    if n_taps == 1 or rms_delay <= 0:
        delays = np.arange(n_taps) * max(rms_delay, 0.0)
        powers = np.zeros(n_taps)
        powers[0] = 1.0
        return delays, powers
    delays = np.arange(n_taps) * rms_delay

    def spread(decay):
        p = np.exp(-delays / decay)
        p /= p.sum()
        mean = p @ delays
        return np.sqrt(p @ delays**2 - mean**2)

    decay = brentq(lambda t: spread(t) - rms_delay, 1e-6 * rms_delay, 1e6 * rms_delay)
    powers = np.exp(-delays / decay)
    return delays, powers / powers.sum()


def rb_frequencies(n_rb: int, rb_bandwidth: float = 180e3) -> np.ndarray:
    return (np.arange(n_rb) - (n_rb - 1) / 2.0) * rb_bandwidth


def fading_per_rb(rng: np.random.Generator, n_rb: int, n_taps: int = 6,
                  rms_delay: float = 50e-9, rb_bandwidth: float = 180e3,
                  size: tuple[int, ...] = ()) -> np.ndarray:
    """|H|^2 at each RB centre for ``size`` independent links; unit mean."""
    delays, powers = exponential_pdp(n_taps, rms_delay)
    shape = tuple(size) + (n_taps,)
    taps = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(powers / 2.0)
    steering = np.exp(-2j * np.pi * np.outer(delays, rb_frequencies(n_rb, rb_bandwidth)))
    h = taps @ steering
    return np.abs(h) ** 2


# --- composition -------------------------------------------------------------

def compose_gain(pathloss_db, shadow_db, fading):
    return np.asarray(fading) * 10.0 ** ((-np.asarray(pathloss_db) + np.asarray(shadow_db)) / 10.0)


@dataclass(frozen=True)
class LinkGain:
    pathloss_db: float
    shadow_db: float
    fading: float

    @property
    def gain(self) -> float:
        return float(compose_gain(self.pathloss_db, self.shadow_db, self.fading))


@dataclass
class ChannelRealization:
    """Gains between every transmitter-side node j (FBS) and receiver-side node u (MS)."""

    pathloss_db: np.ndarray   # (J, U)
    shadow_db: np.ndarray     # (J, U)
    fading: np.ndarray        # (J, U, M)

    def __post_init__(self):
        self.gain = compose_gain(self.pathloss_db[..., None], self.shadow_db[..., None], self.fading)

    @property
    def large_scale(self) -> np.ndarray:
        """Fading-free gain 10^((-L + X)/10), shape (J, U)."""
        return 10.0 ** ((-self.pathloss_db + self.shadow_db) / 10.0)

    def link(self, j: int, u: int, m: int) -> LinkGain:
        return LinkGain(float(self.pathloss_db[j, u]), float(self.shadow_db[j, u]),
                        float(self.fading[j, u, m]))

    def to_csv(self, path) -> None:
        J, U, M = self.fading.shape
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tx_id", "rx_id", "rb", "pathloss_db", "shadow_db", "fading_pow", "gain_lin"])
            for j in range(J):
                for u in range(U):
                    for m in range(M):
                        w.writerow([j, u, m, repr(float(self.pathloss_db[j, u])),
                                    repr(float(self.shadow_db[j, u])),
                                    repr(float(self.fading[j, u, m])),
                                    repr(float(self.gain[j, u, m]))])


def realize_channel(rng: np.random.Generator, tx_pos, rx_pos, n_rb: int,
                    extent: tuple[float, float], *, pathloss: PathLossParams = PathLossParams(),
                    shadow_sigma: float = 10.0, shadow_corr: float = 50.0,
                    shadow_resolution: float = 1.0, n_taps: int = 6,
                    delay_spread: float = 50e-9, rb_bandwidth: float = 180e3,
                    min_distance: float = 0.1) -> ChannelRealization:
    """One quasi-static realisation: a shadowing map per transmitter, sampled at
    each receiver, and independent fading per link."""
    tx_pos = np.atleast_2d(np.asarray(tx_pos, dtype=float))
    rx_pos = np.atleast_2d(np.asarray(rx_pos, dtype=float))
    J, U = len(tx_pos), len(rx_pos)
    pl = path_loss(distance(tx_pos, rx_pos, min_distance), pathloss)
    maps = shadowing_maps(rng, J, extent, shadow_sigma, shadow_corr, shadow_resolution)
    shadow = np.stack([m.sample(rx_pos) for m in maps]) if J else np.zeros((0, U))
    fading = fading_per_rb(rng, n_rb, n_taps, delay_spread, rb_bandwidth, size=(J, U))
    return ChannelRealization(np.asarray(pl).reshape(J, U), shadow.reshape(J, U), fading)
