"""Airborne exposure along transmission links.

Particles are emitted by the host at rate ``g`` into a well-mixed volume
``V`` and removed at rate ``b``, so the concentration obeys
``V dC/dt = g - b V C`` while the host is present and decays exponentially
afterwards.  A neighbour breathing at rate ``p`` inhales ``p * C(t)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contact import LinkKind, SPDTLink, classify_times


@dataclass(frozen=True)
class ExposureParams:
    """Physical constants of the exposure model.

    ``p`` is in m^3/s; use :meth:`from_lpm` for litres per minute.
    """

    g: float = 0.304
    p: float = 7.5e-3 / 60.0
    V: float = 2512.0
    sigma: float = 0.33

    def __post_init__(self):
        for name in ("g", "p", "V", "sigma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    @classmethod
    def from_lpm(cls, g: float, p_lpm: float, V: float, sigma: float) -> "ExposureParams":
        return cls(g=g, p=p_lpm * 1e-3 / 60.0, V=V, sigma=sigma)

    @property
    def dose_scale(self) -> float:
        return self.g * self.p / self.V


@dataclass(frozen=True)
class DecayConfig:
    """Particle decay time range in minutes with a guaranteed median."""

    r_min: float = 7.5
    r_max: float = 300.0
    r_median: float = 60.0

    def __post_init__(self):
        if not (0 < self.r_min < self.r_median < self.r_max):
            raise ValueError("need 0 < r_min < r_median < r_max")

    def decay_time_from_uniform(self, u):
        """Map uniforms to decay times (minutes); half the mass on each side of the median."""
        u = np.asarray(u, dtype=float)
        lo = self.r_min + (u / 0.5) * (self.r_median - self.r_min)
        hi = self.r_median + ((u - 0.5) / 0.5) * (self.r_max - self.r_median)
        return np.where(u < 0.5, lo, hi)

    def rate_from_uniform(self, u):
        return 1.0 / (60.0 * self.decay_time_from_uniform(u))

    @property
    def b_bounds(self) -> tuple[float, float]:
        return 1.0 / (60.0 * self.r_max), 1.0 / (60.0 * self.r_min)


def sample_decay_rate(cfg: DecayConfig, rng: np.random.Generator, size=None):
    """Draw per-second decay rates ``b = 1 / (60 r)``."""
    b = cfg.rate_from_uniform(rng.random(size))
    return float(b) if size is None else b


def concentration(t, t_s, t_l, params: ExposureParams, b: float):
    """Particle concentration (per m^3) at time ``t`` for a host present on ``[t_s, t_l]``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    if t_s > t_l or b <= 0:
        raise ValueError("need t_s <= t_l and b > 0")
    steady = params.g / (b * params.V)
    during = -steady * np.expm1(-b * (np.minimum(t, t_l) - t_s))
    after = during * np.exp(-b * np.maximum(t - t_l, 0.0))
    out = np.where(t < t_s, 0.0, after)
    return float(out) if out.ndim == 0 else out


def link_exposures(ts, tl, tsp, tlp, b, params: ExposureParams) -> np.ndarray:
    """Vectorised intake dose (PFU) for arrays of link timestamps.

    Every exponential is evaluated with a non-positive argument, so absolute
    epoch-scale timestamps are safe.
    """
    ts = np.asarray(ts, dtype=float)
    tl = np.asarray(tl, dtype=float)
    tsp = np.asarray(tsp, dtype=float)
    tlp = np.asarray(tlp, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(b <= 0):
        raise ValueError("decay rate must be positive")
    ts = np.minimum(ts, tsp)
    kind = classify_times(tl, tsp, tlp)
    t_i = np.where(kind == LinkKind.DIRECT_ONLY, tlp,
                   np.where(kind == LinkKind.MIXED, tl, tsp))
    # co-present part: x - e^{-a}(1 - e^{-x}), split into two non-negative terms
    x = b * (t_i - tsp)
    a = b * (tsp - ts)
    em_x = np.expm1(-x)
    direct = (x + em_x) + np.expm1(-a) * em_x
    # after-departure part, zero for direct-only links
    lag = np.maximum(t_i - tl, 0.0)
    indirect = (np.expm1(-b * (tl - ts)) * np.exp(-b * lag) * np.expm1(-b * (tlp - t_i)))
    indirect = np.where(kind == LinkKind.DIRECT_ONLY, 0.0, indirect)
    return params.dose_scale / (b * b) * (direct + indirect)


def link_exposure(link: SPDTLink, params: ExposureParams, b: float | None = None) -> float:
    if b is None:
        b = link.decay_rate
    if b is None:
        raise ValueError("decay rate not assigned")
    return float(link_exposures(link.host_arrive, link.host_depart, link.nbr_arrive,
                                link.nbr_depart, b, params))


def infection_probability(total_exposure, sigma: float):
    """Dose-response ``1 - exp(-sigma E)``."""
    e = np.asarray(total_exposure, dtype=float)
    if np.any(e < 0):
        raise ValueError("exposure must be non-negative")
    out = -np.expm1(-sigma * e)
    return float(out) if out.ndim == 0 else out
