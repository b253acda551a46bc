"""Closed-form detection rates for the loss plus dark-count channel.

Bob's reference detector D1 receives a Poisson number of photons with mean
``eta (mu - kappa)``, independent of what happens at D2/D3, so every
windowed rate is the corresponding unwindowed rate times the Poisson mass
of the D1 acceptance interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .params import ChannelParams, PhotonWindow, ProtocolParams

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# tails beyond this many standard deviations are below 1e-18 of the mode
_TAIL_SIGMAS = 12.0


def _stirlerr(k: np.ndarray) -> np.ndarray:
    """``log(k!) - [(k + 1/2) log k - k + log sqrt(2 pi)]``."""
    k = np.asarray(k, dtype=float)
    out = np.empty_like(k)
    small = k < 15.0
    ks = k[small]
    with np.errstate(divide="ignore", invalid="ignore"):
        out[small] = gammaln(ks + 1.0) - (ks + 0.5) * np.log(ks) + ks - _LOG_SQRT_2PI
    kl = k[~small]
    inv = 1.0 / kl
    inv2 = inv * inv
    out[~small] = inv * (1 / 12 - inv2 * (1 / 360 - inv2 * (1 / 1260 - inv2 * (1 / 1680))))
    return out


def _bd0(k: np.ndarray, m: float) -> np.ndarray:
    """Deviance term ``k log(k/m) + m - k`` without cancellation."""
    k = np.asarray(k, dtype=float)
    out = np.empty_like(k)
    v = (k - m) / (k + m)
    near = np.abs(v) < 0.1
    # series in v = (k-m)/(k+m) for k close to m
    kn, vn = k[near], v[near]
    acc = (kn - m) * vn
    term = 2.0 * kn * vn
    v2 = vn * vn
    j = 1
    while True:
        term = term * v2
        inc = term / (2 * j + 1)
        acc = acc + inc
        j += 1
        if not np.any(np.abs(inc) > 1e-17 * np.abs(acc)) or j > 200:
            break
    out[near] = acc
    kf = k[~near]
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~near] = np.where(kf > 0, kf * np.log(kf / m), 0.0) + m - kf
    return out


def poisson_log_pmf(k, mean: float) -> np.ndarray:
    """``log(exp(-m) m^k / k!)`` accurate to a few ulp for means up to ~1e12."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if mean == 0.0:
        return np.where(k == 0, 0.0, -np.inf)
    out = np.empty_like(k)
    zero = k == 0
    out[zero] = -mean
    kp = k[~zero]
    out[~zero] = -_LOG_SQRT_2PI - 0.5 * np.log(kp) - _stirlerr(kp) - _bd0(kp, mean)
    return out


def poisson_window_mass(mean: float, lo: float, hi: float) -> float:
    """Poisson(mean) probability of the integer interval ``[lo, hi]``.

    ``hi`` may be ``math.inf``.  Terms are evaluated in log space and summed
    over the part of the interval within ``12 sqrt(mean) + 30`` of the mean;
    everything outside contributes less than 1e-18 relative.
    """
    if mean < 0:
        raise ValueError(f"mean must be nonnegative, got {mean!r}")
    lo = max(math.ceil(lo), 0)
    hi = math.floor(hi) if math.isfinite(hi) else math.inf
    if lo > hi:
        return 0.0
    if mean == 0.0:
        return 1.0 if lo == 0 else 0.0
    spread = _TAIL_SIGMAS * math.sqrt(mean) + 30.0
    k_lo = max(lo, math.floor(mean - spread), 0)
    k_hi = min(hi, math.ceil(mean + spread))
    if k_lo > k_hi:
        return 0.0
    k = np.arange(k_lo, k_hi + 1, dtype=float)
    return float(min(1.0, np.exp(poisson_log_pmf(k, mean)).sum()))


@dataclass(frozen=True)
class Observables:
    """Measured rates, all normalized by the number of signals sent.

    ``fil_win`` counts conclusive events with D1 inside its interval,
    ``vac_win`` vacuum events on D2/D3 with D1 inside, ``bit_win`` and
    ``bit_all`` the bit errors with and without the D1 condition.
    """

    fil_all: float
    fil_win: float
    vac_win: float
    bit_win: float
    bit_all: float

    @property
    def eta_tilde(self) -> float:
        """Lower bound on the qubit-survival rate."""
        return self.vac_win + self.fil_win

    def as_dict(self) -> dict[str, float]:
        return {
            "fil_all": self.fil_all,
            "fil_win": self.fil_win,
            "vac_win": self.vac_win,
            "bit_win": self.bit_win,
            "bit_all": self.bit_all,
        }


def d1_mass(params: ProtocolParams, channel: ChannelParams, window: PhotonWindow) -> float:
    lo, hi = window.d1
    return poisson_window_mass(channel.eta * (params.mu - params.kappa), lo, hi)


def analytic_observables(
    params: ProtocolParams, channel: ChannelParams, window: PhotonWindow
) -> Observables:
    eta, p = channel.eta, channel.p
    ek = eta * params.kappa
    mass = d1_mass(params, channel, window)
    fil_all = math.exp(-2.0 * ek) * 2.0 * ek * (1.0 - p) + math.exp(-ek) * p
    bit_all = math.exp(-ek) * p / 2.0
    return Observables(
        fil_all=fil_all,
        fil_win=fil_all * mass,
        vac_win=math.exp(-2.0 * ek) * (1.0 - p) * mass,
        bit_win=bit_all * mass,
        bit_all=bit_all,
    )
