"""Event-level sampling of detector outcomes under the loss plus dark-count channel.

Each trial draws the D1 count and the D2/D3 photon numbers directly from
their Poisson laws; coherent light on the detectors has exactly Poissonian
counts, so no Fock-space amplitudes are needed.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np
from scipy import stats

from .observables import Observables
from .params import ChannelParams, PhotonWindow, ProtocolParams

SHARD_SIZE = 1_000_000


@dataclass(frozen=True)
class TrialTally:
    fil_all: int
    fil_win: int
    vac_win: int
    bit_win: int
    bit_all: int
    n_trials: int
    seed: int

    def rates(self) -> Observables:
        n = self.n_trials
        return Observables(
            fil_all=self.fil_all / n,
            fil_win=self.fil_win / n,
            vac_win=self.vac_win / n,
            bit_win=self.bit_win / n,
            bit_all=self.bit_all / n,
        )

    def __add__(self, other: "TrialTally") -> "TrialTally":
        counts = {
            f.name: getattr(self, f.name) + getattr(other, f.name)
            for f in fields(self)
            if f.name != "seed"
        }
        return TrialTally(**counts, seed=self.seed)


def _simulate_shard(
    rng: np.random.Generator,
    n: int,
    eta: float,
    mu: float,
    kappa: float,
    p: float,
    d1_lo: int,
    d1_hi: int,
) -> np.ndarray:
    ek = eta * kappa
    d1 = rng.poisson(eta * (mu - kappa), size=n)
    in_win = (d1 >= d1_lo) & (d1 <= d1_hi)
    dark = rng.random(n) < p

    # loss branch: all signal light lands on the detector matching Alice's bit
    clicks = rng.poisson(2.0 * ek, size=n)
    loss = ~dark
    loss_fil = loss & (clicks == 1)
    loss_vac = loss & (clicks == 0)

    # dark branch: one photon at a random detector plus Poisson(eta kappa) from W
    w = rng.poisson(ek, size=n)
    dark_fil = dark & (w == 0)
    flip = rng.random(n) < 0.5
    dark_err = dark_fil & flip

    fil = loss_fil | dark_fil
    return np.array(
        [
            np.count_nonzero(fil),
            np.count_nonzero(fil & in_win),
            np.count_nonzero(loss_vac & in_win),
            np.count_nonzero(dark_err & in_win),
            np.count_nonzero(dark_err),
        ],
        dtype=np.int64,
    )


def simulate(
    params: ProtocolParams,
    channel: ChannelParams,
    window: PhotonWindow,
    n_trials: int,
    seed: int,
    *,
    workers: int = 1,
) -> TrialTally:
    """Tally detector outcomes over ``n_trials`` pulses.

    Trials are split into shards of fixed size, each with its own generator
    spawned from ``seed``, so the result does not depend on ``workers``.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    sizes = [SHARD_SIZE] * (n_trials // SHARD_SIZE)
    if n_trials % SHARD_SIZE:
        sizes.append(n_trials % SHARD_SIZE)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    d1_lo, d1_hi = window.d1
    args = (channel.eta, params.mu, params.kappa, channel.p, d1_lo, d1_hi)

    def run(i: int) -> np.ndarray:
        return _simulate_shard(np.random.default_rng(seqs[i]), sizes[i], *args)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    total = np.sum(parts, axis=0)
    return TrialTally(*(int(x) for x in total), n_trials=n_trials, seed=seed)


@dataclass(frozen=True)
class Comparison:
    name: str
    empirical: float
    analytic: float
    stderr: float
    z: float
    lower: float
    upper: float
    passed: bool


def compare(tally: TrialTally, analytic: Observables, n_sigma: float = 3.0) -> list[Comparison]:
    """Compare each empirical rate with its analytic value.

    ``z`` is the binomial z-score using the analytic rate.  The pass flag
    asks whether the analytic rate lies inside the exact Clopper-Pearson
    interval with the two-sided coverage of ``n_sigma`` normal standard
    deviations; for large counts this agrees with ``|z| <= n_sigma`` and for
    a handful of trials it does not raise spurious failures.
    """
    alpha = 2.0 * stats.norm.sf(n_sigma)
    n = tally.n_trials
    counts = {k: getattr(tally, k) for k in analytic.as_dict()}
    out = []
    for name, r in analytic.as_dict().items():
        k = counts[name]
        emp = k / n
        se = math.sqrt(max(r * (1.0 - r), 0.0) / n)
        diff = emp - r
        if se > 0:
            z = diff / se
        else:
            z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
        lo = 0.0 if k == 0 else float(stats.beta.ppf(alpha / 2, k, n - k + 1))
        hi = 1.0 if k == n else float(stats.beta.ppf(1 - alpha / 2, k + 1, n - k))
        out.append(Comparison(name, emp, r, se, z, lo, hi, lo <= r <= hi))
    return out
