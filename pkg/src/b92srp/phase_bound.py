"""Phase-error upper bound, key rate, distance scans.

The unknown phase-error rate enters both bound vectors in the same slot,
so the argument of ``g`` is affine in it::

    v(ph) = C'+ Z_U(0) - C'- Z_L(0) + ph * C'[:, 3]

A trial value is admissible when every entry of ``v`` is nonnegative and
``lhs <= 2 G alpha beta g(v)`` holds at ``nu_f``.  The right-hand side is
not monotone in ``ph``, so the largest admissible value is located by a
full grid scan followed by bisection on the last admissible cell.
"""

from __future__ import annotations

import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import InvalidRegimeError
from .matrices import RateVector, c_prime
from .observables import Observables, analytic_observables
from .params import (
    ChannelParams,
    PhotonWindow,
    ProtocolParams,
    alice_nonorthogonality,
    make_window,
    qubit_constants,
)

log = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 2**16
DEFAULT_RTOL = 1e-6


class ClampWarning(UserWarning):
    """A lower bound went negative and was raised to zero."""


@dataclass(frozen=True)
class BoundAssembly:
    """Entrywise bounds ``Z_L <= Z_lambda <= Z_U`` with the phase slot left free.

    The ``ph`` entries of ``z_upper``/``z_lower`` are placeholders (zero);
    the solver substitutes each trial value into both.
    """

    z_upper: RateVector
    z_lower: RateVector
    eta_tilde: float
    eta_tilde_test: float
    lhs: float

    def upper(self, ph: float) -> np.ndarray:
        return replace(self.z_upper, ph=ph).as_array()

    def lower(self, ph: float) -> np.ndarray:
        return replace(self.z_lower, ph=ph).as_array()


def assemble_bounds(
    obs: Observables, alpha_tilde_sq: float, eta_tilde_test: float | None = None
) -> BoundAssembly:
    """Build ``Z_U = (1, a~^2, fil_all, .)`` and ``Z_L = (eta~, a~^2 - 1 + eta~(t), fil_win, .)``.

    Without ``eta_tilde_test`` the code-pair ``eta~`` is used in its place.
    """
    eta_tilde = obs.eta_tilde
    eta_t = eta_tilde if eta_tilde_test is None else eta_tilde_test
    return build_assembly(
        s_lower=eta_tilde,
        one_x_upper=alpha_tilde_sq,
        one_x_lower=alpha_tilde_sq - 1.0 + eta_t,
        fil_upper=obs.fil_all,
        fil_lower=obs.fil_win,
        lhs=obs.fil_win - 2.0 * obs.bit_all,
        eta_tilde=eta_tilde,
        eta_tilde_test=eta_t,
    )


def build_assembly(
    *,
    s_lower: float,
    one_x_upper: float,
    one_x_lower: float,
    fil_upper: float,
    fil_lower: float,
    lhs: float,
    eta_tilde: float,
    eta_tilde_test: float,
) -> BoundAssembly:
    if one_x_lower < 0.0:
        warnings.warn(
            f"lower bound on the 1x rate is negative ({one_x_lower:.3g}); using 0",
            ClampWarning,
            stacklevel=3,
        )
        one_x_lower = 0.0
    return BoundAssembly(
        z_upper=RateVector(1.0, one_x_upper, fil_upper, 0.0),
        z_lower=RateVector(s_lower, one_x_lower, fil_lower, 0.0),
        eta_tilde=eta_tilde,
        eta_tilde_test=eta_tilde_test,
        lhs=lhs,
    )


@dataclass(frozen=True)
class PhaseSolution:
    phase_bound: float
    feasible: bool


def _admissible(ph: np.ndarray, base: np.ndarray, slope: np.ndarray, lhs: float, k: float):
    v = base[:, None] + slope[:, None] * ph[None, :]
    nonneg = np.all(v >= 0.0, axis=0)
    vc = np.maximum(v, 0.0)
    rhs = k * (np.sqrt(vc[0] * vc[3]) + np.sqrt(vc[1] * vc[2]))
    return nonneg & (lhs <= rhs)


def solve_phase_bound(
    assembly: BoundAssembly,
    c_split: tuple[np.ndarray, np.ndarray],
    q_f,
    fil_win: float,
    *,
    grid_points: int = DEFAULT_GRID_POINTS,
    rtol: float = DEFAULT_RTOL,
) -> PhaseSolution:
    """Largest phase-error rate in ``[0, fil_win]`` compatible with the bound.

    A trial whose ``g`` argument has a negative entry is rejected: the true
    vector satisfies ``v >= C' Z_lambda >= sum_nu C_nu Z_nu >= 0``, so such a
    trial cannot be the actual rate.

    Returns ``fil_win`` with ``feasible=False`` when nothing is admissible,
    and ``fil_win`` when the left-hand side is nonpositive.
    """
    if fil_win <= 0.0:
        return PhaseSolution(0.0, False)
    if assembly.lhs <= 0.0:
        return PhaseSolution(fil_win, True)
    c_plus, c_minus = c_split
    base = c_plus @ assembly.upper(0.0) - c_minus @ assembly.lower(0.0)
    slope = c_plus[:, 3] - c_minus[:, 3]
    k = 2.0 * q_f.prefactor

    grid = np.linspace(0.0, fil_win, grid_points + 1)
    ok = _admissible(grid, base, slope, assembly.lhs, k)
    if not ok.any():
        return PhaseSolution(fil_win, False)
    j = int(np.flatnonzero(ok)[-1])
    if j == grid_points:
        return PhaseSolution(fil_win, True)
    lo, hi = grid[j], grid[j + 1]
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if _admissible(np.array([mid]), base, slope, assembly.lhs, k)[0]:
            lo = mid
        else:
            hi = mid
    return PhaseSolution(float(hi), True)


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def key_rate(fil_win: float, bit_win: float, phase_bound: float) -> float:
    """``max(0, fil_win [1 - h(bit/fil) - h(ph/fil)])``.

    Error ratios are capped at 1/2 before entering ``h``: a bound of 1/2 or
    more carries no information and must not turn into a full-rate key
    through ``h(1) = 0``.
    """
    if fil_win <= 0.0:
        return 0.0
    eb = min(bit_win / fil_win, 0.5)
    ep = min(phase_bound / fil_win, 0.5)
    return max(0.0, fil_win * (1.0 - binary_entropy(eb) - binary_entropy(ep)))


@dataclass(frozen=True)
class KeyRateResult:
    phase_bound: float
    key_rate: float
    feasible: bool


@dataclass(frozen=True)
class PointResult:
    """One row of a distance scan."""

    l: float
    eta: float
    window: PhotonWindow | None
    observables: Observables | None
    phase_bound: float
    key_rate: float
    feasible: bool
    note: str = field(default="", compare=False)


def estimate_key_rate(
    params: ProtocolParams,
    window: PhotonWindow,
    assembly: BoundAssembly,
    fil_win: float,
    bit_win: float,
    *,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> KeyRateResult:
    _, c_plus, c_minus = c_prime(params.R, window)
    q_f = qubit_constants(params.R, window.nu_f)
    sol = solve_phase_bound(assembly, (c_plus, c_minus), q_f, fil_win, grid_points=grid_points)
    rate = key_rate(fil_win, bit_win, sol.phase_bound) if sol.feasible else 0.0
    return KeyRateResult(sol.phase_bound, rate, sol.feasible)


def evaluate_point(
    params: ProtocolParams,
    channel: ChannelParams,
    *,
    two_eta: bool = False,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> PointResult:
    """Full asymptotic pipeline at one distance.

    With ``two_eta`` the test-pair survival rate is supplied separately; for
    the analytic channel it equals the code-pair value.
    """
    eta = channel.eta
    try:
        window = make_window(params, channel)
    except InvalidRegimeError as exc:
        return PointResult(channel.l, eta, None, None, 0.0, 0.0, False, note=str(exc))
    obs = analytic_observables(params, channel, window)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        assembly = assemble_bounds(
            obs,
            alice_nonorthogonality(params.kappa),
            obs.eta_tilde if two_eta else None,
        )
    res = estimate_key_rate(params, window, assembly, obs.fil_win, obs.bit_win, grid_points=grid_points)
    return PointResult(channel.l, eta, window, obs, res.phase_bound, res.key_rate, res.feasible)


def _default_workers() -> int:
    raw = os.environ.get("B92_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer B92_THREADS=%r", raw)
    return 1


def scan_distance(
    params: ProtocolParams,
    channel_template: ChannelParams,
    l_grid: Sequence[float],
    *,
    two_eta: bool = False,
    workers: int | None = None,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> list[PointResult]:
    """Evaluate the pipeline at each distance; rows come back in grid order."""
    workers = _default_workers() if workers is None else workers

    def run(l: float) -> PointResult:
        return evaluate_point(params, channel_template.at(l), two_eta=two_eta, grid_points=grid_points)

    if workers <= 1 or len(l_grid) < 2:
        return [run(l) for l in l_grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, l_grid))


def find_achievable_distance(
    params: ProtocolParams,
    channel_template: ChannelParams,
    *,
    l_max: float = 400.0,
    coarse_step: float = 5.0,
    tol: float = 0.1,
    two_eta: bool = False,
) -> float:
    """Largest distance with a positive key rate, to within ``tol`` km.

    A coarse scan brackets the first transition from positive to zero rate;
    bisection then refines it.  Returns 0 when the rate vanishes at ``l = 0``.
    """

    def positive(l: float) -> bool:
        return evaluate_point(params, channel_template.at(l), two_eta=two_eta).key_rate > 0.0

    if not positive(0.0):
        return 0.0
    grid = np.arange(coarse_step, l_max + coarse_step / 2, coarse_step)
    flags = [positive(float(l)) for l in grid]
    if all(flags):
        log.warning("key rate still positive at l_max=%g km", l_max)
        return float(l_max)
    first_zero = flags.index(False)
    if any(flags[first_zero:]):
        log.warning("positive-rate region is not contiguous; using the first crossing")
    lo = 0.0 if first_zero == 0 else float(grid[first_zero - 1])
    hi = float(grid[first_zero])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            lo = mid
        else:
            hi = mid
    return lo
