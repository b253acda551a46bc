"""Finite-block corrections from Azuma's inequality.

For ``N`` pairs with test fraction ``t`` the deviation between an observed
rate and the sum of conditional probabilities exceeds ``eps`` with
probability at most ``2 exp(-N (1-t)^2 eps^2 / 2)`` on code pairs and
``2 exp(-N t^2 eps^2 / 2)`` on test pairs.  Solving for ``eps`` at failure
probability ``delta`` gives the widths used here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal

from .observables import Observables
from .params import PhotonWindow, ProtocolParams, alice_nonorthogonality
from .phase_bound import (
    DEFAULT_GRID_POINTS,
    ClampWarning,
    KeyRateResult,
    build_assembly,
    estimate_key_rate,
    key_rate,
)

# fil_win, fil_all, bit_all, eta_tilde, alpha_tilde^2
MONITORED_QUANTITIES = 5


def deviation(n_pairs: float, t: float, delta: float, population: Literal["code", "test"]) -> float:
    """Smallest ``eps`` whose Azuma tail bound is at most ``delta``."""
    if not n_pairs >= 1:
        raise ValueError("n_pairs must be >= 1")
    if not 0.0 < t < 1.0:
        raise ValueError("t must lie in (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if math.isinf(n_pairs):
        return 0.0
    base = math.sqrt(2.0 * math.log(2.0 / delta) / n_pairs)
    if population == "code":
        return base / (1.0 - t)
    if population == "test":
        return base / t
    raise ValueError(f"population must be 'code' or 'test', got {population!r}")


@dataclass(frozen=True)
class AzumaBudget:
    n_pairs: float
    t: float
    delta: float

    @property
    def epsilon_code(self) -> float:
        return deviation(self.n_pairs, self.t, self.delta, "code")

    @property
    def epsilon_test(self) -> float:
        return deviation(self.n_pairs, self.t, self.delta, "test")

    @property
    def total_failure(self) -> float:
        """Union bound over the monitored quantities."""
        return MONITORED_QUANTITIES * self.delta


def _clip(x: float) -> float:
    return min(1.0, max(0.0, x))


def finite_size_key_rate(
    obs: Observables,
    budget: AzumaBudget,
    params: ProtocolParams,
    window: PhotonWindow,
    *,
    eta_tilde_test: float | None = None,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> KeyRateResult:
    """Key rate with every bound widened by its Azuma deviation.

    Code-pair rates move by ``epsilon_code`` and test-pair quantities
    (``alpha~^2`` and the test-pair survival rate) by ``epsilon_test``, each
    in the direction that loosens the phase-error estimate.  The solved
    bound refers to the conditional-probability sum, so the actual phase
    error count is allowed a further ``epsilon_code`` on top.
    """
    ec, et = budget.epsilon_code, budget.epsilon_test
    a2 = alice_nonorthogonality(params.kappa)
    eta_tilde = _clip(obs.eta_tilde - ec)
    if eta_tilde_test is None:
        eta_t = eta_tilde
    else:
        eta_t = _clip(eta_tilde_test - et)
    fil_lower = _clip(obs.fil_win - ec)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        assembly = build_assembly(
            s_lower=eta_tilde,
            one_x_upper=_clip(a2 + et),
            one_x_lower=(a2 - et) - 1.0 + eta_t,
            fil_upper=_clip(obs.fil_all + ec),
            fil_lower=fil_lower,
            lhs=fil_lower - 2.0 * _clip(obs.bit_all + ec),
            eta_tilde=eta_tilde,
            eta_tilde_test=eta_t,
        )
    res = estimate_key_rate(
        params, window, assembly, obs.fil_win, obs.bit_win, grid_points=grid_points
    )
    if not res.feasible:
        return res
    phase = min(obs.fil_win, res.phase_bound + ec)
    return KeyRateResult(phase, key_rate(obs.fil_win, obs.bit_win, phase), True)
