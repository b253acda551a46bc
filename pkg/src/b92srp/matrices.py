"""The 4x4 matrix machinery behind the phase-error inequality.

Rate vectors are ordered ``(s, 1x, fil, ph)`` throughout.  ``C_nu^-1`` maps
the diagonal ``(n00, n01, n10, n11)`` of a joint state in the X basis onto
that rate vector, so ``C_nu Z_nu`` recovers the (nonnegative) diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, InvalidRegimeError
from .params import PhotonWindow, QubitConstants, check_window_regime, qubit_constants

RATE_ORDER = ("s", "one_x", "fil", "ph")


@dataclass(frozen=True)
class RateVector:
    s: float
    one_x: float
    fil: float
    ph: float

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.one_x, self.fil, self.ph], dtype=float)

    @classmethod
    def from_array(cls, v) -> "RateVector":
        s, one_x, fil, ph = (float(x) for x in v)
        return cls(s, one_x, fil, ph)


def g_function(v, atol: float = 0.0) -> float:
    """``sqrt(a d) + sqrt(b c)`` for ``v = (a, b, c, d)``.

    Entries in ``[-atol, 0)`` are read as zero (rounding noise).

    Raises:
        InfeasibleError: if any entry is below ``-atol``.
    """
    a, b, c, d = (float(x) for x in v)
    if min(a, b, c, d) < -atol:
        raise InfeasibleError(f"g is undefined for negative entries: {(a, b, c, d)}")
    a, b, c, d = (max(x, 0.0) for x in (a, b, c, d))
    return math.sqrt(a * d) + math.sqrt(b * c)


def c_inverse(q: QubitConstants) -> np.ndarray:
    Ga, Gb = q.G_nu * q.alpha_sq, q.G_nu * q.beta_sq
    return np.array(
        [
            [1.0, 1.0, 1.0, 1.0],
            [0.0, 0.0, 1.0, 1.0],
            [Ga, Gb, Ga, Gb],
            [0.0, Gb, Ga, 0.0],
        ]
    )


def _entries(G, a2, b2) -> dict:
    d = b2 - a2
    return {
        "b4/d": b2 * b2 / d,
        "a4/d": a2 * a2 / d,
        "a2b2/d": a2 * b2 / d,
        "a2/Gd": a2 / (G * d),
        "b2/Gd": b2 / (G * d),
        "a2": a2,
        "b2": b2,
        "1/G": 1.0 / G,
    }


def c_matrix(q: QubitConstants) -> np.ndarray:
    """Explicit inverse of :func:`c_inverse`, valid while ``beta^2 > alpha^2``."""
    if not q.beta_sq > q.alpha_sq:
        raise InvalidRegimeError(f"nu*R >= 1 at nu={q.nu}: C_nu is singular")
    e = _entries(q.G_nu, q.alpha_sq, q.beta_sq)
    return np.array(
        [
            [e["b4/d"], -e["b2"], -e["a2/Gd"], -e["1/G"]],
            [-e["a4/d"], -e["a2"], e["a2/Gd"], e["1/G"]],
            [e["a2b2/d"], e["b2"], -e["b2/Gd"], e["1/G"]],
            [-e["a2b2/d"], e["a2"], e["b2/Gd"], -e["1/G"]],
        ]
    )


def c_prime_closed_form(R: float, window: PhotonWindow) -> np.ndarray:
    """Entry-wise maximum of ``C_nu`` over the window, from the edge values.

    Each entry is monotone in ``nu`` inside the valid regime, so its maximum
    sits at ``nu_i`` or ``nu_f``.
    """
    check_window_regime(R, window)
    qi, qf = qubit_constants(R, window.nu_i), qubit_constants(R, window.nu_f)
    i = _entries(qi.G_nu, qi.alpha_sq, qi.beta_sq)
    f = _entries(qf.G_nu, qf.alpha_sq, qf.beta_sq)
    return np.array(
        [
            [f["b4/d"], -f["b2"], -i["a2/Gd"], -i["1/G"]],
            [-i["a4/d"], -i["a2"], f["a2/Gd"], f["1/G"]],
            [f["a2b2/d"], i["b2"], -i["b2/Gd"], f["1/G"]],
            [-i["a2b2/d"], f["a2"], f["b2/Gd"], -i["1/G"]],
        ]
    )


def c_matrices(R: float, nus) -> np.ndarray:
    """``C_nu`` for every ``nu`` in ``nus``, shape ``(len(nus), 4, 4)``."""
    nu = np.asarray(nus, dtype=float)
    if np.any(nu * R >= 1.0):
        raise InvalidRegimeError("nu*R >= 1: C_nu is singular")
    x = nu * R
    G = np.exp((nu - 1.0) * np.log1p(-R)) * (1.0 + x)
    e = _entries(G, x / (1.0 + x), 1.0 / (1.0 + x))
    stack = np.array(
        [
            [e["b4/d"], -e["b2"], -e["a2/Gd"], -e["1/G"]],
            [-e["a4/d"], -e["a2"], e["a2/Gd"], e["1/G"]],
            [e["a2b2/d"], e["b2"], -e["b2/Gd"], e["1/G"]],
            [-e["a2b2/d"], e["a2"], e["b2/Gd"], -e["1/G"]],
        ]
    )
    return np.moveaxis(stack, -1, 0)


def c_prime_brute_force(R: float, window: PhotonWindow) -> np.ndarray:
    """Entry-wise maximum of ``C_nu`` evaluated at every ``nu`` in the window."""
    return c_matrices(R, np.arange(window.nu_i, window.nu_f + 1)).max(axis=0)


def split_signs(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(M+, M-)`` with ``M = M+ - M-`` and both parts entrywise nonnegative."""
    plus = np.where(m > 0.0, m, 0.0)
    return plus, plus - m


def c_prime(R: float, window: PhotonWindow, *, verify: bool = False):
    """Return ``(C', C'+, C'-)`` for the window.

    With ``verify=True`` the closed form is checked against the brute-force
    maximum and an ``AssertionError`` is raised on mismatch.
    """
    cp = c_prime_closed_form(R, window)
    if verify:
        bf = c_prime_brute_force(R, window)
        if not np.allclose(cp, bf, rtol=1e-12, atol=0.0):
            raise AssertionError("closed-form C' disagrees with the brute-force maximum")
    plus, minus = split_signs(cp)
    return cp, plus, minus


def per_nu_bound_gap(q: QubitConstants, z, bit_rate: float, atol: float = 0.0) -> float:
    """``2 G alpha beta g(C_nu z) - (z.fil - 2 bit_rate)``; nonnegative when satisfied."""
    zv = z.as_array() if isinstance(z, RateVector) else np.asarray(z, dtype=float)
    rhs = 2.0 * q.prefactor * g_function(c_matrix(q) @ zv, atol=atol)
    return rhs - (zv[2] - 2.0 * bit_rate)
