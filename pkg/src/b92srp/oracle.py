"""Exact per-photon-number joint states for the loss plus dark-count channel.

For each total photon number ``nu`` the state of Alice's qubit and Bob's
qubit space ``span{|0,nu>, |1,nu-1>}`` is an unnormalized real 4x4 matrix
in the basis ``|i_x>_A |i'_x>_B`` (index ``2 i + i'``).  Loss acts as a
beam splitter whose reflected light is lost, so the coherence between
Alice's two signal states drops by ``exp(-2 (1 - eta) kappa)`` and her
reduced state is untouched by the channel.

Amplitudes come from log-space Poisson weights; intended for desk-scale
reference intensities (``eta mu`` up to ~1e5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .matrices import c_inverse, c_matrices, c_prime_closed_form
from .observables import poisson_log_pmf
from .params import ChannelParams, PhotonWindow, ProtocolParams, make_window, qubit_constants
from .phase_bound import key_rate
from .errors import InvalidRegimeError

_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
_U = np.kron(_H, np.eye(2))
_MIN_WEIGHT = 1e-300


@dataclass(frozen=True)
class JointQubitState:
    nu: int
    matrix: np.ndarray

    @property
    def weight(self) -> float:
        return float(np.trace(self.matrix))


def joint_states(params: ProtocolParams, channel: ChannelParams, nus) -> np.ndarray:
    """Stack of joint states for every ``nu`` in ``nus``, shape ``(n, 4, 4)``."""
    nus = np.asarray(nus, dtype=float)
    if np.any(nus < 1):
        raise ValueError("nu must be >= 1")
    eta, p, kappa = channel.eta, channel.p, params.kappa
    ek = eta * kappa
    m = eta * params.mu
    log_p_nu = poisson_log_pmf(nus, m)
    log_p_prev = poisson_log_pmf(nus - 1.0, m)
    amp0 = np.exp(0.5 * (log_p_nu - ek))
    amp1 = np.exp(0.5 * (log_p_prev - ek + math.log(ek))) if ek > 0 else np.zeros_like(nus)

    # loss branch, Alice in Z basis: (1/2) sum_ij c_ij |i><j| (x) phi_i phi_j^T
    phi = np.stack(
        [np.stack([amp0, amp1], axis=-1), np.stack([amp0, -amp1], axis=-1)], axis=1
    )  # (n, i, b)
    coh = math.exp(-2.0 * (1.0 - eta) * kappa)
    c = np.array([[1.0, coh], [coh, 1.0]])
    loss = 0.5 * np.einsum("ij,nib,njc->nibjc", c, phi, phi).reshape(-1, 4, 4)

    overlap = math.exp(-2.0 * kappa)
    rho_a = 0.5 * np.array([[1.0, overlap], [overlap, 1.0]])
    one_x = np.array([[0.0, 0.0], [0.0, 1.0]])
    dark = np.exp(log_p_prev)[:, None, None] * np.kron(rho_a, one_x)[None]

    rho_z = (1.0 - p) * loss + p * dark
    out = _U @ rho_z @ _U.T
    out[np.trace(out, axis1=1, axis2=2) < _MIN_WEIGHT] = 0.0
    return out


def joint_state(params: ProtocolParams, channel: ChannelParams, nu: int) -> JointQubitState:
    return JointQubitState(int(nu), joint_states(params, channel, [nu])[0])


def gamma_vectors(alpha, beta) -> np.ndarray:
    """Rows ``|Gamma_00>, |Gamma_01>, |Gamma_10>, |Gamma_11>`` (broadcasts over nu).

    ``|Gamma_ii'> = (-1)^(i i') beta |i, i'> + (-1)^(i' (i+1)) alpha |i+1, i'+1>``
    (indices mod 2).  This sign pattern is the one for which
    ``(G/2)(m_11 + m_01)`` equals the bit-error POVM expectation.
    """
    a, b = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(beta, float))
    z = np.zeros_like(a)
    return np.stack(
        [
            np.stack([b, z, z, a], axis=-1),
            np.stack([z, b, -a, z], axis=-1),
            np.stack([z, a, b, z], axis=-1),
            np.stack([a, z, z, -b], axis=-1),
        ],
        axis=-2,
    )


@dataclass(frozen=True)
class ErrorDecomposition:
    """Per-nu diagonal elements and derived rates (arrays over nu)."""

    nus: np.ndarray
    n: np.ndarray  # (k, 4): n00, n01, n10, n11
    m: np.ndarray  # (k, 4): m00, m01, m10, m11
    G: np.ndarray
    alpha_sq: np.ndarray
    beta_sq: np.ndarray

    @property
    def n_s(self):
        return self.n.sum(axis=-1)

    @property
    def n_1x(self):
        return self.n[:, 2] + self.n[:, 3]

    @property
    def n_fil(self):
        n = self.n
        return self.G * (self.alpha_sq * (n[:, 0] + n[:, 2]) + self.beta_sq * (n[:, 1] + n[:, 3]))

    @property
    def n_ph(self):
        return self.G * (self.alpha_sq * self.n[:, 2] + self.beta_sq * self.n[:, 1])

    @property
    def n_bit(self):
        return 0.5 * self.G * (self.m[:, 3] + self.m[:, 1])

    def z_vectors(self) -> np.ndarray:
        """``(n_s, n_1x, n_fil, n_ph)`` per nu, shape ``(k, 4)``."""
        return np.stack([self.n_s, self.n_1x, self.n_fil, self.n_ph], axis=-1)


def error_decomposition(states: np.ndarray, R: float, nus) -> ErrorDecomposition:
    nus = np.atleast_1d(np.asarray(nus, dtype=float))
    states = np.asarray(states).reshape(-1, 4, 4)
    x = nus * R
    G = np.exp((nus - 1.0) * np.log1p(-R)) * (1.0 + x)
    a2, b2 = x / (1.0 + x), 1.0 / (1.0 + x)
    n = np.einsum("nii->ni", states)
    gam = gamma_vectors(np.sqrt(a2), np.sqrt(b2))
    m = np.einsum("nka,nab,nkb->nk", gam, states, gam)
    return ErrorDecomposition(nus, n, m, G, a2, b2)


def povm_elements(q) -> dict[str, np.ndarray]:
    """POVM elements ``F_s, F_1x, F_fil, F_ph, F_bit`` on the 4-dim joint space.

    Built from their operator definitions (filter Kraus operator, Bob's
    conclusive POVM, Alice's projectors); independent of ``C_nu^-1``.
    """
    a, b, G = q.alpha, q.beta, q.G_nu
    P = lambda v: np.outer(v, v)
    e0, e1 = np.eye(2)
    z0 = (e0 + e1) / math.sqrt(2.0)
    z1 = (e0 - e1) / math.sqrt(2.0)
    A_s = math.sqrt(G) * (a * P(e0) + b * P(e1))
    F_bob = [0.5 * G * P(a * e0 + (-1) ** i * b * e1) for i in (0, 1)]
    I2 = np.eye(2)
    return {
        "s": np.eye(4),
        "one_x": np.kron(P(e1), I2),
        "fil": np.kron(I2, A_s.T @ A_s),
        "ph": np.kron(P(e0), P(A_s.T @ e1)) + np.kron(P(e1), P(A_s.T @ e0)),
        "bit": np.kron(P(z0), F_bob[1]) + np.kron(P(z1), F_bob[0]),
    }


def rates_via_povm(rho: np.ndarray, q) -> dict[str, float]:
    return {k: float(np.trace(rho @ F)) for k, F in povm_elements(q).items()}


def rates_via_matrix(rho: np.ndarray, q) -> np.ndarray:
    """``C_nu^-1 (n00, n01, n10, n11)``."""
    return c_inverse(q) @ np.diag(rho)


def bloch_angles(dec: ErrorDecomposition):
    """``(theta, theta0, phi0, theta1, phi1)`` per nu from the diagonal elements."""
    n, m = dec.n, dec.m
    with np.errstate(invalid="ignore", divide="ignore"):
        th0 = np.arcsin(np.sqrt(n[:, 3] / (n[:, 3] + n[:, 0])))
        ph0 = np.arcsin(np.sqrt(m[:, 3] / (m[:, 3] + m[:, 0])))
        th1 = np.arcsin(np.sqrt(n[:, 1] / (n[:, 1] + n[:, 2])))
        ph1 = np.arcsin(np.sqrt(m[:, 1] / (m[:, 1] + m[:, 2])))
    th = np.arcsin(np.sqrt(dec.alpha_sq))
    return th, th0, ph0, th1, ph1


@dataclass(frozen=True)
class OracleRates:
    """Actual rates of the channel, aggregated over photon-number ranges."""

    fil_all: float
    fil_win: float
    bit_win: float
    ph_win: float  # over lambda'
    s_full: float  # over lambda
    one_x_full: float
    fil_full: float
    bit_full: float
    ph_full: float


def _all_nus(params: ProtocolParams, channel: ChannelParams) -> np.ndarray:
    m = channel.eta * params.mu
    spread = 12.0 * math.sqrt(m) + 30.0
    return np.arange(max(1, math.floor(m - spread)), math.ceil(m + spread) + 2)


def oracle_rates(params: ProtocolParams, channel: ChannelParams, window: PhotonWindow) -> OracleRates:
    nus = _all_nus(params, channel)
    dec = error_decomposition(joint_states(params, channel, nus), params.R, nus)
    prime = (nus >= window.nu_i + 1) & (nus <= window.nu_f)
    full = (nus >= window.nu_i) & (nus <= window.nu_f)
    return OracleRates(
        fil_all=float(dec.n_fil.sum()),
        fil_win=float(dec.n_fil[prime].sum()),
        bit_win=float(dec.n_bit[prime].sum()),
        ph_win=float(dec.n_ph[prime].sum()),
        s_full=float(dec.n_s[full].sum()),
        one_x_full=float(dec.n_1x[full].sum()),
        fil_full=float(dec.n_fil[full].sum()),
        bit_full=float(dec.n_bit[full].sum()),
        ph_full=float(dec.n_ph[full].sum()),
    )


def window_decomposition(params: ProtocolParams, channel: ChannelParams, window: PhotonWindow):
    nus = np.arange(window.nu_i, window.nu_f + 1)
    return error_decomposition(joint_states(params, channel, nus), params.R, nus)


def per_nu_gaps(dec: ErrorDecomposition, R: float) -> np.ndarray:
    """RHS minus LHS of the per-nu inequality, using ``C_nu Z_nu`` as the g argument."""
    cz = np.einsum("nab,nb->na", c_matrices(R, dec.nus), dec.z_vectors())
    cz = np.maximum(cz, 0.0)
    g = np.sqrt(cz[:, 0] * cz[:, 3]) + np.sqrt(cz[:, 1] * cz[:, 2])
    pref = dec.G * np.sqrt(dec.alpha_sq * dec.beta_sq)
    return 2.0 * pref * g - (dec.n_fil - 2.0 * dec.n_bit)


def aggregated_gap(dec: ErrorDecomposition, R: float, window: PhotonWindow) -> float:
    """RHS minus LHS of the window-summed inequality with ``C'`` and ``nu_f`` constants."""
    z = dec.z_vectors().sum(axis=0)
    v = c_prime_closed_form(R, window) @ z
    if np.any(v < 0):
        return -math.inf
    qf = qubit_constants(R, window.nu_f)
    rhs = 2.0 * qf.prefactor * (math.sqrt(v[0] * v[3]) + math.sqrt(v[1] * v[2]))
    return rhs - (float(dec.n_fil.sum()) - 2.0 * float(dec.n_bit.sum()))


@dataclass(frozen=True)
class OracleRow:
    l: float
    key_rate: float
    ph_actual: float
    fil_win: float
    bit_win: float
    feasible: bool


def actual_key_rate_curve(
    params: ProtocolParams, channel_template: ChannelParams, l_grid: Sequence[float]
) -> list[OracleRow]:
    """Key rate using the channel's actual phase-error rate over ``lambda'``."""
    rows = []
    for l in l_grid:
        ch = channel_template.at(l)
        try:
            window = make_window(params, ch)
        except InvalidRegimeError:
            rows.append(OracleRow(l, 0.0, 0.0, 0.0, 0.0, False))
            continue
        r = oracle_rates(params, ch, window)
        rows.append(OracleRow(l, key_rate(r.fil_win, r.bit_win, r.ph_win), r.ph_win, r.fil_win, r.bit_win, True))
    return rows
