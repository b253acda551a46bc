"""Protocol and channel parameters, photon-number windows and per-nu constants.

Everything here is an immutable value type or a pure function.  Bob's
qubit space at total photon number ``nu`` is spanned by ``|0, nu>`` and
``|1, nu-1>`` (signal photons, reference photons); the constants
``G_nu``, ``alpha_nu``, ``beta_nu`` describe his conclusive POVM on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidRegimeError


def _check_open_unit(name: str, value: float, *, closed_right: bool = False) -> None:
    upper_ok = value <= 1.0 if closed_right else value < 1.0
    if not (value > 0.0 and upper_ok):
        bound = "(0, 1]" if closed_right else "(0, 1)"
        raise ValueError(f"{name} must lie in {bound}, got {value!r}")


@dataclass(frozen=True)
class ProtocolParams:
    """Alice's pulse intensities and Bob's window/test settings.

    Attributes:
        mu: Mean photon number of the strong reference pulse.
        kappa: Mean photon number of the weak signal pulse.
        a: Window half-width in units of ``sqrt(eta * mu)``.
        t: Fraction of pairs used as test pairs.
    """

    mu: float
    kappa: float
    a: float = 3.2
    t: float = 0.01

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu!r}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa!r}")
        if not self.kappa < self.mu:
            raise ValueError("kappa must be smaller than mu")
        if not self.a >= 0:
            raise ValueError(f"a must be nonnegative, got {self.a!r}")
        _check_open_unit("t", self.t)

    @property
    def R(self) -> float:
        """Reflectivity of Bob's first beam splitter, ``kappa / mu``."""
        return self.kappa / self.mu


@dataclass(frozen=True)
class ChannelParams:
    """Fiber loss plus dark-count channel.

    Attributes:
        xi: Loss coefficient in dB/km.
        l: Fiber length in km.
        eta_bob: Bob's detection efficiency.
        p: Probability that the signal is replaced by a single photon.
    """

    xi: float = 0.21
    l: float = 0.0
    eta_bob: float = 0.045
    p: float = 1.7e-6

    def __post_init__(self) -> None:
        if not self.xi >= 0:
            raise ValueError(f"xi must be nonnegative, got {self.xi!r}")
        if not self.l >= 0:
            raise ValueError(f"l must be nonnegative, got {self.l!r}")
        _check_open_unit("eta_bob", self.eta_bob, closed_right=True)
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p!r}")

    @property
    def eta(self) -> float:
        """Overall transmission including Bob's detector efficiency."""
        return 10.0 ** (-self.xi * self.l / 10.0) * self.eta_bob

    def at(self, l: float) -> "ChannelParams":
        """Same channel at a different distance."""
        return ChannelParams(xi=self.xi, l=l, eta_bob=self.eta_bob, p=self.p)


@dataclass(frozen=True)
class PhotonWindow:
    """Integer window ``lambda = [nu_i, nu_f]`` on the total photon number.

    The reference detector D1 sees ``nu - 1`` photons on a conclusive
    event, so the D1 acceptance interval is ``[nu_i, nu_f - 1]`` and the
    key is distilled from ``nu`` in ``[nu_i + 1, nu_f]``.
    """

    nu_i: int
    nu_f: int

    def __post_init__(self) -> None:
        if self.nu_i < 1:
            raise InvalidRegimeError(f"nu_i must be >= 1, got {self.nu_i}")
        if self.nu_f <= self.nu_i:
            raise InvalidRegimeError(
                f"degenerate window [{self.nu_i}, {self.nu_f}]: need nu_f > nu_i"
            )

    @property
    def d1(self) -> tuple[int, int]:
        return (self.nu_i, self.nu_f - 1)

    @property
    def prime(self) -> tuple[int, int]:
        return (self.nu_i + 1, self.nu_f)

    @property
    def full(self) -> tuple[int, int]:
        return (self.nu_i, self.nu_f)

    def __len__(self) -> int:
        return self.nu_f - self.nu_i + 1


@dataclass(frozen=True)
class QubitConstants:
    nu: int
    G_nu: float
    alpha_sq: float
    beta_sq: float
    R: float = field(repr=False, default=float("nan"))

    @property
    def alpha(self) -> float:
        return math.sqrt(self.alpha_sq)

    @property
    def beta(self) -> float:
        return math.sqrt(self.beta_sq)

    @property
    def prefactor(self) -> float:
        """``G_nu * alpha_nu * beta_nu``."""
        return self.G_nu * math.sqrt(self.alpha_sq * self.beta_sq)


def qubit_constants(R: float, nu: int) -> QubitConstants:
    """Filter weight and nonorthogonality amplitudes at total photon number ``nu``.

    ``G_nu = (1-R)^(nu-1) (1 + nu R)``, ``alpha_nu^2 = nu R / (1 + nu R)`` and
    ``beta_nu^2 = 1 / (1 + nu R)``.
    """
    if not 0.0 < R < 1.0:
        raise ValueError(f"R must lie in (0, 1), got {R!r}")
    if int(nu) != nu or nu < 1:
        raise ValueError(f"nu must be a positive integer, got {nu!r}")
    nu = int(nu)
    x = nu * R
    G = math.exp((nu - 1) * math.log1p(-R)) * (1.0 + x)
    return QubitConstants(nu=nu, G_nu=G, alpha_sq=x / (1.0 + x), beta_sq=1.0 / (1.0 + x), R=R)


def check_window_regime(R: float, window: PhotonWindow) -> None:
    """Raise unless ``nu_f R < 1`` and ``nu_f <= -1/(2 ln(1-R))``."""
    if not window.nu_f * R < 1.0:
        raise InvalidRegimeError(
            f"nu_f * R = {window.nu_f * R:.6g} >= 1; the ordering of C_nu entries fails"
        )
    limit = -1.0 / (2.0 * math.log1p(-R))
    if not window.nu_f <= limit:
        raise InvalidRegimeError(
            f"nu_f = {window.nu_f} exceeds -1/(2 ln(1-R)) = {limit:.6g}; "
            "G_nu alpha_nu beta_nu is no longer increasing over the window"
        )


def make_window(params: ProtocolParams, channel: ChannelParams) -> PhotonWindow:
    """Window ``[floor(x - a sqrt(x)), ceil(x + a sqrt(x))]`` around ``x = eta mu``.

    The lower edge is clamped to 1.  Raises :class:`InvalidRegimeError` for
    a degenerate window or when the monotonicity preconditions fail.
    """
    if params.a <= 0:
        raise InvalidRegimeError("a must be positive for a non-degenerate window")
    x = channel.eta * params.mu
    half = params.a * math.sqrt(x)
    nu_i = max(1, math.floor(x - half))
    nu_f = math.ceil(x + half)
    window = PhotonWindow(nu_i, nu_f)
    check_window_regime(params.R, window)
    return window


def detector_equivalence(eta1: float, eta_prime: float, R: float) -> tuple[float, float, float]:
    """Map finite-efficiency detectors onto unit-efficiency ones.

    D1 with efficiency ``eta1`` and D2/D3 with ``eta_prime`` behave like ideal
    detectors behind absorbers of transmission ``eta_prime`` (signal mode) and
    ``R eta' + (1-R) eta1`` (reference mode), with the beam splitter
    reflectivity changed to ``R eta' / (R eta' + (1-R) eta1)``.

    Returns:
        ``(signal_absorber, srp_absorber, R_eff)``.
    """
    _check_open_unit("eta1", eta1, closed_right=True)
    _check_open_unit("eta_prime", eta_prime, closed_right=True)
    _check_open_unit("R", R, closed_right=True)
    srp = R * eta_prime + (1.0 - R) * eta1
    return eta_prime, srp, R * eta_prime / srp


def alice_nonorthogonality(kappa: float) -> float:
    """``(1 - exp(-2 kappa)) / 2``: weight of Alice's odd component."""
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa!r}")
    return -0.5 * math.expm1(-2.0 * kappa)
