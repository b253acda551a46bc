import math

import pytest

from b92srp.errors import InvalidRegimeError
from b92srp.params import (
    ChannelParams,
    PhotonWindow,
    ProtocolParams,
    alice_nonorthogonality,
    check_window_regime,
    detector_equivalence,
    make_window,
    qubit_constants,
)


def test_transmission_at_zero_and_hundred_km():
    assert ChannelParams().eta == pytest.approx(0.045)
    assert ChannelParams(l=100).eta == pytest.approx(0.045 * 10**-2.1)


def test_reflectivity():
    p = ProtocolParams(mu=1e5, kappa=0.1)
    assert p.R == pytest.approx(1e-6)


@pytest.mark.parametrize(
    "kwargs",
    [dict(mu=-1, kappa=0.1), dict(mu=1.0, kappa=0.0), dict(mu=0.1, kappa=0.2), dict(mu=1e5, kappa=0.1, t=1.0)],
)
def test_protocol_params_rejects(kwargs):
    with pytest.raises(ValueError):
        ProtocolParams(**kwargs)


@pytest.mark.parametrize("kwargs", [dict(l=-1), dict(eta_bob=0.0), dict(eta_bob=1.5), dict(p=2.0)])
def test_channel_params_rejects(kwargs):
    with pytest.raises(ValueError):
        ChannelParams(**kwargs)


def test_window_rounding():
    params = ProtocolParams(mu=1e5, kappa=10**-0.92, a=3.2)
    w = make_window(params, ChannelParams())
    m = 0.045 * 1e5
    assert w.nu_i == math.floor(m - 3.2 * math.sqrt(m))
    assert w.nu_f == math.ceil(m + 3.2 * math.sqrt(m))
    assert w.d1 == (w.nu_i, w.nu_f - 1)
    assert w.prime == (w.nu_i + 1, w.nu_f)
    assert w.full == (w.nu_i, w.nu_f)
    assert len(w) == w.nu_f - w.nu_i + 1  # number of nu in lambda


def test_window_clamped_to_one_at_low_intensity():
    params = ProtocolParams(mu=100.0, kappa=0.05, a=3.2)
    w = make_window(params, ChannelParams(l=50))
    assert w.nu_i == 1


def test_window_regime_violation():
    R = 0.01
    with pytest.raises(InvalidRegimeError):
        check_window_regime(R, PhotonWindow(10, 200))
    check_window_regime(R, PhotonWindow(10, 40))


def test_invalid_window():
    with pytest.raises(InvalidRegimeError):
        PhotonWindow(5, 5)
    with pytest.raises(InvalidRegimeError):
        PhotonWindow(0, 5)


def test_qubit_constants_nu_one():
    q = qubit_constants(1e-3, 1)
    assert q.G_nu == pytest.approx(1.001)
    assert q.alpha_sq + q.beta_sq == pytest.approx(1.0)
    assert q.alpha_sq == pytest.approx(1e-3 / 1.001)


def test_qubit_constants_large_nu_uses_stable_power():
    q = qubit_constants(1e-10, 10**9)
    expected = math.exp((10**9 - 1) * math.log1p(-1e-10)) * 1.1
    assert q.G_nu == pytest.approx(expected, rel=1e-12)


def test_alice_nonorthogonality():
    k = 10**-0.92
    assert alice_nonorthogonality(k) == pytest.approx((1 - math.exp(-2 * k)) / 2)
    assert isinstance(alice_nonorthogonality(k), float)
    assert alice_nonorthogonality(1e-12) == pytest.approx(1e-12, rel=1e-9)


def test_detector_equivalence_equal_efficiencies():
    eta_prime, eta2, R = detector_equivalence(0.1, 0.1, 1e-6)
    assert eta_prime == 0.1
    assert eta2 == pytest.approx(0.1)
    assert R == pytest.approx(1e-6)
