import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from b92srp.observables import (
    analytic_observables,
    d1_mass,
    poisson_log_pmf,
    poisson_window_mass,
)
from b92srp.params import ChannelParams, ProtocolParams, make_window

KAPPA = 10**-0.92


@pytest.mark.parametrize("mean", [0.3, 7.0, 150.0, 4.5e3, 1.7e5])
def test_log_pmf_matches_scipy(mean):
    k = np.unique(np.clip(np.round(mean + np.linspace(-8, 8, 33) * math.sqrt(mean)), 0, None))
    np.testing.assert_allclose(poisson_log_pmf(k, mean), stats.poisson.logpmf(k, mean), rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("mean", [1.7e5, 4.0e6, 3.2e8, 4.5e10])
def test_log_pmf_large_mean_high_precision(mean):
    # scipy's k log(mean) - gammaln(k+1) - mean cancels catastrophically here
    with mpmath.workdps(40):
        for z in (-8.0, -1.0, 0.0, 2.5, 8.0):
            k = round(mean + z * math.sqrt(mean))
            exact = float(k * mpmath.log(mean) - mean - mpmath.loggamma(k + 1))
            assert poisson_log_pmf(np.array([k], dtype=float), mean)[0] == pytest.approx(exact, abs=1e-11)


@pytest.mark.parametrize("mean", [4.0e6, 3.2e8])
def test_window_mass_large_mean_high_precision(mean):
    s = math.sqrt(mean)
    lo, hi = math.floor(mean - 3.2 * s), math.ceil(mean + 3.2 * s)
    with mpmath.workdps(40):
        exact = mpmath.gammainc(hi + 1, mean, mpmath.inf, regularized=True) - mpmath.gammainc(
            lo, mean, mpmath.inf, regularized=True
        )
    assert poisson_window_mass(mean, lo, hi) == pytest.approx(float(exact), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(min_value=0.01, max_value=1e5),
    st.floats(min_value=-6.0, max_value=6.0),
    st.floats(min_value=0.0, max_value=8.0),
)
def test_window_mass_matches_scipy(mean, centre, width):
    s = math.sqrt(mean)
    lo = max(0, math.floor(mean + (centre - width) * s))
    hi = math.ceil(mean + (centre + width) * s)
    expected = stats.poisson.cdf(hi, mean) - stats.poisson.cdf(lo - 1, mean)
    assert poisson_window_mass(mean, lo, hi) == pytest.approx(expected, rel=1e-9, abs=1e-15)


def test_window_mass_edge_cases():
    assert poisson_window_mass(5.0, 0, math.inf) == pytest.approx(1.0, rel=1e-14)
    assert poisson_window_mass(5.0, 4, 3) == 0.0
    assert poisson_window_mass(0.0, 0, 3) == 1.0
    assert poisson_window_mass(0.0, 1, 3) == 0.0
    assert poisson_window_mass(1e6, 0, 1e5) == 0.0
    with pytest.raises(ValueError):
        poisson_window_mass(-1.0, 0, 1)


def test_d1_mass_is_near_one_for_wide_window(channel):
    params = ProtocolParams(mu=1e5, kappa=KAPPA, a=8.0)
    w = make_window(params, channel)
    assert d1_mass(params, channel, w) == pytest.approx(1.0, abs=1e-12)


def test_observables_closed_form(desk_params, channel):
    w = make_window(desk_params, channel)
    obs = analytic_observables(desk_params, channel, w)
    ek = channel.eta * KAPPA
    p = channel.p
    assert obs.fil_all == pytest.approx(math.exp(-2 * ek) * 2 * ek * (1 - p) + math.exp(-ek) * p, rel=1e-14)
    assert obs.bit_all == pytest.approx(math.exp(-ek) * p / 2, rel=1e-14)
    mass = stats.poisson.cdf(w.nu_f - 1, channel.eta * (1e5 - KAPPA)) - stats.poisson.cdf(
        w.nu_i - 1, channel.eta * (1e5 - KAPPA)
    )
    assert obs.fil_win == pytest.approx(obs.fil_all * mass, rel=1e-12)
    assert obs.eta_tilde == pytest.approx(obs.vac_win + obs.fil_win)


def test_no_dark_counts_no_bit_errors(desk_params):
    ch = ChannelParams(p=0.0)
    obs = analytic_observables(desk_params, ch, make_window(desk_params, ch))
    assert obs.bit_win == 0.0 and obs.bit_all == 0.0


@settings(max_examples=100, deadline=None)
@given(
    st.floats(min_value=3.0, max_value=9.0),
    st.floats(min_value=0.0, max_value=120.0),
    st.floats(min_value=0.0, max_value=1e-3),
    st.floats(min_value=0.01, max_value=1.0),
)
def test_observable_invariants(log_mu, l, p, kappa):
    params = ProtocolParams(mu=10**log_mu, kappa=kappa)
    ch = ChannelParams(l=l, p=p)
    w = make_window(params, ch)
    obs = analytic_observables(params, ch, w)
    for v in obs.as_dict().values():
        assert 0.0 <= v <= 1.0
    assert obs.fil_win <= obs.fil_all * (1 + 1e-12)
    assert obs.bit_win <= obs.bit_all * (1 + 1e-12)
    assert obs.bit_all <= obs.fil_all / 2 * (1 + 1e-12) + 1e-300
    assert obs.eta_tilde <= 1.0 + 1e-12
