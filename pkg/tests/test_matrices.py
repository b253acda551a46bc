import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from b92srp.errors import InfeasibleError, InvalidRegimeError
from b92srp.matrices import (
    RateVector,
    c_inverse,
    c_matrices,
    c_matrix,
    c_prime,
    c_prime_brute_force,
    c_prime_closed_form,
    g_function,
    per_nu_bound_gap,
    split_signs,
)
from b92srp.params import PhotonWindow, qubit_constants

nonneg = st.floats(min_value=0.0, max_value=1e3, allow_nan=False)
vec4 = st.tuples(nonneg, nonneg, nonneg, nonneg)


@st.composite
def valid_window(draw):
    log_r = draw(st.floats(min_value=-9.0, max_value=-2.0))
    R = 10.0**log_r
    nu_max = int(-1.0 / (2.0 * math.log1p(-R)))
    span = min(nu_max - 1, 5000)
    nu_i = draw(st.integers(min_value=1, max_value=max(1, nu_max - span)))
    nu_f = draw(st.integers(min_value=nu_i + 1, max_value=min(nu_max, nu_i + span)))
    return R, PhotonWindow(nu_i, nu_f)


def test_rate_vector_round_trip():
    v = RateVector(1.0, 0.2, 0.03, 0.004)
    assert RateVector.from_array(v.as_array()) == v


def test_g_function_value():
    assert g_function([4.0, 1.0, 9.0, 1.0]) == pytest.approx(2.0 + 3.0)


def test_g_function_negative_entry():
    with pytest.raises(InfeasibleError):
        g_function([1.0, -0.1, 1.0, 1.0])
    assert g_function([1.0, -1e-15, 1.0, 1.0], atol=1e-12) == pytest.approx(1.0)


def test_c_matrix_inverts_c_inverse():
    q = qubit_constants(1e-6, 4500)
    np.testing.assert_allclose(c_matrix(q) @ c_inverse(q), np.eye(4), atol=1e-10)


def test_c_matrix_singular_when_nu_r_reaches_one():
    with pytest.raises(InvalidRegimeError):
        c_matrix(qubit_constants(0.01, 100))


def test_c_matrices_matches_single():
    R = 1e-5
    nus = [1, 10, 100, 1000]
    stack = c_matrices(R, nus)
    for nu, m in zip(nus, stack):
        np.testing.assert_allclose(m, c_matrix(qubit_constants(R, nu)), rtol=1e-12)


def test_c_prime_example():
    R, w = 1e-6, PhotonWindow(4285, 4715)
    np.testing.assert_allclose(c_prime_closed_form(R, w), c_prime_brute_force(R, w), rtol=1e-12)
    cp, plus, minus = c_prime(R, w, verify=True)
    np.testing.assert_array_equal(plus - minus, cp)


def test_c_prime_rejects_out_of_regime_window():
    with pytest.raises(InvalidRegimeError):
        c_prime_closed_form(0.01, PhotonWindow(10, 60))


@settings(max_examples=200, deadline=None)
@given(valid_window())
def test_c_prime_is_entrywise_max(rw):
    R, w = rw
    cp = c_prime_closed_form(R, w)
    stack = c_matrices(R, np.arange(w.nu_i, w.nu_f + 1))
    assert np.all(stack <= cp + 1e-12 * np.abs(cp))
    np.testing.assert_allclose(cp, stack.max(axis=0), rtol=1e-12)


@settings(max_examples=200, deadline=None)
@given(valid_window())
def test_sign_split(rw):
    R, w = rw
    cp, plus, minus = c_prime(R, w)
    assert np.all(plus >= 0) and np.all(minus >= 0)
    assert np.all((plus == 0) | (minus == 0))
    np.testing.assert_array_equal(plus - minus, cp)


def test_split_signs_simple():
    plus, minus = split_signs(np.array([[1.0, -2.0], [0.0, 3.0]]))
    np.testing.assert_array_equal(plus, [[1, 0], [0, 3]])
    np.testing.assert_array_equal(minus, [[0, 2], [0, 0]])


@settings(max_examples=300, deadline=None)
@given(vec4, vec4, st.floats(min_value=0.0, max_value=1.0))
def test_g_concave(u, v, theta):
    u, v = np.array(u), np.array(v)
    mix = g_function(theta * u + (1 - theta) * v)
    assert mix >= theta * g_function(u) + (1 - theta) * g_function(v) - 1e-9 * (1 + mix)


@settings(max_examples=300, deadline=None)
@given(vec4, vec4)
def test_g_monotone(u, du):
    u = np.array(u)
    assert g_function(u + np.array(du)) >= g_function(u) - 1e-12


@settings(max_examples=300, deadline=None)
@given(vec4, st.floats(min_value=0.0, max_value=1e3))
def test_g_homogeneous(u, s):
    assert g_function(s * np.array(u)) == pytest.approx(s * g_function(u), rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(vec4, min_size=1, max_size=30))
def test_sum_of_g_below_g_of_sum(vectors):
    x = np.array(vectors)
    total = sum(g_function(v) for v in x)
    # Jensen with homogeneity: sum g(x_nu) <= n g(mean) = g(sum)
    assert total <= len(x) * g_function(x.mean(axis=0)) * (1 + 1e-9) + 1e-9
    assert len(x) * g_function(x.mean(axis=0)) == pytest.approx(g_function(x.sum(axis=0)), rel=1e-9, abs=1e-9)


def test_per_nu_gap_on_product_state():
    # |00><00|: no phase errors, every conclusive event with a flipped X bit
    # outcome counts half as a bit error, so both sides vanish
    q = qubit_constants(1e-4, 50)
    z = c_inverse(q) @ np.array([0.3, 0.0, 0.0, 0.0])
    bit = 0.5 * q.G_nu * q.alpha_sq * 0.3
    assert per_nu_bound_gap(q, z, bit, atol=1e-15) == pytest.approx(0.0, abs=1e-15)
