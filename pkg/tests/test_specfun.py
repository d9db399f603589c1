import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import kve

from besselheat import specfun
from besselheat.errors import BesselOverflowError, DomainError

mp.mp.dps = 40


def mp_series_i(nu, z):
    """Power series of I_nu, truncated when a term drops below 1e-30 of the sum."""
    z = mp.mpf(z)
    term = (z / 2) ** nu / mp.gamma(nu + 1)
    total = term
    k = 0
    while abs(term) > mp.mpf(10) ** -30 * abs(total):
        k += 1
        term *= (z / 2) ** 2 / (k * (k + nu))
        total += term
    return total


def rel(a, b):
    return abs(float(a) - float(b)) / abs(float(b))


# I0 and I1

def test_i0_at_zero():
    assert specfun.bessel_i0(0.0) == 1.0


def test_i0_at_one():
    assert rel(specfun.bessel_i0(1.0), mp_series_i(0, 1)) <= 1e-13
    assert abs(specfun.bessel_i0(1.0) - 1.2660658777520) < 1e-12


def test_i1_at_one_and_zero():
    assert specfun.bessel_i1(0.0) == 0.0
    assert rel(specfun.bessel_i1(1.0), mp_series_i(1, 1)) <= 1e-13
    assert abs(specfun.bessel_i1(1.0) - 0.5651591039924) < 1e-12


def test_i1_over_i0_at_two():
    r = specfun.bessel_i1(2.0) / specfun.bessel_i0(2.0)
    assert 2 / 4 <= r <= 4 / 5


@pytest.mark.parametrize("z", [1e-8, 0.3, 2.0, 7.5, 24.0, 29.9, 30.1, 45.0, 120.0, 650.0])
@pytest.mark.parametrize("nu", [0, 1])
def test_integer_orders_match_mpmath(nu, z):
    f = specfun.bessel_i0 if nu == 0 else specfun.bessel_i1
    assert rel(f(z), mp.besseli(nu, z)) <= 1e-13


def test_i0_700_is_finite_and_720_overflows():
    assert rel(specfun.bessel_i0(700.0), mp.besseli(0, 700)) <= 1e-13
    with pytest.raises(BesselOverflowError):
        specfun.bessel_i0(720.0)
    with pytest.raises(OverflowError):
        specfun.bessel_i1(720.0)


@pytest.mark.parametrize("bad", [-1.0, math.nan, math.inf])
def test_i0_domain(bad):
    with pytest.raises(DomainError):
        specfun.bessel_i0(bad)
    with pytest.raises(DomainError):
        specfun.bessel_i0_scaled(bad)


def test_i0_scaled_values():
    assert specfun.bessel_i0_scaled(0.0) == 1.0
    assert abs(specfun.bessel_i0_scaled(1000.0) * math.sqrt(2 * math.pi * 1000) - 1) < 1e-3


def test_i0_scaled_monotone_on_sequence():
    z = np.concatenate([np.linspace(0, 40, 4001), np.geomspace(40, 1e6, 2000)])
    s = specfun.bessel_i0_scaled(z)
    assert np.all(np.diff(s) <= 0)
    assert np.all((s > 0) & (s <= 1))


def test_series_and_hankel_branches_agree_in_overlap():
    z = np.linspace(25, 35, 41)
    for nu in (0.0, 0.5, 1.0, 2.0):
        a = specfun._log_series_scaled(nu, z)
        b = specfun._log_hankel_scaled(nu, z)
        assert np.max(np.abs(np.expm1(a - b))) <= 1e-11


# I_nu

def test_i_half_closed_form():
    assert rel(specfun.bessel_i_nu(0.5, 1.0), math.sqrt(2 / math.pi) * math.sinh(1.0)) <= 1e-10


def test_i_nu_consistency_and_zero():
    assert rel(specfun.bessel_i_nu(0, 3.0), specfun.bessel_i0(3.0)) <= 1e-12
    assert rel(specfun.bessel_i_nu(1, 3.0), specfun.bessel_i1(3.0)) <= 1e-12
    assert specfun.bessel_i_nu(2.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        specfun.bessel_i_nu(-0.5, 1.0)


@pytest.mark.parametrize("nu", [0.25, 0.5, 2.5, 7.0, 20.0])
@pytest.mark.parametrize("z", [1e-3, 0.7, 5.0, 31.0, 90.0, 400.0])
def test_i_nu_against_mpmath(nu, z):
    got = specfun.bessel_i_nu_scaled(nu, z)
    want = mp.besseli(nu, z) * mp.exp(-z)
    assert rel(got, want) <= 1e-10


# K0, K1

def test_k0_at_one_by_quadrature():
    # exp(-cosh 8) ~ exp(-1490): the truncated tail is far below double precision
    want = mp.quad(lambda u: mp.exp(-mp.cosh(u)), [0, 1, 2, 4, 8])
    assert rel(specfun.bessel_k0(1.0), want) <= 1e-10
    assert abs(specfun.bessel_k0(1.0) - 0.42102443824) < 1e-10


def test_k0_small_argument():
    z = 1e-6
    approx = -math.log(z) - 0.5772156649015329 + math.log(2)
    assert abs(specfun.bessel_k0(z) / approx - 1) < 0.01


@pytest.mark.parametrize("z", [0.5, 2.0, 10.0])
def test_wronskian(z):
    w = (specfun.bessel_i0(z) * specfun.bessel_k1(z)
         + specfun.bessel_i1(z) * specfun.bessel_k0(z))
    assert abs(w * z - 1) <= 1e-9


@pytest.mark.parametrize("z", [1e-4, 0.1, 1.0, 3.3, 50.0, 700.0, 5000.0])
def test_k_real_against_mpmath(z):
    assert rel(specfun.bessel_k0_scaled(z), mp.besselk(0, z) * mp.exp(z)) <= 1e-10
    assert rel(specfun.bessel_k1_scaled(z), mp.besselk(1, z) * mp.exp(z)) <= 1e-10


@pytest.mark.parametrize("z", [complex(1, 1), complex(0.05, 0.3), complex(3, -8),
                               complex(20, 35), complex(0.2, 0.0), complex(1e-3, 2e-3)])
def test_k0_complex_contour_region(z):
    want = complex(mp.besselk(0, mp.mpc(z.real, z.imag)) * mp.exp(mp.mpc(z.real, z.imag)))
    got = specfun.bessel_k0_scaled(z)
    assert abs(got - want) / abs(want) <= 1e-8
    assert abs(got - kve(0, z)) / abs(want) <= 1e-8


def test_k_domain():
    with pytest.raises(DomainError):
        specfun.bessel_k0(0.0)
    with pytest.raises(DomainError):
        specfun.bessel_k0(complex(-1, 1))


# incomplete gamma

def gamma_by_quadrature(a, z):
    return mp.quad(lambda u: u ** (a - 1) * mp.exp(-u), [z, z + 1, z + 10, mp.inf])


@pytest.mark.parametrize("z", [0.1, 1.0, 10.0])
def test_gamma_minus_half_identity(z):
    lhs = specfun.upper_incomplete_gamma(-0.5, z)
    g_half = float(mp.sqrt(mp.pi) * mp.erfc(mp.sqrt(z)))
    rhs = 2 * math.exp(-z) / math.sqrt(z) - 2 * g_half
    assert rel(lhs, rhs) <= 1e-10
    assert rel(lhs, gamma_by_quadrature(mp.mpf(-0.5), z)) <= 1e-10


def test_gamma_small_z_limit():
    z = 1e-8
    assert abs(specfun.upper_incomplete_gamma(-0.5, z) / (2 * z ** -0.5) - 1) < 0.01


def test_gamma_large_z_limit():
    z = 50.0
    assert abs(specfun.upper_incomplete_gamma(-0.5, z) / (z ** -1.5 * math.exp(-z)) - 1) < 0.05


@pytest.mark.parametrize("a", [-2.0, -1.5, -1.0, -0.75, -0.5, -0.1, 0.0, 0.3, 0.5, 1.0, 1.7, 2.0])
@pytest.mark.parametrize("z", [1e-3, 0.2, 1.0, 1.49, 1.51, 4.0, 30.0])
def test_gamma_against_mpmath(a, z):
    assert rel(specfun.upper_incomplete_gamma(a, z), mp.gammainc(a, z)) <= 1e-10


def test_gamma_decreasing_and_domain():
    z = np.geomspace(1e-4, 60, 300)
    for a in (-2.0, -0.5, 0.5, 2.0):
        g = specfun.upper_incomplete_gamma(a, z)
        assert np.all(np.diff(g) < 0)
    with pytest.raises(DomainError):
        specfun.upper_incomplete_gamma(-0.5, 0.0)
    with pytest.raises(DomainError):
        specfun.upper_incomplete_gamma(3.0, 1.0)


# invariants

@settings(max_examples=300, deadline=None)
@given(st.floats(1e-9, 700.0), st.floats(1e-9, 700.0))
def test_i0_growth_inequality(a, b):
    x, y = min(a, b), max(a, b)
    if x == y:
        return
    ratio = specfun.bessel_i0(y) / specfun.bessel_i0(x)
    assert ratio <= math.exp(y - x) * (1 + 1e-12)


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-12, 700.0))
def test_i1_i0_ratio_bounds(z):
    r = specfun.bessel_i1(z) / specfun.bessel_i0(z)
    assert z / (z + 2) - 1e-12 <= r <= 2 * z / (2 * z + 1) + 1e-12


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 600.0))
def test_scaled_unscaled_consistency(z):
    a = specfun.bessel_i0(z) * math.exp(-z)
    b = specfun.bessel_i0_scaled(z)
    assert abs(a - b) <= 1e-12 * b


# complex contour helpers

@pytest.mark.parametrize("z", [complex(1, 1), complex(3e7, 2e7), complex(2e8, 6e7),
                               complex(5e9, -4e9), complex(1e12, 1e11)])
def test_contour_helpers_against_mpmath(z):
    zm = mp.mpc(z.real, z.imag)
    k = complex(mp.besselk(0, zm) * mp.exp(zm))
    i = complex(mp.besseli(0, zm) * mp.exp(-zm))
    assert abs(specfun.k0e(np.array([z]))[0] / k - 1) <= 1e-13
    assert abs(specfun.i0e(np.array([z]))[0] / i - 1) <= 1e-13
