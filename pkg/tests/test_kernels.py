import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besselheat import kernels
from besselheat.errors import DomainError
from besselheat.quad import integrate_gk

mp.mp.dps = 30


def mp_free(mu, t, x, y):
    t, x, y = mp.mpf(t), mp.mpf(x), mp.mpf(y)
    return (xy := x * y) ** (-mu) / t * mp.exp(-(x * x + y * y) / (2 * t)) * mp.besseli(abs(mu), xy / t)


def integral_over_y(f, weight_power, peak):
    """int_0^inf f(y) y**weight_power dy, split at the peak and truncated 40
    nats below it."""
    g = lambda y: f(y) * y ** weight_power
    lo = [0.0, peak * 0.5, peak, peak * 1.5 + 1.0]
    total = 0.0
    for a, b in zip(lo[:-1], lo[1:]):
        if b > a:
            total += integrate_gk(g, a, b, 1e-12)[0]
    total += integrate_gk(g, lo[-1], math.inf, 1e-12)[0]
    return total


@pytest.mark.parametrize("mu", [0.0, 0.5, -0.5, 1.0, 3.5])
@pytest.mark.parametrize("t,x,y", [(1, 2, 3), (0.01, 5, 5.2), (100, 0.3, 40), (2, 1e-3, 1),
                                   (1e-3, 30, 30.01)])
def test_free_kernel_against_mpmath(mu, t, x, y):
    got = kernels.free_kernel(mu, t, x, y)
    want = mp_free(mu, t, x, y)
    assert abs(got - float(want)) <= 1e-10 * float(want)


def test_log_form_survives_underflow():
    lv = kernels.log_free_kernel(0.0, 1e-3, 10.0, 20.0)
    want = mp.log(mp_free(0, 1e-3, 10, 20))
    assert abs(lv - float(want)) <= 1e-10 * abs(float(want))
    assert kernels.free_kernel(0.0, 1e-3, 10.0, 20.0) == 0.0


def test_symmetry_is_exact():
    rng = np.random.default_rng(3)
    t = 10 ** rng.uniform(-3, 6, 500)
    x = 10 ** rng.uniform(-2, 3, 500)
    y = 10 ** rng.uniform(-2, 3, 500)
    for mu in (0.0, 0.5, 2.0):
        assert np.array_equal(kernels.free_kernel(mu, t, x, y), kernels.free_kernel(mu, t, y, x))


def test_small_x_limit():
    assert abs(kernels.free_kernel(0.0, 1.0, 1e-9, 2.0) / math.exp(-2.0) - 1) <= 1e-6


@pytest.mark.parametrize("t", np.geomspace(1e-2, 1e3, 5))
@pytest.mark.parametrize("x", np.geomspace(1e-2, 1e2, 5))
def test_normalisation(t, x):
    total = integral_over_y(lambda y: kernels.free_kernel(0.0, t, x, y), 1, max(x, math.sqrt(t)))
    assert abs(total - 1) <= 1e-8


@pytest.mark.parametrize("s", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("t", [0.5, 2.0, 30.0])
@pytest.mark.parametrize("x", [0.2, 1.5, 8.0])
def test_chapman_kolmogorov(s, t, x):
    y = 1.0 + x
    lhs = integral_over_y(lambda w: kernels.free_kernel(0.0, s, x, w)
                          * kernels.free_kernel(0.0, t, w, y), 1, max(x, y, math.sqrt(s + t)))
    rhs = kernels.free_kernel(0.0, s + t, x, y)
    assert abs(lhs / rhs - 1) <= 1e-7


@pytest.mark.parametrize("t,x,y", [(1, 2, 3), (0.1, 1.5, 1.2), (50, 7, 0.5), (1e-2, 3, 3.1),
                                   (4, 0.5, 3)])
def test_dx_matches_finite_difference(t, x, y):
    h = 1e-6 * x
    fd = (kernels.free_kernel(0.0, t, x + h, y) - kernels.free_kernel(0.0, t, x - h, y)) / (2 * h)
    got = kernels.free_kernel_dx(t, x, y)
    assert abs(got - fd) <= 1e-5 * abs(fd)


def test_dx_sign_on_diagonal():
    for t in (0.5, 2.0):
        x = 3.0
        ratio = float(mp.besseli(1, x * x / t) / mp.besseli(0, x * x / t))
        assert np.sign(kernels.free_kernel_dx(t, x, x)) == np.sign(x * ratio - x)


def test_dx_bracket_on_grid():
    T, X, Y = np.meshgrid(np.geomspace(1e-3, 1e6, 40), np.geomspace(1e-3, 1e3, 40),
                          np.geomspace(1e-3, 1e3, 40), indexing="ij")
    reg = (X * Y <= T) & (Y * Y >= 4 * T)
    t, x, y = T[reg], X[reg], Y[reg]
    assert t.size > 1000
    val = kernels.free_kernel_dx_ratio(t, x, y) * t * t / (x * y * y)
    assert np.all(val >= 1 / 12 - 1e-12) and np.all(val <= 2 + 1e-12)


def test_increasing_in_x_example():
    assert kernels.free_kernel_dx(1.0, 0.5, 3.0) > 0


@settings(max_examples=200, deadline=None)
@given(st.floats(-3, 6), st.floats(0.0, 3.0), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_monotone_in_x_for_far_y(log_t, log_excess, f1, f2):
    t = 10.0 ** log_t
    y = 2.0 * math.sqrt(t) * 10.0 ** log_excess
    x1, x2 = sorted((f1 * y / 2, f2 * y / 2))
    assert kernels.free_kernel(0.0, t, x1, y) <= kernels.free_kernel(0.0, t, x2, y) * (1 + 1e-12)


def test_mu_half_closed_form():
    want = (1 - math.exp(-2)) / math.sqrt(2 * math.pi)
    assert abs(kernels.mu_half_free_kernel(1.0, 1.0, 1.0) - want) <= 1e-15


def test_mu_half_matches_general_formula_on_grid():
    T, X, Y = np.meshgrid(np.geomspace(1e-3, 1e6, 10), np.geomspace(1e-2, 1e3, 10),
                          np.geomspace(1e-2, 1e3, 10), indexing="ij")
    a = kernels.log_mu_half_free_kernel(T, X, Y)
    b = kernels.log_free_kernel(0.5, T, X, Y)
    # log values reach -5e8 here, where one ulp is already 6e-8
    assert np.all(np.abs(a - b) <= 1e-10 + 4 * np.spacing(np.abs(b)))


def test_mu_half_bounded_at_origin():
    vals = [kernels.mu_half_free_kernel(1.0, 1.0, y) for y in (1e-3, 1e-6, 1e-9)]
    assert max(vals) / min(vals) < 1.01


@pytest.mark.parametrize("args", [(0, 1, 1), (1, 0, 1), (1, 1, -1), (math.nan, 1, 1)])
def test_domain_errors(args):
    with pytest.raises(DomainError):
        kernels.free_kernel(0.0, *args)
    with pytest.raises(DomainError):
        kernels.free_kernel_dx(*args)


def test_mu_limit():
    with pytest.raises(DomainError):
        kernels.free_kernel(51.0, 1, 1, 1)


def test_point_query():
    q = kernels.PointQuery(1.0, 2.0, 3.0)
    assert q.as_dict() == {"t": 1.0, "x": 2.0, "y": 3.0, "mu": 0.0, "a": 1.0}
    with pytest.raises(DomainError):
        kernels.PointQuery(1.0, 0.5, 3.0)
    with pytest.raises(DomainError):
        kernels.PointQuery(-1.0, 2.0, 3.0)
    kernels.PointQuery(1.0, 0.5, 3.0, a=0.0)
