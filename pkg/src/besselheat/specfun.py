r"""Scalar special functions with overflow-safe scaled variants.

Conventions
-----------
``*_scaled`` functions return :math:`e^{-z} I_\nu(z)` and :math:`e^{z} K_\nu(z)`.
Every function accepts a float or an array-like and returns the same shape
(a plain ``float`` for scalar input).

Modified Bessel functions of the first kind use the power series for small
arguments and the Hankel expansion for large ones.  The second kind uses the
integral :math:`K_\nu(z)=\int_0^\infty e^{-z\cosh u}\cosh(\nu u)\,du`, which
the trapezoidal rule integrates to near machine precision because the
integrand decays doubly exponentially and is analytic in a strip.
"""

import math

import numpy as np
from scipy.special import exprel, gammaln, ive, kve, zeta

from .errors import BesselOverflowError, DomainError

__all__ = [
    "bessel_i0",
    "bessel_i0_scaled",
    "bessel_i1",
    "bessel_i1_scaled",
    "bessel_i_nu",
    "bessel_i_nu_scaled",
    "log_bessel_i_nu_scaled",
    "bessel_i1_i0_ratio",
    "bessel_k0",
    "bessel_k0_scaled",
    "bessel_k1",
    "bessel_k1_scaled",
    "k0e",
    "i0e",
    "upper_incomplete_gamma",
]

SERIES_CUTOFF = 30.0
_LOG_DBL_MAX = math.log(np.finfo(float).max)
_SERIES_RTOL = 1e-18
_RESCALE = 1e250


def _check_nonneg(z, name="z"):
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} must be finite and >= 0")
    return arr


def _out(arr, like):
    if np.ndim(like) == 0:
        return float(arr)
    return arr


def _log_series_scaled(nu, z):
    """log(e^{-z} I_nu(z)) from the power series; z > 0, 1-d array."""
    q = 0.25 * z * z
    total = np.ones_like(z)
    term = np.ones_like(z)
    offset = np.zeros_like(z)
    active = np.ones(z.shape, dtype=bool)
    k = 0
    while np.any(active):
        k += 1
        term = np.where(active, term * q / (k * (k + nu)), 0.0)
        total = total + term
        big = total > _RESCALE
        if np.any(big):
            total = np.where(big, total / _RESCALE, total)
            term = np.where(big, term / _RESCALE, term)
            offset = offset + np.where(big, math.log(_RESCALE), 0.0)
        # stop once the (decreasing) terms are negligible
        active = active & ~((term < _SERIES_RTOL * total) & (k > q / (k + nu)))
    # log(z) - log 2 rather than log(z/2): z/2 underflows for subnormal z
    lead = nu * (np.log(z) - math.log(2.0)) if nu else 0.0
    return lead - gammaln(nu + 1.0) + np.log(total) + offset - z


def _log_hankel_scaled(nu, z):
    """log(e^{-z} I_nu(z)) from the large-argument expansion."""
    mu4 = 4.0 * nu * nu
    total = np.ones_like(z)
    term = np.ones_like(z)
    prev = np.full_like(z, np.inf)
    active = np.ones(z.shape, dtype=bool)
    k = 0
    while np.any(active) and k < 200:
        k += 1
        new = -term * (mu4 - (2 * k - 1) ** 2) / (8.0 * k * z)
        # asymptotic series: stop before the terms start growing
        growing = np.abs(new) >= np.abs(prev)
        active = active & ~growing & (np.abs(term) > 1e-17 * np.abs(total))
        term = np.where(active, new, 0.0)
        total = total + term
        prev = np.where(active, np.abs(new), prev)
        if mu4 == (2 * k - 1) ** 2:
            break
    return -0.5 * np.log(2.0 * np.pi * z) + np.log(total)


def log_bessel_i_nu_scaled(nu, z):
    r"""Return :math:`\log(e^{-z} I_\nu(z))`.

    ``-inf`` at ``z = 0`` for ``nu > 0``.
    """
    if not (np.isfinite(nu) and nu >= 0):
        raise DomainError("order nu must be finite and >= 0")
    zz = _check_nonneg(z)
    flat = np.atleast_1d(zz).astype(float).ravel()
    out = np.empty_like(flat)
    zero = flat == 0
    out[zero] = 0.0 if nu == 0 else -np.inf
    cut = max(SERIES_CUTOFF, nu * nu)
    small = ~zero & (flat <= cut)
    large = flat > cut
    if np.any(small):
        out[small] = _log_series_scaled(float(nu), flat[small])
    if np.any(large):
        out[large] = _log_hankel_scaled(float(nu), flat[large])
    return _out(out.reshape(np.shape(zz)), z)


def bessel_i_nu_scaled(nu, z):
    r""":math:`e^{-z} I_\nu(z)` for ``nu >= 0``, ``z >= 0``."""
    return _out(np.exp(log_bessel_i_nu_scaled(nu, z)), z)


def bessel_i_nu(nu, z):
    r""":math:`I_\nu(z)`; raises :class:`BesselOverflowError` past the double range."""
    logv = np.asarray(log_bessel_i_nu_scaled(nu, z)) + np.asarray(z, dtype=float)
    if np.any(logv > _LOG_DBL_MAX):
        raise BesselOverflowError(
            "I_nu(z) overflows a double; use bessel_i_nu_scaled")
    return _out(np.exp(logv), z)


def bessel_i0_scaled(z):
    r""":math:`e^{-z} I_0(z)`; takes values in (0, 1] and is nonincreasing."""
    return bessel_i_nu_scaled(0.0, z)


def bessel_i0(z):
    """Modified Bessel function I_0."""
    return bessel_i_nu(0.0, z)


def bessel_i1_scaled(z):
    r""":math:`e^{-z} I_1(z)`."""
    return bessel_i_nu_scaled(1.0, z)


def bessel_i1(z):
    """Modified Bessel function I_1."""
    return bessel_i_nu(1.0, z)


def bessel_i1_i0_ratio(z):
    """I_1(z)/I_0(z), computed from the scaled forms (no overflow)."""
    zz = _check_nonneg(z)
    r = np.exp(np.asarray(log_bessel_i_nu_scaled(1.0, zz))
               - np.asarray(log_bessel_i_nu_scaled(0.0, zz)))
    return _out(np.where(zz == 0, 0.0, r), z)


# --- second kind -----------------------------------------------------------

def _k_scaled_one(nu, z):
    """e^{z} K_nu(z) for one real or complex z with Re z > 0."""
    az = abs(z)
    # half-width of the strip where the integrand stays bounded
    d = 0.5 * math.pi - abs(math.atan2(z.imag, z.real))
    h = min(0.14 * d, 0.6 / math.sqrt(az), 0.25)
    umax = 2.0 * math.asinh(math.sqrt(45.0 / (2.0 * z.real)))
    n = int(math.ceil(umax / h)) + 1
    if n > 400000:
        raise DomainError("argument too close to the imaginary axis")
    u = h * np.arange(n)
    s = np.sinh(0.5 * u)
    f = np.exp(-2.0 * z * s * s)
    if nu:
        f = f * np.cosh(nu * u)
    return h * (np.sum(f[1:]) + 0.5 * f[0])


def _k_scaled(nu, z):
    zz = np.asarray(z)
    is_complex = np.iscomplexobj(zz)
    flat = np.atleast_1d(zz).ravel()
    if is_complex:
        if np.any(~np.isfinite(flat)) or np.any(flat.real <= 0):
            raise DomainError("K requires Re z > 0")
        out = np.array([_k_scaled_one(nu, complex(v)) for v in flat])
    else:
        flat = flat.astype(float)
        if np.any(~np.isfinite(flat)) or np.any(flat <= 0):
            raise DomainError("K requires z > 0")
        out = np.array([_k_scaled_one(nu, complex(v)).real for v in flat])
    out = out.reshape(zz.shape)
    if zz.ndim == 0:
        return complex(out) if is_complex else float(out)
    return out


def bessel_k0_scaled(z):
    r""":math:`e^{z} K_0(z)`, real ``z > 0`` or complex with ``Re z > 0``."""
    return _k_scaled(0.0, z)


def bessel_k1_scaled(z):
    r""":math:`e^{z} K_1(z)`."""
    return _k_scaled(1.0, z)


def bessel_k0(z):
    """Modified Bessel function K_0 (real or complex, Re z > 0)."""
    return _k_scaled(0.0, z) * np.exp(-np.asarray(z))


def bessel_k1(z):
    """Modified Bessel function K_1 (real or complex, Re z > 0)."""
    return _k_scaled(1.0, z) * np.exp(-np.asarray(z))


# --- vectorised complex helpers for contour work --------------------------

# AMOS returns nan beyond |z| ~ 1e9; five Hankel terms are exact to rounding
# well before that
_ASYM_ABS = 1e8
_HANKEL0 = np.array([1.0, -1.0 / 8, 9.0 / 128, -225.0 / 3072, 11025.0 / 98304])


def _hankel_sum(z, sign):
    w = 1.0 / z
    total = np.zeros_like(z)
    for c in _HANKEL0[::-1]:
        total = total * (sign * w) + c
    return total


def k0e(z):
    r""":math:`e^{z} K_0(z)` for arrays of complex ``z`` with ``Re z > 0``.

    scipy (AMOS) inside ``|z| <= 1e8``, the Hankel expansion outside.
    """
    z = np.asarray(z, dtype=complex)
    far = np.abs(z) > _ASYM_ABS
    out = kve(0, np.where(far, 1.0, z))
    if np.any(far):
        zf = z[far]
        out[far] = np.sqrt(np.pi / (2.0 * zf)) * _hankel_sum(zf, 1.0)
    return out


def i0e(z):
    r""":math:`e^{-z} I_0(z)` for arrays of complex ``z`` with ``Re z > 0``.

    Unlike ``scipy.special.ive`` the scaling is by the full complex
    exponent; the recessive ``e^{-2z}`` term is dropped beyond ``|z| = 1e8``.
    """
    z = np.asarray(z, dtype=complex)
    far = np.abs(z) > _ASYM_ABS
    out = ive(0, np.where(far, 1.0, z)) * np.exp(-1j * np.where(far, 0.0, z.imag))
    if np.any(far):
        zf = z[far]
        out[far] = _hankel_sum(zf, -1.0) / np.sqrt(2.0 * np.pi * zf)
    return out


# --- incomplete gamma ------------------------------------------------------

_EULER = 0.5772156649015329
_ZETA = np.array([zeta(k) for k in range(2, 80)])
_K = np.arange(2, 80)


def _gamma_small_a(a, z):
    """Gamma(a, z) for |a| <= 1/2 and 0 < z < 1.5."""
    # lnGamma(1+a) = a * g(a)
    g = -_EULER + np.sum((-1.0) ** _K * _ZETA / _K * a ** (_K - 1))
    lz = math.log(z)
    head = g * exprel(a * g) - lz * exprel(a * lz)
    tail = 0.0
    term = 1.0
    for k in range(1, 200):
        term *= -z / k
        piece = term * z ** a / (a + k)
        tail += piece
        if abs(piece) < 1e-18 * (abs(head) + abs(tail)):
            break
    return head - tail


def _gamma_cf(a, z):
    """Gamma(a, z) by modified Lentz continued fraction (z >= 1.5)."""
    tiny = 1e-300
    b = z + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-z + a * math.log(z)) * h


def _upper_gamma_one(a, z):
    if z >= 1.5:
        return _gamma_cf(a, z)
    if a > 0.5:
        s = 0.0
        term = 1.0 / a
        k = 0
        while True:
            s += term
            k += 1
            term *= z / (a + k)
            if term < 1e-18 * s:
                break
        lower = math.exp(a * math.log(z) - z) * s
        return math.gamma(a) - lower
    # shift into (-1/2, 1/2], then recur downwards
    n = 0
    while a + n <= -0.5:
        n += 1
    a0 = a + n
    val = _gamma_small_a(a0, z)
    b = a0
    for _ in range(n):
        b -= 1.0
        val = (val - math.exp(b * math.log(z) - z)) / b
    return val


def upper_incomplete_gamma(a, z):
    r"""Upper incomplete gamma :math:`\Gamma(a,z)=\int_z^\infty u^{a-1}e^{-u}du`.

    Implemented for real ``a`` in ``[-2, 2]`` (negative orders included)
    and ``z > 0``.
    """
    if not (-2.0 <= a <= 2.0):
        raise DomainError("a must lie in [-2, 2]")
    zz = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(zz)) or np.any(zz <= 0):
        raise DomainError("z must be finite and > 0")
    out = np.array([_upper_gamma_one(float(a), float(v))
                    for v in np.atleast_1d(zz).ravel()])
    return _out(out.reshape(zz.shape), z)
