r"""Dirichlet heat kernel of the ``mu = 0`` Bessel operator on ``(1, inf)``.

The killed kernel obeys the Hunt formula

.. math::
    p_1(t,x,y) = p(t,x,y) - \int_0^t q_{x,1}(s)\,p(t-s,1,y)\,ds .

The subtracted term is a time convolution, so in the Laplace domain it is the
product of the first-passage transform and the free resolvent
:math:`2 I_0(z\,x\wedge y) K_0(z\,x\vee y)`, :math:`z=\sqrt{2\lambda}`.  With
``x <= y`` the transform of the killed kernel collapses to

.. math::
    \hat p_1 = \frac{2K_0(zy)}{K_0(z)}
        \left[I_0(zx)K_0(z) - K_0(zx)I_0(z)\right],

whose bracket vanishes linearly at ``x = 1``.  Writing it with scaled Bessel
functions (and a Taylor series for the bracket next to the barrier) removes
the catastrophic cancellation of the time-domain subtraction, and one contour
inversion returns :math:`p_1` with relative accuracy even where
:math:`p_1 \ll p`.

:func:`hunt_quadrature` evaluates the time-domain formula directly and is
kept as an independent cross-check.
"""

from dataclasses import dataclass
import math

import numpy as np
from . import hitting, kernels, laplace
from .specfun import i0e, k0e
from .errors import CancellationError, DomainError, InversionError
from .quad import DEFAULT_CFG, QuadCfg, integrate_gk

__all__ = [
    "QuadCfg",
    "KernelValue",
    "killed_kernel",
    "killed_kernel_array",
    "log_killed_transform",
    "log_excess_transform",
    "hunt_quadrature",
    "killed_kernel_mu_half",
    "log_killed_kernel_mu_half",
    "killed_kernel_scaled",
    "killed_kernel_barrier",
    "sandwich_bounds",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# error bounds looser than this fraction of the value make a point unusable
UNRESOLVED = 0.1


@dataclass(frozen=True)
class KernelValue:
    """A kernel value with its attached relative error bound."""

    value: float
    log_value: float
    rel_error: float

    @property
    def error(self):
        return self.value * self.rel_error


def _bracket_series(z, d, a, n_terms=60):
    """``D(a + d) = I0(z(a+d)) K0(za) - K0(z(a+d)) I0(za)`` by its Taylor
    series in ``d``.

    ``D`` solves ``x D'' + D' - z**2 x D = 0`` with ``D(a) = 0`` and
    ``D'(a) = 1/a`` (the Wronskian), which gives a three-term recurrence
    for the coefficients.  Accurate for ``|z| d <= 1`` and ``d <= a/4``,
    where the direct difference cancels.
    """
    z2 = z * z
    c_m1 = np.zeros_like(z)
    c_0 = np.zeros_like(z)
    c_1 = np.ones_like(z) / a
    power = d
    total = c_1 * power
    for m in range(n_terms):
        c_2 = (z2 * (a * c_0 + c_m1) - (m + 1) ** 2 * c_1) / (a * (m + 2) * (m + 1))
        power = power * d
        total = total + c_2 * power
        c_m1, c_0, c_1 = c_0, c_1, c_2
    return total


def _transform_parts(lam, x, y, a):
    """``(z, A, B)`` with the killed transform ``exp(-z (y-x)) A`` and the
    transform of the image bound ``exp(-z (y-x)) B``; ``x <= y``."""
    z = np.sqrt(2.0 * lam)
    d = x - a
    za = a * z
    bracket = (i0e(z * x) * k0e(za)
               - k0e(z * x) * i0e(za) * np.exp(-2.0 * z * d))
    near = (np.abs(z) * d <= 1.0) & (d <= 0.25 * a)
    if np.any(near):
        dn = np.broadcast_to(d, z.shape)[near]
        bracket = np.array(bracket, dtype=complex)
        bracket[near] = _bracket_series(z[near], dn, a) * np.exp(-z[near] * dn)
    A = 2.0 * k0e(z * y) / k0e(za) * bracket
    B = -np.expm1(-2.0 * z * d) / (z * np.sqrt(x * y))
    return z, A, B


def log_killed_transform(lam, x, y, a=1.0):
    """Log Laplace transform (in ``t``) of the kernel killed at ``a``.

    ``x <= y`` is required elementwise; arrays broadcast against ``lam``.
    """
    z, A, _ = _transform_parts(lam, x, y, a)
    return -z * (y - x) + np.log(A)


def log_excess_transform(lam, x, y, a=1.0):
    """Log transform of ``p_a - sqrt(xy) p_a^(1/2)``, the killed kernel minus
    its image lower bound; ``x <= y``."""
    z, A, B = _transform_parts(lam, x, y, a)
    return -z * (y - x) + np.log(A - B)


def _log_image_bound(t, x, y, a=1.0):
    return (-_LOG_SQRT_2PI - 0.5 * np.log(t * x * y) - (x - y) ** 2 / (2.0 * t)
            + np.log(-np.expm1(-2.0 * (x - a) * (y - a) / t)))


def _killed_core(t, x, y, n_nodes, a=1.0, rel_tol=DEFAULT_CFG.rel_tol):
    """Near the barrier the transform is O(d) while the kernel is O(d**2) at
    fixed t: the excess over the image bound is inverted instead, and the
    bound, known in closed form, is added back.  Points where that fails
    fall back to direct inversion."""
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    exc = laplace.invert(
        lambda lam: log_excess_transform(lam, lo[:, None], hi[:, None], a),
        t, hi - lo, n_nodes)
    log_h = _log_image_bound(t, lo, hi, a)
    with np.errstate(invalid="ignore"):
        logv = np.logaddexp(log_h, exc.log_value)
        # rounding of the closed-form exponent is part of the error
        err = (exc.rel_error * np.exp(exc.log_value - logv)
               + 4.0 * laplace.EPS * (np.abs(log_h) + 1.0))
    err = np.where(np.isfinite(logv), err, np.inf)
    floor = 32.0 * laplace.EPS * (np.abs(np.nan_to_num(logv)) + 1.0)
    retry = ~(err <= np.maximum(rel_tol, floor))
    if np.any(retry):
        plain = laplace.invert(
            lambda lam: log_killed_transform(lam, lo[retry][:, None], hi[retry][:, None], a),
            t[retry], (hi - lo)[retry], n_nodes)
        better = ~(plain.rel_error >= err[retry])
        idx = np.flatnonzero(retry)[better]
        logv[idx] = plain.log_value[better]
        err[idx] = plain.rel_error[better]
    return logv, err


def killed_kernel_array(t, x, y, cfg=DEFAULT_CFG, chunk=256):
    """Vectorised killed kernel.

    Returns ``(log_value, rel_error)`` arrays.  Points that failed to invert
    have ``log_value = nan`` and ``rel_error = inf``.  Work is split into
    fixed-size chunks so results do not depend on how callers batch points.
    """
    t_, x_, y_ = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, y)))
    if np.any(~np.isfinite(t_)) or np.any(t_ <= 0):
        raise DomainError("t must be finite and > 0")
    if (np.any(~np.isfinite(x_)) or np.any(~np.isfinite(y_))
            or np.any(x_ <= 1) or np.any(y_ <= 1)):
        raise DomainError("x and y must be finite and > 1")
    shape = t_.shape
    tf, xf, yf = t_.reshape(-1), x_.reshape(-1), y_.reshape(-1)
    logv = np.empty(tf.shape)
    err = np.empty(tf.shape)
    for start in range(0, tf.size, chunk):
        sl = slice(start, start + chunk)
        logv[sl], err[sl] = _killed_core(tf[sl], xf[sl], yf[sl], cfg.talbot_nodes,
                                         rel_tol=cfg.rel_tol)
    return logv.reshape(shape), err.reshape(shape)


def _tolerance(cfg, logv):
    # exp() of a rounded exponent is only good to eps * |exponent|
    return max(cfg.rel_tol, 32.0 * laplace.EPS * (abs(logv) + 1.0))


def killed_kernel(t, x, y, cfg=DEFAULT_CFG):
    """Killed kernel ``p_1(t, x, y)`` with an error bound.

    Returns
    -------
    KernelValue

    Raises
    ------
    CancellationError
        If the value cannot be resolved to ``cfg.rel_tol`` (relaxed to the
        conditioning of ``exp`` for huge exponents); the exception
        carries the enclosure ``[0, p(t, x, y)]``.
    """
    logv, err = killed_kernel_array(t, x, y, cfg)
    logv, err = float(logv), float(err)
    if not (np.isfinite(logv) and err <= _tolerance(cfg, logv)):
        bound = kernels.free_kernel(0.0, t, x, y)
        raise CancellationError(
            f"killed kernel unresolved at t={t}, x={x}, y={y} "
            f"(rel. error {err:.3g} > {cfg.rel_tol:.3g})", (0.0, bound))
    return KernelValue(math.exp(logv), logv, err)


def hunt_quadrature(t, x, y, cfg=DEFAULT_CFG, rel_tol=1e-10):
    """Time-domain Hunt formula with the first-passage density oracle.

    The convolution is integrated in ``u = 1/(t-s) - 1/t``, which turns the
    concentration of ``p(t-s, 1, y)`` at ``s -> t`` into a decaying tail.
    Loses relative accuracy when ``p_1 << p``; intended for cross-checks.
    """
    t, x, y = float(t), float(x), float(y)
    if not (t > 0 and x > 1 and y > 1):
        raise DomainError("need t > 0 and x, y > 1")
    log_p = kernels.log_free_kernel(0.0, t, x, y)

    def integrand(u):
        tau = 1.0 / (u + 1.0 / t)
        s = t - tau
        if s <= 0.0:
            return 0.0
        lq = hitting.log_q_oracle(x, s, cfg)
        lp = kernels.log_free_kernel(0.0, tau, 1.0, y)
        return math.exp(lq + lp - log_p) * tau * tau

    # u = k/t is s = t k/(k+1): break on a geometric ladder around s = t/2
    edges = [0.0] + [10.0 ** k / t for k in range(-6, 7)]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate_gk(integrand, lo, hi, rel_tol, cfg.max_subdivisions)[0]
    total += integrate_gk(integrand, edges[-1], math.inf, rel_tol,
                          cfg.max_subdivisions)[0]
    return math.exp(log_p) * (1.0 - total)


def log_killed_kernel_mu_half(t, x, y):
    """Logarithm of :func:`killed_kernel_mu_half`."""
    t_, x_, y_ = (np.asarray(v, dtype=float) for v in (t, x, y))
    if np.any(t_ <= 0) or np.any(x_ <= 1) or np.any(y_ <= 1):
        raise DomainError("need t > 0 and x, y > 1")
    val = (-_LOG_SQRT_2PI - 0.5 * np.log(t_) - np.log(x_ * y_)
           - (x_ - y_) ** 2 / (2.0 * t_)
           + np.log(-np.expm1(-2.0 * (x_ - 1.0) * (y_ - 1.0) / t_)))
    if np.ndim(val) == 0:
        return float(val)
    return val


def killed_kernel_mu_half(t, x, y):
    r"""Exact killed kernel for ``mu = 1/2`` (the 3-d Bessel process).

    The Dirichlet kernel of the line reflected at 1, divided by ``xy``:

    .. math::
        \frac{1}{\sqrt{2\pi t}}\frac{1}{xy}
        \left(e^{-(x-y)^2/2t} - e^{-(x+y-2)^2/2t}\right)
    """
    v = np.exp(log_killed_kernel_mu_half(t, x, y))
    return float(v) if np.ndim(v) == 0 else v


def killed_kernel_scaled(a, t, x, y, cfg=DEFAULT_CFG):
    """Kernel killed at barrier ``a``, obtained from the ``a = 1`` kernel by
    Brownian scaling: ``p_a(t,x,y) = a**-2 p_1(t/a**2, x/a, y/a)``.

    Returns a :class:`KernelValue`.
    """
    if not (a > 0 and x > a and y > a and t > 0):
        raise DomainError("need a > 0, x, y > a and t > 0")
    kv = killed_kernel(t / a ** 2, x / a, y / a, cfg)
    logv = kv.log_value - 2.0 * math.log(a)
    return KernelValue(math.exp(logv), logv, kv.rel_error)


def killed_kernel_barrier(a, t, x, y, cfg=DEFAULT_CFG):
    """Kernel killed at ``a`` from the Hunt formula with barrier ``a`` itself
    (no rescaling); the second code path for :func:`killed_kernel_scaled`."""
    if not (a > 0 and x > a and y > a and t > 0):
        raise DomainError("need a > 0, x, y > a and t > 0")
    lv, er = _killed_core(np.array([float(t)]), np.array([float(x)]),
                          np.array([float(y)]), cfg.talbot_nodes, a, cfg.rel_tol)
    logv, err = float(lv[0]), float(er[0])
    if not (np.isfinite(logv) and err <= _tolerance(cfg, logv)):
        raise InversionError("barrier-a inversion did not converge", (logv, logv))
    return KernelValue(math.exp(logv), logv, err)


def sandwich_bounds(t, x, y):
    """Bounds from comparison with the ``mu = 1/2`` process.

    ``lower = sqrt(xy) * killed_kernel_mu_half(t, x, y)`` holds for all
    ``t``; ``upper = e**0.5 * lower`` is returned for ``t <= 4`` and ``None``
    otherwise.
    """
    if not (t > 0 and x > 1 and y > 1):
        raise DomainError("need t > 0 and x, y > 1")
    lower = math.exp(0.5 * math.log(x * y) + log_killed_kernel_mu_half(t, x, y))
    upper = math.exp(0.5) * lower if t <= 4 else None
    return lower, upper
