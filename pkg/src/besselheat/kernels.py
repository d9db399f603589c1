r"""Closed-form heat kernels of the Bessel operator on the whole half-line.

Densities are with respect to :math:`m^{(\mu)}(dy) = y^{2\mu+1}dy`.  The free
kernel is assembled as

.. math::
    \log p = -\log t - \mu\log(xy) - \frac{(x-y)^2}{2t}
             + \log\left(e^{-xy/t} I_{|\mu|}(xy/t)\right)

so it stays representable when :math:`x, y \gg \sqrt{t}`.
"""

from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import DomainError

__all__ = [
    "PointQuery",
    "free_kernel",
    "log_free_kernel",
    "free_kernel_dx",
    "free_kernel_dx_ratio",
    "mu_half_free_kernel",
    "log_mu_half_free_kernel",
]

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True)
class PointQuery:
    """A kernel evaluation request.

    ``a`` is the Dirichlet barrier (``0`` for the free kernel).  All densities
    are relative to ``y**(2*mu + 1) dy``.
    """

    t: float
    x: float
    y: float
    mu: float = 0.0
    a: float = 1.0

    def __post_init__(self):
        if not (self.t > 0 and self.a >= 0 and self.x > self.a and self.y > self.a):
            raise DomainError(f"invalid point {self}: need t > 0, x, y > a >= 0")
        if not all(np.isfinite([self.t, self.x, self.y, self.mu, self.a])):
            raise DomainError("point coordinates must be finite")

    def as_dict(self):
        return {"t": self.t, "x": self.x, "y": self.y, "mu": self.mu, "a": self.a}


def _positive(*args):
    arrs = [np.asarray(v, dtype=float) for v in args]
    for v in arrs:
        if np.any(~np.isfinite(v)) or np.any(v <= 0):
            raise DomainError("t, x and y must be finite and positive")
    return arrs


def _ret(val, *like):
    if all(np.ndim(v) == 0 for v in like):
        return float(val)
    return val


def log_free_kernel(mu, t, x, y):
    """Logarithm of :func:`free_kernel`."""
    if not (np.isfinite(mu) and abs(mu) <= 50):
        raise DomainError("|mu| must be <= 50")
    t_, x_, y_ = _positive(t, x, y)
    # canonical ordering keeps the result bit-symmetric in (x, y)
    lo, hi = np.minimum(x_, y_), np.maximum(x_, y_)
    z = lo * hi / t_
    logi = specfun.log_bessel_i_nu_scaled(abs(mu), z)
    val = -np.log(t_) - mu * np.log(lo * hi) - (hi - lo) ** 2 / (2.0 * t_) + logi
    return _ret(val, t, x, y)


def free_kernel(mu, t, x, y):
    r"""Free kernel :math:`p^{(\mu)}(t,x,y)` on :math:`(0,\infty)`."""
    return _ret(np.exp(log_free_kernel(mu, t, x, y)), t, x, y)


def free_kernel_dx_ratio(t, x, y):
    r"""``(d/dx p)(t,x,y) / p(t,x,y)`` for ``mu = 0``.

    Equals :math:`(y I_1(xy/t)/I_0(xy/t) - x)/t`.
    """
    t_, x_, y_ = _positive(t, x, y)
    r = specfun.bessel_i1_i0_ratio(x_ * y_ / t_)
    return _ret((y_ * r - x_) / t_, t, x, y)


def free_kernel_dx(t, x, y):
    """x-derivative of the ``mu = 0`` free kernel."""
    return _ret(np.asarray(free_kernel(0.0, t, x, y)) * free_kernel_dx_ratio(t, x, y),
                t, x, y)


def log_mu_half_free_kernel(t, x, y):
    """Logarithm of :func:`mu_half_free_kernel`."""
    t_, x_, y_ = _positive(t, x, y)
    lo, hi = np.minimum(x_, y_), np.maximum(x_, y_)
    val = (-_LOG_SQRT_2PI - 0.5 * np.log(t_) - np.log(lo * hi)
           - (hi - lo) ** 2 / (2.0 * t_) + np.log(-np.expm1(-2.0 * lo * hi / t_)))
    return _ret(val, t, x, y)


def mu_half_free_kernel(t, x, y):
    r"""Free kernel at ``mu = 1/2`` via :math:`I_{1/2}(z)=\sqrt{2/(\pi z)}\sinh z`.

    .. math::
        \frac{1}{\sqrt{2\pi t}}\frac{1}{xy}
        \left(e^{-(x-y)^2/2t} - e^{-(x+y)^2/2t}\right)
    """
    return _ret(np.exp(log_mu_half_free_kernel(t, x, y)), t, x, y)
