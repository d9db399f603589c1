r"""First passage of the two-dimensional Bessel process to level one.

``q(x, s)`` is the density of :math:`T_1` under :math:`P_x`, ``x > 1``.  The
oracle inverts the classical transform

.. math::
    E_x e^{-\lambda T_1} = \frac{K_0(x\sqrt{2\lambda})}{K_0(\sqrt{2\lambda})}

on the contour of :mod:`besselheat.laplace`.  The profile functions are
constant-free comparison shapes; their comparability constants are only
bracketed empirically.
"""

import math

import numpy as np
from . import laplace
from .errors import DomainError, InversionError
from .quad import DEFAULT_CFG, integrate_gk
from .specfun import k0e

__all__ = [
    "q_estimate_profile",
    "log_q_estimate_profile",
    "survival_estimate_profile",
    "q_lower_bound",
    "log_q_lower_bound",
    "log_hitting_transform",
    "q_oracle",
    "log_q_oracle",
    "q_oracle_array",
    "survival_oracle",
    "survival_oracle_array",
    "survival_by_quadrature",
    "tail_by_quadrature",
    "total_mass",
    "laplace_by_quadrature",
    "integrate_q",
    "log_q_far",
    "log_q_at_log_time",
]


def _check(x, s, name="s"):
    x_ = np.asarray(x, dtype=float)
    s_ = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(x_)) or np.any(x_ <= 1):
        raise DomainError("x must be finite and > 1")
    if np.any(~np.isfinite(s_)) or np.any(s_ <= 0):
        raise DomainError(f"{name} must be finite and > 0")
    return x_, s_


def _ret(val, *like):
    if all(np.ndim(v) == 0 for v in like):
        return float(val)
    return val


def log_q_estimate_profile(x, s):
    """Logarithm of :func:`q_estimate_profile`."""
    x_, s_ = _check(x, s)
    gauss = -(x_ - 1.0) ** 2 / (2.0 * s_)
    short = np.log(x_ - 1.0) - 0.5 * np.log(x_) - 1.5 * np.log(s_) + gauss
    long_ = (np.log(x_ - 1.0) - np.log(x_) + np.log1p(np.log(x_))
             - np.log1p(np.log(s_ + x_)) - np.log1p(np.log1p(s_ / x_))
             - np.log(s_) + gauss)
    return _ret(np.where(s_ < 2.0 * x_, short, long_), x, s)


def q_estimate_profile(x, s):
    """Comparison shape for the first-passage density (no constants).

    For ``s < 2x`` it is ``(x-1)/sqrt(x) * s**-1.5 * exp(-(x-1)**2/(2s))``;
    for ``s >= 2x`` the logarithmic long-time form.
    """
    return _ret(np.exp(log_q_estimate_profile(x, s)), x, s)


def survival_estimate_profile(x, t):
    """``min(1, ln x / ln(1 + sqrt t))``."""
    x_, t_ = _check(x, t, "t")
    return _ret(np.minimum(1.0, np.log(x_) / np.log1p(np.sqrt(t_))), x, t)


def log_q_lower_bound(x, s):
    """Logarithm of :func:`q_lower_bound`."""
    x_, s_ = _check(x, s)
    val = (np.log(x_ - 1.0) - 0.5 * np.log(2.0 * np.pi * x_)
           - 1.5 * np.log(s_) - (x_ - 1.0) ** 2 / (2.0 * s_))
    return _ret(val, x, s)


def q_lower_bound(x, s):
    """``(x-1)/sqrt(2 pi x) * s**-1.5 * exp(-(x-1)**2/(2s))``, a pointwise
    lower bound for the first-passage density."""
    return _ret(np.exp(log_q_lower_bound(x, s)), x, s)


def log_hitting_transform(lam, x, a=1.0):
    """``log(K0(x z) / K0(a z))`` with ``z = sqrt(2 lam)``; broadcasting."""
    z = np.sqrt(2.0 * lam)
    x = np.asarray(x, dtype=float)
    out = np.log(k0e(x * z)) - np.log(k0e(a * z)) - (x - a) * z
    return out if np.iscomplexobj(z) else out.real


def q_oracle_array(x, s, cfg=DEFAULT_CFG):
    """Vectorised oracle.  Returns ``(log_q, rel_error)`` arrays.

    Points whose coarse and fine inversions disagree by more than
    ``cfg.inversion_tol`` (or, for huge exponents, the conditioning of
    ``exp``) have ``log_q = nan``.  ``rel_error`` also carries
    the roundoff of very large exponents, which can exceed the tolerance in
    deep tails without invalidating the value.
    """
    x_, s_ = _check(x, s)
    x_, s_ = np.broadcast_arrays(x_, s_)
    shape = x_.shape
    xf, sf = x_.reshape(-1), s_.reshape(-1)
    c = xf - 1.0
    saddle = c * c / (2.0 * sf) >= laplace.K_MIN
    logv = np.empty(xf.shape)
    err = np.empty(xf.shape)
    diff = np.empty(xf.shape)
    for mask, minus_one in ((saddle, False), (~saddle, True)):
        if not np.any(mask):
            continue
        xm = xf[mask][:, None]

        def tr(lam, xm=xm, minus_one=minus_one):
            logf = log_hitting_transform(lam, xm)
            # away from the saddle, invert F - 1: the constant 1 is an atom at
            # s = 0 and would only add cancellation for s > 0
            return np.log(laplace.cexpm1(logf)) if minus_one else logf

        inv = laplace.invert(tr, sf[mask], c[mask], cfg.talbot_nodes)
        logv[mask] = inv.log_value
        err[mask] = inv.rel_error
        diff[mask] = inv.disagreement
    # the two rules cannot agree better than exp() of the exponent allows
    tol = np.maximum(cfg.inversion_tol, 32.0 * laplace.EPS * (np.abs(logv) + 1.0))
    logv = np.where(diff <= tol, logv, np.nan)
    return logv.reshape(shape), err.reshape(shape)


FAR_LOG_TIME = math.log(1e20)
_LN2_MINUS_EULER = math.log(2.0) - 0.5772156649015329


def log_q_far(x, log_s, cfg=DEFAULT_CFG):
    """Log first-passage density at ``s = exp(log_s)``, for ``log_s`` beyond
    ``FAR_LOG_TIME`` where ``s`` may not be representable.

    On the contour ``|sqrt(2 lam)| < 1e-8`` there, and the transform minus one
    is ``-ln x / (ln 2 - gamma - ln z)`` up to a relative ``O(z^2 ln z)``.
    """
    x = float(x)
    if not x > 1:
        raise DomainError("x must be > 1")
    if not log_s >= FAR_LOG_TIME:
        raise DomainError("log_q_far needs log_s >= FAR_LOG_TIME")
    mu, lam_s, u, h = laplace.contour(1.0, 0.0, cfg.talbot_nodes)
    log_z = 0.5 * (np.log(2.0 * lam_s) - log_s)
    logf = np.log(-math.log(x) / (_LN2_MINUS_EULER - log_z))
    inv = laplace.trapezoid_sum(lam_s, logf, u, h,
                                np.log(2.0 * mu / np.pi) - log_s)
    if not inv.disagreement[0] <= cfg.inversion_tol:
        raise InversionError("far-tail inversion did not converge")
    return float(inv.log_value[0])


def log_q_at_log_time(x, log_s, cfg=DEFAULT_CFG):
    """Log density at ``exp(log_s)``, dispatching to the far-tail form."""
    if log_s >= FAR_LOG_TIME:
        return log_q_far(x, log_s, cfg)
    return log_q_oracle(x, math.exp(log_s), cfg)


def _log_time_window(x):
    c2 = (x - 1.0) ** 2
    # q(s) s < exp(-100) relative to its peak below s = c^2/200
    return math.log(c2 / 200.0), sorted({math.log(c2), math.log(2.0 * x),
                                         math.log(x * x)})


def integrate_q(x, t_lo=0.0, t_hi=math.inf, weight=None, cfg=DEFAULT_CFG,
                rel_tol=1e-10):
    """``int_{t_lo}^{t_hi} q(x, s) w(s) ds`` by adaptive Gauss-Kronrod.

    Integrates in ``w = ln s``; an infinite upper end is mapped to
    ``v = 1/ln s`` beyond ``FAR_LOG_TIME`` where the integrand stays finite
    (``q(s) s ln^2 s`` tends to a constant).  ``weight`` takes ``s`` and
    must be bounded.
    """
    x = float(x)
    w_floor, brk = _log_time_window(x)
    w_lo = w_floor if t_lo <= 0 else max(math.log(t_lo), w_floor)
    w_hi = math.inf if math.isinf(t_hi) else math.log(t_hi)
    wt = weight or (lambda s: 1.0)

    def f_w(w):
        s = math.exp(w)
        return math.exp(log_q_at_log_time(x, w, cfg) + w) * wt(s)

    total = 0.0
    near_hi = min(w_hi, FAR_LOG_TIME)
    if near_hi > w_lo:
        pts = [b for b in brk if w_lo < b < near_hi] or None
        total += integrate_gk(f_w, w_lo, near_hi, rel_tol, cfg.max_subdivisions,
                              points=pts)[0]
    if math.isinf(w_hi):
        w0 = max(w_lo, FAR_LOG_TIME)

        def f_v(v):
            if v <= 0:
                return 0.0
            w = 1.0 / v
            return math.exp(log_q_at_log_time(x, w, cfg) + w) * wt(math.inf) / (v * v)

        total += integrate_gk(f_v, 0.0, 1.0 / w0, rel_tol, cfg.max_subdivisions)[0]
    return total


def log_q_oracle(x, s, cfg=DEFAULT_CFG):
    """Log of the first-passage density; raises :class:`InversionError`."""
    logv, err = q_oracle_array(x, s, cfg)
    if np.any(np.isnan(logv)):
        raise InversionError(
            f"first-passage inversion did not converge (rel. disagreement "
            f"{np.nanmax(err):.3g} > {cfg.inversion_tol:.3g})")
    return _ret(logv, x, s)


def q_oracle(x, s, cfg=DEFAULT_CFG):
    """First-passage density ``q_{x,1}(s)`` by numerical inversion."""
    return _ret(np.exp(log_q_oracle(x, s, cfg)), x, s)


def survival_oracle_array(x, t, cfg=DEFAULT_CFG):
    """Vectorised ``P_x(T_1 > t)``.  Returns ``(value, abs_error)``.

    Short times invert ``F/lam`` (the distribution function) and subtract
    from one; long times invert ``(1 - F)/lam`` directly so that small
    survival probabilities keep relative accuracy.
    """
    x_, t_ = _check(x, t, "t")
    x_, t_ = np.broadcast_arrays(x_, t_)
    shape = x_.shape
    xf, tf = x_.reshape(-1), t_.reshape(-1)
    c = xf - 1.0
    saddle = c * c / (2.0 * tf) >= laplace.K_MIN
    val = np.empty(xf.shape)
    err = np.empty(xf.shape)
    if np.any(saddle):
        xm = xf[saddle][:, None]
        inv = laplace.invert(lambda lam: log_hitting_transform(lam, xm) - np.log(lam),
                             tf[saddle], c[saddle], cfg.talbot_nodes)
        cdf = inv.value
        val[saddle] = 1.0 - cdf
        err[saddle] = inv.rel_error * cdf + 1e-16
    if np.any(~saddle):
        xm = xf[~saddle][:, None]

        def tr(lam):
            return np.log(-laplace.cexpm1(log_hitting_transform(lam, xm))) - np.log(lam)

        inv = laplace.invert(tr, tf[~saddle], c[~saddle], cfg.talbot_nodes)
        val[~saddle] = inv.value
        err[~saddle] = inv.rel_error * inv.value
    bad = ~(err <= max(cfg.inversion_tol, 1e-12))
    val = np.where(bad, np.nan, val)
    return val.reshape(shape), err.reshape(shape)


def survival_oracle(x, t, cfg=DEFAULT_CFG):
    """Survival probability ``P_x(T_1 > t)`` of the 2-d Bessel process."""
    val, err = survival_oracle_array(x, t, cfg)
    if np.any(np.isnan(val)):
        raise InversionError("survival inversion did not converge")
    return _ret(val, x, t)


def survival_by_quadrature(x, t, cfg=DEFAULT_CFG):
    """``1 - int_0^t q(x, s) ds`` by adaptive quadrature of the density
    oracle (independent of :func:`survival_oracle` except for the Bessel
    transform)."""
    _check(x, t, "t")
    return 1.0 - integrate_q(x, 0.0, t, cfg=cfg)


def tail_by_quadrature(x, t, cfg=DEFAULT_CFG):
    """``int_t^inf q(x, s) ds`` by quadrature, including the far tail."""
    _check(x, t, "t")
    return integrate_q(x, t, math.inf, cfg=cfg)


def total_mass(x, cfg=DEFAULT_CFG):
    """``int_0^inf q(x, s) ds``; equals one for a recurrent process."""
    _check(x, 1.0)
    return integrate_q(x, 0.0, math.inf, cfg=cfg)


def laplace_by_quadrature(x, lam, cfg=DEFAULT_CFG):
    """``int_0^inf exp(-lam s) q(x, s) ds`` by quadrature."""
    _check(x, lam, "lam")
    return integrate_q(x, 0.0, math.inf, cfg=cfg,
                       weight=lambda s: 0.0 if math.isinf(s) else math.exp(-lam * s))
