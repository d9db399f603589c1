r"""Numerical inversion of Laplace transforms along a parabolic Talbot contour.

The Bromwich line is deformed to :math:`\lambda(u) = \mu (1 + iu)^2`,
:math:`u \in \mathbb{R}`, and the integral is summed with the trapezoidal
rule.  Transforms are supplied in log form so that the integrand is assembled
as a single exponent and the whole sum is evaluated relative to its largest
term.

The contour scale :math:`\mu` is chosen per point.  For transforms carrying a
factor :math:`e^{-c\sqrt{2\lambda}}` (every transform used here) the contour
is pushed through the saddle point :math:`\mu = c^2/(2s^2)` when that is
larger than the default ``k_min / s``.  On the parabola that factor has
constant modulus, so the largest term of the sum has the same exponential
size as the answer and deep tails keep their relative accuracy.

Nodes are ``u_k = k h`` for ``k = 0..2N``; the coarse estimate reuses the
even nodes, so one evaluation of the transform yields both the ``N`` and the
``2N`` rule and their disagreement is the reported error.
"""

from dataclasses import dataclass

import numpy as np

EPS = np.finfo(float).eps
TAIL_NATS = 50.0
K_MIN = 1.0


@dataclass(frozen=True)
class Inversion:
    """Result of a vectorised inversion.

    ``log_value`` is NaN where either rule produced a nonpositive sum.
    ``disagreement`` is the relative N-vs-2N difference (the convergence
    test); ``rel_error`` adds the roundoff carried by large exponents.
    """

    log_value: np.ndarray
    rel_error: np.ndarray
    disagreement: np.ndarray

    @property
    def value(self):
        return np.exp(self.log_value)


def cexpm1(logv):
    """``exp(logv) - 1`` for complex ``logv`` without cancellation."""
    a, b = logv.real, logv.imag
    re = np.expm1(a) * np.cos(b) - 2.0 * np.sin(0.5 * b) ** 2
    return re + 1j * np.exp(a) * np.sin(b)


def contour(s, c, n_nodes, k_min=K_MIN):
    """Contour parameters for each point.

    Returns ``(mu, lam, u, h)`` with ``lam`` of shape ``(P, 2N + 1)``.
    """
    s = np.asarray(s, dtype=float).reshape(-1)
    c = np.broadcast_to(np.asarray(c, dtype=float), s.shape)
    k = np.maximum(k_min, c * c / (2.0 * s))
    mu = k / s
    umax = np.sqrt(TAIL_NATS / k)
    h = umax / (2 * n_nodes)
    u = h[:, None] * np.arange(2 * n_nodes + 1)[None, :]
    lam = mu[:, None] * (1.0 + 1j * u) ** 2
    return mu, lam, u, h


def invert(log_transform, s, c, n_nodes=48, k_min=K_MIN):
    """Invert ``exp(log_transform(lam))`` at times ``s``.

    Parameters
    ----------
    log_transform : callable
        Maps a complex array ``lam`` of shape ``(P, M)`` to the complex log of
        the transform, same shape.  Row ``i`` belongs to point ``i``.
    s : array_like, shape (P,)
        Positive evaluation times.
    c : array_like
        Exponential rate of the transform, i.e. it behaves like
        ``exp(-c * sqrt(2 * lam))``; ``0`` if it has no such factor.
    n_nodes : int
        ``N``; the transform is evaluated at ``2N + 1`` nodes.

    Returns
    -------
    Inversion
    """
    s = np.asarray(s, dtype=float).reshape(-1)
    mu, lam, u, h = contour(s, c, n_nodes, k_min)
    logf = log_transform(lam)
    return trapezoid_sum(lam * s[:, None], logf, u, h, np.log(2.0 * mu / np.pi))


def trapezoid_sum(lam_s, logf, u, h, log_prefactor):
    """Sum the contour integrand given ``lam * s`` and the log-transform.

    Exposed so that callers can build the contour in scaled variables when
    ``s`` itself is not representable.
    """
    log_terms = lam_s + logf + np.log1p(1j * u)
    top = np.max(log_terms.real, axis=1)
    terms = np.exp(log_terms - top[:, None])

    w_fine = np.ones(terms.shape[1])
    w_fine[0] = 0.5
    fine = np.sum(w_fine * terms, axis=1).real * h
    w_coarse = np.zeros(terms.shape[1])
    w_coarse[::2] = 1.0
    w_coarse[0] = 0.5
    coarse = np.sum(w_coarse * terms, axis=1).real * (2.0 * h)

    scale = log_prefactor + top
    with np.errstate(invalid="ignore", divide="ignore"):
        lv_fine = np.where(fine > 0, np.log(np.abs(fine)) + scale, np.nan)
        lv_coarse = np.where(coarse > 0, np.log(np.abs(coarse)) + scale, np.nan)
        gain = np.sum(w_fine * np.abs(terms), axis=1) * h / np.abs(fine)
        expo = np.max(np.abs(lam_s), axis=1) + np.max(np.abs(logf), axis=1)
        roundoff = 8.0 * EPS * (gain * np.sqrt(terms.shape[1]) + expo + 1.0)
        diff = np.abs(np.expm1(lv_fine - lv_coarse))
    bad = ~np.isfinite(lv_fine) | ~np.isfinite(lv_coarse)
    diff = np.where(bad, np.inf, diff)
    lv_fine = np.where(bad, np.nan, lv_fine)
    rel = np.where(bad, np.inf, diff + roundoff)
    return Inversion(lv_fine, rel, diff)
