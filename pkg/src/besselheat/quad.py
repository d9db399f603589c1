"""Quadrature settings and adaptive integration helpers."""

from dataclasses import dataclass, asdict
import warnings

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError


@dataclass(frozen=True)
class QuadCfg:
    """Tolerances and node budgets for the quadrature and inversion oracles.

    ``abs_floor`` is the magnitude below which callers should switch to the
    log-form entry points.  ``inversion_tol`` is the N-vs-2N agreement
    required of the first-passage inversion.
    """

    rel_tol: float = 1e-7
    abs_floor: float = 1e-320
    max_subdivisions: int = 2000
    talbot_nodes: int = 48
    inversion_tol: float = 1e-8

    def __post_init__(self):
        if not (0 < self.rel_tol <= 1e-2):
            raise DomainError("rel_tol must lie in (0, 1e-2]")
        if self.max_subdivisions < 16:
            raise DomainError("max_subdivisions must be >= 16")
        if self.talbot_nodes < 8:
            raise DomainError("talbot_nodes must be >= 8")
        if not (0 < self.inversion_tol < 1):
            raise DomainError("inversion_tol must lie in (0, 1)")

    def as_dict(self):
        return asdict(self)


DEFAULT_CFG = QuadCfg()


def integrate_gk(f, a, b, rel_tol=1e-10, limit=2000, points=None):
    """Adaptive Gauss-Kronrod integral of a scalar function.

    Raises :class:`QuadratureError` if the estimated error exceeds
    ``rel_tol`` times the magnitude of the result (with a tiny absolute
    allowance for integrals that vanish).
    """
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=rel_tol,
                                      limit=limit, points=points)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    if not np.isfinite(val) or err > max(rel_tol * abs(val), 1e-300) * 10:
        raise QuadratureError(f"quadrature error {err:.3g} for value {val:.3g}")
    return val, err


def log_tail_limit(logf, start, peak_log, step, nats=40.0, max_doublings=200):
    """Smallest ``start + k * step`` (step doubling) where ``logf`` falls
    ``nats`` below ``peak_log``."""
    b = start + step
    for _ in range(max_doublings):
        if logf(b) < peak_log - nats:
            return b
        step *= 2.0
        b = start + step
    raise QuadratureError("integrand does not decay")
