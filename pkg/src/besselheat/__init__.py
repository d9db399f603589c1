"""Dirichlet heat kernels of Bessel operators on half-lines.

Densities are taken with respect to ``y**(2*mu + 1) dy``.  Modules:

* :mod:`besselheat.specfun`: modified Bessel and incomplete gamma functions
* :mod:`besselheat.kernels`: closed-form free kernels
* :mod:`besselheat.hitting`: first-passage density to level 1
* :mod:`besselheat.killed`: the killed kernel for ``mu = 0`` and ``mu = 1/2``
* :mod:`besselheat.mc`: Monte Carlo oracle
* :mod:`besselheat.verify`: estimate envelopes, sweeps and inequality checks
* :mod:`besselheat.cli`: the ``besselheat`` command
"""

from .errors import (
    BaselineMissingError,
    BesselHeatError,
    BesselOverflowError,
    CancellationError,
    DomainError,
    InversionError,
    QuadratureError,
    RegimeError,
    ReportError,
)
from .kernels import PointQuery, free_kernel, log_free_kernel
from .killed import KernelValue, killed_kernel, killed_kernel_mu_half, sandwich_bounds
from .quad import QuadCfg

__version__ = "0.1.0"

__all__ = [
    "BaselineMissingError",
    "BesselHeatError",
    "BesselOverflowError",
    "CancellationError",
    "DomainError",
    "InversionError",
    "QuadratureError",
    "RegimeError",
    "ReportError",
    "PointQuery",
    "QuadCfg",
    "KernelValue",
    "free_kernel",
    "log_free_kernel",
    "killed_kernel",
    "killed_kernel_mu_half",
    "sandwich_bounds",
]
