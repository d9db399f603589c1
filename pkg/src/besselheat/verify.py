r"""Estimate envelopes for the killed kernel and the sweep harness around them.

An envelope :math:`\Phi` is *comparable* to the kernel when
:math:`c \le p_1/\Phi \le C` for positive constants.  The constants are
existential, so a sweep can only report the empirical bracket
``[min_ratio, max_ratio]`` over the grid it visited; brackets are pinned in
baseline files and later runs must stay within them up to a log-scale
tolerance.  Nothing here certifies the constants beyond the swept grid.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
import json
import math
import os

import numpy as np

from . import hitting, kernels, killed, mc, specfun
from .errors import BaselineMissingError, DomainError, RegimeError, ReportError
from .quad import DEFAULT_CFG

__all__ = [
    "GridSpec",
    "DEFAULT_GRID",
    "RatioReport",
    "estimate_small",
    "estimate_large",
    "estimate_unified",
    "estimate_mu",
    "log_estimate_small",
    "log_estimate_large",
    "log_estimate_unified",
    "log_estimate_mu",
    "ratio_sweep",
    "check_inequalities",
    "fnv1a_64",
    "load_baselines",
    "find_baseline",
    "baseline_record",
    "compare_to_baseline",
    "write_baseline",
]

FILTERS = ("all", "small", "large", "prop31", "prop32")
SKIP_FRACTION = 0.1
BASELINE_LOG_TOL = 0.05
SLACK = 1e-12


# ---------------------------------------------------------------- grids

def _axis(spec):
    lo, hi, n = spec
    lo, hi, n = float(lo), float(hi), int(n)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo > 0):
        raise DomainError(f"axis bounds must be finite and positive: {spec}")
    if n == 1:
        if lo != hi:
            raise DomainError("a one-point axis needs lo == hi")
        return np.array([lo])
    if not (lo < hi and n >= 2):
        raise DomainError(f"axis needs lo < hi and n >= 2: {spec}")
    ax = np.geomspace(lo, hi, n)
    ax[0], ax[-1] = lo, hi
    return ax


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced ``(t, x, y)`` grid with a regime filter.

    Each range is ``(lo, hi, n)``.  ``n = 1`` with ``lo == hi`` gives a
    single value.  Filters: ``small`` keeps ``xy <= t`` (ties included),
    ``large`` keeps ``xy > t``, ``prop31`` keeps ``xy < t`` and
    ``y**2 <= m t``, ``prop32`` keeps ``xy < t`` and ``y**2 >= 16 t``.
    """

    t_range: tuple = (1e-3, 1e6, 40)
    x_range: tuple = (1.001, 1e3, 40)
    y_range: tuple = (1.001, 1e3, 40)
    regime_filter: str = "all"
    m: float = 2.0

    def __post_init__(self):
        for name in ("t_range", "x_range", "y_range"):
            val = tuple(getattr(self, name))
            if len(val) != 3:
                raise DomainError(f"{name} must be (lo, hi, n)")
            object.__setattr__(self, name, (float(val[0]), float(val[1]), int(val[2])))
            _axis(getattr(self, name))
        if self.regime_filter not in FILTERS:
            raise DomainError(f"regime_filter must be one of {FILTERS}")
        if not (self.m > 0):
            raise DomainError("m must be > 0")
        object.__setattr__(self, "m", float(self.m))

    def axes(self):
        return _axis(self.t_range), _axis(self.x_range), _axis(self.y_range)

    def points(self):
        """Filtered points ``(t, x, y)`` in canonical order (t, then x, then y)."""
        T, X, Y = np.meshgrid(*self.axes(), indexing="ij")
        T, X, Y = T.ravel(), X.ravel(), Y.ravel()
        keep = regime_mask(self.regime_filter, T, X, Y, self.m)
        return T[keep], X[keep], Y[keep]

    def as_dict(self):
        return {"t_range": list(self.t_range), "x_range": list(self.x_range),
                "y_range": list(self.y_range), "regime_filter": self.regime_filter,
                "m": self.m}

    def canonical(self):
        return json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self):
        return f"{fnv1a_64(self.canonical().encode()):016x}"


DEFAULT_GRID = GridSpec()


def regime_mask(name, t, x, y, m=2.0):
    xy = x * y
    if name == "all":
        return np.ones(np.shape(t), dtype=bool)
    if name == "small":
        return xy <= t
    if name == "large":
        return xy > t
    if name == "prop31":
        return (xy < t) & (y * y <= m * t)
    if name == "prop32":
        return (xy < t) & (y * y >= 16.0 * t)
    raise DomainError(f"unknown regime {name!r}")


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


# ---------------------------------------------------------------- envelopes

def _arrays(t, x, y, floor=1.0):
    t_, x_, y_ = (np.asarray(v, dtype=float) for v in (t, x, y))
    if np.any(~np.isfinite(t_)) or np.any(t_ <= 0):
        raise DomainError("t must be finite and > 0")
    if np.any(x_ <= floor) or np.any(y_ <= floor) or np.any(~np.isfinite(x_ * y_)):
        raise DomainError(f"x and y must be finite and > {floor}")
    return t_, x_, y_


def _out(val, *like):
    return float(val) if all(np.ndim(v) == 0 for v in like) else val


def log_estimate_small(t, x, y):
    """Logarithm of :func:`estimate_small`."""
    t_, x_, y_ = _arrays(t, x, y)
    if np.any(x_ * y_ > t_):
        raise RegimeError("estimate_small needs xy <= t")
    st = np.sqrt(t_)
    val = (np.log(np.log(x_)) + np.log(np.log(y_))
           - np.log(np.log(3.0 * t_ / (x_ + st))) - np.log(np.log(3.0 * t_ / (y_ + st)))
           - np.log(t_) - (x_ * x_ + y_ * y_) / (2.0 * t_))
    return _out(val, t, x, y)


def estimate_small(t, x, y):
    r"""Envelope for ``xy <= t``:

    .. math::
        \frac{\ln x\,\ln y}{\ln\frac{3t}{x+\sqrt t}\,\ln\frac{3t}{y+\sqrt t}}
        \frac1t e^{-(x^2+y^2)/2t}
    """
    return _out(np.exp(log_estimate_small(t, x, y)), t, x, y)


def log_estimate_large(t, x, y):
    """Logarithm of :func:`estimate_large`."""
    t_, x_, y_ = _arrays(t, x, y)
    if np.any(x_ * y_ <= t_):
        raise RegimeError("estimate_large needs xy > t")
    boundary = np.minimum(0.0, np.log(x_ - 1.0) + np.log(y_ - 1.0) - np.log(t_))
    val = boundary - 0.5 * np.log(x_ * y_ * t_) - (x_ - y_) ** 2 / (2.0 * t_)
    return _out(val, t, x, y)


def estimate_large(t, x, y):
    r"""Envelope for ``xy > t``:
    :math:`(1\wedge\frac{(x-1)(y-1)}{t})\,(xyt)^{-1/2}e^{-(x-y)^2/2t}`."""
    return _out(np.exp(log_estimate_large(t, x, y)), t, x, y)


def log_estimate_unified(a, t, x, y):
    """Logarithm of :func:`estimate_unified`."""
    if not (a > 0):
        raise DomainError("a must be > 0")
    t_, x_, y_ = _arrays(t, x, y, floor=a)
    st = np.sqrt(t_)
    num = 3.0 * x_ * y_ + 3.0 * t_
    inner = (np.log(np.log(x_ / a)) + np.log(np.log(y_ / a))
             - np.log(np.log(num / (a * x_ + a * st)))
             - np.log(np.log(num / (a * y_ + a * st)))
             + np.log1p(x_ * y_ / t_))
    val = kernels.log_free_kernel(0.0, t_, x_, y_) + np.minimum(0.0, inner)
    return _out(val, t, x, y)


def estimate_unified(a, t, x, y):
    r"""One-formula envelope for the kernel killed at ``a``: the free kernel
    times

    .. math::
        1\wedge\left[\frac{\ln(x/a)\ln(y/a)}
        {\ln\frac{3xy+3t}{ax+a\sqrt t}\ln\frac{3xy+3t}{ay+a\sqrt t}}
        \left(1+\frac{xy}{t}\right)\right].

    Covariant under Brownian scaling:
    ``estimate_unified(a, t, x, y) == a**-2 * estimate_unified(1, t/a**2, x/a, y/a)``.
    """
    return _out(np.exp(log_estimate_unified(a, t, x, y)), t, x, y)


def log_estimate_mu(mu, t, x, y):
    """Logarithm of :func:`estimate_mu`."""
    if not (math.isfinite(mu) and mu != 0):
        raise DomainError("estimate_mu needs finite mu != 0")
    t_, x_, y_ = _arrays(t, x, y)
    boundary = np.minimum(0.0, np.log(x_ - 1.0) + np.log(y_ - 1.0) - np.log(t_))
    inner = np.minimum(0.0, np.log(x_ * y_ / t_))
    val = (boundary + (abs(mu) - 0.5) * inner - (mu + 0.5) * np.log(x_ * y_)
           - 0.5 * np.log(t_) - (x_ - y_) ** 2 / (2.0 * t_))
    return _out(val, t, x, y)


def estimate_mu(mu, t, x, y):
    r"""Envelope for index ``mu != 0`` and barrier 1:

    .. math::
        \left[1\wedge\frac{(x-1)(y-1)}{t}\right]
        \left(1\wedge\frac{xy}{t}\right)^{|\mu|-1/2}
        \frac{1}{(xy)^{\mu+1/2}\sqrt t}e^{-(x-y)^2/2t}
    """
    return _out(np.exp(log_estimate_mu(mu, t, x, y)), t, x, y)


# ---------------------------------------------------------------- reports

@dataclass
class RatioReport:
    """Extremes of ``oracle / envelope`` over a grid.

    ``rows`` holds the per-point table ``(t, x, y, oracle, envelope, ratio,
    err_bound, skipped)``; ``extra`` carries run-specific side quantities.
    """

    min_ratio: float
    max_ratio: float
    argmin: kernels.PointQuery
    argmax: kernels.PointQuery
    n_points: int
    n_skipped: int
    skipped: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    rows: dict = field(default_factory=dict, repr=False)

    def as_dict(self):
        return {
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "argmin": self.argmin.as_dict() if self.argmin else None,
            "argmax": self.argmax.as_dict() if self.argmax else None,
            "n_points": self.n_points,
            "n_skipped": self.n_skipped,
            "skipped": [q.as_dict() for q in self.skipped],
            "violations": [{"point": q.as_dict(), "description": d}
                           for q, d in self.violations],
            "extra": dict(self.extra),
        }


ENVELOPE_REGIMES = {
    "small": ("small", "prop31", "prop32"),
    "large": ("large",),
    "unified": FILTERS,
    "mu": FILTERS,
}
ORACLES = ("hunt", "mc", "mu_half")


def _parallel_killed(t, x, y, cfg, threads, chunk=256):
    """Killed kernel over many points; chunking is fixed, so results do not
    depend on the worker count."""
    n = t.size
    starts = list(range(0, n, chunk))
    work = [(t[s:s + chunk], x[s:s + chunk], y[s:s + chunk]) for s in starts]
    workers = mc.thread_count(threads)

    def run(args):
        return killed.killed_kernel_array(*args, cfg=cfg, chunk=chunk)

    if workers == 1 or len(work) == 1:
        parts = [run(w) for w in work]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, work))
    if not parts:
        return np.empty(0), np.empty(0)
    return (np.concatenate([p[0] for p in parts]),
            np.concatenate([p[1] for p in parts]))


def _mc_oracle(t, x, y, mc_cfg, threads):
    """Bin-average estimates from one 2-d simulation per distinct ``(t, x)``."""
    logv = np.full(t.shape, np.nan)
    err = np.full(t.shape, np.inf)
    cache = {}
    for i in range(t.size):
        key = (float(t[i]), float(x[i]))
        if key not in cache:
            cfg = mc.McConfig(paths=mc_cfg.paths, dt=min(mc_cfg.dt, key[0] / 200.0),
                              seed=mc_cfg.seed, bins=mc_cfg.bins, r_max=mc_cfg.r_max,
                              bridge_correction=mc_cfg.bridge_correction)
            cache[key] = mc.estimate_kernel_histogram(2, key[1], key[0], cfg, threads)
        for b in cache[key]:
            if b.lo <= y[i] < b.hi and b.p_hat > 0:
                logv[i] = math.log(b.p_hat)
                err[i] = b.stderr / b.p_hat
    return logv, err


def _log_envelope(name, t, x, y, a, mu):
    if name == "small":
        return log_estimate_small(t, x, y)
    if name == "large":
        return log_estimate_large(t, x, y)
    if name == "unified":
        return log_estimate_unified(a, t, x, y)
    if name == "mu":
        return log_estimate_mu(mu, t, x, y)
    raise DomainError(f"unknown envelope {name!r}")


def _point(t, x, y, mu=0.0):
    return kernels.PointQuery(float(t), float(x), float(y), mu, 1.0)


def ratio_sweep(grid, oracle="hunt", envelope="small", cfg=DEFAULT_CFG,
                mc_cfg=None, mu=0.5, threads=None, extra_checks=True):
    """Compare an oracle with an envelope at every grid point.

    Parameters
    ----------
    grid : GridSpec
    oracle : {"hunt", "mc", "mu_half"}
        ``hunt`` is the ``mu = 0`` killed kernel, ``mc`` its 2-d Monte
        Carlo bin average (the bin holding ``y``), ``mu_half`` the exact
        ``mu = 1/2`` kernel.
    envelope : {"small", "large", "unified", "mu"}
        ``unified`` uses barrier 1; ``mu`` uses index ``mu``.
    extra_checks : bool
        For ``hunt``, also test ``p1 <= p`` and the sandwich bounds and
        record failures as violations.

    Points whose oracle error bound exceeds 10% of the value are skipped and
    listed.

    Raises
    ------
    RegimeError
        If the envelope is not defined on the grid's regime filter.
    ReportError
        If no point survives.
    """
    if oracle not in ORACLES:
        raise DomainError(f"oracle must be one of {ORACLES}")
    if envelope not in ENVELOPE_REGIMES:
        raise DomainError(f"envelope must be one of {tuple(ENVELOPE_REGIMES)}")
    if grid.regime_filter not in ENVELOPE_REGIMES[envelope]:
        raise RegimeError(f"envelope {envelope!r} is not defined on regime "
                          f"{grid.regime_filter!r}")
    t, x, y = grid.points()
    if t.size == 0:
        raise ReportError("grid is empty after regime filtering")

    if oracle == "hunt":
        logv, err = _parallel_killed(t, x, y, cfg, threads)
    elif oracle == "mu_half":
        logv = np.asarray(killed.log_killed_kernel_mu_half(t, x, y), dtype=float)
        err = 32.0 * np.finfo(float).eps * (np.abs(logv) + 1.0)
    else:
        logv, err = _mc_oracle(t, x, y, mc_cfg or mc.McConfig(), threads)
    loge = np.asarray(_log_envelope(envelope, t, x, y, 1.0, mu), dtype=float)

    skip = ~np.isfinite(logv) | ~(err <= SKIP_FRACTION)
    lr = logv - loge
    report = _extremes(lr, skip, t, x, y, "oracle/envelope")
    report.rows = {"t": t, "x": x, "y": y, "oracle": np.exp(logv),
                   "envelope": np.exp(loge), "ratio": np.where(skip, np.nan, np.exp(lr)),
                   "err_bound": err * np.exp(logv), "skipped": skip}
    report.extra.update({"oracle": oracle, "envelope": envelope,
                         "grid_hash": grid.digest(),
                         "max_rel_error": float(np.max(err[~skip]))})

    if oracle == "hunt" and extra_checks:
        ok = ~skip
        logp = np.asarray(kernels.log_free_kernel(0.0, t, x, y), dtype=float)
        log_lower = 0.5 * np.log(x * y) + np.asarray(
            killed.log_killed_kernel_mu_half(t, x, y), dtype=float)
        tol = np.log1p(err) + SLACK
        _flag(report, ok & (logv - logp > tol), t, x, y, "p1 > p")
        _flag(report, ok & (log_lower - logv > tol), t, x, y, "p1 < sandwich lower")
        _flag(report, ok & (t <= 4) & (logv - log_lower - 0.5 > tol), t, x, y,
              "p1 > sandwich upper")
        if envelope == "large":
            report.extra["sandwich_lower_min"] = float(np.exp(np.min(log_lower - loge)))
    return report


def _extremes(lr, skip, t, x, y, what):
    ok = ~skip
    if not np.any(ok):
        raise ReportError("no point left after skipping unresolved oracle values")
    idx = np.flatnonzero(ok)
    i_min = idx[np.argmin(lr[ok])]
    i_max = idx[np.argmax(lr[ok])]
    return RatioReport(
        min_ratio=float(np.exp(lr[i_min])), max_ratio=float(np.exp(lr[i_max])),
        argmin=_point(t[i_min], x[i_min], y[i_min]),
        argmax=_point(t[i_max], x[i_max], y[i_max]),
        n_points=int(t.size), n_skipped=int(np.sum(skip)),
        skipped=[_point(t[i], x[i], y[i]) for i in np.flatnonzero(skip)],
        extra={"ratio": what})


def _flag(report, mask, t, x, y, what):
    for i in np.flatnonzero(mask):
        report.violations.append((_point(t[i], x[i], y[i]), what))


# ---------------------------------------------------------------- inequalities

def check_inequalities(grid=DEFAULT_GRID, cfg=DEFAULT_CFG, kernel_scale=1.0,
                       threads=None):
    """Run every exact inequality at every applicable grid point.

    Checked:

    * ``e**-z I0(z)`` nonincreasing over all Bessel arguments that occur
      (``x``, ``y`` and ``xy/t`` up to 700), i.e.
      ``I0(z2)/I0(z1) <= exp(z2 - z1)`` for every pair;
    * ``z/(z+2) <= I1(z)/I0(z) <= 2z/(2z+1)`` at the same arguments;
    * ``(y I1/I0 - x) t / (x y**2)`` in ``[1/12, 2]`` where ``xy <= t`` and
      ``y**2 >= 4t``;
    * ``p(t, ., y)`` nondecreasing in ``x`` along the grid for ``y**2 >= 4t``
      and ``1 < x < y/2``;
    * ``p1 <= p``, the sandwich lower bound everywhere, the upper bound for
      ``t <= 4``;
    * ``q_lower_bound(x, s) <= q_oracle(x, s)`` on the ``x`` by ``t`` axes.

    ``kernel_scale`` multiplies the killed kernel before the checks; it
    exists to demonstrate that faults are detected.

    Returns
    -------
    RatioReport
        Ratios are ``p1 / sandwich lower``; ``extra["checks"]`` counts the
        comparisons made per inequality.
    """
    if not (kernel_scale > 0):
        raise DomainError("kernel_scale must be > 0")
    t, x, y = grid.points()
    if t.size == 0:
        raise ReportError("grid is empty after regime filtering")
    violations = []
    checks = {}

    def flag(mask, tt, xx, yy, what):
        checks[what] = checks.get(what, 0) + int(np.size(mask))
        for i in np.flatnonzero(mask):
            violations.append((_point(tt[i], xx[i], yy[i]), what))

    # Bessel arguments
    z = np.unique(np.concatenate([x, y, x * y / t]))
    z = z[z <= 700.0]
    s0 = np.asarray(specfun.bessel_i0_scaled(z), dtype=float)
    running = np.minimum.accumulate(s0)
    prev = np.concatenate([[np.inf], running[:-1]])
    bad = s0 > prev * (1.0 + SLACK)
    ones = np.ones_like(z)
    flag(bad, ones, z, ones, "I0(z2)/I0(z1) > exp(z2 - z1)")
    ratio = np.asarray(specfun.bessel_i1_i0_ratio(z), dtype=float)
    flag(ratio < z / (z + 2.0) - SLACK, ones, z, ones, "I1/I0 < z/(z+2)")
    flag(ratio > 2.0 * z / (2.0 * z + 1.0) + SLACK, ones, z, ones, "I1/I0 > 2z/(2z+1)")

    # derivative bracket
    reg = (x * y <= t) & (y * y >= 4.0 * t)
    tr, xr, yr = t[reg], x[reg], y[reg]
    val = (np.asarray(kernels.free_kernel_dx_ratio(tr, xr, yr)) * tr * tr / (xr * yr * yr))
    flag((val < 1.0 / 12.0 - SLACK) | (val > 2.0 + SLACK), tr, xr, yr,
         "dp/dx / (x y^2 p / t^2) outside [1/12, 2]")

    # monotonicity in x
    ts, xs, ys = grid.axes()
    T, X, Y = np.meshgrid(ts, xs, ys, indexing="ij")
    logp = np.asarray(kernels.log_free_kernel(0.0, T, X, Y))
    pair = (Y[:, 1:, :] ** 2 >= 4.0 * T[:, 1:, :]) & (X[:, 1:, :] < Y[:, 1:, :] / 2.0)
    drop = logp[:, 1:, :] < logp[:, :-1, :] - SLACK
    m = pair & (X[:, :-1, :] > 1.0)
    flag((drop & m)[m], T[:, 1:, :][m], X[:, 1:, :][m], Y[:, 1:, :][m],
         "p decreasing in x for y^2 >= 4t, x < y/2")

    # killed kernel
    logv, err = _parallel_killed(t, x, y, cfg, threads)
    logv = logv + math.log(kernel_scale)
    skip = ~np.isfinite(logv) | ~(err <= SKIP_FRACTION)
    ok = ~skip
    logp = np.asarray(kernels.log_free_kernel(0.0, t, x, y), dtype=float)
    log_lower = 0.5 * np.log(x * y) + np.asarray(
        killed.log_killed_kernel_mu_half(t, x, y), dtype=float)
    tol = np.log1p(np.where(ok, err, 0.0)) + SLACK
    flag((ok & (logv - logp > tol))[ok], t[ok], x[ok], y[ok], "p1 > p")
    flag((ok & (log_lower - logv > tol))[ok], t[ok], x[ok], y[ok], "p1 < sandwich lower")
    up = ok & (t <= 4.0)
    flag((logv - log_lower - 0.5 > tol)[up], t[up], x[up], y[up], "p1 > sandwich upper")

    # first-passage lower bound
    XQ, SQ = np.meshgrid(xs, ts, indexing="ij")
    XQ, SQ = XQ.ravel(), SQ.ravel()
    lq, _ = hitting.q_oracle_array(XQ, SQ, cfg)
    lq = np.asarray(lq, dtype=float)
    conv = np.isfinite(lq)
    llb = np.asarray(hitting.log_q_lower_bound(XQ, SQ), dtype=float)
    flag((llb - lq > math.log1p(1e-6))[conv], SQ[conv], XQ[conv], np.full(conv.sum(), np.nan),
         "q_lower_bound > q_oracle")
    checks["q_oracle unresolved"] = int(np.sum(~conv))

    report = _extremes(logv - log_lower, skip, t, x, y, "p1/sandwich lower")
    report.violations = violations
    report.extra["checks"] = checks
    report.extra["grid_hash"] = grid.digest()
    report.extra["kernel_scale"] = kernel_scale
    return report


# ---------------------------------------------------------------- baselines

def baseline_record(report, grid, created_at=None):
    """Baseline entry for a sweep report."""
    return {
        "envelope": report.extra.get("envelope"),
        "oracle": report.extra.get("oracle"),
        "grid_hash": grid.digest(),
        "min_ratio": report.min_ratio,
        "max_ratio": report.max_ratio,
        "created_at": created_at or datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def load_baselines(path):
    """Read a baseline file (a JSON list of records, or a single record)."""
    if not os.path.exists(path):
        raise BaselineMissingError(f"baseline file {path} not found")
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return data if isinstance(data, list) else [data]


def find_baseline(records, oracle, envelope, grid_hash):
    for rec in records:
        if (rec.get("oracle"), rec.get("envelope"), rec.get("grid_hash")) == (
                oracle, envelope, grid_hash):
            return rec
    return None


def compare_to_baseline(report, record, log_tol=BASELINE_LOG_TOL):
    """``(ok, detail)``: the report's bracket must sit inside the baseline
    bracket widened by ``log_tol`` on a log scale."""
    lo_new, hi_new = math.log(report.min_ratio), math.log(report.max_ratio)
    lo_base, hi_base = math.log(record["min_ratio"]), math.log(record["max_ratio"])
    ok = lo_new >= lo_base - log_tol and hi_new <= hi_base + log_tol
    detail = {"min_shift": lo_new - lo_base, "max_shift": hi_new - hi_base,
              "log_tol": log_tol}
    return ok, detail


def write_baseline(path, records):
    """Merge ``records`` into the file, replacing entries with the same key."""
    try:
        existing = load_baselines(path)
    except BaselineMissingError:
        existing = []
    keys = {(r["oracle"], r["envelope"], r["grid_hash"]) for r in records}
    kept = [r for r in existing if (r.get("oracle"), r.get("envelope"),
                                    r.get("grid_hash")) not in keys]
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(kept + list(records), fh, indent=2, sort_keys=True)
        fh.write("\n")
