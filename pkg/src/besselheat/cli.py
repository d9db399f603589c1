"""Command-line interface.

Every command prints one JSON record (an ``OutputRecord``) to stdout::

    {"schema_version", "command", "inputs", "results",
     "diagnostics": {"error_bounds", "n_skipped", "runtime_ms"}}

Floats carry 17 significant digits; non-finite values become ``null``.

Option values resolve as: command-line flag, then the JSON file named by
``HK_CONFIG``, then built-in defaults.  ``HK_THREADS`` caps worker threads and
never changes results.

Exit codes: 0 success, 2 usage, 3 domain, 4 non-convergence or failed
verification, 5 I/O, 6 missing baseline.
"""

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import hitting, kernels, killed, mc, verify
from .errors import (BaselineMissingError, CancellationError, DomainError,
                     InversionError, QuadratureError, ReportError)
from .quad import QuadCfg

SCHEMA_VERSION = "1.0"
CSV_COLUMNS = ("t", "x", "y", "oracle", "envelope", "ratio", "err_bound", "skipped")

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_CONVERGENCE, EXIT_IO, EXIT_BASELINE = 0, 2, 3, 4, 5, 6

_GRID_DEFAULT = ",".join(
    f"{k}={lo!r}:{hi!r}:{n}" for k, (lo, hi, n) in
    zip("txy", (verify.DEFAULT_GRID.t_range, verify.DEFAULT_GRID.x_range,
                verify.DEFAULT_GRID.y_range)))

BUILTIN = {
    "mu": 0.0, "a": 1.0, "method": None,
    "rel_tol": QuadCfg.rel_tol, "talbot_nodes": QuadCfg.talbot_nodes,
    "inversion_tol": QuadCfg.inversion_tol, "max_subdivisions": QuadCfg.max_subdivisions,
    "regime": "all", "oracle": "hunt", "envelope": None, "grid": _GRID_DEFAULT,
    "m": 2.0, "env_mu": 0.5, "out": None, "summary": None,
    "baseline": "baselines.json", "paths": 100_000, "dt": None, "seed": 0,
    "hist": None, "bins": 50, "r_max": 10.0, "dim": None,
}


class UsageError(Exception):
    """Invalid flag combination."""


# ---------------------------------------------------------------- output

def _fmt(v):
    if v is None or isinstance(v, bool):
        return json.dumps(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return format(v, ".17g") if math.isfinite(v) else "null"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise TypeError(f"cannot serialise {type(v).__name__}")


def dumps(obj):
    """JSON text with 17-significant-digit floats."""
    return _fmt(obj)


def _record(command, inputs, results, error_bounds=None, n_skipped=0, started=None,
            timing=True):
    runtime = (time.perf_counter() - started) * 1e3 if (timing and started) else None
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "inputs": inputs,
        "results": results,
        "diagnostics": {"error_bounds": error_bounds, "n_skipped": n_skipped,
                        "runtime_ms": runtime},
    }


def _emit(rec, stream=None):
    (stream or sys.stdout).write(dumps(rec) + "\n")


# ---------------------------------------------------------------- config

def _load_config():
    path = os.environ.get("HK_CONFIG")
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read HK_CONFIG file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"HK_CONFIG file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("HK_CONFIG must hold a JSON object")
    return data


def _resolve(args, config):
    for key, default in BUILTIN.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, config.get(key, default))
    return args


def _quad_cfg(args):
    try:
        return QuadCfg(rel_tol=float(args.rel_tol), talbot_nodes=int(args.talbot_nodes),
                       inversion_tol=float(args.inversion_tol),
                       max_subdivisions=int(args.max_subdivisions))
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


def _parse_axis(text):
    parts = text.split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            return (v, v, 1)
        if len(parts) == 3:
            return (float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError:
        pass
    raise UsageError(f"axis spec must be lo:hi:n or a single value, got {text!r}")


def _grid(args, regime):
    axes = {}
    for item in str(args.grid).split(","):
        key, sep, val = item.partition("=")
        if not sep or key.strip() not in ("t", "x", "y"):
            raise UsageError(f"grid spec items look like t=lo:hi:n, got {item!r}")
        axes[key.strip()] = _parse_axis(val.strip())
    for key in "txy":
        override = getattr(args, f"{key}_axis", None)
        if override:
            axes[key] = _parse_axis(override)
        if key not in axes:
            axes[key] = dict(zip("txy", (verify.DEFAULT_GRID.t_range,
                                         verify.DEFAULT_GRID.x_range,
                                         verify.DEFAULT_GRID.y_range)))[key]
    return verify.GridSpec(axes["t"], axes["x"], axes["y"], regime, float(args.m))


# ---------------------------------------------------------------- commands

def cmd_eval(args, started):
    cfg = _quad_cfg(args)
    mu, a, method = float(args.mu), float(args.a), args.method
    if method is None:
        raise UsageError("--method is required")
    if method == "image" and mu != 0.5:
        raise UsageError("--method image needs --mu 0.5")
    if method in ("hunt", "sandwich") and mu != 0.0:
        raise UsageError(f"--method {method} needs --mu 0")
    if method in ("image", "sandwich") and a != 1.0:
        raise UsageError(f"--method {method} is defined for --a 1 only")
    inputs = {"t": args.t, "x": args.x, "y": args.y, "mu": mu, "a": a, "method": method,
              "cfg": cfg.as_dict()}
    if method == "free":
        kernels.PointQuery(args.t, args.x, args.y, mu, 0.0)
        lv = kernels.log_free_kernel(mu, args.t, args.x, args.y)
        err = 0.0
        results = {"value": math.exp(lv), "log_value": lv, "error_bound": err}
    else:
        kernels.PointQuery(args.t, args.x, args.y, mu, a)
        if method == "image":
            lv = killed.log_killed_kernel_mu_half(args.t, args.x, args.y)
            results = {"value": math.exp(lv), "log_value": lv, "error_bound": 0.0}
        elif method == "sandwich":
            lo, hi = killed.sandwich_bounds(args.t, args.x, args.y)
            results = {"lower": lo, "upper": hi, "log_lower": math.log(lo)}
        else:
            try:
                if a == 1.0:
                    kv = killed.killed_kernel(args.t, args.x, args.y, cfg)
                else:
                    kv = killed.killed_kernel_scaled(a, args.t, args.x, args.y, cfg)
            except CancellationError as exc:
                rec = _record("eval", inputs, {"interval": list(exc.interval),
                                               "message": str(exc)},
                              started=started, timing=not args.no_timing)
                _emit(rec)
                return EXIT_CONVERGENCE
            results = {"value": kv.value, "log_value": kv.log_value,
                       "error_bound": kv.error}
    _emit(_record("eval", inputs, results, results.get("error_bound"), 0, started,
                  not args.no_timing))
    return EXIT_OK


def _write_csv(path, rows):
    lines = [",".join(CSV_COLUMNS)]
    for i in range(len(rows["t"])):
        vals = [rows[c][i] for c in CSV_COLUMNS[:-1]]
        cells = [format(float(v), ".17g") for v in vals]
        cells.append("true" if rows["skipped"][i] else "false")
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _check_writable(path):
    if path is None:
        return
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory) or not os.access(directory, os.W_OK):
        raise OSError(f"cannot write to {path}")


def cmd_sweep(args, started):
    cfg = _quad_cfg(args)
    oracle = args.oracle.replace("-", "_")
    envelope = args.envelope
    if envelope is None:
        raise UsageError("--envelope is required")
    if oracle not in verify.ORACLES:
        raise UsageError(f"unknown oracle {args.oracle!r}")
    if envelope not in verify.ENVELOPE_REGIMES:
        raise UsageError(f"unknown envelope {envelope!r}")
    if args.regime not in verify.ENVELOPE_REGIMES[envelope]:
        raise UsageError(f"envelope {envelope!r} is incompatible with regime {args.regime!r}")
    grid = _grid(args, args.regime)
    _check_writable(args.out)
    _check_writable(args.summary)
    mc_cfg = None
    if oracle == "mc":
        # without --dt each (t, x) simulation uses dt = t/200
        mc_cfg = mc.McConfig(paths=int(args.paths),
                             dt=float(args.dt) if args.dt else 1e300,
                             seed=int(args.seed), bins=int(args.bins),
                             r_max=float(args.r_max))
    report = verify.ratio_sweep(grid, oracle, envelope, cfg, mc_cfg=mc_cfg,
                                mu=float(args.env_mu))
    if args.out:
        _write_csv(args.out, report.rows)
    summary = report.as_dict()
    status = EXIT_OK
    if args.baseline_check or args.update_baseline:
        path = args.baseline
        if args.update_baseline:
            verify.write_baseline(path, [verify.baseline_record(report, grid)])
            summary["baseline"] = {"path": path, "updated": True}
        else:
            rec = verify.find_baseline(verify.load_baselines(path), oracle, envelope,
                                       grid.digest())
            if rec is None:
                raise BaselineMissingError(f"no baseline for {oracle}/{envelope} "
                                           f"grid {grid.digest()} in {path}")
            ok, detail = verify.compare_to_baseline(report, rec)
            summary["baseline"] = {"path": path, "ok": ok, **detail}
            status = EXIT_OK if ok else EXIT_CONVERGENCE
    if report.violations:
        status = EXIT_CONVERGENCE
    inputs = {"regime": args.regime, "oracle": oracle, "envelope": envelope,
              "grid": grid.as_dict(), "grid_hash": grid.digest(), "out": args.out,
              "cfg": cfg.as_dict()}
    rec = _record("sweep", inputs, summary, {"max_rel": report.extra["max_rel_error"]},
                  report.n_skipped, started, not args.no_timing)
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            fh.write(dumps(rec) + "\n")
    _emit(rec)
    return status


def cmd_verify(args, started):
    cfg = _quad_cfg(args)
    grid = _grid(args, "all")
    path = args.baseline
    if not args.update_baseline and not os.path.exists(path):
        raise BaselineMissingError(f"baseline file {path} not found; "
                                   "run with --update-baseline to create it")
    report = verify.check_inequalities(grid, cfg, kernel_scale=args.fault_scale)
    results = {"inequalities": report.as_dict(), "sweeps": []}
    records = []
    status = EXIT_OK if not report.violations else EXIT_CONVERGENCE
    base = [] if args.update_baseline else verify.load_baselines(path)
    for envelope, regime in (("small", "small"), ("large", "large")):
        g = verify.GridSpec(grid.t_range, grid.x_range, grid.y_range, regime, grid.m)
        if g.points()[0].size == 0:
            continue
        rep = verify.ratio_sweep(g, "hunt", envelope, cfg)
        entry = {"envelope": envelope, "regime": regime, "grid_hash": g.digest(),
                 "min_ratio": rep.min_ratio, "max_ratio": rep.max_ratio,
                 "n_points": rep.n_points, "n_skipped": rep.n_skipped,
                 "violations": len(rep.violations)}
        if rep.violations:
            status = EXIT_CONVERGENCE
        if args.update_baseline:
            records.append(verify.baseline_record(rep, g))
        else:
            rec = verify.find_baseline(base, "hunt", envelope, g.digest())
            if rec is None:
                raise BaselineMissingError(f"no baseline for hunt/{envelope} "
                                           f"grid {g.digest()} in {path}")
            ok, detail = verify.compare_to_baseline(rep, rec)
            entry["baseline_ok"] = ok
            entry.update(detail)
            if not ok:
                status = EXIT_CONVERGENCE
        results["sweeps"].append(entry)
    if args.update_baseline:
        verify.write_baseline(path, records)
    results["status"] = "pass" if status == EXIT_OK else "fail"
    inputs = {"grid": grid.as_dict(), "baseline": path,
              "update_baseline": bool(args.update_baseline), "cfg": cfg.as_dict()}
    _emit(_record("verify", inputs, results, None, report.n_skipped, started,
                  not args.no_timing))
    if report.violations:
        for q, what in report.violations[:50]:
            sys.stderr.write(f"violation: {what} at {q.as_dict()}\n")
    return status


def cmd_mc(args, started):
    if args.dim is None:
        raise UsageError("--dim is required")
    dim = int(args.dim)
    if dim not in (2, 3):
        raise UsageError("--dim must be 2 or 3")
    dt = float(args.dt) if args.dt is not None else args.t / 200.0
    bins, r_max = int(args.bins), float(args.r_max)
    if args.hist:
        try:
            b, r = args.hist.split(":")
            bins, r_max = int(b), float(r)
        except ValueError:
            raise UsageError("--hist must look like <bins>:<rmax>")
    cfg = mc.McConfig(paths=int(args.paths), dt=dt, seed=int(args.seed), bins=bins,
                      r_max=r_max, bridge_correction=not args.no_bridge)
    inputs = {"dim": dim, "x": args.x, "t": args.t, "config": cfg.as_dict()}
    res = mc.simulate_survival(dim, args.x, args.t, cfg)
    results = {"survival": res.as_dict(),
               "bridge_note": "half-space crossing correction; the sphere curves away "
                              "from the path, so survival is biased low in dim 2"}
    if args.hist:
        hist, _, above = mc.estimate_kernel_histogram(dim, args.x, args.t, cfg,
                                                      with_mass=True)
        results["mass_above_r_max"] = above
        results["histogram"] = [{"y_mid": b.y_mid, "lo": b.lo, "hi": b.hi,
                                 "p_hat": b.p_hat, "stderr": b.stderr,
                                 "upper95": b.upper95} for b in hist]
    _emit(_record("mc", inputs, results, {"stderr": res.stderr}, 0, started,
                  not args.no_timing))
    return EXIT_OK


def cmd_hitting(args, started):
    cfg = _quad_cfg(args)
    if (args.density is None) == (args.survival is None):
        raise UsageError("give exactly one of --density or --survival")
    kind = "profile" if args.profile else "lower" if args.lower else "oracle"
    x = args.x
    inputs = {"x": x, "density": args.density, "survival": args.survival, "kind": kind,
              "cfg": cfg.as_dict()}
    err = None
    if args.density is not None:
        s = args.density
        if kind == "profile":
            lv = hitting.log_q_estimate_profile(x, s)
        elif kind == "lower":
            lv = hitting.log_q_lower_bound(x, s)
        else:
            lq, rel = hitting.q_oracle_array(x, s, cfg)
            lv = float(lq)
            if not math.isfinite(lv):
                raise InversionError(f"q oracle did not converge at x={x}, s={s}")
            err = float(rel) * math.exp(lv)
        results = {"value": math.exp(lv), "log_value": lv, "error_bound": err}
    else:
        t = args.survival
        if kind == "lower":
            raise UsageError("--lower applies to --density only")
        if kind == "profile":
            val = hitting.survival_estimate_profile(x, t)
        else:
            v, e = hitting.survival_oracle_array(x, t, cfg)
            val, err = float(v), float(e)
        results = {"value": val, "error_bound": err}
    _emit(_record("hitting", inputs, results, err, 0, started, not args.no_timing))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--no-timing", action="store_true",
                        help="report runtime_ms as null (byte-stable output)")
    quad = argparse.ArgumentParser(add_help=False)
    quad.add_argument("--rel-tol", dest="rel_tol", type=float)
    quad.add_argument("--talbot-nodes", dest="talbot_nodes", type=int)
    quad.add_argument("--inversion-tol", dest="inversion_tol", type=float)
    quad.add_argument("--max-subdivisions", dest="max_subdivisions", type=int)
    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--grid", help="t=lo:hi:n,x=lo:hi:n,y=lo:hi:n (log spacing)")
    grid.add_argument("--t", dest="t_axis", help="t axis lo:hi:n")
    grid.add_argument("--x", dest="x_axis", help="x axis lo:hi:n")
    grid.add_argument("--y", dest="y_axis", help="y axis lo:hi:n")
    grid.add_argument("--m", type=float, help="parameter of the prop31 filter")

    p = argparse.ArgumentParser(prog="besselheat",
                                description="Dirichlet heat kernels of Bessel operators")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", parents=[common, quad], help="evaluate one kernel value")
    e.add_argument("--t", type=float, required=True)
    e.add_argument("--x", type=float, required=True)
    e.add_argument("--y", type=float, required=True)
    e.add_argument("--mu", type=float)
    e.add_argument("--a", type=float)
    e.add_argument("--method", choices=("free", "hunt", "image", "sandwich"))

    s = sub.add_parser("sweep", parents=[common, quad, grid],
                       help="oracle/envelope ratios over a grid")
    s.add_argument("--regime", choices=verify.FILTERS)
    s.add_argument("--oracle", choices=("hunt", "mc", "mu-half", "mu_half"))
    s.add_argument("--envelope", choices=tuple(verify.ENVELOPE_REGIMES))
    s.add_argument("--mu", dest="env_mu", type=float, help="index for --envelope mu")
    s.add_argument("--out", help="CSV output path")
    s.add_argument("--summary", help="also write the JSON summary here")
    s.add_argument("--baseline", help="baseline file")
    s.add_argument("--check-baseline", dest="baseline_check", action="store_true")
    s.add_argument("--update-baseline", action="store_true")
    s.add_argument("--paths", type=int)
    s.add_argument("--dt", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--bins", type=int)
    s.add_argument("--r-max", dest="r_max", type=float)

    v = sub.add_parser("verify", parents=[common, quad, grid],
                       help="exact inequalities and frozen brackets")
    v.add_argument("--baseline")
    v.add_argument("--update-baseline", action="store_true")
    v.add_argument("--fault-scale", type=float, default=1.0, help=argparse.SUPPRESS)

    m = sub.add_parser("mc", parents=[common], help="Monte Carlo survival and histogram")
    m.add_argument("--dim", type=int)
    m.add_argument("--x", type=float, required=True)
    m.add_argument("--t", type=float, required=True)
    m.add_argument("--paths", type=int)
    m.add_argument("--dt", type=float)
    m.add_argument("--seed", type=int)
    m.add_argument("--hist", help="<bins>:<rmax>")
    m.add_argument("--bins", type=int, help=argparse.SUPPRESS)
    m.add_argument("--r-max", dest="r_max", type=float, help=argparse.SUPPRESS)
    m.add_argument("--no-bridge", action="store_true")

    h = sub.add_parser("hitting", parents=[common, quad], help="first-passage quantities")
    h.add_argument("--x", type=float, required=True)
    h.add_argument("--density", type=float, metavar="S")
    h.add_argument("--survival", type=float, metavar="T")
    kind = h.add_mutually_exclusive_group()
    kind.add_argument("--profile", action="store_true")
    kind.add_argument("--oracle", action="store_true")
    kind.add_argument("--lower", action="store_true")
    return p


COMMANDS = {"eval": cmd_eval, "sweep": cmd_sweep, "verify": cmd_verify, "mc": cmd_mc,
            "hitting": cmd_hitting}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    started = time.perf_counter()
    try:
        args = _resolve(args, _load_config())
        return COMMANDS[args.command](args, started)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except DomainError as exc:
        sys.stderr.write(f"domain error: {exc}\n")
        return EXIT_DOMAIN
    except (InversionError, QuadratureError, CancellationError, ReportError) as exc:
        sys.stderr.write(f"no convergence: {exc}\n")
        return EXIT_CONVERGENCE
    except BaselineMissingError as exc:
        sys.stderr.write(f"baseline missing: {exc}\n")
        return EXIT_BASELINE
    except OSError as exc:
        sys.stderr.write(f"i/o error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
