"""Command-line front end.

Every command prints a JSON summary
``{command, config, mean, stderr, count, elapsed_seconds, extra}`` (or, with
``--format csv``, a ``# config`` line followed by a result table) and
optionally writes per-item data to ``--out`` as CSV. Exit status is 0 on
success, 2 on usage errors and 3 on numeric failure.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import domains as D
from .errors import BMCXError, NumericFailure

USAGE_ERROR = 2
NUMERIC_FAILURE = 3

SUMMARY_FIELDS = {
    "command": str,
    "config": dict,
    "mean": (float, int, list, type(None)),
    "stderr": (float, int, list, type(None)),
    "count": int,
    "elapsed_seconds": float,
    "extra": dict,
}


def _complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}")
    try:
        return complex(D._number(parts[0]), D._number(parts[1]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _domain(text: str) -> D.Domain:
    try:
        return D.parse_domain(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    try:
        v = int(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v <= 0 or v != float(text):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _grid(text: str):
    """``x0,x1,y0,y1,nx,ny`` or ``cell:cx,cy,size``."""
    from .engine import Grid

    try:
        if text.startswith("cell:"):
            cx, cy, size = (float(v) for v in text[5:].split(","))
            return Grid.cell_at(complex(cx, cy), size)
        x0, x1, y0, y1, nx, ny = text.split(",")
        return Grid.covering(complex(float(x0), float(y0)), complex(float(x1), float(y1)), int(nx), int(ny))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use x0,x1,y0,y1,nx,ny or cell:cx,cy,size") from None


def _default_seed() -> int:
    env = os.environ.get("BMCX_SEED")
    if env is None:
        return 0
    return _seed(env)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bmcx", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mc=True):
        p.add_argument("--seed", type=_seed, default=None, help="defaults to $BMCX_SEED, else 0")
        p.add_argument("--out", default=None, help="CSV data file")
        p.add_argument("--format", choices=("csv", "json"), default="json")
        if mc:
            p.add_argument("--paths", type=_positive_int, default=10_000)
            p.add_argument("--dt-max", type=_positive_float, default=1e-3)
            p.add_argument("--step-factor", type=_positive_float, default=0.1)
            p.add_argument("--eps", type=_positive_float, default=None,
                           help="boundary tolerance; defaults to 1e-4 times the domain scale")
            p.add_argument("--max-steps", type=_positive_int, default=10_000_000)
            p.add_argument("--workers", type=_positive_int, default=None)

    def domain_start(p):
        p.add_argument("--domain", type=_domain, required=True)
        p.add_argument("--start", type=_complex, default=None, help="re,im; defaults to the domain's base point")

    p = sub.add_parser("exit-time", help="expected exit time", allow_abbrev=False)
    domain_start(p)
    common(p)

    p = sub.add_parser("measure", help="harmonic measure histogram", allow_abbrev=False)
    domain_start(p)
    p.add_argument("--bins", type=_positive_int, default=12)
    p.add_argument("--method", choices=("euler", "wos"), default="euler")
    common(p)

    p = sub.add_parser("dirichlet", help="harmonic extension of boundary data", allow_abbrev=False)
    domain_start(p)
    p.add_argument("--boundary", default="re(z)",
                   help="expression in z using re, im, abs, arg, exp, log, cos, sin, where, pi")
    common(p)

    p = sub.add_parser("green", help="closed-form Green's function", allow_abbrev=False)
    p.add_argument("--kind", choices=("halfplane", "righthalf", "disk", "winding"), required=True)
    p.add_argument("--z", type=_complex, default=complex(1, 0))
    p.add_argument("--w", type=_complex, required=True)
    p.add_argument("--n", type=_positive_int, default=1)
    common(p, mc=False)

    p = sub.add_parser("occupation", help="occupation-time density on a grid", allow_abbrev=False)
    domain_start(p)
    p.add_argument("--grid", type=_grid, required=True)
    common(p)

    p = sub.add_parser("winding", help="motion stopped after winding n times about 0", allow_abbrev=False)
    p.add_argument("--n", type=_positive_int, default=1)
    p.add_argument("--start", type=_complex, default=complex(1, 0))
    p.add_argument("--grid", type=_grid, default=None)
    common(p)

    p = sub.add_parser("loewner", help="chordal Loewner trace and forward map", allow_abbrev=False)
    p.add_argument("--driver", choices=("zero", "constant", "sle"), default="zero")
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="value of a constant driver")
    p.add_argument("--T", type=_positive_float, default=1.0)
    p.add_argument("--dt", type=_positive_float, default=1e-3)
    p.add_argument("--z", type=_complex, default=None, help="also evaluate g_T(z)")
    p.add_argument("--stride", type=_positive_int, default=None,
                   help="trace every stride-th step; default keeps about 1000 points")
    p.add_argument("--driver-out", default=None, help="CSV file for the driver")
    common(p, mc=False)

    p = sub.add_parser("series", help="series identities", allow_abbrev=False)
    p.add_argument("--kind", choices=("exit", "arctan", "basel", "poisson"), required=True)
    p.add_argument("--coeffs", default="1", help="comma-separated a_1, a_2, ... for --kind exit")
    p.add_argument("--n", type=_positive_int, default=1_000_000)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--form", default="quotient")
    common(p, mc=False)

    p = sub.add_parser("verify", help="run the acceptance suite", allow_abbrev=False)
    p.add_argument("--quick", action="store_true")
    p.add_argument("--only", type=int, nargs="*", default=None, help="criterion numbers")
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    ns = build_parser().parse_args(argv)
    if getattr(ns, "seed", "n/a") is None:
        ns.seed = _default_seed()
    return ns


# ---------------------------------------------------------------------------


def _sim_config(ns):
    from .engine import SimConfig

    return SimConfig(seed=ns.seed, n_paths=ns.paths, dt_max=ns.dt_max, step_factor=ns.step_factor,
                     boundary_tol=ns.eps, max_steps=ns.max_steps, workers=ns.workers)


def _start(ns):
    return ns.start if ns.start is not None else ns.domain.basepoint


def _boundary_fn(expr: str):
    names = {"re": np.real, "im": np.imag, "abs": np.abs, "arg": np.angle, "exp": np.exp,
             "log": np.log, "cos": np.cos, "sin": np.sin, "sqrt": np.sqrt, "where": np.where,
             "pi": math.pi, "conj": np.conj}
    code = compile(expr, "<boundary>", "eval")
    bad = set(code.co_names) - set(names) - {"z"}
    if bad:
        raise BMCXError(f"unknown name {sorted(bad)[0]!r} in boundary expression")

    def fn(z):
        out = eval(code, {"__builtins__": {}}, dict(names, z=z))
        return np.broadcast_to(np.real(out).astype(float), np.shape(z))

    return fn


def _table(header, rows) -> str:
    buf = io.StringIO()
    np.savetxt(buf, np.asarray(rows, dtype=float).reshape(len(rows), len(header)), fmt="%.17g",
               delimiter=",", header=",".join(header), comments="")
    return buf.getvalue()


def _run(ns) -> dict:
    """Execute a parsed command; returns the summary plus a CSV result table."""
    from . import engine as E

    cmd = ns.command
    config = {k: v for k, v in vars(ns).items() if k not in ("command", "format", "out", "driver_out")}
    summary = {"mean": None, "stderr": None, "count": 0, "extra": {}}
    data = None  # (header, rows) written to --out
    table = None

    if cmd in ("exit-time", "measure", "dirichlet", "occupation", "winding"):
        cfg = _sim_config(ns)
        if "domain" in config:
            config["domain"] = ns.domain.label
            start = _start(ns)
            config["start"] = start
            cfg = cfg.resolve(ns.domain)
        else:
            cfg = cfg.resolve(D.Plane())
        config["sim"] = cfg.as_dict()

    if cmd == "exit-time":
        batch = E.simulate(ns.domain, start, cfg)
        res = batch.time_estimate()
        summary.update(res.as_dict())
        if ns.out:
            batch.to_csv(ns.out)
        table = (["mean", "stderr", "count", "censored"], [[res.mean, res.stderr, res.count, res.censored]])
    elif cmd == "measure":
        part = E.Partition.arcs(ns.bins, center=start)
        if ns.method == "wos":
            pts = E.walk_on_spheres(ns.domain, start, cfg)
            res = E.histogram_estimate(pts, part, cfg.n_paths - len(pts))
        else:
            res = E.harmonic_measure_mc(ns.domain, start, part, cfg)
        summary.update(res.as_dict())
        edges = part.edges
        rows = [[k, edges[k], edges[k + 1], res.histogram[1][k], res.mean[k], res.stderr[k]]
                for k in range(ns.bins)]
        table = (["bin", "angle_lo", "angle_hi", "count", "frequency", "stderr"], rows)
        data = table
    elif cmd == "dirichlet":
        res = E.dirichlet_solve(ns.domain, start, _boundary_fn(ns.boundary), cfg)
        summary.update(res.as_dict())
        table = (["mean", "stderr", "count", "censored"], [[res.mean, res.stderr, res.count, res.censored]])
    elif cmd == "occupation":
        occ = E.occupation_grid(ns.domain, start, ns.grid, cfg)
        c = ns.grid.centers().ravel()
        rows = np.column_stack([c.real, c.imag, occ.density.ravel(), occ.stderr.ravel()])
        table = data = (["x", "y", "density", "stderr"], rows.tolist())
        config["grid"] = list(ns.grid.as_array())
        summary.update(mean=occ.density.ravel().tolist(), stderr=occ.stderr.ravel().tolist(),
                       count=occ.count, extra={"censored": occ.censored})
    elif cmd == "winding":
        config["start"] = ns.start
        batch = E.winding_time(ns.n, ns.start, cfg, grid=ns.grid)
        res = batch.estimate((batch.winding > 0).astype(float))
        summary.update(res.as_dict())
        summary["extra"]["quantity"] = "fraction stopping at +2 pi n"
        if ns.grid is not None:
            occ = E.occupation_density(batch, ns.grid)
            config["grid"] = list(ns.grid.as_array())
            summary["extra"]["density"] = occ.density.ravel().tolist()
        if ns.out:
            batch.to_csv(ns.out)
        table = (["mean", "stderr", "count", "censored"], [[res.mean, res.stderr, res.count, res.censored]])
    elif cmd == "green":
        from .green import green

        val = green(ns.kind, ns.z, ns.w, ns.n)
        summary.update(mean=val, stderr=0.0, count=1)
        table = data = (["value"], [[val]])
    elif cmd == "loewner":
        table, data = _run_loewner(ns, summary, config)
    elif cmd == "series":
        table = data = _run_series(ns, summary)
    return {"command": cmd, "config": config, **summary, "table": table, "data": data}


def _run_loewner(ns, summary, config):
    from . import loewner as L

    if ns.driver == "sle":
        drv = L.sample_sle_driver(ns.kappa, ns.T, ns.dt, ns.seed)
    elif ns.driver == "constant":
        drv = L.DrivingFunction.constant(ns.lam, ns.T, ns.dt)
    else:
        drv = L.DrivingFunction.zero(ns.T, ns.dt)
    state = L.LoewnerState(drv)
    stride = ns.stride or max(1, state.n_steps // 1000)
    config["stride"] = stride
    times, pts = state.trace(stride)
    tip = pts[-1]
    summary.update(mean=[tip.real, tip.imag], stderr=None, count=len(pts))
    summary["extra"]["tip"] = [tip.real, tip.imag]
    if ns.z is not None:
        g = L.chordal_forward(ns.z, drv, ns.T, ns.dt)
        summary["extra"]["g_T(z)"] = ({"swallowed_at": g.time} if isinstance(g, L.Swallowed)
                                      else [g.real, g.imag])
    if ns.driver_out:
        drv.to_csv(ns.driver_out)
    rows = np.column_stack([times, pts.real, pts.imag]).tolist()
    return (["t", "re", "im"], rows), (["t", "re", "im"], rows)


def _run_series(ns, summary):
    from . import series as S

    if ns.kind == "exit":
        coeffs = [complex(c.replace("i", "j")) for c in ns.coeffs.split(",")]
        val = S.exit_time_from_series(coeffs)
    elif ns.kind == "arctan":
        val = S.exit_time_from_series(S.arctan_coeffs(ns.n))
    elif ns.kind == "basel":
        # sum over all n from the odd-index sum: all = (4/3) odd, odd = 2 * arctan exit time
        val = (8.0 / 3.0) * S.exit_time_from_series(S.arctan_coeffs(ns.n))
    else:
        val = float(S.poisson_kernel(ns.r, ns.theta, ns.form))
    summary.update(mean=val, stderr=0.0, count=1)
    return (["value"], [[val]])


def _emit(result: dict, ns, elapsed: float, stream) -> None:
    header, rows = result["table"]
    if result["data"] is not None and getattr(ns, "out", None):
        with open(ns.out, "w") as fh:
            fh.write(_table(*result["data"]))
    summary = {k: result[k] for k in ("command", "config", "mean", "stderr", "count", "extra")}
    summary["elapsed_seconds"] = float(elapsed)
    if ns.format == "json":
        stream.write(json.dumps(_jsonable(summary)) + "\n")
    else:
        stream.write("# config " + json.dumps(_jsonable({"command": result["command"], **result["config"]})) + "\n")
        stream.write(_table(header, rows))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def main(argv=None) -> int:
    try:
        ns = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if ns.command == "verify":
        from .acceptance import run_suite

        ok = run_suite(quick=ns.quick, only=ns.only, stream=sys.stdout)
        return 0 if ok else 1
    t0 = time.perf_counter()
    try:
        result = _run(ns)
    except NumericFailure as exc:
        print(f"bmcx: numeric failure: {exc}", file=sys.stderr)
        return NUMERIC_FAILURE
    except (BMCXError, ValueError) as exc:
        print(f"bmcx: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    _emit(result, ns, time.perf_counter() - t0, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
