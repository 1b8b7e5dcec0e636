"""Acceptance suite: thirteen end-to-end checks of closed forms against simulation.

Each criterion returns a :class:`Criterion` holding named sub-checks. Full
mode uses the stated path counts and 3-sigma tolerances; quick mode uses
fewer paths and 4-sigma tolerances.
"""
from __future__ import annotations

import math
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy import stats

from . import domains as D
from . import engine as E
from . import green as G
from . import loewner as L
from . import series as S


@dataclass(frozen=True)
class Mode:
    quick: bool = False

    @property
    def k(self) -> float:
        return 4.0 if self.quick else 3.0

    def paths(self, full: int, quick: Optional[int] = None) -> int:
        if not self.quick:
            return full
        return quick if quick is not None else max(1000, full // 5)

    def config(self, full: int, quick: Optional[int] = None, seed: int = 0, **kw) -> E.SimConfig:
        return E.SimConfig(seed=seed, n_paths=self.paths(full, quick), **kw)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Criterion:
    number: int
    title: str
    budget_seconds: float
    checks: List[Check] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        parts = "; ".join(f"{c.name}{'' if c.passed else ' [FAIL]'}: {c.detail}" for c in self.checks)
        return f"[{status}] criterion {self.number:2d} {self.title} ({self.elapsed:.1f}s) | {parts}"


def _z(res: E.EstimatorResult, target: float) -> str:
    return f"{res.mean:.6g} +/- {res.stderr:.2g} vs {target:.6g} (z={res.zscore(target):.2f})"


def _mc(crit: Criterion, name: str, res: E.EstimatorResult, target: float, k: float) -> None:
    crit.add(name, res.within(target, k) and res.censored <= 1e-4 * (res.count + res.censored),
             _z(res, target) + (f", censored {res.censored}" if res.censored else ""))


# ---------------------------------------------------------------------------


def criterion_1(mode: Mode) -> Criterion:
    c = Criterion(1, "disk exit time", 60)
    _, res = E.run_exit(D.Disk(), 0j, mode.config(100_000, 20_000, seed=1))
    _mc(c, "E_0[T]=1/2", res, 0.5, mode.k)
    return c


def criterion_2(mode: Mode) -> Criterion:
    c = Criterion(2, "equilateral triangle", 120)
    tri = D.EquilateralTriangle()
    h0 = float(D.torsion_function(tri, 0j))
    c.add("torsion(0)=1/6", abs(h0 - 1 / 6) <= 1e-15, f"|diff|={abs(h0 - 1 / 6):.1e}")
    _, res = E.run_exit(tri, 0j, mode.config(200_000, 40_000, seed=2))
    _mc(c, "MC E_0[T]", res, 1 / 6, mode.k)
    return c


def criterion_3(mode: Mode) -> Criterion:
    c = Criterion(3, "cardioid three ways", 180)
    val = S.exit_time_from_series([2, 1])
    c.add("series (2,1)", val == 2.5, f"{val!r}")
    _, res = E.run_exit(D.Cardioid(), 1 + 0j, mode.config(100_000, 20_000, seed=3))
    _mc(c, "MC direct", res, 2.5, mode.k)
    tc = E.time_change_along_path(D.Disk(), 0j, lambda z: 2 * (1 + z), mode.config(100_000, 20_000, seed=4))
    _mc(c, "time change", tc, 2.5, mode.k)
    return c


def criterion_4(mode: Mode) -> Criterion:
    c = Criterion(4, "strip and Basel", 120)
    target = math.pi**2 / 16
    part = S.exit_time_from_series(S.arctan_coeffs(1_000_000))
    c.add("series N=1e6", abs(part - target) < 1e-6, f"{part:.12f} (diff {part - target:.1e})")
    _, res = E.run_exit(D.Strip(), 0j, mode.config(100_000, 20_000, seed=5))
    _mc(c, "MC strip", res, target, mode.k)
    # odd sum = 2 * part; full sum = (4/3) odd sum
    basel = (4.0 / 3.0) * 2.0 * part
    c.add("implied sum 1/n^2", abs(basel - math.pi**2 / 6) < 1e-6, f"{basel:.12f} (diff {basel - math.pi**2 / 6:.1e})")
    return c


def criterion_5(mode: Mode) -> Criterion:
    c = Criterion(5, "annulus/wedge/strip hitting laws", 90)
    ann = D.Annulus(1, 4)
    z = 2 + 0j
    res = E.dirichlet_solve(ann, z, lambda w: (np.abs(w) < 2.5).astype(float), mode.config(50_000, 10_000, seed=6))
    _mc(c, "annulus inner", res, float(D.closed_form_harmonic(ann, z)), mode.k)
    wedge = D.Wedge(0, math.pi / 2)
    z = complex(math.cos(0.5), math.sin(0.5))
    res = E.dirichlet_solve(wedge, z, lambda w: (np.abs(np.angle(w)) < math.pi / 4).astype(float),
                            mode.config(50_000, 10_000, seed=7))
    _mc(c, "wedge first ray", res, float(D.closed_form_harmonic(wedge, z)), mode.k)
    strip = D.Strip(0, 1)
    z = 0.3 + 0j
    res = E.dirichlet_solve(strip, z, lambda w: (w.real < 0.5).astype(float), mode.config(50_000, 10_000, seed=8))
    _mc(c, "strip left side", res, float(D.closed_form_harmonic(strip, z)), mode.k)
    return c


def _poisson_bins(a: complex, n_bins: int, m: int = 1 << 16) -> np.ndarray:
    out = []
    for k in range(n_bins):
        lo, hi = 2 * np.pi * k / n_bins, 2 * np.pi * (k + 1) / n_bins
        out.append(S.poisson_integral(lambda t: ((t >= lo) & (t < hi)).astype(float), a, m))
    return np.array(out)


def criterion_6(mode: Mode) -> Criterion:
    c = Criterion(6, "harmonic measure vs Poisson", 120)
    a = 0.5 + 0j
    part = E.Partition.arcs(12)
    cfg = mode.config(100_000, 20_000, seed=9)
    batch = E.simulate(D.Disk(), a, cfg)
    hist = E.histogram_estimate(batch.exit_points[batch.stopped], part, batch.n_censored)
    expect = _poisson_bins(a, 12)
    z = np.abs(hist.mean - expect) / hist.stderr
    c.add("12 arcs within 4 sigma", bool(np.all(z <= 4.0)), f"max z={z.max():.2f}")
    wos = E.walk_on_spheres(D.Disk(), a, E.SimConfig(seed=10, n_paths=cfg.n_paths))
    w_hist = E.histogram_estimate(wos, part).histogram[1]
    table = np.vstack([hist.histogram[1], w_hist])
    p = stats.chi2_contingency(table)[1]
    c.add("WoS vs Euler chi2", p > 1e-3, f"p={p:.3g}")
    return c


def criterion_7(mode: Mode) -> Criterion:
    c = Criterion(7, "Cauchy exit law", 90)
    cfg = mode.config(100_000, 20_000, seed=11)
    batch = E.simulate(D.HalfPlane(), 1j, cfg)
    x = batch.exit_points[batch.stopped].real
    res = E.EstimatorResult.from_samples((np.abs(x) <= 1).astype(float), batch.n_censored)
    _mc(c, "P(|x|<=1)=1/2", res, 0.5, mode.k)
    # equiprobable bins of the Cauchy law centred at 0 with scale 1
    edges = np.tan(np.pi * (np.arange(21) / 20 - 0.5))
    counts = np.histogram(x, bins=edges)[0]
    p = stats.chisquare(counts, np.full(20, len(x) / 20)).pvalue
    c.add("20-bin chi2", p > 1e-3, f"p={p:.3g}")
    return c


def criterion_8(mode: Mode) -> Criterion:
    c = Criterion(8, "Green's functions", 600)
    cell = 0.1
    grid = E.Grid.cell_at(2j, cell)
    occ = E.occupation_grid(D.HalfPlane(), 1j, grid, mode.config(500_000, 100_000, seed=12))
    g, ref = float(occ.density[0, 0]), float(G.green_halfplane(1j, 2j))
    c.add("half-plane cell at 2i", abs(g / ref - 1) < 0.10, f"{g:.5f} vs {ref:.5f} ({100 * (g / ref - 1):+.1f}%)")
    grid = E.Grid.cell_at(0.5 + 0j, cell)
    occ = E.occupation_grid(D.Disk(), 0j, grid, mode.config(500_000, 100_000, seed=13))
    g, ref = float(occ.density[0, 0]), float(G.green_disk(0, 0.5))
    c.add("disk cell at 0.5", abs(g / ref - 1) < 0.10, f"{g:.5f} vs {ref:.5f} ({100 * (g / ref - 1):+.1f}%)")
    grid = E.Grid.cell_at(-1 + 0j, cell)
    batch = E.winding_time(1, 1 + 0j, mode.config(200_000, 50_000, seed=14), grid=grid)
    g, ref = float(E.occupation_density(batch, grid).density[0, 0]), G.green_winding(1, -1)
    c.add("winding cell at -1", abs(g / ref - 1) < 0.15, f"{g:.5f} vs {ref:.5f} ({100 * (g / ref - 1):+.1f}%)")
    rng = np.random.default_rng(15)
    z = np.sqrt(rng.uniform(0, 1, 1000)) * np.exp(2j * np.pi * rng.uniform(size=1000))
    w = np.sqrt(rng.uniform(0, 1, 1000)) * np.exp(2j * np.pi * rng.uniform(size=1000))
    diff = np.abs(G.green_disk(z, w) - G.green_halfplane(G.disk_to_halfplane(z), G.disk_to_halfplane(w)))
    c.add("disk <-> half-plane", diff.max() <= 1e-12, f"max diff {diff.max():.1e}")
    return c


def criterion_9(mode: Mode) -> Criterion:
    c = Criterion(9, "Dynkin residuals", 120)
    a = 0.2 + 0.1j
    tests = [("|z|^2", lambda z: np.abs(z) ** 2, lambda z: 4.0), ("Re z", np.real, lambda z: 0.0)]
    for dom_name, dom in (("disk", D.Disk()), ("triangle", D.EquilateralTriangle())):
        for i, (u_name, u, lap) in enumerate(tests):
            res = E.dynkin_check(u, lap, dom, a, mode.config(50_000, 10_000, seed=16 + i))
            _mc(c, f"{u_name} on {dom_name}", res, 0.0, mode.k)
    runs = E.dynkin_negative_control((1_000, 10_000, 100_000),
                                     config=E.SimConfig(seed=20, n_paths=mode.paths(4000, 2000), dt_max=1e-2))
    means = [r.mean for r in runs]
    monotone = all(b < a_ for a_, b in zip(means, means[1:])) and abs(means[-1] + 1) < abs(means[0] + 1)
    c.add("unbounded control drifts to -1", monotone, ", ".join(f"{m:.4f}" for m in means))
    return c


def criterion_10(mode: Mode) -> Criterion:
    c = Criterion(10, "Burkholder/Davis", 120)
    b = E.burkholder_check(D.Disk(), 0j, mode.config(100_000, 20_000, seed=21))
    c.add("disk from 0: (1, 1, 4)", abs(b.lhs.mean - b.mid.mean) < 1e-2 and b.holds(mode.k),
          f"lhs={b.lhs.mean:.4f} mid={b.mid.mean:.4f} rhs={b.rhs.mean:.4f}")
    b = E.burkholder_check(D.Disk(), 0.5 + 0j, mode.config(50_000, 10_000, seed=22))
    c.add("disk from 0.5", b.holds(mode.k), f"lhs={b.lhs.mean:.4f} mid={b.mid.mean:.4f} rhs={b.rhs.mean:.4f} "
          f"davis={b.davis_right.mean:.4f}")
    b = E.burkholder_check(D.Strip(), 0j, mode.config(50_000, 10_000, seed=23))
    c.add("strip from 0", b.holds(mode.k), f"lhs={b.lhs.mean:.4f} mid={b.mid.mean:.4f} rhs={b.rhs.mean:.4f} "
          f"davis={b.davis_right.mean:.4f}")
    return c


def _err_at(z, dt, exact):
    g = L.chordal_forward(z, L.DrivingFunction.zero(1.0, dt), 1.0, dt)
    return math.nan if isinstance(g, L.Swallowed) else abs(g - exact), g


def criterion_11(mode: Mode) -> Criterion:
    c = Criterion(11, "Loewner", 120)
    err, g = _err_at(1j, 1e-4, math.sqrt(3))
    c.add("|g_1(i) - sqrt3| < 1e-6", err < 1e-6, f"g_1(i) -> {g}")
    tip = L.LoewnerState(L.DrivingFunction.zero(1.0, 1e-5)).tip()
    c.add("|gamma(1) - 2i| < 1e-3", abs(tip - 2j) < 1e-3, f"{abs(tip - 2j):.1e}")
    e1, _ = _err_at(1j, 0.1, math.sqrt(3))
    e2, _ = _err_at(1j, 0.05, math.sqrt(3))
    ratio = e1 / e2 if e2 else math.inf
    c.add("step halving at i >= 8x", ratio >= 8, f"ratio={ratio:.3g}")
    # same checks off the trace; reported, not part of the verdict
    z = 1 + 1j
    exact = np.sqrt(z * z + 4)
    d1, _ = _err_at(z, 1e-4, exact)
    r1 = _err_at(z, 0.1, exact)[0] / _err_at(z, 0.05, exact)[0]
    c.add("(info) same at 1+i", True, f"err={d1:.1e}, halving ratio={r1:.1f}")
    n = mode.paths(10_000, 10_000)
    x = L.sle_endpoint_samples(2.0, 1.0, 1e-3, seed=24, n=n)
    dev = (x - x.mean()) ** 2
    var, se = float(np.var(x, ddof=1)), float(np.std(dev, ddof=1) / math.sqrt(n))
    c.add("Var lambda(1) = kappa", abs(var - 2.0) <= mode.k * se, f"{var:.4f} +/- {se:.3f} vs 2")
    return c


def criterion_12(mode: Mode) -> Criterion:
    c = Criterion(12, "kernel and series identities", 30)
    r = np.linspace(0, 0.99, 34)[:, None]
    th = np.linspace(-np.pi, np.pi, 41)[None, :]
    base = S.poisson_kernel(r, th, "quotient")
    dev = max(float(np.max(np.abs(S.poisson_kernel(r, th, f) - base))) for f in S.KERNEL_FORMS)
    c.add("four kernel forms", dev <= 1e-12, f"max diff {dev:.1e}")

    worst = 0.0
    for coeffs, rad in (([1, 2, 1], 1.0), (np.arange(51), 0.5), ([0, 1], 0.9)):
        ser = S.PowerSeries(0j, np.asarray(coeffs, dtype=complex), [])
        quad = S.circle_mean_square(lambda z: np.polyval(np.asarray(coeffs, dtype=float)[::-1], z), 0j, rad)
        worst = max(worst, abs(S.parseval_mean_square(ser, rad) - quad))
    c.add("Parseval vs quadrature", worst <= 1e-10, f"max diff {worst:.1e}")

    rng = np.random.default_rng(25)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 17))
        b = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
        b[0] = b[0].real
        ser = S.PowerSeries(0j, b, np.conj(b[1:]), radius=np.inf)
        m = 4 * n + 8
        pts = 0.7 * np.exp(2j * np.pi * np.arange(m) / m)
        back = S.boundary_coefficients(S.eval_series(ser, pts), 0.7, n)
        worst = max(worst, np.max(np.abs(back.zcoeffs[: n + 1] - b)), np.max(np.abs(back.conjcoeffs[:n] - b[1:].conj())))
    c.add("coefficient round trip", worst <= 1e-9, f"max diff {worst:.1e}")

    pts = rng.uniform(-1, 1, (400, 2)) @ np.array([1, 1j])
    worst_t = 0.0
    for dom in (D.Disk(), D.EquilateralTriangle(), D.Strip()):
        inside = [z for z in pts if dom.contains(z) and dom.dist_to_boundary(z) > 0.01][:100]
        worst_t = max(worst_t, max(abs(D.fd_laplacian(lambda w: dom.torsion(w), z, 1e-3) + 2) for z in inside))
    c.add("torsion Laplacian = -2", worst_t <= 5e-4, f"max dev {worst_t:.1e}")
    worst_h = 0.0
    for dom, scale in ((D.Annulus(1, 4), 4), (D.Wedge(0, math.pi / 2), 2), (D.Strip(0, 1), 1)):
        inside = [z for z in scale * pts if dom.contains(z) and dom.dist_to_boundary(z) > 0.05][:100]
        worst_h = max(worst_h, max(abs(D.fd_laplacian(lambda w: dom.closed_form_harmonic(w), z, 1e-3)) for z in inside))
    c.add("harmonic Laplacian = 0", worst_h <= 5e-4, f"max dev {worst_h:.1e}")
    # truncation error near a log pole is about h^2 / r^4, so a finer step here
    worst_g = 0.0
    for fn, z0, sample in ((G.green_halfplane, 1j, lambda p: p + 1.1j), (G.green_disk, 0.2 + 0j, lambda p: 0.9 * p / 1.5),
                           (G.green_right_halfplane, 1 + 0j, lambda p: p + 1.1)):
        for w in (sample(p) for p in pts[:100]):
            if abs(w - z0) > 0.1:
                worst_g = max(worst_g, abs(D.fd_laplacian(lambda v: fn(z0, v), w, 1e-4)))
    for w in pts[:100] * 2:
        if abs(w - 1) > 0.1 and abs(w) > 0.1 and abs(w.imag) > 0.01:
            worst_g = max(worst_g, abs(D.fd_laplacian(lambda v: G.green_winding(1, v), w, 1e-4)))
    c.add("Green Laplacian = 0", worst_g <= 1e-3, f"max dev {worst_g:.1e}")
    return c


def _cli_bytes(args: List[str], threads: int, out: str) -> bytes:
    # set_num_threads needs the pool to be at least as large as the request
    pool = "8" if "--workers" in args else str(threads)
    env = dict(os.environ, NUMBA_NUM_THREADS=pool, BMCX_SEED="12345")
    subprocess.run([sys.executable, "-m", "bmcx.cli", *args, "--out", out], env=env, check=True,
                   stdout=subprocess.DEVNULL)
    with open(out, "rb") as fh:
        return fh.read()


def criterion_13(mode: Mode) -> Criterion:
    c = Criterion(13, "determinism across worker counts", 600)
    n = str(mode.paths(100_000, 20_000))
    with tempfile.TemporaryDirectory() as tmp:
        outs = {}
        for w in (1, 8):
            outs[w] = _cli_bytes(["exit-time", "--domain", "disk:0,0,1", "--start", "0,0", "--paths", n,
                                  "--workers", str(w)], w, os.path.join(tmp, f"exit{w}.csv"))
        c.add("criterion 1 CSV", outs[1] == outs[8] and len(outs[1]) > 0, f"{len(outs[1])} bytes")
        outs = {}
        for w in (1, 8):
            outs[w] = _cli_bytes(["loewner", "--driver", "sle", "--kappa", "2", "--T", "1", "--dt", "1e-4",
                                  "--driver-out", os.path.join(tmp, f"drv{w}.csv")], w,
                                 os.path.join(tmp, f"trace{w}.csv"))
            with open(os.path.join(tmp, f"drv{w}.csv"), "rb") as fh:
                outs[w] += fh.read()
        c.add("criterion 11 CSVs", outs[1] == outs[8] and len(outs[1]) > 0, f"{len(outs[1])} bytes")
    return c


CRITERIA: List[Callable[[Mode], Criterion]] = [
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
    criterion_8, criterion_9, criterion_10, criterion_11, criterion_12, criterion_13,
]


def run_criterion(number: int, quick: bool = False) -> Criterion:
    mode = Mode(quick)
    t0 = time.perf_counter()
    crit = CRITERIA[number - 1](mode)
    crit.elapsed = time.perf_counter() - t0
    if not quick:
        crit.add("runtime", crit.elapsed < crit.budget_seconds, f"{crit.elapsed:.1f}s < {crit.budget_seconds:g}s")
    return crit


def run_suite(quick: bool = False, only: Optional[List[int]] = None, stream=sys.stdout) -> bool:
    numbers = only or list(range(1, len(CRITERIA) + 1))
    ok = True
    for n in numbers:
        crit = run_criterion(n, quick)
        ok &= crit.passed
        print(crit.line(), file=stream, flush=True)
    print(f"{'ALL PASS' if ok else 'SOME FAILED'} ({'quick' if quick else 'full'} mode)", file=stream)
    return ok
