"""Monte Carlo engine for planar Brownian motion.

Paths are advanced with the adaptive Euler step ``dt = min(dt_max, c d^2)``
where ``d`` is the distance to the boundary; a path exits once ``d`` falls
below the boundary tolerance, or when a step lands outside, in which case
the crossing is located by bisection and the exit time interpolated.

Every path draws from its own counter-based stream keyed by
``(seed, path index)`` and reductions run in path order, so results are
bit-identical for any number of worker threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numba
import numpy as np
from numba import njit

from . import _kernels as K
from .domains import Disk, Domain, HalfPlane, Plane
from .errors import NumericFailure, StartAtOrigin, StartOutsideDomain
from .rng import normals

EXITED, CENSORED, HORIZON = K.EXITED, K.CENSORED, K.HORIZON
CSV_COLUMNS = ("path_id", "exit_x", "exit_y", "exit_time", "winding", "sup_abs")


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo controls.

    Parameters
    ----------
    seed : int
        Global 64-bit seed; path ``i`` uses the substream ``(seed, i)``.
    n_paths : int
    dt_max : float
        Cap on the time step.
    step_factor : float
        ``c`` in ``dt = min(dt_max, c d^2)``.
    boundary_tol : float or None
        Exit tolerance ``eps``; ``None`` resolves to ``1e-4`` times the
        domain length scale.
    max_steps : int
        Paths still running after this many steps are censored.
    workers : int or None
        Number of compiled worker threads; ``None`` keeps the current setting.
    chunk : int
        Paths per scheduling unit. Part of the reduction order, so it is a
        config value rather than a function of the worker count.
    """

    seed: int = 0
    n_paths: int = 10_000
    dt_max: float = 1e-3
    step_factor: float = 0.1
    boundary_tol: Optional[float] = None
    max_steps: int = 10_000_000
    workers: Optional[int] = None
    chunk: int = 256

    def __post_init__(self):
        if self.n_paths <= 0 or self.max_steps <= 0 or self.chunk <= 0:
            raise ValueError("n_paths, max_steps and chunk must be positive")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if not 0 < self.step_factor <= 1:
            raise ValueError("step_factor must lie in (0, 1]")
        if self.boundary_tol is not None and not self.boundary_tol > 0:
            raise ValueError("boundary_tol must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def resolve(self, domain: Domain) -> "SimConfig":
        """Fill in the boundary tolerance for ``domain`` and validate it."""
        eps = self.boundary_tol
        if eps is None:
            eps = 1e-4 * domain.length_scale
        if domain.bounded and not eps < 1e-2 * domain.length_scale:
            raise ValueError("boundary_tol must be below 1% of the domain diameter")
        return replace(self, boundary_tol=eps)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class EstimatorResult:
    """Sample mean with its standard error.

    ``count`` excludes censored paths; ``censored`` reports how many there
    were. For histogram estimators ``mean`` and ``stderr`` are arrays of
    per-bin frequencies and ``histogram`` holds ``(edges_or_None, counts)``.
    """

    mean: float
    stderr: float
    count: int
    censored: int = 0
    histogram: Optional[tuple] = None

    @classmethod
    def from_samples(cls, values, censored: int = 0) -> "EstimatorResult":
        v = np.asarray(values, dtype=float)
        n = v.size
        if n == 0:
            raise NumericFailure("no uncensored samples")
        sd = float(np.std(v, ddof=1)) if n > 1 else 0.0
        return cls(float(np.mean(v)), sd / math.sqrt(n), int(n), int(censored))

    def zscore(self, target: float) -> float:
        diff = self.mean - target
        if self.stderr == 0:
            return 0.0 if diff == 0 else math.inf
        return abs(diff) / self.stderr

    def within(self, target: float, k: float = 3.0) -> bool:
        return self.zscore(target) <= k

    def as_dict(self) -> dict:
        def plain(x):
            return x.tolist() if isinstance(x, np.ndarray) else x

        return {"mean": plain(self.mean), "stderr": plain(self.stderr),
                "count": self.count, "censored": self.censored}


@dataclass(frozen=True)
class Grid:
    """Axis-aligned cell grid: lower-left corner, cell sizes and counts."""

    x0: float
    y0: float
    hx: float
    hy: float
    nx: int
    ny: int

    @classmethod
    def cell_at(cls, center: complex, size: float) -> "Grid":
        """A single square cell centred at ``center``."""
        return cls(center.real - size / 2, center.imag - size / 2, size, size, 1, 1)

    @classmethod
    def covering(cls, lo: complex, hi: complex, nx: int, ny: int) -> "Grid":
        return cls(lo.real, lo.imag, (hi.real - lo.real) / nx, (hi.imag - lo.imag) / ny, nx, ny)

    def as_array(self) -> np.ndarray:
        return np.array([self.x0, self.y0, self.hx, self.hy, self.nx, self.ny], dtype=float)

    @property
    def bbox(self) -> np.ndarray:
        return np.array([self.x0, self.x0 + self.nx * self.hx, self.y0, self.y0 + self.ny * self.hy])

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    def centers(self) -> np.ndarray:
        x = self.x0 + (np.arange(self.nx) + 0.5) * self.hx
        y = self.y0 + (np.arange(self.ny) + 0.5) * self.hy
        return x[:, None] + 1j * y[None, :]


@dataclass
class PathBatch:
    """Per-path outputs of one simulation run."""

    exit_points: np.ndarray
    exit_times: np.ndarray
    winding: np.ndarray
    sup_abs: np.ndarray
    integral: np.ndarray
    status: np.ndarray
    steps: np.ndarray
    chunk_grids: Optional[np.ndarray]
    config: SimConfig
    first_path: int = 0

    @property
    def n_paths(self) -> int:
        return self.status.size

    @property
    def stopped(self) -> np.ndarray:
        """Mask of paths that were not censored."""
        return self.status != CENSORED

    @property
    def n_censored(self) -> int:
        return int(np.count_nonzero(self.status == CENSORED))

    def estimate(self, values) -> EstimatorResult:
        """Mean of ``values`` over uncensored paths."""
        v = np.asarray(values)
        return EstimatorResult.from_samples(v[self.stopped], self.n_censored)

    def time_estimate(self) -> EstimatorResult:
        return self.estimate(self.exit_times)

    def to_csv(self, target) -> None:
        """Write the per-path table with ``%.17g`` formatting."""
        ids = np.arange(self.first_path, self.first_path + self.n_paths)
        table = np.column_stack([ids, self.exit_points.real, self.exit_points.imag,
                                 self.exit_times, self.winding, self.sup_abs])
        np.savetxt(target, table, fmt=["%d"] + ["%.17g"] * 5, delimiter=",",
                   header=",".join(CSV_COLUMNS), comments="")


def _as_integrand(fn):
    if fn is None:
        return K.zero_integrand
    if isinstance(fn, numba.core.ccallback.CFunc):
        raise TypeError("pass a Python or njit function, not a cfunc")
    if getattr(fn, "nopython_signatures", None) and K.INTEGRAND_SIG in fn.nopython_signatures:
        return fn
    return njit(K.INTEGRAND_SIG)(fn)


def modulus_squared_of(fprime: Callable) -> Callable:
    """Compiled integrand ``z -> |fprime(z)|^2`` for time-change functionals."""
    fp = fprime if hasattr(fprime, "py_func") else njit(fprime)

    @njit(K.INTEGRAND_SIG)
    def integrand(z):
        v = fp(z)
        return v.real * v.real + v.imag * v.imag

    return integrand


def disk_indicator(center: complex, radius: float) -> Callable:
    """Compiled indicator of the open disk, for occupation-time integrals."""
    c = complex(center)
    r2 = float(radius) ** 2

    @njit(K.INTEGRAND_SIG)
    def integrand(z):
        w = z - c
        return 1.0 if w.real * w.real + w.imag * w.imag < r2 else 0.0

    return integrand


def simulate(domain: Domain, start: complex, config: SimConfig, *, winding: Optional[int] = None,
             mark: complex = 0j, sup_center: complex = 0j, horizon: Optional[float] = None,
             integrand: Optional[Callable] = None, grid: Optional[Grid] = None,
             roi: Optional[Sequence[float]] = None, first_path: int = 0) -> PathBatch:
    """Run ``config.n_paths`` Brownian paths from ``start`` until they leave ``domain``.

    Parameters
    ----------
    winding : int or None
        ``None`` disables winding; ``0`` tracks the continuous argument about
        ``mark``; ``n > 0`` also stops the path when it reaches ``2 pi n``.
    horizon : float or None
        Stop paths at this time (status ``HORIZON``).
    integrand : callable or None
        Real function of the position, integrated along the path with the
        left-point rule (time-change clocks, Dynkin integrals).
    grid : Grid or None
        Occupation-time grid; per-chunk grids are returned.
    roi : (x0, x1, y0, y1), None or False
        Region of interest; ``False`` disables the relaxation. Away from it the ``dt_max`` cap is relaxed to
        ``c g^2`` with ``g`` the distance to the region, which keeps long
        excursions cheap without changing anything inside the region.
        Defaults to the grid's bounding box when a grid is given, else to
        the start point on unbounded domains and to none on bounded ones.
    """
    start = complex(start)
    if not domain.contains(start):
        raise StartOutsideDomain(f"start {start} is not inside {domain.label}")
    cfg = config.resolve(domain)
    if cfg.workers is not None:
        numba.set_num_threads(cfg.workers)
    n = cfg.n_paths
    n_chunks = (n + cfg.chunk - 1) // cfg.chunk
    if grid is not None:
        garr = grid.as_array()
        grids = np.zeros((n_chunks, grid.nx, grid.ny))
        if roi is None:
            roi = grid.bbox
    else:
        garr = np.array([0.0, 0.0, 1.0, 1.0, 0.0, 0.0])
        grids = np.zeros((n_chunks, 0, 0))
    if roi is None and not domain.bounded:
        roi = [start.real, start.real, start.imag, start.imag]
    if roi is False:
        roi = None
    use_roi = roi is not None
    roi_arr = np.asarray(roi if use_roi else np.zeros(4), dtype=float)
    rows = np.zeros((n, 6))
    status = np.zeros(n, dtype=np.int8)
    steps = np.zeros(n, dtype=np.int64)
    K.simulate_paths(
        domain.kind, domain.params, start, np.uint64(cfg.seed), int(first_path), n, cfg.chunk,
        float(cfg.dt_max), float(cfg.step_factor), float(cfg.boundary_tol), int(cfg.max_steps),
        -1 if winding is None else int(winding), complex(mark), complex(sup_center),
        0.0 if horizon is None else float(horizon), roi_arr, use_roi, garr,
        _as_integrand(integrand), rows, status, steps, grids,
    )
    return PathBatch(
        exit_points=rows[:, 0] + 1j * rows[:, 1], exit_times=rows[:, 2], winding=rows[:, 3],
        sup_abs=rows[:, 4], integral=rows[:, 5], status=status, steps=steps,
        chunk_grids=grids if grid is not None else None, config=cfg, first_path=first_path,
    )


def _vec(f: Callable, z: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(f(z))
        if out.shape == z.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([f(w) for w in z])


# ---------------------------------------------------------------------------
# increments


def sample_increment(dt: float, seed: int, path: int = 0, count: int = 1) -> np.ndarray:
    """``count`` planar increments ``N(0, dt) + i N(0, dt)`` from stream ``(seed, path)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    v = normals(seed, path, count)
    return math.sqrt(dt) * (v[0::2] + 1j * v[1::2])


# ---------------------------------------------------------------------------
# exit problems


def run_exit(domain: Domain, start: complex, config: SimConfig):
    """Exit positions and times; returns ``(batch, exit-time estimate)``."""
    batch = simulate(domain, start, config)
    return batch, batch.time_estimate()


def dirichlet_solve(domain: Domain, start: complex, boundary_fn: Callable, config: SimConfig) -> EstimatorResult:
    """``E_start[boundary_fn(B_T)]``, the harmonic extension of ``boundary_fn``."""
    batch = simulate(domain, start, config)
    z = batch.exit_points[batch.stopped]
    return EstimatorResult.from_samples(_vec(boundary_fn, z).astype(float), batch.n_censored)


@dataclass(frozen=True)
class Partition:
    """Boundary partition: ``assign`` maps exit points to bin indices."""

    n_bins: int
    assign: Callable
    edges: Optional[np.ndarray] = None

    @classmethod
    def arcs(cls, n_bins: int, center: complex = 0j, offset: float = 0.0) -> "Partition":
        """Equal arcs of a circle, arc ``k`` spanning ``offset + [k, k+1) 2 pi / n``."""
        edges = offset + 2 * np.pi * np.arange(n_bins + 1) / n_bins

        def assign(z):
            ang = np.mod(np.angle(np.asarray(z) - center) - offset, 2 * np.pi)
            return np.minimum((ang * n_bins / (2 * np.pi)).astype(int), n_bins - 1)

        return cls(n_bins, assign, edges)

    @classmethod
    def intervals(cls, edges: Sequence[float]) -> "Partition":
        """Intervals of the real part; ``edges`` may start at ``-inf`` and end at ``inf``."""
        e = np.asarray(edges, dtype=float)

        def assign(z):
            idx = np.searchsorted(e, np.real(z), side="right") - 1
            idx[(idx < 0) | (idx >= len(e) - 1)] = -1
            return idx

        return cls(len(e) - 1, assign, e)


def histogram_estimate(points: np.ndarray, partition: Partition, censored: int = 0) -> EstimatorResult:
    idx = np.asarray(partition.assign(points))
    counts = np.bincount(idx[idx >= 0], minlength=partition.n_bins)[: partition.n_bins]
    n = len(points)
    if n == 0:
        raise NumericFailure("no uncensored samples")
    freq = counts / n
    se = np.sqrt(freq * (1 - freq) / n)
    return EstimatorResult(freq, se, n, censored, (partition.edges, counts))


def harmonic_measure_mc(domain: Domain, start: complex, partition: Partition, config: SimConfig) -> EstimatorResult:
    """Per-bin exit frequencies with binomial standard errors."""
    batch = simulate(domain, start, config)
    return histogram_estimate(batch.exit_points[batch.stopped], partition, batch.n_censored)


def walk_on_spheres(domain: Domain, start: complex, config: SimConfig, first_path: int = 0) -> np.ndarray:
    """Exit positions by walk on spheres (no exit times).

    Each step jumps to a uniform point on the largest inscribed circle,
    stopping within ``boundary_tol`` of the boundary. Walks that do not
    finish in ``max_steps`` are dropped from the returned array.
    """
    start = complex(start)
    if not domain.contains(start):
        raise StartOutsideDomain(f"start {start} is not inside {domain.label}")
    cfg = config.resolve(domain)
    if cfg.workers is not None:
        numba.set_num_threads(cfg.workers)
    out = np.zeros(cfg.n_paths, dtype=np.complex128)
    ok = np.zeros(cfg.n_paths, dtype=np.bool_)
    K.walk_on_spheres_paths(domain.kind, domain.params, start, np.uint64(cfg.seed), int(first_path),
                            cfg.n_paths, float(cfg.boundary_tol), int(cfg.max_steps), out, ok)
    return out[ok]


# ---------------------------------------------------------------------------
# occupation, winding, time change


@dataclass
class OccupationResult:
    """Occupation-time density per cell, with batch-means standard errors."""

    density: np.ndarray
    stderr: np.ndarray
    grid: Grid
    count: int
    censored: int


def occupation_density(batch: PathBatch, grid: Grid) -> OccupationResult:
    g = batch.chunk_grids
    sizes = np.diff(np.append(np.arange(0, batch.n_paths, batch.config.chunk), batch.n_paths))
    per_chunk = g / (sizes[:, None, None] * grid.cell_area)
    density = g.sum(axis=0) / (batch.n_paths * grid.cell_area)
    k = g.shape[0]
    if k > 1:
        w = sizes / sizes.sum()
        var = np.sum(w[:, None, None] * (per_chunk - density) ** 2, axis=0) * k / (k - 1)
        se = np.sqrt(var / k)
    else:
        se = np.full(density.shape, np.nan)
    return OccupationResult(density, se, grid, batch.n_paths, batch.n_censored)


def occupation_grid(domain: Domain, start: complex, grid: Grid, config: SimConfig) -> OccupationResult:
    """Expected time per unit area spent in each cell before exit.

    Estimates the Green's function ``G(start, cell centre)``. Censored paths
    contribute the time they accumulated before truncation.
    """
    batch = simulate(domain, start, config, grid=grid)
    return occupation_density(batch, grid)


def winding_time(n: int, start: complex, config: SimConfig, grid: Optional[Grid] = None,
                 mark: complex = 0j) -> PathBatch:
    """Free motion stopped when its argument about ``mark`` has changed by ``2 pi n``."""
    start = complex(start)
    if start == mark:
        raise StartAtOrigin("winding needs a start point away from the marked point")
    if n <= 0:
        raise ValueError("n must be a positive integer")
    roi = grid.bbox if grid is not None else [mark.real, mark.real, mark.imag, mark.imag]
    return simulate(Plane(), start, config, winding=n, mark=mark, grid=grid, roi=roi)


def winding_at_horizon(T: float, start: complex, config: SimConfig, mark: complex = 0j) -> PathBatch:
    """Free motion to time ``T`` with the continuous argument about ``mark`` tracked."""
    start = complex(start)
    if start == mark:
        raise StartAtOrigin("winding needs a start point away from the marked point")
    roi = [mark.real, mark.real, mark.imag, mark.imag]
    return simulate(Plane(), start, config, winding=0, mark=mark, horizon=T, roi=roi)


def time_change_along_path(base: Domain, start: complex, fprime: Callable, config: SimConfig) -> EstimatorResult:
    """Estimate ``E[sigma(tau)]`` with ``sigma(t) = int_0^t |f'(B_s)|^2 ds``.

    Paths run in ``base`` and stop at its exit time; by the conformal
    invariance of Brownian motion the mean is the expected exit time of
    the image domain from ``f(start)``.
    """
    batch = simulate(base, start, config, integrand=modulus_squared_of(fprime))
    return batch.estimate(batch.integral)


# ---------------------------------------------------------------------------
# martingale identities and inequalities


def dynkin_check(u: Callable, laplacian_u: Callable, domain: Domain, start: complex,
                 config: SimConfig) -> EstimatorResult:
    """Residual ``u(B_tau) - u(a) - (1/2) int_0^tau lap u(B_s) ds``; mean 0 for valid input.

    ``u`` is applied to arrays of exit points; ``laplacian_u`` is compiled
    and integrated along each path.
    """
    batch = simulate(domain, start, config, integrand=laplacian_u)
    ok = batch.stopped
    ua = float(np.real(u(complex(start))))
    res = np.real(_vec(u, batch.exit_points[ok])) - ua - 0.5 * batch.integral[ok]
    return EstimatorResult.from_samples(res, batch.n_censored)


def dynkin_negative_control(horizons: Sequence[int] = (1_000, 10_000, 100_000), level: float = -1.0,
                            config: Optional[SimConfig] = None):
    """Dynkin's identity on the unbounded domain ``{Im z > level}`` from 0 with ``u = Im z``.

    For each step horizon, paths still running are censored and contribute
    ``0 = u(start)``; exited paths contribute ``u(B_tau) = level``. The mean
    is ``level * P(tau <= horizon)``, which moves away from ``u(0) = 0``
    toward ``level`` as the horizon grows, because ``tau`` is a.s. finite but
    not integrable.
    """
    if config is None:
        config = SimConfig(n_paths=4000, dt_max=1e-2)
    dom = HalfPlane(level)
    out = []
    for h in horizons:
        # fixed step cap so a step horizon is a time horizon
        batch = simulate(dom, 0j, replace(config, max_steps=int(h)), roi=False)
        vals = np.where(batch.status == EXITED, batch.exit_points.imag, 0.0)
        out.append(EstimatorResult.from_samples(vals, batch.n_censored))
    return out


@dataclass
class BurkholderResult:
    lhs: EstimatorResult
    mid: EstimatorResult
    rhs: EstimatorResult
    davis_right: EstimatorResult

    def holds(self, k: float = 3.0) -> bool:
        """``lhs <= mid <= rhs`` and ``mid <= davis_right`` up to ``k`` combined stderrs."""
        def le(a, b):
            return a.mean <= b.mean + k * math.hypot(a.stderr, b.stderr)

        return le(self.lhs, self.mid) and le(self.mid, self.rhs) and le(self.mid, self.davis_right)


def burkholder_check(domain: Domain, start: complex, config: SimConfig, center: complex = 0j) -> BurkholderResult:
    """Estimate ``2E[tau] + |a|^2 <= E[sup |B|^2] <= 4 (2E[tau] + |a|^2)``.

    Moduli are measured from ``center``. The Davis bound
    ``E[sup |B|^2] <= 4 E[|B_tau|^2]`` is estimated alongside.
    """
    batch = simulate(domain, start, config, sup_center=center)
    ok = batch.stopped
    a2 = abs(complex(start) - center) ** 2
    lhs = EstimatorResult.from_samples(2 * batch.exit_times[ok] + a2, batch.n_censored)
    mid = EstimatorResult.from_samples(batch.sup_abs[ok] ** 2, batch.n_censored)
    rhs = EstimatorResult(4 * lhs.mean, 4 * lhs.stderr, lhs.count, lhs.censored)
    davis = EstimatorResult.from_samples(4 * np.abs(batch.exit_points[ok] - center) ** 2, batch.n_censored)
    return BurkholderResult(lhs, mid, rhs, davis)
