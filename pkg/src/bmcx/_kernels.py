"""Compiled domain geometry and the path-simulation kernel.

Domains are encoded as ``(kind, params)`` with ``params`` a float64 array so
one compiled kernel serves every variant. All functions here are internal;
the public surface lives in :mod:`bmcx.domains` and :mod:`bmcx.engine`.
"""
import math

import numpy as np
from numba import njit, prange, types

from .rng import normal_pair, stream_key, uniform

DISK, ANNULUS, HALFPLANE, RIGHTHALF, STRIP, WEDGE, TRIANGLE, CARDIOID, PLANE = range(9)

EXITED, CENSORED, HORIZON = 0, 1, 2

INTEGRAND_SIG = types.float64(types.complex128)
INTEGRAND_TYPE = types.FunctionType(INTEGRAND_SIG)

_OMEGA = complex(-0.5, math.sqrt(3.0) / 2.0)
_OMEGA_BAR = _OMEGA.conjugate()
_TWO_PI = 2.0 * math.pi
# below this Koebe lower bound the cardioid distance is refined exactly
_CARDIOID_REFINE = 0.05


@njit(INTEGRAND_SIG, cache=True)
def zero_integrand(z):
    return 0.0


# ---------------------------------------------------------------------------
# cardioid {(1+w)^2 : |w| < 1}, boundary c(t) = (1 + e^{it})^2


@njit(cache=True)
def _cardioid_point(t):
    e = complex(math.cos(t), math.sin(t))
    return (1.0 + e) * (1.0 + e)


@njit(cache=True)
def _cardioid_nearest(z):
    """Parameter of the nearest boundary point, local search near arg(w)."""
    s = np.sqrt(z)
    w = s - 1.0
    t0 = math.atan2(w.imag, w.real)
    best_t = t0
    best_d = 1e300
    for k in range(25):
        t = t0 - 0.6 + 1.2 * k / 24.0
        d = abs(z - _cardioid_point(t))
        if d < best_d:
            best_d = d
            best_t = t
    lo = best_t - 0.05
    hi = best_t + 0.05
    t = best_t
    for _ in range(12):
        e = complex(math.cos(t), math.sin(t))
        c = (1.0 + e) * (1.0 + e)
        c1 = 2j * e * (1.0 + e)
        c2 = -2.0 * e * (1.0 + 2.0 * e)
        r = z - c
        g = -2.0 * (r.conjugate() * c1).real
        h = 2.0 * abs(c1) ** 2 - 2.0 * (r.conjugate() * c2).real
        if h <= 0.0:
            break
        step = g / h
        t_new = min(hi, max(lo, t - step))
        if abs(t_new - t) < 1e-13:
            t = t_new
            break
        t = t_new
    if abs(z - _cardioid_point(t)) > best_d:
        t = best_t
    return t


@njit(cache=True)
def _cardioid_koebe(z):
    s = np.sqrt(z)
    w = s - 1.0
    return 0.5 * abs(s) * (1.0 - abs(w) ** 2)


@njit(cache=True)
def _cardioid_dist(z):
    lo = _cardioid_koebe(z)
    if lo > _CARDIOID_REFINE:
        return lo
    d = abs(z - _cardioid_point(_cardioid_nearest(z)))
    # the Koebe quarter theorem brackets the true distance in [lo, 4 lo]
    return min(max(lo, d), 4.0 * lo)


# ---------------------------------------------------------------------------
# per-variant geometry


@njit(cache=True)
def _wedge_rel(p, z):
    ang = math.atan2(z.imag, z.real)
    return (ang - p[0]) % _TWO_PI


@njit(cache=True)
def _ray_dist(r, delta):
    if delta >= 0.5 * math.pi:
        return r
    return r * math.sin(delta)


@njit(cache=True)
def contains(kind, p, z):
    x = z.real
    y = z.imag
    if kind == DISK:
        return (x - p[0]) ** 2 + (y - p[1]) ** 2 < p[2] * p[2]
    if kind == ANNULUS:
        r = abs(z)
        return p[0] < r < p[1]
    if kind == HALFPLANE:
        return y > p[0]
    if kind == RIGHTHALF:
        return x > 0.0
    if kind == STRIP:
        return p[0] < x < p[1]
    if kind == WEDGE:
        if z == 0:
            return False
        rel = _wedge_rel(p, z)
        return 0.0 < rel < p[1] - p[0]
    if kind == TRIANGLE:
        return (x > -0.5 and (z * _OMEGA_BAR).real > -0.5
                and (z * _OMEGA).real > -0.5)
    if kind == CARDIOID:
        r = abs(z)
        if r == 0.0:
            return False
        return r < 2.0 * (1.0 + x / r)
    return True


@njit(cache=True)
def dist(kind, p, z):
    """Lower bound on the distance from an interior point to the boundary."""
    x = z.real
    y = z.imag
    if kind == DISK:
        return p[2] - math.hypot(x - p[0], y - p[1])
    if kind == ANNULUS:
        r = abs(z)
        return min(r - p[0], p[1] - r)
    if kind == HALFPLANE:
        return y - p[0]
    if kind == RIGHTHALF:
        return x
    if kind == STRIP:
        return min(x - p[0], p[1] - x)
    if kind == WEDGE:
        r = abs(z)
        rel = _wedge_rel(p, z)
        return min(_ray_dist(r, rel), _ray_dist(r, p[1] - p[0] - rel))
    if kind == TRIANGLE:
        d0 = x + 0.5
        d1 = (z * _OMEGA_BAR).real + 0.5
        d2 = (z * _OMEGA).real + 0.5
        return min(d0, min(d1, d2))
    if kind == CARDIOID:
        return _cardioid_dist(z)
    return np.inf


@njit(cache=True)
def project(kind, p, z):
    """Nearest boundary point to ``z`` (``z`` inside or just outside)."""
    x = z.real
    y = z.imag
    if kind == DISK:
        c = complex(p[0], p[1])
        v = z - c
        if v == 0:
            return c + p[2]
        return c + p[2] * v / abs(v)
    if kind == ANNULUS:
        r = abs(z)
        target = p[0] if abs(r - p[0]) <= abs(p[1] - r) else p[1]
        if r == 0.0:
            return complex(target, 0.0)
        return z * (target / r)
    if kind == HALFPLANE:
        return complex(x, p[0])
    if kind == RIGHTHALF:
        return complex(0.0, y)
    if kind == STRIP:
        return complex(p[0] if abs(x - p[0]) <= abs(p[1] - x) else p[1], y)
    if kind == WEDGE:
        r = abs(z)
        rel = _wedge_rel(p, z)
        width = p[1] - p[0]
        # outside points: pick the ray on the shorter angular side
        if rel > width:
            to_first = _TWO_PI - rel
            to_second = rel - width
            if to_first < to_second:
                rel = -to_first
        if abs(rel) <= abs(width - rel):
            theta = p[0]
            delta = abs(rel)
        else:
            theta = p[1]
            delta = abs(width - rel)
        if delta >= 0.5 * math.pi:
            return 0j
        return r * math.cos(delta) * complex(math.cos(theta), math.sin(theta))
    if kind == TRIANGLE:
        best = z
        best_d = 1e300
        rot = 1.0 + 0j
        for k in range(3):
            d = (z * rot.conjugate()).real + 0.5
            if abs(d) < best_d:
                best_d = abs(d)
                best = z - d * rot
            rot = rot * _OMEGA
        return best
    if kind == CARDIOID:
        if z == 0:
            return 0j
        return _cardioid_point(_cardioid_nearest(z))
    return z


# ---------------------------------------------------------------------------
# simulation


@njit(cache=True)
def _crossing(kind, p, z0, dz):
    """Fraction s in (0, 1] of the segment z0 -> z0 + dz where it leaves the domain."""
    lo = 0.0
    hi = 1.0
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if contains(kind, p, z0 + mid * dz):
            lo = mid
        else:
            hi = mid
    return hi


@njit(cache=True)
def _box_dist(z, roi):
    dx = max(roi[0] - z.real, 0.0, z.real - roi[1])
    dy = max(roi[2] - z.imag, 0.0, z.imag - roi[3])
    return math.hypot(dx, dy)


@njit(cache=True, inline="always")
def _ray_fraction(u, dz, phi):
    """``s`` in [0, 1] with ``arg(u + s dz) = arg(u) + phi``."""
    e = u / abs(u) * complex(math.cos(phi), math.sin(phi))
    den = (dz * e.conjugate()).imag
    if den == 0.0:
        return 1.0
    s = -(u * e.conjugate()).imag / den
    return min(1.0, max(0.0, s))


@njit(cache=True)
def _one_path(kind, p, start, key, dt_max, c, eps, max_steps, wind_n, mark, sup_center,
              horizon, roi, use_roi, grid, integrand, out):
    z = start
    t = 0.0
    wind = 0.0
    acc = 0.0
    sup = abs(z - sup_center)
    wind_target = _TWO_PI * wind_n
    gx0 = grid[0]
    gy0 = grid[1]
    ghx = grid[2]
    ghy = grid[3]
    gnx = int(grid[4])
    gny = int(grid[5])
    status = CENSORED
    steps = 0
    counter = np.uint64(0)
    two = np.uint64(2)
    while steps < max_steps:
        d = dist(kind, p, z)
        if d < eps:
            z = project(kind, p, z)
            sup = max(sup, abs(z - sup_center))
            status = EXITED
            break
        d_eff = d
        if wind_n >= 0:
            d_eff = min(d_eff, abs(z - mark))
        dt = c * d_eff * d_eff
        cap = dt_max
        if use_roi:
            g = _box_dist(z, roi)
            cap = max(dt_max, c * g * g)
        dt = min(dt, cap)
        if horizon > 0.0:
            dt = min(dt, horizon - t)
        n1, n2 = normal_pair(key, counter)
        counter += two
        sd = math.sqrt(dt)
        dz = complex(sd * n1, sd * n2)
        znew = z + dz
        frac = 1.0
        left = not contains(kind, p, znew)
        if left:
            frac = _crossing(kind, p, z, dz)
        dw = 0.0
        wound = False
        if wind_n >= 0 and not left:
            q = (znew - mark) * (z - mark).conjugate()
            dw = math.atan2(q.imag, q.real)
            if wind_n > 0 and abs(wind + dw) >= wind_target:
                # the argument is monotone along a segment: stop where it
                # meets the ray at the target angle
                dw = math.copysign(wind_target, wind + dw) - wind
                frac = _ray_fraction(z - mark, dz, dw)
                wound = True
        h = frac * dt
        acc += integrand(z) * h
        if gnx > 0:
            ix = int(math.floor((z.real - gx0) / ghx))
            iy = int(math.floor((z.imag - gy0) / ghy))
            if 0 <= ix < gnx and 0 <= iy < gny:
                out[6 + ix * gny + iy] += h
        steps += 1
        if left:
            z = project(kind, p, z + frac * dz)
            t += h
            sup = max(sup, abs(z - sup_center))
            status = EXITED
            break
        wind += dw
        z = z + frac * dz if wound else znew
        t += h
        sup = max(sup, abs(z - sup_center))
        if wound:
            status = EXITED
            break
        if horizon > 0.0 and t >= horizon:
            status = HORIZON
            break
    out[0] = z.real
    out[1] = z.imag
    out[2] = t
    out[3] = wind
    out[4] = sup
    out[5] = acc
    return status, steps


@njit(
    types.void(
        types.int64, types.float64[:], types.complex128, types.uint64, types.int64, types.int64,
        types.int64, types.float64, types.float64, types.float64, types.int64, types.int64,
        types.complex128, types.complex128, types.float64, types.float64[:], types.boolean,
        types.float64[:], INTEGRAND_TYPE,
        types.float64[:, :], types.int8[:], types.int64[:], types.float64[:, :, :],
    ),
    parallel=True,
    cache=True,
)
def simulate_paths(kind, p, start, seed, first_path, n_paths, chunk, dt_max, c, eps, max_steps,
                   wind_n, mark, sup_center, horizon, roi, use_roi, grid, integrand,
                   rows, status, steps, grids):
    """Run ``n_paths`` paths; path ``i`` uses stream ``(seed, first_path + i)``.

    ``wind_n < 0`` disables winding; ``0`` tracks it about ``mark`` without
    stopping; ``n > 0`` stops once the winding reaches ``2 pi n`` in modulus.
    ``horizon <= 0`` means no time horizon.

    ``rows[i]`` receives (x, y, t, winding, sup, integral). Occupation time
    of chunk ``k`` accumulates in ``grids[k]`` so reductions are ordered.
    """
    n_chunks = (n_paths + chunk - 1) // chunk
    gny = int(grid[5])
    for k in prange(n_chunks):
        buf = np.zeros(6 + grids.shape[1] * grids.shape[2])
        for i in range(k * chunk, min(n_paths, (k + 1) * chunk)):
            key = stream_key(seed, first_path + i)
            for j in range(6):
                buf[j] = 0.0
            s, n = _one_path(kind, p, start, key, dt_max, c, eps, max_steps, wind_n, mark,
                             sup_center, horizon, roi, use_roi, grid, integrand, buf)
            for j in range(6):
                rows[i, j] = buf[j]
            status[i] = s
            steps[i] = n
        if grids.shape[1] > 0:
            for ix in range(grids.shape[1]):
                for iy in range(gny):
                    grids[k, ix, iy] = buf[6 + ix * gny + iy]


@njit(cache=True)
def _wos_path(kind, p, start, key, eps, max_steps):
    z = start
    counter = np.uint64(0)
    for _ in range(max_steps):
        d = dist(kind, p, z)
        if d < eps:
            return project(kind, p, z), True
        u = uniform(key, counter)
        counter += np.uint64(1)
        ang = _TWO_PI * u
        z = z + d * complex(math.cos(ang), math.sin(ang))
    return z, False


@njit(parallel=True, cache=True)
def walk_on_spheres_paths(kind, p, start, seed, first_path, n_paths, eps, max_steps, out, ok):
    for i in prange(n_paths):
        key = stream_key(seed, first_path + i)
        z, done = _wos_path(kind, p, start, key, eps, max_steps)
        out[i] = z
        ok[i] = done
