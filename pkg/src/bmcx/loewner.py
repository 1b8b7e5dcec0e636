"""Chordal and radial Loewner evolution.

Forward maps are integrated with classical RK4, interpolating the driver
linearly at half steps. Traces are built as a discrete Loewner chain: over
each grid step the driver is frozen, the map is the vertical-slit map
``z -> lam + sqrt((z - lam)^2 + 4 dt)``, and the tip is pushed back
through the inverse slit maps.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numba import njit

from .rng import normals

SWALLOW_TOL = 1e-6


@dataclass(frozen=True)
class DrivingFunction:
    """Driver values ``values[k] = lambda(times[k])`` on a strictly increasing grid."""

    times: np.ndarray
    values: np.ndarray
    kind: str = "custom"
    kappa: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ValueError("times and values must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(t) <= 0):
            raise ValueError("driver grid must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @staticmethod
    def _grid(T: float, dt: float) -> np.ndarray:
        if not T > 0 or not dt > 0:
            raise ValueError("T and dt must be positive")
        k = max(1, int(math.ceil(T / dt - 1e-9)))
        return np.linspace(0.0, T, k + 1)

    @classmethod
    def zero(cls, T: float, dt: float) -> "DrivingFunction":
        t = cls._grid(T, dt)
        return cls(t, np.zeros_like(t), "zero")

    @classmethod
    def constant(cls, c: float, T: float, dt: float) -> "DrivingFunction":
        t = cls._grid(T, dt)
        return cls(t, np.full_like(t, float(c)), "constant")

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    def to_csv(self, target) -> None:
        np.savetxt(target, np.column_stack([self.times, self.values]), fmt="%.17g",
                   delimiter=",", header="t,lambda", comments="")


def sample_sle_driver(kappa: float, T: float, dt: float, seed: int, index: int = 0) -> DrivingFunction:
    """``sqrt(kappa)`` times a Brownian path on ``[0, T]``.

    Increments come from the counter-based stream ``(seed, index)`` used by
    the path engine, so driver ``index`` is reproducible on its own.
    """
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    t = DrivingFunction._grid(T, dt)
    k = t.size - 1
    z = normals(seed, index, (k + 1) // 2)[:k]
    lam = np.concatenate([[0.0], np.cumsum(math.sqrt(kappa) * np.sqrt(np.diff(t)) * z)])
    return DrivingFunction(t, lam, "sle", float(kappa))


def sle_endpoint_samples(kappa: float, T: float, dt: float, seed: int, n: int) -> np.ndarray:
    """``lambda(T)`` for drivers ``0 .. n-1``."""
    return np.array([sample_sle_driver(kappa, T, dt, seed, i).values[-1] for i in range(n)])


@dataclass(frozen=True)
class Swallowed:
    """The point hit the singularity ``g = lambda`` at ``time``."""

    time: float
    value: complex


# ---------------------------------------------------------------------------
# vector fields


def chordal_field(g, lam):
    return 2.0 / (g - lam)


def radial_field(g, lam):
    """Disk form ``g (lam + g) / (lam - g)``, ``|lam| = 1``."""
    return g * (lam + g) / (lam - g)


def whole_plane_field(g, lam):
    """Whole-plane form ``-g (lam + g) / (lam - g)``, the negative of the disk field."""
    return -g * (lam + g) / (lam - g)


def _rk4(field, z, T, dt, tol, lam_of, path=None, lost=None):
    t_end = float(T)
    n = max(1, int(math.ceil(t_end / dt - 1e-9)))
    h = t_end / n
    g = complex(z)
    t = 0.0
    for _ in range(n):
        l0, lm, l1 = lam_of(t), lam_of(t + h / 2), lam_of(t + h)
        if abs(g - l0) < tol:
            return Swallowed(t, g)
        k1 = field(g, l0)
        g2 = g + h / 2 * k1
        if abs(g2 - lm) < tol:
            return Swallowed(t + h / 2, g2)
        k2 = field(g2, lm)
        g3 = g + h / 2 * k2
        if abs(g3 - lm) < tol:
            return Swallowed(t + h / 2, g3)
        k3 = field(g3, lm)
        g4 = g + h * k3
        if abs(g4 - l1) < tol:
            return Swallowed(t + h, g4)
        k4 = field(g4, l1)
        g_new = g + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if lost is not None and (lost(g2) or lost(g3) or lost(g4) or lost(g_new)):
            return Swallowed(t + h, g_new)
        g = g_new
        t += h
        if path is not None:
            path.append(g)
    if abs(g - lam_of(t_end)) < tol:
        return Swallowed(t_end, g)
    return g


def chordal_forward(z: complex, driver: DrivingFunction, T: Optional[float] = None, dt: float = 1e-3,
                    swallow_tol: float = SWALLOW_TOL) -> Union[complex, Swallowed]:
    """``g_T(z)`` for ``d g/dt = 2 / (g - lambda(t))``, ``g_0(z) = z``."""
    if complex(z).imag <= 0:
        raise ValueError("z must lie in the upper half-plane")
    T = driver.T if T is None else T
    # an RK4 stage that leaves the half-plane has stepped across the singularity
    return _rk4(chordal_field, z, T, dt, swallow_tol, lambda t: float(driver(t)),
                lost=lambda g: g.imag <= 0.0)


def radial_forward(w: complex, driver: DrivingFunction, T: Optional[float] = None, dt: float = 1e-3,
                   swallow_tol: float = SWALLOW_TOL, path: Optional[list] = None) -> Union[complex, Swallowed]:
    """``g_T(w)`` for the disk equation with boundary driver ``exp(i theta(t))``.

    ``driver.values`` are the angles ``theta``. If ``path`` is a list it
    receives ``g`` after every step.
    """
    if abs(complex(w)) >= 1:
        raise ValueError("w must lie in the unit disk")
    T = driver.T if T is None else T
    return _rk4(radial_field, w, T, dt, swallow_tol,
                lambda t: cmath.exp(1j * float(driver(t))), path)


# ---------------------------------------------------------------------------
# discrete chain


@njit(cache=True)
def _upper_sqrt(x, ref):
    s = np.sqrt(x)
    if s.imag < 0.0:
        s = -s
    elif s.imag == 0.0 and s.real * ref < 0.0:
        s = -s
    return s


@njit(cache=True)
def _tip(lam, dts, k):
    """``phi_1^-1 o ... o phi_k^-1 (lam_k)`` for the chain with slits at ``lam[1:]``."""
    w = complex(lam[k], 2.0 * math.sqrt(dts[k - 1]))
    for j in range(k - 1, 0, -1):
        u = w - lam[j]
        w = lam[j] + _upper_sqrt(u * u - 4.0 * dts[j - 1], u.real)
    return w


@njit(cache=True)
def _forward_chain(lam, dts, k, z):
    """``phi_k o ... o phi_1 (z)``; approximates ``g_{t_k}(z)``."""
    w = z
    for j in range(1, k + 1):
        u = w - lam[j]
        w = lam[j] + _upper_sqrt(u * u + 4.0 * dts[j - 1], u.real)
    return w


@dataclass(frozen=True)
class LoewnerState:
    """Discrete chordal chain for one driver: slit positions and time steps."""

    driver: DrivingFunction
    mode: str = "chordal"

    @property
    def n_steps(self) -> int:
        return self.driver.times.size - 1

    @property
    def dts(self) -> np.ndarray:
        return np.diff(self.driver.times)

    def tip(self, k: Optional[int] = None) -> complex:
        """Trace point ``gamma(t_k)``; ``k = 0`` is ``lambda(0)``."""
        k = self.n_steps if k is None else int(k)
        if k == 0:
            return complex(self.driver.values[0])
        return complex(_tip(self.driver.values, self.dts, k))

    def forward(self, z: complex, k: Optional[int] = None) -> complex:
        """The chain map at step ``k`` applied to ``z``."""
        k = self.n_steps if k is None else int(k)
        return complex(_forward_chain(self.driver.values, self.dts, k, complex(z)))

    def trace(self, stride: int = 1):
        """``(times, points)`` at every ``stride``-th step and at the final step."""
        ks = np.arange(0, self.n_steps + 1, max(1, int(stride)))
        if ks[-1] != self.n_steps:
            ks = np.append(ks, self.n_steps)
        return self.driver.times[ks], np.array([self.tip(k) for k in ks])


def chordal_trace(driver: DrivingFunction, stride: int = 1):
    """Trace points ``gamma(t_k)`` of the chordal evolution; see :class:`LoewnerState`.

    Cost is quadratic in the number of steps when ``stride`` is small.
    """
    return LoewnerState(driver).trace(stride)


def write_trace_csv(target, times, points) -> None:
    pts = np.asarray(points)
    np.savetxt(target, np.column_stack([times, pts.real, pts.imag]), fmt="%.17g",
               delimiter=",", header="t,re,im", comments="")
