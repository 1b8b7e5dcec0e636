"""Closed-form Green's functions, normalized with a ``(1/pi) ln`` singularity.

``G(z, w)`` is the density at ``w`` of the expected occupation time of
Brownian motion started at ``z`` before the stopping time, so
``G(z, w) + (1/pi) ln|w - z|`` stays bounded at the pole.

No whole-plane kind is offered: free planar motion spends infinite
expected time in every open set, so that Green's function is identically
infinite.
"""
from __future__ import annotations

import math
from typing import Callable, Iterable, Tuple

import numpy as np

from .errors import CoincidentPoints, OriginPoint, OutsideDomain, PolePoint

INV_PI = 1.0 / math.pi
KINDS = ("halfplane", "righthalf", "disk", "winding")


def _distinct(z, w):
    if np.any(np.asarray(z) == np.asarray(w)):
        raise CoincidentPoints("Green's function is infinite at the pole")


def green_halfplane(z, w):
    """``(1/pi) ln(|z - conj(w)| / |z - w|)`` on the upper half-plane."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(z.imag <= 0) or np.any(w.imag <= 0):
        raise OutsideDomain("points must lie in the upper half-plane")
    _distinct(z, w)
    out = INV_PI * np.log(np.abs(z - np.conj(w)) / np.abs(z - w))
    return out[()] if out.ndim == 0 else out


def green_right_halfplane(z, w):
    """``(1/pi) ln(|z + conj(w)| / |z - w|)`` on ``{Re z > 0}``."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(z.real <= 0) or np.any(w.real <= 0):
        raise OutsideDomain("points must lie in the right half-plane")
    _distinct(z, w)
    out = INV_PI * np.log(np.abs(z + np.conj(w)) / np.abs(z - w))
    return out[()] if out.ndim == 0 else out


def green_disk(z, w):
    """``(1/pi) ln(|1 - conj(z) w| / |w - z|)`` on the unit disk.

    Transporting the pole to 0 with the automorphism ``(w - z)/(1 - conj(z) w)``
    reduces this to ``(1/pi) ln(1/|w|)``.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(z) >= 1) or np.any(np.abs(w) >= 1):
        raise OutsideDomain("points must lie in the unit disk")
    _distinct(z, w)
    out = INV_PI * (np.log(np.abs(1 - np.conj(z) * w)) - np.log(np.abs(w - z)))
    return out[()] if out.ndim == 0 else out


def disk_to_halfplane(zeta):
    """Conformal map of the unit disk onto the upper half-plane, ``0 -> i``."""
    zeta = np.asarray(zeta, dtype=complex)
    return -1j * (zeta - 1) / (zeta + 1)


def winding_preimages(n: int, w: complex) -> np.ndarray:
    """``4n``-th roots of ``w`` lying in the open right half-plane.

    These are the points ``r^(1/4n) exp(i (theta + 2 pi k)/(4n))`` with
    ``|theta + 2 pi k| < 2 pi n``; roots on the imaginary axis are excluded.
    """
    if n <= 0 or int(n) != n:
        raise ValueError("n must be a positive integer")
    w = complex(w)
    if w == 0:
        raise OriginPoint("the winding Green's function is defined away from 0")
    m = 4 * n
    r, theta = abs(w), math.atan2(w.imag, w.real)
    k = np.arange(-2 * n, 2 * n + 1)
    ang = (theta + 2 * np.pi * k) / m
    keep = np.abs(ang) < np.pi / 2
    return r ** (1.0 / m) * np.exp(1j * ang[keep])


def green_winding(n: int, w: complex) -> float:
    """Green's function from 1 for motion stopped after winding ``n`` times about 0.

    The map ``z -> z^(4n)`` carries the right half-plane onto the slit
    surface on which the winding time is an exit time, so the value is the
    sum of the right half-plane Green's function over the preimages of ``w``.
    """
    if complex(w) == 1:
        raise PolePoint("w = 1 is the pole")
    pre = winding_preimages(n, w)
    return float(np.sum(green_right_halfplane(1.0, pre)))


def green_project(preimages: Callable[[complex], Iterable[Tuple[complex, int]]],
                  g_base: Callable, z: complex, w: complex) -> float:
    """``sum n(f, w') G_base(z, w')`` over the preimages ``w'`` of ``w``.

    ``preimages(w)`` yields ``(w', multiplicity)`` pairs for an analytic map
    ``f`` on the base domain; the result is the Green's function of ``f(B)``
    from ``f(z)``, stopped when ``B`` leaves the base domain.
    """
    return float(sum(m * g_base(z, wp) for wp, m in preimages(w)))


def power_preimages(m: int, sector: float = math.pi) -> Callable:
    """Preimage enumerator for ``f(z) = z^m`` restricted to ``|arg z| < sector``."""

    def pre(w):
        w = complex(w)
        if w == 0:
            return [(0j, m)]
        r, theta = abs(w), math.atan2(w.imag, w.real)
        out = []
        for k in range(-m, m + 1):
            ang = (theta + 2 * math.pi * k) / m
            if -math.pi < ang <= math.pi and abs(ang) < sector:
                out.append((r ** (1.0 / m) * complex(math.cos(ang), math.sin(ang)), 1))
        return out

    return pre


def green(kind: str, z: complex, w: complex, n: int = 1) -> float:
    """Dispatch by kind name; for ``winding`` the pole is fixed at 1 and ``z`` ignored."""
    if kind == "halfplane":
        return float(green_halfplane(z, w))
    if kind == "righthalf":
        return float(green_right_halfplane(z, w))
    if kind == "disk":
        return float(green_disk(z, w))
    if kind == "winding":
        return green_winding(n, w)
    raise ValueError(f"unknown Green's function kind {kind!r}")
