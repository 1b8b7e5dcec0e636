"""Power series in ``z`` and ``conj(z)``, the Poisson kernel, and friends.

A harmonic function on a disk ``D(z0, R)`` is stored as

    h(z) = b_0 + sum_{n>=1} b_{-n} conj(z - z0)^n + sum_{n>=1} b_n (z - z0)^n

with both sums truncated at a finite order. All quadratures on circles use
the uniform trapezoid rule, which is spectrally accurate for smooth periodic
integrands.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InsufficientSamples, NotRealValued, OutsideDisk

KERNEL_FORMS = ("quotient", "cosine", "series", "real-part")


def radius_of_convergence(coeffs) -> float:
    """Estimate ``1 / limsup |a_n|^(1/n)`` from the last half of ``coeffs``.

    ``coeffs[n]`` multiplies ``(z - z0)^n``. The limsup is estimated by the
    maximum of ``|a_n|^(1/n)`` over the tail window, which is exact for
    geometric tails. Tails whose roots decay like a power of ``n`` (entire
    functions, e.g. ``1/n!``) are detected by a least-squares fit of
    ``log |a_n|^(1/n)`` against ``log n`` and reported as ``inf``.
    """
    a = np.abs(np.asarray(coeffs, dtype=complex))
    n_total = len(a)
    lo = max(1, n_total // 2)
    n = np.arange(lo, n_total)
    mag = a[lo:]
    keep = mag > 0
    if not keep.any():
        return math.inf
    n, mag = n[keep], mag[keep]
    roots = np.exp(np.log(mag) / n)
    if len(n) >= 4 and n[-1] > n[0]:
        ln_n = np.log(n.astype(float))
        design = np.column_stack([np.ones_like(ln_n), ln_n, ln_n / n])
        fit, *_ = np.linalg.lstsq(design, np.log(roots), rcond=None)
        if fit[1] < -0.5:
            return math.inf
    return float(1.0 / roots.max())


@dataclass(frozen=True)
class PowerSeries:
    """Truncated series ``sum b_n (z-z0)^n + sum b_{-n} conj(z-z0)^n``.

    ``zcoeffs[n]`` is ``b_n`` for ``n >= 0``; ``conjcoeffs[n-1]`` is
    ``b_{-n}``. ``radius`` overrides the estimated radius of convergence
    (pass ``math.inf`` for polynomials).
    """

    center: complex = 0j
    zcoeffs: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=complex))
    conjcoeffs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    radius: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        z = np.atleast_1d(np.asarray(self.zcoeffs, dtype=complex)).copy()
        if len(z) == 0:
            z = np.zeros(1, dtype=complex)
        object.__setattr__(self, "zcoeffs", z)
        object.__setattr__(self, "conjcoeffs", np.atleast_1d(np.asarray(self.conjcoeffs, dtype=complex)).copy())

    @property
    def order(self) -> int:
        return max(len(self.zcoeffs) - 1, len(self.conjcoeffs))

    def coeff(self, n: int) -> complex:
        """``b_n`` for any integer ``n`` (zero beyond the truncation)."""
        if n >= 0:
            return complex(self.zcoeffs[n]) if n < len(self.zcoeffs) else 0j
        return complex(self.conjcoeffs[-n - 1]) if -n <= len(self.conjcoeffs) else 0j

    def estimated_radius(self) -> float:
        if self.radius is not None:
            return self.radius
        r_z = radius_of_convergence(self.zcoeffs)
        r_c = radius_of_convergence(np.concatenate([[0], self.conjcoeffs]))
        return min(r_z, r_c)

    def is_analytic(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.conjcoeffs) <= tol))

    def is_real_valued(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.zcoeffs))),
                    float(np.max(np.abs(self.conjcoeffs), initial=0.0)))
        if abs(self.zcoeffs[0].imag) > tol * scale:
            return False
        for n in range(1, self.order + 1):
            if abs(self.coeff(-n) - self.coeff(n).conjugate()) > tol * scale:
                return False
        return True

    def __call__(self, z):
        return eval_series(self, z)


def _horner(coeffs: np.ndarray, w):
    acc = np.zeros_like(w, dtype=complex) + coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * w + c
    return acc


def eval_series(series: PowerSeries, z):
    """Evaluate both parts by Horner's rule; scalar or array ``z``."""
    z = np.asarray(z, dtype=complex)
    w = z - series.center
    rad = series.estimated_radius()
    if np.any(np.abs(w) >= rad):
        raise OutsideDisk(f"|z - center| reaches the estimated radius {rad:g}")
    out = _horner(series.zcoeffs, w)
    if len(series.conjcoeffs):
        # conj part has no constant term: w̄ * (b_{-1} + b_{-2} w̄ + ...)
        out = out + np.conj(w) * _horner(series.conjcoeffs, np.conj(w))
    return out[()] if out.ndim == 0 else out


def derivative_z(series: PowerSeries) -> PowerSeries:
    """d/dz acts on the z-part only."""
    n = np.arange(1, len(series.zcoeffs))
    dz = n * series.zcoeffs[1:] if len(n) else np.zeros(1, dtype=complex)
    return PowerSeries(series.center, dz, np.zeros(0, dtype=complex), series.radius)


def derivative_zbar(series: PowerSeries) -> PowerSeries:
    """d/dz̄ acts on the conj-part only; the result is a series in conj(z - z0)."""
    n = np.arange(1, len(series.conjcoeffs) + 1)
    if len(n) == 0:
        return PowerSeries(series.center, np.zeros(1, dtype=complex), np.zeros(0, dtype=complex), series.radius)
    d = n * series.conjcoeffs
    return PowerSeries(series.center, d[:1], d[1:], series.radius)


def boundary_coefficients(samples, r: float, n_max: int, center: complex = 0j) -> PowerSeries:
    """Series coefficients from ``M`` uniform samples of ``h(center + r e^{it})``.

    ``b_n = (1 / (2 pi r^|n|)) * integral h e^{-int} dt`` by the trapezoid
    rule, i.e. a scaled DFT.
    """
    h = np.asarray(samples, dtype=complex)
    m = len(h)
    if m < 4 * n_max or n_max < 0:
        raise InsufficientSamples(f"need at least {4 * n_max} samples, got {m}")
    dft = np.fft.fft(h) / m
    n = np.arange(1, n_max + 1)
    scale = float(r) ** n
    zc = np.concatenate([[dft[0]], dft[n] / scale])
    cc = dft[m - n] / scale
    return PowerSeries(center, zc, cc)


def harmonic_conjugate(series: PowerSeries, c0: float = 0.0) -> PowerSeries:
    """Real harmonic conjugate: ``a_{-n} = i b_{-n}``, ``a_n = -i b_n``, ``a_0 = c0``."""
    if not series.is_real_valued():
        raise NotRealValued("harmonic conjugate needs a real-valued series")
    zc = -1j * series.zcoeffs
    zc[0] = c0
    return PowerSeries(series.center, zc, 1j * series.conjcoeffs, series.radius)


# ---------------------------------------------------------------------------
# Poisson kernel


def _series_terms(r: float, tol: float = 1e-17) -> int:
    if r == 0:
        return 1
    return int(math.ceil(math.log(tol * (1 - r)) / math.log(r))) + 1


def poisson_kernel(r, theta, form: str = "quotient", n_terms: Optional[int] = None):
    """``P_r(theta)`` evaluated by one of the four equivalent formulas.

    ``form`` is one of ``quotient``, ``cosine``, ``series``, ``real-part``.
    The series form sums ``|n| <= n_terms`` (default: enough terms for the
    tail to drop below double precision).
    """
    if form not in KERNEL_FORMS:
        raise ValueError(f"unknown kernel form {form!r}")
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(r < 0) or np.any(r >= 1):
        raise ValueError("poisson_kernel needs 0 <= r < 1")
    # 1 - r^2 as (1-r)(1+r): 1 - r is exact for r in [1/2, 1)
    one_minus_r2 = (1 - r) * (1 + r)
    if form == "quotient":
        out = one_minus_r2 / np.abs(1 - r * np.exp(-1j * theta)) ** 2
    elif form == "cosine":
        # 1 - 2r cos θ + r² written as (1-r)² + 4r sin²(θ/2) to avoid cancellation
        out = one_minus_r2 / ((1 - r) ** 2 + 4 * r * np.sin(theta / 2) ** 2)
    elif form == "real-part":
        q = r * np.exp(1j * theta)
        out = ((1 + q) / (1 - q)).real
    else:
        r_b, th_b = np.broadcast_arrays(r, theta)
        out = np.empty(r_b.shape)
        for idx in np.ndindex(r_b.shape):
            rr, tt = float(r_b[idx]), float(th_b[idx])
            n_max = n_terms if n_terms is not None else _series_terms(rr)
            n = np.arange(1, n_max + 1)
            out[idx] = 1.0 + 2.0 * math.fsum(rr**n * np.cos(n * tt))
    return out[()] if np.ndim(out) == 0 else out


def poisson_integral(boundary: Callable, a: complex, m: int = 1024) -> float:
    """``(1/2pi) * integral h(e^{it}) P_r(theta - t) dt`` for ``a = r e^{i theta}``.

    Trapezoid rule on ``m`` nodes; ``boundary`` takes an array of angles.
    """
    a = complex(a)
    if abs(a) >= 1:
        raise ValueError("poisson_integral needs |a| < 1")
    t = 2 * np.pi * np.arange(m) / m
    r, theta = abs(a), math.atan2(a.imag, a.real)
    h = np.asarray(boundary(t), dtype=float)
    return float(np.mean(h * poisson_kernel(r, theta - t)))


# ---------------------------------------------------------------------------
# Parseval and exit times


def parseval_mean_square(series: PowerSeries, r: float) -> float:
    """``sum |a_n|^2 r^(2n)`` for an analytic series."""
    if not series.is_analytic():
        raise ValueError("Parseval sum needs an analytic series")
    a = np.abs(series.zcoeffs) ** 2
    n = np.arange(len(a))
    return float(math.fsum(a * float(r) ** (2 * n)))


def circle_mean_square(f: Callable, center: complex, r: float, m: int = 4096) -> float:
    """Trapezoid estimate of ``(1/2pi) * integral |f(center + r e^{it})|^2 dt``."""
    t = 2 * np.pi * np.arange(m) / m
    vals = np.asarray(f(center + r * np.exp(1j * t)))
    return float(np.mean(np.abs(vals) ** 2))


def exit_time_from_series(coeffs, n_terms: Optional[int] = None) -> float:
    """``(1/2) sum_{n=1}^{N} |a_n|^2`` where ``coeffs = [a_1, a_2, ...]``.

    Expected exit time from ``f(0)`` of the image of the unit disk under the
    conformal map ``f(z) = f(0) + sum a_n z^n``.
    """
    a = np.asarray(coeffs, dtype=complex)
    if n_terms is not None:
        a = a[:n_terms]
    sq = np.abs(a) ** 2
    # add smallest terms first
    return 0.5 * math.fsum(sq[::-1])


def arctan_coeffs(n_terms: int) -> np.ndarray:
    """``[a_1, ..., a_N]`` of ``arctan z``: ``a_{2k-1} = (-1)^(k+1)/(2k-1)``."""
    a = np.zeros(n_terms)
    odd = np.arange(1, n_terms + 1, 2)
    a[odd - 1] = (-1.0) ** ((odd - 1) // 2) / odd
    return a


# ---------------------------------------------------------------------------
# Wirtinger derivatives


def wirtinger_fd(f: Callable, z: complex, h: float = 1e-5):
    """Central-difference Wirtinger derivatives ``(df/dz, df/dz̄)``."""
    z = complex(z)
    fx = (f(z + h) - f(z - h)) / (2 * h)
    fy = (f(z + 1j * h) - f(z - 1j * h)) / (2 * h)
    return complex(0.5 * (fx - 1j * fy)), complex(0.5 * (fx + 1j * fy))


def wirtinger_laplacian(f: Callable, z: complex, h: float = 1e-3) -> complex:
    """``4 d²f/(dz dz̄)`` by nesting the central differences."""
    return 4 * wirtinger_fd(lambda w: wirtinger_fd(f, w, h)[1], z, h)[0]


# ---------------------------------------------------------------------------
# reference series


def log_modulus_series(n_terms: int, center: complex = 1.0) -> PowerSeries:
    """``ln|z|`` about 1: ``b_n = b_{-n} = (-1)^(n-1) / (2n)``."""
    n = np.arange(1, n_terms + 1)
    b = (-1.0) ** (n - 1) / (2 * n)
    return PowerSeries(center, np.concatenate([[0], b]), b)


def arg_series(n_terms: int, center: complex = 1.0) -> PowerSeries:
    """Principal ``Arg z`` about 1: ``b_n = -i (-1)^(n-1) / (2n)``, ``b_{-n} = conj(b_n)``."""
    n = np.arange(1, n_terms + 1)
    b = -1j * (-1.0) ** (n - 1) / (2 * n)
    return PowerSeries(center, np.concatenate([[0], b]), np.conj(b))
