"""Planar domains: membership, boundary distance, closed-form reference functions.

Each concrete domain maps onto a compiled ``(kind, params)`` pair shared
with the simulation kernel, so the geometry used by the Monte Carlo engine
is exactly the geometry tested here.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numba import njit

from . import _kernels as K
from .errors import (
    InvalidExponents,
    OutsideDomain,
    StencilOutsideDomain,
    UnsupportedVariant,
)

OMEGA = complex(-0.5, math.sqrt(3.0) / 2.0)


@njit(cache=True)
def _contains_many(kind, p, zs):
    out = np.empty(zs.shape[0], dtype=np.bool_)
    for i in range(zs.shape[0]):
        out[i] = K.contains(kind, p, zs[i])
    return out


@njit(cache=True)
def _dist_many(kind, p, zs):
    out = np.empty(zs.shape[0])
    for i in range(zs.shape[0]):
        out[i] = K.dist(kind, p, zs[i])
    return out


@njit(cache=True)
def _project_many(kind, p, zs):
    out = np.empty(zs.shape[0], dtype=np.complex128)
    for i in range(zs.shape[0]):
        out[i] = K.project(kind, p, zs[i])
    return out


def _apply(fn, domain, z):
    arr = np.atleast_1d(np.asarray(z, dtype=np.complex128)).ravel()
    out = fn(domain.kind, domain.params, arr)
    if np.ndim(z) == 0:
        return out[0].item()
    return out.reshape(np.shape(z))


class Domain:
    """Base class; subclasses set ``kind`` and build ``params``."""

    kind: int = K.PLANE
    bounded: bool = False

    @property
    def params(self) -> np.ndarray:
        return np.zeros(4)

    @property
    def basepoint(self) -> complex:
        return 0j

    @property
    def length_scale(self) -> float:
        """Diameter for bounded domains, a natural width otherwise."""
        return 1.0

    @property
    def label(self) -> str:
        raise NotImplementedError

    def contains(self, z):
        return _apply(_contains_many, self, z)

    def dist_to_boundary(self, z):
        inside = np.asarray(self.contains(z))
        if not np.all(inside):
            raise OutsideDomain(f"{self.label}: point outside domain")
        return _apply(_dist_many, self, z)

    def nearest_boundary(self, z):
        return _apply(_project_many, self, z)

    def boundary_samples(self, n: int) -> np.ndarray:
        """Points on the boundary (a bounded window of it when unbounded)."""
        raise UnsupportedVariant(f"{type(self).__name__} has no boundary sampler")

    def closed_form_harmonic(self, z):
        raise UnsupportedVariant(f"no closed-form harmonic measure for {type(self).__name__}")

    def torsion(self, z):
        raise UnsupportedVariant(f"no closed-form torsion function for {type(self).__name__}")


@dataclass(frozen=True)
class Disk(Domain):
    center: complex = 0j
    radius: float = 1.0

    kind = K.DISK
    bounded = True

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def params(self):
        return np.array([self.center.real, self.center.imag, self.radius, 0.0])

    @property
    def basepoint(self):
        return self.center

    @property
    def length_scale(self):
        return 2 * self.radius

    @property
    def label(self):
        return f"disk:{self.center.real:.17g},{self.center.imag:.17g},{self.radius:.17g}"

    def boundary_samples(self, n):
        return self.center + self.radius * np.exp(2j * np.pi * np.arange(n) / n)

    def torsion(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.radius**2 - np.abs(z - self.center) ** 2) / 2


@dataclass(frozen=True)
class Annulus(Domain):
    """``{inner < |z| < outer}``."""

    inner: float = 1.0
    outer: float = 2.0

    kind = K.ANNULUS
    bounded = True

    def __post_init__(self):
        if not 0 < self.inner < self.outer:
            raise ValueError("annulus needs 0 < r < R")

    @property
    def params(self):
        return np.array([self.inner, self.outer, 0.0, 0.0])

    @property
    def basepoint(self):
        return complex(math.sqrt(self.inner * self.outer))

    @property
    def length_scale(self):
        return 2 * self.outer

    @property
    def label(self):
        return f"annulus:{self.inner:.17g},{self.outer:.17g}"

    def boundary_samples(self, n):
        t = np.exp(2j * np.pi * np.arange(n // 2) / (n // 2))
        return np.concatenate([self.inner * t, self.outer * t])

    def closed_form_harmonic(self, z):
        """Probability of leaving through the inner circle."""
        r = np.abs(np.asarray(z, dtype=complex))
        return (math.log(self.outer) - np.log(r)) / (math.log(self.outer) - math.log(self.inner))


@dataclass(frozen=True)
class HalfPlane(Domain):
    """``{Im z > level}``; the default is the upper half-plane."""

    level: float = 0.0

    kind = K.HALFPLANE

    @property
    def params(self):
        return np.array([self.level, 0.0, 0.0, 0.0])

    @property
    def basepoint(self):
        return complex(0.0, self.level + 1.0)

    @property
    def label(self):
        return "halfplane" if self.level == 0 else f"halfplane:{self.level:.17g}"

    def boundary_samples(self, n, half_width: float = 10.0):
        return np.linspace(-half_width, half_width, n) + 1j * self.level


@dataclass(frozen=True)
class RightHalfPlane(Domain):
    kind = K.RIGHTHALF

    @property
    def basepoint(self):
        return 1 + 0j

    @property
    def label(self):
        return "righthalf"

    def boundary_samples(self, n, half_width: float = 10.0):
        return 1j * np.linspace(-half_width, half_width, n)


@dataclass(frozen=True)
class Strip(Domain):
    """Vertical strip ``{a < Re z < b}``."""

    a: float = -math.pi / 4
    b: float = math.pi / 4

    kind = K.STRIP

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("strip needs a < b")

    @property
    def params(self):
        return np.array([self.a, self.b, 0.0, 0.0])

    @property
    def basepoint(self):
        return complex(0.5 * (self.a + self.b))

    @property
    def length_scale(self):
        return self.b - self.a

    @property
    def label(self):
        return f"strip:{self.a:.17g},{self.b:.17g}"

    def boundary_samples(self, n, half_height: float = 10.0):
        y = np.linspace(-half_height, half_height, n // 2)
        return np.concatenate([self.a + 1j * y, self.b + 1j * y])

    def closed_form_harmonic(self, z):
        """Probability of leaving through the left line ``Re z = a``."""
        x = np.real(np.asarray(z, dtype=complex))
        return (self.b - x) / (self.b - self.a)

    def torsion(self, z):
        x = np.real(np.asarray(z, dtype=complex))
        return (x - self.a) * (self.b - x)


@dataclass(frozen=True)
class Wedge(Domain):
    """``{theta1 < arg z < theta2}`` with apex at the origin."""

    theta1: float = 0.0
    theta2: float = math.pi / 2

    kind = K.WEDGE

    def __post_init__(self):
        if not 0 < self.theta2 - self.theta1 < 2 * math.pi:
            raise ValueError("wedge needs 0 < theta2 - theta1 < 2 pi")

    @property
    def params(self):
        return np.array([self.theta1, self.theta2, 0.0, 0.0])

    @property
    def basepoint(self):
        return complex(math.cos(self.bisector), math.sin(self.bisector))

    @property
    def bisector(self) -> float:
        return 0.5 * (self.theta1 + self.theta2)

    @property
    def label(self):
        return f"wedge:{self.theta1:.17g},{self.theta2:.17g}"

    def boundary_samples(self, n, length: float = 10.0):
        r = np.linspace(0, length, n // 2)
        return np.concatenate([r * np.exp(1j * self.theta1), r * np.exp(1j * self.theta2)])

    def relative_angle(self, z):
        ang = np.angle(np.asarray(z, dtype=complex))
        return np.mod(ang - self.theta1, 2 * math.pi)

    def closed_form_harmonic(self, z):
        """Probability of leaving through the ray at ``theta1``; linear in the angle."""
        return 1.0 - self.relative_angle(z) / (self.theta2 - self.theta1)


@dataclass(frozen=True)
class EquilateralTriangle(Domain):
    """Triangle with vertices ``1, omega, omega^2``."""

    kind = K.TRIANGLE
    bounded = True

    @property
    def length_scale(self):
        return math.sqrt(3.0)

    @property
    def label(self):
        return "triangle"

    @property
    def vertices(self):
        return np.array([1.0, OMEGA, OMEGA**2])

    def boundary_samples(self, n):
        v = self.vertices
        m = n // 3
        s = np.arange(m) / m
        return np.concatenate([v[k] + s * (v[(k + 1) % 3] - v[k]) for k in range(3)])

    def torsion(self, z):
        a = np.asarray(z, dtype=complex)
        ab = np.conj(a)
        w, wb = OMEGA, OMEGA.conjugate()
        val = (a + ab + 1) * (w * a + wb * ab + 1) * (w**2 * a + wb**2 * ab + 1) / 6
        return np.real(val)


@dataclass(frozen=True)
class Cardioid(Domain):
    """Image of the unit disk under ``(1 + w)^2``; polar boundary ``r = 2(1 + cos t)``.

    Membership is the polar test about the cusp. The boundary distance is the
    Koebe lower bound ``|f'(w)|(1 - |w|^2)/4`` in the bulk and the exact
    nearest-point distance (local Newton search on the boundary curve) once
    that bound falls below 0.05, clipped to the Koebe bracket ``[lo, 4 lo]``.
    """

    kind = K.CARDIOID
    bounded = True

    @property
    def basepoint(self):
        return 1 + 0j

    @property
    def length_scale(self):
        return 4.0

    @property
    def label(self):
        return "cardioid"

    @staticmethod
    def from_disk(w):
        return (1 + np.asarray(w, dtype=complex)) ** 2

    @staticmethod
    def from_disk_derivative(w):
        return 2 * (1 + np.asarray(w, dtype=complex))

    @staticmethod
    def to_disk(z):
        return np.sqrt(np.asarray(z, dtype=complex)) - 1

    def boundary_samples(self, n):
        t = -np.pi + 2 * np.pi * (np.arange(n) + 0.5) / n
        return (1 + np.exp(1j * t)) ** 2

    def as_conformal_image(self) -> "ConformalImage":
        return ConformalImage(Disk(), self.from_disk, self.from_disk_derivative, self.to_disk)


@dataclass(frozen=True)
class Plane(Domain):
    """The whole plane; used for free motion stopped by winding or a horizon."""

    kind = K.PLANE

    @property
    def label(self):
        return "plane"


@dataclass(frozen=True)
class ConformalImage(Domain):
    """``f(base)`` for a conformal ``f``; distances use the Koebe quarter bound."""

    base: Domain = field(default_factory=Disk)
    f: Callable = None
    fprime: Callable = None
    finv: Optional[Callable] = None

    @property
    def basepoint(self):
        return complex(self.f(self.base.basepoint))

    @property
    def label(self):
        return f"image({self.base.label})"

    def _pull(self, z):
        if self.finv is None:
            raise UnsupportedVariant("membership in a conformal image needs the inverse map")
        return self.finv(z)

    def contains(self, z):
        return self.base.contains(self._pull(z))

    def dist_to_boundary(self, z):
        w = self._pull(z)
        return np.abs(self.fprime(w)) * self.base.dist_to_boundary(w) / 4

    def nearest_boundary(self, z):
        raise UnsupportedVariant("nearest boundary point is not available for conformal images")

    def boundary_samples(self, n):
        return self.f(self.base.boundary_samples(n))


# ---------------------------------------------------------------------------
# module-level operations


def contains(domain: Domain, z):
    return domain.contains(z)


def dist_to_boundary(domain: Domain, z):
    return domain.dist_to_boundary(z)


def closed_form_harmonic(domain: Domain, z):
    """Closed-form exit probabilities for the annulus, wedge and strip."""
    if not isinstance(domain, (Annulus, Wedge, Strip)):
        raise UnsupportedVariant(f"no closed-form harmonic measure for {type(domain).__name__}")
    if not np.all(domain.contains(z)):
        raise OutsideDomain("closed_form_harmonic needs interior points")
    return domain.closed_form_harmonic(z)


def torsion_function(domain: Domain, z):
    """Expected exit time ``E_z[T]`` for the disk, triangle and strip."""
    if not isinstance(domain, (Disk, EquilateralTriangle, Strip)):
        raise UnsupportedVariant(f"no closed-form torsion function for {type(domain).__name__}")
    if not np.all(domain.contains(z)):
        raise OutsideDomain("torsion_function needs interior points")
    return domain.torsion(z)


def fd_laplacian(f: Callable, z: complex, h: float = 1e-3, domain: Optional[Domain] = None) -> float:
    """Five-point Laplacian ``(f(z+h) + f(z-h) + f(z+ih) + f(z-ih) - 4 f(z)) / h^2``."""
    z = complex(z)
    stencil = [z + h, z - h, z + 1j * h, z - 1j * h]
    if domain is not None and not all(domain.contains(w) for w in stencil + [z]):
        raise StencilOutsideDomain(f"stencil of width {h:g} at {z} leaves {domain.label}")
    vals = [f(w) for w in stencil]
    return float(np.real(sum(vals) - 4 * f(z))) / (h * h)


# ---------------------------------------------------------------------------
# Schwarz-Christoffel forward map

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _graded_gauss(g: Callable, n_levels: int = 14, ratio: float = 0.3) -> complex:
    """Integrate ``g`` over [0, 1] on a mesh graded geometrically toward 0."""
    edges = np.concatenate([[0.0], ratio ** np.arange(n_levels, -1, -1)])
    total = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        x = 0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)
        total += 0.5 * (hi - lo) * np.sum(_GL_W * g(x))
    return total


def _sc_segment(integrand: Callable, p0: complex, p1: complex, alpha0: Optional[float], alpha1: Optional[float]) -> complex:
    """``integral integrand(zeta) dzeta`` along p0 -> p1.

    ``alpha0``/``alpha1`` are the corner exponents when an endpoint is a
    prevertex; near such an end ``s = v^(1/alpha)`` removes the algebraic
    singularity of order ``alpha - 1``.
    """
    d = p1 - p0

    def half(at_start: bool, alpha: Optional[float]):
        a = alpha if alpha is not None and alpha < 1 else 1.0

        def g(v):
            u = 0.5 * v ** (1.0 / a)
            du = 0.5 * (1.0 / a) * v ** (1.0 / a - 1.0)
            # offset from the nearer end so the prevertex is never hit by rounding
            zeta = p0 + u * d if at_start else p1 - u * d
            return integrand(zeta) * du

        return _graded_gauss(g)

    return d * (half(True, alpha0) + half(False, alpha1))


def sc_forward_map(prevertices: Sequence[float], exponents: Sequence[float], C: complex, A: complex, z: complex) -> complex:
    """``A + C * integral_{z_1}^{z} prod_j (zeta - z_j)^(alpha_j - 1) dzeta``.

    Principal branches; the integral starts at the first prevertex and runs
    up the vertical line ``z_1 + i s`` to ``z_1 + iL`` and then straight to
    ``z``, so only path endpoints can touch the real axis.
    """
    zj = np.asarray(prevertices, dtype=float)
    alpha = np.asarray(exponents, dtype=float)
    if len(zj) != len(alpha) or len(zj) == 0:
        raise ValueError("prevertices and exponents must be nonempty and of equal length")
    if np.any(alpha <= 0) or np.any(alpha > 2):
        raise InvalidExponents("corner exponents must lie in (0, 2]")
    if np.any(np.diff(zj) <= 0):
        raise ValueError("prevertices must be strictly increasing")
    z = complex(z)
    end_alpha = None
    if z.imag <= 0:
        hit = np.nonzero(np.abs(zj - z.real) == 0)[0]
        if z.imag < 0 or len(hit) == 0:
            raise ValueError("z must lie in the upper half-plane or be a prevertex")
        end_alpha = float(alpha[hit[0]])
        if hit[0] == 0:
            return complex(A)

    def integrand(zeta):
        out = np.ones_like(zeta, dtype=complex)
        for zk, ak in zip(zj, alpha):
            out = out * (zeta - zk) ** (ak - 1)
        return out

    span = float(zj[-1] - zj[0]) if len(zj) > 1 else 1.0
    lift = max(1.0, span, z.imag)
    corner = complex(zj[0], lift)
    total = _sc_segment(integrand, complex(zj[0]), corner, float(alpha[0]), None)
    total += _sc_segment(integrand, corner, z, None, end_alpha)
    return complex(A) + complex(C) * total


# ---------------------------------------------------------------------------
# mini-language


class DomainParseError(ValueError):
    pass


_PI_RE = re.compile(r"^([+-]?\d*\.?\d*)\*?pi(?:/(\d+(?:\.\d*)?))?$")


def _number(token: str) -> float:
    token = token.strip()
    try:
        return float(token)
    except ValueError:
        pass
    m = _PI_RE.match(token)
    if not m:
        raise DomainParseError(f"cannot parse number {token!r}")
    coef = m.group(1)
    if coef in ("", "+"):
        k = 1.0
    elif coef == "-":
        k = -1.0
    else:
        k = float(coef)
    den = float(m.group(2)) if m.group(2) else 1.0
    return k * math.pi / den


def parse_domain(text: str) -> Domain:
    """Parse ``disk:cx,cy,r``, ``annulus:r,R``, ``halfplane``, ``righthalf``,
    ``strip:a,b``, ``wedge:t1,t2``, ``triangle`` or ``cardioid``.

    Numbers may be written as multiples of ``pi`` (``-pi/4``).
    """
    tag, _, rest = text.partition(":")
    args = [a for a in rest.split(",")] if rest else []
    arity = {"disk": 3, "annulus": 2, "halfplane": 0, "righthalf": 0,
             "strip": 2, "wedge": 2, "triangle": 0, "cardioid": 0}
    if tag not in arity:
        raise DomainParseError(f"unknown domain tag {tag!r}")
    if len(args) != arity[tag]:
        raise DomainParseError(f"domain {tag!r} takes {arity[tag]} parameters, got {len(args)} in {text!r}")
    vals = [_number(a) for a in args]
    try:
        if tag == "disk":
            if not vals[2] > 0:
                raise DomainParseError("radius must be positive")
            return Disk(complex(vals[0], vals[1]), vals[2])
        if tag == "annulus":
            return Annulus(*vals)
        if tag == "halfplane":
            return HalfPlane()
        if tag == "righthalf":
            return RightHalfPlane()
        if tag == "strip":
            return Strip(*vals)
        if tag == "wedge":
            return Wedge(*vals)
        if tag == "triangle":
            return EquilateralTriangle()
        return Cardioid()
    except DomainParseError:
        raise
    except ValueError as exc:
        raise DomainParseError(f"{text!r}: {exc}") from None
