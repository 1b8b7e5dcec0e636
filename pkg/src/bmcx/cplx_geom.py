"""Riemann-sphere geometry: stereographic projection, Möbius maps, circles.

Points of the extended plane are plain Python numbers (anything accepted by
``complex``) or the singleton :data:`INF`. Möbius arithmetic branches on the
pole and on ``INF`` explicitly instead of relying on overflow.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegenerateTriple, Indeterminate, OutOfDisk


class _Infinity:
    """The point at infinity of the Riemann sphere."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("bmcx.INF")

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()
ExtendedComplex = Union[complex, _Infinity]


def is_inf(z) -> bool:
    return z is INF


def _finite(z) -> complex:
    return complex(z)


def ext_equal(z, w) -> bool:
    """Exact equality on the extended plane."""
    if is_inf(z) or is_inf(w):
        return is_inf(z) and is_inf(w)
    return complex(z) == complex(w)


# ---------------------------------------------------------------------------
# stereographic projection


@dataclass(frozen=True)
class SpherePoint:
    """A point on the unit sphere in R^3."""

    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        norm = math.sqrt(self.x1**2 + self.x2**2 + self.x3**2)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"point ({self.x1}, {self.x2}, {self.x3}) is not on the unit sphere")

    @classmethod
    def from_vector(cls, v) -> "SpherePoint":
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3])


def stereo_project(p: SpherePoint) -> ExtendedComplex:
    """Project from the north pole onto the plane ``x3 = 0``."""
    if p.x3 == 1.0:
        return INF
    s = 1.0 - p.x3
    return complex(p.x1 / s, p.x2 / s)


def stereo_lift(z: ExtendedComplex) -> SpherePoint:
    """Inverse of :func:`stereo_project`."""
    if is_inf(z):
        return SpherePoint(0.0, 0.0, 1.0)
    z = complex(z)
    x, y = z.real, z.imag
    q = x * x + y * y
    v = np.array([2 * x, 2 * y, q - 1.0]) / (q + 1.0)
    # renormalize away rounding so the unit-norm invariant holds exactly enough
    return SpherePoint.from_vector(v)


# ---------------------------------------------------------------------------
# Möbius transformations


@dataclass(frozen=True)
class MobiusTransform:
    """``z -> (a z + b) / (c z + d)`` with ``ad - bc != 0``.

    Coefficients are stored unnormalized; use :meth:`equivalent` for
    projective comparison.
    """

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, complex(getattr(self, name)))
        scale = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))
        if scale == 0 or abs(self.det) <= 1e-14 * scale * scale:
            raise ValueError("degenerate Möbius transformation (ad - bc = 0)")

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @classmethod
    def from_matrix(cls, m) -> "MobiusTransform":
        return cls(m[0][0], m[0][1], m[1][0], m[1][1])

    @classmethod
    def identity(cls) -> "MobiusTransform":
        return cls(1, 0, 0, 1)

    def pole(self) -> ExtendedComplex:
        """Preimage of infinity."""
        return INF if self.c == 0 else -self.d / self.c

    def __call__(self, z: ExtendedComplex) -> ExtendedComplex:
        return mobius_apply(self, z)

    def __matmul__(self, other: "MobiusTransform") -> "MobiusTransform":
        return mobius_compose(self, other)

    def inverse(self) -> "MobiusTransform":
        return mobius_inverse(self)

    def equivalent(self, other: "MobiusTransform", tol: float = 1e-10) -> bool:
        """True when both matrices agree up to a nonzero scalar."""
        p = self.matrix.ravel()
        q = other.matrix.ravel()
        k = int(np.argmax(np.abs(p)))
        if q[k] == 0:
            return False
        lam = p[k] / q[k]
        return bool(np.max(np.abs(p - lam * q)) <= tol * np.max(np.abs(p)))


def mobius_apply(m: MobiusTransform, z: ExtendedComplex) -> ExtendedComplex:
    if is_inf(z):
        return INF if m.c == 0 else m.a / m.c
    z = complex(z)
    den = m.c * z + m.d
    if den == 0:
        return INF
    return (m.a * z + m.b) / den


def mobius_compose(m1: MobiusTransform, m2: MobiusTransform) -> MobiusTransform:
    """``m1 ∘ m2``; its matrix is the matrix product ``M1 @ M2``."""
    return MobiusTransform.from_matrix(m1.matrix @ m2.matrix)


def mobius_inverse(m: MobiusTransform) -> MobiusTransform:
    return MobiusTransform(m.d, -m.b, -m.c, m.a)


def _to_zero_one_inf(p, q, r) -> MobiusTransform:
    """The map sending p -> 0, q -> 1, r -> INF."""
    if is_inf(p):
        q, r = complex(q), complex(r)
        return MobiusTransform(0, q - r, 1, -r)
    if is_inf(q):
        p, r = complex(p), complex(r)
        return MobiusTransform(1, -p, 1, -r)
    if is_inf(r):
        p, q = complex(p), complex(q)
        return MobiusTransform(1, -p, 0, q - p)
    p, q, r = complex(p), complex(q), complex(r)
    return MobiusTransform(q - r, -p * (q - r), q - p, -r * (q - p))


def _distinct(pts, tol=1e-14) -> bool:
    for i in range(3):
        for j in range(i + 1, 3):
            u, v = pts[i], pts[j]
            if is_inf(u) or is_inf(v):
                if is_inf(u) and is_inf(v):
                    return False
                continue
            u, v = complex(u), complex(v)
            if abs(u - v) <= tol * max(1.0, abs(u), abs(v)):
                return False
    return True


def mobius_three_point(src, dst) -> MobiusTransform:
    """Unique Möbius map with ``src[k] -> dst[k]`` for k = 0, 1, 2."""
    src, dst = tuple(src), tuple(dst)
    if len(src) != 3 or len(dst) != 3:
        raise ValueError("need exactly three source and three target points")
    if not _distinct(src) or not _distinct(dst):
        raise DegenerateTriple("three-point data must be pairwise distinct")
    phi = _to_zero_one_inf(*src)
    chi = _to_zero_one_inf(*dst)
    return mobius_compose(mobius_inverse(chi), phi)


def cross_ratio(z1, z2, z3, z4) -> ExtendedComplex:
    """``(z1 - z3)(z2 - z4) / ((z2 - z3)(z1 - z4))`` with limits at INF."""
    pts = (z1, z2, z3, z4)
    for i in range(4):
        for j in range(i + 1, 4):
            for k in range(j + 1, 4):
                if ext_equal(pts[i], pts[j]) and ext_equal(pts[j], pts[k]):
                    raise Indeterminate("cross ratio undefined when three points coincide")
    if is_inf(z1):
        num, den = _finite(z2) - _finite(z4), _finite(z2) - _finite(z3)
    elif is_inf(z2):
        num, den = _finite(z1) - _finite(z3), _finite(z1) - _finite(z4)
    elif is_inf(z3):
        num, den = _finite(z2) - _finite(z4), _finite(z1) - _finite(z4)
    elif is_inf(z4):
        num, den = _finite(z1) - _finite(z3), _finite(z2) - _finite(z3)
    else:
        z1, z2, z3, z4 = map(complex, pts)
        num = (z1 - z3) * (z2 - z4)
        den = (z2 - z3) * (z1 - z4)
    if den == 0:
        return INF
    return num / den


def disk_automorphism(a: complex) -> MobiusTransform:
    """``psi_a(z) = (z - a) / (1 - conj(a) z)``, sending ``a`` to 0."""
    a = complex(a)
    if abs(a) >= 1:
        raise OutOfDisk(f"|a| = {abs(a)} must be < 1")
    return MobiusTransform(1, -a, -a.conjugate(), 1)


# ---------------------------------------------------------------------------
# generalized circles


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def witnesses(self):
        return [self.center + self.radius * cmath.exp(2j * math.pi * k / 3) for k in range(3)]

    def distance(self, z: complex) -> float:
        return abs(abs(complex(z) - self.center) - self.radius)


@dataclass(frozen=True)
class Line:
    """Line through ``point`` along unit ``direction``.

    Stored canonically: ``point`` is the foot of the perpendicular from the
    origin and ``direction`` has argument in [0, pi).
    """

    point: complex
    direction: complex

    def __post_init__(self):
        d = complex(self.direction)
        if abs(abs(d) - 1.0) > 1e-12:
            raise ValueError("line direction must be a unit complex number")
        if d.imag < 0 or (d.imag == 0 and d.real < 0):
            d = -d
        p = complex(self.point)
        p = p - (p * d.conjugate()).real * d
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "point", p)

    @classmethod
    def through(cls, p: complex, q: complex) -> "Line":
        d = complex(q) - complex(p)
        return cls(p, d / abs(d))

    def witnesses(self):
        return [self.point, self.point + self.direction, self.point - self.direction]

    def distance(self, z: complex) -> float:
        return abs(((complex(z) - self.point) * self.direction.conjugate()).imag)


GeneralizedCircle = Union[Circle, Line]


def circumcircle(p: complex, q: complex, r: complex) -> GeneralizedCircle:
    """Circle through three points, or the line when they are collinear."""
    b, c = q - p, r - p
    cross = (b.conjugate() * c).imag
    scale = max(abs(b), abs(c))
    if abs(cross) <= 1e-15 * scale * scale:
        far = max((p, q), (p, r), (q, r), key=lambda uv: abs(uv[0] - uv[1]))
        return Line.through(*far)
    u = (abs(b) ** 2 * c - abs(c) ** 2 * b) / (2j * cross)
    center = p + u
    radius = abs(u)
    if abs(center) > 1e12 * scale:
        far = max((p, q), (p, r), (q, r), key=lambda uv: abs(uv[0] - uv[1]))
        return Line.through(*far)
    return Circle(center, radius)


def mobius_map_circle(m: MobiusTransform, c: GeneralizedCircle) -> GeneralizedCircle:
    """Image of a generalized circle; a line exactly when the pole lies on ``c``."""
    pole = m.pole()
    if is_inf(pole):
        pole_on = isinstance(c, Line)
    else:
        scale = max(1.0, abs(pole), c.radius if isinstance(c, Circle) else 1.0)
        pole_on = c.distance(pole) <= 1e-10 * scale
    pts = c.witnesses()
    if isinstance(c, Line):
        pts = pts + [INF]
    images = []
    for z in pts:
        if not is_inf(pole) and not is_inf(z) and abs(complex(z) - pole) < 1e-8 * max(1.0, abs(pole)):
            continue
        w = mobius_apply(m, z)
        if not is_inf(w):
            images.append(complex(w))
    if pole_on:
        p, q = max(
            ((u, v) for i, u in enumerate(images) for v in images[i + 1 :]),
            key=lambda uv: abs(uv[0] - uv[1]),
        )
        return Line.through(p, q)
    return circumcircle(*images[:3])


def same_generalized_circle(c1: GeneralizedCircle, c2: GeneralizedCircle, tol: float = 1e-8) -> bool:
    if isinstance(c1, Circle) and isinstance(c2, Circle):
        scale = max(1.0, c1.radius)
        return abs(c1.center - c2.center) <= tol * scale and abs(c1.radius - c2.radius) <= tol * scale
    if isinstance(c1, Line) and isinstance(c2, Line):
        return abs(c1.point - c2.point) <= tol * max(1.0, abs(c1.point)) and abs(c1.direction - c2.direction) <= tol
    return False


def _canonical_real_map(c: GeneralizedCircle) -> MobiusTransform:
    """A fixed Möbius map sending ``c`` onto the real line."""
    if isinstance(c, Circle):
        src = (c.center + c.radius, c.center + 1j * c.radius, c.center - c.radius)
    else:
        src = (c.point, c.point + c.direction, INF)
    return mobius_three_point(src, (0, 1, INF))


def reflect(c: GeneralizedCircle, z: ExtendedComplex) -> ExtendedComplex:
    """Reflection across ``c``: conjugate by a canonical map onto the real line."""
    t = _canonical_real_map(c)
    w = mobius_apply(t, z)
    w = INF if is_inf(w) else complex(w).conjugate()
    return mobius_apply(mobius_inverse(t), w)
