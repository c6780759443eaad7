"""Moebius transformations of the extended complex plane.

Finite points are plain ``complex`` values; the point at infinity is the
module constant ``INF``.  Any non-finite complex value is treated as the
same point at infinity and canonicalized to ``INF`` on output, so the
algebra is total on the Riemann sphere.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "INF",
    "ALL_POINTS",
    "MoebiusMap",
    "DiskAutomorphism",
    "is_infinite",
    "chordal_distance",
    "cross_ratio",
    "cayley",
    "parabolic_disk",
    "parabolic_boundary_angle",
    "fixed_points",
    "fit_three_points",
]

INF = complex(math.inf, 0.0)

TWO_PI = 2.0 * math.pi


class _AllPoints:
    """Sentinel returned by fixed_points for the identity map."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ALL_POINTS"


ALL_POINTS = _AllPoints()


def is_infinite(z) -> bool:
    """True when z represents the point at infinity (any non-finite complex)."""
    z = complex(z)
    return not (math.isfinite(z.real) and math.isfinite(z.imag))


def chordal_distance(z, w) -> float:
    """Distance between extended points in the chordal (sphere) metric."""
    zi, wi = is_infinite(z), is_infinite(w)
    if zi and wi:
        return 0.0
    if zi:
        return 2.0 / math.sqrt(1.0 + abs(w) ** 2)
    if wi:
        return 2.0 / math.sqrt(1.0 + abs(z) ** 2)
    return 2.0 * abs(z - w) / math.sqrt((1.0 + abs(z) ** 2) * (1.0 + abs(w) ** 2))


@dataclass(frozen=True)
class MoebiusMap:
    """The map z -> (a z + b) / (c z + d), ad - bc != 0.

    Coefficients are stored normalized: the first coefficient of largest
    modulus (in a, b, c, d order) is made real and equal to 1, so equal
    maps have equal coefficient tuples up to float rounding.
    """

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(self.a), complex(self.b),
                      complex(self.c), complex(self.d))
        for v in (a, b, c, d):
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValueError("moebius coefficients must be finite")
        if a * d - b * c == 0:
            raise ValueError("degenerate coefficients: ad - bc = 0")
        mods = [abs(a), abs(b), abs(c), abs(d)]
        pivot = (a, b, c, d)[mods.index(max(mods))]
        object.__setattr__(self, "a", a / pivot)
        object.__setattr__(self, "b", b / pivot)
        object.__setattr__(self, "c", c / pivot)
        object.__setattr__(self, "d", d / pivot)

    def apply(self, z):
        """Evaluate at an extended point; total on the Riemann sphere."""
        if is_infinite(z):
            if self.c == 0:
                return INF
            return _canon(self.a / self.c)
        z = complex(z)
        az = abs(z)
        if az > 1e15:
            # reciprocal chart: evaluate in w = 1/z to keep relative error
            # bounded near infinity
            w = 1.0 / z
            num = self.a + self.b * w
            den = self.c + self.d * w
            scale = abs(self.c) + abs(self.d) * abs(w)
        else:
            num = self.a * z + self.b
            den = self.c * z + self.d
            scale = abs(self.c) * az + abs(self.d)
        # cancellation guard: a denominator this far below its evaluation
        # scale means z sits numerically on the pole
        if den == 0 or abs(den) < 1e-14 * scale:
            return INF
        return _canon(num / den)

    def __call__(self, z):
        return self.apply(z)

    def compose(self, other: "MoebiusMap") -> "MoebiusMap":
        """self after other: (self.compose(other))(z) = self(other(z))."""
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        return MoebiusMap(a, b, c, d)

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def is_identity(self, tol: float = 0.0) -> bool:
        return (abs(self.b) <= tol and abs(self.c) <= tol
                and abs(self.a - self.d) <= tol)

    @staticmethod
    def identity() -> "MoebiusMap":
        return MoebiusMap(1.0, 0.0, 0.0, 1.0)


def _canon(z: complex):
    """Canonicalize non-finite results to INF."""
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        return INF
    return z


def compose(first: MoebiusMap, second: MoebiusMap) -> MoebiusMap:
    """Matrix-product composition, first o second."""
    return first.compose(second)


def inverse(m: MoebiusMap) -> MoebiusMap:
    return m.inverse()


def apply(m: MoebiusMap, z):
    return m.apply(z)


def cayley() -> MoebiusMap:
    """The half-plane-to-disk map z -> (z - i)/(z + i), infinity -> 1."""
    return MoebiusMap(1.0, -1.0j, 1.0, 1.0j)


def parabolic_disk(a: float) -> MoebiusMap:
    """Disk automorphism conjugate (via the Cayley map) to z -> z + a.

    Fixes the boundary point 1 and no other point of the sphere.
    """
    if not a > 0:
        raise ValueError("parabolic_disk requires a > 0")
    return _parabolic(a)


def _parabolic(a: float) -> MoebiusMap:
    # cayley() . (z + a) . cayley()^{-1}, multiplied out
    return MoebiusMap(2.0j - a, a, -a, a + 2.0j)


def parabolic_boundary_angle(a: float, theta):
    """Boundary action of parabolic_disk(a) in angle coordinates.

    Accepts scalars or arrays; returns angles in [0, 2*pi).  Angle 0 is
    the fixed boundary point and maps to 0.
    """
    theta = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore"):
        x = -1.0 / np.tan(theta / 2.0)
    out = (np.pi + 2.0 * np.arctan(x + a)) % TWO_PI
    out = np.where(theta % TWO_PI == 0.0, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def fixed_points(m: MoebiusMap):
    """Fixed points of m: a tuple of extended points, or ALL_POINTS.

    Solves c z^2 + (d - a) z - b = 0 with extended-plane conventions.
    Near-parabolic maps (|discriminant| < 1e-12 on normalized
    coefficients) report a single double fixed point.
    """
    if m.is_identity():
        return ALL_POINTS
    a, b, c, d = m.a, m.b, m.c, m.d
    if c == 0:
        if a == d:
            return (INF,)
        return (_canon(b / (d - a)), INF)
    disc = (d - a) * (d - a) + 4.0 * c * b
    if abs(disc) < 1e-12:
        return (_canon(-(d - a) / (2.0 * c)),)
    r = cmath.sqrt(disc)
    bq = d - a
    # pair the root with the larger |bq + r| to avoid cancellation
    if abs(bq + r) >= abs(bq - r):
        q = -(bq + r) / 2.0
    else:
        q = -(bq - r) / 2.0
    return (_canon(q / c), _canon(-b / q))


def _standard_triple_matrix(p0, p1, p2) -> MoebiusMap:
    """Map sending (p0, p1, p2) to (0, 1, INF)."""
    if is_infinite(p0):
        return MoebiusMap(0.0, p1 - p2, 1.0, -p2)
    if is_infinite(p1):
        return MoebiusMap(1.0, -p0, 1.0, -p2)
    if is_infinite(p2):
        return MoebiusMap(1.0, -p0, 0.0, p1 - p0)
    return MoebiusMap(p1 - p2, -p0 * (p1 - p2), p1 - p0, -p2 * (p1 - p0))


def fit_three_points(src, dst) -> MoebiusMap:
    """Unique Moebius map sending src[k] -> dst[k] for three point pairs.

    Each triple must be pairwise distinct (as extended points).  The fit
    is verified by re-application; failure to reproduce the targets is a
    bug and raises.
    """
    src = tuple(src)
    dst = tuple(dst)
    if len(src) != 3 or len(dst) != 3:
        raise ValueError("fit_three_points needs exactly three source and target points")
    for triple in (src, dst):
        for i in range(3):
            for j in range(i + 1, 3):
                if chordal_distance(triple[i], triple[j]) == 0.0:
                    raise ValueError("coincident points in a triple")
    m = _standard_triple_matrix(*dst).inverse().compose(_standard_triple_matrix(*src))
    for s, t in zip(src, dst):
        if chordal_distance(m.apply(s), t) > 1e-9:
            raise ArithmeticError("three-point fit failed verification")
    return m


def cross_ratio(z0, z1, z2, z3):
    """Cross-ratio (z0-z2)(z1-z3) / ((z0-z3)(z1-z2)) on extended points."""
    def diff(u, v):
        # factors containing infinity cancel pairwise; mark them None
        if is_infinite(u) or is_infinite(v):
            return None
        return u - v

    n1, n2 = diff(z0, z2), diff(z1, z3)
    d1, d2 = diff(z0, z3), diff(z1, z2)
    num = (1.0 if n1 is None else n1) * (1.0 if n2 is None else n2)
    den = (1.0 if d1 is None else d1) * (1.0 if d2 is None else d2)
    if den == 0:
        return INF
    return _canon(num / den)


@dataclass(frozen=True)
class DiskAutomorphism:
    """Automorphism of the unit disk, z -> e^{i alpha} (z - w)/(1 - conj(w) z)."""

    alpha: float
    w: complex

    def __post_init__(self):
        if not abs(self.w) < 1.0:
            raise ValueError("center parameter must satisfy |w| < 1")
        object.__setattr__(self, "alpha", float(self.alpha) % TWO_PI)
        object.__setattr__(self, "w", complex(self.w))

    def to_moebius(self) -> MoebiusMap:
        e = cmath.exp(1j * self.alpha)
        return MoebiusMap(e, -e * self.w, -self.w.conjugate(), 1.0)

    def apply(self, z):
        return self.to_moebius().apply(z)

    def __call__(self, z):
        return self.apply(z)

    def boundary_angle(self, theta):
        """Action on boundary angles; vectorized, values in [0, 2*pi)."""
        theta = np.asarray(theta, dtype=float)
        z = np.exp(1j * theta)
        img = np.exp(1j * self.alpha) * (z - self.w) / (1.0 - np.conj(self.w) * z)
        out = np.angle(img) % TWO_PI
        if out.ndim == 0:
            return float(out)
        return out

    @staticmethod
    def identity() -> "DiskAutomorphism":
        return DiskAutomorphism(0.0, 0.0)

    @classmethod
    def from_moebius(cls, m: MoebiusMap, tol: float = 1e-9) -> "DiskAutomorphism":
        """Extract (alpha, w) from a MoebiusMap that is a disk automorphism."""
        if m.a == 0:
            raise ValueError("not a disk automorphism")
        w = -m.b / m.a
        if not abs(w) < 1.0:
            raise ValueError("not a disk automorphism: |w| >= 1")
        m1 = m.apply(1.0)
        if is_infinite(m1) or abs(abs(m1) - 1.0) > tol:
            raise ValueError("not a disk automorphism: does not preserve the circle")
        phase = m1 * (1.0 - w.conjugate()) / (1.0 - w)
        cand = cls(cmath.phase(phase), w)
        for t in (0.3, 2.1, 4.4):
            z = cmath.exp(1j * t)
            if chordal_distance(cand.apply(z), m.apply(z)) > tol:
                raise ValueError("not a disk automorphism")
        return cand
