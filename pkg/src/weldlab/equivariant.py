"""Circle homeomorphisms equivariant under a pair of parabolic rotations.

Let sigma and tau be the parabolic disk automorphisms with boundary
fixed point 1 and translation parameters a and b.  This module builds a
piecewise-linear circle map W with W(1) = 1 that conjugates the two
actions, W o sigma = tau o W, on a finite range of fundamental-domain
orbits.  The seed map on the base arc comes from the log-singular
construction, and every other orbit carries an exact Moebius transport
of the seed, so the conjugacy identity holds to the last bit at every
transported breakpoint.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .capacity import (ArcSet, CapacityEstimate, arc_capacity_closed_form,
                       capacity_estimate)
from .circle_homeo import CircleHomeo, _as_angles
from .logsingular import build_log_singular
from .moebius import parabolic_boundary_angle

TWO_PI = 2.0 * math.pi

# Segments no wider than this, in both coordinates, keep the chord error
# of the transported piecewise-linear map below the grid-residual target.
DENSIFY_MESH = 5e-4

# A data-free truncation bridge next to the fixed point is always short;
# a genuine data segment through angle 0 is not.  Segments adjacent to 0
# are excluded from residual scans only below this span.
GUARD_SPAN = 0.5


@dataclass(frozen=True)
class EquivariantSpec:
    """Parameters of the equivariant construction.

    a, b: translation lengths of the two parabolic actions.
    seed_depth: refinement depth requested for the log-singular seed.
    N: orbits n = -N..N are represented explicitly.
    delta: guard length; orbit arcs narrower than this are dropped.
    """

    a: float
    b: float
    seed_depth: int
    N: int = 20
    delta: float = 1e-4

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise ValueError("translation length a must be positive and finite")
        if not (math.isfinite(self.b) and self.b > 0):
            raise ValueError("translation length b must be positive and finite")
        if self.seed_depth < 1:
            raise ValueError("seed depth must be at least 1")
        if self.N < 0:
            raise ValueError("orbit range must be nonnegative")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ValueError("guard length must be positive")


@dataclass(frozen=True)
class OrbitDecomposition:
    """Endpoint angles of the orbit arcs I_n (domain) and J_n (image).

    Entry k of each endpoint array is the left endpoint of the orbit arc
    with index n = k - N; the final entry closes the last arc.  The arcs
    are pairwise disjoint and accumulate at angle 0 from both sides.
    """

    i_endpoints: np.ndarray
    j_endpoints: np.ndarray
    N: int

    def __post_init__(self):
        ie = np.array(self.i_endpoints, dtype=float)
        je = np.array(self.j_endpoints, dtype=float)
        if ie.shape != (2 * self.N + 2,) or je.shape != ie.shape:
            raise ValueError("endpoint arrays must hold 2N+2 angles")
        for e in (ie, je):
            if not (np.all(np.diff(e) > 0) and e[0] > 0 and e[-1] < TWO_PI):
                raise ValueError("orbit endpoints must increase strictly "
                                 "inside (0, 2*pi)")
        ie.flags.writeable = False
        je.flags.writeable = False
        object.__setattr__(self, "i_endpoints", ie)
        object.__setattr__(self, "j_endpoints", je)

    def i_arc(self, n: int) -> ArcSet:
        k = n + self.N
        return ArcSet([(self.i_endpoints[k], self.i_endpoints[k + 1])])

    def j_arc(self, n: int) -> ArcSet:
        k = n + self.N
        return ArcSet([(self.j_endpoints[k], self.j_endpoints[k + 1])])

    @property
    def i_arcs(self):
        return tuple(self.i_arc(n) for n in range(-self.N, self.N + 1))

    @property
    def j_arcs(self):
        return tuple(self.j_arc(n) for n in range(-self.N, self.N + 1))

    @property
    def i_coverage_gap(self) -> float:
        """Largest one-sided uncovered angle at the fixed point."""
        e = self.i_endpoints
        return float(max(e[0], TWO_PI - e[-1]))

    @property
    def j_coverage_gap(self) -> float:
        e = self.j_endpoints
        return float(max(e[0], TWO_PI - e[-1]))


def orbit_arcs(spec: EquivariantSpec) -> OrbitDecomposition:
    """Orbit arcs of the base arcs under the two parabolic actions.

    The base domain arc runs from angle pi to pi + 2*atan(a) and its
    n-th translate starts at pi + 2*atan(n*a); likewise for the image
    family with parameter b.
    """
    n = np.arange(-spec.N, spec.N + 2, dtype=float)
    return OrbitDecomposition(
        i_endpoints=np.pi + 2.0 * np.arctan(n * spec.a),
        j_endpoints=np.pi + 2.0 * np.arctan(n * spec.b),
        N=spec.N)


def _densify(theta, psi, mesh: float):
    """Insert collinear breakpoints until every segment spans at most
    `mesh` in both coordinates.  Existing nodes keep their bits."""
    out_t = [theta[0]]
    out_p = [psi[0]]
    for k in range(len(theta) - 1):
        dt = theta[k + 1] - theta[k]
        dp = psi[k + 1] - psi[k]
        m = max(1, int(math.ceil(max(dt, dp) / mesh)))
        for j in range(1, m):
            out_t.append(theta[k] + dt * (j / m))
            out_p.append(psi[k] + dp * (j / m))
        out_t.append(theta[k + 1])
        out_p.append(psi[k + 1])
    return np.array(out_t), np.array(out_p)


def _seed_nodes(spec: EquivariantSpec, seed, i0, i1, j0, j1):
    if seed is None:
        ls = build_log_singular((i0, i1), (j0, j1), spec.seed_depth)
        return ls.h.theta, ls.h.psi
    cand = np.concatenate([seed.theta, seed.theta + TWO_PI])
    inner = np.sort(cand[(cand > i0) & (cand < i1)])
    th = np.concatenate([[i0], inner, [i1]])
    ps = np.asarray(seed.evaluate(th))
    ps = ps - TWO_PI * round((ps[0] - j0) / TWO_PI)
    if abs(ps[0] - j0) > 1e-9 or abs(ps[-1] - j1) > 1e-9:
        raise ValueError("seed must map the base domain arc onto the "
                         "base image arc")
    return th, ps


def build_equivariant_homeo(spec: EquivariantSpec, seed: CircleHomeo = None,
                            mesh: float = DENSIFY_MESH) -> CircleHomeo:
    """Assemble the equivariant map from a seed on the base arc.

    The seed breakpoints are transported to orbit n by n-fold parabolic
    boundary steps, values by the image-side steps, walking outward from
    orbit -N in a single forward chain.  Every stored breakpoint theta
    with its successor orbit present therefore satisfies
    W(sigma(theta)) == tau(W(theta)) exactly, because both sides are the
    same floating-point computation.  An anchor breakpoint pins W(1) = 1
    and a terminal node closes the last orbit.

    Orbit arcs narrower than spec.delta (in either family) are dropped,
    with a UserWarning; pass a smaller delta to keep them.  `seed`
    overrides the log-singular seed and must map the base domain arc
    onto the base image arc.
    """
    dec = orbit_arcs(spec)
    li = np.diff(dec.i_endpoints)
    lj = np.diff(dec.j_endpoints)
    m = spec.N
    while m > 0 and min(li[spec.N - m], li[spec.N + m],
                        lj[spec.N - m], lj[spec.N + m]) < spec.delta:
        m -= 1
    if min(li[spec.N], lj[spec.N]) < spec.delta:
        raise ValueError("guard length delta exceeds every orbit arc")
    if m < spec.N:
        warnings.warn(
            "orbit arcs narrower than the guard length; representation "
            f"truncated to |n| <= {m}", stacklevel=2)

    i0, i1 = dec.i_endpoints[spec.N], dec.i_endpoints[spec.N + 1]
    j0, j1 = dec.j_endpoints[spec.N], dec.j_endpoints[spec.N + 1]
    th, ps = _seed_nodes(spec, seed, i0, i1, j0, j1)
    th, ps = _densify(th, ps, mesh)

    cur_t = th[:-1].copy()
    cur_p = ps[:-1].copy()
    for _ in range(m):
        cur_t = parabolic_boundary_angle(-spec.a, cur_t)
        cur_p = parabolic_boundary_angle(-spec.b, cur_p)
    parts_t = [np.array([0.0])]
    parts_p = [np.array([0.0])]
    for _ in range(2 * m + 1):
        parts_t.append(cur_t)
        parts_p.append(cur_p)
        cur_t = parabolic_boundary_angle(spec.a, cur_t)
        cur_p = parabolic_boundary_angle(spec.b, cur_p)
    parts_t.append(cur_t[:1])
    parts_p.append(cur_p[:1])
    return CircleHomeo(np.concatenate(parts_t), np.concatenate(parts_p))


def _boundary_angles(mob, theta) -> np.ndarray:
    """Angle action of a circle-preserving Moebius map, vectorized."""
    z = np.exp(1j * np.asarray(theta, dtype=float))
    w = (mob.a * z + mob.b) / (mob.c * z + mob.d)
    if not np.all(np.abs(np.abs(w) - 1.0) < 1e-8):
        raise ValueError("map does not preserve the unit circle on the "
                         "sampled angles")
    return np.angle(w) % TWO_PI


def _guard_zones(h: CircleHomeo):
    """Open breakpoint segments of h adjacent to angle 0, when short.

    Intervals are returned in [0, 2*pi) coordinates except that a wrap
    segment keeps its upper end above 2*pi.
    """
    th = h.theta
    zones = []
    if th[0] == 0.0:
        if th[1] - th[0] < GUARD_SPAN:
            zones.append((0.0, float(th[1])))
        if TWO_PI - th[-1] < GUARD_SPAN:
            zones.append((float(th[-1]), TWO_PI))
    else:
        lo = float(th[-1])
        hi = float(th[0]) + TWO_PI
        if hi - lo < GUARD_SPAN:
            zones.append((lo, hi))
    return zones


def _in_zones(zones, angles) -> np.ndarray:
    ang = np.asarray(angles, dtype=float) % TWO_PI
    mask = np.zeros(ang.shape, dtype=bool)
    for lo, hi in zones:
        if hi <= TWO_PI:
            mask |= (ang > lo) & (ang < hi)
        else:
            mask |= (ang > lo) | (ang < hi - TWO_PI)
    return mask


def functional_equation_residual(W: CircleHomeo, sigma, tau, grid) -> float:
    """Largest circle distance between W(sigma(.)) and tau(W(.)) on grid.

    sigma and tau are Moebius maps preserving the unit circle.  Grid
    angles falling strictly inside a short breakpoint segment of W next
    to angle 0, before or after applying sigma, are skipped: the
    representation carries no data across its truncation bridge at the
    parabolic fixed point.
    """
    th = _as_angles(grid)
    sig = _boundary_angles(sigma, th)
    lhs = np.asarray(W.evaluate_mod(sig))
    rhs = _boundary_angles(tau, np.asarray(W.evaluate_mod(th)))
    d = np.abs(lhs - rhs) % TWO_PI
    d = np.minimum(d, TWO_PI - d)
    zones = _guard_zones(W)
    keep = ~(_in_zones(zones, th) | _in_zones(zones, sig))
    if not np.any(keep):
        return 0.0
    return float(d[keep].max())


def orbit_distortion(spec: EquivariantSpec, n: int) -> float:
    """Largest derivative of the n-fold domain action on the base arc.

    In the coordinate x = -cot(theta/2) the n-fold action is the shift
    by n*a, so the angle derivative is (1+x^2)/(1+(x+n*a)^2); the
    maximum over x in [0, a] is taken on a fine grid.
    """
    x = np.linspace(0.0, spec.a, 2001)
    d = (1.0 + x * x) / (1.0 + (x + n * spec.a) ** 2)
    return float(d.max())


@dataclass(frozen=True)
class TransportedCertificate:
    """Capacity check of one transported red union against its budget."""

    orbit: int
    stage: int
    upper: float
    budget: float
    passed: bool


def transported_red_certificates(spec: EquivariantSpec, n_points: int = 64,
                                 orbits=None):
    """Re-certify the seed's red unions after transport to other orbits.

    The stage-n red budget on the base arc is a sum of closed-form arc
    capacities; on orbit k each red length may stretch by at most the
    orbit distortion factor, so the transported union is checked against
    the sum of closed-form capacities of the stretched lengths, with the
    usual 5 percent numerical headroom.
    """
    ls = build_log_singular(
        (math.pi, math.pi + 2.0 * math.atan(spec.a)),
        (math.pi, math.pi + 2.0 * math.atan(spec.b)),
        spec.seed_depth)
    if orbits is None:
        picks = {-spec.N, -2, -1, 0, 1, 2, spec.N}
        orbits = sorted(k for k in picks if -spec.N <= k <= spec.N)
    entries = []
    for k in orbits:
        dist = orbit_distortion(spec, k)
        for st in ls.stages:
            red = st.arcs_tagged("red")
            moved = [(parabolic_boundary_angle(k * spec.a, t0),
                      parabolic_boundary_angle(k * spec.a, t1))
                     for t0, t1 in red]
            budget = sum(
                arc_capacity_closed_form(min(dist * (t1 - t0), TWO_PI))
                for t0, t1 in red)
            est = capacity_estimate(ArcSet(moved), n_points)
            entries.append(TransportedCertificate(
                orbit=k, stage=st.n, upper=est.upper, budget=budget,
                passed=bool(est.upper <= budget * 1.05)))
    return tuple(entries)
