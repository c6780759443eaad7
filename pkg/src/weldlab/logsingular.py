"""Inductive red/blue construction of log-singular arc homeomorphisms.

Each stage splits every current subarc into n equal pieces and carves a
red sliver (left end of the domain piece) and a blue image sliver
(right end of the image piece).  Red slivers are sized through the
closed-form arc capacity so the stage-n red union is certified below
2^-n by subadditivity; blue image slivers get the mirrored treatment on
the target side.  Capacity decays only logarithmically in arc length,
so the required lengths collapse super-exponentially: builds stop early
with partial=True once a sliver would drop below 1e-14 rad.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .capacity import (CAP_MAX, ArcSet, CapacityEstimate,
                       arc_capacity_closed_form, arc_length_for_capacity,
                       capacity_estimate)
from .circle_homeo import CircleHomeo

TWO_PI = 2.0 * math.pi

# fraction of each stage budget actually spent; the reserve keeps the
# certified sums strictly under 2^-n
BUDGET_MARGIN = 0.9
MIN_LENGTH = 1e-14

__all__ = [
    "RedBlueStage",
    "LogSingularMap",
    "CertificateEntry",
    "CertificateReport",
    "build_log_singular",
    "certificate_check",
    "convergence_profile",
]


@dataclass(frozen=True)
class RedBlueStage:
    """One refinement stage: tagged partition, its map, and certificates."""

    n: int
    subarcs: tuple
    h: CircleHomeo
    red_capacity_certificate: CapacityEstimate
    blue_image_capacity_certificate: CapacityEstimate

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("stage index must be >= 1")
        if not self.subarcs:
            raise ValueError("stage needs a nonempty partition")
        for t0, t1, tag in self.subarcs:
            if tag not in ("red", "blue"):
                raise ValueError("subarc tag must be 'red' or 'blue'")
            if not t1 > t0:
                raise ValueError("subarcs must have positive length")
        for (_, t1, _), (s0, _, _) in zip(self.subarcs, self.subarcs[1:]):
            if abs(t1 - s0) > 1e-12:
                raise ValueError("tagged subarcs must tile the domain arc")
        budget = 0.5 ** self.n
        if self.red_capacity_certificate.upper > budget * (1 + 1e-12):
            raise ValueError("red capacity certificate exceeds stage budget")
        if self.blue_image_capacity_certificate.upper > budget * (1 + 1e-12):
            raise ValueError("blue image certificate exceeds stage budget")

    def arcs_tagged(self, tag: str):
        return tuple((t0, t1) for t0, t1, t in self.subarcs if t == tag)

    def max_image_arc_length(self) -> float:
        ends = [self.h.evaluate(t1) - self.h.evaluate(t0)
                for t0, t1, _ in self.subarcs]
        return float(max(ends))


@dataclass(frozen=True)
class LogSingularMap:
    """Finite-depth stand-in for the limit map of the construction."""

    domain: tuple
    target: tuple
    stages: tuple
    h: CircleHomeo
    exceptional_set_bound: float
    partial: bool
    requested_depth: int

    @property
    def depth(self) -> int:
        return len(self.stages)


def _closed_form_certificate(arcs) -> CapacityEstimate:
    """Certificate for a disjoint union from per-arc closed forms:
    monotonicity gives the lower bound, subadditivity the upper."""
    caps = [arc_capacity_closed_form(b - a) for a, b in arcs]
    upper = min(sum(caps), CAP_MAX)
    lower = min(max(caps), upper)
    return CapacityEstimate(lower=lower, upper=upper,
                            energy_at_optimum=1.0 / upper,
                            iterations=0, converged=True)


def _segments_to_homeo(segments) -> CircleHomeo:
    theta = [s[0] for s in segments] + [segments[-1][1]]
    psi = [s[2] for s in segments] + [segments[-1][3]]
    return CircleHomeo(np.array(theta), np.array(psi))


def _split_equal(a: float, b: float, n: int):
    """n+1 split points with the endpoints kept bitwise."""
    pts = [a + (b - a) * (k / n) for k in range(n + 1)]
    pts[0] = a
    pts[-1] = b
    return pts


def build_log_singular(I, J, depth: int) -> LogSingularMap:
    """Run the red/blue scheme from arc I onto arc J for `depth` stages.

    Stops early (partial=True) once a required sliver length falls
    below 1e-14 rad; the budgets shrink like 2^-n divided by a piece
    count growing as n! 2^n, and the closed-form inversion turns that
    into doubly-exponentially small lengths, so for ordinary arcs the
    achievable depth is 2.
    """
    i0, i1 = float(I[0]), float(I[1])
    j0, j1 = float(J[0]), float(J[1])
    li, lj = i1 - i0, j1 - j0
    if not (1e-12 < li < TWO_PI - 1e-12 and 1e-12 < lj < TWO_PI - 1e-12):
        raise ValueError("domain and target must be nondegenerate proper arcs")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    i0 = i0 % TWO_PI
    j0 = j0 % TWO_PI
    segments = [(i0, i0 + li, j0, j0 + lj)]
    stages = []
    partial = False
    for n in range(1, depth + 1):
        pieces = []
        for d0, d1, m0, m1 in segments:
            ds = _split_equal(d0, d1, n)
            ms = _split_equal(m0, m1, n)
            pieces.extend((ds[k], ds[k + 1], ms[k], ms[k + 1])
                          for k in range(n))
        c = BUDGET_MARGIN * 0.5 ** n / len(pieces)
        sliver = arc_length_for_capacity(c)
        new_segments = []
        subarcs = []
        red_arcs = []
        blue_img_arcs = []
        stop = False
        for t0, t1, q0, q1 in pieces:
            lr = min(sliver, (t1 - t0) / 2.0)
            lb = min(sliver, (q1 - q0) / 2.0)
            if lr < MIN_LENGTH or lb < MIN_LENGTH:
                stop = True
                break
            mid_d = t0 + lr
            mid_i = q1 - lb
            subarcs.append((t0, mid_d, "red"))
            subarcs.append((mid_d, t1, "blue"))
            red_arcs.append((t0, mid_d))
            blue_img_arcs.append((mid_i, q1))
            new_segments.append((t0, mid_d, q0, mid_i))
            new_segments.append((mid_d, t1, mid_i, q1))
        if stop:
            partial = True
            break
        h_new = _segments_to_homeo(new_segments)
        stages.append(RedBlueStage(
            n=n, subarcs=tuple(subarcs), h=h_new,
            red_capacity_certificate=_closed_form_certificate(red_arcs),
            blue_image_capacity_certificate=_closed_form_certificate(
                blue_img_arcs)))
        segments = new_segments
    if stages:
        h_final = stages[-1].h
        bound = 2.0 ** (-len(stages))  # tail sum from m = depth+1
    else:
        h_final = _segments_to_homeo(segments)
        bound = 1.0
        partial = True
    return LogSingularMap(domain=(i0, i0 + li), target=(j0, j0 + lj),
                          stages=tuple(stages), h=h_final,
                          exceptional_set_bound=bound, partial=partial,
                          requested_depth=depth)


@dataclass(frozen=True)
class CertificateEntry:
    stage: int
    kind: str
    upper: float
    budget: float
    passed: bool


@dataclass(frozen=True)
class CertificateReport:
    entries: tuple
    tail_bound: float
    all_pass: bool


def certificate_check(m: LogSingularMap, n_points: int) -> CertificateReport:
    """Re-estimate every stage certificate numerically.

    Independent of the closed forms used at build time: red unions and
    blue image unions are re-bracketed with the capacity module, and an
    entry passes iff the numerical upper bound is at most budget*1.05.
    """
    entries = []
    for st in m.stages:
        budget = 0.5 ** st.n
        red = ArcSet(st.arcs_tagged("red"))
        est = capacity_estimate(red, n_points)
        entries.append(CertificateEntry(st.n, "red", est.upper, budget,
                                        est.upper <= budget * 1.05))
        imgs = [(st.h.evaluate(a), st.h.evaluate(b))
                for a, b in st.arcs_tagged("blue")]
        est = capacity_estimate(ArcSet(imgs), n_points)
        entries.append(CertificateEntry(st.n, "blue_image", est.upper, budget,
                                        est.upper <= budget * 1.05))
    return CertificateReport(entries=tuple(entries),
                             tail_bound=2.0 ** (1 - (m.depth + 1)),
                             all_pass=all(e.passed for e in entries))


def _sup_distance_exact(h1: CircleHomeo, h2: CircleHomeo) -> float:
    """Exact sup of |h1 - h2| for piecewise-linear maps: the difference
    is piecewise linear, so the max sits on the union of breakpoints."""
    grid = np.unique(np.concatenate([
        h1.theta, h2.theta % TWO_PI, np.array([0.0])]))
    d = np.abs(np.asarray(h1.evaluate(grid)) - np.asarray(h2.evaluate(grid)))
    d = np.minimum(d % TWO_PI, TWO_PI - (d % TWO_PI))
    return float(d.max())


def convergence_profile(m: LogSingularMap):
    """sup distance between consecutive stage maps; uniformly Cauchy
    sequences make these summable."""
    if m.depth < 2:
        raise ValueError("need a build of depth >= 2")
    return [
        _sup_distance_exact(a.h, b.h)
        for a, b in zip(m.stages, m.stages[1:])
    ]
