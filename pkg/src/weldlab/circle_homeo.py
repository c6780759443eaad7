"""Piecewise-linear orientation-preserving circle homeomorphisms.

A map is stored as breakpoint pairs (theta_k, psi_k) in lifted angle
coordinates and extended to the whole line by degree-1 periodicity,
psi(theta + 2*pi) = psi(theta) + 2*pi.  All reductions mod 2*pi happen
at presentation, never in the stored data, so monotonicity and degree
checks stay exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .moebius import MoebiusMap, DiskAutomorphism

TWO_PI = 2.0 * math.pi

__all__ = ["CircleHomeo", "SampleGrid", "compose_homeo", "from_boundary_action",
           "sup_distance", "quasisymmetry_modulus", "circle_distance"]


@dataclass(frozen=True)
class SampleGrid:
    """count equispaced angles starting at offset."""

    count: int
    offset: float = 0.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")

    def angles(self) -> np.ndarray:
        return (self.offset + TWO_PI * np.arange(self.count) / self.count) % TWO_PI


def _as_angles(grid) -> np.ndarray:
    if isinstance(grid, SampleGrid):
        return grid.angles()
    if isinstance(grid, int):
        return SampleGrid(grid).angles()
    return np.asarray(grid, dtype=float)


def circle_distance(a, b):
    """Distance between angles on the circle; symmetric, in [0, pi]."""
    d = np.abs(np.asarray(a, float) - np.asarray(b, float)) % TWO_PI
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class CircleHomeo:
    """Degree-1 piecewise-linear circle homeomorphism in angle coordinates.

    theta: strictly increasing breakpoints with theta[0] in [0, 2*pi) and
    theta[-1] - theta[0] < 2*pi.  psi: strictly increasing lifted values
    with psi[-1] - psi[0] < 2*pi.
    """

    theta: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        th = np.array(self.theta, dtype=float)
        ps = np.array(self.psi, dtype=float)
        if th.ndim != 1 or ps.ndim != 1 or th.shape != ps.shape:
            raise ValueError("breakpoint arrays must be 1-d and of equal length")
        if len(th) < 2:
            raise ValueError("need at least 2 breakpoints")
        if not (0.0 <= th[0] < TWO_PI):
            raise ValueError("base breakpoint must lie in [0, 2*pi)")
        if not np.all(np.diff(th) > 0):
            raise ValueError("theta breakpoints must be strictly increasing")
        if not th[-1] - th[0] < TWO_PI:
            raise ValueError("theta breakpoints must span less than one period")
        if not np.all(np.diff(ps) > 0):
            raise ValueError("psi values must be strictly increasing")
        if not ps[-1] - ps[0] < TWO_PI:
            raise ValueError("psi values must span less than one period")
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(ps))):
            raise ValueError("breakpoints must be finite")
        th.flags.writeable = False
        ps.flags.writeable = False
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "psi", ps)

    # -- construction helpers -------------------------------------------

    @staticmethod
    def identity() -> "CircleHomeo":
        return CircleHomeo(np.array([0.0, math.pi]), np.array([0.0, math.pi]))

    @staticmethod
    def rotation(alpha: float) -> "CircleHomeo":
        return CircleHomeo(np.array([0.0, math.pi]),
                           np.array([alpha, alpha + math.pi]))

    # -- evaluation ------------------------------------------------------

    def evaluate(self, x):
        """Value of the lifted map at x (scalar or array), in the lift.

        Exact at breakpoints: a query equal to a stored theta_k returns
        the stored psi_k with no interpolation rounding.
        """
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        k = np.floor((x - self.theta[0]) / TWO_PI)
        x0 = x - TWO_PI * k
        ext_t = np.append(self.theta, self.theta[0] + TWO_PI)
        ext_p = np.append(self.psi, self.psi[0] + TWO_PI)
        idx = np.clip(np.searchsorted(ext_t, x0, side="right") - 1,
                      0, len(ext_t) - 2)
        t = (x0 - ext_t[idx]) / (ext_t[idx + 1] - ext_t[idx])
        y = ext_p[idx] + t * (ext_p[idx + 1] - ext_p[idx]) + TWO_PI * k
        return float(y[0]) if scalar else y

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate_mod(self, x):
        """evaluate reduced into [0, 2*pi)."""
        return self.evaluate(x) % TWO_PI

    def invert(self) -> "CircleHomeo":
        """Exact PL inverse: breakpoint pairs swapped, base renormalized."""
        k = math.floor(self.psi[0] / TWO_PI)
        return CircleHomeo(self.psi - TWO_PI * k, self.theta - TWO_PI * k)

    def image_mesh(self) -> float:
        """Largest image gap between consecutive breakpoints (with wrap)."""
        gaps = np.diff(np.append(self.psi, self.psi[0] + TWO_PI))
        return float(gaps.max())

    def domain_mesh(self) -> float:
        gaps = np.diff(np.append(self.theta, self.theta[0] + TWO_PI))
        return float(gaps.max())


def compose_homeo(h1: CircleHomeo, h2: CircleHomeo) -> CircleHomeo:
    """h1 after h2 on the union breakpoint grid.

    Grid = breakpoints of h2 together with h2-preimages of breakpoints of
    h1, so the composite is exact (no added interpolation error) at every
    node.  Nodes closer than 1e-13, or whose composite values collide at
    float resolution, are merged.
    """
    inv2 = h2.invert()
    pre = inv2.evaluate(h1.theta)
    base = h2.theta[0]
    pre = (pre - base) % TWO_PI + base
    grid = np.sort(np.concatenate([h2.theta, pre]))
    keep = np.concatenate([[True], np.diff(grid) > 1e-13])
    grid = grid[keep]
    # guard the wrap: the last node must stay below base + 2*pi
    if grid[-1] - grid[0] >= TWO_PI:
        grid = grid[:-1]
    vals = h1.evaluate(h2.evaluate(grid))
    kept_t, kept_v = [grid[0]], [vals[0]]
    for t, v in zip(grid[1:], vals[1:]):
        if t > kept_t[-1] and v > kept_v[-1]:
            kept_t.append(t)
            kept_v.append(v)
    return CircleHomeo(np.array(kept_t), np.array(kept_v))


def from_boundary_action(action, grid) -> CircleHomeo:
    """PL sampling of a Moebius boundary action on the unit circle.

    action: MoebiusMap preserving the unit circle, or a DiskAutomorphism.
    Raises ValueError when the sampled images leave the circle by more
    than 1e-10 or the samples do not wind once positively.
    """
    if isinstance(action, DiskAutomorphism):
        action = action.to_moebius()
    if not isinstance(action, MoebiusMap):
        raise TypeError("action must be a MoebiusMap or DiskAutomorphism")
    th = np.sort(np.unique(_as_angles(grid) % TWO_PI))
    z = np.exp(1j * th)
    img = (action.a * z + action.b) / (action.c * z + action.d)
    if np.max(np.abs(np.abs(img) - 1.0)) > 1e-10:
        raise ValueError("map does not preserve the unit circle on the grid")
    raw = np.angle(img)
    steps = np.diff(raw) % TWO_PI
    closing = (raw[0] - raw[-1]) % TWO_PI
    total = steps.sum() + closing
    if abs(total - TWO_PI) > 1e-8:
        raise ValueError("sampled action does not wind once positively")
    psi = (raw[0] % TWO_PI) + np.concatenate([[0.0], np.cumsum(steps)])
    keep = np.concatenate([[True], np.diff(psi) > 0])
    return CircleHomeo(th[keep], psi[keep])


def sup_distance(h1: CircleHomeo, h2: CircleHomeo, grid) -> float:
    """Max circle distance between the two maps over the grid."""
    t = _as_angles(grid)
    return float(np.max(circle_distance(h1.evaluate(t), h2.evaluate(t))))


def quasisymmetry_modulus(h: CircleHomeo, scale: float) -> float:
    """Worst image-length ratio over adjacent arcs of the given length.

    Arcs are grid-aligned: [k*scale, (k+1)*scale] for k = 0..m-1 with
    m = floor(2*pi/scale).  The wrap pair is included only when the arcs
    tile the circle exactly.
    """
    if not 0.0 < scale < math.pi:
        raise ValueError("scale must lie in (0, pi)")
    m = int(math.floor(TWO_PI / scale + 1e-9))
    starts = np.arange(m) * scale
    lens = h.evaluate(starts + scale) - h.evaluate(starts)
    pairs = list(zip(range(m - 1), range(1, m)))
    if abs(m * scale - TWO_PI) <= 1e-9:
        pairs.append((m - 1, 0))
    worst = 1.0
    for i, j in pairs:
        r = lens[i] / lens[j]
        worst = max(worst, r, 1.0 / r)
    return float(worst)
