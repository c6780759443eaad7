"""Logarithmic capacity of circle subsets under the kernel log(2/|z-w|).

Two independent estimators bracket the capacity of an arc set:

  * a lower bound 1/I(mu) from a feasible measure mu, optimized by
    projected gradient over cell weights, where I(mu) is computed
    exactly for the piecewise-uniform measure (smeared cells, not point
    atoms), so the bound is rigorous up to optimizer quality;
  * an upper bound 1/E_n from the minimal n-point pair energy, since
    configurations approximating the equilibrium measure push the
    discrete minimum below the continuum infimum.

Both are clipped to [0, 1/log 2]: no subset of the circle beats the
full circle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import cell_energy_matrix, fekete_relax, pair_energy

TWO_PI = 2.0 * math.pi
CAP_MAX = 1.0 / math.log(2.0)

__all__ = [
    "ArcSet",
    "DiscreteMeasure",
    "CapacityEstimate",
    "discrete_energy",
    "equilibrium_measure",
    "capacity_estimate",
    "minimal_energy_points",
    "arc_capacity_closed_form",
    "arc_length_for_capacity",
    "CAP_MAX",
]


@dataclass(frozen=True)
class ArcSet:
    """Pairwise-disjoint closed arcs [alpha_j, beta_j] on the circle.

    Stored normalized: alpha in [0, 2*pi), beta = alpha + length (beta
    may exceed 2*pi for an arc crossing angle 0), sorted by alpha.
    """

    arcs: tuple

    def __init__(self, arcs):
        cleaned = []
        for a, b in arcs:
            a = float(a)
            b = float(b)
            length = b - a
            if not 0.0 < length <= TWO_PI + 1e-12:
                raise ValueError("each arc needs positive length at most 2*pi")
            length = min(length, TWO_PI)
            a = a % TWO_PI
            cleaned.append((a, a + length))
        if not cleaned:
            raise ValueError("arc set must be nonempty")
        cleaned.sort()
        for (a1, b1), (a2, b2) in zip(cleaned, cleaned[1:]):
            if b1 >= a2:
                raise ValueError("arcs must be pairwise disjoint")
        if len(cleaned) > 1 and cleaned[-1][1] >= cleaned[0][0] + TWO_PI:
            raise ValueError("arcs must be pairwise disjoint (wrap overlap)")
        object.__setattr__(self, "arcs", tuple(cleaned))

    def lengths(self) -> np.ndarray:
        return np.array([b - a for a, b in self.arcs])

    def total_length(self) -> float:
        return float(self.lengths().sum())

    @property
    def is_full_circle(self) -> bool:
        return len(self.arcs) == 1 and abs(self.total_length() - TWO_PI) < 1e-12

    @staticmethod
    def full_circle() -> "ArcSet":
        return ArcSet([(0.0, TWO_PI)])

    def contains(self, theta, tol: float = 1e-12) -> bool:
        t = float(theta) % TWO_PI
        for a, b in self.arcs:
            if a - tol <= t <= b + tol or a - tol <= t + TWO_PI <= b + tol:
                return True
        return False


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability measure with atoms at circle angles."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        sup = np.array(self.support, dtype=float) % TWO_PI
        w = np.array(self.weights, dtype=float)
        if sup.ndim != 1 or sup.shape != w.shape:
            raise ValueError("support and weights must be matching 1-d arrays")
        if len(sup) < 1:
            raise ValueError("measure needs at least one atom")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        if len(np.unique(sup)) != len(sup):
            raise ValueError("support points must be distinct")
        sup.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "weights", w)


def discrete_energy(mu: DiscreteMeasure) -> float:
    """Atom-pair energy sum_{i != j} w_i w_j log(2/|z_i - z_j|).

    The diagonal is excluded; a single atom reports +inf, matching the
    zero capacity of a point.
    """
    n = len(mu.support)
    if n < 2:
        return math.inf
    d = mu.support[:, None] - mu.support[None, :]
    K = -np.log(np.maximum(np.abs(np.sin(d / 2.0)), 1e-300))
    np.fill_diagonal(K, 0.0)
    return float(mu.weights @ K @ mu.weights)


def _grid_and_cells(E: ArcSet, n: int):
    """n points spread over E proportionally to arc length, with the
    cell bounds that tile each arc around its points."""
    lens = E.lengths()
    total = lens.sum()
    full = E.is_full_circle
    raw = lens / total * n
    counts = np.maximum(1, np.floor(raw).astype(int))
    while counts.sum() < n:
        counts[int(np.argmax(raw - counts))] += 1
    while counts.sum() > n:
        over = np.where(counts > 1, counts - raw, -np.inf)
        counts[int(np.argmax(over))] -= 1
    pts, lo, hi = [], [], []
    for (al, bl), k in zip(E.arcs, counts):
        L = bl - al
        if full:
            t = al + np.arange(k) * (L / k)
            half = L / k / 2.0
            pts.append(t)
            lo.append(t - half)
            hi.append(t + half)
        elif k == 1:
            pts.append(np.array([al + L / 2.0]))
            lo.append(np.array([al]))
            hi.append(np.array([al + L]))
        else:
            t = al + np.arange(k) * (L / (k - 1))
            mids = (t[:-1] + t[1:]) / 2.0
            pts.append(t)
            lo.append(np.concatenate([[al], mids]))
            hi.append(np.concatenate([mids, [al + L]]))
    return (np.concatenate(pts), np.concatenate(lo), np.concatenate(hi), full)


def _proj_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - (css - 1.0) / k > 0)[0][-1]
    tau = (css[rho] - 1.0) / (rho + 1)
    return np.maximum(v - tau, 0.0)


def _pgd(P: np.ndarray, tol: float, max_iter: int):
    n = P.shape[0]
    w = np.full(n, 1.0 / n)
    f = float(w @ P @ w)
    eta = 1.0 / (2.0 * np.abs(P).sum(axis=1).max())
    iters = 0
    converged = False
    while iters < max_iter:
        g = 2.0 * (P @ w)
        if np.linalg.norm(w - _proj_simplex(w - g)) < tol:
            converged = True
            break
        w_new = _proj_simplex(w - eta * g)
        d = w_new - w
        f_new = float(w_new @ P @ w_new)
        if f_new <= f + 1e-4 * float(g @ d):
            w, f = w_new, f_new
            eta *= 1.3
            iters += 1
        else:
            eta *= 0.5
            if eta < 1e-18:
                break
    if not converged:
        # Armijo stalls at the float floor around pgn ~ 1e-7.  When the
        # optimum is interior (equilibrium densities are positive on
        # closed arcs) the stationarity system P w = c 1 gives it
        # directly; accept the solve only if it is feasible and at
        # least as good.
        try:
            wk = np.linalg.solve(P, np.ones(n))
        except np.linalg.LinAlgError:
            wk = None
        if wk is not None and np.all(wk > 0):
            wk /= wk.sum()
            fk = float(wk @ P @ wk)
            gk = 2.0 * (P @ wk)
            if (fk <= f + 1e-12 * max(1.0, abs(f))
                    and np.linalg.norm(wk - _proj_simplex(wk - gk)) < tol):
                w, f, converged = wk, fk, True
    return w, f, iters, converged


def equilibrium_measure(E: ArcSet, n: int, tol: float = 1e-8,
                        max_iter: int = 20000):
    """Minimize the exact smeared energy over cell weights on E.

    Returns (measure, energy).  The measure places weight w_i at grid
    point i; the energy is I of the corresponding piecewise-uniform
    measure, hence an upper bound for the equilibrium energy of E and a
    rigorous input to the capacity lower bound 1/I.
    """
    if n < 2:
        raise ValueError("need n >= 2 grid points")
    pts, lo, hi, _ = _grid_and_cells(E, n)
    P = cell_energy_matrix(lo, hi)
    w, f, _, _ = _pgd(P, tol, max_iter)
    return DiscreteMeasure(pts, w), f


@dataclass(frozen=True)
class CapacityEstimate:
    """Two-sided capacity bracket with optimizer diagnostics."""

    lower: float
    upper: float
    energy_at_optimum: float
    iterations: int
    converged: bool

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper:
            raise ValueError("bracket must satisfy 0 <= lower <= upper")
        if self.upper > CAP_MAX + 1e-9:
            raise ValueError("upper bound exceeds the full-circle capacity")

    @property
    def tolerance(self) -> float:
        """Bracket half-width; property tests compare against brackets."""
        return (self.upper - self.lower) / 2.0


def capacity_estimate(E: ArcSet, n: int) -> CapacityEstimate:
    """Bracket cap(E) between the measure and point-configuration bounds."""
    if n < 2:
        raise ValueError("need n >= 2 grid points")
    pts, lo, hi, _ = _grid_and_cells(E, n)
    P = cell_energy_matrix(lo, hi)
    w, f, iters, converged = _pgd(P, 1e-8, 20000)
    lower = CAP_MAX if f <= 0 else 1.0 / f
    _, fek = minimal_energy_points(E, n, restarts=1)
    upper = math.inf if fek <= 0 else 1.0 / fek
    lower = min(max(lower, 0.0), CAP_MAX)
    upper = min(max(upper, 0.0), CAP_MAX)
    if lower > upper:
        if lower > upper * (1.0 + 1e-12):
            raise ArithmeticError(
                "capacity bracket inverted: optimizer produced lower > upper")
        lower = upper
    return CapacityEstimate(lower=lower, upper=upper, energy_at_optimum=f,
                            iterations=iters, converged=converged)


def minimal_energy_points(E: ArcSet, n: int, restarts: int = 1, seed: int = 0):
    """n-point configuration in E of (locally) minimal pair energy.

    Coordinate descent from the equispaced start; further restarts are
    jittered with a seeded generator.  Returns (points, energy).
    """
    if n < 2:
        raise ValueError("need n >= 2 points")
    rng = np.random.default_rng(seed)
    lens = E.lengths()
    total = float(lens.sum())
    full = E.is_full_circle
    arc_lo = np.array([a for a, _ in E.arcs])
    arc_len = lens
    cand = []
    for (al, bl) in E.arcs:
        L = bl - al
        m = max(8, int(round(64 * L / total)))
        if full:
            cand.append(al + np.arange(m) * L / m)
        elif m > 1:
            cand.append(al + np.arange(m) * (L / (m - 1)))
        else:
            cand.append(np.array([al]))
    cand = np.concatenate(cand)
    base_pts, _, _, _ = _grid_and_cells(E, n)

    def clamp(p):
        out = p.copy()
        if full:
            return out
        for i, x in enumerate(p):
            best, bd = x, math.inf
            for al, bl in E.arcs:
                y = min(max(x, al), bl)
                if abs(y - x) < bd:
                    best, bd = y, abs(y - x)
            out[i] = best
        return out

    best_p, best_e = None, math.inf
    for r in range(max(1, restarts)):
        if r == 0:
            p = np.sort(base_pts.copy())
        else:
            p = np.sort(clamp(base_pts + rng.uniform(-1, 1, n) * total / n / 4))
        p, _ = fekete_relax(p, cand, arc_lo, arc_len, full, max_sweeps=40)
        e = pair_energy(p)
        if e < best_e:
            best_p, best_e = p, e
    return best_p, best_e


def arc_capacity_closed_form(length: float) -> float:
    """cap of a single arc: 1/log(2/sin(length/4)), increasing in length."""
    if not 0.0 < length <= TWO_PI + 1e-12:
        raise ValueError("arc length must lie in (0, 2*pi]")
    length = min(float(length), TWO_PI)
    return 1.0 / math.log(2.0 / math.sin(length / 4.0))


def arc_length_for_capacity(cap: float) -> float:
    """Inverse of arc_capacity_closed_form.

    Values of cap small enough that 2*exp(-1/cap) underflows return 0.0;
    callers treat that as "no representable arc".
    """
    if not 0.0 < cap <= CAP_MAX + 1e-12:
        raise ValueError("capacity must lie in (0, 1/log 2]")
    s = 2.0 * math.exp(-1.0 / cap)
    if s >= 1.0:
        return TWO_PI
    return 4.0 * math.asin(s)
