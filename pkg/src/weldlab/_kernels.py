"""Hot numerical kernels with a numba fast path and a numpy fallback.

The backend is chosen at import from the WELDLAB_BACKEND environment
variable ("numba" or "numpy"); without it, numba is used when
importable.  Every public function also accepts backend="numba"/"numpy"
to override per call, which is what the benchmark harness uses.

Kernels housed here:
  * cell_energy_matrix  - exact smeared-kernel energy matrix on circle cells
  * fekete_relax        - coordinate-descent sweeps for minimal-energy points
  * zipper_chain        - slit-map chain sending polygon samples to the real line

The cell integrals use the double antiderivative of
g(x) = log(2 |sin(x/2)|):

    F(t) = t^2 (2 log|t| - 3) / 4 - sum_{n>=1} c_n t^{2n+2} / ((2n+1)(2n+2)),
    c_n  = zeta(2n) / (n pi^{2n} 4^n),

so the mean of g over a cell pair is an exact second difference of F and
the smeared energy is the true energy of the piecewise-uniform measure,
which keeps the lower capacity bound rigorous.
"""
from __future__ import annotations

import math
import os

import numpy as np
from scipy.special import zeta

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(f):
            return f

        return deco


_env = os.environ.get("WELDLAB_BACKEND", "").strip().lower()
if _env not in ("", "numba", "numpy"):
    raise ValueError("WELDLAB_BACKEND must be 'numba' or 'numpy', got %r" % _env)
if _env == "numba" and not NUMBA_AVAILABLE:
    raise ImportError("WELDLAB_BACKEND=numba but numba is not importable")
BACKEND = _env or ("numba" if NUMBA_AVAILABLE else "numpy")

TWO_PI = 2.0 * math.pi
LOG2 = math.log(2.0)

# series coefficients for F, including the 1/((2n+1)(2n+2)) factor
_NTERM = 60
_ns = np.arange(1, _NTERM + 1)
_CN = zeta(2 * _ns) / (_ns * np.pi ** (2 * _ns) * 4.0 ** _ns)
_CN = _CN / ((2 * _ns + 1) * (2 * _ns + 2))
_CN.flags.writeable = False


def _pick(backend):
    b = backend or BACKEND
    if b not in ("numba", "numpy"):
        raise ValueError("backend must be 'numba' or 'numpy'")
    if b == "numba" and not NUMBA_AVAILABLE:
        raise ValueError("numba backend requested but numba is unavailable")
    return b


def active_backend() -> str:
    return BACKEND


# ---------------------------------------------------------------------------
# F and the cell-pair energy matrix
# ---------------------------------------------------------------------------


def _F_np(t):
    t = np.asarray(t, dtype=float)
    at = np.abs(t)
    main = np.where(at < 1e-300, 0.0,
                    t * t * (2.0 * np.log(np.maximum(at, 1e-300)) - 3.0) / 4.0)
    t2 = t * t
    h = np.zeros_like(t2)
    for c in _CN[::-1]:
        h = h * t2 + c
    return main - h * t2 * t2


@njit(cache=True)
def _F_nb(t):
    at = abs(t)
    if at < 1e-300:
        main = 0.0
    else:
        main = t * t * (2.0 * math.log(at) - 3.0) / 4.0
    t2 = t * t
    h = 0.0
    for i in range(_CN.shape[0] - 1, -1, -1):
        h = h * t2 + _CN[i]
    return main - h * t2 * t2


@njit(cache=True)
def _pair_mean_g_nb(a0, b0, c0, d0):
    # mean of g over [a,b] x [c,d]; wide windows are bisected so the
    # common-shift reduction keeps all four F arguments inside (-2pi, 2pi)
    stk = np.empty((128, 5))
    stk[0, 0] = a0
    stk[0, 1] = b0
    stk[0, 2] = c0
    stk[0, 3] = d0
    stk[0, 4] = 1.0
    top = 1
    acc = 0.0
    while top > 0:
        top -= 1
        a = stk[top, 0]
        b = stk[top, 1]
        c = stk[top, 2]
        d = stk[top, 3]
        wgt = stk[top, 4]
        wa = b - a
        wc = d - c
        ctr0 = 0.5 * (a + b) - 0.5 * (c + d)
        cc = ctr0 - TWO_PI * np.rint(ctr0 / TWO_PI)
        dmin = abs(cc) - 0.5 * (wa + wc)
        if dmin > 0.0 and wa + wc <= 1e-2 * dmin:
            # cells much smaller than their separation: the F second
            # difference cancels catastrophically, but a midpoint value
            # with the Jensen term is exact to ~(w/d)^4; the err4 margin
            # keeps the energy an overestimate (capacity lower bound
            # stays valid)
            s = math.sin(0.5 * cc)
            w2 = wa * wa + wc * wc
            g0 = math.log(2.0 * abs(s))
            corr = -w2 / (96.0 * s * s)
            smin = math.sin(0.5 * dmin)
            err4 = w2 * w2 / (1920.0 * smin ** 4)
            acc += wgt * (g0 + corr - err4)
            continue
        if (b - a) + (d - c) > 1.0:
            if b - a >= d - c:
                mmid = 0.5 * (a + b)
                w1 = (mmid - a) / (b - a)
                w2 = (b - mmid) / (b - a)
                stk[top, 0] = a
                stk[top, 1] = mmid
                stk[top, 2] = c
                stk[top, 3] = d
                stk[top, 4] = wgt * w1
                top += 1
                stk[top, 0] = mmid
                stk[top, 1] = b
                stk[top, 2] = c
                stk[top, 3] = d
                stk[top, 4] = wgt * w2
                top += 1
            else:
                mmid = 0.5 * (c + d)
                w1 = (mmid - c) / (d - c)
                w2 = (d - mmid) / (d - c)
                stk[top, 0] = a
                stk[top, 1] = b
                stk[top, 2] = c
                stk[top, 3] = mmid
                stk[top, 4] = wgt * w1
                top += 1
                stk[top, 0] = a
                stk[top, 1] = b
                stk[top, 2] = mmid
                stk[top, 3] = d
                stk[top, 4] = wgt * w2
                top += 1
            continue
        ctr = 0.5 * (a + b) - 0.5 * (c + d)
        shift = TWO_PI * np.rint(ctr / TWO_PI)
        val = (_F_nb((b - c) - shift) - _F_nb((b - d) - shift)
               - _F_nb((a - c) - shift) + _F_nb((a - d) - shift))
        acc += wgt * val / ((b - a) * (d - c))
    return acc


@njit(cache=True)
def _cell_matrix_nb(lo, hi):
    n = lo.shape[0]
    P = np.empty((n, n))
    for i in range(n):
        ci = hi[i] - lo[i]
        P[i, i] = LOG2 - 2.0 * _F_nb(ci) / (ci * ci)
        for j in range(i + 1, n):
            v = LOG2 - _pair_mean_g_nb(lo[i], hi[i], lo[j], hi[j])
            P[i, j] = v
            P[j, i] = v
    return P


def _cell_matrix_np(lo, hi):
    n = len(lo)
    # split wide cells first so no pair needs bisection, then aggregate;
    # algebraically identical to the recursive bisection
    plo, phi, own = [], [], []
    for i in range(n):
        w = hi[i] - lo[i]
        parts = max(1, int(math.ceil(w / 0.5)))
        edges = lo[i] + w * np.arange(parts + 1) / parts
        plo.append(edges[:-1])
        phi.append(edges[1:])
        own.append(np.full(parts, i))
    plo = np.concatenate(plo)
    phi = np.concatenate(phi)
    own = np.concatenate(own)
    m = len(plo)
    A, B = plo[:, None], phi[:, None]
    C, D = plo[None, :], phi[None, :]
    ctr = 0.5 * (A + B) - 0.5 * (C + D)
    shift = TWO_PI * np.rint(ctr / TWO_PI)
    G = (_F_np((B - C) - shift) - _F_np((B - D) - shift)
         - _F_np((A - C) - shift) + _F_np((A - D) - shift))
    G /= (B - A) * (D - C)
    widths = phi - plo
    agg = np.zeros((n, m))
    agg[own, np.arange(m)] = widths / (hi - lo)[own]
    P = LOG2 - agg @ G @ agg.T
    # far-pair rescue, same regime and formula as the scalar kernel: the
    # second difference loses all precision when cells are tiny compared
    # with their separation
    wid = hi - lo
    mid = 0.5 * (lo + hi)
    cc = mid[:, None] - mid[None, :]
    cc = cc - TWO_PI * np.rint(cc / TWO_PI)
    ww = wid[:, None] + wid[None, :]
    dmin = np.abs(cc) - 0.5 * ww
    bad = (dmin > 0.0) & (ww <= 1e-2 * dmin)
    if np.any(bad):
        w2 = (wid[:, None] ** 2 + wid[None, :] ** 2)[bad]
        s = np.sin(0.5 * cc[bad])
        g0 = np.log(2.0 * np.abs(s))
        corr = -w2 / (96.0 * s * s)
        err4 = w2 * w2 / (1920.0 * np.sin(0.5 * dmin[bad]) ** 4)
        P[bad] = LOG2 - (g0 + corr - err4)
    return P


def cell_energy_matrix(lo, hi, backend=None) -> np.ndarray:
    """Smeared-kernel energy matrix for cells [lo_i, hi_i] on the circle.

    Entry (i, j) is the exact mean of log(2/|z-w|) over the cell pair, so
    w @ P @ w is the true energy of the measure that spreads weight w_i
    uniformly over cell i.
    """
    lo = np.ascontiguousarray(lo, dtype=float)
    hi = np.ascontiguousarray(hi, dtype=float)
    if lo.shape != hi.shape or lo.ndim != 1:
        raise ValueError("cell bounds must be matching 1-d arrays")
    if not np.all(hi > lo):
        raise ValueError("cells must have positive width")
    if _pick(backend) == "numba":
        return _cell_matrix_nb(lo, hi)
    return _cell_matrix_np(lo, hi)


# ---------------------------------------------------------------------------
# Fekete (minimal discrete energy) coordinate descent
# ---------------------------------------------------------------------------


def _kernel_np(u):
    s = np.abs(np.sin(np.asarray(u, float) / 2.0))
    return -np.log(np.maximum(s, 1e-300))


@njit(cache=True)
def _site_cost_nb(p, i, t):
    s = 0.0
    for k in range(p.shape[0]):
        if k == i:
            continue
        v = abs(math.sin((t - p[k]) * 0.5))
        if v < 1e-300:
            v = 1e-300
        s += -math.log(v)
    return s


@njit(cache=True)
def _fekete_relax_nb(p, cand, arc_lo, arc_len, full_circle, max_sweeps):
    n = p.shape[0]
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    for s in range(max_sweeps):
        improved = False
        for i in range(n):
            cur_cost = _site_cost_nb(p, i, p[i])
            best_t = p[i]
            best_v = cur_cost
            for c in range(cand.shape[0]):
                v = _site_cost_nb(p, i, cand[c])
                if v < best_v:
                    best_v = v
                    best_t = cand[c]
            lo_ = best_t
            hi_ = best_t
            for a in range(arc_lo.shape[0]):
                al = arc_lo[a]
                L = arc_len[a]
                if full_circle or (al - 1e-12 <= best_t <= al + L + 1e-12):
                    w = L / 16.0
                    if full_circle:
                        lo_ = best_t - w
                        hi_ = best_t + w
                    else:
                        lo_ = max(al, best_t - w)
                        hi_ = min(al + L, best_t + w)
                    break
            a_ = lo_
            b_ = hi_
            c_ = b_ - gr * (b_ - a_)
            d_ = a_ + gr * (b_ - a_)
            fc = _site_cost_nb(p, i, c_)
            fd = _site_cost_nb(p, i, d_)
            for _ in range(40):
                if fc < fd:
                    b_ = d_
                    d_ = c_
                    fd = fc
                    c_ = b_ - gr * (b_ - a_)
                    fc = _site_cost_nb(p, i, c_)
                else:
                    a_ = c_
                    c_ = d_
                    fc = fd
                    d_ = a_ + gr * (b_ - a_)
                    fd = _site_cost_nb(p, i, d_)
            t_best = 0.5 * (a_ + b_)
            if _site_cost_nb(p, i, t_best) < cur_cost - 1e-10:
                p[i] = t_best
                improved = True
        if not improved:
            return s + 1
    return max_sweeps


def _fekete_relax_np(p, cand, arc_lo, arc_len, full_circle, max_sweeps):
    n = len(p)
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    for s in range(max_sweeps):
        improved = False
        for i in range(n):
            others = np.delete(p, i)

            def cost(t):
                return float(_kernel_np(t - others).sum())

            cur_cost = cost(p[i])
            vals = _kernel_np(cand[:, None] - others[None, :]).sum(1)
            j = int(np.argmin(vals))
            if vals[j] < cur_cost:
                best_t = float(cand[j])
            else:
                best_t = float(p[i])
            lo_ = hi_ = best_t
            for al, L in zip(arc_lo, arc_len):
                if full_circle or (al - 1e-12 <= best_t <= al + L + 1e-12):
                    w = L / 16.0
                    if full_circle:
                        lo_, hi_ = best_t - w, best_t + w
                    else:
                        lo_, hi_ = max(al, best_t - w), min(al + L, best_t + w)
                    break
            a_, b_ = lo_, hi_
            c_ = b_ - gr * (b_ - a_)
            d_ = a_ + gr * (b_ - a_)
            fc, fd = cost(c_), cost(d_)
            for _ in range(40):
                if fc < fd:
                    b_, d_, fd = d_, c_, fc
                    c_ = b_ - gr * (b_ - a_)
                    fc = cost(c_)
                else:
                    a_, c_, fc = c_, d_, fd
                    d_ = a_ + gr * (b_ - a_)
                    fd = cost(d_)
            t_best = 0.5 * (a_ + b_)
            if cost(t_best) < cur_cost - 1e-10:
                p[i] = t_best
                improved = True
        if not improved:
            return s + 1
    return max_sweeps


def fekete_relax(p, cand, arc_lo, arc_len, full_circle, max_sweeps=40,
                 backend=None):
    """Coordinate-descent sweeps on a point configuration.

    Each site scans the candidate grid, then golden-section refines
    inside the home arc of the best candidate; a move must improve that
    site's energy by more than 1e-10, below which summation noise over
    hundreds of pair terms would keep sweeps alive forever.  Returns
    (points, sweeps_run); the input array is not modified.
    """
    p = np.array(p, dtype=float)
    cand = np.ascontiguousarray(cand, dtype=float)
    arc_lo = np.ascontiguousarray(arc_lo, dtype=float)
    arc_len = np.ascontiguousarray(arc_len, dtype=float)
    if _pick(backend) == "numba":
        sweeps = int(_fekete_relax_nb(p, cand, arc_lo, arc_len,
                                      bool(full_circle), int(max_sweeps)))
    else:
        sweeps = int(_fekete_relax_np(p, cand, arc_lo, arc_len,
                                      bool(full_circle), int(max_sweeps)))
    return p, sweeps


def pair_energy(p) -> float:
    """Mean pairwise kernel energy sum_{i != j} K / (n (n-1))."""
    p = np.asarray(p, dtype=float)
    n = len(p)
    if n < 2:
        return math.inf
    K = _kernel_np(p[:, None] - p[None, :])
    np.fill_diagonal(K, 0.0)
    return float(K.sum() / (n * (n - 1)))


# ---------------------------------------------------------------------------
# slit-map (zipper) chain
# ---------------------------------------------------------------------------


@njit(cache=True)
def _step_real_nb(x, b, h, use_mu):
    if use_mu:
        if np.isinf(x):
            xx = -b
        else:
            d = b - x
            if d == 0.0:
                return np.inf
            xx = b * x / d
    else:
        xx = x
    if np.isinf(xx):
        return np.inf
    if abs(xx) > 1e150:
        return xx
    r = math.sqrt(xx * xx + h * h)
    if xx > 0.0:
        return r
    if xx < 0.0:
        return -r
    return 0.0


@njit(cache=True)
def _zipper_chain_nb(samples, probe):
    m = samples.shape[0]
    z0 = samples[0]
    z1 = samples[1]
    cur = np.empty(m - 2, np.complex128)
    for k in range(m - 2):
        w = (samples[k + 2] - z1) / (samples[k + 2] - z0)
        cur[k] = 1j * np.sqrt(w)
    pr = 1j * np.sqrt((probe - z1) / (probe - z0))
    y = np.empty(m, np.float64)
    for k in range(m):
        y[k] = np.nan
    X0 = np.inf
    tip = 1
    for j in range(2, m):
        a = cur[j - 2]
        p = a.real
        q = a.imag
        if q <= 0.0:
            raise ValueError("slit chain left the upper half-plane; "
                             "boundary is numerically degenerate")
        h = (p * p + q * q) / q
        use_mu = abs(p) > 1e-300
        if use_mu:
            b = (p * p + q * q) / p
        else:
            b = 0.0
        for k in range(j - 1, m - 2):
            w = cur[k]
            if use_mu:
                w = b * w / (b - w)
            sroot = np.sqrt(w * w + h * h)
            if w.real < 0.0:
                sroot = -sroot
            if sroot.imag < 0.0:
                sroot = -sroot
            cur[k] = sroot
        if use_mu:
            wp = b * pr / (b - pr)
        else:
            wp = pr
        sp = np.sqrt(wp * wp + h * h)
        if wp.real < 0.0:
            sp = -sp
        if sp.imag < 0.0:
            sp = -sp
        pr = sp
        for k in range(m):
            if not np.isnan(y[k]):
                y[k] = _step_real_nb(y[k], b, h, use_mu)
        X0 = _step_real_nb(X0, b, h, use_mu)
        y[tip] = -h
        tip = j
    return y, X0, pr, tip


def _zipper_chain_np(samples, probe):
    m = len(samples)
    z0, z1 = samples[0], samples[1]
    cur = 1j * np.sqrt((samples[2:] - z1) / (samples[2:] - z0))
    pr = complex(1j * np.sqrt((probe - z1) / (probe - z0)))
    y = np.full(m, np.nan)
    X0 = np.inf
    tip = 1
    for j in range(2, m):
        a = cur[j - 2]
        p, q = a.real, a.imag
        if q <= 0.0:
            raise ValueError("slit chain left the upper half-plane; "
                             "boundary is numerically degenerate")
        h = (p * p + q * q) / q
        use_mu = abs(p) > 1e-300
        b = (p * p + q * q) / p if use_mu else 0.0
        w = cur[j - 1:]
        if use_mu:
            w = b * w / (b - w)
        s = np.sqrt(w * w + h * h)
        s = np.where(w.real < 0.0, -s, s)
        s = np.where(s.imag < 0.0, -s, s)
        cur[j - 1:] = s
        wp = b * pr / (b - pr) if use_mu else pr
        sp = complex(np.sqrt(wp * wp + h * h))
        if wp.real < 0.0:
            sp = -sp
        if sp.imag < 0.0:
            sp = -sp
        pr = sp
        mask = ~np.isnan(y)
        if mask.any():
            x = y[mask]
            if use_mu:
                d = b - x
                safe = np.where(d == 0.0, 1.0, d)
                xx = np.where(np.isinf(x), -b,
                              np.where(d == 0.0, np.inf, b * x / safe))
            else:
                xx = x
            big = np.abs(xx) > 1e150
            with np.errstate(over="ignore", invalid="ignore"):
                r = np.sqrt(xx * xx + h * h)
            out = np.where(big | np.isinf(xx), xx,
                           np.where(xx > 0.0, r, np.where(xx < 0.0, -r, 0.0)))
            out = np.where(np.isinf(xx), np.inf, out)
            y[mask] = out
        if use_mu:
            dX = b - X0
            if np.isinf(X0):
                xxX = -b
            elif dX == 0.0:
                xxX = np.inf
            else:
                xxX = b * X0 / dX
        else:
            xxX = X0
        if np.isinf(xxX):
            X0 = np.inf
        elif abs(xxX) > 1e150:
            X0 = xxX
        else:
            rX = math.sqrt(xxX * xxX + h * h)
            X0 = rX if xxX > 0.0 else (-rX if xxX < 0.0 else 0.0)
        y[tip] = -h
        tip = j
    return y, X0, pr, tip


def zipper_chain(samples, probe, backend=None):
    """Run the slit-map chain on complex boundary samples.

    Returns (y, X0, probe_image, tip): y[k] is the real-line image of
    sample k for k not in {0, tip} (np.inf allowed), X0 the image of
    sample 0, probe_image the half-plane image of the probe point, and
    tip the index of the sample sitting at the origin.
    """
    samples = np.ascontiguousarray(samples, dtype=complex)
    if len(samples) < 3:
        raise ValueError("need at least 3 boundary samples")
    if _pick(backend) == "numba":
        y, X0, pr, tip = _zipper_chain_nb(samples, complex(probe))
    else:
        y, X0, pr, tip = _zipper_chain_np(samples, complex(probe))
    return y, float(X0), complex(pr), int(tip)


def warmup(backend=None):
    """Compile (numba) or touch (numpy) each kernel on tiny inputs."""
    b = _pick(backend)
    cell_energy_matrix(np.array([0.0, 2.0]), np.array([1.0, 3.0]), backend=b)
    p = np.array([0.1, 2.0, 4.0])
    fekete_relax(p, np.array([1.0, 3.0]), np.array([0.0]),
                 np.array([TWO_PI]), True, max_sweeps=1, backend=b)
    sq = np.array([1 + 1j, 1j, -1 + 1j, -1 - 1j, 1 - 1j], dtype=complex)
    zipper_chain(sq, 0.0, backend=b)
    return b
