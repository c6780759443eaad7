"""Command-line driver and line-oriented artifact formats.

Every command prints a plain-text run report and exits 0 only if all of
its checks pass; a failed check exits 1 and a malformed invocation or
unreadable input exits 2.  Reports and data files are byte-deterministic
for fixed inputs and seed: floats are written with 17 significant
digits, which round-trips IEEE doubles exactly.

Data files are UTF-8, one record per line, `#` starts a comment:

    CIRCLEHOMEO 1        breakpoint pairs `<theta> <psi>`
    MEASURE 1 <n>        atom lines `<theta> <weight>`
    POLYGON 1 <n>        vertex lines `<x> <y>`
    SAMPLES 1 <n>        map samples `<z_re> <z_im> <w_re> <w_im>`
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from dataclasses import dataclass

import numpy as np

from .capacity import (ArcSet, DiscreteMeasure, arc_capacity_closed_form,
                       capacity_estimate, equilibrium_measure)
from .circle_homeo import CircleHomeo, circle_distance, sup_distance
from .equivariant import (EquivariantSpec, build_equivariant_homeo,
                          functional_equation_residual, orbit_arcs)
from .logsingular import build_log_singular, certificate_check, \
    convergence_profile
from .moebius import DiskAutomorphism, parabolic_boundary_angle, \
    parabolic_disk
from .welding import (PolygonCurve, assemble_piecewise_map, exterior_map,
                      interior_map, mobius_fit_residual, welding_equivalence,
                      welding_of_curve)

TWO_PI = 2.0 * math.pi

__all__ = ["CheckLine", "RunReport", "serialize", "deserialize",
           "export_plot_table", "dispatch", "main"]


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _fmt_complex(z) -> str:
    z = complex(z)
    sign = "+" if z.imag >= 0 else "-"
    return f"{_fmt(z.real)}{sign}{_fmt(abs(z.imag))}j"


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class CheckLine:
    """One pass/fail judgement: `passed` states whether `value` met
    `budget` in the direction the check's name implies."""

    name: str
    value: float
    budget: float
    passed: bool


@dataclass(frozen=True)
class RunReport:
    """Deterministic text summary of one command invocation."""

    command: str
    digest: str
    infos: tuple
    checks: tuple

    @property
    def status(self) -> int:
        return 0 if all(c.passed for c in self.checks) else 1

    def text(self) -> str:
        lines = ["WELDLAB REPORT 1",
                 f"COMMAND {self.command}",
                 f"INPUT {self.digest}"]
        lines += [f"INFO {name} {value}" for name, value in self.infos]
        lines += [f"CHECK {c.name} {_fmt(c.value)} {_fmt(c.budget)} "
                  f"{'PASS' if c.passed else 'FAIL'}" for c in self.checks]
        lines.append(f"STATUS {self.status}")
        return "\n".join(lines) + "\n"


def _digest(items) -> str:
    blob = "\n".join(f"{k}={v}" for k, v in items).encode()
    return hashlib.sha256(blob).hexdigest()


def _file_digest(path) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


# ---------------------------------------------------------------------------
# serialization


def _write_text(path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _data_lines(path):
    with open(path, "r", encoding="utf-8") as f:
        for raw in f:
            line = raw.split("#", 1)[0].strip()
            if line:
                yield line


def serialize(obj, path) -> None:
    """Write a CircleHomeo, DiscreteMeasure, PolygonCurve, Moebius sample
    list, or RunReport in its line format; round-trips bit-exactly."""
    if isinstance(obj, CircleHomeo):
        rows = [f"{_fmt(t)} {_fmt(p)}" for t, p in zip(obj.theta, obj.psi)]
        _write_text(path, "\n".join(["CIRCLEHOMEO 1"] + rows) + "\n")
    elif isinstance(obj, DiscreteMeasure):
        rows = [f"{_fmt(t)} {_fmt(w)}"
                for t, w in zip(obj.support, obj.weights)]
        _write_text(path, "\n".join([f"MEASURE 1 {len(obj.support)}"] + rows)
                    + "\n")
    elif isinstance(obj, PolygonCurve):
        rows = [f"{_fmt(v.real)} {_fmt(v.imag)}" for v in obj.vertices]
        _write_text(path, "\n".join([f"POLYGON 1 {len(obj)}"] + rows) + "\n")
    elif isinstance(obj, RunReport):
        _write_text(path, obj.text())
    elif isinstance(obj, (list, tuple)):
        rows = [f"{_fmt(z.real)} {_fmt(z.imag)} {_fmt(w.real)} {_fmt(w.imag)}"
                for z, w in ((complex(z), complex(w)) for z, w in obj)]
        _write_text(path, "\n".join([f"SAMPLES 1 {len(rows)}"] + rows) + "\n")
    else:
        raise ValueError(f"no serialization for {type(obj).__name__}")


def deserialize(path):
    """Read any data file written by `serialize`, detected by header."""
    lines = list(_data_lines(path))
    if not lines:
        raise ValueError(f"{path}: empty data file")
    head = lines[0].split()
    kind = head[0]
    if kind == "CIRCLEHOMEO":
        pairs = [tuple(map(float, ln.split())) for ln in lines[1:]]
        if not pairs or any(len(p) != 2 for p in pairs):
            raise ValueError(f"{path}: malformed breakpoint lines")
        th, ps = zip(*pairs)
        return CircleHomeo(np.array(th), np.array(ps))
    if kind == "MEASURE":
        n = int(head[2])
        rows = [tuple(map(float, ln.split())) for ln in lines[1:]]
        if len(rows) != n or any(len(r) != 2 for r in rows):
            raise ValueError(f"{path}: expected {n} atom lines")
        sup, w = zip(*rows)
        return DiscreteMeasure(np.array(sup), np.array(w))
    if kind == "POLYGON":
        n = int(head[2])
        rows = [tuple(map(float, ln.split())) for ln in lines[1:]]
        if len(rows) != n or any(len(r) != 2 for r in rows):
            raise ValueError(f"{path}: expected {n} vertex lines")
        return PolygonCurve(np.array([complex(x, y) for x, y in rows]))
    if kind == "SAMPLES":
        n = int(head[2])
        rows = [tuple(map(float, ln.split())) for ln in lines[1:]]
        if len(rows) != n or any(len(r) != 4 for r in rows):
            raise ValueError(f"{path}: expected {n} four-column lines")
        return [(complex(a, b), complex(c, d)) for a, b, c, d in rows]
    raise ValueError(f"{path}: unknown header {kind!r}")


def export_plot_table(obj, grid, path) -> None:
    """Two-column angle/value table for external plotting.

    A CircleHomeo is tabulated through its lift; an array is written
    verbatim against the grid (a residual profile, say).
    """
    grid = np.asarray(grid, dtype=float)
    if isinstance(obj, CircleHomeo):
        vals = np.asarray(obj.evaluate(grid))
    else:
        vals = np.asarray(obj, dtype=float)
        if vals.shape != grid.shape:
            raise ValueError("value array must match the grid")
    rows = [f"{_fmt(t)} {_fmt(v)}" for t, v in zip(grid, vals)]
    _write_text(path, "\n".join(["# angle value"] + rows) + "\n")


# ---------------------------------------------------------------------------
# flag parsing helpers


def _parse_interval(s: str):
    try:
        a, b = s.split(":")
        return float(a), float(b)
    except ValueError:
        raise ValueError(f"expected '<a>:<b>', got {s!r}") from None


def _parse_automorphism(s: str):
    kind, _, rest = s.partition(":")
    try:
        if kind == "identity":
            return DiskAutomorphism.identity()
        if kind == "rotation":
            return DiskAutomorphism(float(rest), 0j)
        if kind == "parabolic":
            return parabolic_disk(float(rest))
        if kind == "disk":
            alpha, re, im = rest.split(",")
            return DiskAutomorphism(float(alpha),
                                    complex(float(re), float(im)))
    except (TypeError, ValueError):
        raise ValueError(f"malformed automorphism spec {s!r}") from None
    raise ValueError(
        f"unknown automorphism kind {kind!r}; use identity, "
        "rotation:<alpha>, parabolic:<t>, or disk:<alpha>,<re>,<im>")


# ---------------------------------------------------------------------------
# commands


def _cmd_cap(args):
    if args.arc:
        E = ArcSet([_parse_interval(s) for s in args.arc])
    else:
        E = ArcSet.full_circle()
    tol = 0.05 if args.tol is None else args.tol
    est = capacity_estimate(E, args.points)
    infos = [("n_points", str(args.points)),
             ("arcs", ";".join(f"{_fmt(a)}:{_fmt(b)}" for a, b in E.arcs)),
             ("capacity_lower", _fmt(est.lower)),
             ("capacity_upper", _fmt(est.upper)),
             ("energy_at_optimum", _fmt(est.energy_at_optimum)),
             ("converged", "yes" if est.converged else "no")]
    if len(E.arcs) == 1:
        infos.append(("closed_form",
                      _fmt(arc_capacity_closed_form(E.total_length()))))
    checks = [
        CheckLine("bracket_valid", est.upper - est.lower, 0.0,
                  est.upper >= est.lower),
        CheckLine("bracket_halfwidth", est.tolerance, tol,
                  est.tolerance <= tol),
    ]
    digest = _digest([("command", "cap"), ("arcs", infos[1][1]),
                      ("points", args.points), ("seed", args.seed),
                      ("tol", tol)])
    if args.out:
        mu, _ = equilibrium_measure(E, args.points)
        serialize(mu, args.out)
    return RunReport("cap", digest, tuple(infos), tuple(checks))


def _cmd_logsingular(args):
    I = _parse_interval(args.domain)
    J = _parse_interval(args.image)
    m = build_log_singular(I, J, args.depth)
    rep = certificate_check(m, args.check_points)
    infos = [("requested_depth", str(args.depth)),
             ("achieved_depth", str(m.depth)),
             ("partial", "yes" if m.partial else "no"),
             ("exceptional_set_bound", _fmt(m.exceptional_set_bound)),
             ("tail_bound", _fmt(rep.tail_bound))]
    checks = [CheckLine(f"stage{e.stage}_{e.kind}", e.upper,
                        e.budget * 1.05, e.passed) for e in rep.entries]
    checks.append(CheckLine("depth_achieved", m.depth, args.depth,
                            not m.partial))
    if m.depth >= 2:
        prof = convergence_profile(m)
        infos.append(("convergence_profile",
                      ";".join(_fmt(p) for p in prof)))
        if len(prof) >= 2:
            worst = max(b - a for a, b in zip(prof, prof[1:]))
            checks.append(CheckLine("profile_decreasing", worst, 0.0,
                                    worst < 0.0))
    digest = _digest([("command", "logsingular"),
                      ("domain", args.domain), ("image", args.image),
                      ("depth", args.depth),
                      ("check_points", args.check_points),
                      ("seed", args.seed)])
    if args.out:
        serialize(m.h, args.out)
    if args.plot_table:
        grid = np.linspace(0.0, TWO_PI, 2048, endpoint=False)
        export_plot_table(m.h, grid, args.plot_table)
    return RunReport("logsingular", digest, tuple(infos), tuple(checks))


def _perturbed(W: CircleHomeo, amount: float) -> CircleHomeo:
    """Bump one interior breakpoint value, dropping any successors the
    bump overtakes so the result stays a homeomorphism."""
    th = np.array(W.theta)
    ps = np.array(W.psi)
    i = int(np.searchsorted(th, math.pi + 0.4))
    ps[i] += amount
    keep = np.ones(len(th), dtype=bool)
    j = i + 1
    while j < len(th) and ps[j] <= ps[i]:
        keep[j] = False
        j += 1
    return CircleHomeo(th[keep], ps[keep])


def _cmd_equivariant(args):
    tol = 1e-6 if args.tol is None else args.tol
    spec = EquivariantSpec(a=args.a, b=args.b, seed_depth=args.depth,
                           N=args.orbits)
    W = build_equivariant_homeo(spec)
    dec = orbit_arcs(spec)
    sigma, tau = parabolic_disk(spec.a), parabolic_disk(spec.b)
    infos = [("a", _fmt(spec.a)), ("b", _fmt(spec.b)),
             ("seed_depth", str(spec.seed_depth)),
             ("orbits", str(spec.N)),
             ("breakpoints", str(len(W.theta))),
             ("coverage_gap", _fmt(max(dec.i_coverage_gap,
                                       dec.j_coverage_gap)))]
    checks = []
    if args.check:
        grid = np.linspace(0.0, TWO_PI, args.grid, endpoint=False)
        r_grid = functional_equation_residual(W, sigma, tau, grid)
        # breakpoint transport reuses the construction's own float path,
        # so forward-chained nodes must agree to the bit
        sig = parabolic_boundary_angle(spec.a, W.theta)
        tau_ps = parabolic_boundary_angle(spec.b, W.psi)
        node_of = {t: i for i, t in enumerate(W.theta.tolist())}
        hits, worst = 0, 0.0
        for k, s in enumerate(sig.tolist()):
            j = node_of.get(s)
            if j is not None:
                hits += 1
                worst = max(worst, abs(float(W.psi[j]) - float(tau_ps[k])))
        gaps = np.diff(dec.i_endpoints)
        infos.append(("transported_node_fraction",
                      _fmt(hits / len(W.theta))))
        checks += [
            CheckLine("residual_off_guard", r_grid, tol, r_grid <= tol),
            CheckLine("residual_at_breakpoints", worst, 1e-10,
                      worst <= 1e-10 and hits > 0),
            CheckLine("orbit_arcs_disjoint", float(gaps.min()), 0.0,
                      bool(np.all(gaps > 0))),
        ]
    if args.perturb is not None:
        broken = _perturbed(W, args.perturb)
        grid = np.linspace(0.0, TWO_PI, args.grid, endpoint=False)
        r = functional_equation_residual(broken, sigma, tau, grid)
        # PASS means the detector fired on the corrupted map
        checks.append(CheckLine("perturbation_detected", r, 1e-3, r > 1e-3))
        if args.plot_table:
            lhs = np.asarray(broken.evaluate_mod(
                _boundary(sigma, grid)))
            rhs = np.asarray(_boundary(tau, broken.evaluate_mod(grid)))
            prof = np.minimum(np.abs(lhs - rhs) % TWO_PI,
                              TWO_PI - np.abs(lhs - rhs) % TWO_PI)
            export_plot_table(prof, grid, args.plot_table)
    elif args.plot_table:
        grid = np.linspace(0.0, TWO_PI, 2048, endpoint=False)
        export_plot_table(W, grid, args.plot_table)
    digest = _digest([("command", "equivariant"), ("a", _fmt(args.a)),
                      ("b", _fmt(args.b)), ("depth", args.depth),
                      ("orbits", args.orbits), ("grid", args.grid),
                      ("perturb", "" if args.perturb is None
                       else _fmt(args.perturb)),
                      ("seed", args.seed), ("tol", tol)])
    if args.out:
        serialize(W, args.out)
    return RunReport("equivariant", digest, tuple(infos), tuple(checks))


def _boundary(mob, theta):
    z = np.exp(1j * np.asarray(theta, dtype=float))
    w = (mob.a * z + mob.b) / (mob.c * z + mob.d)
    return np.angle(w) % TWO_PI


def _regular_ngon_center(P: PolygonCurve):
    """Center of P when it is a regular polygon, else None."""
    c = complex(P.vertices.mean())
    radii = np.abs(P.vertices - c)
    edges = P.edge_lengths()
    scale = float(radii.mean())
    if (np.ptp(radii) <= 1e-9 * scale) and (np.ptp(edges) <= 1e-9 * scale):
        return c
    return None


def _cmd_weld(args):
    P = deserialize(args.polygon)
    if not isinstance(P, PolygonCurve):
        raise ValueError(f"{args.polygon}: not a POLYGON file")
    h = welding_of_curve(P, args.resolution)
    infos = [("polygon", _file_digest(args.polygon)),
             ("vertices", str(len(P))),
             ("resolution", str(args.resolution)),
             ("breakpoints", str(len(h.theta)))]
    checks = []
    if args.selftest:
        center = _regular_ngon_center(P)
        grid = np.linspace(0.0, TWO_PI, 2048, endpoint=False)
        if center is not None:
            # corner singularities slow the symmetry convergence, so the
            # default budget sits above the worst regular-polygon case;
            # --tol tightens it for smooth shapes
            tol = 1e-2 if args.tol is None else args.tol
            rot = TWO_PI / len(P)
            dev = float(np.max(circle_distance(
                h.evaluate_mod(grid + rot),
                (np.asarray(h.evaluate_mod(grid)) + rot) % TWO_PI)))
            checks.append(CheckLine("n_gon_symmetry", dev, tol, dev <= tol))
        else:
            tol = 1e-2 if args.tol is None else args.tol
            coarse = welding_of_curve(P, max(args.resolution // 2, 3))
            dev = sup_distance(coarse, h, grid)
            checks.append(CheckLine("refinement_consistency", dev, tol,
                                    dev <= tol))
    digest = _digest([("command", "weld"),
                      ("polygon", _file_digest(args.polygon)),
                      ("resolution", args.resolution),
                      ("selftest", "yes" if args.selftest else "no"),
                      ("seed", args.seed),
                      ("tol", "" if args.tol is None else _fmt(args.tol))])
    if args.out:
        serialize(h, args.out)
    if args.plot_table:
        grid = np.linspace(0.0, TWO_PI, 2048, endpoint=False)
        export_plot_table(h, grid, args.plot_table)
    return RunReport("weld", digest, tuple(infos), tuple(checks))


def _cmd_compare(args):
    h1 = deserialize(args.homeo1)
    h2 = deserialize(args.homeo2)
    if not (isinstance(h1, CircleHomeo) and isinstance(h2, CircleHomeo)):
        raise ValueError("compare needs two CIRCLEHOMEO files")
    tol = 1e-2 if args.tol is None else args.tol
    ok, A, B = welding_equivalence(h1, h2, tol)
    grid = np.linspace(0.0, TWO_PI, 1024, endpoint=False)
    lhs = B.boundary_angle(np.asarray(h1.evaluate_mod(A.boundary_angle(grid))))
    d = float(np.max(circle_distance(lhs, np.asarray(h2.evaluate_mod(grid)))))
    infos = [("witness_pre_alpha", _fmt(A.alpha)),
             ("witness_pre_w", _fmt_complex(A.w)),
             ("witness_post_alpha", _fmt(B.alpha)),
             ("witness_post_w", _fmt_complex(B.w))]
    # FAIL records that no witness met the budget, not a proof of
    # inequivalence
    checks = [CheckLine("welding_equivalent", d, tol, bool(ok))]
    digest = _digest([("command", "compare"),
                      ("homeo1", _file_digest(args.homeo1)),
                      ("homeo2", _file_digest(args.homeo2)),
                      ("seed", args.seed), ("tol", tol)])
    if args.out:
        _write_text(args.out, RunReport("compare", digest, tuple(infos),
                                        tuple(checks)).text())
    return RunReport("compare", digest, tuple(infos), tuple(checks))


def _cmd_detect(args):
    samples = deserialize(args.samples)
    if not isinstance(samples, list):
        raise ValueError(f"{args.samples}: not a SAMPLES file")
    tol = 1e-8 if args.tol is None else args.tol
    m, r = mobius_fit_residual(samples)
    infos = [("n_samples", str(len(samples))),
             ("fit_a", _fmt_complex(m.a)), ("fit_b", _fmt_complex(m.b)),
             ("fit_c", _fmt_complex(m.c)), ("fit_d", _fmt_complex(m.d))]
    # PASS certifies the samples as Moebius data at this tolerance; FAIL
    # certifies a genuine deviation of at least the reported residual
    checks = [CheckLine("moebius_residual", r, tol, r <= tol)]
    digest = _digest([("command", "detect"),
                      ("samples", _file_digest(args.samples)),
                      ("seed", args.seed), ("tol", tol)])
    if args.out:
        _write_text(args.out, RunReport("detect", digest, tuple(infos),
                                        tuple(checks)).text())
    return RunReport("detect", digest, tuple(infos), tuple(checks))


def _cmd_assemble(args):
    P = deserialize(args.polygon)
    if not isinstance(P, PolygonCurve):
        raise ValueError(f"{args.polygon}: not a POLYGON file")
    sigma = _parse_automorphism(args.sigma)
    tau = _parse_automorphism(args.tau)
    tol = 5e-3 if args.tol is None else args.tol
    fc = interior_map(P, args.resolution)
    gc = exterior_map(P, args.resolution)
    pm = assemble_piecewise_map(fc, gc, sigma, tau)
    infos = [("polygon", _file_digest(args.polygon)),
             ("resolution", str(args.resolution)),
             ("sigma", args.sigma), ("tau", args.tau),
             ("mesh", _fmt(pm.mesh))]
    checks = [CheckLine("boundary_mismatch", pm.mismatch, tol,
                        pm.mismatch <= tol)]
    digest = _digest([("command", "assemble"),
                      ("polygon", _file_digest(args.polygon)),
                      ("resolution", args.resolution),
                      ("sigma", args.sigma), ("tau", args.tau),
                      ("seed", args.seed), ("tol", tol)])
    if args.out:
        _write_text(args.out, RunReport("assemble", digest, tuple(infos),
                                        tuple(checks)).text())
    return RunReport("assemble", digest, tuple(infos), tuple(checks))


# ---------------------------------------------------------------------------
# wiring


def _build_parser():
    top = argparse.ArgumentParser(
        prog="weldlab",
        description="Numerical laboratory for conformal welding of Jordan "
                    "curves.")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write the command's artifact here")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for stochastic restarts (default 0)")
        p.add_argument("--tol", type=float, default=None,
                       help="check budget; default depends on the command")

    p = sub.add_parser("cap", help="capacity bracket of a circular arc set")
    p.add_argument("--arc", action="append",
                   help="arc '<a>:<b>' in radians; repeatable; full circle "
                        "when omitted")
    p.add_argument("--points", type=int, default=256)
    common(p)
    p.set_defaults(func=_cmd_cap)

    p = sub.add_parser("logsingular",
                       help="log-singular circle map with capacity "
                            "certificates")
    p.add_argument("--domain", default=f"0:{math.pi}")
    p.add_argument("--image", default=f"0:{math.pi}")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--check-points", type=int, default=64)
    p.add_argument("--plot-table", help="write an angle/value table here")
    common(p)
    p.set_defaults(func=_cmd_logsingular)

    p = sub.add_parser("equivariant",
                       help="parabolic-equivariant circle homeomorphism")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=2.0)
    p.add_argument("--depth", type=int, default=4,
                   help="refinement depth of the log-singular seed")
    p.add_argument("--orbits", type=int, default=20)
    p.add_argument("--check", action="store_true",
                   help="verify the functional equation")
    p.add_argument("--grid", type=int, default=10000)
    p.add_argument("--perturb", type=float, default=None,
                   help="bump one breakpoint by this much and re-test")
    p.add_argument("--plot-table", help="write an angle/value table here")
    common(p)
    p.set_defaults(func=_cmd_equivariant)

    p = sub.add_parser("weld", help="welding homeomorphism of a polygon")
    p.add_argument("--polygon", required=True, help="POLYGON file")
    p.add_argument("--resolution", type=int, default=1024)
    p.add_argument("--selftest", action="store_true",
                   help="check rotational symmetry (regular polygon) or "
                        "refinement consistency")
    p.add_argument("--plot-table", help="write an angle/value table here")
    common(p)
    p.set_defaults(func=_cmd_weld)

    p = sub.add_parser("compare",
                       help="test two weldings for equivalence modulo disk "
                            "automorphisms")
    p.add_argument("homeo1", help="CIRCLEHOMEO file")
    p.add_argument("homeo2", help="CIRCLEHOMEO file")
    common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("detect",
                       help="Moebius-compatibility residual of map samples")
    p.add_argument("samples", help="SAMPLES file")
    common(p)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("assemble",
                       help="glue conjugated disk automorphisms along a "
                            "polygon")
    p.add_argument("--polygon", required=True, help="POLYGON file")
    p.add_argument("--resolution", type=int, default=1024)
    p.add_argument("--sigma", default="identity",
                   help="identity | rotation:<alpha> | parabolic:<t> | "
                        "disk:<alpha>,<re>,<im>")
    p.add_argument("--tau", default="identity")
    common(p)
    p.set_defaults(func=_cmd_assemble)
    return top


def dispatch(argv) -> RunReport:
    """Parse argv, run the named command, write artifacts, and return
    its report.  Malformed invocations raise SystemExit(2) through
    argparse; unreadable or malformed inputs raise ValueError/OSError."""
    args = _build_parser().parse_args(argv)
    return args.func(args)


def main(argv=None) -> int:
    try:
        report = dispatch(argv)
    except (OSError, ValueError) as e:
        print(f"weldlab: error: {e}", file=sys.stderr)
        return 2
    sys.stdout.write(report.text())
    return report.status
