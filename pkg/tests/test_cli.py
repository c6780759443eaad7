import math

import numpy as np
import pytest

from weldlab.capacity import ArcSet, equilibrium_measure
from weldlab.circle_homeo import CircleHomeo
from weldlab.cli import (RunReport, CheckLine, deserialize, dispatch,
                         export_plot_table, main, serialize, _perturbed)
from weldlab.equivariant import (EquivariantSpec, build_equivariant_homeo,
                                 functional_equation_residual)
from weldlab.logsingular import build_log_singular
from weldlab.moebius import MoebiusMap, parabolic_disk
from weldlab.welding import PolygonCurve, welding_of_curve

TWO_PI = 2.0 * math.pi

SQUARE = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])
PENT = np.array([2.1 + 0j, 0.3 + 1.8j, -1.7 + 1.1j, -1.4 - 1.2j, 0.8 - 1.9j])


@pytest.fixture(scope="module")
def square_poly(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "square.poly"
    serialize(PolygonCurve(SQUARE), path)
    return str(path)


@pytest.fixture(scope="module")
def pent_poly(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "pent.poly"
    serialize(PolygonCurve(PENT), path)
    return str(path)


@pytest.fixture(scope="module")
def circle_poly(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "circle256.poly"
    serialize(PolygonCurve(np.exp(1j * TWO_PI * np.arange(256) / 256)), path)
    return str(path)


def test_homeo_round_trip_bit_exact(tmp_path):
    h = build_log_singular((0.0, math.pi), (0.5, 2.5), 2).h
    path = tmp_path / "w.ch"
    serialize(h, path)
    back = deserialize(path)
    assert np.array_equal(back.theta, h.theta)
    assert np.array_equal(back.psi, h.psi)


def test_homeo_file_tolerates_comments(tmp_path):
    path = tmp_path / "w.ch"
    serialize(CircleHomeo.identity(), path)
    text = path.read_text()
    path.write_text("# banner\n" + text.replace(
        "CIRCLEHOMEO 1", "CIRCLEHOMEO 1  # header"))
    assert isinstance(deserialize(path), CircleHomeo)


def test_measure_round_trip_bit_exact(tmp_path):
    mu, _ = equilibrium_measure(ArcSet([(0.5, 2.0), (3.0, 4.0)]), 64)
    path = tmp_path / "m.measure"
    serialize(mu, path)
    back = deserialize(path)
    assert np.array_equal(back.support, mu.support)
    assert np.array_equal(back.weights, mu.weights)
    assert abs(back.weights.sum() - 1.0) <= 1e-15


def test_polygon_round_trip_bit_exact(tmp_path):
    P = PolygonCurve(PENT)
    path = tmp_path / "p.poly"
    serialize(P, path)
    back = deserialize(path)
    assert np.array_equal(back.vertices, P.vertices)
    assert back.signed_area() > 0


def test_samples_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    zs = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    ws = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    path = tmp_path / "s.samples"
    serialize(list(zip(zs, ws)), path)
    back = deserialize(path)
    assert all(a == z and b == w
               for (a, b), z, w in zip(back, zs, ws))


def test_serialize_rejects_unknown_types(tmp_path):
    with pytest.raises(ValueError):
        serialize(object(), tmp_path / "x")


def test_deserialize_rejects_malformed(tmp_path):
    bad = tmp_path / "bad"
    bad.write_text("GARBAGE 1\n1 2\n")
    with pytest.raises(ValueError):
        deserialize(bad)
    empty = tmp_path / "empty"
    empty.write_text("# nothing but comments\n")
    with pytest.raises(ValueError):
        deserialize(empty)
    short = tmp_path / "short"
    short.write_text("MEASURE 1 3\n0.0 1.0\n")
    with pytest.raises(ValueError):
        deserialize(short)


def test_plot_table_identity(tmp_path):
    grid = np.linspace(0.0, TWO_PI, 8, endpoint=False)
    path = tmp_path / "t.dat"
    export_plot_table(CircleHomeo.identity(), grid, path)
    rows = [ln.split() for ln in path.read_text().splitlines()
            if not ln.startswith("#")]
    assert len(rows) == 8
    assert all(a == b for a, b in rows)


def test_plot_table_monotone_staircase(tmp_path):
    h = build_log_singular((0.0, math.pi), (0.0, math.pi), 6).h
    grid = np.linspace(0.0, TWO_PI, 512, endpoint=False)
    path = tmp_path / "t.dat"
    export_plot_table(h, grid, path)
    vals = [float(ln.split()[1]) for ln in path.read_text().splitlines()
            if not ln.startswith("#")]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def _boundary(mob, theta):
    z = np.exp(1j * np.asarray(theta, dtype=float))
    w = (mob.a * z + mob.b) / (mob.c * z + mob.d)
    return np.angle(w) % TWO_PI


def test_plot_table_residual_profile(tmp_path):
    spec = EquivariantSpec(a=1.0, b=2.0, seed_depth=2, N=6)
    W = _perturbed(build_equivariant_homeo(spec), 0.01)
    grid = np.linspace(0.0, TWO_PI, 2000, endpoint=False)
    sigma, tau = parabolic_disk(1.0), parabolic_disk(2.0)
    assert functional_equation_residual(W, sigma, tau, grid) >= 1e-3
    d = np.abs(np.asarray(W.evaluate_mod(_boundary(sigma, grid)))
               - _boundary(tau, np.asarray(W.evaluate_mod(grid)))) % TWO_PI
    prof = np.minimum(d, TWO_PI - d)
    path = tmp_path / "r.dat"
    export_plot_table(prof, grid, path)
    vals = [float(ln.split()[1]) for ln in path.read_text().splitlines()
            if not ln.startswith("#")]
    assert max(vals) >= 1e-3


def test_plot_table_shape_mismatch(tmp_path):
    with pytest.raises(ValueError):
        export_plot_table(np.zeros(3), np.zeros(4), tmp_path / "x")


def test_cap_report_deterministic(capsys):
    code = main(["cap", "--arc", "0:3.14159", "--points", "64"])
    first = capsys.readouterr().out
    assert code == 0
    assert main(["cap", "--arc", "0:3.14159", "--points", "64"]) == 0
    assert capsys.readouterr().out == first
    infos = dict(ln[5:].split(" ", 1) for ln in first.splitlines()
                 if ln.startswith("INFO "))
    assert float(infos["capacity_lower"]) <= float(infos["capacity_upper"])


def test_cap_digest_tracks_inputs(capsys):
    main(["cap", "--arc", "0:1.0", "--points", "32"])
    a = capsys.readouterr().out
    main(["cap", "--arc", "0:1.0", "--points", "32"])
    b = capsys.readouterr().out
    main(["cap", "--arc", "0:1.0", "--points", "48"])
    c = capsys.readouterr().out
    digest = [ln for ln in a.splitlines() if ln.startswith("INPUT")]
    assert digest == [ln for ln in b.splitlines() if ln.startswith("INPUT")]
    assert digest != [ln for ln in c.splitlines() if ln.startswith("INPUT")]


def test_cap_writes_equilibrium_measure(tmp_path, capsys):
    out = tmp_path / "eq.measure"
    assert main(["cap", "--arc", "1.0:2.5", "--points", "48",
                 "--out", str(out)]) == 0
    capsys.readouterr()
    mu = deserialize(out)
    assert abs(mu.weights.sum() - 1.0) <= 1e-15
    E = ArcSet([(1.0, 2.5)])
    assert all(E.contains(t) for t in mu.support)


def test_logsingular_deep_request_reports_honest_failure(capsys):
    code = main(["logsingular", "--depth", "6", "--check-points", "32"])
    out = capsys.readouterr().out
    assert code == 1
    assert "CHECK depth_achieved 2 6 FAIL" in out
    stage_lines = [ln for ln in out.splitlines()
                   if ln.startswith("CHECK stage")]
    assert stage_lines and all(ln.endswith("PASS") for ln in stage_lines)


def test_logsingular_writes_homeo(tmp_path, capsys):
    out = tmp_path / "w.ch"
    code = main(["logsingular", "--depth", "2", "--check-points", "32",
                 "--out", str(out)])
    capsys.readouterr()
    assert code == 0
    h = deserialize(out)
    assert isinstance(h, CircleHomeo)
    assert h.evaluate(0.0) == 0.0


def test_equivariant_check_and_artifact(tmp_path, capsys):
    out = tmp_path / "W.ch"
    code = main(["equivariant", "--a", "1", "--b", "2", "--depth", "3",
                 "--orbits", "8", "--grid", "4000", "--check",
                 "--out", str(out)])
    text = capsys.readouterr().out
    assert code == 0
    assert "CHECK residual_at_breakpoints 0 " in text
    assert isinstance(deserialize(out), CircleHomeo)


def test_equivariant_perturbation_detector(capsys):
    code = main(["equivariant", "--a", "1", "--b", "2", "--depth", "3",
                 "--orbits", "8", "--grid", "4000", "--perturb", "0.01"])
    text = capsys.readouterr().out
    assert code == 0
    line = [ln for ln in text.splitlines()
            if ln.startswith("CHECK perturbation_detected")][0]
    assert line.endswith("PASS")
    assert float(line.split()[2]) > 1e-3


def test_weld_selftest_square(square_poly, capsys):
    # corner maps converge slowly: the deviation is 1.6e-2 at resolution
    # 512 and 6.4e-3 at 2048, so the default budget needs the fine run
    code = main(["weld", "--polygon", square_poly, "--resolution", "2048",
                 "--selftest"])
    text = capsys.readouterr().out
    assert code == 0
    assert "n_gon_symmetry" in text


def test_weld_selftest_sixteen_gon_tight(tmp_path, capsys):
    path = tmp_path / "gon16.poly"
    serialize(PolygonCurve(np.exp(1j * TWO_PI * np.arange(16) / 16)), path)
    code = main(["weld", "--polygon", str(path), "--resolution", "512",
                 "--selftest", "--tol", "1e-3"])
    capsys.readouterr()
    assert code == 0  # measured deviation 6.0e-04


def test_weld_selftest_refinement_branch(pent_poly, capsys):
    code = main(["weld", "--polygon", pent_poly, "--resolution", "1024",
                 "--selftest"])
    text = capsys.readouterr().out
    assert code == 0
    assert "refinement_consistency" in text  # measured 8.4e-03


def test_weld_artifact_byte_deterministic(square_poly, tmp_path, capsys):
    out1, out2 = tmp_path / "a.ch", tmp_path / "b.ch"
    assert main(["weld", "--polygon", square_poly, "--resolution", "256",
                 "--out", str(out1)]) == 0
    assert main(["weld", "--polygon", square_poly, "--resolution", "256",
                 "--out", str(out2)]) == 0
    capsys.readouterr()
    assert out1.read_bytes() == out2.read_bytes()


def test_weld_rejects_wrong_file_kind(square_poly, tmp_path, capsys):
    h = tmp_path / "w.ch"
    serialize(CircleHomeo.identity(), h)
    assert main(["weld", "--polygon", str(h)]) == 2
    capsys.readouterr()


def test_compare_same_file_is_equivalent(square_poly, tmp_path, capsys):
    h = welding_of_curve(PolygonCurve(SQUARE), 512)
    path = tmp_path / "sq.ch"
    serialize(h, path)
    assert main(["compare", str(path), str(path)]) == 0
    assert "CHECK welding_equivalent" in capsys.readouterr().out


def test_compare_finds_roll_witness(tmp_path, capsys):
    p1 = tmp_path / "pent.ch"
    p2 = tmp_path / "pent_rolled.ch"
    serialize(welding_of_curve(PolygonCurve(PENT), 1024), p1)
    serialize(welding_of_curve(PolygonCurve(np.roll(PENT, -2)), 1024), p2)
    assert main(["compare", str(p1), str(p2)]) == 0
    capsys.readouterr()


def test_compare_reports_no_witness(tmp_path, capsys):
    p1 = tmp_path / "sq.ch"
    p2 = tmp_path / "pent.ch"
    serialize(welding_of_curve(PolygonCurve(SQUARE), 512), p1)
    serialize(welding_of_curve(PolygonCurve(PENT), 512), p2)
    assert main(["compare", str(p1), str(p2), "--tol", "1e-3"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_detect_exact_moebius_samples(tmp_path, capsys):
    zs = np.exp(1j * np.linspace(0.05, TWO_PI - 0.05, 32))
    mm = MoebiusMap(2.0 + 1j, 0.5, 0.1j, 1.0)
    path = tmp_path / "good.samples"
    serialize([(z, mm.apply(z)) for z in zs], path)
    assert main(["detect", str(path)]) == 0
    capsys.readouterr()


def test_detect_flags_piecewise_translations(tmp_path, capsys):
    inner = 0.3 * np.exp(1j * TWO_PI * np.arange(12) / 12)
    outer = 3.5 * np.exp(1j * TWO_PI * np.arange(12) / 12)
    path = tmp_path / "trans.samples"
    serialize([(z, z + 1.0) for z in inner]
              + [(z, z + 2.0) for z in outer], path)
    assert main(["detect", str(path), "--tol", "0.01"]) == 1
    text = capsys.readouterr().out
    line = [ln for ln in text.splitlines()
            if ln.startswith("CHECK moebius_residual")][0]
    assert float(line.split()[2]) >= 0.2  # measured 0.500


def test_assemble_circle_parabolics(circle_poly, capsys):
    assert main(["assemble", "--polygon", circle_poly, "--resolution", "512",
                 "--sigma", "parabolic:1", "--tau", "parabolic:1"]) == 0
    capsys.readouterr()
    assert main(["assemble", "--polygon", circle_poly, "--resolution", "512",
                 "--sigma", "parabolic:1", "--tau", "parabolic:2"]) == 1
    capsys.readouterr()


def test_assemble_report_out_matches_stdout(circle_poly, tmp_path, capsys):
    out = tmp_path / "report.txt"
    main(["assemble", "--polygon", circle_poly, "--resolution", "256",
          "--sigma", "rotation:0.4", "--tau", "rotation:0.4",
          "--out", str(out)])
    stdout = capsys.readouterr().out
    assert out.read_text() == stdout


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as e:
        dispatch(["frobnicate"])
    assert e.value.code == 2
    assert main(["detect", "/nonexistent/samples"]) == 2
    assert main(["assemble", "--polygon", "/nonexistent.poly"]) == 2
    capsys.readouterr()


def test_report_exit_status_matches_checks():
    rep = RunReport("x", "d", (), (CheckLine("a", 0.0, 1.0, True),))
    assert rep.status == 0
    rep = RunReport("x", "d", (), (CheckLine("a", 2.0, 1.0, False),))
    assert rep.status == 1
    assert rep.text().endswith("STATUS 1\n")
