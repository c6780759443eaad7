import math

import numpy as np
import pytest

from weldlab.capacity import (CAP_MAX, ArcSet, CapacityEstimate,
                              DiscreteMeasure, arc_capacity_closed_form,
                              arc_length_for_capacity, capacity_estimate,
                              discrete_energy, equilibrium_measure,
                              minimal_energy_points)

TWO_PI = 2.0 * math.pi
LOG2 = math.log(2.0)


def test_arcset_normalizes_and_sorts():
    E = ArcSet([(7.0, 7.5), (2.0, 3.0)])
    starts = [a for a, _ in E.arcs]
    assert starts == sorted(starts)
    assert E.contains(7.2) and E.contains(7.2 - TWO_PI)
    assert not E.contains(4.0)


def test_arcset_rejects_bad_input():
    with pytest.raises(ValueError):
        ArcSet([])
    with pytest.raises(ValueError):
        ArcSet([(1.0, 1.0)])
    with pytest.raises(ValueError):
        ArcSet([(0.0, 7.0)])  # longer than the circle
    with pytest.raises(ValueError):
        ArcSet([(0.0, 2.0), (1.5, 3.0)])  # overlap
    with pytest.raises(ValueError):
        ArcSet([(5.0, 7.0), (0.5, 1.0)])  # overlap across the wrap


def test_full_circle_detection():
    assert ArcSet.full_circle().is_full_circle
    assert not ArcSet([(0.0, 3.0)]).is_full_circle


def test_discrete_measure_validation():
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([0.0, 1.0]), np.array([0.7, 0.7]))
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([0.0, 1.0]), np.array([1.5, -0.5]))
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([1.0, 1.0]), np.array([0.5, 0.5]))


def test_discrete_energy_single_atom_infinite():
    mu = DiscreteMeasure(np.array([1.0]), np.array([1.0]))
    assert discrete_energy(mu) == math.inf


def test_discrete_energy_uniform_circle_identity():
    n = 512
    mu = DiscreteMeasure(TWO_PI * np.arange(n) / n, np.full(n, 1.0 / n))
    expect = (n - 1) / n * LOG2 - math.log(n) / n
    assert abs(discrete_energy(mu) - expect) < 1e-12


def test_discrete_energy_nonnegative():
    rng = np.random.default_rng(5)
    for _ in range(10):
        n = rng.integers(2, 30)
        sup = rng.uniform(0, TWO_PI, n)
        if len(np.unique(sup % TWO_PI)) != n:
            continue
        w = rng.uniform(0, 1, n)
        w /= w.sum()
        assert discrete_energy(DiscreteMeasure(sup, w)) >= 0


def test_equilibrium_measure_full_circle_is_uniform():
    mu, f = equilibrium_measure(ArcSet.full_circle(), 128)
    assert abs(f - LOG2) < 1e-12
    np.testing.assert_allclose(mu.weights, 1.0 / 128, atol=1e-14)


def test_equilibrium_measure_support_in_set():
    E = ArcSet([(0.5, 1.5), (3.0, 4.0)])
    mu, f = equilibrium_measure(E, 64)
    assert len(mu.support) == 64
    assert all(E.contains(t) for t in mu.support)
    assert f > 0


def test_equilibrium_measure_endpoint_loading():
    # equilibrium density of an arc blows up at the endpoints
    mu, _ = equilibrium_measure(ArcSet([(0.0, math.pi)]), 64)
    w = mu.weights[np.argsort(mu.support)]
    assert w[0] > w[len(w) // 2]
    assert w[-1] > w[len(w) // 2]


def test_capacity_estimate_full_circle_exact():
    est = capacity_estimate(ArcSet.full_circle(), 256)
    assert est.lower == pytest.approx(CAP_MAX, rel=1e-12)
    assert est.upper == pytest.approx(CAP_MAX, rel=1e-12)
    assert est.energy_at_optimum == pytest.approx(LOG2, rel=1e-12)
    assert est.converged


def test_capacity_estimate_brackets_closed_form():
    for L in (math.pi / 2, math.pi):
        est = capacity_estimate(ArcSet([(0.3, 0.3 + L)]), 128)
        cap = arc_capacity_closed_form(L)
        assert est.lower <= cap * (1 + 1e-9)
        assert cap <= est.upper * (1 + 1e-9)
        assert est.converged


def test_capacity_estimate_invariants():
    for arcs in ([(0.0, 1.0)], [(0.0, 0.8), (2.0, 2.4), (4.0, 5.5)]):
        est = capacity_estimate(ArcSet(arcs), 96)
        assert 0.0 <= est.lower <= est.upper <= CAP_MAX + 1e-9
        assert est.tolerance >= 0.0
        # weak duality: the point-configuration energy sits below the
        # measure energy
        assert 1.0 / est.upper <= est.energy_at_optimum + 1e-9


def test_capacity_monotone_under_inclusion():
    rng = np.random.default_rng(2)
    for _ in range(6):
        a = rng.uniform(0, TWO_PI)
        L = rng.uniform(0.3, 1.5)
        pad = rng.uniform(0.1, 0.5)
        E = ArcSet([(a, a + L)])
        F = ArcSet([(a - pad, a + L + pad)])
        eE = capacity_estimate(E, 64)
        eF = capacity_estimate(F, 64)
        assert eE.lower <= eF.upper + 1e-9


def test_capacity_subadditive():
    E = ArcSet([(0.2, 1.2)])
    F = ArcSet([(2.5, 4.0)])
    U = ArcSet([(0.2, 1.2), (2.5, 4.0)])
    eE = capacity_estimate(E, 96)
    eF = capacity_estimate(F, 96)
    eU = capacity_estimate(U, 96)
    assert eU.lower <= eE.upper + eF.upper + 1e-9


def test_capacity_bracket_gap_shrinks():
    A = ArcSet([(0.0, math.pi)])
    gaps = [capacity_estimate(A, n).tolerance for n in (32, 64, 128)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_capacity_estimate_rejects_tiny_n():
    with pytest.raises(ValueError):
        capacity_estimate(ArcSet.full_circle(), 1)


def test_estimate_invariant_enforced():
    with pytest.raises(ValueError):
        CapacityEstimate(lower=0.5, upper=0.4, energy_at_optimum=1.0,
                         iterations=1, converged=True)
    with pytest.raises(ValueError):
        CapacityEstimate(lower=0.5, upper=2.0, energy_at_optimum=1.0,
                         iterations=1, converged=True)


def test_minimal_energy_points_antipodal():
    p, e = minimal_energy_points(ArcSet.full_circle(), 2)
    assert abs(e) < 1e-12
    d = abs(p[1] - p[0])
    assert abs(d - math.pi) < 1e-9


def test_minimal_energy_points_square():
    _, e = minimal_energy_points(ArcSet.full_circle(), 4)
    assert abs(e - LOG2 / 3.0) < 1e-6


def test_minimal_energy_nondecreasing_in_n():
    A = ArcSet([(0.0, math.pi)])
    es = [minimal_energy_points(A, n)[1] for n in (4, 8, 16, 32)]
    assert all(a < b for a, b in zip(es, es[1:]))


def test_minimal_energy_points_stay_in_set():
    E = ArcSet([(0.5, 1.5), (3.0, 4.5)])
    p, _ = minimal_energy_points(E, 12, restarts=2)
    assert all(E.contains(t) for t in p)


def test_minimal_energy_points_deterministic():
    E = ArcSet([(0.5, 2.5)])
    p1, e1 = minimal_energy_points(E, 10, restarts=3, seed=42)
    p2, e2 = minimal_energy_points(E, 10, restarts=3, seed=42)
    assert np.array_equal(p1, p2) and e1 == e2


def test_arc_capacity_closed_form_values():
    assert arc_capacity_closed_form(TWO_PI) == pytest.approx(CAP_MAX, rel=1e-12)
    assert arc_capacity_closed_form(math.pi) == pytest.approx(
        2.0 / (3.0 * LOG2), rel=1e-12)
    Ls = np.linspace(0.1, TWO_PI, 40)
    caps = [arc_capacity_closed_form(L) for L in Ls]
    assert all(a < b for a, b in zip(caps, caps[1:]))
    with pytest.raises(ValueError):
        arc_capacity_closed_form(0.0)


def test_arc_length_roundtrip():
    for L in (0.01, 1.0, math.pi, 6.0):
        c = arc_capacity_closed_form(L)
        assert arc_length_for_capacity(c) == pytest.approx(L, rel=1e-12)
    assert arc_length_for_capacity(1e-3) == 0.0  # underflow regime
    with pytest.raises(ValueError):
        arc_length_for_capacity(2.0)
