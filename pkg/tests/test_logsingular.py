import dataclasses
import math

import numpy as np
import pytest

from weldlab.capacity import arc_capacity_closed_form, arc_length_for_capacity
from weldlab.circle_homeo import CircleHomeo, quasisymmetry_modulus
from weldlab.logsingular import (build_log_singular, certificate_check,
                                 convergence_profile)

PI = math.pi


@pytest.fixture(scope="module")
def m2():
    return build_log_singular((0.0, PI), (0.0, PI), 2)


@pytest.fixture(scope="module")
def m_deep():
    # any request beyond depth 2 underflows the sliver lengths
    return build_log_singular((0.0, PI), (0.0, PI), 6)


def test_depth_one_certificate():
    m = build_log_singular((0.0, PI), (0.0, PI), 1)
    assert m.depth == 1 and not m.partial
    st = m.stages[0]
    assert st.red_capacity_certificate.upper <= 0.5
    (a, b), = st.arcs_tagged("red")
    # sizing rule: closed-form inversion of the stage budget, clamped at
    # half the piece
    assert b - a == pytest.approx(min(arc_length_for_capacity(0.45), PI / 2),
                                  rel=1e-12)


def test_stage_two_sliver_length(m2):
    st = m2.stages[1]
    arcs = st.arcs_tagged("red")
    assert len(arcs) == 4
    expect = arc_length_for_capacity(0.9 * 0.25 / 4)
    for a, b in arcs:
        assert b - a == pytest.approx(expect, rel=1e-9)
    assert st.red_capacity_certificate.upper <= 0.25
    assert st.blue_image_capacity_certificate.upper <= 0.25


def test_deep_request_stops_partial(m_deep):
    assert m_deep.partial
    assert m_deep.depth == 2
    assert m_deep.requested_depth == 6
    assert m_deep.exceptional_set_bound == 0.25


def test_exceptional_bound_matches_tail(m2):
    assert m2.exceptional_set_bound == 2.0 ** (-m2.depth)
    rep = certificate_check(m2, 48)
    assert rep.tail_bound == 2.0 ** (1 - (m2.depth + 1))


def test_partition_tiles_domain(m2):
    for st in m2.stages:
        subs = st.subarcs
        assert subs[0][0] == m2.domain[0]
        assert subs[-1][1] == m2.domain[1]
        for (_, t1, _), (s0, _, _) in zip(subs, subs[1:]):
            assert t1 == s0  # carried bitwise, not merely close


def test_endpoint_stability_bitwise(m2):
    h1, h2 = m2.stages[0].h, m2.stages[1].h
    for t0, t1, _ in m2.stages[0].subarcs:
        assert h1.evaluate(t0) == h2.evaluate(t0)
        assert h1.evaluate(t1) == h2.evaluate(t1)


def test_boundary_mapped_exactly():
    m = build_log_singular((0.5, 0.5 + PI), (1.0, 2.5), 2)
    for st in m.stages:
        assert st.h.evaluate(0.5) == 1.0
        assert st.h.evaluate(0.5 + PI) == 2.5


def test_stage_maps_monotone(m2):
    for st in m2.stages:
        assert np.all(np.diff(st.h.theta) > 0)
        assert np.all(np.diff(st.h.psi) > 0)


def test_certificate_check_passes(m2):
    rep = certificate_check(m2, 64)
    assert rep.all_pass
    assert len(rep.entries) == 4
    budgets = [e.budget for e in rep.entries]
    assert budgets == [0.5, 0.5, 0.25, 0.25]


def test_certificate_check_catches_doubled_reds(m2):
    st = m2.stages[0]
    tampered = []
    for t0, t1, tag in st.subarcs:
        if tag == "red":
            mid = t0 + 2 * (t1 - t0)
            tampered.append((t0, mid, "red"))
            last_mid = mid
        else:
            tampered.append((last_mid, t1, "blue"))
    bad_stage = dataclasses.replace(st, subarcs=tuple(tampered))
    bad = dataclasses.replace(m2, stages=(bad_stage,) + m2.stages[1:])
    rep = certificate_check(bad, 64)
    assert not rep.all_pass
    assert any(e.kind == "red" and not e.passed for e in rep.entries)


def test_convergence_profile_bounds(m2):
    prof = convergence_profile(m2)
    assert len(prof) == 1
    assert 0 < prof[0] <= m2.stages[0].max_image_arc_length()


def test_convergence_profile_needs_depth_two():
    m = build_log_singular((0.0, PI), (0.0, PI), 1)
    with pytest.raises(ValueError):
        convergence_profile(m)


def test_profile_dominates_final_distance(m2):
    prof = convergence_profile(m2)
    grid = np.linspace(0, 2 * PI, 400, endpoint=False)
    d = np.max(np.abs(m2.stages[0].h.evaluate(grid) - m2.h.evaluate(grid)))
    assert d <= sum(prof) + 1e-12


def test_quasisymmetry_blowup(m_deep):
    scale = 2 * PI / 2 ** 6
    assert quasisymmetry_modulus(m_deep.h, scale) >= 10.0
    assert quasisymmetry_modulus(CircleHomeo.identity(), scale) == pytest.approx(1.0)


def test_build_input_validation():
    with pytest.raises(ValueError):
        build_log_singular((0.0, PI), (0.0, PI), 0)
    with pytest.raises(ValueError):
        build_log_singular((0.0, 0.0), (0.0, PI), 1)
    with pytest.raises(ValueError):
        build_log_singular((0.0, 2 * PI), (0.0, PI), 1)


def test_certified_small_feeds_threshold(m2):
    # the capacity module certifies each red union below the stage
    # threshold that the construction budgets for
    for st in m2.stages:
        assert st.red_capacity_certificate.upper < 2.0 ** (-st.n)
        assert arc_capacity_closed_form(
            sum(b - a for a, b in st.arcs_tagged("red"))) > 0
