import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dbarspec import criteria as cr
from dbarspec import weights as W
from dbarspec.criteria import Classification as C

FAST = cr.CriteriaSettings(samples_per_shell=64, ball_centers=8)


def test_classify_limit_units():
    assert cr.classify_limit([1, 2, 4, 8, 16, 5000], 1e3, 10) is C.DIVERGES
    assert cr.classify_limit([1, 1, 1, 1, 1, 1], 1e3, 10) is C.BOUNDED
    assert cr.classify_limit([1, 2, 3, 4, 5, 6], 1e3, 10) is C.INCONCLUSIVE
    assert cr.classify_limit([1, 50, 1, 50, 1, 50], 1e3, 100) is C.INCONCLUSIVE
    with pytest.raises(ValueError):
        cr.classify_limit([1, 2, 3], 1e3, 10)


@given(st.lists(st.floats(0, 1e6), min_size=6, max_size=12), st.floats(1e-3, 1e6), st.floats(1.0, 1e3))
def test_classify_limit_threshold_monotone(stats, t_bnd, ratio):
    # raising the divergence threshold never creates a Diverges verdict
    t_div = t_bnd * ratio
    lo = cr.classify_limit(stats, t_div, t_bnd)
    hi = cr.classify_limit(stats, 10 * t_div, t_bnd)
    if hi is C.DIVERGES:
        assert lo is C.DIVERGES
    # and the two positive classes are exclusive under T_div >= T_bnd
    assert not (lo is C.DIVERGES and np.all(np.asarray(stats) <= t_bnd))


def test_shell_points_on_shell():
    for n in (1, 2, 3):
        p = cr.shell_points(n, 4.0, 64, 1.0)
        r = np.linalg.norm(p, axis=1)
        assert r.min() >= 4.0 - 1e-12 and r.max() <= 5.0 + 1e-12


def test_shell_points_contain_axes():
    p = cr.shell_points(2, 3.0, 64)
    assert np.any(np.all(np.isclose(np.abs(p), [3.0, 0.0]), axis=1))


def test_gaussian_verdicts():
    g = W.gaussian(1)
    assert cr.check_shigekawa(g, FAST).classification is C.DIVERGES
    bl = cr.check_ball_linear(g, FAST)
    assert bl.classification is C.BOUNDED
    np.testing.assert_allclose(bl.evidence.stats, math.pi, rtol=1e-10)
    assert not bl.condition_holds
    b = cr.check_boundedness_sufficient(g, 1, FAST)
    assert b.condition_holds and b.classification is C.BOUNDED
    assert cr.check_compactness_sufficient(g, 1, FAST).classification is C.BOUNDED


def test_quartic_diverges():
    q = W.radial_power(4)
    assert cr.check_compactness_sufficient(q, 1, FAST).classification is C.DIVERGES
    assert cr.check_ball_linear(q, FAST).classification is C.DIVERGES
    assert cr.check_necessary_trace(q, FAST).condition_holds


def test_mixed_example_s1_does_not_diverge():
    m = W.mixed_example()
    v = cr.check_compactness_sufficient(m, 1, FAST)
    assert v.classification is not C.DIVERGES
    assert cr.check_necessary_trace(m, FAST).classification is C.DIVERGES


def test_verdict_serialises():
    d = cr.check_necessary_trace(W.gaussian(2), FAST).to_dict()
    assert d["classification"] == "Bounded"
    assert d["note"] == cr.EVIDENCE_NOTE
    assert len(d["trace"]) == FAST.k_max - FAST.k_min + 1


def test_shell_trace_failure_budget():
    bad = lambda z: np.where(np.abs(z[:, 0]) > 4.5, np.nan, 1.0)
    with pytest.raises(cr.CriterionError):
        cr.shell_trace(bad, 1, [4.0, 8.0], "infimum", samples=64)


def test_doubling_quartic_exact():
    est = cr.doubling_estimate(W.radial_power(4))
    assert abs(est.d_hat - 16) <= 1e-6
    assert est.verdict == "doubling-consistent" and est.subharmonic


def test_doubling_gaussian():
    est = cr.doubling_estimate(W.gaussian())
    assert est.d_hat == pytest.approx(4, abs=1e-9)


def test_doubling_harmonic_trivial():
    est = cr.doubling_estimate(W.harmonic_quadratic(1))
    assert est.verdict == "trivial" and not est.nontrivial


def test_doubling_needs_one_variable():
    with pytest.raises(ValueError):
        cr.doubling_estimate(W.gaussian(2))


@given(st.floats(1.0, 4.0), st.floats(-3, 3), st.floats(-3, 3))
def test_reverse_holder_at_least_one(r, x, y):
    assert cr.reverse_holder_ratio(W.radial_power(6), r, [complex(x, y)]) >= 1 - 1e-10


def test_reverse_holder_constant_field():
    assert cr.reverse_holder_ratio(W.gaussian(2), 2.0, [0, 0]) == pytest.approx(1, abs=1e-10)


def test_bergman_counts():
    assert cr.bergman_dimension_evidence(W.mixed_example(), 11) == 11
    assert cr.finite_monomials(W.mixed_example(), 3) == [1, 2, 3]
    assert cr.bergman_dimension_evidence(W.gaussian(), 15) == 16
