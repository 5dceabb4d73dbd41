from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dbarspec import decoupled as D
from dbarspec import weights as W
from dbarspec.criteria import CriteriaSettings

FAST = CriteriaSettings(samples_per_shell=64, ball_centers=8)


def SL(pairs, cutoff=10.0):
    return D.SpectrumList(tuple(pairs), cutoff)


def test_minkowski_example():
    s = D.minkowski_sum(SL([(0, 1), (1, 1), (2, 1)]), SL([(0, 1), (1, 1)]))
    assert s.points == ((0.0, 1), (1.0, 2), (2.0, 2), (3.0, 1))
    cut = D.minkowski_sum(SL([(0, 1), (1, 1), (2, 1)], 2.0), SL([(0, 1), (1, 1)], 5.0))
    assert cut.points == ((0.0, 1), (1.0, 2), (2.0, 2)) and cut.cutoff == 2.0


def test_minkowski_merges_near_values():
    s = D.minkowski_sum(SL([(1.0, 1), (1.0004, 1)]), SL([(0.0, 2)]))
    assert len(s.points) == 1 and s.points[0][1] == 4
    assert s.points[0][0] == pytest.approx(1.0002)


spectra = st.lists(st.tuples(st.integers(0, 40), st.integers(1, 4)), min_size=1, max_size=8, unique_by=lambda p: p[0])


@given(spectra, spectra, st.integers(0, 80))
def test_minkowski_brute_force(a, b, cut8):
    s1 = SL(sorted((v / 8, m) for v, m in a), cut8 / 8)
    s2 = SL(sorted((v / 8, m) for v, m in b), 20.0)
    got = D.minkowski_sum(s1, s2, cluster_tol=0.0)
    want = Counter()
    for va, ma in a:
        for vb, mb in b:
            if (va + vb) / 8 <= cut8 / 8:
                want[(va + vb) / 8] += ma * mb
    assert got.points == tuple(sorted(want.items()))


@given(spectra, spectra)
def test_minkowski_commutative(a, b):
    s1, s2 = SL(sorted((v / 8, m) for v, m in a)), SL(sorted((v / 8, m) for v, m in b))
    assert D.minkowski_sum(s1, s2, 0.0) == D.minkowski_sum(s2, s1, 0.0)


def test_degree_vectors():
    assert D.degree_vectors(3, 1) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    assert D.degree_vectors(2, 0) == [(0, 0)]
    with pytest.raises(ValueError):
        D.degree_vectors(2, 3)


def _component(name, s0, s1, k0, k1, e0=None, e1=None):
    empty = D.EssentialEvidence("empty")
    return D.ComponentData(name, {0: s0, 1: s1}, {0: k0, 1: k1}, {0: e0 or empty, 1: e1 or empty})


def test_compose_oracle_spectra():
    # harmonic-oscillator-like components: degree 0 spectrum {0, 1, 2, ...}, degree 1 spectrum {1, 2, ...}
    a = _component("a", SL([(0, 1), (1, 1), (2, 1), (3, 1)], 3.5), SL([(1, 1), (2, 1), (3, 1)], 3.5), 1, 0)
    cs = D.ComponentSpectra([a, a])
    assert D.compose_spectrum(cs, 0).points == ((0.0, 1), (1.0, 2), (2.0, 3), (3.0, 4))
    assert D.compose_spectrum(cs, 1).points == ((1.0, 2), (2.0, 4), (3.0, 6))
    assert D.compose_spectrum(cs, 2).points == ((2.0, 1), (3.0, 2))


def test_kunneth():
    a = _component("a", SL([(0, 2)]), SL([(0, 1)]), 2, 1)
    b = _component("b", SL([(0, 3)]), SL([(0, 1)]), 3, 1)
    cs = D.ComponentSpectra([a, b])
    assert D.kunneth_kernel_dim(cs, 0) == 6
    assert D.kunneth_kernel_dim(cs, 1) == 5
    assert D.kunneth_kernel_dim(cs, 2) == 1
    inf = _component("i", SL([(0, 1)]), SL([(1, 1)]), D.INFINITE, 0)
    cs2 = D.ComponentSpectra([inf, b])
    assert D.kunneth_kernel_dim(cs2, 0) == D.INFINITE
    assert D.kunneth_kernel_dim(cs2, 1) == D.INFINITE  # (0, 1) term: infinite * 1
    assert D.kunneth_kernel_dim(D.ComponentSpectra([inf, inf]), 2) == 0


def test_essential_composition():
    pts = D.EssentialEvidence("points", SL([(1.0, 1)], 3.0))
    a = _component("a", SL([(0, 1), (1, 1)], 3.0), SL([(1, 1)], 3.0), D.INFINITE, 0, e0=pts, e1=pts)
    b = _component("b", SL([(2, 1)], 3.0), SL([(2, 1)], 3.0), 0, 0)
    ess = D.compose_essential_spectrum(D.ComponentSpectra([a, b]), 1)
    assert ess.verdict == "non-compact"
    assert ess.spectrum.points == ((3.0, 2),)
    unk = _component("u", SL([(2, 1)], 3.0), SL([(2, 1)], 3.0), 0, 0, e1=D.EssentialEvidence("unknown", reason="x"))
    assert D.compose_essential_spectrum(D.ComponentSpectra([b, unk]), 1).verdict == "unknown"
    assert D.compose_essential_spectrum(D.ComponentSpectra([b, b]), 2).verdict == "compact"


@pytest.mark.parametrize("weights,expected", [
    ((W.radial_power(4), W.radial_power(4)), [False, False, True]),
    ((W.radial_power(4), W.radial_power(6)), [False, False, True]),
    ((W.gaussian(), W.gaussian()), [False, False, False]),
    ((W.radial_power(4), W.gaussian()), [False, False, False]),
], ids=["q4q4", "q4q6", "gg", "q4g"])
def test_compactness_verdicts(weights, expected):
    rep = D.compactness_report(W.decoupled(*weights), FAST)
    assert rep.hypotheses_ok and rep.consistent
    assert [rep.verdicts[str(q)]["compact"] for q in range(3)] == expected
    assert rep.verdicts["0"]["kernel_dim"] == D.INFINITE
    if expected[-1]:
        assert rep.soundness["necessary_trace"] == "Diverges"


def test_compactness_withheld_for_harmonic_component():
    rep = D.compactness_report(W.decoupled(W.radial_power(4), W.harmonic_quadratic(1)), FAST)
    assert not rep.hypotheses_ok
    assert all(v["compact"] is None for v in rep.verdicts.values())


@pytest.mark.parametrize("alphas", [[4, 4], [4, 6], [2, 8], [4, 6, 2]])
def test_polydisk_identity(alphas):
    dw = W.power_sum(alphas)
    assert D.polydisk_identity_residual(dw) < 1e-10
    assert D.polydisk_identity_residual(dw, centers=[[0.5 * j + 0.3j for j in range(len(alphas))]]) < 1e-10


def test_component_from_grids_gaussian():
    gs = D.ComponentGridSettings(L=4.0, h=0.25, cutoff=2.5)
    comp = D.component_from_grids(W.gaussian(), gs, FAST)
    # zero-degree kernel is the infinite lowest Landau level; top-degree kernel is trivial
    assert comp.kernel[0] == D.INFINITE
    assert comp.kernel[1] == 0
    assert comp.essential[1].status == "points"
