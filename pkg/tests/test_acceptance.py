"""End-to-end acceptance checks, one test per criterion, at the stated tolerances."""

import json
import time
from collections import Counter

import numpy as np
import pytest

from dbarspec import cli
from dbarspec import criteria as cr
from dbarspec import decoupled as D
from dbarspec import forms as F
from dbarspec import schrodinger as S
from dbarspec import weights as W
from dbarspec.eigensolve import bulk_clusters, eigenpairs_below, lowest_eigenpairs

pytestmark = pytest.mark.slow


def test_01_landau_levels(acceptance):
    grid = S.Grid2D(8.0, 256)
    t0 = time.perf_counter()
    top = eigenpairs_below(S.assemble(W.gaussian(), grid, "top", 5.3), 5.3)
    elapsed = time.perf_counter() - t0
    levels = [v for v, _ in bulk_clusters(top.values)][:5]
    rel = [abs(v - k) / k for v, k in zip(levels, range(1, 6))]
    zero = eigenpairs_below(S.assemble(W.gaussian(), grid, "zero", 1.3), 1.3)
    zl = [v for v, _ in bulk_clusters(zero.values)][:2]
    ok = (len(levels) == 5 and max(rel) <= 0.02 and elapsed <= 300 and top.complete and zero.complete
          and len(zl) == 2 and abs(zl[0]) <= 1e-3 and abs(zl[1] - 1) <= 0.02)
    acceptance(1, ok, f"top clusters {np.round(levels, 5).tolist()} (max rel err {max(rel):.2e}, {elapsed:.0f} s); "
                      f"zero clusters {np.round(zl, 5).tolist()}")
    assert ok


def test_02_kernel_growth(acceptance):
    counts = []
    for L in (6.0, 9.0):
        grid = S.Grid2D(L, int(round(2 * L * 8)))
        lam1 = lowest_eigenpairs(S.assemble(W.gaussian(), grid, "top"), 1).values[0]
        s = eigenpairs_below(S.assemble(W.gaussian(), grid, "zero"), 0.5 * lam1)
        counts.append(s.values.size)
    ok = counts[1] > counts[0] > 0
    acceptance(2, ok, f"degree-zero kernel count at h=1/8: L=6 -> {counts[0]}, L=9 -> {counts[1]}")
    assert ok


def test_03_kmh_identity(acceptance):
    from itertools import combinations

    rng = np.random.default_rng(0)
    cases = [(W.gaussian(1), 1), (W.radial_power(4), 1), (W.radial_power(6), 1), (W.gaussian(2), 1),
             (W.gaussian(2), 2), (W.mixed_example(), 1), (W.mixed_example(), 2), (W.power_sum([4, 6]).total, 1),
             (W.power_sum([4, 6]).total, 2), (W.radial_power(4, 2), 1), (W.split_quartic(2, 2), 2),
             (W.mixed_example(), 1)]
    t0 = time.perf_counter()
    worst = 0.0
    for w, q in cases:
        u = F.TestForm.build(w.n, q, {J: F.random_coefficient(w.n, rng) for J in combinations(range(w.n), q)})
        lhs, rhs = F.kmh_sides(w, u)
        worst = max(worst, abs(lhs - rhs) / (1 + lhs))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed <= 60
    acceptance(3, ok, f"{len(cases)} forms, max |lhs-rhs|/(1+lhs) = {worst:.1e}, {elapsed:.1f} s")
    assert ok


def test_04_polydisk_identity(acceptance):
    res = {name: D.polydisk_identity_residual(dw) for name, dw in
           (("gaussian x gaussian", W.decoupled(W.gaussian(), W.gaussian())),
            ("quartic x quartic", W.power_sum([4, 4])), ("quartic x sextic", W.power_sum([4, 6])))}
    centers = len(D.DEFAULT_POLYDISK_CENTERS[2])
    ok = max(res.values()) <= 1e-6 and centers >= 3
    acceptance(4, ok, f"{centers} centers, max residual {max(res.values()):.1e}")
    assert ok


def test_05_decoupled_verdicts(acceptance):
    expect = {(4, 4): [False, False, True], (4, 6): [False, False, True], (6, 4): [False, False, True],
              (6, 6): [False, False, True]}
    got = {}
    for (a1, a2), want in expect.items():
        rep = D.compactness_report(W.power_sum([a1, a2]))
        got[f"|z1|^{a1}+|z2|^{a2}"] = ([rep.verdicts[str(q)]["compact"] for q in range(3)], want)
    rep = D.compactness_report(W.decoupled(W.gaussian(), W.gaussian()))
    got["gaussian x gaussian"] = (rep.verdicts["2"]["compact"], False)
    rep = D.compactness_report(W.power_sum([4, 2]))
    got["|z1|^4+|z2|^2"] = (rep.verdicts["2"]["compact"], False)
    bad = [k for k, (g, w) in got.items() if g != w]
    ok = not bad
    acceptance(5, ok, "all verdicts as expected" if ok else f"mismatch for {bad}")
    assert ok


def test_06_criteria_consistency(acceptance):
    ws = [W.gaussian(1), W.gaussian(2), W.radial_power(4), W.radial_power(6), W.radial_power(3),
          W.mixed_example(), W.harmonic_quadratic(1), W.split_quartic(3, 2), W.power_sum([4, 6]).total]
    problems = []
    for w in ws:
        bl = cr.check_ball_linear(w).classification
        bsq = cr.check_necessary_ball_sq(w).classification
        cs = cr.check_compactness_sufficient(w, w.n).classification
        tr = cr.check_necessary_trace(w).classification
        if bl is cr.Classification.DIVERGES and bsq is not cr.Classification.DIVERGES:
            problems.append(f"{w.name}: ball_linear without ball_sq")
        if cs is cr.Classification.DIVERGES and tr is not cr.Classification.DIVERGES:
            problems.append(f"{w.name}: compactness_sufficient without trace")
    m = W.mixed_example()
    shig = cr.check_shigekawa(m)
    count = cr.bergman_dimension_evidence(m, 11)
    if shig.classification is cr.Classification.DIVERGES:
        problems.append("mixed_example passes Shigekawa")
    if count < 11:
        problems.append(f"mixed_example Bergman count {count}")
    ok = not problems
    acceptance(6, ok, f"{len(ws)} weights; mixed_example Shigekawa {shig.classification.value}, "
                      f"Bergman count {count}" + ("" if ok else f"; {problems}"))
    assert ok


def test_07_doubling(acceptance):
    q = W.radial_power(4)
    radii = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
    per_radius = [cr.doubling_estimate(q, centers=[0.0], radii=[r]).d_hat for r in radii]
    est = cr.doubling_estimate(q, centers=[0.0], radii=radii)
    harm = cr.doubling_estimate(W.harmonic_quadratic(1))
    ok = (max(abs(d - 16) for d in per_radius) <= 1e-6 and abs(est.d_hat - 16) <= 1e-6 and est.nontrivial
          and not harm.nontrivial)
    acceptance(7, ok, f"D_hat at 0 = {est.d_hat:.10f}, spread over radii {np.ptp(per_radius):.1e}; "
                      f"harmonic nontrivial={harm.nontrivial}")
    assert ok


def test_08_convergence_order(acceptance):
    errs = []
    for N in (64, 128, 256):
        s = lowest_eigenpairs(S.assemble(W.gaussian(), S.Grid2D(8.0, N)), 1, tol=1e-10)
        errs.append(abs(s.values[0] - 1))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = all(abs(r - 4) <= 0.5 for r in ratios)
    acceptance(8, ok, f"errors {[f'{e:.2e}' for e in errs]}, ratios {np.round(ratios, 3).tolist()}")
    assert ok


def _random_spectrum(rng):
    k = int(rng.integers(1, 31))
    vals = np.sort(rng.choice(np.arange(0, 81), size=k, replace=False)) / 8
    return D.SpectrumList(tuple((float(v), int(m)) for v, m in zip(vals, rng.integers(1, 5, size=k))),
                          float(rng.integers(1, 161)) / 8)


def test_09_minkowski_oracle(acceptance):
    rng = np.random.default_rng(2024)
    failures = 0
    for _ in range(100):
        s1, s2 = _random_spectrum(rng), _random_spectrum(rng)
        cut = min(s1.cutoff, s2.cutoff)
        want = Counter()
        for a, ma in s1.points:
            for b, mb in s2.points:
                if a + b <= cut:
                    want[a + b] += ma * mb
        got = D.minkowski_sum(s1, s2)
        failures += got.points != tuple(sorted(want.items())) or got.cutoff != cut
    ok = failures == 0
    acceptance(9, ok, f"100 random pairs, {failures} mismatches")
    assert ok


def test_10_determinism(acceptance, tmp_path):
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    same = True
    for name in ("gaussian.toml", "quartic_decoupled.toml"):
        blobs = []
        for rep in range(2):
            out = tmp_path / f"{name}-{rep}"
            assert cli.main(["report", "--config", str(root / name), "--out", str(out), "--seed", "0",
                             "--normalize-timings"]) == 0
            blobs.append((out / "report.json").read_bytes())
            json.loads(blobs[-1])
        same &= blobs[0] == blobs[1]
    acceptance(10, same, "report.json byte-identical across repeated runs" if same else "reports differ")
    assert same
