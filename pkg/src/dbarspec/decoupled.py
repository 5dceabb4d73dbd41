"""Spectra and compactness verdicts for decoupled weights phi_1(z_1) + ... + phi_n(z_n).

The complex Laplacian of a decoupled weight acts on (0,q)-forms as a sum of
one-variable operators, so its spectrum in degree q is the union over 0/1
degree vectors (q_1..q_n) with sum q of the Minkowski sums of the component
spectra in degrees q_j.  Spectra are finite lists below an explicit cutoff;
nothing is claimed above it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import hessian as hs
from .criteria import (DEFAULT_SETTINGS, EVIDENCE_NOTE, Classification, CriteriaSettings, CriterionVerdict,
                       DoublingEstimate, check_ball_linear, check_necessary_ball_sq, check_necessary_trace,
                       doubling_estimate)
from .eigensolve import SpectrumApprox, bulk_clusters, cluster, eigenpairs_below, spectral_gap
from .quadrature import DEFAULT_RULE, QuadratureRule, disk_integral, polydisk_integral
from .schrodinger import Grid2D, assemble
from .weights import DecoupledWeight, Weight

INFINITE = "infinite"
GROWTH_MIN_MULTIPLICITY = 5


@dataclass(frozen=True)
class SpectrumList:
    """Ascending (value, multiplicity) pairs known completely below ``cutoff``."""

    points: tuple
    cutoff: float

    @classmethod
    def from_values(cls, values, cutoff: float, cluster_tol=None) -> "SpectrumList":
        vals = [v for v in np.asarray(values, dtype=float) if v <= cutoff]
        return cls(tuple(cluster(vals, cluster_tol)), float(cutoff))

    @classmethod
    def from_approx(cls, s: SpectrumApprox) -> "SpectrumList":
        return cls.from_values(s.values, s.cutoff)

    @property
    def values(self) -> np.ndarray:
        return np.repeat([v for v, _ in self.points], [m for _, m in self.points]).astype(float)

    def __len__(self) -> int:
        return len(self.points)

    def to_dict(self) -> dict:
        return {"cutoff": self.cutoff, "points": [[v, m] for v, m in self.points], "tail": "unknown above cutoff"}


def _merge(pairs, cluster_tol=None) -> tuple:
    """Greedy merge of (value, multiplicity) pairs; merged value is the multiplicity-weighted mean."""
    pairs = sorted(pairs)
    if cluster_tol is None:
        tol_of = lambda v: 1e-3 * (1 + abs(v))
    elif callable(cluster_tol):
        tol_of = cluster_tol
    else:
        tol_of = lambda v: float(cluster_tol)
    out, i = [], 0
    while i < len(pairs):
        j = i + 1
        while j < len(pairs) and pairs[j][0] - pairs[i][0] <= tol_of(pairs[i][0]):
            j += 1
        vals = [p[0] for p in pairs[i:j]]
        mult = sum(p[1] for p in pairs[i:j])
        if max(vals) == min(vals):
            value = vals[0]
        else:
            value = sum(p[0] * p[1] for p in pairs[i:j]) / mult
        out.append((float(value), int(mult)))
        i = j
    return tuple(out)


def minkowski_sum(s1: SpectrumList, s2: SpectrumList, cluster_tol=None) -> SpectrumList:
    """All pairwise sums up to min(cutoffs), multiplicities multiplied then merged."""
    cut = min(s1.cutoff, s2.cutoff)
    pairs = [(a + b, ma * mb) for a, ma in s1.points for b, mb in s2.points if a + b <= cut]
    return SpectrumList(_merge(pairs, cluster_tol), cut)


def union(lists, cluster_tol=None) -> SpectrumList:
    lists = list(lists)
    if not lists:
        return SpectrumList((), math.inf)
    cut = min(s.cutoff for s in lists)
    pairs = [p for s in lists for p in s.points if p[0] <= cut]
    return SpectrumList(_merge(pairs, cluster_tol), cut)


def degree_vectors(n: int, q: int) -> list[tuple[int, ...]]:
    if not 0 <= q <= n:
        raise ValueError(f"degree {q} outside 0..{n}")
    return [v for v in product((0, 1), repeat=n) if sum(v) == q]


# ----------------------------------------------------------------------------
# component data


@dataclass
class EssentialEvidence:
    status: str  # "empty" | "points" | "unknown"
    points: SpectrumList | None = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {"status": self.status, "points": None if self.points is None else self.points.to_dict(),
                "reason": self.reason}


@dataclass
class ComponentData:
    """Degree-0 and degree-1 data of one one-variable component."""

    name: str
    spectra: dict
    kernel: dict
    essential: dict
    doubling: DoublingEstimate | None = None
    ball_linear: CriterionVerdict | None = None
    solves: dict = field(default_factory=dict)

    def __post_init__(self):
        for d in (0, 1):
            if self.spectra[d].cutoff <= 0:
                raise ValueError("component cutoffs must be positive")


@dataclass
class ComponentSpectra:
    components: list

    @property
    def n(self) -> int:
        return len(self.components)


def compose_spectrum(cs: ComponentSpectra, q: int, cluster_tol=None) -> SpectrumList:
    """Union over 0/1 vectors with sum q of iterated Minkowski sums of component spectra."""
    terms = []
    for vec in degree_vectors(cs.n, q):
        acc = cs.components[0].spectra[vec[0]]
        for c, d in zip(cs.components[1:], vec[1:]):
            acc = minkowski_sum(acc, c.spectra[d], cluster_tol)
        terms.append(acc)
    return union(terms, cluster_tol)


@dataclass
class EssentialComposition:
    q: int
    entries: list
    spectrum: SpectrumList
    unknown: bool

    @property
    def verdict(self) -> str:
        """'non-compact' if a nonzero point is evidenced, 'compact' if every entry is empty, else 'unknown'."""
        if any(v > 0 for v, _ in self.spectrum.points):
            return "non-compact"
        if self.unknown:
            return "unknown"
        return "compact"

    def to_dict(self) -> dict:
        return {"q": self.q, "verdict": self.verdict, "unknown_entries": self.unknown,
                "essential_spectrum": self.spectrum.to_dict(), "entries": self.entries,
                "note": EVIDENCE_NOTE, "provenance": "decoupled.compose_essential_spectrum"}


def compose_essential_spectrum(cs: ComponentSpectra, q: int, cluster_tol=None) -> EssentialComposition:
    """Union over vectors and j of ess(component j) + sum over k != j of spec(component k)."""
    entries, lists, unknown = [], [], False
    for vec in degree_vectors(cs.n, q):
        for j, comp in enumerate(cs.components):
            ev: EssentialEvidence = comp.essential[vec[j]]
            tag = {"vector": list(vec), "component": j}
            if ev.status == "unknown":
                unknown = True
                entries.append({**tag, "status": "unknown", "reason": ev.reason})
                continue
            if ev.status == "empty" or ev.points is None or not ev.points.points:
                entries.append({**tag, "status": "empty"})
                continue
            acc = ev.points
            for k, other in enumerate(cs.components):
                if k != j:
                    acc = minkowski_sum(acc, other.spectra[vec[k]], cluster_tol)
            lists.append(acc)
            entries.append({**tag, "status": "points", "points": acc.to_dict()})
    spec = union(lists, cluster_tol) if lists else SpectrumList((), min(c.spectra[0].cutoff for c in cs.components))
    return EssentialComposition(q, entries, spec, unknown)


def _kernel_product(dims):
    if any(d == 0 for d in dims):
        return 0
    if any(d == INFINITE for d in dims):
        return INFINITE
    return int(np.prod(dims))


def kunneth_kernel_dim(cs: ComponentSpectra, q: int):
    """Sum over 0/1 vectors of the product of component kernel dimensions; may be INFINITE."""
    total = 0
    for vec in degree_vectors(cs.n, q):
        term = _kernel_product([c.kernel[d] for c, d in zip(cs.components, vec)])
        if term == INFINITE:
            return INFINITE
        total += term
    return total


# ----------------------------------------------------------------------------
# component solves on grids


@dataclass(frozen=True)
class ComponentGridSettings:
    L: float = 6.0
    h: float = 0.125
    growth_factor: float = 1.5
    cutoff: float = 4.0
    seed: int = 0


def _solve(w: Weight, L: float, h: float, degree: str, cutoff: float, seed: int) -> SpectrumApprox:
    N = int(round(2 * L / h))
    op = assemble(w, Grid2D(L, N), degree, cutoff)
    s = eigenpairs_below(op, cutoff, seed=seed)
    s.flags.extend(op.metadata["warnings"])
    return s


def _growing_clusters(small: SpectrumApprox, large: SpectrumApprox, floor: float) -> list[tuple[float, int]]:
    out = []
    cs = [c for c in bulk_clusters(small.values, GROWTH_MIN_MULTIPLICITY) if c[0] > floor]
    for v, m in bulk_clusters(large.values, GROWTH_MIN_MULTIPLICITY):
        if v <= floor:
            continue
        match = [mm for vv, mm in cs if abs(vv - v) <= 0.02 * (1 + abs(v))]
        if match and m > max(match):
            out.append((v, m))
    return out


def component_from_grids(w: Weight, gs: ComponentGridSettings = ComponentGridSettings(),
                         settings: CriteriaSettings = DEFAULT_SETTINGS) -> ComponentData:
    """Solve both degrees at half-widths L and growth_factor * L with the same spacing.

    The degree-0 kernel is counted below half the lowest top-degree
    eigenvalue; its growth with L is the evidence for an infinite kernel.
    """
    L2 = gs.L * gs.growth_factor
    top = {L: _solve(w, L, gs.h, "top", gs.cutoff, gs.seed) for L in (gs.L, L2)}
    zero = {L: _solve(w, L, gs.h, "zero", gs.cutoff, gs.seed) for L in (gs.L, L2)}
    lam1 = top[L2].values[0] if top[L2].values.size else gs.cutoff
    ktol = 0.5 * lam1
    for s in (*top.values(), *zero.values()):
        s.kernel_tol = ktol
    k_small, k_large = zero[gs.L].kernel_dim, zero[L2].kernel_dim
    kernel0 = INFINITE if k_large > k_small > 0 else k_large
    kernel1 = top[L2].kernel_dim
    ball = check_ball_linear(w, settings)
    dbl = doubling_estimate(w)

    ess0_pts = [(0.0, k_large)] if kernel0 == INFINITE else []
    ess0_pts += _growing_clusters(zero[gs.L], zero[L2], ktol)
    ess0 = (EssentialEvidence("points", SpectrumList(_merge(ess0_pts), gs.cutoff), "multiplicity growth with L")
            if ess0_pts else EssentialEvidence("unknown", None, "no multiplicity growth observed"))
    if ball.classification is Classification.DIVERGES:
        ess1 = EssentialEvidence("empty", None, "unit-disk integrals of Delta(phi) diverge")
    else:
        grow = _growing_clusters(top[gs.L], top[L2], ktol)
        ess1 = (EssentialEvidence("points", SpectrumList(_merge(grow), gs.cutoff), "multiplicity growth with L")
                if grow else EssentialEvidence("unknown", None, "ball integrals not divergent, no growth observed"))
    solves = {f"{deg}_L{L:g}": s.summary() for deg, d in (("zero", zero), ("top", top)) for L, s in d.items()}
    solves["spectral_gap_top"] = spectral_gap(top[L2])
    return ComponentData(w.name, {0: SpectrumList.from_approx(zero[L2]), 1: SpectrumList.from_approx(top[L2])},
                         {0: kernel0, 1: kernel1}, {0: ess0, 1: ess1}, dbl, ball, solves)


# ----------------------------------------------------------------------------
# verdicts


@dataclass
class CompactnessReport:
    n: int
    hypotheses: list
    hypotheses_ok: bool
    verdicts: dict
    total_ball_linear: CriterionVerdict
    component_ball_linear: list
    consistent: bool
    soundness: dict

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "hypotheses": self.hypotheses,
            "hypotheses_ok": self.hypotheses_ok,
            "verdicts": self.verdicts,
            "ball_linear_total": self.total_ball_linear.to_dict(),
            "ball_linear_components": [v.to_dict() for v in self.component_ball_linear],
            "component_total_consistent": self.consistent,
            "soundness": self.soundness,
            "note": EVIDENCE_NOTE,
            "provenance": "decoupled.compactness_report",
        }


def compactness_report(dw: DecoupledWeight, settings: CriteriaSettings = DEFAULT_SETTINGS) -> CompactnessReport:
    """Per-degree compactness table for N_{0,q}, q = 0..n.

    Under subharmonic, nontrivial, doubling components: degrees q < n are
    non-compact and bounded; degree n is compact iff unit-ball integrals of
    tr M_phi diverge.  Verdicts are withheld when a hypothesis check fails.
    """
    hyps = []
    for j, c in enumerate(dw.components):
        d = doubling_estimate(c)
        hyps.append({"component": j, "name": c.name, **d.to_dict()})
    ok = all(h["subharmonic"] and h["nontrivial"] and h["consistent"] for h in hyps)
    total = dw.total
    tot_v = check_ball_linear(total, settings)
    comp_v = [check_ball_linear(c, settings) for c in dw.components]
    comps_div = all(v.classification is Classification.DIVERGES for v in comp_v)
    consistent = comps_div == (tot_v.classification is Classification.DIVERGES)
    verdicts = {}
    for q in range(dw.n + 1):
        entry = {"bounded": "asserted under the hypotheses" if ok else "withheld"}
        if not ok:
            entry.update(compact=None, status="withheld: hypothesis check failed")
        elif q < dw.n:
            entry.update(compact=False, status="not compact (asserted under the hypotheses)",
                         kernel_dim=INFINITE if q == 0 else 0)
        elif tot_v.classification is Classification.DIVERGES:
            entry.update(compact=True, status="compact (unit-ball integrals of tr M diverge)", kernel_dim=0)
        elif tot_v.classification is Classification.BOUNDED:
            entry.update(compact=False, status="not compact (unit-ball integrals of tr M stay bounded)",
                         kernel_dim=0)
        else:
            entry.update(compact=None, status="undetermined (criterion inconclusive)", kernel_dim=0)
        verdicts[str(q)] = entry
    soundness = {}
    if verdicts[str(dw.n)].get("compact"):
        soundness = {"necessary_trace": check_necessary_trace(total, settings).classification.value,
                     "necessary_ball_sq": check_necessary_ball_sq(total, settings).classification.value}
    return CompactnessReport(dw.n, hyps, ok, verdicts, tot_v, comp_v, consistent, soundness)


DEFAULT_POLYDISK_CENTERS = {
    1: [(0.0,), (1.5,), (-2.0 + 1.0j,)],
    2: [(0.0, 0.0), (2.0, 0.0), (0.0, 3.0), (1.0 + 1.0j, -2.0)],
}


def polydisk_identity_residual(dw: DecoupledWeight, centers=None, rule: QuadratureRule = DEFAULT_RULE) -> float:
    """max over centers of |int_P tr M - (pi^(n-1)/4) sum_j int_D Delta(phi_j)| / (1 + |lhs|)."""
    n = dw.n
    if centers is None:
        centers = DEFAULT_POLYDISK_CENTERS.get(n) or [tuple([0.0] * n), tuple([1.0] * n), tuple([-1.0j] * n)]
    total = dw.total
    worst = 0.0
    for c in centers:
        c = np.asarray(c, dtype=complex)
        lhs = polydisk_integral(lambda z: hs.trace_M(total, z), c, 1.0, rule)
        rhs = 0.0
        for j, comp in enumerate(dw.components):
            rhs += disk_integral(lambda x, comp=comp: comp.laplacian(x[:, None]), complex(c[j]), 1.0, rule)
        rhs *= math.pi ** (n - 1) / 4
        worst = max(worst, abs(lhs - rhs) / (1 + abs(lhs)))
    return worst
