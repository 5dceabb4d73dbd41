"""Numerical classifiers for limit-at-infinity conditions on a weight.

Every verdict is numerical evidence from finitely many shells, not a proof.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations_with_replacement, product
from typing import Callable

import numpy as np

from . import hessian as hs
from .quadrature import DEFAULT_RULE, QuadratureRule, ball_integral, disk_integral, monomial_norm_sq
from .weights import Weight

EVIDENCE_NOTE = "numerical evidence, not proof"


class CriterionError(RuntimeError):
    pass


class Classification(str, Enum):
    DIVERGES = "Diverges"
    BOUNDED = "Bounded"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class CriteriaSettings:
    """Shell schedule R_k = 2^(k/2), k_min..k_max, and classification thresholds.

    Thresholds are relative to the statistic on the first shell, floored at
    ``threshold_floor`` so that identically-zero traces stay Bounded.
    """

    k_min: int = 2
    k_max: int = 20
    samples_per_shell: int = 256
    ball_centers: int = 32
    shell_width: float = 1.0
    window: int = 4
    div_factor: float = 1e3
    bnd_factor: float = 10.0
    threshold_floor: float = 1e-6
    eps0: float = 1e-6
    rule: QuadratureRule = DEFAULT_RULE

    @property
    def radii(self) -> np.ndarray:
        return 2.0 ** (np.arange(self.k_min, self.k_max + 1) / 2.0)


DEFAULT_SETTINGS = CriteriaSettings()


@dataclass
class ShellTrace:
    radii: np.ndarray
    stats: np.ndarray
    mode: str
    samples: int
    label: str = ""

    def rows(self):
        return list(zip(self.radii.tolist(), self.stats.tolist()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["R_k", "stat_k"])
        for r, s in self.rows():
            writer.writerow([repr(r), repr(s)])
        return buf.getvalue()


@dataclass
class CriterionVerdict:
    name: str
    classification: Classification
    condition_holds: bool
    evidence: ShellTrace
    thresholds: dict = field(default_factory=dict)
    note: str = EVIDENCE_NOTE

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "classification": self.classification.value,
            "condition_holds": bool(self.condition_holds),
            "mode": self.evidence.mode,
            "samples_per_shell": self.evidence.samples,
            "thresholds": {k: float(v) for k, v in self.thresholds.items()},
            "trace": [[r, s] for r, s in self.evidence.rows()],
            "note": self.note,
            "provenance": f"criteria.{self.name}",
        }


# ----------------------------------------------------------------------------
# shell sampling


def _simplex_lattice(n: int, m: int) -> np.ndarray:
    pts = []
    for combo in combinations_with_replacement(range(n), m):
        counts = np.bincount(combo, minlength=n)
        pts.append(counts / m)
    return np.array(pts)


def shell_points(n: int, radius: float, samples: int, width: float = 1.0) -> np.ndarray:
    """Deterministic product lattice on the shell {radius <= |z| <= radius + width}.

    For n >= 2 the moduli directions (|z_1|^2, ..., |z_n|^2)/|z|^2 come from a
    simplex lattice that contains the coordinate axes exactly.
    """
    if n == 1:
        levels = 4 if samples >= 64 else 2
        nang = max(1, samples // levels)
        rad = np.linspace(radius, radius + width, levels)
        ang = np.exp(2j * np.pi * np.arange(nang) / nang)
        return (rad[:, None] * ang[None, :]).reshape(-1, 1)
    nphase = 4 if samples >= 128 else 2 if samples >= 16 else 1
    phase_sets = np.exp(2j * np.pi * np.array(list(product(range(nphase), repeat=n))) / nphase)
    if n > 2 and len(phase_sets) > 8:
        phase_sets = phase_sets[np.linspace(0, len(phase_sets) - 1, 8).astype(int)]
    ndir = max(2, samples // (2 * len(phase_sets)))
    m = 1
    while len(list(combinations_with_replacement(range(n), m + 1))) <= ndir:
        m += 1
    moduli = np.sqrt(_simplex_lattice(n, m))
    rad = np.array([radius, radius + width])
    pts = rad[:, None, None, None] * moduli[None, :, None, :] * phase_sets[None, None, :, :]
    return pts.reshape(-1, n)


def _robust_eval(f, pts: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(f(pts), dtype=float)
        if np.all(np.isfinite(vals)):
            return vals
    except (ArithmeticError, ValueError):
        pass
    vals = np.full(pts.shape[0], np.nan)
    for i, p in enumerate(pts):
        try:
            vals[i] = float(np.asarray(f(p[None, :]), dtype=float)[0])
        except (ArithmeticError, ValueError):
            pass
    bad = ~np.isfinite(vals)
    if bad.mean() > 0.10:
        raise CriterionError(f"field evaluation failed at {bad.sum()} of {bad.size} samples")
    return vals[~bad]


def shell_trace(field_fn: Callable[[np.ndarray], np.ndarray], n: int, radii, mode: str,
                samples: int = 256, width: float = 1.0, rule: QuadratureRule = DEFAULT_RULE,
                offset: Callable[[np.ndarray], np.ndarray] | None = None, label: str = "") -> ShellTrace:
    """Shell-wise infimum, supremum, or minimum over centres of unit-ball integrals of a field."""
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    stats = []
    for r in radii:
        pts = shell_points(n, r, samples, width)
        if offset is not None:
            pts = offset(pts)
        if mode == "infimum":
            stats.append(_robust_eval(field_fn, pts).min())
        elif mode == "supremum":
            stats.append(_robust_eval(field_fn, pts).max())
        elif mode == "ball_min":
            vals = [ball_integral(field_fn, c, 1.0, rule) for c in pts]
            stats.append(min(vals))
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return ShellTrace(radii, np.array(stats, dtype=float), mode, samples, label)


def classify_limit(stats, t_div: float, t_bnd: float, window: int = 4) -> Classification:
    """Diverges / Bounded / Inconclusive decision for a shell statistic sequence."""
    stats = np.asarray(stats, dtype=float)
    if stats.size < window + 2:
        raise ValueError(f"need at least {window + 2} shells, got {stats.size}")
    last = stats[-window:]
    if np.all(np.diff(last) > 0) and last[-1] > t_div:
        return Classification.DIVERGES
    flat = np.all(last[1:] <= last[:-1] + 0.05 * np.abs(last[:-1]) + 1e-300)
    if np.all(stats <= t_bnd) and flat:
        return Classification.BOUNDED
    return Classification.INCONCLUSIVE


def _verdict(name: str, trace: ShellTrace, settings: CriteriaSettings, holds_rule=None) -> CriterionVerdict:
    base = max(abs(trace.stats[0]), settings.threshold_floor)
    t_div, t_bnd = settings.div_factor * base, settings.bnd_factor * base
    cls = classify_limit(trace.stats, t_div, t_bnd, settings.window)
    holds = holds_rule(trace) if holds_rule else cls is Classification.DIVERGES
    return CriterionVerdict(name, cls, holds, trace,
                            {"T_div": t_div, "T_bnd": t_bnd, "window": settings.window})


def _trace_for(w: Weight, fn, mode: str, settings: CriteriaSettings, label: str) -> ShellTrace:
    samples = settings.ball_centers if mode == "ball_min" else settings.samples_per_shell
    return shell_trace(fn, w.n, settings.radii, mode, samples, settings.shell_width, settings.rule,
                       offset=w.offset_singular if w.singular else None, label=label)


# ----------------------------------------------------------------------------
# criteria on a weight


def check_boundedness_sufficient(w: Weight, q: int, settings: CriteriaSettings = DEFAULT_SETTINGS) -> CriterionVerdict:
    """liminf s_q > 0: holds when every shell infimum of s_q is at least eps0."""
    trace = _trace_for(w, lambda z: hs.s_q(w, z, q), "infimum", settings, f"s_{q}")
    return _verdict("boundedness_sufficient", trace, settings,
                    lambda t: bool(np.all(t.stats >= settings.eps0)))


def check_compactness_sufficient(w: Weight, q: int, settings: CriteriaSettings = DEFAULT_SETTINGS) -> CriterionVerdict:
    """lim s_q = +inf."""
    trace = _trace_for(w, lambda z: hs.s_q(w, z, q), "infimum", settings, f"s_{q}")
    return _verdict("compactness_sufficient", trace, settings)


def check_necessary_trace(w: Weight, settings: CriteriaSettings = DEFAULT_SETTINGS) -> CriterionVerdict:
    """limsup tr M_phi = +inf."""
    trace = _trace_for(w, lambda z: hs.trace_M(w, z), "supremum", settings, "tr M")
    return _verdict("necessary_trace", trace, settings)


def check_necessary_ball_sq(w: Weight, settings: CriteriaSettings = DEFAULT_SETTINGS) -> CriterionVerdict:
    """lim of the unit-ball integral of (tr M_phi)^2 = +inf."""
    trace = _trace_for(w, lambda z: hs.trace_M(w, z) ** 2, "ball_min", settings, "int tr^2")
    return _verdict("necessary_ball_sq", trace, settings)


def check_ball_linear(w: Weight, settings: CriteriaSettings = DEFAULT_SETTINGS) -> CriterionVerdict:
    """lim of the unit-ball integral of tr M_phi = +inf."""
    trace = _trace_for(w, lambda z: hs.trace_M(w, z), "ball_min", settings, "int tr")
    return _verdict("ball_linear", trace, settings)


def check_shigekawa(w: Weight, settings: CriteriaSettings = DEFAULT_SETTINGS) -> CriterionVerdict:
    """lim |z|^2 s_1(z) = +inf (sufficient for an infinite-dimensional Bergman space)."""
    fn = lambda z: np.sum(np.abs(z) ** 2, axis=-1) * hs.s_q(w, z, 1)
    trace = _trace_for(w, fn, "infimum", settings, "|z|^2 s_1")
    return _verdict("shigekawa", trace, settings)


CHECKS = {
    "boundedness_sufficient": check_boundedness_sufficient,
    "compactness_sufficient": check_compactness_sufficient,
    "necessary_trace": check_necessary_trace,
    "necessary_ball_sq": check_necessary_ball_sq,
    "ball_linear": check_ball_linear,
    "shigekawa": check_shigekawa,
}
NEEDS_Q = {"boundedness_sufficient", "compactness_sufficient"}


# ----------------------------------------------------------------------------
# doubling, reverse Hoelder, Bergman dimension


@dataclass
class DoublingEstimate:
    d_hat: float
    nontrivial: bool
    consistent: bool
    subharmonic: bool
    verdict: str
    d_hat_refined: float
    argmax: tuple[complex, float] | None
    skipped: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "D_hat": self.d_hat,
            "D_hat_refined": self.d_hat_refined,
            "nontrivial": self.nontrivial,
            "consistent": self.consistent,
            "subharmonic": self.subharmonic,
            "verdict": self.verdict,
            "argmax_center": None if self.argmax is None else [self.argmax[0].real, self.argmax[0].imag],
            "argmax_radius": None if self.argmax is None else self.argmax[1],
            "skipped_pairs": len(self.skipped),
            "provenance": "criteria.doubling_estimate",
        }


def _default_centers(refined: bool) -> np.ndarray:
    moduli = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
    nang = 8
    if refined:
        moduli = sorted(moduli + [0.75, 1.5, 3.0, 6.0, 12.0])
        nang = 16
    ang = np.exp(2j * np.pi * np.arange(nang) / nang)
    return np.concatenate([[0.0], (np.array(moduli)[:, None] * ang[None, :]).ravel()])


def _default_radii(refined: bool) -> np.ndarray:
    step = 0.5 if refined else 1.0
    return 2.0 ** np.arange(-2.0, 3.0 + step / 2, step)


def _max_ratio(density, centers, radii, rule):
    best, arg, skipped = -math.inf, None, []
    for c in centers:
        for r in radii:
            mu_r = disk_integral(density, c, r, rule)
            if mu_r <= 1e-12:
                skipped.append((complex(c), float(r)))
                continue
            ratio = disk_integral(density, c, 2 * r, rule) / mu_r
            if ratio > best:
                best, arg = ratio, (complex(c), float(r))
    return best, arg, skipped


def doubling_estimate(w: Weight, centers=None, radii=None, rule: QuadratureRule = DEFAULT_RULE) -> DoublingEstimate:
    """Largest sampled ratio mu(B_2r(z)) / mu(B_r(z)) for mu = Delta(phi) dlambda on C.

    The estimate is called doubling-consistent when doubling the sample set
    changes it by less than 5%.
    """
    if w.n != 1:
        raise ValueError("doubling_estimate expects a one-variable weight")
    density = lambda z: w.laplacian(w.offset_singular(z[:, None]) if w.singular else z[:, None])
    c0 = _default_centers(False) if centers is None else np.asarray(centers, dtype=complex)
    r0 = _default_radii(False) if radii is None else np.asarray(radii, dtype=float)
    grid = np.concatenate([c0, (np.linspace(0.1, 1.0, 10)[:, None] * np.exp(1j * np.arange(4))).ravel() * r0.max()])
    subharmonic = bool(np.min(density(grid)) >= -1e-10)
    d_hat, arg, skipped = _max_ratio(density, c0, r0, rule)
    nontrivial = disk_integral(density, 0.0, 2 * float(r0.max()), rule) > 1e-12
    if centers is None and radii is None:
        c1, r1 = _default_centers(True), _default_radii(True)
    else:
        mid = 0.5 * (c0[:-1] + c0[1:]) if c0.size > 1 else c0
        c1 = np.concatenate([c0, mid])
        r1 = np.sort(np.concatenate([r0, r0 * math.sqrt(2)]))
    d_ref, arg_ref, skipped_ref = _max_ratio(density, c1, r1, rule)
    if not nontrivial or not np.isfinite(d_hat):
        return DoublingEstimate(math.nan, False, False, subharmonic, "trivial", math.nan, None, skipped)
    if d_ref > d_hat:
        arg = arg_ref
    consistent = abs(d_ref - d_hat) < 0.05 * d_hat
    verdict = "doubling-consistent" if consistent else "unstable"
    return DoublingEstimate(float(max(d_hat, d_ref)), True, consistent, subharmonic, verdict, float(d_ref), arg,
                            skipped + skipped_ref)


def reverse_holder_ratio(w, r_exp: float, center, radius: float = 1.0, rule: QuadratureRule = DEFAULT_RULE,
                         n: int | None = None) -> float:
    """(avg_B tr^r)^(1/r) / avg_B tr over the ball B = B_radius(center).

    ``w`` is a Weight (field tr M_phi) or a nonnegative field callable, in
    which case ``n`` must be given.
    """
    if r_exp < 1:
        raise ValueError("reverse Hoelder exponent must be >= 1")
    if isinstance(w, Weight):
        field_fn, n = (lambda z: hs.trace_M(w, z)), w.n
    else:
        field_fn = w
    center = np.atleast_1d(np.asarray(center, dtype=complex))
    if n is None or center.size != n:
        raise ValueError("center dimension does not match the field")
    lin = ball_integral(field_fn, center, radius, rule)
    pw = ball_integral(lambda z: np.abs(field_fn(z)) ** r_exp, center, radius, rule)
    if lin <= 0:
        return math.inf
    from .quadrature import ball_volume

    vol = ball_volume(n, radius)
    return (pw / vol) ** (1 / r_exp) / (lin / vol)


def finite_monomials(w, k_max: int, variable: int = 0) -> list[int]:
    return [k for k in range(k_max + 1) if math.isfinite(monomial_norm_sq(w, k, variable))]


def bergman_dimension_evidence(w, k_max: int, variable: int = 0) -> int:
    """Number of degrees k <= k_max for which z_variable^k has finite weighted norm.

    This is a lower bound for the dimension of the weighted Bergman space.
    """
    return len(finite_monomials(w, k_max, variable))
