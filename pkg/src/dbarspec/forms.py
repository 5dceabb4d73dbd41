"""Compactly supported (0,q)-forms with exact Wirtinger derivatives.

Coefficients are polynomials in (z, zbar) times a quintic smoothstep cutoff
in s = |z|^2, a class closed under d/dz_j and d/dzbar_j.  Applying the
weighted adjoint introduces factors phi_{z_k}; those products support
zbar-derivatives through the complex Hessian, which is all the dbar of an
adjoint needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .quadrature import tensor_polar_ball_nodes
from .weights import Weight, as_points

_SMOOTHSTEP = np.polynomial.Polynomial([0, 0, 0, 10, -15, 6])
HOLOMORPHIC_TOL = 1e-10


class FormError(ValueError):
    pass


class Coefficient:
    n: int

    def __call__(self, z) -> np.ndarray:
        raise NotImplementedError

    def d(self, j: int, conj: bool) -> "Coefficient":
        """d/dzbar_j when ``conj`` else d/dz_j."""
        raise NotImplementedError

    @property
    def support_radius(self) -> float:
        raise NotImplementedError

    def __add__(self, other: "Coefficient") -> "Coefficient":
        return LinComb(self.n, ((1.0, self), (1.0, other)))

    def __rmul__(self, c: complex) -> "Coefficient":
        return LinComb(self.n, ((c, self),))

    def __neg__(self) -> "Coefficient":
        return LinComb(self.n, ((-1.0, self),))


def _cutoff_derivative(s: np.ndarray, m: int, a: float, b: float) -> np.ndarray:
    """m-th derivative in s of chi(s) = 1 - S((s - a^2) / (b^2 - a^2))."""
    width = b * b - a * a
    t = (s - a * a) / width
    inside = (t > 0) & (t < 1)
    out = np.zeros_like(s)
    if m == 0:
        out[t <= 0] = 1.0
        out[inside] = 1.0 - _SMOOTHSTEP(t[inside])
        return out
    out[inside] = -_SMOOTHSTEP.deriv(m)(t[inside]) / width ** m
    return out


@dataclass(frozen=True)
class PolyCutoff(Coefficient):
    """sum of c * z^alpha * zbar^beta * chi^(m)(|z|^2) over terms {(m, alpha + beta): c}.

    ``plateau`` < ``support`` are the radii where chi leaves 1 and reaches 0;
    ``support=None`` means no cutoff (a plain polynomial).
    """

    n: int
    terms: tuple
    plateau: float | None = None
    support: float | None = None

    @classmethod
    def build(cls, n: int, terms: dict, plateau: float | None = None, support: float | None = None):
        clean = tuple(sorted((k, complex(c)) for k, c in terms.items() if c != 0))
        if support is not None and not 0 <= (plateau or 0.0) < support:
            raise FormError("cutoff needs 0 <= plateau < support")
        return cls(n, clean, plateau, support)

    @property
    def support_radius(self) -> float:
        return math.inf if self.support is None else self.support

    def __call__(self, z) -> np.ndarray:
        z = as_points(z, self.n)
        zc = np.conj(z)
        s = np.sum(np.abs(z) ** 2, axis=-1)
        out = np.zeros(z.shape[0], dtype=complex)
        chis: dict[int, np.ndarray] = {}
        for (m, ex), c in self.terms:
            if m not in chis:
                chis[m] = np.ones_like(s) if self.support is None else _cutoff_derivative(s, m, self.plateau or 0.0, self.support)
            mono = np.prod(z ** np.array(ex[: self.n]), axis=-1) * np.prod(zc ** np.array(ex[self.n:]), axis=-1)
            out += c * mono * chis[m]
        return out

    def d(self, j: int, conj: bool) -> "PolyCutoff":
        slot = self.n + j if conj else j
        partner = j if conj else self.n + j  # d s / dzbar_j = z_j, d s / dz_j = zbar_j
        out: dict = {}
        for (m, ex), c in self.terms:
            if ex[slot] > 0:
                e = list(ex)
                e[slot] -= 1
                key = (m, tuple(e))
                out[key] = out.get(key, 0) + c * ex[slot]
            if self.support is not None:
                e = list(ex)
                e[partner] += 1
                key = (m + 1, tuple(e))
                out[key] = out.get(key, 0) + c
        return PolyCutoff.build(self.n, out, self.plateau, self.support)

    def is_holomorphic_polynomial(self) -> bool:
        return self.support is None and all(not any(ex[self.n:]) for (_, ex), _ in self.terms)


def monomial(n: int, alpha, beta=None, coeff: complex = 1.0, plateau: float | None = None,
             support: float | None = None) -> PolyCutoff:
    beta = (0,) * n if beta is None else tuple(beta)
    return PolyCutoff.build(n, {(0, tuple(alpha) + beta): coeff}, plateau, support)


def bump(n: int, plateau: float, support: float) -> PolyCutoff:
    return monomial(n, (0,) * n, plateau=plateau, support=support)


def random_coefficient(n: int, rng: np.random.Generator, degree: int = 2, terms: int = 3,
                       plateau: float = 0.6, support: float = 1.5) -> PolyCutoff:
    out: dict = {}
    for _ in range(terms):
        ex = tuple(int(v) for v in rng.integers(0, degree + 1, size=2 * n))
        while sum(ex) > degree:
            ex = tuple(int(v) for v in rng.integers(0, degree + 1, size=2 * n))
        out[(0, ex)] = out.get((0, ex), 0) + complex(rng.normal(), rng.normal())
    return PolyCutoff.build(n, out, plateau, support)


@dataclass(frozen=True)
class LinComb(Coefficient):
    n: int
    parts: tuple

    def __call__(self, z) -> np.ndarray:
        z = as_points(z, self.n)
        out = np.zeros(z.shape[0], dtype=complex)
        for c, f in self.parts:
            out += c * f(z)
        return out

    def d(self, j: int, conj: bool) -> "LinComb":
        return LinComb(self.n, tuple((c, f.d(j, conj)) for c, f in self.parts))

    @property
    def support_radius(self) -> float:
        return max((f.support_radius for _, f in self.parts), default=0.0)


def zero(n: int) -> LinComb:
    return LinComb(n, ())


@dataclass(frozen=True)
class GradFactor(Coefficient):
    """phi_{z_k} * inner."""

    weight: Weight
    k: int
    inner: Coefficient

    @property
    def n(self) -> int:
        return self.weight.n

    def __call__(self, z) -> np.ndarray:
        z = as_points(z, self.n)
        return self.weight.grad(z)[:, self.k] * self.inner(z)

    def d(self, j: int, conj: bool) -> Coefficient:
        if not conj:
            raise FormError("d/dz of a weight-gradient factor needs holomorphic second derivatives")
        return LinComb(self.n, ((1.0, HessFactor(self.weight, self.k, j, self.inner)),
                                (1.0, GradFactor(self.weight, self.k, self.inner.d(j, True)))))

    @property
    def support_radius(self) -> float:
        return self.inner.support_radius


@dataclass(frozen=True)
class HessFactor(Coefficient):
    """phi_{z_k zbar_j} * inner."""

    weight: Weight
    k: int
    j: int
    inner: Coefficient

    @property
    def n(self) -> int:
        return self.weight.n

    def __call__(self, z) -> np.ndarray:
        z = as_points(z, self.n)
        return self.weight.hessian(z)[:, self.k, self.j] * self.inner(z)

    def d(self, j: int, conj: bool) -> Coefficient:
        raise FormError("third derivatives of the weight are not available")

    @property
    def support_radius(self) -> float:
        return self.inner.support_radius


# ----------------------------------------------------------------------------
# forms


def _signed_sort(idx) -> tuple[int, tuple[int, ...]]:
    """Permutation sign and increasing order of distinct indices; sign 0 on repeats."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, tuple(sorted(idx))
    sign = 1
    for i in range(len(idx)):
        for k in range(i + 1, len(idx)):
            if idx[i] > idx[k]:
                sign = -sign
    return sign, tuple(sorted(idx))


@dataclass(frozen=True)
class TestForm:
    """sum over increasing J of u_J dzbar_J."""

    __test__ = False  # keep pytest from collecting this class

    n: int
    q: int
    coeffs: tuple  # ((J, Coefficient), ...)

    @classmethod
    def build(cls, n: int, q: int, coeffs: dict) -> "TestForm":
        if not 0 <= q <= n:
            raise FormError(f"degree {q} outside 0..{n}")
        for J in coeffs:
            if len(J) != q or tuple(sorted(set(J))) != tuple(J) or any(not 0 <= j < n for j in J):
                raise FormError(f"multiindex {J} is not increasing of length {q} in 0..{n - 1}")
        return cls(n, q, tuple(sorted(coeffs.items())))

    def component(self, idx) -> tuple[int, Coefficient | None]:
        sign, J = _signed_sort(idx)
        if sign == 0:
            return 0, None
        for K, c in self.coeffs:
            if K == J:
                return sign, c
        return 0, None

    @property
    def support_radius(self) -> float:
        return max((c.support_radius for _, c in self.coeffs), default=0.0)

    def cutoff_radii(self) -> tuple[float, ...]:
        radii: set[float] = set()
        for _, c in self.coeffs:
            radii |= _cutoff_radii(c)
        return tuple(sorted(radii))

    def __call__(self, z) -> dict:
        z = as_points(z, self.n)
        return {J: c(z) for J, c in self.coeffs}


def _cutoff_radii(c: Coefficient) -> set[float]:
    if isinstance(c, PolyCutoff):
        return {r for r in (c.plateau, c.support) if r}
    if isinstance(c, LinComb):
        out: set[float] = set()
        for _, f in c.parts:
            out |= _cutoff_radii(f)
        return out
    if isinstance(c, (GradFactor, HessFactor)):
        return _cutoff_radii(c.inner)
    return set()


def dbar_apply(u: TestForm) -> TestForm:
    """dbar(sum u_J dzbar_J) = sum_J sum_j du_J/dzbar_j dzbar_j ^ dzbar_J."""
    if u.q >= u.n:
        raise FormError("dbar of a top-degree form is zero by degree; input rejected")
    acc: dict[tuple, list] = {}
    for J, c in u.coeffs:
        for j in range(u.n):
            if j in J:
                continue
            sign, K = _signed_sort((j,) + J)
            acc.setdefault(K, []).append((float(sign), c.d(j, True)))
    return TestForm.build(u.n, u.q + 1, {K: LinComb(u.n, tuple(p)) for K, p in acc.items()})


def dbar_adjoint_apply(w: Weight, u: TestForm) -> TestForm:
    """(dbar^t_phi u)_K = -sum_k (d/dz_k - phi_{z_k}) u_{kK}."""
    if u.q < 1:
        raise FormError("the adjoint lowers degree; degree-0 input rejected")
    if w.n != u.n:
        raise FormError("weight and form dimensions differ")
    out: dict[tuple, LinComb] = {}
    for K in combinations(range(u.n), u.q - 1):
        parts = []
        for k in range(u.n):
            sign, c = u.component((k,) + K)
            if sign == 0:
                continue
            parts.append((-float(sign), c.d(k, False)))
            parts.append((float(sign), GradFactor(w, k, c)))
        if parts:
            out[K] = LinComb(u.n, tuple(parts))
    return TestForm.build(u.n, u.q - 1, out)


# ----------------------------------------------------------------------------
# weighted integrals


@dataclass(frozen=True)
class FormQuadrature:
    radial_order: int = 16
    simplex_order: int = 16
    angular_order: int = 16


DEFAULT_FORM_QUAD = FormQuadrature()


def _nodes(n: int, radius: float, breaks: tuple[float, ...], fq: FormQuadrature):
    rel = tuple(b / radius for b in breaks if 0 < b < radius)
    pts, wts = tensor_polar_ball_nodes(n, fq.radial_order, fq.simplex_order, fq.angular_order, rel)
    return pts * radius, wts * radius ** (2 * n)


def integrate(w: Weight, f, radius: float, breaks: tuple[float, ...] = (),
              fq: FormQuadrature = DEFAULT_FORM_QUAD) -> complex:
    """Integral of f(z) e^(-phi(z)) over the ball B_radius(0)."""
    pts, wts = _nodes(w.n, radius, breaks, fq)
    return complex(np.sum(wts * f(pts) * np.exp(-w.value(pts))))


def inner(w: Weight, u: TestForm, v: TestForm, fq: FormQuadrature = DEFAULT_FORM_QUAD) -> complex:
    """(u, v)_phi = sum' int u_J conj(v_J) e^(-phi)."""
    if (u.n, u.q) != (v.n, v.q):
        raise FormError("forms of different type")
    radius = min(u.support_radius, v.support_radius)
    if radius == 0:
        return 0j
    if not math.isfinite(radius):
        raise FormError("inner products need a compactly supported factor")
    breaks = tuple(sorted(set(u.cutoff_radii()) | set(v.cutoff_radii())))
    vd = dict(v.coeffs)

    def f(z):
        tot = np.zeros(z.shape[0], dtype=complex)
        for J, c in u.coeffs:
            if J in vd:
                tot += c(z) * np.conj(vd[J](z))
        return tot

    return integrate(w, f, radius, breaks, fq)


def norm_sq(w: Weight, u: TestForm, fq: FormQuadrature = DEFAULT_FORM_QUAD) -> float:
    return inner(w, u, u, fq).real


def kmh_sides(w: Weight, u: TestForm, fq: FormQuadrature = DEFAULT_FORM_QUAD) -> tuple[float, float]:
    """Both sides of the weighted Kohn-Morrey-Hoermander identity for a compactly supported u.

    lhs = ||dbar u||^2 + ||dbar^t u||^2
    rhs = sum' sum_j ||du_J/dzbar_j||^2 + sum' int sum_jk phi_{j kbar} u_{jK} conj(u_{kK}) e^(-phi)
    """
    if not 1 <= u.q <= u.n:
        raise FormError("the identity is stated for 1 <= q <= n")
    if not u.coeffs:
        return 0.0, 0.0
    radius = u.support_radius
    if not math.isfinite(radius):
        raise FormError("kmh_sides needs compact support")
    lhs = norm_sq(w, dbar_adjoint_apply(w, u), fq)
    if u.q < u.n:
        lhs += norm_sq(w, dbar_apply(u), fq)
    breaks = u.cutoff_radii()
    n = u.n

    def grad_part(z):
        tot = np.zeros(z.shape[0])
        for _, c in u.coeffs:
            for j in range(n):
                tot += np.abs(c.d(j, True)(z)) ** 2
        return tot

    def hess_part(z):
        m = w.hessian(z)
        tot = np.zeros(z.shape[0], dtype=complex)
        for K in combinations(range(n), u.q - 1):
            vals = []
            for j in range(n):
                sign, c = u.component((j,) + K)
                vals.append(sign * c(z) if sign else np.zeros(z.shape[0], dtype=complex))
            vals = np.stack(vals, axis=-1)
            tot += np.einsum("pj,pjk,pk->p", vals, m, np.conj(vals))
        return tot

    rhs = integrate(w, grad_part, radius, breaks, fq).real + integrate(w, hess_part, radius, breaks, fq).real
    return float(lhs), float(rhs)


def hessian_quadratic(w: Weight, u: TestForm, z) -> np.ndarray:
    """Pointwise sum' sum_jk phi_{j kbar} u_{jK} conj(u_{kK})."""
    z = as_points(z, u.n)
    m = w.hessian(z)
    tot = np.zeros(z.shape[0], dtype=complex)
    for K in combinations(range(u.n), u.q - 1):
        vals = []
        for j in range(u.n):
            sign, c = u.component((j,) + K)
            vals.append(sign * c(z) if sign else np.zeros(z.shape[0], dtype=complex))
        vals = np.stack(vals, axis=-1)
        tot += np.einsum("pj,pjk,pk->p", vals, m, np.conj(vals))
    return tot.real


# ----------------------------------------------------------------------------
# closed-form actions of the complex Laplacian


def box_on_holomorphic(w: Weight, g: TestForm, z) -> dict:
    """sum' sum_jk phi_{jbar k} g_{kK} dzbar_j ^ dzbar_K, valid for holomorphic coefficients."""
    z = as_points(z, g.n)
    for _, c in g.coeffs:
        for j in range(g.n):
            if np.max(np.abs(c.d(j, True)(z)), initial=0.0) > HOLOMORPHIC_TOL:
                raise FormError("coefficient is not holomorphic at the sample points")
    if g.q == 0:
        return {(): np.zeros(z.shape[0], dtype=complex)}
    m = w.hessian(z)
    out: dict[tuple, np.ndarray] = {}
    for K in combinations(range(g.n), g.q - 1):
        for j in range(g.n):
            if j in K:
                continue
            sign_out, J = _signed_sort((j,) + K)
            acc = np.zeros(z.shape[0], dtype=complex)
            for k in range(g.n):
                sign, c = g.component((k,) + K)
                if sign:
                    acc += m[:, k, j] * sign * c(z)
            out[J] = out.get(J, 0) + sign_out * acc
    return out


def box_top_degree(w: Weight, g: Coefficient, z) -> np.ndarray:
    """-1/4 Delta g + sum_j phi_{z_j} dg/dzbar_j + 1/4 Delta(phi) g for g dzbar_1 ^ ... ^ dzbar_n."""
    z = as_points(z, w.n)
    grad = w.grad(z)
    out = w.laplacian(z) / 4 * g(z)
    for j in range(w.n):
        gj = g.d(j, True)
        out = out - gj.d(j, False)(z) + grad[:, j] * gj(z)
    return out
