"""Deterministic integration over disks, balls, polydisks and radial half-lines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import logsumexp
from scipy.stats import norm, qmc

CHUNK = 1 << 16


class QuadratureError(RuntimeError):
    """Non-finite integrand sample."""


@dataclass(frozen=True)
class QuadratureRule:
    """Scheme tag plus orders.

    ``scheme`` is ``"polar"`` (Gauss-Legendre radius x trapezoid angle, disks),
    ``"halton"`` (scrambled Halton, fixed seed, balls in R^{2n}, n >= 2) or
    ``"tensor_polar"`` (Gauss in |z|^2, collapsed simplex, trapezoid phases).
    """

    scheme: str = "polar"
    radial_order: int = 64
    angular_order: int = 128
    halton_log2: int = 15
    seed: int = 0
    simplex_order: int = 32
    polydisk_radial_order: int = 16
    polydisk_angular_order: int = 32


DEFAULT_RULE = QuadratureRule()


def ball_volume(n: int, radius: float = 1.0) -> float:
    """Lebesgue volume of a ball of the given radius in C^n = R^{2n}."""
    return math.pi ** n * radius ** (2 * n) / math.factorial(n)


@lru_cache(maxsize=32)
def _gauss01(order: int):
    x, w = leggauss(order)
    return 0.5 * (x + 1), 0.5 * w


@lru_cache(maxsize=32)
def disk_nodes(radial_order: int, angular_order: int):
    """Nodes and weights for the unit disk (complex nodes)."""
    r, wr = _gauss01(radial_order)
    theta = 2 * np.pi * np.arange(angular_order) / angular_order
    pts = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    wts = ((wr * r)[:, None] * np.full(angular_order, 2 * np.pi / angular_order)[None, :]).ravel()
    return pts, wts


def _evaluate(f, pts: np.ndarray) -> np.ndarray:
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], CHUNK):
        block = pts[start:start + CHUNK]
        vals = np.asarray(f(block), dtype=float)
        if vals.shape != (block.shape[0],):
            vals = np.broadcast_to(vals, (block.shape[0],))
        bad = ~np.isfinite(vals)
        if bad.any():
            where = block[np.argmax(bad)]
            raise QuadratureError(f"non-finite integrand at {where}")
        out[start:start + CHUNK] = vals
    return out


def disk_integral(f, center: complex = 0.0, radius: float = 1.0, rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Integral of ``f`` over the disk B_radius(center) in C.

    ``f`` receives a 1-d complex array of points and returns real values.
    """
    pts, wts = disk_nodes(rule.radial_order, rule.angular_order)
    vals = _evaluate(f, complex(center) + radius * pts)
    return float(radius ** 2 * np.dot(wts, vals))


@lru_cache(maxsize=16)
def halton_ball_nodes(n: int, log2: int, seed: int):
    """Quasi-random points in the unit ball of C^n with equal weights vol / N."""
    sampler = qmc.Halton(d=2 * n + 1, scramble=True, seed=seed)
    u = sampler.random(1 << log2)
    radius = u[:, 0] ** (1.0 / (2 * n))
    g = norm.ppf(u[:, 1:])
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    x = radius[:, None] * g
    pts = x[:, 0::2] + 1j * x[:, 1::2]
    wts = np.full(pts.shape[0], ball_volume(n) / pts.shape[0])
    return pts, wts


def _simplex_nodes(dim: int, order: int):
    """Collapsed Gauss rule on {w in R^dim : w >= 0, sum w <= 1}; returns (points, weights)."""
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    x, wx = _gauss01(order)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([wx] * dim), indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    wt = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    pts = np.empty_like(u)
    remain = np.ones(u.shape[0])
    for i in range(dim):
        pts[:, i] = remain * u[:, i]
        if i < dim - 1:
            wt = wt * remain
        remain = remain * (1 - u[:, i])
    return pts, wt


@lru_cache(maxsize=16)
def tensor_polar_ball_nodes(n: int, radial_order: int, simplex_order: int, angular_order: int,
                            breakpoints: tuple[float, ...] = ()):
    """Deterministic rule for the unit ball of C^n.

    Uses t_j = |z_j|^2, so that dlambda = 2^-n dt dtheta, and t = s w with
    s = |z|^2 and w on the standard simplex (Jacobian s^(n-1)).  ``s`` is
    integrated by Gauss-Legendre on panels split at ``breakpoints`` (radii in
    (0, 1)); integrands smooth in |z|^2 on each panel are integrated to
    spectral accuracy.
    """
    edges = np.array([0.0] + sorted(b * b for b in breakpoints if 0 < b < 1) + [1.0])
    xs, ws = _gauss01(radial_order)
    s = np.concatenate([a + (b - a) * xs for a, b in zip(edges[:-1], edges[1:])])
    wsv = np.concatenate([(b - a) * ws for a, b in zip(edges[:-1], edges[1:])])
    wsv = wsv * s ** (n - 1)
    simp, wsimp = _simplex_nodes(n - 1, simplex_order)
    w_last = 1 - simp.sum(axis=1, keepdims=True)
    frac = np.concatenate([simp, w_last], axis=1)  # (p, n), sums to one
    theta = 2 * np.pi * np.arange(angular_order) / angular_order
    phase_grids = np.meshgrid(*([theta] * n), indexing="ij")
    phases = np.exp(1j * np.stack([g.ravel() for g in phase_grids], axis=1))  # (a^n, n)
    wphase = (2 * np.pi / angular_order) ** n
    moduli = np.sqrt(np.clip(s[:, None, None] * frac[None, :, :], 0, None))  # (m, p, n)
    pts = (moduli[:, :, None, :] * phases[None, None, :, :]).reshape(-1, n)
    wts = (wsv[:, None, None] * wsimp[None, :, None] * np.full(phases.shape[0], wphase)[None, None, :]).ravel()
    return pts, wts * 2.0 ** (-n)


def ball_integral(f, center, radius: float = 1.0, rule: QuadratureRule = DEFAULT_RULE,
                  scheme: str | None = None) -> float:
    """Integral of ``f`` over the Euclidean ball B_radius(center) in C^n.

    ``f`` receives points of shape (m, n).  The default scheme is the polar
    disk rule when n = 1 and scrambled Halton when n >= 2.
    """
    center = np.atleast_1d(np.asarray(center, dtype=complex))
    n = center.shape[0]
    scheme = scheme or ("polar" if n == 1 else rule.scheme if rule.scheme != "polar" else "halton")
    if scheme == "polar":
        if n != 1:
            raise ValueError("polar scheme only integrates over disks (n = 1)")
        pts, wts = disk_nodes(rule.radial_order, rule.angular_order)
        pts = pts[:, None]
    elif scheme == "halton":
        pts, wts = halton_ball_nodes(n, rule.halton_log2, rule.seed)
    elif scheme == "tensor_polar":
        pts, wts = tensor_polar_ball_nodes(n, rule.radial_order, rule.simplex_order,
                                           min(rule.angular_order, 64 if n == 1 else 32))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    vals = _evaluate(f, center[None, :] + radius * pts)
    return float(radius ** (2 * n) * np.dot(wts, vals))


@lru_cache(maxsize=8)
def polydisk_nodes(n: int, radial_order: int, angular_order: int):
    p1, w1 = disk_nodes(radial_order, angular_order)
    grids = np.meshgrid(*([np.arange(p1.size)] * n), indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    return p1[idx], np.prod(w1[idx], axis=1)


POLYDISK_MAX_NODES = 2_500_000  # tensor rules are coarsened per factor beyond this


def polydisk_integral(f, centers, radius: float = 1.0, rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Integral over B_radius(z_1) x ... x B_radius(z_n) by a tensor product of disk rules."""
    centers = np.atleast_1d(np.asarray(centers, dtype=complex))
    n = centers.shape[0]
    nr, na = rule.polydisk_radial_order, rule.polydisk_angular_order
    while (nr * na) ** n > POLYDISK_MAX_NODES and nr > 4:
        nr, na = nr // 2, max(8, na // 2)
    pts, wts = polydisk_nodes(n, nr, na)
    vals = _evaluate(f, centers[None, :] + radius * pts)
    return float(radius ** (2 * n) * np.dot(wts, vals))


# ----------------------------------------------------------------------------
# radial integrals on [0, infinity)

PEAK_RATIO = 1e-18
_SCAN = np.linspace(math.log(1e-12), math.log(1e8), 2001)


def _log_gauss_panels(t_lo: float, t_hi: float, width: float = 0.5, order: int = 16):
    npan = max(1, int(math.ceil((t_hi - t_lo) / width)))
    edges = np.linspace(t_lo, t_hi, npan + 1)
    x, w = _gauss01(order)
    t = (edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * x[None, :]).ravel()
    wt = ((edges[1:] - edges[:-1])[:, None] * w[None, :]).ravel()
    return t, wt


def radial_integral(log_g) -> float:
    """Integral of g over (0, inf) from a vectorised ``log_g(r)``; ``inf`` when not verified finite.

    Works in t = log r with the mass density r g(r).  The integral is declared
    divergent (``inf``) if that density has not dropped below 1e-18 of its
    peak at either end of the scan range [1e-12, 1e8]; otherwise it is
    truncated there and integrated by composite Gauss-Legendre in t.
    """
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        lm = np.asarray(log_g(np.exp(_SCAN)), dtype=float) + _SCAN
    if np.isnan(lm).any() or np.isposinf(lm).any():
        return math.inf
    peak = lm.max()
    if not np.isfinite(peak):
        return 0.0 if peak == -np.inf else math.inf
    thr = peak + math.log(PEAK_RATIO)
    if lm[0] > thr or lm[-1] > thr:
        return math.inf
    above = np.nonzero(lm > thr)[0]
    lo, hi = max(above[0] - 1, 0), min(above[-1] + 1, _SCAN.size - 1)
    t, wt = _log_gauss_panels(_SCAN[lo], _SCAN[hi])
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        vals = np.asarray(log_g(np.exp(t)), dtype=float) + t
    if np.isnan(vals).any():
        return math.inf
    return float(np.exp(logsumexp(vals, b=wt)))


def radial_moment(profile, k: int) -> float:
    """||z^k||^2 = 2 pi int_0^inf r^(2k+1) exp(-phi(r)) dr for a radial one-variable weight.

    ``profile`` is a Weight (evaluated on the positive real axis) or a callable r -> phi(r).
    """
    if k < 0:
        raise ValueError("monomial degree must be non-negative")
    phi = profile.value if hasattr(profile, "value") else profile

    def log_g(r):
        return (2 * k + 1) * np.log(r) - phi(r.astype(complex))

    return 2 * math.pi * radial_integral(log_g)


_INNER_T, _INNER_W = _log_gauss_panels(math.log(1e-14), math.log(1e16), width=1.0, order=16)


def _log_inner(phi2, r1: np.ndarray, power: int) -> np.ndarray:
    """log of int_0^inf r2^(2 power + 1) exp(-phi(r1, r2)) dr2 for each r1; +inf if unverified."""
    r2 = np.exp(_INNER_T)
    pts = np.stack(np.broadcast_arrays(r1[:, None], r2[None, :]), axis=-1).astype(complex)
    with np.errstate(over="ignore", invalid="ignore"):
        lm = (2 * power + 2) * _INNER_T[None, :] - phi2(pts)
    out = logsumexp(lm, b=_INNER_W[None, :], axis=1)
    peak = lm.max(axis=1)
    thr = peak + math.log(PEAK_RATIO)
    unresolved = (lm[:, 0] > thr) | (lm[:, -1] > thr) | np.isnan(lm).any(axis=1)
    out[unresolved] = np.inf
    return out


def monomial_norm_sq(weight, k: int, variable: int = 0) -> float:
    """Weighted L^2 norm squared of z_variable^k for product-radial weights.

    Handles one-variable radial weights, decoupled weights (by factorisation)
    and product-radial weights on C^2 (nested radial integrals).
    """
    components = getattr(weight, "components", None)
    if components is not None:
        total = 1.0
        for j, c in enumerate(components):
            total *= radial_moment(c, k if j == variable else 0)
        return total
    if not getattr(weight, "product_radial", False):
        raise ValueError("monomial norms need a product-radial weight")
    if weight.n == 1:
        return radial_moment(weight, k)
    if weight.n != 2:
        raise ValueError("nested radial integration supports n <= 2 only")
    other = 1 - variable

    def phi2(pts):
        z = np.empty_like(pts)
        z[..., variable] = pts[..., 0]
        z[..., other] = pts[..., 1]
        return weight.value(z)

    def log_g(r):
        return (2 * k + 1) * np.log(r) + _log_inner(phi2, r, 0)

    return (2 * math.pi) ** 2 * radial_integral(log_g)
