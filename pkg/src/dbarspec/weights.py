"""Weight functions on C^n and their complex derivatives.

A weight is stored behaviourally: a value evaluator plus optional exact
Wirtinger-gradient and complex-Hessian evaluators.  Missing derivatives fall
back to central finite differences in the real coordinates.

All evaluators are vectorised over leading axes: a batch of points has shape
``(..., n)`` (complex), values come back with shape ``(...)``, gradients with
shape ``(..., n)`` and Hessians with shape ``(..., n, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

EPS = np.finfo(float).eps
H_GRAD = np.cbrt(EPS)
# second differences lose two orders to cancellation; eps**(1/4) balances that
H_HESS = EPS ** 0.25
SINGULAR_OFFSET = 1e-3


class WeightError(ValueError):
    """Invalid weight definition or parameters."""


class SingularityError(WeightError):
    """Derivative requested on a declared singular locus without an exact formula."""


def as_points(z, n: int) -> np.ndarray:
    """Coerce ``z`` to a complex array of shape ``(..., n)``."""
    z = np.asarray(z, dtype=complex)
    if n == 1 and (z.ndim == 0 or z.shape[-1] != 1):
        z = z[..., None]
    if z.shape[-1] != n:
        raise WeightError(f"expected points with trailing dimension {n}, got shape {z.shape}")
    return z


@dataclass(frozen=True)
class Weight:
    """A real C^2 function on C^n.

    ``singular`` lists loci where the weight fails to be C^2: ``"origin"``
    (z = 0) or ``"axis:j"`` (z_j = 0, zero based).  ``product_radial`` marks
    weights depending only on the moduli |z_1|, ..., |z_n|.
    """

    n: int
    value_fn: Callable[[np.ndarray], np.ndarray]
    grad_fn: Callable[[np.ndarray], np.ndarray] | None = None
    hessian_fn: Callable[[np.ndarray], np.ndarray] | None = None
    singular: tuple[str, ...] = ()
    name: str = "custom"
    params: Mapping[str, object] = field(default_factory=dict)
    product_radial: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise WeightError("dimension must be positive")
        for locus in self.singular:
            if locus != "origin" and not (locus.startswith("axis:") and 0 <= int(locus[5:]) < self.n):
                raise WeightError(f"unknown singular locus {locus!r}")

    @property
    def has_exact_derivatives(self) -> bool:
        return self.grad_fn is not None and self.hessian_fn is not None

    def value(self, z) -> np.ndarray:
        z = as_points(z, self.n)
        v = np.asarray(self.value_fn(z), dtype=float)
        if not np.all(np.isfinite(v)):
            raise WeightError(f"weight {self.name!r} returned a non-finite value")
        return v

    def on_singular_locus(self, z, tol: float = 0.0) -> np.ndarray:
        z = as_points(z, self.n)
        hit = np.zeros(z.shape[:-1], dtype=bool)
        for locus in self.singular:
            if locus == "origin":
                hit |= np.linalg.norm(z, axis=-1) <= tol
            else:
                hit |= np.abs(z[..., int(locus[5:])]) <= tol
        return hit

    def offset_singular(self, z, offset: float = SINGULAR_OFFSET) -> np.ndarray:
        """Push sample points lying within ``offset`` of a singular locus off it."""
        z = np.array(as_points(z, self.n), copy=True)
        for locus in self.singular:
            coords = range(self.n) if locus == "origin" else [int(locus[5:])]
            if locus == "origin":
                near = np.linalg.norm(z, axis=-1) < offset
                z[near, 0] += offset
            else:
                for j in coords:
                    near = np.abs(z[..., j]) < offset
                    z[near, j] += offset
        return z

    def _guard(self, z, exact: bool):
        if not self.singular:
            return
        if self.on_singular_locus(z).any() and not exact:
            raise SingularityError(
                f"weight {self.name!r}: derivative on singular locus {self.singular} "
                "with no exact formula"
            )

    def grad(self, z) -> np.ndarray:
        """Wirtinger gradient (d phi / d z_1, ..., d phi / d z_n)."""
        z = as_points(z, self.n)
        self._guard(z, self.grad_fn is not None)
        g = self.grad_fn(z) if self.grad_fn is not None else fd_grad(self.value_fn, z)
        g = np.asarray(g, dtype=complex)
        if not np.all(np.isfinite(g)):
            raise SingularityError(f"weight {self.name!r}: non-finite gradient")
        return g

    def hessian(self, z) -> np.ndarray:
        """Complex Hessian M_phi(z)[j, k] = d^2 phi / dz_j d zbar_k, Hermitian-symmetrised."""
        z = as_points(z, self.n)
        self._guard(z, self.hessian_fn is not None)
        m = self.hessian_fn(z) if self.hessian_fn is not None else fd_hessian(self.value_fn, z)
        m = np.asarray(m, dtype=complex)
        if not np.all(np.isfinite(m)):
            raise SingularityError(f"weight {self.name!r}: non-finite Hessian")
        return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))

    def laplacian(self, z) -> np.ndarray:
        """Real Laplacian, 4 tr M_phi."""
        return 4.0 * np.trace(self.hessian(z), axis1=-2, axis2=-1).real

    def fd_grad(self, z) -> np.ndarray:
        return fd_grad(self.value_fn, as_points(z, self.n))

    def fd_hessian(self, z) -> np.ndarray:
        m = fd_hessian(self.value_fn, as_points(z, self.n))
        return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))


def _real_steps(z: np.ndarray, base: float) -> np.ndarray:
    return base * (1.0 + np.abs(z))


def fd_grad(f, z: np.ndarray) -> np.ndarray:
    """Central-difference Wirtinger gradient, step cbrt(eps)(1 + |z_j|)."""
    n = z.shape[-1]
    h = _real_steps(z, H_GRAD)
    out = np.empty(z.shape, dtype=complex)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        hj = h[..., j:j + 1]
        dx = (f(z + hj * e) - f(z - hj * e)) / (2 * hj[..., 0])
        dy = (f(z + 1j * hj * e) - f(z - 1j * hj * e)) / (2 * hj[..., 0])
        out[..., j] = 0.5 * (dx - 1j * dy)
    return out


def fd_hessian(f, z: np.ndarray) -> np.ndarray:
    """Complex Hessian from nested central differences of the real Hessian."""
    n = z.shape[-1]
    h = _real_steps(z, H_HESS)
    # real coordinates ordered x_1, y_1, ..., x_n, y_n
    dirs = []
    for j in range(n):
        for unit in (1.0, 1j):
            e = np.zeros(n, dtype=complex)
            e[j] = unit
            dirs.append((e, j))
    m = len(dirs)
    real_h = np.empty(z.shape[:-1] + (m, m))
    for a in range(m):
        ea, ja = dirs[a]
        ha = h[..., ja:ja + 1]
        for b in range(a, m):
            eb, jb = dirs[b]
            hb = h[..., jb:jb + 1]
            da, db = ha * ea, hb * eb
            val = (f(z + da + db) - f(z + da - db) - f(z - da + db) + f(z - da - db)) / (
                4 * ha[..., 0] * hb[..., 0]
            )
            real_h[..., a, b] = real_h[..., b, a] = val
    out = np.empty(z.shape[:-1] + (n, n), dtype=complex)
    for j in range(n):
        for k in range(n):
            xx = real_h[..., 2 * j, 2 * k]
            yy = real_h[..., 2 * j + 1, 2 * k + 1]
            xy = real_h[..., 2 * j, 2 * k + 1]
            yx = real_h[..., 2 * j + 1, 2 * k]
            out[..., j, k] = 0.25 * ((xx + yy) + 1j * (xy - yx))
    return out


def fd_laplacian(f, z: np.ndarray, step: float = H_HESS) -> np.ndarray:
    """Real (4n+1)-point finite-difference Laplacian, independent of Wirtinger calculus."""
    n = z.shape[-1]
    h = step * (1.0 + np.linalg.norm(z, axis=-1))
    centre = f(z)
    total = np.zeros_like(centre)
    for j in range(n):
        for unit in (1.0, 1j):
            e = np.zeros(n, dtype=complex)
            e[j] = unit
            d = h[..., None] * e
            total = total + f(z + d) + f(z - d) - 2 * centre
    return total / h ** 2


# ----------------------------------------------------------------------------
# built-in weights


def _norm2(z):
    return np.sum(np.abs(z) ** 2, axis=-1)


def gaussian(n: int = 1, scale: float = 1.0) -> Weight:
    """phi(z) = scale |z|^2; M_phi = scale * identity."""
    scale = float(scale)

    def hess(z):
        return np.broadcast_to(scale * np.eye(n, dtype=complex), z.shape[:-1] + (n, n)).copy()

    return Weight(
        n=n,
        value_fn=lambda z: scale * _norm2(z),
        grad_fn=lambda z: scale * np.conj(z),
        hessian_fn=hess,
        name="gaussian",
        params={"n": n, "scale": scale},
        product_radial=True,
    )


def _radial_power_parts(alpha: float):
    """Value/gradient/Hessian of |z|^alpha on C^m, |z| the Euclidean norm."""
    a2 = alpha / 2.0

    def value(z):
        return _norm2(z) ** a2

    def grad(z):
        s = _norm2(z)[..., None]
        with np.errstate(divide="ignore", invalid="ignore"):
            g = a2 * s ** (a2 - 1) * np.conj(z)
        return np.where(s > 0, g, 0.0 if alpha > 1 or alpha == 0 else np.nan)

    def hess(z):
        m = z.shape[-1]
        s = _norm2(z)[..., None, None]
        outer = np.conj(z)[..., :, None] * z[..., None, :]
        eye = np.eye(m)
        with np.errstate(divide="ignore", invalid="ignore"):
            h = a2 * s ** (a2 - 2) * ((a2 - 1) * outer + s * eye)
        if alpha == 2:
            at_zero = eye
        elif alpha == 0 or alpha > 2:
            at_zero = np.zeros((m, m))
        else:
            at_zero = np.full((m, m), np.nan)
        return np.where(s > 0, h, at_zero)

    return value, grad, hess


def radial_power(alpha: float, n: int = 1) -> Weight:
    """phi(z) = |z|^alpha; for n = 1, Delta phi = alpha^2 |z|^(alpha - 2)."""
    alpha = float(alpha)
    if alpha < 0:
        raise WeightError("radial_power requires alpha >= 0")
    value, grad, hess = _radial_power_parts(alpha)
    singular = () if alpha >= 4 or alpha in (0.0, 2.0) else ("origin",)
    return Weight(
        n=n,
        value_fn=value,
        grad_fn=grad,
        hessian_fn=hess,
        singular=singular,
        name="radial_power",
        params={"alpha": alpha, "n": n},
        product_radial=True,
    )


def mixed_example() -> Weight:
    """phi(z1, z2) = |z1|^4 + |z1 z2|^2: psh, Bergman space infinite, Shigekawa fails."""

    def value(z):
        a, b = np.abs(z[..., 0]) ** 2, np.abs(z[..., 1]) ** 2
        return a * a + a * b

    def grad(z):
        z1, z2 = z[..., 0], z[..., 1]
        a, b = np.abs(z1) ** 2, np.abs(z2) ** 2
        return np.stack([2 * z1 * np.conj(z1) ** 2 + np.conj(z1) * b, a * np.conj(z2)], axis=-1)

    def hess(z):
        z1, z2 = z[..., 0], z[..., 1]
        a, b = np.abs(z1) ** 2, np.abs(z2) ** 2
        off = np.conj(z1) * z2
        row0 = np.stack([4 * a + b + 0j, off], axis=-1)
        row1 = np.stack([np.conj(off), a + 0j], axis=-1)
        return np.stack([row0, row1], axis=-2)

    return Weight(
        n=2,
        value_fn=value,
        grad_fn=grad,
        hessian_fn=hess,
        name="mixed_example",
        params={},
        product_radial=True,
    )


def harmonic_quadratic(n: int = 1) -> Weight:
    """phi(z) = Re(z_1^2 + ... + z_n^2); harmonic, so M_phi = 0."""
    return Weight(
        n=n,
        value_fn=lambda z: np.sum(z ** 2, axis=-1).real,
        grad_fn=lambda z: np.array(z, dtype=complex),
        hessian_fn=lambda z: np.zeros(z.shape[:-1] + (n, n), dtype=complex),
        name="harmonic",
        params={"n": n},
    )


def block_sum(blocks: Sequence[tuple[int, float]], name: str = "block_sum") -> Weight:
    """Sum of radial powers over consecutive coordinate blocks.

    ``blocks`` is a list of (block size, alpha); the weight is
    sum_b |(z_i)_{i in block b}|^alpha_b.
    """
    sizes = [int(s) for s, _ in blocks]
    if any(s < 1 for s in sizes):
        raise WeightError("block sizes must be positive")
    parts = [_radial_power_parts(float(a)) for _, a in blocks]
    edges = np.cumsum([0] + sizes)
    n = int(edges[-1])

    def value(z):
        return sum(p[0](z[..., edges[b]:edges[b + 1]]) for b, p in enumerate(parts))

    def grad(z):
        return np.concatenate([p[1](z[..., edges[b]:edges[b + 1]]) for b, p in enumerate(parts)], axis=-1)

    def hess(z):
        out = np.zeros(z.shape[:-1] + (n, n), dtype=complex)
        for b, p in enumerate(parts):
            sl = slice(edges[b], edges[b + 1])
            out[..., sl, sl] = p[2](z[..., sl])
        return out

    singular = []
    for b, (size, alpha) in enumerate(blocks):
        if not (alpha >= 4 or alpha in (0.0, 2.0)):
            singular.extend(f"axis:{j}" for j in range(edges[b], edges[b + 1]))
    return Weight(
        n=n,
        value_fn=value,
        grad_fn=grad,
        hessian_fn=hess,
        singular=tuple(singular),
        name=name,
        params={"blocks": [list(b) for b in blocks]},
        product_radial=all(s == 1 for s in sizes),
    )


def split_quartic(n: int, q: int) -> Weight:
    """phi_q = |(z_1..z_{q-1})|^4 + |(z_q..z_n)|^4."""
    if not 1 <= q <= n:
        raise WeightError("split_quartic requires 1 <= q <= n")
    blocks = ([(q - 1, 4.0)] if q > 1 else []) + [(n - q + 1, 4.0)]
    w = block_sum(blocks, name="split_quartic")
    return Weight(**{**w.__dict__, "params": {"n": n, "q": q}})


@dataclass(frozen=True)
class DecoupledWeight:
    """phi(z) = phi_1(z_1) + ... + phi_n(z_n) from one-variable components."""

    components: tuple[Weight, ...]

    def __post_init__(self):
        if not self.components:
            raise WeightError("decoupled weight needs at least one component")
        if any(c.n != 1 for c in self.components):
            raise WeightError("decoupled components must be one-variable weights")

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def total(self) -> Weight:
        comps = self.components
        n = len(comps)

        def value(z):
            return sum(c.value_fn(z[..., j:j + 1]) for j, c in enumerate(comps))

        def grad(z):
            return np.concatenate([c.grad(z[..., j:j + 1]) for j, c in enumerate(comps)], axis=-1)

        def hess(z):
            out = np.zeros(z.shape[:-1] + (n, n), dtype=complex)
            for j, c in enumerate(comps):
                out[..., j, j] = c.hessian(z[..., j:j + 1])[..., 0, 0]
            return out

        singular = tuple(f"axis:{j}" for j, c in enumerate(comps) if c.singular)
        exact = all(c.has_exact_derivatives for c in comps)
        return Weight(
            n=n,
            value_fn=value,
            grad_fn=grad if exact else None,
            hessian_fn=hess if exact else None,
            singular=singular,
            name="decoupled",
            params={"components": [{"name": c.name, **c.params} for c in comps]},
            product_radial=all(c.product_radial for c in comps),
        )


def decoupled(*components: Weight) -> DecoupledWeight:
    return DecoupledWeight(tuple(components))


def power_sum(alphas: Sequence[float]) -> DecoupledWeight:
    """sum_j |z_j|^alpha_j."""
    return decoupled(*(radial_power(a, 1) for a in alphas))


_BUILTINS = {
    "gaussian": gaussian,
    "radial_power": radial_power,
    "mixed_example": mixed_example,
    "split_quartic": split_quartic,
    "harmonic": harmonic_quadratic,
}


def builtin_names() -> list[str]:
    return sorted(_BUILTINS) + ["power_sum"]


def builtin(name: str, **params) -> Weight:
    """Look up a built-in weight by name; ``power_sum`` returns the total weight."""
    if name == "power_sum":
        alphas = params.pop("alphas", None)
        if alphas is None or params:
            raise WeightError("power_sum takes exactly one parameter 'alphas'")
        if any(float(a) < 0 for a in alphas):
            raise WeightError("power_sum requires alphas >= 0")
        return power_sum(alphas).total
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise WeightError(f"unknown weight {name!r}; known: {', '.join(builtin_names())}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise WeightError(f"invalid parameters for {name!r}: {exc}") from None
