"""Pointwise spectral analysis of the complex Hessian field M_phi(z)."""

from __future__ import annotations

import numpy as np

from .weights import Weight

JACOBI_TOL = 1e-14
HERMITIAN_TOL = 1e-12


class NotHermitianError(ValueError):
    pass


def _check_hermitian(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise NotHermitianError(f"expected square matrices, got shape {a.shape}")
    ah = np.conj(np.swapaxes(a, -1, -2))
    scale = np.linalg.norm(a, axis=(-2, -1))
    if np.any(np.linalg.norm(a - ah, axis=(-2, -1)) > HERMITIAN_TOL * np.maximum(scale, 1.0)):
        raise NotHermitianError("matrix is not Hermitian")
    return 0.5 * (a + ah)


def jacobi_eigh(a, tol: float = JACOBI_TOL, max_sweeps: int = 60):
    """Cyclic complex Jacobi eigendecomposition of a batch of Hermitian matrices.

    Returns ``(w, v)`` with eigenvalues ascending along the last axis and
    ``a = v @ diag(w) @ v^H``.  Every matrix in the batch receives the same
    pivot sequence; rotation angles are per matrix.
    """
    a = np.array(_check_hermitian(a), copy=True)
    n = a.shape[-1]
    batch = a.shape[:-2]
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
    scale = np.linalg.norm(a, axis=(-2, -1))
    offmask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a[..., offmask]) ** 2, axis=-1)) if n > 1 else np.zeros(batch)
        if np.all(off <= tol * scale):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[..., p, q]
                mag = np.abs(apq)
                active = mag > tol * scale / n
                safe = np.where(active, mag, 1.0)
                phase = np.where(active, apq / safe, 1.0)
                theta = (a[..., q, q].real - a[..., p, p].real) / (2 * safe)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta ** 2 + 1))
                c = 1 / np.sqrt(t * t + 1)
                s = np.where(active, t * c, 0.0)
                c = np.where(active, c, 1.0)
                pc = np.conj(phase)
                # columns: U = [[c, s], [-s conj(e), c conj(e)]] on (p, q)
                colp, colq = a[..., :, p].copy(), a[..., :, q].copy()
                a[..., :, p] = c[..., None] * colp - (s * pc)[..., None] * colq
                a[..., :, q] = s[..., None] * colp + (c * pc)[..., None] * colq
                rowp, rowq = a[..., p, :].copy(), a[..., q, :].copy()
                a[..., p, :] = c[..., None] * rowp - (s * phase)[..., None] * rowq
                a[..., q, :] = s[..., None] * rowp + (c * phase)[..., None] * rowq
                a[..., p, q] = np.where(active, 0.0, a[..., p, q])
                a[..., q, p] = np.where(active, 0.0, a[..., q, p])
                vp, vq = v[..., :, p].copy(), v[..., :, q].copy()
                v[..., :, p] = c[..., None] * vp - (s * pc)[..., None] * vq
                v[..., :, q] = s[..., None] * vp + (c * pc)[..., None] * vq
    w = np.real(np.diagonal(a, axis1=-2, axis2=-1))
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    return w, v


def eigvals_ascending(a) -> np.ndarray:
    """Ascending real eigenvalues of a (batch of) Hermitian matrix."""
    a = np.asarray(a, dtype=complex)
    if a.shape[-1] == 1:
        return _check_hermitian(a)[..., 0, :].real
    return jacobi_eigh(a)[0]


def s_q(w: Weight, z, q: int) -> np.ndarray:
    """Sum of the q smallest eigenvalues of M_phi(z)."""
    if not 1 <= q <= w.n:
        raise ValueError(f"q must satisfy 1 <= q <= {w.n}, got {q}")
    lam = eigvals_ascending(w.hessian(z))
    return np.sum(lam[..., :q], axis=-1)


def trace_M(w: Weight, z) -> np.ndarray:
    return np.trace(w.hessian(z), axis1=-2, axis2=-1).real


def hs_norm_sq(w: Weight, z) -> np.ndarray:
    """Squared Hilbert-Schmidt norm sum_jk |M_jk|^2 = tr(M^2)."""
    m = w.hessian(z)
    return np.sum(np.abs(m) ** 2, axis=(-2, -1))
