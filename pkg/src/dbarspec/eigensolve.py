"""Lowest eigenpairs of sparse Hermitian operators and multiplicity clustering.

Large problems use block Lanczos with full reorthogonalization and locking,
run on (H - sigma)^-1.  sigma starts below the Gershgorin lower bound and is
moved up to just below the lowest unresolved Ritz value after each restart,
so the unresolved low end stays dominant for the inverse.  Ritz values and
residuals are always recomputed with H itself.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.linalg.blas import dznrm2, zgemm
from scipy.sparse.linalg import splu

DEFAULT_TOL = 1e-8
KERNEL_TOL = 1e-6
CLUSTER_REL = 1e-3
DENSE_LIMIT = 2000


class NotHermitianOperatorError(ValueError):
    pass


@dataclass
class SparseHermitianOperator:
    matrix: sp.csr_matrix
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=complex)
        if m.shape[0] != m.shape[1]:
            raise NotHermitianOperatorError(f"operator must be square, got {m.shape}")
        diff = m - m.conj().T
        scale = max(abs(m).max() if m.nnz else 0.0, 1.0)
        if diff.nnz and abs(diff).max() > 1e-12 * scale:
            raise NotHermitianOperatorError("operator is not Hermitian")
        m = m.tocsr()
        m.sort_indices()
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_dense(cls, a, metadata: dict | None = None) -> "SparseHermitianOperator":
        return cls(sp.csr_matrix(np.asarray(a, dtype=complex)), metadata or {})

    def gershgorin_bounds(self) -> tuple[float, float]:
        d = self.matrix.diagonal().real
        off = np.asarray(abs(self.matrix).sum(axis=1)).ravel() - np.abs(d)
        return float(np.min(d - off)), float(np.max(d + off))

    def norm_bound(self) -> float:
        lo, hi = self.gershgorin_bounds()
        return max(abs(lo), abs(hi), 1e-300)

    def __matmul__(self, x):
        return self.matrix @ x

    def triplets(self) -> str:
        coo = self.matrix.tocoo()
        lines = [f"{r} {c} {v.real!r} {v.imag!r}" for r, c, v in zip(coo.row, coo.col, coo.data)]
        return "\n".join(["# row col re im"] + lines) + "\n"


def cluster(values, cluster_tol=None) -> list[tuple[float, int]]:
    """Greedy merge of ascending values; a cluster absorbs v while v - start <= tol(start).

    ``cluster_tol`` is a float or a callable of the cluster start value; the
    default is 1e-3 * (1 + |start|).  Cluster value is the mean.
    """
    vals = np.sort(np.asarray(values, dtype=float))
    if cluster_tol is None:
        tol_of = lambda v: CLUSTER_REL * (1 + abs(v))
    elif callable(cluster_tol):
        tol_of = cluster_tol
    else:
        tol_of = lambda v: float(cluster_tol)
    out: list[tuple[float, int]] = []
    i = 0
    while i < vals.size:
        j = i + 1
        while j < vals.size and vals[j] - vals[i] <= tol_of(vals[i]):
            j += 1
        out.append((float(np.mean(vals[i:j])), j - i))
        i = j
    return out


def bulk_clusters(values, min_multiplicity: int = 5, cluster_tol=None) -> list[tuple[float, int]]:
    """Clusters of multiplicity >= min_multiplicity.

    On a truncated domain nearly simple boundary states fill the gaps between
    degenerate levels; this keeps only the degenerate ones.
    """
    return [c for c in cluster(values, cluster_tol) if c[1] >= min_multiplicity]


def cluster_ids(values, cluster_tol=None) -> np.ndarray:
    ids = []
    for cid, (_, mult) in enumerate(cluster(values, cluster_tol)):
        ids.extend([cid] * mult)
    return np.array(ids, dtype=int)


@dataclass
class SpectrumApprox:
    """Ascending eigenvalues below ``cutoff`` with residuals ||Hx - lambda x|| / ||x||.

    ``complete`` says whether every eigenvalue below ``cutoff`` is believed
    listed; ``flags`` records solver trouble (non-convergence etc.).
    """

    values: np.ndarray
    residuals: np.ndarray
    cutoff: float
    complete: bool = True
    kernel_tol: float = KERNEL_TOL
    flags: list = field(default_factory=list)
    vectors: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.residuals = np.asarray(self.residuals, dtype=float)

    @property
    def clusters(self) -> list[tuple[float, int]]:
        return cluster(self.values)

    @property
    def kernel_dim(self) -> int:
        return int(np.sum(np.abs(self.values) <= self.kernel_tol))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index", "value", "residual", "cluster_id"])
        for i, (v, r, c) in enumerate(zip(self.values, self.residuals, cluster_ids(self.values))):
            writer.writerow([i, repr(float(v)), repr(float(r)), int(c)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "count": int(self.values.size),
            "cutoff": self.cutoff,
            "complete": self.complete,
            "kernel_tol": self.kernel_tol,
            "kernel_dim": self.kernel_dim,
            "clusters": [[v, m] for v, m in self.clusters],
            "max_residual": float(self.residuals.max()) if self.residuals.size else 0.0,
            "flags": list(self.flags),
        }


def spectral_gap(s: SpectrumApprox) -> float:
    """Smallest cluster value above the kernel tolerance; +inf when none lies below the cutoff."""
    for v, _ in s.clusters:
        if v > s.kernel_tol:
            return v
    return math.inf


# ----------------------------------------------------------------------------
# solvers


def _as_operator(h) -> SparseHermitianOperator:
    if isinstance(h, SparseHermitianOperator):
        return h
    if sp.issparse(h):
        return SparseHermitianOperator(h)
    return SparseHermitianOperator.from_dense(h)


def _dense(op: SparseHermitianOperator):
    a = op.matrix.toarray()
    w, v = np.linalg.eigh(a)
    res = np.linalg.norm(a @ v - v * w, axis=0)
    return w, v, res


def _ch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a^H b without materializing the conjugate transpose."""
    if a.shape[1] == 0:
        return np.zeros((0, b.shape[1]), dtype=complex)
    return zgemm(1.0, a, b, trans_a=2)


def _column_norms(w: np.ndarray) -> np.ndarray:
    return np.array([dznrm2(w[:, j]) for j in range(w.shape[1])])


def _project_out(w: np.ndarray, *bases: np.ndarray) -> np.ndarray:
    """Classical Gram-Schmidt against ``bases``, repeated once when cancellation is severe.

    The remaining norm is read off the coefficients (||w||^2 - ||c||^2), the
    usual DGKS test, so no extra pass over w is needed to decide.
    """
    bases = [b for b in bases if b.shape[1]]
    w = np.asfortranarray(w, dtype=complex)
    if not bases:
        return w
    for sweep in range(2):
        before = _column_norms(w) ** 2
        removed = np.zeros_like(before)
        for basis in bases:
            c = _ch(basis, w)
            removed += np.einsum("ij,ij->j", c.real, c.real) + np.einsum("ij,ij->j", c.imag, c.imag)
            w = zgemm(-1.0, basis, c, beta=1.0, c=w, overwrite_c=True)
        if np.all(before - removed >= 0.5 * before):
            break
    return w


def _chol_qr(w: np.ndarray) -> np.ndarray | None:
    """Two passes of Cholesky QR; None when the Gram matrix is too ill-conditioned."""
    for _ in range(2):
        g = _ch(w, w)
        try:
            r = cholesky(0.5 * (g + g.conj().T), lower=False, check_finite=False)
        except LinAlgError:
            return None
        d = np.abs(np.diag(r))
        if d.min() <= 1e-6 * d.max():
            return None
        rinv = solve_triangular(r, np.eye(r.shape[0], dtype=complex), lower=False, check_finite=False)
        w = zgemm(1.0, w, rinv)
    return w


def _orthonormal_block(w: np.ndarray, rng: np.random.Generator, *bases: np.ndarray,
                       drop_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal columns spanning w, orthogonal to ``bases``; rank loss is refilled randomly."""
    w = _project_out(w, *bases)
    q = _chol_qr(w)
    if q is not None:
        return q
    q, r = np.linalg.qr(w)
    d = np.abs(np.diag(r))
    weak = d < drop_tol * max(d.max(initial=0.0), 1.0)
    if np.any(weak):
        q[:, weak] = rng.standard_normal((w.shape[0], int(weak.sum())))
        q, _ = np.linalg.qr(_project_out(q, *bases))
    return np.asfortranarray(q)


def _factor(op: SparseHermitianOperator, sigma: float):
    eye = sp.identity(op.dim, dtype=complex, format="csr")
    for bump in (0.0, 1e-7, 1e-5, 1e-3):
        try:
            return splu((op.matrix - (sigma - bump * (1 + abs(sigma))) * eye).tocsc(),
                        permc_spec="MMD_AT_PLUS_A")
        except RuntimeError:
            continue
    raise RuntimeError("shifted operator could not be factorized")


class _LockedSet:
    def __init__(self, dim: int):
        self.values: list[float] = []
        self.residuals: list[float] = []
        self._store = np.zeros((dim, 64), dtype=complex, order="F")

    @property
    def vectors(self) -> np.ndarray:
        return self._store[:, : len(self.values)]

    def add(self, vals, res, vecs):
        k, extra = len(self.values), len(vals)
        if k + extra > self._store.shape[1]:
            grown = np.zeros((self._store.shape[0], 2 * (k + extra)), dtype=complex, order="F")
            grown[:, :k] = self._store[:, :k]
            self._store = grown
        self._store[:, k:k + extra] = vecs
        self.values.extend(vals.tolist())
        self.residuals.extend(res.tolist())

    def sorted(self):
        order = np.argsort(np.array(self.values), kind="stable")
        return (np.array(self.values)[order], np.array(self.residuals)[order], self.vectors[:, order])


def _target(locked: _LockedSet, count: int | None, cutoff: float | None) -> float:
    if count is None:
        return cutoff
    known = np.sort(np.array(locked.values))
    return known[count - 1] if known.size >= count else math.inf


def _block_lanczos(op: SparseHermitianOperator, count: int | None, cutoff: float | None, tol: float,
                   seed: int, block: int, steps: int, max_restarts: int, max_count: int):
    dim = op.dim
    rng = np.random.default_rng(seed)
    lo, hi = op.gershgorin_bounds()
    hnorm = op.norm_bound()
    sigma = lo - 1e-3 * max(hi - lo, 1.0)
    lu = _factor(op, sigma)
    locked = _LockedSet(dim)
    flags: list[str] = []
    start = rng.standard_normal((dim, block)) + 1j * rng.standard_normal((dim, block))
    converged_all = False
    v = np.empty((dim, (steps + 1) * block), dtype=complex, order="F")
    theta = good = None
    for restart in range(max_restarts):
        if restart:
            # move the shift just below the lowest unresolved Ritz value
            low = theta[~good].min(initial=math.inf)
            if math.isfinite(low):
                delta = 0.1 * max(low - lo, 1e-3 * (hi - lo))
                if abs(low - delta - sigma) > 0.25 * delta:
                    sigma = low - delta
                    lu = _factor(op, sigma)
        lk = locked.vectors
        v[:, :block] = _orthonormal_block(start, rng, lk)
        for j in range(1, steps + 1):
            w = lu.solve(v[:, (j - 1) * block:j * block])
            v[:, j * block:(j + 1) * block] = _orthonormal_block(w, rng, lk, v[:, :j * block])
        hv = np.asfortranarray(op.matrix @ v)
        t = _ch(v, hv)
        theta, y = np.linalg.eigh(0.5 * (t + t.conj().T))
        # Ritz vectors are only formed up to one block past the current target
        nsel = min(theta.size, int(np.sum(theta < _target(locked, count, cutoff))) + block)
        x = v @ y[:, :nsel]
        res = _column_norms(hv @ y[:, :nsel] - x * theta[:nsel])
        del hv
        good = np.zeros(theta.size, dtype=bool)
        good[:nsel] = res <= tol * hnorm
        sel_good = good[:nsel]
        locked.add(theta[good], res[sel_good], x[:, sel_good])
        target = _target(locked, count, cutoff)
        fresh_below = int(np.sum(theta[good] < target))
        lowest_unconverged = theta[~good].min(initial=math.inf)
        if math.isfinite(target) and fresh_below == 0 and lowest_unconverged >= target:
            converged_all = True
            break
        if len(locked.values) >= max_count:
            flags.append(f"stopped at max_count={max_count}")
            break
        pending = np.where(~sel_good)[0][:block]
        start = x[:, pending]
        if start.shape[1] < block:
            extra = rng.standard_normal((dim, block - start.shape[1])) + 0j
            start = np.hstack([start, extra])
    else:
        flags.append(f"not converged after {max_restarts} restarts")
    vals, res, vecs = locked.sorted()
    return vals, res, vecs, converged_all, flags, sigma


def lowest_eigenpairs(h, k: int, tol: float = DEFAULT_TOL, seed: int = 0, dense_limit: int = DENSE_LIMIT,
                      block: int = 16, steps: int = 8, max_restarts: int = 200,
                      keep_vectors: bool = False) -> SpectrumApprox:
    """The k lowest eigenpairs; residuals are relative to the Gershgorin norm bound."""
    op = _as_operator(h)
    if not 0 < k < op.dim:
        raise ValueError(f"need 0 < k < D={op.dim}, got {k}")
    if op.dim <= dense_limit:
        w, v, res = _dense(op)
        return SpectrumApprox(w[:k], res[:k], float(w[k]), True, vectors=v[:, :k] if keep_vectors else None,
                              flags=["dense"])
    vals, res, vecs, ok, flags, _ = _block_lanczos(op, k, None, tol, seed, block, steps, max_restarts, 10 * k + block)
    cutoff = float(vals[k]) if vals.size > k else (float(vals[-1]) if vals.size else 0.0)
    return SpectrumApprox(vals[:k], res[:k], cutoff, ok, vectors=vecs[:, :k] if keep_vectors else None, flags=flags)


def eigenpairs_below(h, cutoff: float, tol: float = DEFAULT_TOL, seed: int = 0, dense_limit: int = DENSE_LIMIT,
                     block: int = 32, steps: int = 8, max_restarts: int = 400, max_count: int = 4000,
                     keep_vectors: bool = False) -> SpectrumApprox:
    """Every eigenpair with eigenvalue below ``cutoff``."""
    op = _as_operator(h)
    if op.dim <= dense_limit:
        w, v, res = _dense(op)
        m = w < cutoff
        return SpectrumApprox(w[m], res[m], cutoff, True, vectors=v[:, m] if keep_vectors else None, flags=["dense"])
    vals, res, vecs, ok, flags, _ = _block_lanczos(op, None, cutoff, tol, seed, block, steps, max_restarts, max_count)
    m = vals < cutoff
    return SpectrumApprox(vals[m], res[m], cutoff, ok, vectors=vecs[:, m] if keep_vectors else None, flags=flags)
