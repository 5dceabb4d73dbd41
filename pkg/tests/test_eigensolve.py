import math

import numpy as np
import pytest
import scipy.sparse as sp

from dbarspec import eigensolve as E


def laplacian_1d(n):
    h = 1.0 / (n + 1)
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]).tocsr() / h ** 2


def fd_levels(n):
    h = 1.0 / (n + 1)
    k = np.arange(1, n + 1)
    return (2 - 2 * np.cos(k * math.pi * h)) / h ** 2


def random_hermitian(dim, density, seed):
    r = np.random.default_rng(seed)
    a = sp.random(dim, dim, density=density, random_state=r, dtype=float) \
        + 1j * sp.random(dim, dim, density=density, random_state=r, dtype=float)
    return (a + a.conj().T + sp.diags(r.normal(size=dim) * 4)).tocsr()


def test_diagonal_operator():
    d = np.array([3.0, -1.0, 2.0, 0.5, 10.0])
    s = E.lowest_eigenpairs(sp.diags(d).tocsr(), 3)
    np.testing.assert_allclose(s.values, [-1.0, 0.5, 2.0])


def test_rejects_non_hermitian():
    with pytest.raises(E.NotHermitianOperatorError):
        E.SparseHermitianOperator(sp.csr_matrix(np.array([[1.0, 1.0], [0.0, 1.0]])))


def test_gershgorin_bounds_contain_spectrum():
    a = random_hermitian(200, 0.05, 1)
    op = E.SparseHermitianOperator(a)
    lo, hi = op.gershgorin_bounds()
    w = np.linalg.eigvalsh(a.toarray())
    assert lo <= w[0] and w[-1] <= hi


@pytest.mark.parametrize("dense_limit", [0, 10_000])
def test_finite_difference_oracle(dense_limit):
    n = 3000
    s = E.lowest_eigenpairs(laplacian_1d(n), 12, tol=1e-10, dense_limit=dense_limit) if dense_limit == 0 else \
        E.lowest_eigenpairs(laplacian_1d(400), 12)
    exact = fd_levels(n if dense_limit == 0 else 400)[:12]
    np.testing.assert_allclose(s.values, exact, rtol=1e-10)
    assert s.complete


def test_lanczos_matches_dense_with_cutoff():
    a = random_hermitian(1500, 0.004, 7)
    w = np.linalg.eigvalsh(a.toarray())
    cutoff = float(w[60] + w[61]) / 2
    s = E.eigenpairs_below(a, cutoff, dense_limit=0, block=8, keep_vectors=True)
    np.testing.assert_allclose(s.values, w[:61], atol=1e-8 * max(abs(w[0]), abs(w[-1])))
    v = s.vectors
    np.testing.assert_allclose(v.conj().T @ v, np.eye(v.shape[1]), atol=1e-10)
    assert np.all(s.residuals <= 1e-8 * E.SparseHermitianOperator(a).norm_bound())


def test_deterministic_for_fixed_seed():
    a = random_hermitian(1200, 0.005, 3)
    s1 = E.lowest_eigenpairs(a, 20, dense_limit=0, seed=5)
    s2 = E.lowest_eigenpairs(a, 20, dense_limit=0, seed=5)
    assert np.array_equal(s1.values, s2.values)


def test_degenerate_eigenvalues_are_all_found():
    d = np.repeat(np.arange(1.0, 11.0), 7)
    a = sp.diags(np.concatenate([d, 50 + np.arange(3000.0)])).tocsr()
    s = E.eigenpairs_below(a, 10.5, dense_limit=0, block=4)
    assert s.values.size == 70
    got = E.cluster(s.values)
    assert [m for _, m in got] == [7] * 10
    np.testing.assert_allclose([v for v, _ in got], np.arange(1.0, 11.0), rtol=1e-10)


def test_cluster_examples():
    got = E.cluster([0.0, 1e-4, 1.0, 1.0005, 3.0])
    assert [m for _, m in got] == [2, 2, 1]
    np.testing.assert_allclose([v for v, _ in got], [5e-5, 1.00025, 3.0], rtol=1e-14)
    assert E.cluster([0, 0.1, 0.2], cluster_tol=0.15) == [(0.05, 2), (0.2, 1)]
    assert E.cluster([]) == []
    np.testing.assert_array_equal(E.cluster_ids([2, 0, 2.0001]), [0, 1, 1])


def test_spectral_gap_and_kernel():
    s = E.SpectrumApprox([0.0, 1e-9, 0.5, 0.5, 2.0], np.zeros(5), 3.0)
    assert s.kernel_dim == 2
    assert E.spectral_gap(s) == pytest.approx(0.5)
    assert E.spectral_gap(E.SpectrumApprox([0.0], [0.0], 1.0)) == math.inf


def test_csv_export():
    s = E.SpectrumApprox([1.0, 1.0, 2.0], [1e-12, 1e-12, 1e-12], 3.0)
    lines = s.to_csv().splitlines()
    assert lines[0] == "index,value,residual,cluster_id"
    assert lines[3].endswith(",1")
