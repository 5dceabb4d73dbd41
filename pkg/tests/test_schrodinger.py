import numpy as np
import pytest

from dbarspec import schrodinger as S
from dbarspec import weights as W
from dbarspec.eigensolve import lowest_eigenpairs

FREE = S.MagneticData(lambda x, y: (0 * x, 0 * y), lambda x, y: 0 * x, "top", "free")


def test_grid_geometry():
    g = S.Grid2D(2.0, 8)
    assert g.h == 0.5 and g.m == 7 and g.size == 49
    x, y = g.mesh()
    assert x[0, 1] - x[0, 0] == pytest.approx(0.5) and y[1, 0] - y[0, 0] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        S.Grid2D(-1.0, 8)


def test_field_free_operator_matches_exact_levels():
    g = S.Grid2D(1.0, 4)
    op = S.assemble(FREE, g)
    np.testing.assert_allclose(np.linalg.eigvalsh(op.matrix.toarray()), S.dirichlet_laplacian_levels(g), atol=1e-12)


def test_gaussian_field_is_constant():
    data = S.magnetic_data(W.gaussian())
    x, y = np.meshgrid(np.linspace(-3, 3, 7), np.linspace(-2, 2, 5))
    np.testing.assert_allclose(S.curl(data, x, y), 2.0, atol=1e-8)
    np.testing.assert_allclose(data.electric(x, y), 2.0)


@pytest.mark.parametrize("w", [W.radial_power(4), W.radial_power(6), W.gaussian(scale=0.5)], ids=lambda w: w.name)
def test_curl_is_half_laplacian(w, rng):
    x, y = rng.normal(size=20), rng.normal(size=20)
    data = S.magnetic_data(w)
    lap = w.laplacian((x + 1j * y)[:, None])
    np.testing.assert_allclose(S.curl(data, x, y), lap / 2, rtol=1e-6, atol=1e-6)


def test_operator_is_hermitian_and_positive():
    op = S.assemble(W.radial_power(4), S.Grid2D(4.0, 24))
    a = op.matrix.toarray()
    np.testing.assert_allclose(a, a.conj().T)
    assert np.linalg.eigvalsh(a)[0] > 0


def test_landau_oracle():
    assert list(S.landau_levels(3)) == [1.0, 2.0, 3.0]
    assert list(S.landau_levels(3, "zero")) == [0.0, 1.0, 2.0]


def test_zero_degree_is_shift_of_top_for_gaussian():
    g = S.Grid2D(5.0, 40)
    top = S.assemble(W.gaussian(), g, "top").matrix
    zero = S.assemble(W.gaussian(), g, "zero").matrix
    np.testing.assert_allclose((top - zero).toarray(), np.eye(g.size), atol=1e-12)
    assert S.assemble(W.gaussian(), g, "zero").metadata["derived_operator"]


def test_lattice_operator_matches_continuum_action():
    # both discretize the same operator; the difference on a smooth bump is O(h^2)
    w = W.radial_power(4)
    errs = []
    for N in (32, 64, 128):
        g = S.Grid2D(3.0, N)
        x, y = g.mesh()
        f = np.exp(-2 * (x ** 2 + y ** 2)) * (1 + 0.5 * x + 0.3j * y)
        a = (S.assemble(w, g).matrix @ f.ravel()).reshape(g.m, g.m)
        b = S.apply_conjugated_box(w, f, g)
        errs.append(np.max(np.abs(a - b)))
    assert errs[1] < errs[0] / 3 and errs[2] < errs[1] / 3


def test_confinement_warning():
    g = S.Grid2D(1.0, 8)
    op = S.assemble(W.radial_power(4), g, cutoff=10.0)
    assert not op.metadata["confinement"]["ok"] and op.metadata["warnings"]
    assert S.assemble(W.radial_power(4), S.Grid2D(4.0, 8), cutoff=10.0).metadata["confinement"]["ok"]
    assert S.choose_half_width(W.radial_power(4), 10.0) == 4.0


def test_requires_one_variable():
    with pytest.raises(ValueError):
        S.magnetic_data(W.gaussian(2)).potential(0.0, 0.0)


def _low(data, grid, k=10):
    return lowest_eigenpairs(S.assemble(data, grid), k, dense_limit=0).values


def test_gauge_invariance_linear():
    grid = S.Grid2D(6.0, 64)
    data = S.magnetic_data(W.gaussian())
    base = _low(data, grid)
    shifted = S.gauge_shift(data, lambda x, y: 0.7 * x - 1.3 * y, lambda x, y: (0.7 + 0 * x, -1.3 + 0 * y))
    assert np.max(np.abs(_low(shifted, grid) - base)) < 1e-6


def test_gauge_invariance_smooth():
    grid = S.Grid2D(6.0, 64)
    data = S.magnetic_data(W.radial_power(4))
    base = _low(data, grid)
    chi = lambda x, y: np.sin(0.8 * x) * np.cos(0.5 * y) + 0.1 * x * y
    shifted = _low(S.gauge_shift(data, chi), grid)
    assert np.max(np.abs(shifted - base) / base) < 1e-3
