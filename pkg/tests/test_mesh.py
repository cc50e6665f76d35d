import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fano_continuity.mesh import (BandedSystem, InvalidSize, OutOfRange, SingularMatrix,
                                  build_mesh, fd_weights, solve_banded)


def test_rejects_small_mesh():
    with pytest.raises(InvalidSize):
        build_mesh(8)


def test_fd_weights_central_second_derivative():
    assert np.allclose(fd_weights([-1, 0, 1], 2), [1, -2, 1])


@pytest.mark.parametrize("a", [1.0, 2.0])
def test_lap_is_fourth_order(a):
    errs = []
    for n in (64, 128):
        m = build_mesh(n, a)
        x = m.nodes
        f = np.sin(3 * x)
        exact = a * ((1 - 2 * x) * 3 * np.cos(3 * x) - 9 * x * (1 - x) * np.sin(3 * x))
        errs.append(np.abs(m.lap(f) - exact).max())
    assert np.log2(errs[0] / errs[1]) > 3.5


def test_quadrature_polynomial_and_conservative():
    m = build_mesh(128)
    x = m.nodes
    assert abs(m.integrate(x ** 3) - 0.25) < 1e-10
    f = np.exp(np.sin(5 * x))
    assert abs(m.weights @ m.lap(f)) < 1e-12


def test_interpolation_exact_at_nodes_and_range():
    m = build_mesh(32)
    f = np.cos(m.nodes)
    assert m.interpolate(f, m.nodes[7]) == f[7]
    assert abs(m.interpolate(f, 0.3) - np.cos(0.3)) < 1e-8
    with pytest.raises(OutOfRange):
        m.interpolate(f, 1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(16, 80), st.integers(0, 2 ** 31))
def test_banded_matches_dense(n, seed):
    r = np.random.default_rng(seed)
    A = np.diag(4 + r.random(n)) + np.diag(r.random(n - 1), 1) + np.diag(r.random(n - 2), -2)
    b = r.random(n)
    sys = BandedSystem.from_matrix(A, b)
    assert np.allclose(sys.matvec(b), A @ b)
    assert np.allclose(solve_banded(sys), np.linalg.solve(A, b))


def test_banded_zero_row():
    A = np.eye(20)
    A[5, 5] = 0.0
    with pytest.raises(SingularMatrix) as exc:
        solve_banded(BandedSystem.from_matrix(A, np.ones(20), 1, 1))
    assert exc.value.index == 5
