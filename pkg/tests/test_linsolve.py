import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from haptofv.grid import Grid, integrate, laplacian_apply
from haptofv.linsolve import SolverError, implicit_diffusion, solve_cg, solve_direct, solve_tridiagonal

G1 = Grid.uniform(50, 2.0)
G2 = Grid(2, (16, 11), (1.0, 0.8))


def residual(g, u, f, k):
    return np.max(np.abs(u - k * laplacian_apply(g, u) - f))


@pytest.mark.parametrize("method", ["tridiagonal", "direct", "cg"])
def test_1d_solvers_agree(method, rng):
    f = rng.random(G1.shape)
    u = implicit_diffusion(G1, f, 0.3, 0.01, method)
    assert residual(G1, u, f, 0.003) < (1e-8 if method == "cg" else 1e-12)


@pytest.mark.parametrize("method", ["direct", "cg"])
def test_2d_solvers(method, rng):
    f = rng.random(G2.shape)
    u = implicit_diffusion(G2, f, 0.5, 0.02, method)
    assert residual(G2, u, f, 0.01) < 1e-9
    assert integrate(G2, u) == pytest.approx(integrate(G2, f), rel=1e-12)


def test_tridiagonal_rejects_2d(rng):
    with pytest.raises(ValueError):
        implicit_diffusion(G2, rng.random(G2.shape), 1.0, 0.1, "tridiagonal")
    with pytest.raises(ValueError):
        implicit_diffusion(G2, rng.random(G2.shape), 1.0, 0.1, "jacobi")


def test_zero_coefficient_is_identity(rng):
    f = rng.random(G2.shape)
    assert np.array_equal(implicit_diffusion(G2, f, 0.0, 0.1), f)
    assert np.array_equal(solve_tridiagonal(f[:, 0], 0.0), f[:, 0])


def test_cg_zero_rhs_and_iteration_cap(rng):
    u, it = solve_cg(G2, G2.zeros(), 1.0)
    assert it == 0 and np.all(u == 0.0)
    with pytest.raises(SolverError):
        solve_cg(G2, rng.random(G2.shape), 10.0, rtol=1e-14, maxiter=1)


@given(arrays(np.float64, (16, 11), elements=st.floats(0.0, 1e3)), st.floats(1e-6, 10.0))
def test_direct_solve_sign_preserving(f, k):
    u = solve_direct(G2, f, k)
    assert np.all(u >= 0.0)


@given(arrays(np.float64, (50,), elements=st.floats(0.0, 1e3)), st.floats(1e-6, 1e4))
def test_tridiagonal_sign_preserving(f, r):
    assert np.all(solve_tridiagonal(f, r) >= 0.0)


def test_constant_is_fixed_point():
    for g in (G1, G2):
        u = implicit_diffusion(g, g.full(0.7), 2.0, 0.5)
        np.testing.assert_allclose(u, 0.7, rtol=1e-13)
