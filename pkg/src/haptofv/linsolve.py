"""Implicit Neumann diffusion solves ``(I - k*Lap) u = f``.

1D uses a banded tridiagonal solve.  The matrix is a strictly diagonally
dominant M-matrix, so elimination needs no pivoting and every operation
adds nonnegative quantities: nonnegative right-hand sides give nonnegative
solutions in floating point.  2D uses a sparse LU factorization with a
symmetric fill-reducing ordering and no pivoting; the factors of an
M-matrix keep nonpositive off-diagonals, so the triangular solves are
sign-preserving as well.  Factorizations are cached per ``(grid, k)``.
A Jacobi-preconditioned CG solver is kept as an alternative.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import splu

from .grid import Grid


class SolverError(RuntimeError):
    """Linear solve failed to converge."""


def _tridiag_bands(n: int, r: float) -> np.ndarray:
    ab = np.empty((3, n))
    ab[0, :] = -r
    ab[2, :] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[1, 0] = ab[1, -1] = 1.0 + r
    return ab


def solve_tridiagonal(f: np.ndarray, r: float) -> np.ndarray:
    """Solve ``(I - r*D2) u = f`` along axis 0, ``D2`` the unit Neumann stencil."""
    if r == 0.0:
        return f.copy()
    ab = _tridiag_bands(f.shape[0], r)
    return solve_banded((1, 1), ab, f, overwrite_b=False, check_finite=False)


@lru_cache(maxsize=16)
def laplacian_matrix(grid: Grid):
    """Sparse Neumann Laplacian (C-order unknowns) and its negated diagonal."""
    mats = []
    for n, dx in zip(grid.cells, grid.spacing):
        main = np.full(n, -2.0)
        main[0] = main[-1] = -1.0
        mats.append(sp.diags([np.ones(n - 1), main, np.ones(n - 1)], [-1, 0, 1]) / dx**2)
    if grid.dim == 1:
        L = mats[0]
    else:
        L = sp.kron(mats[0], sp.identity(grid.cells[1])) + sp.kron(sp.identity(grid.cells[0]), mats[1])
    L = sp.csr_matrix(L)
    return L, -L.diagonal()


@lru_cache(maxsize=32)
def _factor(grid: Grid, k: float):
    L, _ = laplacian_matrix(grid)
    A = sp.csc_matrix(sp.identity(grid.size) - k * L)
    return splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                options=dict(SymmetricMode=True))


def solve_direct(grid: Grid, f: np.ndarray, k: float) -> np.ndarray:
    """Sparse LU solve of ``(I - k*Lap) u = f`` (any dimension)."""
    return _factor(grid, float(k)).solve(np.ascontiguousarray(f).ravel()).reshape(f.shape)


def solve_cg(grid: Grid, f: np.ndarray, k: float, rtol: float = 1e-10,
             maxiter: int = 10_000, x0=None):
    """Preconditioned CG for ``(I - k*Lap) u = f``; returns ``(u, iterations)``."""
    L, negdiag = laplacian_matrix(grid)
    b = f.ravel()
    bnorm = float(np.sqrt(b @ b))
    if bnorm == 0.0:
        return np.zeros_like(f), 0
    minv = 1.0 / (1.0 + k * negdiag)
    x = b.copy() if x0 is None else x0.ravel().copy()
    r = b - (x - k * (L @ x))
    z = minv * r
    p = z.copy()
    rz = float(r @ z)
    tol2 = (rtol * bnorm) ** 2
    for it in range(maxiter + 1):
        if float(r @ r) <= tol2:
            return x.reshape(f.shape), it
        ap = p - k * (L @ p)
        alpha = rz / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        z = minv * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"CG did not reach rtol={rtol} in {maxiter} iterations")


def implicit_diffusion(grid: Grid, f: np.ndarray, coeff: float, dt: float,
                       method: str = "auto", rtol: float = 1e-10) -> np.ndarray:
    """Backward-Euler diffusion step: solve ``(I - dt*coeff*Lap) u = f``."""
    k = dt * coeff
    if k == 0.0:
        return f.copy()
    if method == "auto":
        method = "tridiagonal" if grid.dim == 1 else "direct"
    if method == "tridiagonal":
        if grid.dim != 1:
            raise ValueError("tridiagonal solver is 1D only")
        return solve_tridiagonal(f, k / grid.spacing[0] ** 2)
    if method == "direct":
        return solve_direct(grid, f, k)
    if method == "cg":
        return solve_cg(grid, f, k, rtol=rtol)[0]
    raise ValueError(f"unknown solver {method!r}")
