"""Uniform cell-centred finite-volume mesh on an axis-aligned box with
zero-flux boundaries, and the discrete operators built on it.

Fields are plain numpy arrays of shape ``grid.shape`` (C order, axis 0 = x).
Face quantities are tuples with one array per axis holding the interior
faces only; boundary faces carry zero flux and are not stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ValidationError


@dataclass(frozen=True)
class Grid:
    dim: int
    cells: tuple
    lengths: tuple

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValidationError(f"grid.dim must be 1 or 2, got {self.dim}")
        cells = tuple(int(n) for n in self.cells)
        lengths = tuple(float(l) for l in self.lengths)
        if len(cells) != self.dim or len(lengths) != self.dim:
            raise ValidationError("grid.cells and grid.lengths need one entry per axis")
        if any(n < 3 for n in cells):
            raise ValidationError(f"need at least 3 cells per axis, got {cells}")
        if any(not (math.isfinite(l) and l > 0.0) for l in lengths):
            raise ValidationError(f"grid lengths must be positive, got {lengths}")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def uniform(cls, n: int, length: float = 1.0, dim: int = 1) -> "Grid":
        return cls(dim, (n,) * dim, (length,) * dim)

    @property
    def shape(self) -> tuple:
        return self.cells

    @property
    def size(self) -> int:
        return math.prod(self.cells)

    @property
    def spacing(self) -> tuple:
        return tuple(l / n for l, n in zip(self.lengths, self.cells))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def volume(self) -> float:
        return math.prod(self.lengths)

    def centers(self, axis: int) -> np.ndarray:
        """Cell-centre coordinates along ``axis`` (1D array)."""
        n, dx = self.cells[axis], self.spacing[axis]
        return (np.arange(n) + 0.5) * dx

    def mesh(self) -> tuple:
        """Broadcastable coordinate arrays, one per axis."""
        if self.dim == 1:
            return (self.centers(0),)
        return tuple(np.meshgrid(self.centers(0), self.centers(1), indexing="ij"))

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def full(self, value: float) -> np.ndarray:
        return np.full(self.shape, float(value))


def check_field(grid: Grid, u: np.ndarray, name: str = "field") -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != grid.shape:
        raise ValueError(f"{name} has shape {u.shape}, grid expects {grid.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError(f"{name} contains NaN or Inf")
    return u


def _check_nonneg(u: np.ndarray, name: str):
    if np.any(u < 0.0):
        raise ValidationError(f"{name} must be nonnegative (min {u.min():.3e})")


def _diff(u: np.ndarray, axis: int) -> np.ndarray:
    return np.diff(u, axis=axis)


def _face_mean(u: np.ndarray, axis: int) -> np.ndarray:
    lo = [slice(None)] * u.ndim
    hi = [slice(None)] * u.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (u[tuple(lo)] + u[tuple(hi)])


def divergence(grid: Grid, fluxes) -> np.ndarray:
    """Cell divergence of interior face fluxes (boundary fluxes zero)."""
    out = np.zeros(grid.shape)
    for axis, (f, dx) in enumerate(zip(fluxes, grid.spacing)):
        pad = [(0, 0)] * grid.dim
        pad[axis] = (1, 1)
        fp = np.pad(f, pad)
        out += _diff(fp, axis) / dx
    return out


def laplacian_apply(grid: Grid, u: np.ndarray) -> np.ndarray:
    """3-point (1D) / 5-point (2D) Laplacian with homogeneous Neumann closure."""
    u = check_field(grid, u, "u")
    return neumann_laplacian(grid, u)


def neumann_laplacian(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Unchecked Laplacian kernel (flux form, mirrored ghost cells)."""
    out = np.zeros_like(u)
    for axis, dx in enumerate(grid.spacing):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        flux = np.diff(u, axis=axis) * (1.0 / dx**2)
        out[tuple(lo)] += flux
        out[tuple(hi)] -= flux
    return out


def face_gradient(grid: Grid, w: np.ndarray) -> tuple:
    """Two-point difference quotient on every interior face, per axis."""
    w = check_field(grid, w, "w")
    return tuple(_diff(w, axis) / dx for axis, dx in enumerate(grid.spacing))


def upwind_fluxes(grid: Grid, c: np.ndarray, velocity) -> tuple:
    """Face fluxes ``v * c_upwind`` for face velocities ``velocity``."""
    out = []
    for axis, v in enumerate(velocity):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        cu = np.where(v > 0.0, c[tuple(lo)], c[tuple(hi)])
        out.append(v * cu)
    return tuple(out)


def taxis_velocity(grid: Grid, cues) -> tuple:
    """Face velocities ``sum_k b_k * grad(w_k)`` for ``cues = [(b_k, w_k), ...]``."""
    vel = None
    for b, w in cues:
        g = face_gradient(grid, w)
        vel = [b * x for x in g] if vel is None else [v + b * x for v, x in zip(vel, g)]
    if vel is None:
        vel = [0.0 * x for x in face_gradient(grid, grid.zeros())]
    return tuple(vel)


def haptotactic_divergence(grid: Grid, c1: np.ndarray, w: np.ndarray, b: float) -> np.ndarray:
    """``+div(b c1 grad w)`` with first-order upwinding of ``c1``.

    The velocity ``b*grad(w)`` on a face picks ``c1`` from the cell it leaves.
    The caller supplies the minus sign of the transport term.
    """
    c1 = check_field(grid, c1, "c1")
    _check_nonneg(c1, "c1")
    vel = taxis_velocity(grid, [(b, w)])
    return divergence(grid, upwind_fluxes(grid, c1, vel))


def integrate(grid: Grid, u: np.ndarray) -> float:
    """Midpoint rule: ``sum(u) * cell_volume`` (pairwise summation, C order)."""
    u = np.asarray(u, dtype=float)
    return float(np.sum(u.ravel()) * grid.cell_volume)


def _dual_weights(n_faces: int, axis: int, dim: int) -> np.ndarray:
    """Quadrature weights of the interior faces along ``axis``.

    Each face stands for the dual cell between two centres; the first and
    last face also absorb the boundary half cells, so the dual cells tile
    the whole domain.  For Neumann-compatible fields the extra half cells
    only contribute at O(h^3).
    """
    w = np.ones(n_faces)
    w[0] = w[-1] = 1.5
    shape = [1] * dim
    shape[axis] = n_faces
    return w.reshape(shape)


def grad_sq_quotient(grid: Grid, u: np.ndarray, floor: float, weight=None):
    """Dual-cell quadrature of ``int |grad u|^2 / u [* weight]``.

    Face values of ``u`` and ``weight`` are arithmetic means of the two
    neighbours, ``u`` floored at ``floor``.  Returns ``(value, floor_engaged)``.
    """
    if not floor > 0.0:
        raise ValueError("floor must be positive")
    total = 0.0
    engaged = False
    for axis, (g, dx) in enumerate(zip(face_gradient(grid, u), grid.spacing)):
        um = _face_mean(u, axis)
        engaged = engaged or bool(np.any(um < floor))
        q = g * g / np.maximum(um, floor)
        if weight is not None:
            q = q * _face_mean(weight, axis)
        q = q * _dual_weights(q.shape[axis], axis, grid.dim)
        total += float(np.sum(q.ravel()))
    return total * grid.cell_volume, engaged


def integrate_grad_sq_over(grid: Grid, u: np.ndarray, floor: float = 1e-12) -> float:
    """Discrete ``int |grad u|^2 / u`` over the domain."""
    u = check_field(grid, u, "u")
    _check_nonneg(u, "u")
    return grad_sq_quotient(grid, u, floor)[0]


def integrate_grad_sq(grid: Grid, u: np.ndarray) -> float:
    """Discrete ``int |grad u|^2`` (same dual-cell quadrature as above)."""
    total = 0.0
    for axis, g in enumerate(face_gradient(grid, u)):
        total += float(np.sum((g * g * _dual_weights(g.shape[axis], axis, grid.dim)).ravel()))
    return total * grid.cell_volume


def grad_pairing(grid: Grid, u: np.ndarray, phi: np.ndarray, weight=None) -> float:
    """Face quadrature of ``int [weight] grad u . grad phi``.

    Unit weights on all interior faces: this is the summation-by-parts
    partner of :func:`laplacian_apply`.
    """
    total = 0.0
    gu = face_gradient(grid, u)
    gp = face_gradient(grid, phi)
    for axis, (a, b) in enumerate(zip(gu, gp)):
        q = a * b
        if weight is not None:
            q = q * _face_mean(weight, axis)
        total += float(np.sum(q.ravel()))
    return total * grid.cell_volume
