"""Generalized Fourier transforms attached to Lagrangian frames.

F_v(h)(xi) = |det B|^{-1/2} int h(x) exp(2 pi i x.B^{-1} xi - pi i x.B^{-1}A x) dx

On a grid this is a chirp multiply followed by the standard transform; the
output samples sit at xi = B u for the standard dual nodes u, carried as the
field's ``node_map``.  No interpolation takes place.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import BudgetExceeded, DomainError, GridMismatch, SingularB, SingularY
from .field import (
    SampledField,
    _dft_axis,
    fourier_values,
    inverse_fourier_values,
)
from .operators import apply_Q, apply_T
from .symplectic import (
    TOL_FORM,
    TOL_RANK,
    LagrangianFrame,
    SymplecticBasis,
    _scale,
    f_difference,
    y_matrix,
)


def _quad(C, X):
    """x^T C x evaluated on stacked coordinates X of shape (d, ...)."""
    return np.einsum("i...,ij,j...->...", X, C, X)


def _symmetric(C, what):
    err = float(np.max(np.abs(C - C.T)))
    if err > TOL_FORM * _scale(C) * 1e3:
        raise ArithmeticError(f"{what} is not symmetric (asymmetry {err:.3e})")
    return 0.5 * (C + C.T)


@dataclass(frozen=True)
class GFTPlan:
    frame: LagrangianFrame
    grid: object
    chirp: np.ndarray
    b_inv: np.ndarray
    scale: float

    @property
    def B(self):
        return self.frame.B

    def to_dict(self):
        return {
            "A": self.frame.A.tolist(),
            "B": self.frame.B.tolist(),
            "chirp": self.chirp.tolist(),
            "scale": self.scale,
            "grid": {"d": self.grid.d, "L": list(self.grid.L), "n": list(self.grid.n)},
        }


def make_plan(frame, grid):
    if frame.d != grid.d:
        raise GridMismatch("frame and grid dimensions differ")
    if not frame.nondegenerate:
        raise SingularB(f"|det B| = {abs(frame.det_b):.3e} below rank tolerance")
    chirp = _symmetric(np.linalg.solve(frame.B, frame.A), "B^-1 A")
    return GFTPlan(frame, grid, chirp, np.linalg.inv(frame.B), abs(frame.det_b) ** -0.5)


def gft(plan, h):
    if h.domain != "space" or h.grid != plan.grid:
        raise GridMismatch("gft expects a space field on the plan's grid")
    X = np.array(plan.grid.mesh("space"))
    vals = h.values * np.exp(-1j * np.pi * _quad(plan.chirp, X))
    vals = fourier_values(plan.grid, vals) * plan.scale
    return SampledField(plan.grid, vals, "frequency", plan.B)


def _check_output_grid(plan, H):
    if H.domain != "frequency" or H.grid != plan.grid:
        raise GridMismatch("field is not on the plan's output grid")
    M = np.eye(plan.grid.d) if H.node_map is None else H.node_map
    if not np.allclose(M, plan.B, rtol=1e-12, atol=1e-12):
        raise GridMismatch("field node map does not match the plan's B")


def inverse_gft(plan, H):
    _check_output_grid(plan, H)
    vals = inverse_fourier_values(plan.grid, H.values / plan.scale)
    X = np.array(plan.grid.mesh("space"))
    vals = vals * np.exp(1j * np.pi * _quad(plan.chirp, X))
    return SampledField(plan.grid, vals, "space")


def gft_at(plan, h, points):
    """Dense quadrature of F_v(h) at arbitrary points, shape (npts, d)."""
    X = np.array(plan.grid.mesh("space")).reshape(plan.grid.d, -1)
    c = h.values.ravel() * np.exp(-1j * np.pi * _quad(plan.chirp, X)) * h.weight
    y = np.atleast_2d(points) @ plan.b_inv.T
    return plan.scale * _kernels.nudft(X.T, c, y, 1.0)


@dataclass(frozen=True)
class TildePlan:
    plan_v: GFTPlan
    plan_w: GFTPlan
    Y: np.ndarray
    sigma: int
    chirp_v: np.ndarray
    chirp_w: np.ndarray

    @property
    def grid(self):
        return self.plan_v.grid

    def to_dict(self):
        return {
            "v": self.plan_v.to_dict(),
            "w": self.plan_w.to_dict(),
            "Y": self.Y.tolist(),
            "sigma": self.sigma,
            "chirp_v": self.chirp_v.tolist(),
            "chirp_w": self.chirp_w.tolist(),
        }


def make_tilde_plan(V, W, grid):
    Y = y_matrix(V, W)
    if abs(np.linalg.det(Y)) <= TOL_RANK * _scale(Y) ** V.d:
        raise SingularY("frames are not transverse (det Y = 0)")
    form = f_difference(V, W)
    if form.zero_count:
        raise SingularY("F_v - F_w is degenerate; signature undefined")
    pv, pw = make_plan(V, grid), make_plan(W, grid)
    Yi = np.linalg.inv(Y)
    cv = _symmetric(pv.b_inv.T @ W.B.T @ Yi, "tilde-v chirp")
    cw = _symmetric(Yi @ V.B @ pw.b_inv, "tilde-w chirp")
    return TildePlan(pv, pw, Y, form.signature, cv, cw)


def tilde_plan_from_basis(basis: SymplecticBasis, grid):
    return make_tilde_plan(basis.V, basis.W, grid)


def tilde_gft_v(tp, h):
    G = gft(tp.plan_v, h)
    return G.with_values(G.values * np.exp(-1j * np.pi * _quad(tp.chirp_v, G.nodes())))


def tilde_gft_w(tp, h):
    """exp(-pi i sigma/4) exp(+pi i eta.Y^-1 B_v B_w^-1 eta) F_w(h)(eta).

    The + sign on the chirp is the one for which F~_w is the plain Fourier
    transform of F~_v when Y = Id.
    """
    G = gft(tp.plan_w, h)
    ph = np.exp(-1j * np.pi * tp.sigma / 4 + 1j * np.pi * _quad(tp.chirp_w, G.nodes()))
    return G.with_values(G.values * ph)


def tilde_w_at(tp, h, points):
    points = np.atleast_2d(points)
    vals = gft_at(tp.plan_w, h, points)
    q = np.einsum("ki,ij,kj->k", points, tp.chirp_w, points)
    return vals * np.exp(-1j * np.pi * tp.sigma / 4 + 1j * np.pi * q)


@dataclass(frozen=True)
class Spectrum:
    """Samples at arbitrary nodes (d, *shape) with a uniform quadrature weight."""

    nodes: np.ndarray
    values: np.ndarray
    weight: float


def transform_spectrum(F):
    """int exp(2 pi i xi.eta) F(xi) d xi for a frequency field with node map M.

    Output nodes are eta = M^{-T} x over the space grid nodes x.
    """
    if F.domain != "frequency":
        raise DomainError("transform_spectrum expects a frequency field")
    grid = F.grid
    M = np.eye(grid.d) if F.node_map is None else F.node_map
    vals = np.asarray(F.values, complex)
    for i in range(grid.d):
        L, n = grid.L[i], grid.n[i]
        vals = _dft_axis(vals, i, -n / (4 * L), 1 / (2 * L), -L, 2 * L / n, +1)
    det = abs(np.linalg.det(M))
    X = np.array(grid.mesh("space"))
    nodes = np.einsum("ij,j...->i...", np.linalg.inv(M).T, X)
    return Spectrum(nodes, vals * det, grid.cell("space") / det)


DENSE_BUDGET = {1: 128, 2: 64}


def change_rep(tp, Fv_h):
    """F_w(h) from F_v(h) by dense quadrature of the change-of-representation kernel."""
    grid = tp.grid
    if grid.d not in DENSE_BUDGET or max(grid.n) > DENSE_BUDGET[grid.d]:
        raise BudgetExceeded("change_rep is limited to n <= 128 (d=1) or n <= 64 (d=2)")
    _check_output_grid(tp.plan_v, Fv_h)
    d = grid.d
    xi = Fv_h.nodes().reshape(d, -1)
    U = np.array(grid.mesh("frequency"))
    eta = np.einsum("ij,j...->i...", tp.plan_w.B, U).reshape(d, -1)
    Yi = np.linalg.inv(tp.Y)
    c = Fv_h.values.ravel() * Fv_h.weight
    c = c * np.exp(-1j * np.pi * np.einsum("ik,ij,jk->k", xi, tp.chirp_v, xi))
    acc = _kernels.nudft(xi.T, c, (Yi.T @ eta).T, 1.0)
    pre = np.exp(-1j * np.pi * np.einsum("ik,ij,jk->k", eta, tp.chirp_w, eta) + 1j * np.pi * tp.sigma / 4)
    vals = pre * acc / np.sqrt(abs(np.linalg.det(tp.Y)))
    return SampledField(grid, vals.reshape(grid.shape), "frequency", tp.plan_w.B)


def lattice_map(basis, p, q):
    """(p', q') = [[A_v, B_v], [A_w, B_w]] (p, q)."""
    p = np.atleast_1d(np.asarray(p, float))
    q = np.atleast_1d(np.asarray(q, float))
    out = basis.M @ np.concatenate([p, q])
    return out[: basis.d], out[basis.d :]


def lattice_map_explicit(basis, p, q):
    """Same map written through B_v^{-1}: q' = -B_v^{-T} p + B_w q + B_w B_v^{-1} A_v p."""
    p = np.atleast_1d(np.asarray(p, float))
    q = np.atleast_1d(np.asarray(q, float))
    Av, Bv, Bw = basis.V.A, basis.V.B, basis.W.B
    Bvi = np.linalg.inv(Bv)
    return Av @ p + Bv @ q, -Bvi.T @ p + Bw @ q + Bw @ Bvi @ Av @ p


def covariance_check(tp, basis, g, p, q):
    """Compare F~_v(T_{p,q} g) with T_{p',q'}(F~_v g).

    Returns the modulus residual, the extracted unimodular constant and the
    residual after removing it.
    """
    p = np.atleast_1d(np.asarray(p, float))
    q = np.atleast_1d(np.asarray(q, float))
    lhs = tilde_gft_v(tp, apply_T(p, q, g))
    G = tilde_gft_v(tp, g)
    pp, qq = lattice_map(basis, p, q)
    steps = tp.plan_v.b_inv @ pp / np.asarray(tp.grid.dxi)
    k = np.rint(steps)
    if np.any(np.abs(steps - k) > 1e-9):
        raise GridMismatch(f"image shift {pp} is not aligned with the output grid")
    XI = G.nodes()
    shifted = np.roll(G.values, tuple(-k.astype(int)), axis=tuple(range(g.d)))
    rhs = shifted * np.exp(2j * np.pi * np.einsum("i,i...->...", qq, XI))
    gn = g.norm()
    mod_res = np.sqrt(G.weight * np.sum((np.abs(lhs.values) - np.abs(rhs)) ** 2)) / gn
    denom = np.vdot(rhs, rhs)
    c = complex(np.vdot(rhs, lhs.values) / denom) if denom else 1.0
    full = np.sqrt(G.weight * np.sum(np.abs(lhs.values - c * rhs) ** 2)) / gn
    return {"residual": float(mod_res), "phase": c, "full_residual": float(full), "image": (pp, qq)}


def covariance_residual(tp, basis, g, p, q):
    return covariance_check(tp, basis, g, p, q)["residual"]


def diagonalization_residual(tp, j, g, side="v"):
    """||F~(Q_{u_j} g) - xi_j F~(g)|| / ||g|| for u = v or w."""
    if side == "v":
        vec, tf = tp.plan_v.frame.vectors[j], tilde_gft_v
    elif side == "w":
        vec, tf = tp.plan_w.frame.vectors[j], tilde_gft_w
    else:
        raise ValueError("side must be 'v' or 'w'")
    lhs = tf(tp, apply_Q(vec, g))
    G = tf(tp, g)
    rhs = G.values * G.nodes()[j]
    return float(np.sqrt(G.weight * np.sum(np.abs(lhs.values - rhs) ** 2)) / g.norm())
