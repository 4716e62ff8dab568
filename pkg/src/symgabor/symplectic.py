"""Symplectic linear algebra on R^{2d}.

Phase-space vectors are flat float arrays of length 2d: position part
``u[:d]`` and momentum part ``u[d:]``.  Matrices of vectors store one vector
per row.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegeneratePair,
    DimensionMismatch,
    LinearlyDependent,
    NotLagrangian,
    SingularB,
)

TOL_FORM = 1e-10
TOL_RANK = 1e-12


def _scale(*arrays):
    m = max((float(np.max(np.abs(a))) if np.size(a) else 0.0) for a in arrays)
    return max(m, 1.0)


def as_vec(u, d=None):
    """Validate a phase-space vector and return it as a float array."""
    u = np.asarray(u, dtype=float).ravel()
    if u.size == 0 or u.size % 2:
        raise DimensionMismatch(f"phase-space vector needs 2d coordinates, got {u.size}")
    if d is not None and u.size != 2 * d:
        raise DimensionMismatch(f"expected {2 * d} coordinates, got {u.size}")
    return u


def vec2d(x, y):
    """Join a position part and a momentum part."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise DimensionMismatch("position and momentum parts differ in length")
    return np.concatenate([x, y])


def j_matrix(d):
    """Matrix J with omega(u, v) = u^T J v."""
    eye = np.eye(d)
    zero = np.zeros((d, d))
    return np.block([[zero, eye], [-eye, zero]])


def omega(u, v):
    """Standard symplectic form x_u . y_v - y_u . x_v."""
    u = as_vec(u)
    v = as_vec(v)
    if u.size != v.size:
        raise DimensionMismatch("omega of vectors of different dimension")
    d = u.size // 2
    return float(u[:d] @ v[d:] - u[d:] @ v[:d])


def omega_matrix(U, V):
    """Pairwise omega between the rows of U and the rows of V."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    d = U.shape[1] // 2
    return U @ j_matrix(d) @ V.T


@dataclass(frozen=True)
class LagrangianFrame:
    vectors: np.ndarray
    form_residual: float = 0.0

    @property
    def d(self):
        return self.vectors.shape[0]

    @property
    def A(self):
        return self.vectors[:, : self.d]

    @property
    def B(self):
        return self.vectors[:, self.d :]

    @property
    def det_b(self):
        return float(np.linalg.det(self.B))

    @property
    def nondegenerate(self):
        return abs(self.det_b) > TOL_RANK * _scale(self.B) ** self.d

    @property
    def F(self):
        """Quadratic form 1/2 B^{-1} A, or None when B is singular."""
        if not self.nondegenerate:
            return None
        C = np.linalg.solve(self.B, self.A)
        return 0.25 * (C + C.T)

    def chirp(self):
        """Symmetric matrix B^{-1} A; raises SingularB."""
        if not self.nondegenerate:
            raise SingularB(f"|det B| = {abs(self.det_b):.3e} below rank tolerance")
        C = np.linalg.solve(self.B, self.A)
        return 0.5 * (C + C.T)


def make_frame(vectors):
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    d = V.shape[0]
    if V.shape[1] != 2 * d:
        raise DimensionMismatch(
            f"a Lagrangian frame needs d vectors in R^(2d); got {d} vectors of length {V.shape[1]}"
        )
    res = float(np.max(np.abs(omega_matrix(V, V))))
    if res > TOL_FORM * _scale(V) ** 2:
        raise NotLagrangian(f"max |omega(v_i, v_j)| = {res:.3e}")
    if np.linalg.matrix_rank(V, tol=TOL_RANK * _scale(V) * 2 * d) < d:
        raise LinearlyDependent("frame vectors are linearly dependent")
    V = V.copy()
    V.setflags(write=False)
    return LagrangianFrame(V, res)


def y_matrix(V, W):
    """Y(i, j) = omega(v_i, w_j) = A_v B_w^T - B_v A_w^T."""
    if V.d != W.d:
        raise DimensionMismatch("frames of different dimension")
    return V.A @ W.B.T - V.B @ W.A.T


@dataclass(frozen=True)
class SignedQuadraticForm:
    S: np.ndarray
    signature: int
    zero_count: int = 0
    eigenvalues: np.ndarray = field(default=None, repr=False)


def signed_form(S):
    S = np.asarray(S, dtype=float)
    S = 0.5 * (S + S.T)
    lam = np.linalg.eigvalsh(S)
    tol = TOL_RANK * _scale(S) if np.any(S) else 0.0
    pos = int(np.sum(lam > tol))
    neg = int(np.sum(lam < -tol))
    return SignedQuadraticForm(S, pos - neg, S.shape[0] - pos - neg, lam)


def signature(S):
    return signed_form(S).signature


def f_difference(V, W):
    """F_v - F_w with its signature; cross-checked against 1/2 B_v^-1 Y B_w^-T."""
    for fr in (V, W):
        if not fr.nondegenerate:
            raise SingularB(f"|det B| = {abs(fr.det_b):.3e} below rank tolerance")
    D = V.F - W.F
    alt = 0.5 * np.linalg.solve(V.B, y_matrix(V, W)) @ np.linalg.inv(W.B).T
    err = float(np.max(np.abs(D - 0.5 * (alt + alt.T))))
    if err > TOL_FORM * _scale(D, alt) * 1e2:
        raise ArithmeticError(f"F_v - F_w disagrees with the Y formula by {err:.3e}")
    return signed_form(D)


@dataclass(frozen=True)
class SymplecticBasis:
    V: LagrangianFrame
    W: LagrangianFrame

    @property
    def d(self):
        return self.V.d

    @property
    def M(self):
        return np.block([[self.V.A, self.V.B], [self.W.A, self.W.B]])

    @property
    def nondegenerate(self):
        return self.V.nondegenerate and self.W.nondegenerate

    def residuals(self):
        """Max residuals of the four block identities and of Y = Id."""
        Av, Bv, Aw, Bw = self.V.A, self.V.B, self.W.A, self.W.B
        eye = np.eye(self.d)
        return {
            "vv": float(np.max(np.abs(Av @ Bv.T - Bv @ Av.T))),
            "ww": float(np.max(np.abs(Aw @ Bw.T - Bw @ Aw.T))),
            "vw": float(np.max(np.abs(Av @ Bw.T - Bv @ Aw.T - eye))),
            "wv": float(np.max(np.abs(Aw @ Bv.T - Bw @ Av.T + eye))),
        }

    def max_residual(self):
        return max(self.residuals().values())


def make_basis(v_vectors, w_vectors):
    V = make_frame(v_vectors)
    W = make_frame(w_vectors)
    basis = SymplecticBasis(V, W)
    err = basis.max_residual()
    if err > TOL_FORM * _scale(basis.M) ** 2:
        raise NotLagrangian(f"not a symplectic basis: residual {err:.3e}")
    return basis


def _omega_project(u, pairs):
    for v, w in pairs:
        u = u - omega(u, w) * v + omega(u, v) * w
    return u


def complete_symplectic_basis(v, w):
    """Extend (v, w / omega(v, w)) to a symplectic basis.

    Symplectic Gram-Schmidt: standard basis vectors are projected onto the
    omega-complement of the pairs found so far and the candidate pair with
    the largest |omega| becomes the next pair.
    """
    v = as_vec(v)
    w = as_vec(w, v.size // 2)
    d = v.size // 2
    s = omega(v, w)
    if abs(s) <= TOL_FORM * _scale(v, w) ** 2:
        raise DegeneratePair(f"omega(v, w) = {s:.3e}")
    pairs = [(v, w / s)]
    eye = np.eye(2 * d)
    while len(pairs) < d:
        cands = np.array([_omega_project(e, pairs) for e in eye])
        norms = np.linalg.norm(cands, axis=1)
        live = norms > 1e-8
        cands[live] /= norms[live, None]
        cands[~live] = 0.0
        Om = omega_matrix(cands, cands)
        i, j = np.unravel_index(np.argmax(np.abs(Om)), Om.shape)
        if abs(Om[i, j]) < 1e-8:
            raise LinearlyDependent("completion ran out of independent directions")
        a = cands[i]
        b = cands[j] / Om[i, j]
        pairs.append((a, b))
    return make_basis([p[0] for p in pairs], [p[1] for p in pairs])


def is_symplectic_matrix(M, tol=TOL_FORM):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
        return False
    J = j_matrix(M.shape[0] // 2)
    return bool(np.max(np.abs(M.T @ J @ M - J)) <= tol * _scale(M) ** 2)


def shear_matrix(C):
    """Phase-space map (x, y) -> (x, y - C x); symplectic for symmetric C."""
    C = np.asarray(C, dtype=float)
    d = C.shape[0]
    return np.block([[np.eye(d), np.zeros((d, d))], [-C, np.eye(d)]])


def _shear_candidates(d):
    eye = np.eye(d)
    ramp = np.diag(np.arange(1, d + 1, dtype=float))
    ones = np.ones((d, d))
    for t in (1.0, -1.0, 0.5, -0.5, 2.0, -2.0):
        yield t * eye
    for t in (1.0, -1.0, 0.5, -0.5):
        yield t * ramp
        yield t * (eye + 0.5 * ones)


def _det_score(basis):
    d = basis.d
    return min(
        abs(np.linalg.det(fr.B)) / _scale(fr.vectors) ** d for fr in (basis.V, basis.W)
    )


@dataclass(frozen=True)
class RegularizedBasis:
    """A basis with invertible B blocks plus the conjugation that produced it.

    ``basis.V`` row 0 is ``transform @ v`` and ``basis.W`` row 0 is
    ``transform @ w``.  ``shear`` is the symmetric C of the momentum chirp
    g -> F^-1(exp(pi i xi.C xi) F g), or None when no conjugation was needed.
    """

    basis: SymplecticBasis
    transform: np.ndarray
    shear: np.ndarray | None


def regularize_basis(v, w):
    """Symplectic basis through (v, w) with det B_v != 0 and det B_w != 0.

    w is rescaled so omega(v, w) = 1.  When the completion has a singular B
    block the whole basis is conjugated by a momentum shear, which keeps
    it symplectic.
    """
    v = as_vec(v)
    w = as_vec(w, v.size // 2)
    d = v.size // 2
    base = complete_symplectic_basis(v, w)
    if base.nondegenerate:
        return RegularizedBasis(base, np.eye(2 * d), None)
    best = None
    for C in _shear_candidates(d):
        S = shear_matrix(C)
        Vs = base.V.vectors @ S.T
        Ws = base.W.vectors @ S.T
        cand = SymplecticBasis(make_frame(Vs), make_frame(Ws))
        score = _det_score(cand)
        if best is None or score > best[0] + 1e-12:
            best = (score, cand, S, C)
        if score > 0.1:
            break
    score, cand, S, C = best
    if not cand.nondegenerate:
        raise SingularB("no shear regularized the basis")
    return RegularizedBasis(cand, S, C)


def iic_family(c):
    """Explicit basis for the case where the momentum parts are not aligned.

    ``c`` holds the coefficients (c^2, ..., c^d) of the reduced operator
    Q_w.  Under omega(x, y; xi, eta) = x.eta - y.xi the listed w-vectors pair
    to -1 with the v-vectors, so they are returned negated.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    d = c.size + 1
    if d < 2:
        raise DimensionMismatch("the family needs d >= 2")
    V = np.zeros((d, 2 * d))
    W = np.zeros((d, 2 * d))
    V[0, d] = 1.0
    V[1, 1:d] = c
    V[1, d + 1] = 1.0
    W[0, 0] = 1.0
    W[0, 1:d] = c
    W[0, d + 1] = 1.0
    W[1, 1] = 1.0
    W[1, d] = 1.0
    for k in range(2, d):
        V[k, 1] = c[k - 1]
        V[k, d + k] = 1.0
        W[k, 1] = c[k - 1]
        W[k, k] = 1.0
        W[k, d + k] = 1.0
    return make_basis(V, -W)


# ---------------------------------------------------------------- JSON

def vectors_to_json(vectors):
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    return json.dumps(
        {"d": vectors.shape[1] // 2, "vectors": [[float(x) for x in row] for row in vectors]}
    )


def vectors_from_json(text):
    doc = json.loads(text) if isinstance(text, str) else text
    d = int(doc["d"])
    vectors = np.asarray(doc["vectors"], dtype=float)
    if vectors.ndim != 2 or vectors.shape[1] != 2 * d:
        raise DimensionMismatch(f"vectors must have {2 * d} columns")
    return d, vectors


def basis_to_json(basis):
    return vectors_to_json(np.vstack([basis.V.vectors, basis.W.vectors]))


def basis_from_json(text):
    d, vectors = vectors_from_json(text)
    if vectors.shape[0] != 2 * d:
        raise DimensionMismatch(f"a basis needs {2 * d} vectors")
    return make_basis(vectors[:d], vectors[d:])


EXAMPLE_BASIS_4X4 = np.array(
    [
        [1.0, 0.0, -np.sqrt(3) / 2, -0.5],
        [np.sqrt(2) / 2, -np.sqrt(6) / 2, 0.0, -np.sqrt(2) / 2],
        [0.0, 1.0, 0.5, np.sqrt(3) / 2],
        [-np.sqrt(6) / 2, np.sqrt(2) / 2, np.sqrt(2) / 2, 0.0],
    ]
)
