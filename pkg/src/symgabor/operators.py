"""Position, momentum and phase-space operators acting on sampled fields.

All derivatives are Fourier multipliers.  With the +2 pi i transform,
multiplication by xi on the frequency side is (i / 2 pi) d/dx on the space
side, so M_w = (i / 2 pi) D_w and Q_(a, b) = P_a + M_b.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainError, MisalignedShift
from .field import SampledField, fourier_values, inverse_fourier_values


def _space(f):
    if f.domain != "space":
        raise DomainError("operator expects a space-domain field")


def _coeffs(v, d, what):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.size != d:
        raise DimensionMismatch(f"{what} needs {d} coefficients, got {v.size}")
    return v


def apply_P(v, f):
    """Multiplication by v . x."""
    _space(f)
    v = _coeffs(v, f.d, "P")
    X = f.grid.mesh("space")
    return f.with_values(f.values * sum(c * x for c, x in zip(v, X)))


def frequency_multiplier(f, symbol):
    """F^-1(symbol(xi) F f) for a callable symbol(*xi_axes)."""
    _space(f)
    F = fourier_values(f.grid, f.values)
    F = F * symbol(*f.grid.mesh("frequency"))
    return f.with_values(inverse_fourier_values(f.grid, F))


def apply_M(w, f):
    """F^-1((w . xi) F f)."""
    w = _coeffs(w, f.d, "M")
    return frequency_multiplier(f, lambda *xi: sum(c * x for c, x in zip(w, xi)))


def derivative(f, axis):
    """Spectral partial derivative d/dx_axis."""
    return frequency_multiplier(f, lambda *xi: -2j * np.pi * xi[axis])


def apply_Q(v, f):
    """(i / 2 pi) grad_b + a . x for v = (a; b)."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size != 2 * f.d:
        raise DimensionMismatch(f"Q needs {2 * f.d} coefficients, got {v.size}")
    a, b = v[: f.d], v[f.d :]
    out = apply_P(a, f)
    if np.any(b):
        out = out + apply_M(b, f)
    return out


def _shift_steps(m, f):
    steps = np.asarray(m, float) / np.asarray(f.grid.h)
    k = np.rint(steps)
    aligned = np.all(np.abs(steps - k) < 1e-9)
    return aligned, k.astype(int)


def apply_T(m, n, f, fractional=False, convention="plus"):
    """exp(2 pi i n.x) f(x + m); ``convention="minus"`` uses f(x - m)."""
    _space(f)
    m = _coeffs(m, f.d, "T shift")
    n = _coeffs(n, f.d, "T modulation")
    if convention == "minus":
        m = -m
    elif convention != "plus":
        raise ValueError(f"unknown translation convention {convention!r}")
    aligned, steps = _shift_steps(m, f)
    if aligned:
        vals = np.roll(f.values, tuple(-steps), axis=tuple(range(f.d)))
    elif fractional:
        # int f(x + m) exp(2 pi i x xi) dx = exp(-2 pi i m xi) f^(xi)
        F = fourier_values(f.grid, f.values)
        XI = f.grid.mesh("frequency")
        F = F * np.exp(-2j * np.pi * sum(c * x for c, x in zip(m, XI)))
        vals = inverse_fourier_values(f.grid, F)
    else:
        raise MisalignedShift(f"shift {m} is not a multiple of the grid spacing {f.grid.h}")
    if np.any(n):
        X = f.grid.mesh("space")
        vals = vals * np.exp(2j * np.pi * sum(c * x for c, x in zip(n, X)))
    return f.with_values(vals)


def chirp_phase(q, X):
    """q(x) = sum_{i <= j} q_ij x_i x_j from the upper triangle of q."""
    q = np.triu(np.atleast_2d(np.asarray(q, dtype=float)))
    out = 0.0
    for i in range(q.shape[0]):
        for j in range(i, q.shape[0]):
            if q[i, j]:
                out = out + q[i, j] * X[i] * X[j]
    return out


def apply_chirp_U(q, f, inverse=False):
    """exp(-2 pi i q(x)) f(x) (or its inverse)."""
    _space(f)
    q = np.atleast_2d(np.asarray(q, dtype=float))
    if q.shape != (f.d, f.d):
        raise DimensionMismatch(f"chirp needs a {f.d}x{f.d} coefficient matrix")
    sgn = 1.0 if inverse else -1.0
    ph = chirp_phase(q, f.grid.mesh("space"))
    return f.with_values(f.values * np.exp(sgn * 2j * np.pi * ph))


def apply_momentum_shear(C, f, inverse=False):
    """F^-1(exp(pi i xi.C xi) F f); conjugates Q_(a, b) into Q_(a, b - C a)."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    sgn = -1.0 if inverse else 1.0

    def symbol(*xi):
        quad = sum(C[i, j] * xi[i] * xi[j] for i in range(f.d) for j in range(f.d))
        return np.exp(sgn * 1j * np.pi * quad)

    return frequency_multiplier(f, symbol)


@dataclass(frozen=True)
class OperatorSpec:
    kind: str
    params: tuple

    def __call__(self, f):
        p = self.params
        if self.kind == "P":
            return apply_P(p[0], f)
        if self.kind == "M":
            return apply_M(p[0], f)
        if self.kind == "Q":
            return apply_Q(p[0], f)
        if self.kind == "T":
            return apply_T(p[0], p[1], f, fractional=True)
        if self.kind == "U":
            return apply_chirp_U(p[0], f)
        raise ValueError(f"unknown operator kind {self.kind!r}")

    def __str__(self):
        fmt = lambda a: ",".join(repr(float(x)) for x in np.ravel(a))
        if self.kind == "T":
            return f"T:m={fmt(self.params[0])};n={fmt(self.params[1])}"
        return f"{self.kind}:{fmt(self.params[0])}"


def _floats(text):
    return np.array([float(t) for t in text.split(",") if t.strip()])


def parse_operator(text):
    """Parse "P:1,0", "M:0,1", "Q:1,0,0,1", "T:m=1,0;n=0,1" or "U:<d*d entries>"."""
    kind, _, rest = text.strip().partition(":")
    kind = kind.strip().upper()
    if kind in ("P", "M", "Q"):
        return OperatorSpec(kind, (_floats(rest),))
    if kind == "U":
        vals = _floats(rest)
        d = int(round(np.sqrt(vals.size)))
        if d * d != vals.size:
            raise ValueError("U needs a square coefficient matrix")
        return OperatorSpec("U", (vals.reshape(d, d),))
    if kind == "T":
        parts = dict(re.findall(r"([mn])\s*=\s*([^;]*)", rest))
        if set(parts) != {"m", "n"}:
            raise ValueError(f"T needs m=...;n=..., got {rest!r}")
        return OperatorSpec("T", (_floats(parts["m"]), _floats(parts["n"])))
    raise ValueError(f"unknown operator {text!r}")


def commutator_residual(op1, op2, f, expected):
    """||(op1 op2 - op2 op1) f - expected f|| / ||f||."""
    lhs = op1(op2(f)) - op2(op1(f))
    return (lhs - expected * f).norm() / f.norm()
