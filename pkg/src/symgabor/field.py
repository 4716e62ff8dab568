"""Periodic grids, sampled complex fields and the +2*pi*i Fourier transform.

The forward transform uses the kernel exp(+2 pi i x.xi) everywhere in the
package (``SIGN``).  On a grid with half extent L and n samples per axis the
space nodes are x_k = -L + k h (h = 2L/n) and the frequency nodes are
xi_j = (j - n/2) / (2L).
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from math import prod

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch, DomainError, GridMismatch

SIGN = +1
MAX_SAMPLES = 2**24
DEFAULT_GRIDS = {1: (8.0, 256), 2: (8.0, 128), 3: (4.0, 64)}


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    d: int
    L: tuple
    n: tuple

    def __post_init__(self):
        L = tuple(float(x) for x in np.broadcast_to(np.asarray(self.L, float), (self.d,)))
        n = tuple(int(x) for x in np.broadcast_to(np.asarray(self.n), (self.d,)))
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "n", n)
        if not 1 <= self.d <= 3:
            raise DimensionMismatch(f"grids support 1 <= d <= 3, got {self.d}")
        if any(x <= 0 for x in L):
            raise ValueError("half extent must be positive")
        if any(k < 8 or not _is_pow2(k) for k in n):
            raise ValueError(f"samples per axis must be powers of two >= 8, got {n}")
        if prod(n) > MAX_SAMPLES:
            raise BudgetExceeded(f"{prod(n)} samples exceed the 2^24 budget")

    @classmethod
    def default(cls, d):
        L, n = DEFAULT_GRIDS[d]
        return cls(d, L, n)

    @property
    def shape(self):
        return self.n

    @property
    def h(self):
        return tuple(2 * L / n for L, n in zip(self.L, self.n))

    @property
    def dxi(self):
        return tuple(1 / (2 * L) for L in self.L)

    @property
    def isotropic(self):
        return len(set(self.L)) == 1 and len(set(self.n)) == 1

    @property
    def self_dual(self):
        """True when the frequency nodes coincide with the space nodes."""
        return all(abs(n - 4 * L * L) < 1e-9 for L, n in zip(self.L, self.n))

    def space_axis(self, i):
        return -self.L[i] + np.arange(self.n[i]) * self.h[i]

    def freq_axis(self, i):
        return (np.arange(self.n[i]) - self.n[i] // 2) * self.dxi[i]

    def axes(self, domain="space"):
        get = self.space_axis if domain == "space" else self.freq_axis
        return [get(i) for i in range(self.d)]

    def mesh(self, domain="space"):
        return np.meshgrid(*self.axes(domain), indexing="ij")

    def cell(self, domain="space"):
        return prod(self.h) if domain == "space" else prod(self.dxi)

    def axis_grid(self, i):
        return GridSpec(1, self.L[i], self.n[i])


@dataclass(frozen=True)
class SampledField:
    """Samples of a function on a grid.

    Frequency-domain fields may carry ``node_map``, a d x d matrix M such that
    the sample at index j sits at xi = M @ xi_j; quadrature weights then pick
    up |det M|.
    """

    grid: GridSpec
    values: np.ndarray
    domain: str = "space"
    node_map: np.ndarray | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex).reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite samples")
        if self.domain not in ("space", "frequency"):
            raise DomainError(f"unknown domain tag {self.domain!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.node_map is not None:
            M = np.array(self.node_map, dtype=float).reshape(self.grid.d, self.grid.d)
            if np.allclose(M, np.eye(self.grid.d), rtol=0, atol=0):
                M = None
            else:
                M.setflags(write=False)
            object.__setattr__(self, "node_map", M)

    @property
    def d(self):
        return self.grid.d

    @property
    def weight(self):
        w = self.grid.cell(self.domain)
        if self.node_map is not None:
            w *= abs(np.linalg.det(self.node_map))
        return w

    def nodes(self):
        """Node coordinates, shape (d, *grid.shape)."""
        X = np.array(self.grid.mesh(self.domain))
        if self.node_map is not None:
            X = np.einsum("ij,j...->i...", self.node_map, X)
        return X

    def with_values(self, values):
        return SampledField(self.grid, values, self.domain, self.node_map)

    def __add__(self, other):
        _check_compatible(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        _check_compatible(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def norm(self):
        return float(np.sqrt(self.weight * np.sum(np.abs(self.values) ** 2)))


def _check_compatible(f, g):
    if f.grid != g.grid or f.domain != g.domain:
        raise GridMismatch("fields live on different grids or domains")
    a, b = f.node_map, g.node_map
    if (a is None) != (b is None) or (a is not None and not np.allclose(a, b)):
        raise GridMismatch("fields use different node maps")


def inner(f, g):
    """Riemann-sum approximation of the L^2 inner product."""
    _check_compatible(f, g)
    return complex(f.weight * np.vdot(g.values, f.values))


def norm(f):
    return f.norm()


def sample(grid, rule, domain="space"):
    """Evaluate ``rule(*coords)`` on the grid nodes (half-open conventions apply)."""
    coords = grid.mesh(domain)
    vals = np.asarray(rule(*coords), dtype=complex)
    vals = np.broadcast_to(vals, grid.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("rule produced non-finite values")
    return SampledField(grid, vals, domain)


def _dft_axis(values, axis, s_a, d_a, s_b, d_b, sign):
    """out_j = d_a sum_k f_k exp(sign 2 pi i a_k b_j) along one axis."""
    n = values.shape[axis]
    k = np.arange(n)
    shape = [1] * values.ndim
    shape[axis] = n
    pre = np.exp(sign * 2j * np.pi * k * d_a * s_b).reshape(shape)
    post = (d_a * np.exp(sign * 2j * np.pi * (s_a * s_b + s_a * k * d_b))).reshape(shape)
    x = values * pre
    if sign > 0:
        x = np.fft.ifft(x, axis=axis) * n
    else:
        x = np.fft.fft(x, axis=axis)
    return x * post


def fourier_values(grid, values, axes=None, sign=SIGN):
    """Forward transform of space samples along ``axes`` (all by default)."""
    axes = range(grid.d) if axes is None else axes
    out = np.asarray(values, dtype=complex)
    for i in axes:
        L, n = grid.L[i], grid.n[i]
        out = _dft_axis(out, i, -L, 2 * L / n, -n / (4 * L), 1 / (2 * L), sign)
    return out


def inverse_fourier_values(grid, values, axes=None, sign=SIGN):
    axes = range(grid.d) if axes is None else axes
    out = np.asarray(values, dtype=complex)
    for i in axes:
        L, n = grid.L[i], grid.n[i]
        out = _dft_axis(out, i, -n / (4 * L), 1 / (2 * L), -L, 2 * L / n, -sign)
    return out


def fourier(f):
    """Samples of f^(xi) = int f(x) exp(+2 pi i x.xi) dx on the dual grid."""
    if f.domain != "space":
        raise DomainError("fourier expects a space-domain field")
    return SampledField(f.grid, fourier_values(f.grid, f.values), "frequency")


def inverse_fourier(F):
    if F.domain != "frequency":
        raise DomainError("inverse_fourier expects a frequency-domain field")
    if F.node_map is not None:
        raise GridMismatch("inverse_fourier needs the standard dual grid")
    return SampledField(F.grid, inverse_fourier_values(F.grid, F.values), "space")


def tensor(*factors):
    """Outer product of one-dimensional fields of the same domain."""
    if not factors or any(f.d != 1 for f in factors):
        raise DimensionMismatch("tensor takes one-dimensional fields")
    domain = factors[0].domain
    if any(f.domain != domain for f in factors):
        raise DomainError("tensor factors must share a domain")
    grid = GridSpec(len(factors), [f.grid.L[0] for f in factors], [f.grid.n[0] for f in factors])
    vals = factors[0].values
    for f in factors[1:]:
        vals = np.multiply.outer(vals, f.values)
    return SampledField(grid, vals, domain)


def gaussian(grid, center=None, width=1.0, momentum=None):
    """Normalized Gaussian 2^{d/4} exp(-pi |x|^2); optional shift/scale/modulation."""
    d = grid.d
    c = np.zeros(d) if center is None else np.asarray(center, float)
    p = np.zeros(d) if momentum is None else np.asarray(momentum, float)

    def rule(*xs):
        r2 = sum((x - ci) ** 2 for x, ci in zip(xs, c)) / width**2
        ph = sum(x * pi for x, pi in zip(xs, p))
        return (2 ** (d / 4) / width ** (d / 2)) * np.exp(-np.pi * r2 + 2j * np.pi * ph)

    return sample(grid, rule)


def indicator(grid, a=0.0, b=1.0, domain="space"):
    """Samples of the product indicator of [a, b)^d (half-open)."""

    def rule(*xs):
        out = np.ones(xs[0].shape)
        for x in xs:
            out = out * ((x >= a) & (x < b))
        return out

    return sample(grid, rule, domain)


def edge_mass(f, band=0.125):
    """Fraction of |f|^2 in the outer ``band`` of each axis (wrap-around estimate)."""
    vals = np.abs(f.values) ** 2
    total = vals.sum()
    if total == 0:
        return 0.0
    mask = np.zeros(f.grid.shape, bool)
    for i in range(f.d):
        n = f.grid.n[i]
        k = max(1, int(round(band * n / 2)))
        idx = [slice(None)] * f.d
        idx[i] = np.r_[0:k, n - k : n]
        mask[tuple(idx)] = True
    return float(vals[mask].sum() / total)


# ---------------------------------------------------------------- SGF files
#
# 32-byte header: b"SGF1", u32 d, u32 n, u32 flags, f64 L, u32 n_extra, u32 0.
# flags bit 0: frequency domain; bit 1: per-axis (n_i, L_i) records follow
# (u32 n_i, u32 0, f64 L_i each); bit 2: a d*d float64 node map follows.
# Payload: interleaved little-endian float64 (re, im) in row-major order.

_HEADER = struct.Struct("<4sIIIdII")


def dumps_sgf(f):
    g = f.grid
    flags = (f.domain == "frequency") | ((not g.isotropic) << 1) | ((f.node_map is not None) << 2)
    parts = [_HEADER.pack(b"SGF1", g.d, g.n[0], flags, g.L[0], 0, 0)]
    if not g.isotropic:
        for n, L in zip(g.n, g.L):
            parts.append(struct.pack("<IId", n, 0, L))
    if f.node_map is not None:
        parts.append(np.asarray(f.node_map, "<f8").tobytes())
    inter = np.empty(f.values.size * 2, "<f8")
    inter[0::2] = f.values.real.ravel()
    inter[1::2] = f.values.imag.ravel()
    parts.append(inter.tobytes())
    return b"".join(parts)


def loads_sgf(data):
    magic, d, n, flags, L, _, _ = _HEADER.unpack_from(data, 0)
    if magic != b"SGF1":
        raise ValueError("not an SGF1 field file")
    off = _HEADER.size
    if flags & 2:
        ns, Ls = [], []
        for _ in range(d):
            ni, _, Li = struct.unpack_from("<IId", data, off)
            ns.append(ni)
            Ls.append(Li)
            off += 16
        grid = GridSpec(d, tuple(Ls), tuple(ns))
    else:
        grid = GridSpec(d, L, n)
    node_map = None
    if flags & 4:
        node_map = np.frombuffer(data, "<f8", d * d, off).reshape(d, d)
        off += 8 * d * d
    count = prod(grid.shape)
    raw = np.frombuffer(data, "<f8", 2 * count, off)
    vals = (raw[0::2] + 1j * raw[1::2]).reshape(grid.shape)
    return SampledField(grid, vals, "frequency" if flags & 1 else "space", node_map)


def save_sgf(path, f):
    with open(path, "wb") as fh:
        fh.write(dumps_sgf(f))


def load_sgf(path):
    with open(path, "rb") as fh:
        return loads_sgf(fh.read())


def export_csv(path, f):
    """Write node coordinates and |value| per sample."""
    X = f.nodes().reshape(f.d, -1)
    mags = np.abs(f.values).ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(f.d)] + ["abs"])
        for k in range(mags.size):
            w.writerow([repr(float(c)) for c in X[:, k]] + [repr(float(mags[k]))])


def hermite(grid, order):
    """Product Hermite function with orders ``order`` (int or per-axis tuple).

    One axis: 2^{1/4} / sqrt(2^k k!) H_k(sqrt(2 pi) x) exp(-pi x^2), an
    orthonormal family that the transform maps to i^k times itself.
    """
    from math import factorial

    from numpy.polynomial.hermite import hermval

    orders = np.broadcast_to(np.atleast_1d(order), (grid.d,))

    def rule(*xs):
        out = np.ones(xs[0].shape, dtype=complex)
        for x, k in zip(xs, orders):
            coef = np.zeros(int(k) + 1)
            coef[-1] = 1.0
            scale = 2**0.25 / np.sqrt(2.0**k * factorial(int(k)))
            out = out * scale * hermval(np.sqrt(2 * np.pi) * x, coef) * np.exp(-np.pi * x**2)
        return out

    return sample(grid, rule)
