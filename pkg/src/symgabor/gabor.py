"""Gabor systems g_{m,n}(x) = exp(2 pi i n.x) g(x + m) over finite point sets.

Box generators are finite sums of c exp(2 pi i nu x) on half-open intervals,
one list per axis, so every inner product among their translates and
modulates is a sum of closed-form exponential integrals.  An axis may be
tagged ``fourier_side``: its pieces then describe the Fourier transform of
the generator on that axis, and pairings run on the frequency side.

Sampled generators go through grid quadrature.  The grid frame operator
treats the grid as periodic, which turns a lattice system folded modulo
the period into an exact finite frame.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from math import prod

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import _kernels
from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    MisalignedShift,
    NoConvergence,
    NotAFrame,
    SymGaborError,
)
from .field import GridSpec, SampledField, gaussian, inner, load_sgf, tensor
from .operators import apply_T

TWO_PI = 2 * np.pi
MAX_POINTS = 2000
_KEY = 1e9


# ------------------------------------------------------------------ point sets


def _key(row):
    return tuple(int(round(x * _KEY)) for x in row)


def _order(points, d):
    m, n = points[:, :d], points[:, d:]
    keys = [
        (float(np.max(np.abs(mi), initial=0)), float(np.max(np.abs(ni), initial=0)), *mi, *ni)
        for mi, ni in zip(m, n)
    ]
    return sorted(range(len(points)), key=lambda i: keys[i])


@dataclass(frozen=True)
class PointSet:
    """Rows (m, n) in R^d x R^d, deduplicated and sorted by (|m|, |n|, coords)."""

    points: np.ndarray
    d: int
    radius: float | None = None
    lattice: np.ndarray | None = None
    symmetric: bool = field(init=False)

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.points, dtype=float))
        if P.size == 0:
            P = np.zeros((0, 2 * self.d))
        if P.shape[1] != 2 * self.d:
            raise DimensionMismatch(f"points need {2 * self.d} coordinates")
        seen, rows = set(), []
        for r in P:
            k = _key(r)
            if k not in seen:
                seen.add(k)
                rows.append(r)
        P = np.array(rows).reshape(-1, 2 * self.d)
        P = P[_order(P, self.d)] if len(P) else P
        P.setflags(write=False)
        object.__setattr__(self, "points", P)
        if self.lattice is not None:
            G = np.array(self.lattice, dtype=float)
            k = np.linalg.solve(G, P.T)
            if len(P) and np.max(np.abs(k - np.rint(k))) > 1e-12 * max(1.0, np.max(np.abs(k))):
                raise ValueError("points are not on the lattice")
            G.setflags(write=False)
            object.__setattr__(self, "lattice", G)
        keys = {_key(r) for r in P}
        object.__setattr__(self, "symmetric", all(_key(-r) in keys for r in P))

    def __len__(self):
        return len(self.points)

    @property
    def is_lattice(self):
        return self.lattice is not None

    @property
    def ms(self):
        return self.points[:, : self.d]

    @property
    def ns(self):
        return self.points[:, self.d :]

    def index(self, m, n):
        k = _key(np.concatenate([np.atleast_1d(m), np.atleast_1d(n)]).astype(float))
        for i, r in enumerate(self.points):
            if _key(r) == k:
                return i
        return None

    def contains(self, m, n):
        return self.index(m, n) is not None

    def within(self, radius):
        keep = np.max(np.abs(self.points), axis=1, initial=0) <= radius + 1e-12
        return PointSet(self.points[keep], self.d, radius, self.lattice)


def lattice_points(generator, radius, max_enumerate=10**7):
    """All generator @ k (k integer) with |m|_inf, |n|_inf <= radius."""
    G = np.atleast_2d(np.asarray(generator, dtype=float))
    d2 = G.shape[0]
    if G.shape != (d2, d2) or d2 % 2:
        raise DimensionMismatch("lattice generator must be 2d x 2d")
    bound = np.ceil(np.abs(np.linalg.inv(G)).sum(axis=1) * radius + 1e-9).astype(int)
    if prod(int(2 * b + 1) for b in bound) > max_enumerate:
        raise BudgetExceeded("lattice enumeration too large")
    K = np.array(list(itertools.product(*[range(-b, b + 1) for b in bound])), dtype=float)
    P = K @ G.T
    P = P[np.max(np.abs(P), axis=1) <= radius + 1e-12]
    P = np.where(np.abs(P) < 1e-14, 0.0, P)
    return PointSet(P, d2 // 2, radius, G)


def integer_lattice(d, radius, alpha=1.0, beta=1.0):
    """(alpha Z)^d x (beta Z)^d."""
    G = np.diag([alpha] * d + [beta] * d)
    return lattice_points(G, radius)


def liu_wang_points(radius):
    """{6Z + {-1, 0, 1}} x (1/2)Z truncated to |m|, |n| <= radius."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    top = int(np.ceil(radius / 6)) + 1
    ms = sorted({6 * k + r for k in range(-top, top + 1) for r in (-1, 0, 1) if abs(6 * k + r) <= radius + 1e-12})
    ns = [k / 2 for k in range(-int(2 * radius) - 1, int(2 * radius) + 2) if abs(k / 2) <= radius + 1e-12]
    P = [(m, n) for m in ms for n in ns]
    return PointSet(np.array(P, dtype=float), 1, radius)


def explicit_points(rows, d, radius=None):
    return PointSet(np.asarray(rows, dtype=float).reshape(-1, 2 * d), d, radius)


# ------------------------------------------------------------------ box algebra


def _box_integral(a, b, mu):
    """int_a^b exp(2 pi i mu x) dx, broadcasting."""
    return np.exp(1j * np.pi * mu * (a + b)) * (b - a) * np.sinc(mu * (b - a))


@dataclass(frozen=True)
class Pieces:
    """sum_k c_k exp(2 pi i nu_k x) on [a_k, b_k)."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        for name, dt in (("a", float), ("b", float), ("c", complex), ("nu", float)):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=dt)))
        if not (self.a.shape == self.b.shape == self.c.shape == self.nu.shape):
            raise ValueError("piece arrays must have equal length")
        if np.any(self.b <= self.a):
            raise ValueError("intervals must have positive length")

    @classmethod
    def boxes(cls, intervals, coeffs=None, nu=None):
        iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
        k = len(iv)
        c = np.ones(k) if coeffs is None else coeffs
        f = np.zeros(k) if nu is None else nu
        return cls(iv[:, 0], iv[:, 1], c, f)

    def translate(self, m, n):
        """Pieces of exp(2 pi i n x) h(x + m)."""
        return Pieces(self.a - m, self.b - m, self.c * np.exp(TWO_PI * 1j * self.nu * m), self.nu + n)

    def scaled(self, s):
        return Pieces(self.a, self.b, self.c * s, self.nu)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, complex)
        for a, b, c, f in zip(self.a, self.b, self.c, self.nu):
            out += np.where((x >= a) & (x < b), c * np.exp(TWO_PI * 1j * f * x), 0)
        return out

    def midpoint(self, t, tol=1e-12):
        """Average of the one-sided limits at t."""
        s = 0j
        for a, b, c, f in zip(self.a, self.b, self.c, self.nu):
            if a + tol < t < b - tol:
                w = 1.0
            elif abs(t - a) <= tol or abs(t - b) <= tol:
                w = 0.5
            else:
                continue
            s += w * c * np.exp(TWO_PI * 1j * f * t)
        return s

    def transform(self, t, sign=1):
        """sum_k c_k int_{a_k}^{b_k} exp(2 pi i (nu_k + sign t) x) dx."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, complex)
        for a, b, c, f in zip(self.a, self.b, self.c, self.nu):
            out += c * _box_integral(a, b, f + sign * t)
        return out

    @property
    def breakpoints(self):
        return np.unique(np.concatenate([self.a, self.b]))


def _pair(F, G, p=0):
    """int x^p F conj(G)."""
    s = 0j
    for ai, bi, ci, fi in zip(F.a, F.b, F.c, F.nu):
        for aj, bj, cj, fj in zip(G.a, G.b, G.c, G.nu):
            lo, hi = max(ai, aj), min(bi, bj)
            if hi > lo:
                s += ci * np.conj(cj) * _kernels.interval_moment(p, lo, hi, fi - fj)
    return s


def _pair_m(F, G):
    """<F, M G> with M = (i / 2 pi) d/dx taken distributionally.

    Jumps of G produce point masses; F is evaluated there by the average of
    its one-sided limits, which is what makes integration by parts exact for
    products of piecewise functions.
    """
    s = 0j
    for aj, bj, cj, fj in zip(G.a, G.b, G.c, G.nu):
        body = 0j
        for ai, bi, ci, fi in zip(F.a, F.b, F.c, F.nu):
            lo, hi = max(ai, aj), min(bi, bj)
            if hi > lo:
                body += ci * _kernels.interval_moment(0, lo, hi, fi - fj)
        edge = F.midpoint(aj) * np.exp(-TWO_PI * 1j * fj * aj) - F.midpoint(bj) * np.exp(-TWO_PI * 1j * fj * bj)
        s += np.conj(cj) * (-fj * body + (-1j / TWO_PI) * edge)
    return s


@dataclass(frozen=True)
class BoxAxis:
    pieces: Pieces
    fourier_side: bool = False

    def atom(self, m, n):
        """Pieces of T_{m,n} on this axis; frequency-side pieces when tagged."""
        if not self.fourier_side:
            return self.pieces.translate(m, n)
        # F(T_{m,n} h) = exp(-2 pi i m n) T_{n,-m} F(h)
        return self.pieces.translate(n, -m).scaled(np.exp(-TWO_PI * 1j * m * n))

    def pair(self, F, G, kind):
        """<F, K G> for K in {"1", "x", "M"} on atom pieces from :meth:`atom`."""
        if kind == "1":
            return _pair(F, G, 0)
        if not self.fourier_side:
            return _pair(F, G, 1) if kind == "x" else _pair_m(F, G)
        # x <-> -M and M <-> x on the frequency side
        return -_pair_m(F, G) if kind == "x" else _pair(F, G, 1)

    def moments(self):
        """(||h||^2, <x h, h>, ||x h||^2, <M h, h>, ||M h||^2); jumps make ||.||^2 infinite."""
        F = self.pieces
        n0 = _pair(F, F, 0).real
        p1, p2 = _pair(F, F, 1).real, _pair(F, F, 2).real
        q1 = np.conj(_pair_m(F, F)).real
        if self.fourier_side:
            return n0, -q1, np.inf, p1, p2
        return n0, p1, p2, q1, np.inf

    def sample(self, grid1):
        x = grid1.space_axis(0)
        vals = self.pieces.transform(x, sign=-1) if self.fourier_side else self.pieces(x)
        return SampledField(grid1, vals)

    def space_density(self, t):
        t = np.asarray(t, float)
        v = self.pieces.transform(t, sign=-1) if self.fourier_side else self.pieces(t)
        return np.abs(v) ** 2

    def freq_density(self, t):
        t = np.asarray(t, float)
        v = self.pieces(t) if self.fourier_side else self.pieces.transform(t, sign=1)
        return np.abs(v) ** 2

    def breakpoints(self, domain):
        return self.pieces.breakpoints if (domain == "space") != self.fourier_side else np.zeros(0)

    def to_dict(self):
        P = self.pieces
        return {
            "intervals": np.stack([P.a, P.b], 1).tolist(),
            "coeffs": [[z.real, z.imag] for z in P.c],
            "nu": P.nu.tolist(),
            "fourier_side": self.fourier_side,
        }


@dataclass(frozen=True)
class BoxGenerator:
    axes: tuple

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not 1 <= len(self.axes) <= 3:
            raise DimensionMismatch("box generators support 1 <= d <= 3")

    @property
    def d(self):
        return len(self.axes)

    @property
    def norm2(self):
        return float(prod(ax.moments()[0] for ax in self.axes))

    def atoms(self, m, n):
        m, n = np.atleast_1d(m), np.atleast_1d(n)
        return [ax.atom(mi, ni) for ax, mi, ni in zip(self.axes, m, n)]

    def sample(self, grid):
        if grid.d != self.d:
            raise DimensionMismatch("grid dimension differs from generator")
        return tensor(*[ax.sample(grid.axis_grid(i)) for i, ax in enumerate(self.axes)])

    def to_dict(self):
        return {"type": "box", "axes": [ax.to_dict() for ax in self.axes]}


def unit_box(d=1):
    """chi_[0,1)^d."""
    return BoxGenerator([BoxAxis(Pieces.boxes([[0, 1]]))] * d)


def liu_wang_generator():
    """2^{-1/2} chi of [0,1) u [3,4)."""
    return BoxGenerator([BoxAxis(Pieces.boxes([[0, 1], [3, 4]], [2**-0.5] * 2))])


def example_generator():
    """chi_[0,1)(x) times the inverse Fourier transform of chi_[0,1) in y."""
    box = Pieces.boxes([[0, 1]])
    return BoxGenerator([BoxAxis(box), BoxAxis(box, fourier_side=True)])


@dataclass(frozen=True)
class GaussianGenerator:
    """2^{d/4} exp(-pi |x|^2)."""

    d: int = 1

    @property
    def norm2(self):
        return 1.0

    def sample(self, grid):
        return gaussian(grid)

    def space_density(self, t):
        return np.sqrt(2) * np.exp(-2 * np.pi * np.asarray(t, float) ** 2)

    freq_density = space_density

    def to_dict(self):
        return {"type": "gaussian", "d": self.d}


def _op_terms(op, d):
    """Expand None / ("P", v) / ("M", w) into (axis, kind, coefficient) terms."""
    if op is None:
        return [(None, "1", 1.0)]
    kind, vec = op
    vec = np.atleast_1d(np.asarray(vec, dtype=float))
    if vec.size != d:
        raise DimensionMismatch(f"operator vector needs {d} entries")
    tag = {"P": "x", "M": "M"}[kind]
    return [(i, tag, c) for i, c in enumerate(vec) if c != 0]


def box_pair(g1, p, g2, q, op=None):
    """<(g1)_p, Op (g2)_q> for p, q = (m, n) and Op in None, ("P", v), ("M", w)."""
    if g1.d != g2.d:
        raise DimensionMismatch("generators differ in dimension")
    if any(a.fourier_side != b.fourier_side for a, b in zip(g1.axes, g2.axes)):
        raise SymGaborError("fourier-side tags differ between generators")
    F = g1.atoms(*p)
    G = g2.atoms(*q)
    base = [ax.pair(Fi, Gi, "1") for ax, Fi, Gi in zip(g1.axes, F, G)]
    total = 0j
    for axis, kind, coef in _op_terms(op, g1.d):
        if axis is None:
            total += coef * prod(base)
            continue
        val = g1.axes[axis].pair(F[axis], G[axis], kind)
        total += coef * val * prod(b for j, b in enumerate(base) if j != axis)
    return complex(total)


def exact_inner(g, p, q, h=None):
    """<g_p, h_q> in closed form (h defaults to g)."""
    return box_pair(g, p, g if h is None else h, q)


def operator_norm2(g, kind, vec):
    """||P_v g||^2 or ||M_w g||^2 for a box generator; inf when a jump is hit."""
    vec = np.atleast_1d(np.asarray(vec, dtype=float))
    mom = [ax.moments() for ax in g.axes]
    first, second = (1, 2) if kind == "P" else (3, 4)
    total = 0.0
    for i, j in itertools.product(range(g.d), repeat=2):
        c = vec[i] * vec[j]
        if c == 0:
            continue
        if i == j:
            val = mom[i][second] * prod(mom[k][0] for k in range(g.d) if k != i)
        else:
            val = mom[i][first] * mom[j][first] * prod(mom[k][0] for k in range(g.d) if k not in (i, j))
        total += c * val
    return float(total)


# ------------------------------------------------------------------ systems


@dataclass(frozen=True)
class GaborSystem:
    generator: object
    points: PointSet
    grid: GridSpec | None = None

    def __post_init__(self):
        if self.generator_d != self.points.d:
            raise DimensionMismatch("generator and point set dimensions differ")
        n2 = self.norm2
        if not (n2 > 0 and np.isfinite(n2)):
            raise ValueError("generator norm must be finite and nonzero")

    @property
    def d(self):
        return self.points.d

    @property
    def generator_d(self):
        g = self.generator
        return g.d if not isinstance(g, SampledField) else g.grid.d

    @property
    def norm2(self):
        g = self.generator
        return g.norm() ** 2 if isinstance(g, SampledField) else g.norm2

    @property
    def kind(self):
        if isinstance(self.generator, BoxGenerator):
            return "box"
        if isinstance(self.generator, GaussianGenerator):
            return "gaussian"
        return "field"

    def field(self, grid=None):
        """The generator sampled on ``grid`` (or the system grid / default grid)."""
        g = self.generator
        if isinstance(g, SampledField):
            return g
        return g.sample(grid or self.grid or GridSpec.default(self.d))

    def restricted(self, radius):
        return GaborSystem(self.generator, self.points.within(radius), self.grid)


def _gaussian_gram(ms, ns):
    G = np.ones((len(ms), len(ms)), complex)
    for i in range(ms.shape[1]):
        m, n = ms[:, i], ns[:, i]
        dm = m[:, None] - m[None, :]
        nu = n[:, None] - n[None, :]
        s = 0.5 * (m[:, None] + m[None, :])
        G *= np.exp(-np.pi * dm**2 / 2 - np.pi * nu**2 / 2 - TWO_PI * 1j * nu * s)
    return G


def _box_gram(g, ms, ns):
    G = np.ones((len(ms), len(ms)), complex)
    for i, ax in enumerate(g.axes):
        P = ax.pieces
        m, n = ms[:, i], ns[:, i]
        if ax.fourier_side:
            ph = np.exp(-TWO_PI * 1j * m * n)
            Gi = _kernels.box_gram_axis(P.a, P.b, P.c, P.nu, n, -m)
            Gi = ph[:, None] * Gi * np.conj(ph)[None, :]
        else:
            Gi = _kernels.box_gram_axis(P.a, P.b, P.c, P.nu, m, n)
        G *= Gi
    return G


def grid_atoms(f, points):
    """Rows T_{m,n} f for every point (fractional shifts via the Fourier side)."""
    return np.stack([apply_T(m, n, f, fractional=True).values.ravel() for m, n in zip(points.ms, points.ns)])


def gram_matrix(system, max_points=MAX_POINTS, grid=None):
    """G[p, q] = <g_p, g_q> over the system's points."""
    N = len(system.points)
    if N > max_points:
        raise BudgetExceeded(f"{N} points exceed the Gram budget of {max_points}")
    ms, ns = system.points.ms, system.points.ns
    if system.kind == "box":
        G = _box_gram(system.generator, ms, ns)
    elif system.kind == "gaussian":
        G = _gaussian_gram(ms, ns)
    else:
        f = system.field(grid)
        X = grid_atoms(f, system.points)
        G = f.weight * (X @ X.conj().T)
    return 0.5 * (G + G.conj().T)


def export_gram_csv(path, G):
    with open(path, "w") as fh:
        fh.write("row,col,re,im\n")
        for (i, j), z in np.ndenumerate(G):
            fh.write(f"{i},{j},{z.real:.17g},{z.imag:.17g}\n")


@dataclass(frozen=True)
class FrameBounds:
    A_est: float
    B_est: float
    method: str
    radius: float | None

    def to_dict(self):
        return {"A_est": self.A_est, "B_est": self.B_est, "method": self.method, "radius": self.radius}


def frame_bounds_estimate(system, radius=None, max_points=MAX_POINTS, rel_cut=1e-10):
    """Truncated-frame bound estimates.

    B_est is the top eigenvalue of the truncated Gram.  For A_est the
    truncated frame operator is minimized over the span of the inner half of
    the points (|m|, |n| <= R/2), where the truncation does not bias the sum
    downwards; directions the Gram cannot resolve are dropped.
    """
    if radius is not None:
        system = system.restricted(radius)
    pts = system.points
    if len(pts) == 0:
        raise ValueError("empty point set")
    R = radius if radius is not None else float(np.max(np.abs(pts.points)))
    G = gram_matrix(system, max_points)
    ev = np.linalg.eigvalsh(G)
    B = float(max(ev[-1], 0.0))
    inner_idx = np.flatnonzero(np.max(np.abs(pts.points), axis=1) <= R / 2 + 1e-12)
    if inner_idx.size == 0:
        inner_idx = np.arange(len(pts))
    Gc = G[:, inner_idx]
    lam, U = np.linalg.eigh(G[np.ix_(inner_idx, inner_idx)])
    keep = lam > rel_cut * max(lam[-1], 1e-300)
    if not np.any(keep):
        return FrameBounds(0.0, B, "gram-inner-rayleigh", R)
    T = U[:, keep] / np.sqrt(lam[keep])
    H = T.conj().T @ (Gc.conj().T @ Gc) @ T
    A = float(max(np.linalg.eigvalsh(0.5 * (H + H.conj().T))[0], 0.0))
    return FrameBounds(min(A, B), B, "gram-inner-rayleigh", R)


# ------------------------------------------------------------------ periodic grid systems


@dataclass(frozen=True)
class GridSystem:
    """A system folded onto a periodic grid: atom k is exp(2 pi i n_k.x) g[x + shift_k]."""

    generator: SampledField
    shifts: np.ndarray
    mods: np.ndarray
    points: PointSet

    @property
    def grid(self):
        return self.generator.grid

    def atoms(self, f=None):
        f = self.generator if f is None else f
        X = f.grid.mesh("space")
        out = []
        for s, nu in zip(self.shifts, self.mods):
            v = np.roll(f.values, tuple(-s), axis=tuple(range(f.d)))
            out.append((v * np.exp(TWO_PI * 1j * sum(c * x for c, x in zip(nu, X)))).ravel())
        return np.array(out)

    def apply(self, values):
        g = self.generator
        return _kernels.frame_apply(values, g.values, self.shifts, self.mods, g.grid.axes("space"), g.weight)

    def with_generator(self, f):
        return GridSystem(f, self.shifts, self.mods, self.points)


def grid_system(system, radius=None, grid=None):
    """Fold the (truncated) point set modulo the grid period and dedupe."""
    pts = system.points if radius is None else system.points.within(radius)
    f = system.field(grid)
    G = f.grid
    h = np.asarray(G.h)
    n = np.asarray(G.n)
    seen, shifts, mods, rows = set(), [], [], []
    for m, nu in zip(pts.ms, pts.ns):
        steps = m / h
        k = np.rint(steps)
        if np.any(np.abs(steps - k) > 1e-9):
            raise MisalignedShift(f"shift {m} is not a multiple of the grid spacing")
        k = k.astype(int) % n
        wrapped = np.mod(nu * h, 1.0)
        wrapped = np.where(np.abs(wrapped - 1.0) < 1e-12, 0.0, wrapped)
        key = (tuple(k), tuple(int(round(x * _KEY)) for x in wrapped))
        if key in seen:
            continue
        seen.add(key)
        shifts.append(k)
        mods.append(nu)
        rows.append(np.concatenate([m, nu]))
    if not rows:
        raise ValueError("empty point set")
    folded = PointSet(np.array(rows), system.d, radius)
    order = [folded.index(r[: system.d], r[system.d :]) for r in rows]
    perm = np.argsort(order)
    return GridSystem(f, np.array(shifts)[perm], np.array(mods, float)[perm], folded)


def grid_frame_bounds(gs, max_samples=4096):
    """Extreme eigenvalues of the folded frame operator (explicit when small)."""
    S = prod(gs.grid.n)
    if S > max_samples:
        return None
    X = gs.atoms()
    M = gs.generator.weight * (X.T @ X.conj())
    ev = np.linalg.eigvalsh(0.5 * (M + M.conj().T))
    return float(max(ev[0], 0.0)), float(ev[-1])


def frame_operator_apply(system, f, radius=None):
    """S f = sum_k <f, g_k> g_k on the periodic grid."""
    gs = system if isinstance(system, GridSystem) else grid_system(system, radius, f.grid)
    if f.grid != gs.grid:
        raise DimensionMismatch("field and system grids differ")
    return f.with_values(gs.apply(f.values))


def _as_grid_system(system, radius, grid):
    return system if isinstance(system, GridSystem) else grid_system(system, radius, grid)


def solve_frame(gs, rhs, iters=500, tol=1e-13, frame_tol=1e-8):
    """S^{-1} rhs by conjugate gradients."""
    bounds = grid_frame_bounds(gs)
    if bounds is not None and bounds[0] <= frame_tol * bounds[1]:
        raise NotAFrame(f"lower frame bound {bounds[0]:.3e} is below {frame_tol:g} x upper bound {bounds[1]:.3e}")
    shape = gs.grid.shape
    size = prod(shape)

    def mv(x):
        return gs.apply(np.asarray(x, complex).reshape(shape)).ravel()

    op = LinearOperator((size, size), matvec=mv, dtype=complex)
    b = np.asarray(rhs.values, complex).ravel()
    x, info = cg(op, b, rtol=tol, atol=0.0, maxiter=iters)
    res = np.linalg.norm(mv(x) - b) / np.linalg.norm(b)
    if res > 1e-6:
        raise NoConvergence(f"conjugate gradients stopped at relative residual {res:.3e} (info={info})")
    return rhs.with_values(x.reshape(shape))


def dual_generator(system, radius=None, iters=500, grid=None, tol=1e-13):
    """Canonical dual S^{-1} g on the periodic grid."""
    gs = _as_grid_system(system, radius, grid)
    return solve_frame(gs, gs.generator, iters, tol)


def dual_residual(system, dual, radius=None):
    gs = _as_grid_system(system, radius, dual.grid)
    g = gs.generator
    return float((frame_operator_apply(gs, dual) - g).norm() / g.norm())


def reconstruction_residual(system, dual, f, radius=None):
    """||sum_k <f, dual_k> g_k - f|| / ||f||."""
    gs = _as_grid_system(system, radius, f.grid)
    X = gs.atoms()
    Xd = gs.atoms(dual)
    coef = f.weight * (Xd.conj() @ f.values.ravel())
    rec = X.T @ coef
    return float(np.linalg.norm(rec - f.values.ravel()) * np.sqrt(f.weight) / f.norm())


def biorthogonality_residual(g, g_dual, points):
    """max over points of |<g_{m,n}, g_dual> - delta_{(m,n),0}|."""
    worst = 0.0
    zero = np.zeros(points.d)
    for m, n in zip(points.ms, points.ns):
        if isinstance(g, BoxGenerator):
            val = box_pair(g, (m, n), g_dual, (zero, zero))
        else:
            val = inner(apply_T(m, n, g, fractional=True), g_dual)
        target = 1.0 if not (np.any(m) or np.any(n)) else 0.0
        worst = max(worst, abs(val - target))
    return float(worst)


def reflection_residuals(g, points, v, w, dual=None):
    """Largest defects of the four translation-reflection identities.

    With g_{m,n}(x) = g(x - m) exp(2 pi i n.x) (the backward-shift indexing
    the identities are stated in) and g~ the dual (g itself by default):

      <g_{m,n}, P_v g>   = e(+m.n) <P_v g, g_{-m,-n}>
      <g_{m,n}, M_w g>   = e(+m.n) <M_w g, g_{-m,-n}>
      <P_v g, g~_{m,n}>  = e(-m.n) <g_{-m,-n}, P_v g~>
      <g_{m,n}, M_w g~>  = e(+m.n) <M_w g, g~_{-m,-n}>
    """
    h = g if dual is None else dual
    zero = np.zeros(g.d)
    O = (zero, zero)
    P, M = ("P", v), ("M", w)
    out = {"P_self": 0.0, "M_self": 0.0, "P_dual": 0.0, "M_dual": 0.0}

    def back(m, n):
        return (-m, n)

    for m, n in zip(points.ms, points.ns):
        e = np.exp(TWO_PI * 1j * float(np.dot(m, n)))
        fw, bw = back(m, n), back(-m, -n)
        checks = {
            "P_self": box_pair(g, fw, g, O, P) - e * np.conj(box_pair(g, bw, g, O, P)),
            "M_self": box_pair(g, fw, g, O, M) - e * np.conj(box_pair(g, bw, g, O, M)),
            "P_dual": np.conj(box_pair(h, fw, g, O, P)) - np.conj(e) * box_pair(g, bw, h, O, P),
            "M_dual": box_pair(g, fw, h, O, M) - e * np.conj(box_pair(h, bw, g, O, M)),
        }
        for k, val in checks.items():
            out[k] = max(out[k], float(abs(val)))
    return out


# ------------------------------------------------------------------ JSON systems


def _axis_from_dict(spec):
    iv = spec["intervals"]
    coeffs = spec.get("coeffs")
    if coeffs is not None:
        coeffs = [complex(*c) if isinstance(c, (list, tuple)) else complex(c) for c in coeffs]
    return BoxAxis(Pieces.boxes(iv, coeffs, spec.get("nu")), bool(spec.get("fourier_side", False)))


def generator_from_dict(spec, base_dir=None):
    kind = spec.get("type")
    if kind == "box":
        preset = spec.get("preset")
        if preset == "unit":
            return unit_box(int(spec.get("d", 1)))
        if preset == "liu_wang":
            return liu_wang_generator()
        if preset == "example":
            return example_generator()
        if preset is not None:
            raise ValueError(f"unknown box preset {preset!r}")
        return BoxGenerator([_axis_from_dict(a) for a in spec["axes"]])
    if kind == "gaussian":
        return GaussianGenerator(int(spec.get("d", 1)))
    if kind == "field":
        import os

        path = spec["path"]
        if base_dir and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return load_sgf(path)
    raise ValueError(f"unknown generator type {kind!r}")


def points_from_dict(spec, d, radius):
    kind = spec.get("type")
    if kind == "lattice":
        if "matrix" in spec:
            return lattice_points(spec["matrix"], radius)
        return integer_lattice(d, radius, float(spec.get("alpha", 1.0)), float(spec.get("beta", 1.0)))
    if kind == "liu_wang":
        if d != 1:
            raise DimensionMismatch("the Liu-Wang point set is one-dimensional")
        return liu_wang_points(radius)
    if kind == "explicit":
        return explicit_points(spec["points"], d, radius)
    raise ValueError(f"unknown point set type {kind!r}")


def system_from_dict(spec, radius=None, base_dir=None):
    gen = generator_from_dict(spec["generator"], base_dir)
    d = gen.grid.d if isinstance(gen, SampledField) else gen.d
    r = float(radius if radius is not None else spec.get("radius", 2))
    pts = points_from_dict(spec["points"], d, r)
    grid = None
    if "grid" in spec:
        grid = GridSpec(d, spec["grid"].get("L", 8.0), spec["grid"].get("n", 256))
    return GaborSystem(gen, pts, grid)


def load_system(path, radius=None):
    import os

    with open(path) as fh:
        spec = json.load(fh)
    return system_from_dict(spec, radius, os.path.dirname(os.path.abspath(path)))
