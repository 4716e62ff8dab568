"""Truncated uncertainty products and their growth across cutoffs.

No finite computation certifies that a norm is infinite, so each product is
evaluated over a geometric schedule of cutoffs K and a log-log slope is
fitted.  Growth with slope above 0.25 (and a clean fit) is reported as
divergent; saturation as finite.

Box and Gaussian generators use closed-form densities with Gauss-Legendre
panels; sampled fields use grid sums.  Truncated values are accumulated
shell by shell so they are nondecreasing in K by construction.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import prod

import numpy as np
from scipy.special import fresnel, roots_legendre

from .errors import DegeneratePair, DimensionMismatch, NotAFrame, ScheduleError
from .field import GridSpec, SampledField, fourier
from .gabor import BoxGenerator, GaussianGenerator, dual_generator, dual_residual, grid_system
from .genfourier import gft, make_plan
from .operators import apply_momentum_shear
from .symplectic import as_vec, omega, regularize_basis

SLOPE_THRESHOLD = 0.25
FIT_RESIDUAL_MAX = 0.1
PANEL = 0.125
_GL_X, _GL_W = roots_legendre(16)


# ------------------------------------------------------------------ types


@dataclass(frozen=True)
class QuadraticForm:
    """omega(x) = sum_k alpha_k (v_k . x)^2."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((float(a), np.atleast_1d(np.asarray(v, float))) for a, v in self.terms)
        if not terms:
            raise ValueError("quadratic form needs at least one term")
        if any(a < 0 for a, _ in terms):
            raise ValueError("coefficients must be nonnegative")
        if not any(a > 0 for a, _ in terms):
            raise ValueError("at least one coefficient must be positive")
        if len({v.size for _, v in terms}) != 1:
            raise DimensionMismatch("term vectors differ in length")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def euclidean(cls, d):
        return cls(tuple((1.0, np.eye(d)[k]) for k in range(d)))

    @property
    def d(self):
        return self.terms[0][1].size

    @property
    def matrix(self):
        return sum(a * np.outer(v, v) for a, v in self.terms)

    def __call__(self, X):
        return np.einsum("i...,ij,j...->...", X, self.matrix, X)


@dataclass(frozen=True)
class TruncationSchedule:
    """Geometric cutoffs plus the grid used at each cutoff for sampled work."""

    cutoffs: tuple
    base_L: float = 8.0
    oversample: int = 8
    max_samples: int = 2**20

    def __post_init__(self):
        K = tuple(float(k) for k in self.cutoffs)
        object.__setattr__(self, "cutoffs", K)
        if len(K) < 4:
            raise ScheduleError("a schedule needs at least 4 cutoffs")
        if any(k <= 0 for k in K) or any(b <= a for a, b in zip(K, K[1:])):
            raise ScheduleError("cutoffs must be positive and increasing")
        ratios = np.array(K[1:]) / np.array(K[:-1])
        if np.max(np.abs(ratios - ratios[0])) > 1e-9 * ratios[0]:
            raise ScheduleError("cutoffs must have a constant ratio")

    @classmethod
    def geometric(cls, k0=8.0, k1=128.0, count=5, **kw):
        if count < 4:
            raise ScheduleError("a schedule needs at least 4 cutoffs")
        return cls(tuple(float(x) for x in np.geomspace(k0, k1, count)), **kw)

    @classmethod
    def parse(cls, text):
        """'geometric:8:128:5'."""
        parts = text.split(":")
        if len(parts) != 4 or parts[0] != "geometric":
            raise ScheduleError(f"expected geometric:K0:K1:count, got {text!r}")
        return cls.geometric(float(parts[1]), float(parts[2]), int(parts[3]))

    @property
    def ratio(self):
        return self.cutoffs[1] / self.cutoffs[0]

    def grid_for(self, K, d):
        """Fixed half-extent, sample count grown until the frequency range covers K."""
        cap = 2 ** int(np.log2(self.max_samples) // d)
        need = self.oversample * self.base_L * K
        n = 8
        while n < need and n < cap:
            n *= 2
        return GridSpec(d, self.base_L, n)

    def sheared_grid_for(self, K, d, shear):
        """Grid for a shear-conjugated field.

        The shear moves frequency xi to position about -C xi, so the extent
        grows with K and the sample count follows n = 4 L^2 / |C|, which keeps
        the moved content on the grid.
        """
        c = max(float(np.max(np.abs(shear))), 1e-12)
        L = max(self.base_L, 4.0 * K)
        cap = 2 ** int(np.log2(self.max_samples) // d)
        n = 8
        while n < 4 * L * L / c and n < cap:
            n *= 2
        L = min(L, np.sqrt(n * c) / 2)
        return GridSpec(d, max(L, self.base_L), n)

    def to_dict(self):
        return {"cutoffs": list(self.cutoffs), "base_L": self.base_L, "oversample": self.oversample}


@dataclass
class DivergenceReport:
    cutoffs: np.ndarray
    factor1: np.ndarray
    factor2: np.ndarray
    product: np.ndarray
    slope: float
    residual: float
    verdict: str
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "cutoffs": list(map(float, self.cutoffs)),
            "factor1": list(map(float, self.factor1)),
            "factor2": list(map(float, self.factor2)),
            "product": list(map(float, self.product)),
            "slope": self.slope,
            "residual": self.residual,
            "verdict": self.verdict,
            "metadata": self.metadata,
        }

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["K", "factor1", "factor2", "product"])
        for row in zip(self.cutoffs, self.factor1, self.factor2, self.product):
            w.writerow([f"{x:.17g}" for x in row])
        return buf.getvalue()


def fit_slope(report_or_cutoffs, values=None):
    """Least-squares slope of log(value) against log(K) and the RMS misfit."""
    if values is None:
        K, v = report_or_cutoffs.cutoffs, report_or_cutoffs.product
    else:
        K, v = report_or_cutoffs, values
    K = np.asarray(K, float)
    v = np.asarray(v, float)
    if K.size < 4:
        raise ScheduleError("slope fit needs at least 4 cutoffs")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("slope fit needs positive finite values")
    x, y = np.log(K), np.log(v)
    A = np.stack([x, np.ones_like(x)], 1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return float(coef[0]), res


def classify(slope, residual):
    return "divergent" if slope > SLOPE_THRESHOLD and residual < FIT_RESIDUAL_MAX else "finite"


def _report(K, f1, f2, prod_, meta):
    slope, res = fit_slope(K, prod_)
    return DivergenceReport(np.asarray(K), np.asarray(f1), np.asarray(f2), np.asarray(prod_), slope, res, classify(slope, res), meta)


# ------------------------------------------------------------------ quadrature


def _panels(lo, hi, breaks, width):
    if hi <= lo:
        return np.zeros(0), np.zeros(0)
    k = max(1, int(np.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, k + 1)
    inside = breaks[(breaks > lo) & (breaks < hi)]
    edges = np.unique(np.concatenate([edges, inside]))
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    x = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
    w = half[:, None] * _GL_W[None, :]
    return x.ravel(), w.ravel()


def shell_moments(rho, cutoffs, breaks=(), width=PANEL):
    """Cumulative int_{|t| <= K} t^p rho(t) dt for p = 0, 1, 2 at every cutoff.

    Each shell K_{i-1} < |t| <= K_i is integrated separately with positive
    weights, so the p = 0 and p = 2 columns never decrease.
    """
    breaks = np.asarray(breaks, float)
    out = np.zeros((len(cutoffs), 3))
    acc = np.zeros(3)
    prev = 0.0
    for i, K in enumerate(cutoffs):
        xs, ws = [], []
        for lo, hi in ((-K, -prev), (prev, K)) if prev > 0 else ((-K, K),):
            x, w = _panels(lo, hi, breaks, width)
            xs.append(x)
            ws.append(w)
        x, w = np.concatenate(xs), np.concatenate(ws)
        r = np.maximum(rho(x), 0.0) * w
        acc = acc + np.array([r.sum(), (x * r).sum(), (x * x * r).sum()])
        out[i] = acc
        prev = K
    return out


def _quadratic_from_moments(mom, Q):
    """int (x^T Q x) prod_k rho_k over the cube, from per-axis moments (d, r, 3)."""
    d = len(mom)
    total = np.zeros(mom[0].shape[0])
    for i in range(d):
        for j in range(d):
            if Q[i, j] == 0:
                continue
            if i == j:
                val = mom[i][:, 2] * prod((mom[k][:, 0] for k in range(d) if k != i), start=np.ones_like(total))
            else:
                rest = prod((mom[k][:, 0] for k in range(d) if k not in (i, j)), start=np.ones_like(total))
                val = mom[i][:, 1] * mom[j][:, 1] * rest
            total = total + Q[i, j] * val
    return total


def _axis_models(g, domain):
    """(density, breakpoints) per axis for closed-form generators."""
    if isinstance(g, GaussianGenerator):
        return [(g.space_density, ()) for _ in range(g.d)]
    out = []
    for ax in g.axes:
        rho = ax.space_density if domain == "space" else ax.freq_density
        out.append((rho, ax.breakpoints(domain)))
    return out


def _closed_form(g):
    return isinstance(g, (BoxGenerator, GaussianGenerator))


def _analytic_quadratic(g, Q, cutoffs, domain):
    mom = [shell_moments(rho, cutoffs, br) for rho, br in _axis_models(g, domain)]
    return _quadratic_from_moments(mom, Q)


def _grid_shells(weights, radius, cutoffs):
    """Cumulative sums of nonnegative weights over radius <= K."""
    shells = []
    prev = -np.inf
    for K in cutoffs:
        mask = (radius > prev) & (radius <= K)
        shells.append(float(np.sum(weights[mask])))
        prev = K
    return np.cumsum(shells)


def _grid_quadratic(f, Q, cutoffs):
    X = f.grid.mesh("space")
    XS = np.array(X)
    F = fourier(f)
    XI = np.array(f.grid.mesh("frequency"))
    quad_x = np.einsum("i...,ij,j...->...", XS, Q, XS)
    quad_xi = np.einsum("i...,ij,j...->...", XI, Q, XI)
    a = _grid_shells(np.maximum(quad_x, 0) * np.abs(f.values) ** 2 * f.weight, np.max(np.abs(XS), 0), cutoffs)
    b = _grid_shells(np.maximum(quad_xi, 0) * np.abs(F.values) ** 2 * F.weight, np.max(np.abs(XI), 0), cutoffs)
    return a, b


def _map(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _gen_d(g):
    return g.grid.d if isinstance(g, SampledField) else g.d


# ------------------------------------------------------------------ position / momentum


def truncated_pm_product(g, v, w, schedule, workers=1):
    """(int_{|x|<=K} |v.x|^2 |g|^2)^{1/2} (int_{|xi|<=K} |w.xi|^2 |g^|^2)^{1/2} per cutoff.

    |.| is the max-norm, so the truncation region is a cube.
    """
    d = _gen_d(g)
    v = np.atleast_1d(np.asarray(v, float))
    w = np.atleast_1d(np.asarray(w, float))
    if v.size != d or w.size != d:
        raise DimensionMismatch(f"v and w need {d} entries")
    if not np.any(v) or not np.any(w):
        raise ValueError("v and w must be nonzero")
    K = schedule.cutoffs
    if _closed_form(g):
        jobs = [(np.outer(v, v), "space"), (np.outer(w, w), "freq")]
        a, b = _map(lambda job: _analytic_quadratic(g, job[0], K, job[1]), jobs, workers)
        route = "closed-form"
    else:
        a, _ = _grid_quadratic(g, np.outer(v, v), K)
        _, b = _grid_quadratic(g, np.outer(w, w), K)
        route = "grid"
    f1, f2 = np.sqrt(a), np.sqrt(b)
    meta = {"mode": "pm", "v": v.tolist(), "w": w.tolist(), "route": route, "schedule": schedule.to_dict()}
    return _report(K, f1, f2, f1 * f2, meta)


def quadratic_form_product(g, form, schedule, workers=1):
    """(int_{|x|<=K} omega(x)|g|^2) and (int_{|xi|<=K} omega(xi)|g^|^2) per cutoff."""
    d = _gen_d(g)
    if form.d != d:
        raise DimensionMismatch("form and generator dimensions differ")
    K = schedule.cutoffs
    Q = form.matrix
    if _closed_form(g):
        a, b = _map(lambda dom: _analytic_quadratic(g, Q, K, dom), ["space", "freq"], workers)
        route = "closed-form"
    else:
        a, b = _grid_quadratic(g, Q, K)
        route = "grid"
    meta = {
        "mode": "quadform",
        "terms": [[a_, v_.tolist()] for a_, v_ in form.terms],
        "route": route,
        "schedule": schedule.to_dict(),
    }
    return _report(K, a, b, a * b, meta)


# ------------------------------------------------------------------ phase-space pairs


def _chirped_transform(pieces, kappa, t):
    """sum_k c_k int_{a_k}^{b_k} exp(-pi i kappa x^2 + 2 pi i (nu_k + t) x) dx."""
    t = np.asarray(t, float)
    out = np.zeros(t.shape, complex)
    if abs(kappa) < 1e-3:
        for a, b, c, f in zip(pieces.a, pieces.b, pieces.c, pieces.nu):
            x, wq = _panels(a, b, np.zeros(0), (b - a) / 64)
            ph = np.exp(-1j * np.pi * kappa * x**2)[None, :] * np.exp(2j * np.pi * np.outer(f + t, x))
            out += c * (ph @ wq)
        return out
    s = np.sign(kappa)
    root = np.sqrt(2 * abs(kappa))
    for a, b, c, f in zip(pieces.a, pieces.b, pieces.c, pieces.nu):
        mu = f + t
        x0 = mu / kappa
        Sb, Cb = fresnel(root * (b - x0))
        Sa, Ca = fresnel(root * (a - x0))
        val = ((Cb - Ca) - 1j * s * (Sb - Sa)) / root
        out += c * np.exp(1j * np.pi * mu * x0) * val
    return out


def _spectral_density(g, a, b, axis):
    """Density of the spectral measure of Q_(a,b) acting on one axis, and its breakpoints.

    Conjugating by exp(-pi i (a/b) x^2) turns Q_(a,b) into b M, whose
    measure in a state phi is |phi^(s / b)|^2 / |b|; with b = 0 it is the
    position density scaled by a.
    """
    if isinstance(g, GaussianGenerator):
        var = (a * a + b * b) / (4 * np.pi)
        return (lambda s: np.exp(-np.asarray(s) ** 2 / (2 * var)) / np.sqrt(2 * np.pi * var)), ()
    ax = g.axes[axis]
    pieces = ax.pieces
    if ax.fourier_side:
        # on the frequency side x -> -M and M -> x, so Q_(a,b) acts as Q_(b,-a)
        a, b = b, -a
    if b == 0:
        def rho(s):
            return np.abs(pieces(np.asarray(s) / a)) ** 2 / abs(a)

        return rho, pieces.breakpoints * a
    kappa = a / b

    def rho(s):
        return np.abs(_chirped_transform(pieces, kappa, np.asarray(s) / b)) ** 2 / abs(b)

    return rho, ()


def _single_axis(u, d):
    a, b = u[:d], u[d:]
    live = [i for i in range(d) if a[i] != 0 or b[i] != 0]
    return live[0] if len(live) == 1 else None


def _analytic_q(g, u, cutoffs):
    d = g.d
    i = _single_axis(u, d)
    rho, br = _spectral_density(g, u[i], u[d + i], i)
    width = PANEL * max(1.0, min(abs(u[i]), abs(u[d + i])) if u[d + i] else abs(u[i]))
    mom = shell_moments(rho, cutoffs, br, width)
    rest = prod(_axis_norm2(g, k) for k in range(d) if k != i)
    return mom[:, 2] * rest


def _axis_norm2(g, k):
    return 1.0 if isinstance(g, GaussianGenerator) else g.axes[k].moments()[0]


def _grid_q(f, reg, scale_w, cutoffs, workers=1):
    """Truncated second moments of the first spectral variable of each frame."""
    B = reg.basis
    fp = apply_momentum_shear(reg.shear, f) if reg.shear is not None else f

    def side(job):
        frame, scale = job
        G = gft(make_plan(frame, f.grid), fp)
        s = scale * G.nodes()[0]
        dens = s * s * np.abs(G.values) ** 2 * G.weight
        return _grid_shells(dens, np.abs(s), cutoffs)

    return _map(side, [(B.V, 1.0), (B.W, scale_w)], workers)


def _pair_setup(v, w, d=None):
    v = as_vec(v, d)
    w = as_vec(w, v.size // 2)
    om = omega(v, w)
    if abs(om) <= 1e-12 * max(1.0, np.abs(v).max() * np.abs(w).max()):
        raise DegeneratePair(f"omega(v, w) = {om:.3e}; the pair is not transverse")
    return v, w, om


def truncated_q_product(g, v, w, schedule, basis=None, route="auto", workers=1):
    """||Q_v g||_K ||Q_w g||_K with both factors truncated on the spectral side.

    ``route="grid"`` reads the spectral densities off F_v(g) and F_w(g) for
    the regularized basis through (v, w / omega); ``"closed-form"`` uses the
    analytic spectral density, available when v and w each act on a single
    axis of a box or Gaussian generator.  Both compute the same measure.
    """
    d = _gen_d(g)
    v, w, om = _pair_setup(v, w, d)
    K = schedule.cutoffs
    aligned = _closed_form(g) and _single_axis(v, d) is not None and _single_axis(w, d) is not None
    if route == "auto":
        route = "closed-form" if aligned else "grid"
    meta = {"mode": "q", "v": v.tolist(), "w": w.tolist(), "omega": om, "route": route, "schedule": schedule.to_dict()}
    if route == "closed-form":
        if not aligned:
            raise ValueError("closed-form route needs axis-aligned pairs on a box or Gaussian generator")
        a, b = _map(lambda u: _analytic_q(g, u, K), [v, w], workers)
    elif route == "grid":
        reg = basis if basis is not None else regularize_basis(v, w)
        meta["basis"] = {"V": reg.basis.V.vectors.tolist(), "W": reg.basis.W.vectors.tolist()}
        meta["shear"] = None if reg.shear is None else np.asarray(reg.shear).tolist()
        # one grid resolving frequencies up to the largest cutoff serves all cutoffs
        if isinstance(g, SampledField):
            f = g
        elif reg.shear is None:
            f = g.sample(schedule.grid_for(K[-1], d))
        else:
            f = g.sample(schedule.sheared_grid_for(K[-1], d, reg.shear))
        meta["grid"] = {"L": list(f.grid.L), "n": list(f.grid.n)}
        a, b = _grid_q(f, reg, om, K, workers)
    else:
        raise ValueError(f"unknown route {route!r}")
    f1, f2 = np.sqrt(a), np.sqrt(b)
    return _report(K, f1, f2, f1 * f2, meta)


def truncated_dual_q_product(system, v, w, schedule, radius=None, basis=None, iters=500):
    """||Q_v g|| ||Q_w g|| ||Q_v g~|| ||Q_w g~|| truncated, with g~ the canonical dual.

    Returns a report with verdict "inapplicable" when the system is not a frame.
    """
    d = system.d
    v, w, om = _pair_setup(v, w, d)
    K = schedule.cutoffs
    meta = {"mode": "t13", "v": v.tolist(), "w": w.tolist(), "omega": om, "schedule": schedule.to_dict()}
    try:
        gs = grid_system(system, radius)
        gd = dual_generator(gs, iters=iters)
    except NotAFrame as exc:
        meta["reason"] = str(exc)
        nan = np.full(len(K), np.nan)
        return DivergenceReport(np.asarray(K), nan, nan, nan, float("nan"), float("nan"), "inapplicable", meta)
    meta["dual_residual"] = dual_residual(gs, gd)
    reg = basis if basis is not None else regularize_basis(v, w)
    a, b = _grid_q(gs.generator, reg, om, K)
    ad, bd = _grid_q(gd, reg, om, K)
    f1 = np.sqrt(a * ad)
    f2 = np.sqrt(b * bd)
    return _report(K, f1, f2, f1 * f2, meta)
