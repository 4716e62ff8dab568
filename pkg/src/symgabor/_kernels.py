"""Hot loops, each with a numba version and a pure-numpy reference.

The public names dispatch on ``_accel.USE_NUMBA``; ``*_numpy`` and
``*_jit`` stay importable for benchmarks and cross-checks.
"""
import numpy as np

from ._accel import USE_NUMBA, jit

# --------------------------------------------------------------- non-uniform DFT
# out_j = sum_k c_k exp(sign 2 pi i x_k . y_j)


def nudft_numpy(x, c, y, sign=1.0):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.complex128)
    out = np.empty(y.shape[0], dtype=np.complex128)
    step = max(1, 2**22 // max(1, x.shape[0]))
    for s in range(0, y.shape[0], step):
        ph = y[s : s + step] @ x.T
        out[s : s + step] = np.exp(sign * 2j * np.pi * ph) @ c
    return out


@jit
def _nudft_loop(x, c, y, sign, out):
    nx, d = x.shape
    two_pi = 2.0 * np.pi * sign
    for j in range(y.shape[0]):
        acc_re = 0.0
        acc_im = 0.0
        for k in range(nx):
            ph = 0.0
            for i in range(d):
                ph += x[k, i] * y[j, i]
            ph *= two_pi
            cr = np.cos(ph)
            si = np.sin(ph)
            acc_re += c[k].real * cr - c[k].imag * si
            acc_im += c[k].real * si + c[k].imag * cr
        out[j] = acc_re + 1j * acc_im


def nudft_jit(x, c, y, sign=1.0):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.complex128)
    out = np.empty(y.shape[0], dtype=np.complex128)
    _nudft_loop(x, c, y, float(sign), out)
    return out


# --------------------------------------------------------------- interval moments
# J_q(h, w) = int_{-h}^{h} s^q exp(i w s) ds for q = 0, 1, 2


@jit
def _centered_moment(q, h, w):
    wh = w * h
    if abs(wh) < 0.5:
        # Taylor series in (i w s)
        acc_re = 0.0
        acc_im = 0.0
        term = 1.0  # w^k / k!
        for k in range(40):
            p = q + k
            if p % 2 == 0:
                integ = 2.0 * h ** (p + 1) / (p + 1)
                r = k % 4
                if r == 0:
                    acc_re += term * integ
                elif r == 1:
                    acc_im += term * integ
                elif r == 2:
                    acc_re -= term * integ
                else:
                    acc_im -= term * integ
            term *= w / (k + 1)
        return acc_re + 1j * acc_im
    s = np.sin(wh)
    co = np.cos(wh)
    if q == 0:
        return complex(2.0 * s / w)
    if q == 1:
        return 1j * 2.0 * (s / w**2 - h * co / w)
    return complex(2.0 * (h * h * s / w + 2.0 * h * co / w**2 - 2.0 * s / w**3))


@jit
def _moment(p, a, b, mu):
    """int_a^b x^p exp(2 pi i mu x) dx for p in 0, 1, 2."""
    if b <= a:
        return 0j
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    w = 2.0 * np.pi * mu
    ph = np.exp(1j * w * c)
    if p == 0:
        return ph * _centered_moment(0, h, w)
    if p == 1:
        return ph * (c * _centered_moment(0, h, w) + _centered_moment(1, h, w))
    return ph * (
        c * c * _centered_moment(0, h, w)
        + 2.0 * c * _centered_moment(1, h, w)
        + _centered_moment(2, h, w)
    )


def interval_moment(p, a, b, mu):
    return complex(_moment(int(p), float(a), float(b), float(mu)))


# --------------------------------------------------------------- box Gram, one axis
# A piece is c * exp(2 pi i nu x) * indicator[a, b)(x).  T_{m,n} maps it to
# c exp(2 pi i nu m) exp(2 pi i (nu + n) x) indicator[a - m, b - m)(x).


@jit
def _box_gram_loop(a, b, c, nu, ms, ns, out):
    npts = ms.shape[0]
    npc = a.shape[0]
    for p in range(npts):
        for q in range(p, npts):
            acc = 0j
            for i in range(npc):
                ai = a[i] - ms[p]
                bi = b[i] - ms[p]
                ci = c[i] * np.exp(2j * np.pi * nu[i] * ms[p])
                fi = nu[i] + ns[p]
                for j in range(npc):
                    aj = a[j] - ms[q]
                    bj = b[j] - ms[q]
                    lo = max(ai, aj)
                    hi = min(bi, bj)
                    if hi <= lo:
                        continue
                    cj = c[j] * np.exp(2j * np.pi * nu[j] * ms[q])
                    fj = nu[j] + ns[q]
                    acc += ci * np.conj(cj) * _moment(0, lo, hi, fi - fj)
            out[p, q] = acc
            out[q, p] = np.conj(acc)


def box_gram_axis_jit(a, b, c, nu, ms, ns):
    out = np.empty((len(ms), len(ms)), dtype=np.complex128)
    _box_gram_loop(
        np.asarray(a, np.float64),
        np.asarray(b, np.float64),
        np.asarray(c, np.complex128),
        np.asarray(nu, np.float64),
        np.asarray(ms, np.float64),
        np.asarray(ns, np.float64),
        out,
    )
    return out


def _centered_moment0_numpy(h, w):
    small = np.abs(w * h) < 1e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(small, 2 * h * (1 - (w * h) ** 2 / 6), 2 * np.sin(w * h) / w)
    return val


def box_gram_axis_numpy(a, b, c, nu, ms, ns):
    a, b, nu = (np.asarray(t, float) for t in (a, b, nu))
    c = np.asarray(c, complex)
    ms = np.asarray(ms, float)
    ns = np.asarray(ns, float)
    P = len(ms)
    out = np.zeros((P, P), dtype=complex)
    for i in range(len(a)):
        ai = a[i] - ms[:, None]
        bi = b[i] - ms[:, None]
        ci = c[i] * np.exp(2j * np.pi * nu[i] * ms)[:, None]
        fi = nu[i] + ns[:, None]
        for j in range(len(a)):
            aj = a[j] - ms[None, :]
            bj = b[j] - ms[None, :]
            cj = np.conj(c[j] * np.exp(2j * np.pi * nu[j] * ms))[None, :]
            lo = np.maximum(ai, aj)
            hi = np.minimum(bi, bj)
            ok = hi > lo
            w = 2 * np.pi * (fi - (nu[j] + ns[None, :]))
            cen = 0.5 * (lo + hi)
            half = np.where(ok, 0.5 * (hi - lo), 0.0)
            val = np.exp(1j * w * cen) * _centered_moment0_numpy(half, w)
            out += np.where(ok, ci * cj * val, 0.0)
    return out


# --------------------------------------------------------------- frame operator on a grid
# Points act as g_k[x] = exp(2 pi i n.x) g[x + m]; shifts are integer sample
# offsets per axis, modulation phases come from the node coordinates.
# Fields are passed as 3-d arrays (singleton axes pad d < 3).


@jit
def _frame_apply_loop(f, g, shifts, mods, ax0, ax1, ax2, cell, out):
    n0, n1, n2 = f.shape
    npts = shifts.shape[0]
    tw = 2.0 * np.pi
    for p in range(npts):
        s0 = shifts[p, 0]
        s1 = shifts[p, 1]
        s2 = shifts[p, 2]
        m0 = mods[p, 0]
        m1 = mods[p, 1]
        m2 = mods[p, 2]
        coef = 0j
        for i in range(n0):
            gi = (i + s0) % n0
            for j in range(n1):
                gj = (j + s1) % n1
                for k in range(n2):
                    gk = (k + s2) % n2
                    ph = tw * (m0 * ax0[i] + m1 * ax1[j] + m2 * ax2[k])
                    atom = g[gi, gj, gk] * (np.cos(ph) + 1j * np.sin(ph))
                    coef += f[i, j, k] * np.conj(atom)
        coef *= cell
        for i in range(n0):
            gi = (i + s0) % n0
            for j in range(n1):
                gj = (j + s1) % n1
                for k in range(n2):
                    gk = (k + s2) % n2
                    ph = tw * (m0 * ax0[i] + m1 * ax1[j] + m2 * ax2[k])
                    out[i, j, k] += coef * g[gi, gj, gk] * (np.cos(ph) + 1j * np.sin(ph))


def frame_apply_jit(f, g, shifts, mods, axes, cell):
    f3, g3, sh, md, ax = _pad3(f, g, shifts, mods, axes)
    out = np.zeros_like(f3)
    _frame_apply_loop(f3, g3, sh, md, ax[0], ax[1], ax[2], float(cell), out)
    return out.reshape(np.shape(f))


def frame_apply_numpy(f, g, shifts, mods, axes, cell):
    f3, g3, sh, md, ax = _pad3(f, g, shifts, mods, axes)
    out = np.zeros_like(f3)
    mesh = np.meshgrid(*ax, indexing="ij")
    for p in range(sh.shape[0]):
        atom = np.roll(g3, tuple(-int(s) for s in sh[p]), axis=(0, 1, 2))
        ph = sum(md[p, i] * mesh[i] for i in range(3))
        atom = atom * np.exp(2j * np.pi * ph)
        coef = cell * np.vdot(atom, f3)
        out += coef * atom
    return out.reshape(np.shape(f))


def _pad3(f, g, shifts, mods, axes):
    f = np.asarray(f, np.complex128)
    d = f.ndim
    shape3 = f.shape + (1,) * (3 - d)
    f3 = np.ascontiguousarray(f.reshape(shape3))
    g3 = np.ascontiguousarray(np.asarray(g, np.complex128).reshape(shape3))
    sh = np.zeros((len(shifts), 3), np.int64)
    md = np.zeros((len(shifts), 3), np.float64)
    sh[:, :d] = np.asarray(shifts, np.int64).reshape(len(shifts), d)
    md[:, :d] = np.asarray(mods, np.float64).reshape(len(shifts), d)
    ax = [np.asarray(a, np.float64) for a in axes] + [np.zeros(1)] * (3 - d)
    return f3, g3, sh, md, ax


if USE_NUMBA:
    nudft = nudft_jit
    box_gram_axis = box_gram_axis_jit
    frame_apply = frame_apply_jit
else:
    nudft = nudft_numpy
    box_gram_axis = box_gram_axis_numpy
    frame_apply = frame_apply_numpy
