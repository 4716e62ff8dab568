import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from symgabor.errors import BudgetExceeded, GridMismatch, SingularB, SingularY
from symgabor.field import GridSpec, fourier, gaussian, hermite
from symgabor.genfourier import (
    change_rep,
    covariance_check,
    diagonalization_residual,
    gft,
    gft_at,
    inverse_gft,
    lattice_map,
    lattice_map_explicit,
    make_plan,
    make_tilde_plan,
    tilde_gft_v,
    tilde_gft_w,
    tilde_plan_from_basis,
    tilde_w_at,
)
from symgabor.symplectic import complete_symplectic_basis, make_basis, make_frame

G1 = GridSpec.default(1)


def chirped_gaussian_transform(a, b, xi):
    # |b|^-1/2 int 2^1/4 exp(-pi x^2) exp(2 pi i x xi / b - pi i (a/b) x^2) dx
    z = 1 + 1j * a / b
    return abs(b) ** -0.5 * 2 ** 0.25 / np.sqrt(z) * np.exp(-np.pi * (xi / b) ** 2 / z)


@pytest.mark.parametrize("a,b", [(0.0, 1.0), (1.0, 1.0), (-0.5, 2.0), (2.0, -0.75)])
def test_gft_closed_form_gaussian(a, b):
    plan = make_plan(make_frame([[a, b]]), G1)
    out = gft(plan, gaussian(G1))
    xi = out.nodes()[0]
    assert np.allclose(xi, b * G1.freq_axis(0))
    assert np.max(np.abs(out.values - chirped_gaussian_transform(a, b, xi))) < 1e-10
    pts = np.array([[0.3], [-1.1]])
    assert np.allclose(gft_at(plan, gaussian(G1), pts), chirped_gaussian_transform(a, b, pts[:, 0]), atol=1e-10)


def test_standard_frame_is_fourier():
    h = hermite(GridSpec.default(2), (2, 1))
    plan = make_plan(make_frame([[0, 0, 1, 0], [0, 0, 0, 1]]), h.grid)
    assert np.allclose(gft(plan, h).values, fourier(h).values, atol=1e-14)


@given(st.floats(-3, 3), st.floats(0.2, 3), st.integers(0, 4))
def test_gft_unitary_and_invertible(a, b, k):
    h = hermite(G1, k)
    plan = make_plan(make_frame([[a, b]]), G1)
    H = gft(plan, h)
    assert H.norm() == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(inverse_gft(plan, H).values, h.values, atol=1e-10)


def test_singular_B_and_grid_checks():
    with pytest.raises(SingularB):
        make_plan(make_frame([[1.0, 0.0]]), G1)
    plan = make_plan(make_frame([[0.0, 1.0]]), G1)
    with pytest.raises(GridMismatch):
        gft(plan, gaussian(GridSpec(1, 8, 128)))
    other = gft(make_plan(make_frame([[0.0, 2.0]]), G1), gaussian(G1))
    with pytest.raises(GridMismatch):
        inverse_gft(plan, other)


def test_transverse_frames_required():
    V = make_frame([[1.0, 1.0]])
    with pytest.raises(SingularY):
        make_tilde_plan(V, V, G1)


def test_change_rep_budget():
    B = make_basis([[1.0, 1.0]], [[0.0, 1.0]])
    tp = tilde_plan_from_basis(B, G1)
    with pytest.raises(BudgetExceeded):
        change_rep(tp, gft(tp.plan_v, gaussian(G1)))


def test_change_rep_on_random_pair():
    G = GridSpec(1, 8, 128)
    B = complete_symplectic_basis([0.7, 1.3], [-0.4, 0.9])
    tp = tilde_plan_from_basis(B, G)
    h = hermite(G, 1)
    direct = gft(tp.plan_w, h)
    via = change_rep(tp, gft(tp.plan_v, h))
    assert np.linalg.norm(via.values - direct.values) / np.linalg.norm(direct.values) < 1e-5


def test_tilde_w_pointwise_matches_grid():
    B = make_basis([[1.0, 1.0]], [[0.0, 1.0]])
    tp = tilde_plan_from_basis(B, G1)
    h = gaussian(G1)
    Fw = tilde_gft_w(tp, h)
    idx = [100, 128, 140]
    pts = Fw.nodes()[0][idx][:, None]
    assert np.allclose(tilde_w_at(tp, h, pts), Fw.values[idx], atol=1e-10)


@pytest.mark.parametrize("side", ["v", "w"])
def test_diagonalization_random_basis(side):
    B = complete_symplectic_basis([0.7, 1.3], [-0.4, 0.9])
    tp = tilde_plan_from_basis(B, G1)
    assert diagonalization_residual(tp, 0, hermite(G1, 2), side) < 1e-6


def test_lattice_map_forms_agree(rng):
    B = complete_symplectic_basis([1.0, 0.5, 0.2, 1.0], [0.0, 1.0, 1.0, 0.3])
    B = make_basis(B.V.vectors, B.W.vectors)
    for _ in range(5):
        p, q = rng.normal(size=2), rng.normal(size=2)
        a = lattice_map(B, p, q)
        b = lattice_map_explicit(B, p, q)
        assert np.allclose(a[0], b[0]) and np.allclose(a[1], b[1])
    assert abs(abs(np.linalg.det(B.M)) - 1) < 1e-10


def test_covariance_reports_unimodular_phase():
    B = make_basis([[1.0, 1.0]], [[0.0, 1.0]])
    tp = tilde_plan_from_basis(B, G1)
    out = covariance_check(tp, B, gaussian(G1), [1.0], [1.0])
    assert out["residual"] < 1e-5
    assert abs(abs(out["phase"]) - 1) < 1e-6
    assert out["full_residual"] < 1e-5


def test_plan_serializes():
    B = make_basis([[1.0, 1.0]], [[0.0, 1.0]])
    d = tilde_plan_from_basis(B, G1).to_dict()
    assert d["sigma"] == 1 and d["v"]["B"] == [[1.0]]
