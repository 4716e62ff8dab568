import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symgabor.errors import DimensionMismatch, MisalignedShift
from symgabor.field import GridSpec, gaussian, hermite
from symgabor.operators import (
    OperatorSpec,
    apply_chirp_U,
    apply_M,
    apply_momentum_shear,
    apply_P,
    apply_Q,
    apply_T,
    commutator_residual,
    derivative,
    parse_operator,
)

G1 = GridSpec.default(1)


def test_derivative_of_gaussian():
    f = gaussian(G1)
    x = G1.space_axis(0)
    exact = -2 * np.pi * x * f.values
    assert np.max(np.abs(derivative(f, 0).values - exact)) < 1e-10


def test_M_is_i_over_2pi_derivative():
    f = hermite(G1, 2)
    assert np.allclose(apply_M([1.0], f).values, 1j / (2 * np.pi) * derivative(f, 0).values, atol=1e-12)


def test_Q_combines_P_and_M():
    f = hermite(GridSpec.default(2), (1, 2))
    v = np.array([0.5, -1.0, 2.0, 0.25])
    lhs = apply_Q(v, f)
    rhs = apply_P(v[:2], f) + apply_M(v[2:], f)
    assert np.allclose(lhs.values, rhs.values, atol=1e-13)


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 4))
def test_pm_commutator(v, w, k):
    f = hermite(G1, k)
    res = commutator_residual(OperatorSpec("P", ([v],)), OperatorSpec("M", ([w],)), f, v * w / (2j * np.pi))
    assert res < 1e-9


def test_T_aligned_and_fractional_agree():
    f = gaussian(G1)
    a = apply_T([0.5], [1.0], f)
    b = apply_T([0.5], [1.0], f, fractional=True)
    assert np.allclose(a.values, b.values, atol=1e-12)
    x = G1.space_axis(0)
    exact = np.exp(2j * np.pi * x) * 2 ** 0.25 * np.exp(-np.pi * (x + 0.5) ** 2)
    assert np.max(np.abs(a.values - exact)) < 1e-12


def test_T_minus_convention():
    f = gaussian(G1)
    assert np.allclose(apply_T([0.5], [0.0], f, convention="minus").values, apply_T([-0.5], [0.0], f).values)


def test_T_misaligned():
    with pytest.raises(MisalignedShift):
        apply_T([0.01], [0.0], gaussian(G1))


def test_T_fractional_matches_exact_shift():
    f = gaussian(G1)
    x = G1.space_axis(0)
    out = apply_T([0.01], [0.0], f, fractional=True)
    assert np.max(np.abs(out.values - 2 ** 0.25 * np.exp(-np.pi * (x + 0.01) ** 2))) < 1e-12


def test_chirp_roundtrip_and_shear_unitary():
    f = hermite(GridSpec.default(2), (1, 1))
    q = np.array([[0.5, 1.0], [0.0, -0.25]])
    back = apply_chirp_U(q, apply_chirp_U(q, f), inverse=True)
    assert np.allclose(back.values, f.values, atol=1e-14)
    s = apply_momentum_shear(np.eye(2), f)
    assert s.norm() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(apply_momentum_shear(np.eye(2), s, inverse=True).values, f.values, atol=1e-12)


def test_shear_conjugation_of_Q():
    # S Q_(a,b) S^-1 = Q_(a, b - C a)
    f = hermite(G1, 1)
    C, a, b = np.array([[0.5]]), 1.0, 0.3
    lhs = apply_momentum_shear(C, apply_Q([a, b], apply_momentum_shear(C, f, inverse=True)))
    rhs = apply_Q([a, b - 0.5 * a], f)
    assert np.allclose(lhs.values, rhs.values, atol=1e-9)


def test_parse_operator():
    assert parse_operator("Q:1,0").kind == "Q"
    t = parse_operator("T:m=1,0;n=0,1")
    assert t.params[0].tolist() == [1.0, 0.0] and t.params[1].tolist() == [0.0, 1.0]
    assert parse_operator("U:1,0,0,1").params[0].shape == (2, 2)
    with pytest.raises(ValueError):
        parse_operator("X:1")
    assert str(parse_operator("P:1")) == "P:1.0"


def test_wrong_dimension():
    with pytest.raises(DimensionMismatch):
        apply_P([1.0, 2.0], gaussian(G1))
