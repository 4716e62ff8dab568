import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from symgabor.blt import (
    QuadraticForm,
    TruncationSchedule,
    classify,
    fit_slope,
    quadratic_form_product,
    truncated_dual_q_product,
    truncated_pm_product,
    truncated_q_product,
)
from symgabor.errors import DegeneratePair, DimensionMismatch, ScheduleError
from symgabor.field import GridSpec
from symgabor.gabor import (
    GaborSystem,
    GaussianGenerator,
    example_generator,
    integer_lattice,
    liu_wang_generator,
    unit_box,
)

SCHED = TruncationSchedule.geometric(8, 128, 5)


def box_momentum(K):
    # |F chi_[0,1)(xi)|^2 = sin^2(pi xi) / (pi xi)^2
    return quad(lambda t: np.sin(np.pi * t) ** 2 / np.pi ** 2, -K, K, limit=2000)[0]


def test_schedule_parse_and_validation():
    s = TruncationSchedule.parse("geometric:8:128:5")
    assert np.allclose(s.cutoffs, [8, 16, 32, 64, 128]) and s.ratio == pytest.approx(2)
    for bad in ("linear:8:128:5", "geometric:8:128"):
        with pytest.raises(ScheduleError):
            TruncationSchedule.parse(bad)
    with pytest.raises(ScheduleError):
        TruncationSchedule((1, 2, 3))
    with pytest.raises(ScheduleError):
        TruncationSchedule((1, 2, 4, 5))
    assert s.grid_for(128, 1).n[0] >= 8 * 8 * 128 / 2


@given(st.floats(-1, 2), st.floats(0.1, 10))
def test_fit_slope_recovers_power(p, c):
    K = np.geomspace(8, 128, 5)
    slope, res = fit_slope(K, c * K ** p)
    assert slope == pytest.approx(p, abs=1e-10) and res < 1e-10


def test_classify_thresholds():
    assert classify(0.3, 0.01) == "divergent"
    assert classify(0.2, 0.01) == "finite"
    assert classify(0.5, 0.2) == "finite"


@pytest.mark.parametrize("K", [16.0, 64.0])
def test_box_momentum_factor(K):
    s = TruncationSchedule.geometric(K / 8, K, 4)
    rep = truncated_pm_product(unit_box(1), [1.0], [1.0], s)
    val = rep.factor2[-1] ** 2
    assert val == pytest.approx(K / np.pi ** 2, rel=0.05)
    assert val == pytest.approx(box_momentum(K), rel=1e-8)


def test_box_position_factor_is_constant():
    rep = truncated_pm_product(unit_box(1), [1.0], [1.0], SCHED)
    assert np.allclose(rep.factor1 ** 2, 1 / 3)
    assert rep.verdict == "divergent" and rep.slope == pytest.approx(0.5, abs=0.01)


def test_pm_values_nondecreasing():
    rep = truncated_pm_product(liu_wang_generator(), [1.0], [1.0], SCHED)
    assert np.all(np.diff(rep.product) >= -1e-15)


def test_gaussian_pm_finite():
    rep = truncated_pm_product(GaussianGenerator(2), [1.0, 0.0], [0.0, 1.0], SCHED)
    assert rep.verdict == "finite" and abs(rep.slope) < 0.05
    assert rep.product[-1] == pytest.approx(1 / (4 * np.pi), rel=1e-10)


def test_pm_grid_route_for_sampled_field():
    f = GaussianGenerator(1).sample(GridSpec(1, 8, 4096))
    rep = truncated_pm_product(f, [1.0], [1.0], SCHED)
    assert rep.metadata["route"] == "grid"
    assert rep.product[-1] == pytest.approx(1 / (4 * np.pi), rel=1e-8)


def test_pm_input_checks():
    with pytest.raises(DimensionMismatch):
        truncated_pm_product(unit_box(1), [1.0, 0.0], [1.0], SCHED)
    with pytest.raises(ValueError):
        truncated_pm_product(unit_box(1), [0.0], [1.0], SCHED)


@pytest.mark.parametrize("v,w", [([1.0, 0.0], [0.0, 1.0]), ([1.0, 1.0], [0.0, 1.0]), ([2.0, -1.0], [1.0, 1.0])])
def test_q_gaussian_variance(v, w):
    rep = truncated_q_product(GaussianGenerator(1), v, w, SCHED, route="closed-form")
    om = v[0] * w[1] - v[1] * w[0]
    w_eff = np.asarray(w) / om
    assert rep.factor1[-1] ** 2 == pytest.approx((v[0] ** 2 + v[1] ** 2) / (4 * np.pi), rel=1e-8)
    assert rep.factor2[-1] ** 2 == pytest.approx(om ** 2 * (w_eff @ w_eff) / (4 * np.pi), rel=1e-8)
    assert rep.verdict == "finite"


def test_q_routes_agree_on_box():
    a = truncated_q_product(unit_box(1), [1.0, 0.0], [0.0, 1.0], SCHED, route="closed-form")
    b = truncated_q_product(unit_box(1), [1.0, 0.0], [0.0, 1.0], SCHED, route="grid")
    assert np.allclose(a.product, b.product, rtol=0.01)
    assert a.verdict == b.verdict == "divergent"
    assert b.metadata["shear"] is not None


def test_q_degenerate_pair():
    with pytest.raises(DegeneratePair):
        truncated_q_product(unit_box(1), [1.0, 0.0], [2.0, 0.0], SCHED)


def test_quadform():
    assert quadratic_form_product(unit_box(2), QuadraticForm.euclidean(2), SCHED).verdict == "divergent"
    rep = quadratic_form_product(GaussianGenerator(2), QuadraticForm.euclidean(2), SCHED)
    assert rep.verdict == "finite"
    assert rep.factor1[-1] == pytest.approx(2 / (4 * np.pi), rel=1e-10)
    # single term e_1 on the mixed generator: x-axis box in frequency diverges
    one = quadratic_form_product(example_generator(), QuadraticForm(((1.0, [1.0, 0.0]),)), SCHED)
    # the cube cutoff also truncates the sinc tail in y
    tail = quad(lambda t: np.sinc(t) ** 2, -128, 128, limit=2000)[0]
    assert one.factor1[-1] == pytest.approx(tail / 3, rel=1e-8)
    assert one.verdict == "divergent"


def test_quadform_validation():
    with pytest.raises(ValueError):
        QuadraticForm(((-1.0, [1.0]),))
    with pytest.raises(ValueError):
        QuadraticForm(((0.0, [1.0]),))


def test_dual_q_on_gaussian_frame():
    s = GaborSystem(GaussianGenerator(1), integer_lattice(1, 10, 0.5, 1.0), GridSpec(1, 8, 64))
    rep = truncated_dual_q_product(s, [1.0, 0.0], [0.0, 1.0], SCHED)
    assert rep.verdict == "finite" and rep.metadata["dual_residual"] < 1e-4


def test_dual_q_not_a_frame():
    s = GaborSystem(GaussianGenerator(1), integer_lattice(1, 10, 2.0, 1.0), GridSpec(1, 8, 64))
    rep = truncated_dual_q_product(s, [1.0, 0.0], [0.0, 1.0], SCHED)
    assert rep.verdict == "inapplicable" and "reason" in rep.metadata


def test_report_csv():
    rep = truncated_pm_product(unit_box(1), [1.0], [1.0], SCHED)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "K,factor1,factor2,product" and len(lines) == 6
    assert float(lines[1].split(",")[0]) == 8.0
