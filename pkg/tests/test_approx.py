import numpy as np
import pytest

from harnack_lab import approx
from harnack_lab.harnack import HarnackData, LieAlgebraElement, bracket_and_inner, random_two_form
from harnack_lab.jets import ConfigurationError
from harnack_lab.solutions import sample_points
from harnack_lab.tensor import as_array

from conftest import solution

PLAIN = ["sphere2", "sphere3", "cigar_flow", "flat"]


def unit_one_form(s, p, v):
    g_inv = as_array(s.geometry(p, order=1).g_inv)
    v = np.asarray(v, dtype=float)
    return v / np.sqrt(v @ g_inv @ v)


@pytest.mark.parametrize("key", PLAIN)
@pytest.mark.parametrize("eps", [1.0, 10.0, 1000.0])
def test_connection_and_curvature_closed_forms(key, eps):
    s = solution(key)
    for p in sample_points(s, 3, 0):
        rec = {**approx.approx_connection_check(s, eps, 1.0, p), **approx.approx_curvature_check(s, eps, 1.0, p)}
        for k, r in rec.items():
            assert r.passes(), (k, r)


def test_time_time_entry_and_definiteness():
    s = solution("sphere2")
    assert approx.approx_metric(s, 10.0, 1.0, [0.0, 0.0, 0.0]).g00 == pytest.approx(7.0)
    c = solution("cigar_flow")
    with pytest.raises(ConfigurationError):
        approx.approx_metric(c, -1.0, 1.0, [0.0, 0.0, 0.1])
    with pytest.raises(ConfigurationError):
        approx.approx_metric(c, 1.0, 0.0, [0.0, 0.0, 0.1])
    # before t = -delta the eps term is negative and swamps R
    with pytest.raises(approx.DefinitenessError):
        approx.approx_metric(c, 10.0, 0.5, [0.0, 0.0, -0.9])


def test_flat_definiteness_at_tiny_eps():
    s = solution("flat")
    assert approx.approx_metric(s, 1e-8, 1.0, [0.0, 0.0, 0.1]).g00 > 0


def test_modified_flow_rejected():
    with pytest.raises(ConfigurationError):
        approx.approx_metric(solution("cigar_static"), 1.0, 1.0, [0.0, 0.0, 0.0])


def test_spatial_correction_scales_like_inverse_eps():
    s = solution("sphere2")
    p = [0.3, 0.2, 0.1]
    ratios = [
        approx.item1_correction(s, 2 * e, 1.0, p) / approx.item1_correction(s, e, 1.0, p)
        for e in (100.0, 1000.0)
    ]
    assert all(abs(r - 0.5) <= 0.1 for r in ratios)


def test_time_component_gap_closed_form_at_time_zero():
    s = solution("sphere2")
    for e in (10.0, 100.0, 1000.0):
        assert approx.time_component_gap(s, e, 1.0, [0.0, 0.0, 0.0]) == pytest.approx(6.0 / (4.0 + e), rel=1e-10)


def test_joint_schedule_stalls_and_balanced_converges():
    s = solution("sphere2")
    p = [0.3, -0.2, 0.25]
    d = HarnackData(np.zeros((2, 2)), unit_one_form(s, p, [1.0, 0.0]))
    joint = approx.limit_sweep(s, p, d, approx.joint_schedule(10))
    assert not approx.halving(joint.conn_err[-6:])
    # with eps = delta the time row of the connection tends to Ric / (R + 1/2)
    assert joint.conn_err[-1] > 0.1
    bal = approx.limit_sweep(s, p, d, approx.balanced_schedule(10))
    assert approx.halving(bal.conn_err[-6:])


def test_curvature_form_limits(rng):
    s = solution("sphere2")
    p = [0.3, -0.2, 0.25]
    d = HarnackData(0.5 * random_two_form(rng, 2), unit_one_form(s, p, [1.0, 0.5]))
    fixed = approx.limit_sweep(s, p, d, [(2.0**k, 1.0) for k in range(10, 16)])
    assert approx.halving(fixed.curv_form_err)
    small = approx.limit_sweep(s, p, d, [(2.0**40, 2.0**-k) for k in range(6, 12)])
    assert approx.halving(small.target_gap)
    assert small.target_gap[-1] < small.target_gap[0] / 16


def test_literal_target_gap_is_order_delta():
    s = solution("sphere2")
    p = [0.0, 0.0, 0.25]
    d = HarnackData(np.zeros((2, 2)), unit_one_form(s, p, [1.0, 0.0]))
    r = approx.limit_sweep(s, p, d, [(2.0**20, 2.0**-10), (2.0**21, 2.0**-10)])
    # the gap is Ric(W, W) (1/2t - 1/2(t + delta)) plus O(1/eps), far above 1e-6
    assert r.target_gap[0] == pytest.approx(1.558e-2, rel=1e-2)
    assert r.curv_form_err[0] < 2e-5


def test_sweep_rows_and_validation():
    s = solution("sphere2")
    p = [0.1, 0.1, 0.1]
    d = HarnackData(np.zeros((2, 2)), np.array([1.0, 0.0]))
    r = approx.limit_sweep(s, p, d, [(2.0, 2.0), (4.0, 4.0)], "demo")
    rows = list(r.rows())
    assert [row["epsilon"] for row in rows] == [2.0, 4.0]
    assert set(rows[0]) == {"epsilon", "delta", "conn_err", "curv_form_err", "gamma000", "target_gap"}
    with pytest.raises(ConfigurationError):
        approx.limit_sweep(s, p, d, [(2.0, 2.0)])
    with pytest.raises(ConfigurationError):
        approx.limit_sweep(s, [0.1, 0.1, 0.0], d, [(2.0, 2.0), (4.0, 4.0)])


def test_lambda2_decomposition_example():
    s = solution("sphere2")
    alpha = np.zeros((3, 3))
    alpha[1, 0], alpha[0, 1] = 1.0, -1.0  # dx ^ dt
    alpha[1, 2], alpha[2, 1] = 2.0, -2.0
    two, one = approx.lambda2_decomposition(s, 10.0, 1.0, [0.0, 0.0, 0.0], alpha)
    np.testing.assert_allclose(one, [7.0**-0.5, 0.0])
    np.testing.assert_allclose(two, [[0.0, 2.0], [-2.0, 0.0]])
    with pytest.raises(ConfigurationError):
        approx.lambda2_decomposition(s, 10.0, 1.0, [0.0, 0.0, 0.0], np.ones((3, 3)))


def test_induced_structure_converges_to_semidirect():
    s = solution("sphere2")
    p = [0.3, -0.2, 0.25]
    g = as_array(s.geometry(p, order=1).g)
    x = LieAlgebraElement(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.array([0.3, 1.0]))
    y = LieAlgebraElement(np.array([[0.0, -0.4], [0.4, 0.0]]), np.array([1.0, -2.0]))
    bd, ind = bracket_and_inner(x, y, g)
    errs = []
    for e in (1e3, 2e3, 4e3):
        b, i = approx.induced_structure(s, e, 1.0, p, x, y)
        errs.append(max(np.abs(b.as_vector() - bd.as_vector()).max(), abs(i - ind)))
    assert approx.halving(errs)
