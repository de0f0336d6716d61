import numpy as np
import pytest

from harnack_lab import spacetime as sp
from harnack_lab.cli import polynomial_fields, volume_fields
from harnack_lab.harnack import HarnackData, harnack_parts, random_two_form
from harnack_lab.jets import ConfigurationError
from harnack_lab.solutions import sample_points
from harnack_lab.tensor import as_array

from conftest import solution

ALL = ["sphere2", "sphere3", "cigar_flow", "cigar_static", "flat", "flat_affine"]
PLAIN = ["sphere2", "sphere3", "cigar_flow", "flat"]


def connections(key, count=4, tau=0.0):
    s = solution(key)
    return [sp.build_spacetime_connection(s, p, tau) for p in sample_points(s, count, 11)]


def assert_record(rec, tol=1e-9, skip=()):
    for k, r in rec.items():
        if k not in skip:
            assert r.passes(tol), (k, r)


def test_connection_blocks_on_sphere():
    s = solution("sphere2")
    c = sp.build_spacetime_connection(s, [0.2, -0.1, 0.1])
    gam, geo = as_array(c.gamma), c.geo
    np.testing.assert_array_equal(gam[0], 0.0)
    np.testing.assert_allclose(gam[1:, 1:, 1:], as_array(geo.gamma))
    # Einstein: -Ric^k_i = -K delta, and grad R vanishes
    K = float(as_array(geo.scal)) / 2
    np.testing.assert_allclose(gam[1:, 1:, 0], -K * np.eye(2), atol=1e-12)
    np.testing.assert_allclose(gam[1:, 0, 0], 0.0, atol=1e-12)
    gi = as_array(c.g_inv)
    assert np.all(gi[0] == 0) and np.all(gi[:, 0] == 0)


def test_modified_connection_includes_hessian():
    s = solution("cigar_static")
    c = sp.build_spacetime_connection(s, [0.4, 0.3, 0.0])
    # on the steady soliton Ric = Hess f, so the mixed block vanishes
    np.testing.assert_allclose(as_array(c.gamma)[1:, 1:, 0], 0.0, atol=1e-12)
    assert c.modified


@pytest.mark.parametrize("key", ALL)
def test_compatibility_torsion_and_degenerate_flow(key):
    for c in connections(key):
        assert_record(sp.compatibility_and_torsion(c))
        assert_record(sp.degenerate_flow_residual(c))


@pytest.mark.parametrize("key", ALL)
@pytest.mark.parametrize("tau", [0.0, 0.05])
def test_curvature_direct_matches_closed_form(key, tau):
    for c in connections(key, 3, tau):
        assert_record(sp.curvature_residuals(c))


@pytest.mark.parametrize("key", ALL)
def test_ricci_closed_forms(key):
    skip = ("time_time_evolution_form",)
    for c in connections(key):
        assert_record(sp.ricci_residuals(c), skip=skip)


def test_ricci_evolution_form_as_printed_misses_lie_term():
    # the printed evolution form drops 1/2 <grad R, grad f>, which is -2 at (1, 0)
    c = sp.build_spacetime_connection(solution("cigar_static"), [1.0, 0.0, 0.0])
    rec = sp.ricci_residuals(c)
    assert rec["time_time_evolution_form"].value == pytest.approx(2.0, rel=1e-10)
    assert rec["time_time_evolution_form_corrected"].passes()
    for key in PLAIN:
        for c in connections(key, 2):
            assert sp.ricci_residuals(c)["time_time_evolution_form"].passes()


def test_tau_shift_equals_time_shift():
    s = solution("sphere2")
    p = np.array([0.2, 0.1, 0.1])
    for tau in (0.05, 0.1):
        a = as_array(sp.spacetime_curvature(sp.build_spacetime_connection(s, p, tau)).riem)
        q = p + np.array([0.0, 0.0, tau])
        b = as_array(sp.spacetime_curvature(sp.build_spacetime_connection(s, q, 0.0)).riem)
        np.testing.assert_allclose(a, b, atol=1e-12)
    with pytest.raises(ConfigurationError):
        sp.build_spacetime_connection(s, p, -0.1)


@pytest.mark.parametrize("key", ALL)
def test_bianchi_identities(key):
    for c in connections(key, 3):
        assert_record(sp.bianchi_identity_residuals(c), tol=1e-8)


def test_scalar_identity_value_on_round_sphere():
    geo = sp.build_spacetime_connection(solution("sphere2"), [0.0, 0.0, 0.0]).geo
    lhs = 0.5 * float(as_array(geo.dt(geo.scal)))
    rhs = 0.5 * float(as_array(geo.lap_scal)) + float(as_array(geo.ric_norm2))
    assert lhs == pytest.approx(2.0, abs=1e-9)
    assert rhs == pytest.approx(2.0, abs=1e-9)


@pytest.mark.parametrize("key", PLAIN)
def test_curvature_form_equals_harnack_quantity(key, rng):
    s = solution(key)
    for c in connections(key, 3, 0.05):
        riem, gi = as_array(sp.spacetime_curvature(c).riem), as_array(c.g_inv)
        for _ in range(5):
            d = HarnackData(random_two_form(rng, s.dim), rng.normal(size=s.dim))
            lhs, z, diff = sp.harnack_equals_curvature(c, d)
            assert abs(diff) <= 1e-9 * max(1.0, abs(z))
            T = sp.embed_mixed(d.U, d.W, as_array(c.geo.g_inv))
            assert sp.four_term_expansion(riem, gi, T) == pytest.approx(lhs, abs=1e-12 * max(1, abs(lhs)))


def test_curvature_form_at_unit_one_form():
    # U = 0, |W| = 1 on the unit round sphere at t = 0: Z = M(W, W) = 1
    s = solution("sphere2")
    c = sp.build_spacetime_connection(s, [0.0, 0.0, 0.0])
    W = np.array([2.0, 0.0])
    lhs, z, _ = sp.harnack_equals_curvature(c, HarnackData(np.zeros((2, 2)), W))
    assert z == pytest.approx(1.0)
    assert lhs == pytest.approx(1.0)


def test_harnack_curvature_rejects_modified_flow():
    c = sp.build_spacetime_connection(solution("cigar_static"), [0.1, 0.1, 0.0])
    with pytest.raises(ConfigurationError):
        sp.harnack_equals_curvature(c, HarnackData(np.zeros((2, 2)), np.ones(2)))


@pytest.mark.parametrize("key", PLAIN)
def test_two_form_derivatives(key, rng):
    s = solution(key)
    fields = [polynomial_fields(rng, s.dim)]
    if s.dim == 2:
        fields.append(volume_fields(s))
    for c in connections(key, 2):
        for U_field, W_field in fields:
            assert_record(sp.spacetime_T_derivatives(c, U_field, W_field))


def test_parallel_case_only_reported_for_parallel_fields(rng):
    s = solution("cigar_flow")
    c = sp.build_spacetime_connection(s, [0.5, 0.2, 0.1])
    assert "laplacian_one_form_parallel" in sp.spacetime_T_derivatives(c, *volume_fields(s))
    assert "laplacian_one_form_parallel" not in sp.spacetime_T_derivatives(c, *polynomial_fields(rng, 2))


def test_harnack_parts_time_argument():
    parts = harnack_parts(solution("sphere2"), [0.0, 0.0, 0.25])
    assert parts.t == 0.25
