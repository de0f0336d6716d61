import math

import numpy as np
import pytest

from harnack_lab.jets import ConfigurationError
from harnack_lab.solutions import (
    PLAIN_FLOW,
    DomainError,
    MissingPotentialError,
    flow_residual,
    make_solution,
    sample_points,
    soliton_residuals,
)
from harnack_lab.tensor import as_array

from conftest import CATALOG, solution


@pytest.mark.parametrize("key", sorted(CATALOG))
def test_flow_equation_holds(key):
    s = solution(key)
    for p in sample_points(s, 8, 3):
        assert flow_residual(s, p).passes()


@pytest.mark.parametrize("n", [2, 3])
def test_sphere_scalar_curvature(n):
    s = make_solution("shrinking_sphere", n=n, c0=1.0)
    for p in sample_points(s, 6, 1):
        c = 1.0 - 2 * (n - 1) * p[-1]
        geo = s.geometry(p, order=3)
        assert float(as_array(geo.scal)) == pytest.approx(n * (n - 1) / c, rel=1e-12)


def test_cigar_scalar_curvature_and_time_derivative():
    s = make_solution("cigar_flow")
    geo = s.geometry([1.0, 0.0, 0.0], order=3)
    assert float(as_array(geo.scal)) == pytest.approx(2.0, rel=1e-13)
    # R = 4 e^{4t} / (e^{4t} + r^2), so d_t R = 16 e^{4t} r^2 / (e^{4t} + r^2)^2
    assert float(as_array(geo.dt(geo.scal))) == pytest.approx(4.0, rel=1e-12)
    st = make_solution("cigar_static")
    x = np.array([0.3, -0.4, 0.2])
    r2 = x[0] ** 2 + x[1] ** 2
    assert float(as_array(st.geometry(x, order=3).scal)) == pytest.approx(4 / (1 + r2))


@pytest.mark.parametrize("key", ["cigar_static", "cigar_flow", "flat_affine"])
def test_soliton_identities(key):
    s = solution(key)
    for p in sample_points(s, 6, 2):
        rec = soliton_residuals(s, p)
        assert ("v_heat" in rec) == (s.mode == PLAIN_FLOW)
        for k, r in rec.items():
            assert r.passes(1e-8), k


def test_soliton_requires_potential():
    with pytest.raises(MissingPotentialError):
        soliton_residuals(solution("sphere2"), [0.1, 0.1, 0.1])


def test_sample_points_are_deterministic_and_inside():
    s = solution("sphere3")
    a, b = sample_points(s, 32, 7), sample_points(s, 32, 7)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, sample_points(s, 32, 8))
    lo, hi = s.sample_t
    assert np.all((a[:, -1] >= lo) & (a[:, -1] <= hi))
    for p in a:
        s.check_point(p)


def test_domain_errors():
    s = solution("sphere2")
    with pytest.raises(DomainError):
        s.geometry([0.0, 0.0, s.t_max])
    with pytest.raises(DomainError):
        s.geometry([3.0, 0.0, 0.1])
    with pytest.raises(DomainError):
        s.geometry([0.0, 0.1])
    with pytest.raises(DomainError):
        s.geometry([0.0, 0.0, 0.4], tau=0.2)


@pytest.mark.parametrize(
    "name, params",
    [
        ("torus", {}),
        ("shrinking_sphere", {"n": 4}),
        ("shrinking_sphere", {"c0": -1.0}),
        ("flat", {"a": [1.0]}),
        ("cigar_flow", {"n": 3}),
        ("cigar_static", {"c0": 1.0}),
    ],
)
def test_bad_catalog_parameters(name, params):
    with pytest.raises(ConfigurationError):
        make_solution(name, **params)


def test_sphere_lifetime():
    s = make_solution("shrinking_sphere", n=3, c0=2.0)
    assert s.t_max == pytest.approx(0.5)
    assert math.isclose(s.sample_t[1], 0.4)
