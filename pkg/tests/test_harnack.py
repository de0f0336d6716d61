import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harnack_lab.harnack import (
    HarnackData,
    LieAlgebraElement,
    bracket_and_inner,
    compute_M,
    compute_P,
    harnack_parts,
    harnack_Z,
    interior,
    random_two_form,
    sharp_square,
    soliton_uw_checks,
    structure_constants,
    trace_harnack,
    two_form_basis,
    wedge_substitution_residual,
)
from harnack_lab.solutions import DomainError, MissingPotentialError, make_solution, sample_points
from harnack_lab.tensor import ShapeError, as_array

from conftest import solution

MODES = ("direct", "spacetime", "mixed")


def nabla_ric_fd(s, p, h):
    """Central differences of Ric corrected by Christoffel terms."""
    p = np.asarray(p, dtype=float)
    n = s.dim
    geo = s.geometry(p, order=2)
    gam, ric = as_array(geo.gamma), as_array(geo.ric)
    d = np.zeros((n, n, n))
    for i in range(n):
        e = np.zeros(n + 1)
        e[i] = h
        d[i] = (as_array(s.geometry(p + e, order=2).ric) - as_array(s.geometry(p - e, order=2).ric)) / (2 * h)
    return d - np.einsum("mij,mk->ijk", gam, ric) - np.einsum("mik,jm->ijk", gam, ric)


def test_P_against_finite_differences():
    s = solution("cigar_static")
    p = [1.0, 0.0, 0.0]
    nabla = nabla_ric_fd(s, p, 1e-3)
    want = nabla - nabla.transpose(1, 0, 2)
    np.testing.assert_allclose(compute_P(s, p), want, atol=1e-6)


def test_P_vanishes_on_einstein_metric():
    s = solution("sphere3")
    for p in sample_points(s, 4, 0):
        np.testing.assert_allclose(compute_P(s, p), 0.0, atol=1e-12)


def test_M_on_round_sphere_and_unit_Z():
    s = solution("sphere2")
    p = [0.3, -0.2, 0.0]
    geo = s.geometry(p)
    g = as_array(geo.g)
    np.testing.assert_allclose(compute_M(geo), g, atol=1e-12)
    W = np.array([1.0, 0.0]) * np.sqrt(g[0, 0])
    assert harnack_Z(s, p, HarnackData(np.zeros((2, 2)), W)) == pytest.approx(1.0, rel=1e-12)


def test_trace_harnack_spot_values():
    s = solution("sphere2")
    assert trace_harnack(s, [0.2, 0.1, 0.25], np.zeros(2), with_time_term=True) == pytest.approx(32.0)
    c = solution("cigar_flow")
    geo = c.geometry([1.0, 0.0, 0.0])
    V = as_array(geo.grad_f)
    assert np.allclose(V, [2.0, 0.0])
    assert trace_harnack(geo, None, V) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        trace_harnack(c, [1.0, 0.0, 0.0], V, with_time_term=True)


@pytest.mark.parametrize("key", ["sphere2", "sphere3", "cigar_flow"])
def test_matrix_harnack_nonnegative(key, rng):
    s = solution(key)
    for p in sample_points(s, 6, 4, (0.05, 0.4 * s.t_max if key.startswith("sphere") else 0.4)):
        parts = harnack_parts(s, p)
        for _ in range(20):
            z = parts.z(random_two_form(rng, s.dim), rng.normal(size=s.dim), with_time_term=True)
            assert z >= -1e-9


def test_harnack_data_validation():
    with pytest.raises(ShapeError):
        HarnackData(np.ones((2, 2)), np.zeros(2))
    with pytest.raises(ShapeError):
        HarnackData(np.zeros((2, 2)), np.zeros(3))


def elements(n):
    vec = st.lists(st.floats(-3, 3, allow_nan=False), min_size=n * (n + 1) // 2, max_size=n * (n + 1) // 2)
    return vec.map(lambda v: LieAlgebraElement.from_vector(v, n))


def metric(seed, n):
    a = np.random.default_rng(seed).normal(size=(n, n))
    return a @ a.T + n * np.eye(n)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3]).flatmap(lambda n: st.tuples(elements(n), elements(n), elements(n))), st.integers(0, 1000))
def test_bracket_properties(abc, seed):
    a, b, c = abc
    g = metric(seed, a.dim)
    for mode in MODES:
        br = lambda x, y: bracket_and_inner(x, y, g, mode)[0]  # noqa: E731
        jac = br(a, br(b, c)) + br(b, br(c, a)) + br(c, br(a, b))
        scale = max(1.0, np.abs(br(a, br(b, c)).as_vector()).max())
        assert np.abs(jac.as_vector()).max() <= 1e-12 * scale
        anti = br(a, b) + br(b, a)
        assert np.abs(anti.as_vector()).max() <= 1e-12 * scale
    ref_b, ref_i = bracket_and_inner(a, b, g)
    for mode in MODES[1:]:
        bm, im = bracket_and_inner(a, b, g, mode)
        np.testing.assert_allclose(bm.as_vector(), ref_b.as_vector(), atol=1e-12 * max(1, np.abs(ref_b.as_vector()).max()))
        assert im == pytest.approx(ref_i, abs=1e-12 * max(1, abs(ref_i)))


def test_interior_and_inner_examples(rng):
    n = 3
    g = metric(1, n)
    U, X = random_two_form(rng, n), rng.normal(size=n)
    zero2, zero1 = np.zeros((n, n)), np.zeros(n)
    br, _ = bracket_and_inner(LieAlgebraElement(U, zero1), LieAlgebraElement(zero2, X), g)
    np.testing.assert_allclose(br.two_form, 0.0)
    np.testing.assert_allclose(br.one_form, interior(U, X, np.linalg.inv(g)))
    _, i1 = bracket_and_inner(LieAlgebraElement(U, X), LieAlgebraElement(U, X), g)
    _, i2 = bracket_and_inner(LieAlgebraElement(U, zero1), LieAlgebraElement(U, zero1), g)
    assert i1 == pytest.approx(i2)


@pytest.mark.parametrize("n", [2, 3])
def test_sharp_square_invariance(n, rng):
    g = metric(n, n)
    basis = two_form_basis(g)
    # the basis is orthonormal for the degenerate inner product on the 2-form part
    N = len(basis)
    gram = np.array([[bracket_and_inner(a, b, g)[1] for b in basis[: N - n]] for a in basis[: N - n]])
    np.testing.assert_allclose(gram, np.eye(N - n), atol=1e-12)
    Q = rng.normal(size=(N, N))
    Q = Q + Q.T
    cd = structure_constants(basis, g)
    sq = sharp_square(Q, cd)
    np.testing.assert_allclose(sq, sq.T, atol=1e-12 * np.abs(sq).max())
    np.testing.assert_allclose(sharp_square(Q, structure_constants(basis, g, "mixed")), sq, atol=1e-12 * np.abs(sq).max())
    other = two_form_basis(g, rng)
    O = np.linalg.solve(
        np.column_stack([e.as_vector() for e in basis]), np.column_stack([e.as_vector() for e in other])
    )
    rot = sharp_square(O.T @ Q @ O, structure_constants(other, g))
    np.testing.assert_allclose(rot, O.T @ sq @ O, atol=1e-12 * np.abs(sq).max())
    with pytest.raises(ShapeError):
        sharp_square(Q + np.triu(np.ones_like(Q), 1), cd)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 3, 4]))
def test_wedge_substitution_exact(seed, n):
    r = np.random.default_rng(seed)
    ric = r.normal(size=(n, n))
    assert wedge_substitution_residual(ric + ric.T, r.normal(size=n), r.normal(size=n)).passes(1e-12)


@pytest.mark.parametrize("key", ["cigar_static", "cigar_flow"])
def test_soliton_interior_product_relations(key):
    s = solution(key)
    for p in [[1.0, 0.0, 0.0], *sample_points(s, 4, 5)]:
        rec = soliton_uw_checks(s, p)
        assert set(rec) >= {"grad_w", "w_heat", "w_heat_gradient_form"}
        for k, r in rec.items():
            assert r.passes(1e-8), (k, r)


def test_soliton_checks_need_potential():
    with pytest.raises(MissingPotentialError):
        soliton_uw_checks(make_solution("shrinking_sphere"), [0.0, 0.0, 0.1])
