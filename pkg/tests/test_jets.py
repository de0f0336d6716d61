import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harnack_lab import jets
from harnack_lab.jets import (
    ConfigurationError,
    DerivativeDomainError,
    Jet,
    OrderExceededError,
    extract_partial,
    jet_einsum,
    jet_inv,
    jet_seed,
    num_coeffs,
    stack,
)

coord = st.floats(-1.5, 1.5, allow_nan=False)


def seeds(point, order):
    n = len(point)
    return [jet_seed(i, v, n, order) for i, v in enumerate(point)]


def test_num_coeffs_matches_binomial():
    for n in range(1, 5):
        for k in range(6):
            assert num_coeffs(n, k) == math.comb(n + k, k)


def test_polynomial_partials_exact():
    x, y = seeds([0.5, -2.0], 4)
    f = x**3 * y + 2.0 * y**2
    assert extract_partial(f, (0, 0)) == pytest.approx(0.125 * -2.0 + 8.0)
    assert extract_partial(f, (1, 0)) == pytest.approx(3 * 0.25 * -2.0)
    assert extract_partial(f, (2, 1)) == pytest.approx(6 * 0.5)
    assert extract_partial(f, (3, 1)) == pytest.approx(6.0)
    assert extract_partial(f, (0, 2)) == pytest.approx(4.0)
    assert extract_partial(f, (4, 0)) == 0.0


def test_exp_log_sqrt_derivatives():
    (x,) = seeds([0.7], 5)
    for k in range(6):
        assert extract_partial(jets.exp(x), (k,)) == pytest.approx(math.exp(0.7))
    lg = jets.log(x)
    for k in range(1, 6):
        want = (-1) ** (k + 1) * math.factorial(k - 1) / 0.7**k
        assert extract_partial(lg, (k,)) == pytest.approx(want)
    sq = jets.sqrt(x)
    assert extract_partial(sq, (2,)) == pytest.approx(-0.25 * 0.7**-1.5)


@settings(max_examples=40, deadline=None)
@given(coord, coord, coord)
def test_product_rule_and_exp_log_inverse(a, b, c):
    x, y, z = seeds([a, b, c], 4)
    f = x * y + z**2 + 3.0
    g = jets.exp(x - z) + y
    lhs = (f * g).diff(1)
    rhs = f.diff(1) * g + f * g.diff(1)
    np.testing.assert_allclose(lhs.c, rhs.c, rtol=1e-12, atol=1e-12)
    back = jets.log(jets.exp(f))
    np.testing.assert_allclose(back.c, f.c, rtol=1e-11, atol=1e-11)


@settings(max_examples=30, deadline=None)
@given(coord, coord)
def test_mixed_partials_commute(a, b):
    x, y = seeds([a, b], 5)
    f = jets.exp(x * y) / (2.0 + x**2)
    np.testing.assert_allclose(f.diff(0).diff(1).c, f.diff(1).diff(0).c, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_matrix_inverse(seed):
    r = np.random.default_rng(seed)
    x, y = seeds(list(r.uniform(-1, 1, 2)), 4)
    a = r.normal(size=(3, 3)) + 4 * np.eye(3)
    m = stack([stack([a[i, j] + 0.3 * x * y + 0.1 * (i - j) * x for j in range(3)]) for i in range(3)])
    ident = jet_einsum("ij,jk->ik", m, jet_inv(m))
    want = Jet.constant(np.eye(3), 2, 4)
    np.testing.assert_allclose(ident.c, want.c, atol=1e-11)


def test_einsum_with_constant_matrix():
    x, y = seeds([1.0, 2.0], 2)
    v = stack([x, y])
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    w = jet_einsum("i,ij->j", v, m)
    assert w.value.tolist() == pytest.approx([1 * 1 + 2 * 3, 1 * 2 + 2 * 4])


def test_truncation_is_prefix_and_order_drops():
    x, y = seeds([0.2, 0.3], 5)
    f = jets.exp(x + 2 * y)
    t = f.truncate(3)
    np.testing.assert_array_equal(t.c, f.c[: num_coeffs(2, 3)])
    assert f.diff(0).order == 4
    with pytest.raises(OrderExceededError):
        t.truncate(4)
    with pytest.raises(OrderExceededError):
        extract_partial(t, (2, 2))


def test_mixed_orders_truncate_to_lower():
    x5 = jet_seed(0, 1.0, 1, 5)
    x2 = jet_seed(0, 1.0, 1, 2)
    assert (x5 * x2).order == 2


def test_domain_errors():
    (x,) = seeds([-0.5], 3)
    with pytest.raises(DerivativeDomainError):
        jets.log(x)
    with pytest.raises(DerivativeDomainError):
        jets.sqrt(x)
    with pytest.raises(DerivativeDomainError):
        1.0 / (x + 0.5)


def test_configuration_errors():
    with pytest.raises(ConfigurationError):
        jet_seed(3, 0.0, 2, 3)
    with pytest.raises(ConfigurationError):
        Jet(np.zeros(4), 2, 3)
    x = jet_seed(0, 0.0, 2, 2)
    with pytest.raises(ConfigurationError):
        x + jet_seed(0, 0.0, 3, 2)
