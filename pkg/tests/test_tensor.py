import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harnack_lab import jets
from harnack_lab.jets import Jet, jet_einsum, jet_seed, stack
from harnack_lab.tensor import (
    MetricSample,
    ShapeError,
    as_array,
    christoffel,
    covariant_derivative,
    curvature_from_connection,
    hodge_laplacian,
    laplacian,
    lower_last,
    ricci_and_scalar,
)

coord = st.floats(-0.6, 0.6, allow_nan=False)


def conformal_metric(point, curvature, order=5):
    """Constant-curvature metric ``4 / (1 + K |x|^2)^2 delta`` in stereographic form."""
    n = len(point)
    x = [jet_seed(i, v, n, order) for i, v in enumerate(point)]
    r2 = sum((xi * xi for xi in x), Jet.constant(0.0, n, order))
    u = 4.0 * (1.0 + curvature * r2) ** -2
    zero = u * 0.0
    g = stack([stack([u if i == j else zero for j in range(n)]) for i in range(n)])
    return x, MetricSample.from_metric(g)


def constant_curvature_tensor(g, k):
    return k * (np.einsum("il,jk->ijkl", g, g) - np.einsum("ik,jl->ijkl", g, g))


@settings(max_examples=20, deadline=None)
@given(coord, coord, coord, st.sampled_from([1.0, -1.0, 0.25]))
def test_constant_curvature_space(a, b, c, k):
    _, m = conformal_metric([a, b, c], k)
    riem = curvature_from_connection(christoffel(m))
    g = as_array(m.g)
    low = as_array(lower_last(riem, m.g))
    np.testing.assert_allclose(low, constant_curvature_tensor(g, k), atol=1e-10 * np.abs(g).max() ** 2)
    ric, scal = ricci_and_scalar(riem, m)
    np.testing.assert_allclose(as_array(ric), 2 * k * g, atol=1e-10 * np.abs(g).max())
    assert float(as_array(scal)) == pytest.approx(6 * k, abs=1e-10)


def test_polar_coordinates_christoffel():
    r = jet_seed(0, 2.0, 2, 4)
    one, zero = r * 0.0 + 1.0, r * 0.0
    g = stack([stack([one, zero]), stack([zero, r * r])])
    m = MetricSample.from_metric(g)
    gam = as_array(christoffel(m).gamma)
    want = np.zeros((2, 2, 2))
    want[0, 1, 1] = -2.0
    want[1, 0, 1] = want[1, 1, 0] = 0.5
    np.testing.assert_allclose(gam, want, atol=1e-14)
    riem = curvature_from_connection(christoffel(m))
    np.testing.assert_allclose(riem.c, 0.0, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(coord, coord)
def test_metric_is_parallel(a, b):
    _, m = conformal_metric([a, b], 1.0)
    conn = christoffel(m)
    np.testing.assert_allclose(as_array(covariant_derivative(m.g, "dd", conn)), 0.0, atol=1e-12)
    np.testing.assert_allclose(as_array(covariant_derivative(m.g_inv, "uu", conn)), 0.0, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(coord, coord, coord)
def test_killing_field_laplacian(a, b, c):
    # rotation in the (x0, x1) plane is an isometry of the round sphere: Lap xi = -Ric(xi)
    x, m = conformal_metric([a, b, c], 1.0)
    conn = christoffel(m)
    xi_up = stack([-x[1], x[0], x[0] * 0.0])
    xi = jet_einsum("ij,j->i", m.g, xi_up)
    lap = laplacian(xi, "d", conn, m.g_inv)
    want = -2.0 * as_array(xi)
    np.testing.assert_allclose(as_array(lap), want, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(coord, coord)
def test_hodge_laplacian_commutes_with_d(a, b):
    x, m = conformal_metric([a, b], 1.0, order=6)
    conn = christoffel(m)
    f = jets.exp(0.5 * x[0]) * x[1] + x[0] ** 3
    df = covariant_derivative(f, "", conn)
    lap_f = laplacian(f, "", conn, m.g_inv)
    d_lap = covariant_derivative(lap_f, "", conn)
    np.testing.assert_allclose(as_array(hodge_laplacian(df, conn, m.g_inv)), as_array(d_lap), atol=1e-9)


def test_shape_errors():
    _, m = conformal_metric([0.1, 0.2], 1.0)
    conn = christoffel(m)
    with pytest.raises(ShapeError):
        covariant_derivative(m.g, "d", conn)
    with pytest.raises(ShapeError):
        covariant_derivative(m.g, "dx", conn)
    asym = stack([stack([m.g[0, 0], m.g[0, 0] * 0.0 + 0.5]), stack([m.g[0, 0] * 0.0, m.g[1, 1]])])
    with pytest.raises(ShapeError):
        MetricSample.from_metric(asym)
    neg = -1.0 * m.g
    with pytest.raises(np.linalg.LinAlgError):
        MetricSample.from_metric(neg)
