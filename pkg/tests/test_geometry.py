import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warpcmc.geometry import (
    Chart,
    ChartMarginError,
    GraphMap,
    MetricField,
    ScalarField,
    SingularMetricError,
    VectorField,
    bakry_emery_ricci,
    christoffel,
    divergence,
    gradient,
    hessian_scalar,
    map_hessian,
    map_jacobian,
    ricci,
    weighted_divergence,
)


def polar():
    chart = Chart((0.0, -math.pi), (50.0, math.pi), "polar")
    return MetricField(chart, lambda x: np.diag([1.0, x[0] ** 2]))


def round_sphere():
    chart = Chart((0.05, -math.pi), (math.pi - 0.05, math.pi), "sphere")
    return MetricField(chart, lambda x: np.diag([1.0, math.sin(x[0]) ** 2]))


def hyperbolic_plane():
    chart = Chart((0.0, -math.pi), (20.0, math.pi), "hyperbolic")
    return MetricField(chart, lambda x: np.diag([1.0, math.sinh(x[0]) ** 2]))


def test_polar_christoffel_symbols():
    G = christoffel(polar(), [2.0, 0.3])
    expected = np.zeros((2, 2, 2))
    expected[0, 1, 1] = -2.0          # Gamma^r_thth = -r
    expected[1, 0, 1] = expected[1, 1, 0] = 0.5  # Gamma^th_rth = 1/r
    assert np.allclose(G, expected, atol=1e-9)


def test_flat_metric_has_zero_christoffels():
    chart = Chart((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))
    assert np.max(np.abs(christoffel(MetricField.euclidean(chart, 3.0), [0.1, 0.2, 0.3]))) == 0.0


@pytest.mark.parametrize("metric, K, point", [
    (round_sphere, 1.0, [1.0, 0.2]),
    (hyperbolic_plane, -1.0, [1.3, 0.2]),
    (polar, 0.0, [1.5, -0.4]),
])
def test_ricci_of_constant_curvature_surfaces(metric, K, point):
    g = metric()
    assert np.allclose(ricci(g, point), K * g(point), atol=1e-6)


def test_gradient_raises_index():
    g = polar()
    s = ScalarField(g.chart, lambda x: x[0] ** 2 * math.sin(x[1]))
    x = np.array([2.0, 0.5])
    expected = np.array([2 * x[0] * math.sin(x[1]), math.cos(x[1])])   # g^{thth} = 1/r^2
    assert np.allclose(gradient(g, s, x), expected, atol=1e-8)


def test_divergence_of_position_field_in_polar_coordinates():
    # r d/dr has divergence m = 2 in the plane
    g = polar()
    V = VectorField(g.chart, lambda x: np.array([x[0], 0.0]))
    assert divergence(g, V, [1.7, 0.3]) == pytest.approx(2.0, abs=1e-8)


def test_weighted_divergence_adds_drift():
    g = polar()
    psi = ScalarField(g.chart, lambda x: 0.5 * x[0] ** 2)
    V = VectorField(g.chart, lambda x: np.array([x[0], 0.0]))
    x = np.array([1.7, 0.3])
    assert weighted_divergence(g, psi, V, x) == pytest.approx(2.0 + x[0] ** 2, abs=1e-7)


def test_hessian_of_half_squared_distance_is_metric():
    g = polar()
    s = ScalarField(g.chart, lambda x: 0.5 * x[0] ** 2)
    x = np.array([1.3, 0.4])
    assert np.allclose(hessian_scalar(g, s, x), g(x), atol=1e-6)


def test_bakry_emery_ricci_of_gaussian_weight():
    chart = Chart((-3.0, -3.0), (3.0, 3.0))
    g = MetricField.euclidean(chart)
    psi = ScalarField(chart, lambda x: -0.25 * float(x @ x))
    assert np.allclose(bakry_emery_ricci(g, psi, [0.4, -0.7]), 0.5 * np.eye(2), atol=1e-6)


def test_chart_margin_is_enforced():
    g = polar()
    with pytest.raises(ChartMarginError):
        christoffel(g, [1e-7, 0.0])
    with pytest.raises(ChartMarginError):
        christoffel(g, [1.0, math.pi])


def test_singular_metric_is_reported():
    chart = Chart((-1.0, -1.0), (1.0, 1.0))
    g = MetricField(chart, lambda x: np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SingularMetricError):
        christoffel(g, [0.0, 0.0])


def test_map_jacobian_falls_back_to_differences():
    src = Chart((-1.0, -1.0), (1.0, 1.0))
    tgt = Chart((-10.0,), (10.0,))
    f = GraphMap(src, tgt, lambda x: np.array([x[0] ** 2 * x[1]]))
    assert np.allclose(map_jacobian(f, [0.5, 0.3]), [[0.3, 0.25]], atol=1e-9)


def test_map_hessian_of_identity_into_conformal_line():
    # identity (R, dx^2) -> (R, e^{2y} dy^2): B = Gamma~^y_yy = 1
    src = Chart((-2.0,), (2.0,))
    tgt = Chart((-5.0,), (5.0,))
    gM = MetricField.euclidean(src)
    hN = MetricField(tgt, lambda y: np.array([[math.exp(2 * y[0])]]))
    f = GraphMap(src, tgt, lambda x: x.copy())
    assert map_hessian(gM, hN, f, [0.3])[0, 0, 0] == pytest.approx(1.0, abs=1e-6)


def test_map_hessian_of_flat_quadratic_is_coordinate_hessian():
    src = Chart((-2.0, -2.0), (2.0, 2.0))
    tgt = Chart((-50.0,), (50.0,))
    f = GraphMap(src, tgt, lambda x: np.array([x[0] ** 2 + 3 * x[0] * x[1]]))
    B = map_hessian(MetricField.euclidean(src), MetricField.euclidean(tgt), f, [0.2, -0.4])
    assert np.allclose(B[0], [[2.0, 3.0], [3.0, 0.0]], atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 1.5), st.floats(-1.0, 1.0), st.floats(0.5, 3.0))
def test_christoffel_symmetric_and_metric_compatible(x0, x1, a):
    chart = Chart((0.0, -2.0), (3.0, 2.0))
    g = MetricField(chart, lambda x: np.array([[1.0 + x[0] ** 2, 0.1 * x[1]],
                                               [0.1 * x[1], a + math.cos(x[0])]]))
    p = np.array([x0, x1])
    G = christoffel(g, p)
    assert np.allclose(G, G.transpose(0, 2, 1))
    # d_k g_ij = g_lj G^l_ki + g_il G^l_kj
    h = 1e-6
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        dg = (g(p + e) - g(p - e)) / (2 * h)
        rhs = np.einsum("lj,li->ij", g(p), G[:, k, :]) + np.einsum("il,lj->ij", g(p), G[:, k, :])
        assert np.allclose(dg, rhs, atol=1e-6)
