"""Shared factories: random warped products, graphs and probe points."""

import numpy as np
import pytest

from warpcmc.geometry import Chart, GraphMap, MetricField, ScalarField
from warpcmc.warped import WarpedSpace

BOX = 2.0


def random_warped_space(rng, m, n, weight_scale=0.5):
    """Smooth, uniformly positive metrics on ``[-2, 2]^m`` and ``[-2, 2]^n`` with a random weight."""
    base = Chart((-BOX,) * m, (BOX,) * m, label="base")
    fiber = Chart((-50.0,) * n, (50.0,) * n, label="fiber")
    A = rng.normal(size=(m, m)) * 0.4
    P = A @ A.T + np.eye(m)
    a = rng.normal(size=(m, m)) * 0.15
    B = rng.normal(size=(n, n)) * 0.4
    Q = B @ B.T + np.eye(n)
    b = rng.normal(size=n) * 0.2

    def gmat(x):
        s = np.sin(a @ x)
        return P + np.diag(0.3 * s)          # eigenvalues stay >= 0.7

    def hmat(y):
        return Q * (1.0 + 0.2 * np.tanh(b @ y))

    c = rng.normal(size=m) * weight_scale
    k = rng.normal(size=m)

    def psi(x):
        return float(c @ x + 0.2 * np.sin(k @ x))

    return WarpedSpace(MetricField(base, gmat), MetricField(fiber, hmat), ScalarField(base, psi))


def random_graph(rng, ws, curved=True):
    """Affine map plus (optionally) a small quadratic term so the graph is genuinely curved."""
    m, n = ws.m, ws.n
    A = rng.normal(size=(n, m))
    b = rng.normal(size=n) * 0.3
    C = rng.normal(size=(n, m, m)) * (0.3 if curved else 0.0)
    C = 0.5 * (C + C.transpose(0, 2, 1))

    def f(x):
        return A @ x + b + np.einsum("aij,i,j->a", C, x, x)

    def jac(x):
        return A + 2.0 * np.einsum("aij,j->ai", C, x)

    def hess(x):
        return 2.0 * C

    return GraphMap(ws.base_metric.chart, ws.fiber_metric.chart, f, jac, hess)


def random_point(rng, m, radius=1.0):
    return rng.uniform(-radius, radius, size=m)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
