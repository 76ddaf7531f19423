import math

import numpy as np
import pytest

from warpcmc.quadrature import CumulativeIntegral, QuadratureError, adaptive_quad, gk15


def test_single_panel_is_exact_for_polynomials():
    val, err = gk15(lambda x: x ** 10 - 3 * x ** 3, -1.0, 2.0)
    assert val == pytest.approx((2 ** 11 + 1) / 11 - 3 * (16 - 1) / 4, rel=1e-14)
    assert err < 1e-10


def test_adaptive_sine():
    assert adaptive_quad(np.sin, 0.0, math.pi) == pytest.approx(2.0, rel=1e-13)
    assert adaptive_quad(np.sin, math.pi, 0.0) == pytest.approx(-2.0, rel=1e-13)
    assert adaptive_quad(np.sin, 1.0, 1.0) == 0.0


def test_adaptive_handles_endpoint_singularity():
    assert adaptive_quad(lambda x: 1 / np.sqrt(x), 0.0, 1.0, reltol=1e-10) == pytest.approx(2.0, rel=1e-9)


def test_budget_exhaustion_raises():
    with pytest.raises(QuadratureError):
        adaptive_quad(lambda x: np.sin(1 / x), 1e-6, 1.0, abstol=0.0, reltol=1e-15, max_evals=300)


def test_cumulative_sinh():
    F = CumulativeIntegral(np.sinh, 5.0, anchors=16)
    for t in (0.0, 0.3, 1.0, 2.71, 5.0):
        assert F(t) == pytest.approx(math.cosh(t) - 1, rel=1e-13, abs=1e-15)
    with pytest.raises(ValueError):
        F(5.5)
    with pytest.raises(ValueError):
        F(-0.1)
