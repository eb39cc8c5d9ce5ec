import math

import numpy as np
import pytest

from zenodecay.errors import QuadratureError
from zenodecay.quadrature import integrate


def test_polynomial_is_exact():
    assert integrate(lambda x: x ** 5 - 3 * x, -1.0, 2.0) == pytest.approx(10.5 - 4.5, rel=1e-14)


def test_whole_line_lorentzian():
    assert integrate(lambda x: 1 / (1 + x * x), -math.inf, math.inf) == pytest.approx(math.pi, rel=1e-10)


def test_half_lines():
    f = lambda x: np.exp(-x * x)
    assert integrate(f, 0.0, math.inf) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-10)
    assert integrate(f, -math.inf, 0.0) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-10)


def test_reversed_limits_change_sign():
    assert integrate(np.cos, 1.0, 0.0) == pytest.approx(-math.sin(1.0), rel=1e-14)


def test_narrow_peak_needs_breakpoint_hint():
    w = 1e-6
    f = lambda x: w / ((x - 0.3) ** 2 + w * w)
    assert integrate(f, -1.0, 1.0, breakpoints=[0.3]) == pytest.approx(
        math.atan(0.7 / w) + math.atan(1.3 / w), rel=1e-8)


def test_vector_valued_integrand():
    t = np.array([0.5, 1.0, 2.0])
    f = lambda x: np.exp(-np.multiply.outer(x, t))
    np.testing.assert_allclose(integrate(f, 0.0, math.inf), 1 / t, rtol=1e-10)


def test_budget_exhaustion_reports_estimate():
    with pytest.raises(QuadratureError) as info:
        integrate(lambda x: np.sin(1e4 * x) ** 2, 0.0, 100.0, max_intervals=20)
    assert info.value.achieved > 0
    assert "achieved error estimate" in str(info.value)
