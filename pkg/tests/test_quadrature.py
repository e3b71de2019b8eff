import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from phaseintegral.errors import QuadratureFailure
from phaseintegral.jets import jet_exp, jet_sin, jet_variable
from phaseintegral.quadrature import CumulativeIntegral, JetChainIntegral, quad


def test_quad_polynomial_exact():
    assert_allclose(quad(lambda t: t**3, 0.0, 2.0), 4.0, rtol=1e-13)


def test_quad_oscillatory():
    val = quad(lambda t: math.sin(10 * t), 0.0, math.pi)
    want = (1 - math.cos(10 * math.pi)) / 10
    assert_allclose(val, want, atol=1e-12)


def test_quad_complex_integrand():
    val = quad(lambda t: complex(math.cos(t), math.sin(t)), 0.0, 1.0)
    assert_allclose(val, complex(math.sin(1.0), 1 - math.cos(1.0)), rtol=1e-12)


def test_cumulative_matches_antiderivative():
    cum = CumulativeIntegral(math.exp, 0.0)
    for x in (0.5, 1.0, 0.25, 2.0, -1.0):
        assert_allclose(cum.value(x), math.exp(x) - 1.0, rtol=1e-11)


def test_cumulative_incremental_consistency():
    calls = []

    def f(t):
        calls.append(t)
        return math.cos(t)

    cum = CumulativeIntegral(f, 0.0)
    xs = np.linspace(0.1, 3.0, 12)
    for x in xs:
        assert_allclose(cum.value(float(x)), math.sin(x), atol=1e-11)


def test_jet_chain_matches_closed_form():
    chain = JetChainIntegral(lambda t: jet_sin(jet_variable(t, 6)), 0.0)
    for x in (0.4, 1.7, 3.5, 2.0, -2.2):
        assert_allclose(chain.value(x), 1 - math.cos(x), atol=1e-11)


def test_jet_chain_shares_ladder_points():
    evals = []

    def f(t):
        evals.append(t)
        return jet_exp(jet_variable(t, 6))

    chain = JetChainIntegral(f, 0.0)
    chain.value(1.0)
    n1 = len(evals)
    chain.value(1.03125)          # between ladder rungs
    assert len(evals) - n1 <= 3   # reuses the marched prefix
    assert_allclose(chain.value(1.03125), math.exp(1.03125) - 1, rtol=1e-11)


def test_jet_chain_low_order_bisects_to_tolerance():
    chain = JetChainIntegral(lambda t: jet_sin(jet_variable(t, 2)), 0.0,
                             rtol=1e-10)
    assert_allclose(chain.value(2.0), 1 - math.cos(2.0), atol=1e-9)
