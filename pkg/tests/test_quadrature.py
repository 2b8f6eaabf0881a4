import math

import numpy as np
import pytest

from ballfield import _quadrature as quad


@pytest.mark.parametrize("deg", range(0, 24))
def test_kronrod_exact_through_degree_23(deg):
    got = float(np.dot(quad.KRONROD_WEIGHTS, quad.NODES**deg))
    exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
    assert got == pytest.approx(exact, abs=1e-14)


@pytest.mark.parametrize("deg", range(0, 14))
def test_gauss_exact_through_degree_13(deg):
    got = float(np.dot(quad.GAUSS_WEIGHTS, quad.NODES**deg))
    exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
    assert got == pytest.approx(exact, abs=1e-14)


def test_oscillatory_batch():
    # int_0^T sin(k x) dx for several k in one batch
    ks = np.array([1.0, 5.0, 40.0])
    T = 10.0

    def f(x, owner):
        return np.sin(ks[owner] * x)

    edges = [quad.initial_edges(T, 1.0) for _ in ks]
    vals, errs, _, ok = quad.integrate_batch(f, edges, 1e-13, 1e-12, 5000)
    assert ok.all()
    np.testing.assert_allclose(vals, (1 - np.cos(ks * T)) / ks, rtol=0, atol=1e-11)
    assert np.all(errs < 1e-10)


def test_batch_membership_does_not_change_bits():
    ks = np.array([0.5, 3.0, 17.0, 60.0])

    def f(x, owner):
        return np.cos(ks[owner] * x) * np.exp(-0.1 * x)

    edges = [quad.initial_edges(30.0, 1.0) for _ in ks]
    together, *_ = quad.integrate_batch(f, edges, 1e-12, 1e-10, 5000)
    for i in range(len(ks)):
        def g(x, owner, i=i):
            return np.cos(ks[i] * x) * np.exp(-0.1 * x)
        alone, *_ = quad.integrate_batch(g, [edges[i]], 1e-12, 1e-10, 5000)
        assert alone[0] == together[i]


def test_nonconvergence_reported():
    def f(x, owner):
        return np.sin(1.0 / np.maximum(x, 1e-300))

    vals, errs, _, ok = quad.integrate_batch(f, [np.array([0.0, 1.0])], 1e-15, 1e-15, 5)
    assert not ok[0]
    assert errs[0] > 0 and math.isfinite(vals[0])


def test_initial_edges_geometric():
    e = quad.initial_edges(10.0, 1.0)
    assert e[0] == 0.0 and e[-1] == 10.0
    assert np.all(np.diff(e) > 0)
