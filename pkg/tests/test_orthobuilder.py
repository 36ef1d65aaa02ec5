import warnings

import numpy as np
import pytest
from scipy import integrate

from rankone.errors import ConvergenceWarning
from rankone.measures import box_measure, grid_measure
from rankone.orthobuilder import (SignFunction, build_sign_function, eta_cdf, eta_quantile,
                                  inner_products)

LEBESGUE_HALF = box_measure(0.5)
FAMILY = [lambda t: np.ones_like(t), lambda t: t, lambda t: t ** 2, lambda t: np.sin(np.pi * t)]


def mixed_eta():
    nodes = np.linspace(-1, 1, 9)
    values = 0.3 + 0.1 * nodes ** 2
    return grid_measure(nodes, values, [(-0.5, 0.15), (0.5, 0.1)])


def quad_inner(h, f, eta):
    """Oracle: scipy quad cell by cell on the a.c. part plus the atom sum."""
    edges = np.append(h.breakpoints, 1.0)
    kinks = eta.ac.segments()[0]
    total = 0.0
    for a, b, sg in zip(edges[:-1], edges[1:], h.signs):
        inner = [k for k in kinks if a < k < b] or None
        total += sg * integrate.quad(lambda t: float(f(np.array(t))) * float(eta.ac.density(np.array(t))),
                                     a, b, points=inner, epsabs=1e-14, limit=200)[0]
    for x, m in zip(eta.atom_locations, eta.atom_masses):
        total += m * h(x) * float(f(np.array(x)))
    return total


def test_level_zero_constant():
    h = build_sign_function([lambda t: np.ones_like(t)], LEBESGUE_HALF)
    assert h.level == 0
    np.testing.assert_array_equal(h.breakpoints, [-1.0, 0.0])
    np.testing.assert_array_equal(h.signs, [-1.0, 1.0])
    assert abs(inner_products(h, [lambda t: np.ones_like(t)], LEBESGUE_HALF)[0]) < 1e-15


def test_sign_function_validation_and_eval():
    h = SignFunction([-1.0, -0.2, 0.4], [1, -1, 1])
    np.testing.assert_array_equal(h(np.array([-1.0, -0.5, -0.2, 0.0, 0.4, 0.99, 1.0])), [1, 1, -1, -1, 1, 1, 0])
    with pytest.raises(ValueError):
        SignFunction([-0.9, 0.0], [1, -1])
    with pytest.raises(ValueError):
        SignFunction([-1.0, 0.0], [1, 0])
    with pytest.raises(ValueError):
        SignFunction([-1.0, 0.5, 0.2], [1, -1, 1])


def test_inner_products_match_quad_oracle():
    eta = mixed_eta()
    h = SignFunction([-1.0, -0.7, -0.5, 0.1, 0.5, 0.8], [1, -1, 1, -1, 1, -1])
    got = inner_products(h, FAMILY, eta)
    want = [quad_inner(h, f, eta) for f in FAMILY]
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-13)


def test_h_squared_is_total_mass():
    eta = mixed_eta()
    h = SignFunction([-1.0, -0.3, 0.5], [1, -1, -1 + 2])
    norm = inner_products(h, [h], eta)[0]
    assert norm == pytest.approx(eta.ac.mass() + eta.atom_masses.sum(), abs=1e-13)


def test_sampled_functions_accepted():
    nodes = np.linspace(-1, 1, 201)
    h = build_sign_function([(nodes, np.ones_like(nodes)), (nodes, nodes)], LEBESGUE_HALF, tol=1e-4)
    assert h.converged and h.residual < 1e-4


def test_eta_cdf_and_quantile():
    eta = mixed_eta()
    # atoms are excluded at their own location
    assert eta_cdf(eta, -0.5) + 0.15 == pytest.approx(float(eta_cdf(eta, np.nextafter(-0.5, 1))), abs=1e-12)
    ys = np.linspace(0.01, float(eta_cdf(eta, 1.0)) - 0.01, 50)
    q = eta_quantile(eta, ys)
    assert np.all(np.diff(q) >= 0)
    # inside an atom jump the quantile is the atom
    inside = float(eta_cdf(eta, -0.5)) + 0.05
    assert float(eta_quantile(eta, np.array([inside]))[0]) == -0.5
    free = ~np.isin(q, [-0.5, 0.5])
    np.testing.assert_allclose(eta_cdf(eta, q[free]), ys[free], atol=1e-12)


def test_lebesgue_one_t():
    fns = FAMILY[:2]
    h = build_sign_function(fns, LEBESGUE_HALF, tol=1e-6, max_level=22)
    assert h.converged and h.level <= 22
    # exact cell integrals against dt/2
    a, b = h.breakpoints, np.append(h.breakpoints[1:], 1.0)
    exact = [np.sum(h.signs * (b - a)) / 2, np.sum(h.signs * (b ** 2 - a ** 2)) / 4]
    assert np.max(np.abs(exact)) < 1e-6
    np.testing.assert_allclose(inner_products(h, fns, LEBESGUE_HALF), exact, rtol=0, atol=1e-12)


def test_monotone_refinement_polynomials():
    fns = FAMILY[:3]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        h = build_sign_function(fns, LEBESGUE_HALF, tol=1e-12, max_level=10)
    hist = np.array(h.history)
    assert np.all(hist[1:] <= hist[:-1] * (1 + 1e-9) + 1e-15)


def test_mixed_measure_converges_and_is_unimodular():
    eta = mixed_eta()
    h = build_sign_function(FAMILY, eta, tol=1e-6)
    assert h.converged
    r = [quad_inner(h, f, eta) for f in FAMILY]
    assert np.max(np.abs(r)) < 1e-6
    x = np.linspace(-1, 1, 10001)[:-1]
    assert np.all(np.abs(h(x)) == 1)


def test_nonconvergence_is_signalled():
    with pytest.warns(ConvergenceWarning):
        h = build_sign_function(FAMILY, LEBESGUE_HALF, tol=1e-12, max_level=4)
    assert not h.converged and h.residual == min(h.history)


def test_eta_validation():
    with pytest.raises(ValueError, match="x = 1"):
        build_sign_function(FAMILY, grid_measure([-1, 1], [0.5, 0.5], [(1.0, 0.1)]))
    with pytest.raises(ValueError, match="supported"):
        build_sign_function(FAMILY, box_measure(0.25, support=(-2.0, 2.0)))
    with pytest.raises(ValueError):
        build_sign_function(FAMILY, LEBESGUE_HALF, tol=0.0)
