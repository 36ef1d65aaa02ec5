import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rankone.adtheory import (box_eigenvalue_closed, classify, perturb, perturb_general,
                              rank_two_example_density, solve_eigenvalue)
from rankone.measures import box_measure, grid_measure, total_mass
from rankone.transforms import _borel_at, g_quad

# mpmath references
COTH1, MASS1 = 1.3130352854993313, 0.72406166096631047
COTH_HALF, MASS_TAU05_A2 = 2.1639534137386528, 0.92067359420779232
AC_MASS_A1 = 0.27593833903368953
F_AT_5 = -0.20273255405408219
DENSITY_ALPHA1_X0 = 0.14420021957100047
HALF = box_measure(0.5)
GRID = [(tau, a) for tau in (0.5, 0.25, 0.1) for a in (0.25, 0.5, 1.0, 2.0, -0.25, -0.5, -1.0, -2.0)]


def _residual(m, e):
    anchor = m.support[1] if e.coupling > 0 else m.support[0]
    off = e.gap if e.coupling > 0 else -e.gap
    return abs(_borel_at(m, np.array([off]), anchor)[0] + 1.0 / e.coupling)


def test_solve_eigenvalue_examples():
    e = solve_eigenvalue(HALF, 1.0)
    assert e.location == pytest.approx(COTH1, abs=1e-12)
    assert e.mass == pytest.approx(MASS1, rel=1e-12)
    e = solve_eigenvalue(HALF, -1.0)
    assert e.location == pytest.approx(-COTH1, abs=1e-12)
    assert e.mass == pytest.approx(MASS1, rel=1e-12)
    assert solve_eigenvalue(HALF, 0.05).mass == pytest.approx(400 / math.sinh(20.0) ** 2, rel=1e-8)


def test_solve_eigenvalue_errors():
    with pytest.raises(ValueError, match="no perturbation"):
        solve_eigenvalue(HALF, 0.0)
    with pytest.raises(ValueError):
        solve_eigenvalue(box_measure(0.5, atoms=[(2.0, 0.1)]), 1.0)


def test_box_closed_examples():
    e = box_eigenvalue_closed(0.5, 1.0)
    assert (e.location, e.mass) == (pytest.approx(COTH1, abs=1e-15), pytest.approx(MASS1, rel=1e-15))
    e = box_eigenvalue_closed(0.5, 2.0)
    assert e.location == pytest.approx(COTH_HALF, abs=1e-15)
    assert e.mass == pytest.approx(MASS_TAU05_A2, rel=1e-14)


@pytest.mark.parametrize("alpha", [1.0, 2.0, 0.5, -1.0, 0.3])
def test_closed_form_equals_literal_exponential_form(alpha):
    e2 = math.exp(2 / alpha)
    x = (-1 - e2) / (1 - e2)
    mass = 4 * e2 / (alpha ** 2 * (e2 - 1) ** 2)
    closed = box_eigenvalue_closed(0.5, alpha)
    assert closed.location == pytest.approx(x, rel=1e-12)
    assert closed.mass == pytest.approx(mass, rel=1e-12)


@pytest.mark.parametrize("tau,alpha", GRID)
def test_closed_form_vs_root_finder(tau, alpha):
    m = box_measure(tau)
    closed = box_eigenvalue_closed(tau, alpha)
    root = solve_eigenvalue(m, alpha)
    assert abs(closed.location - root.location) < 1e-10
    assert abs(closed.gap - root.gap) <= 1e-10 * closed.gap + 1e-300
    assert root.residual < 1e-12 and _residual(m, root) < 1e-12
    assert abs(root.mass - closed.mass) <= 1e-8 * closed.mass
    # quadrature route for G at the root
    anchor = 1.0 if alpha > 0 else -1.0
    g = g_quad(m, root.gap * np.sign(alpha), anchor)
    assert abs(1.0 / (alpha ** 2 * g) - closed.mass) <= 1e-8 * closed.mass


@given(st.floats(1e-3, 5.0), st.floats(1e-3, 50.0))
def test_mass_even_in_alpha(tau, alpha):
    assert box_eigenvalue_closed(tau, alpha).mass == pytest.approx(box_eigenvalue_closed(tau, -alpha).mass,
                                                                   rel=1e-15, abs=1e-300)


@given(st.floats(1e-3, 5.0), st.floats(1e-2, 50.0))
def test_mass_below_ac_mass(tau, alpha):
    e = box_eigenvalue_closed(tau, alpha)
    assert 0 <= e.mass < 2 * tau
    assert e.location >= 1.0


def test_closed_form_underflow_sentinel():
    e = box_eigenvalue_closed(1e-4, 0.01)
    assert e.mass == 0.0 and e.location == 1.0
    e = box_eigenvalue_closed(1e-4, -0.01)
    assert e.location == -1.0
    e = box_eigenvalue_closed(0.01, 1.0)  # u = 50, log-space branch
    assert e.mass == pytest.approx(2 / (0.01) * math.exp(-100), rel=1e-12)


def test_perturb_examples():
    out = perturb(HALF, 1.0)
    assert len(out.atoms) == 1
    assert out.atoms[0].location == pytest.approx(COTH1, abs=1e-12)
    assert out.atoms[0].mass == pytest.approx(MASS1, rel=1e-12)
    assert out.ac.mass() == pytest.approx(AC_MASS_A1, abs=1e-6)
    assert perturb(HALF, 0.0) is HALF


def test_perturb_conserves_mass_random(rng):
    for _ in range(10):
        tau = rng.uniform(0.05, 1.0)
        alpha = rng.choice([-1, 1]) * rng.uniform(0.2, 3.0)
        m = box_measure(tau)
        assert total_mass(perturb(m, alpha)) == pytest.approx(total_mass(m), abs=1e-6)


def test_perturb_with_atoms_scans_every_gap():
    m = grid_measure([-1, 0, 1], [0.2, 0.5, 0.3], [(1.5, 0.2), (2.5, 0.1), (-2.0, 0.15)])
    out = perturb(m, 0.8)
    # one root right of the top atom plus one in each bounded gap
    assert len(out.atoms) == 4
    locs = out.atom_locations
    assert -2.0 < locs[0] < -1.0 < 1.0 < locs[1] < 1.5 < locs[2] < 2.5 < locs[3]
    assert total_mass(out) == pytest.approx(total_mass(m), abs=1e-6)
    for x in locs:
        assert abs(_borel_at(m, np.array([x]))[0] + 1 / 0.8) < 1e-10


def test_perturb_rejects_embedded_atoms():
    with pytest.raises(ValueError, match="inside"):
        perturb(box_measure(0.5, atoms=[(0.2, 0.1)]), 1.0)


def test_perturb_pure_point():
    m = box_measure(0.0, atoms=[(-1.0, 0.5), (1.0, 0.5)])
    out = perturb(m, 1.0)
    # eigenvalues of [[-1, 0], [0, 1]] + |v><v| with v = (sqrt(.5), sqrt(.5))
    evals = np.linalg.eigvalsh(np.diag([-1.0, 1.0]) + 0.5 * np.ones((2, 2)))
    np.testing.assert_allclose(out.atom_locations, evals, atol=1e-12)
    assert total_mass(out) == pytest.approx(1.0, abs=1e-12)


def test_atoms_differ_for_distinct_couplings():
    a = perturb(HALF, 1.0).atom_locations
    b = perturb(HALF, 1.5).atom_locations
    assert abs(a[0] - b[0]) > 1e-9


def test_perturb_general_constant_direction_matches():
    m = grid_measure([-1, -0.2, 0.5, 1], [0.3, 0.6, 0.2, 0.4], [(1.7, 0.2)])
    direct = perturb(m, 1.3)
    general = perturb_general(m, lambda x: np.ones_like(x), 1.3)
    np.testing.assert_allclose(general.ac.weight.values, direct.ac.weight.values, rtol=0, atol=1e-12)
    np.testing.assert_allclose(general.atom_locations, direct.atom_locations, atol=1e-12)
    np.testing.assert_allclose(general.atom_masses, direct.atom_masses, atol=1e-12)
    box = perturb_general(HALF, lambda x: np.ones_like(x), 1.0)
    assert box.atoms == perturb(HALF, 1.0).atoms


def test_perturb_general_drops_atoms_where_phi_vanishes():
    m = box_measure(0.4, atoms=[(2.0, 0.2)])
    phi = lambda x: np.where(np.abs(x) <= 1, 1.0, 0.0)
    out = perturb_general(m, phi, 0.7)
    assert len(out.atoms) == 1
    assert out.atoms[0].location == pytest.approx(box_eigenvalue_closed(0.4, 0.7).location, abs=1e-9)


def test_perturb_general_zero_norm():
    with pytest.raises(ValueError, match="zero norm"):
        perturb_general(HALF, lambda x: np.zeros_like(x), 1.0)


def test_classify_examples():
    assert classify(HALF, 1.0, 0.0).kind == "L"
    c = classify(HALF, 1.0, solve_eigenvalue(HALF, 1.0).location)
    assert c.kind == "P_alpha" and np.isfinite(c.g_value)
    c = classify(HALF, 1.0, 5.0)
    assert c.kind == "Neither"
    assert c.f_boundary.principal == pytest.approx(F_AT_5, abs=1e-15)


def test_classify_singular_continuous_tolerance_rule():
    # the weight x^2-like grid vanishes at 0, and F(0 + i0) is finite there
    m = grid_measure([-1, 0, 1], [1.0, 0.0, 1.0])
    p = classify(m, 1.0, 0.0).f_boundary.principal
    assert p == pytest.approx(0.0, abs=1e-15)
    assert classify(m, 1.0, 0.0).kind == "Neither"


def test_rank_two_example():
    cand, oracle = rank_two_example_density(0.0, 0.3)
    assert cand == 0.5 and oracle == 0.5
    cand, oracle = rank_two_example_density(1.0, 0.0)
    assert cand == 0.25
    assert oracle == pytest.approx(DENSITY_ALPHA1_X0, rel=1e-14)
    with pytest.raises(ValueError):
        rank_two_example_density(1.0, 1.0)


def test_rank_two_displayed_form_changes_sign():
    # denominator (L/4 + 2)^2 - 2 at alpha = 1 is negative for L in (-8 - 4 sqrt 2, -8 + 4 sqrt 2)
    assert rank_two_example_density(1.0, -0.9)[0] < 0
    assert rank_two_example_density(1.0, -0.9)[1] > 0
    assert rank_two_example_density(1.0, -0.5)[0] > 0
