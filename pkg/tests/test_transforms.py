import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rankone.adtheory import perturb
from rankone.errors import NumericalError, PerturbationPole, SingularPointError
from rankone.measures import box_measure, grid_measure
from rankone.transforms import (borel, borel_quad, boundary_value, g_quad, g_transform, krein_shift,
                                perturbed_ac_density, representation_apply)

from oracles import gauss_borel, quad_borel, quad_g, subtraction_pv

# mpmath references: 0.5*log(1/3), 1/(x^2 - 1) at x = 1.313035, 0.5/(1 + (pi/2)^2)
F_BOX_AT_2 = -0.54930614433405485
G_AT_1313035 = 1.3810992756233082
DENSITY_ALPHA1_X0 = 0.14420021957100047
HALF = box_measure(0.5)


@st.composite
def grid_measures(draw):
    n = draw(st.integers(2, 10))
    gaps = draw(st.lists(st.floats(0.02, 0.6), min_size=n - 1, max_size=n - 1))
    nodes = np.concatenate([[-1.0], -1.0 + np.cumsum(gaps)])
    values = np.array(draw(st.lists(st.floats(0.0, 2.0), min_size=n, max_size=n)))
    values[0] = max(values[0], 0.05)
    n_atoms = draw(st.integers(0, 2))
    locs = draw(st.lists(st.floats(0.2, 3.0), min_size=n_atoms, max_size=n_atoms, unique=True))
    atoms = [(nodes[-1] + d, 0.1 + 0.2 * i) for i, d in enumerate(locs)]
    return grid_measure(nodes, values, atoms)


def test_borel_examples():
    assert borel(HALF, 2.0) == pytest.approx(F_BOX_AT_2, abs=1e-15)
    single = box_measure(0.0, atoms=[(0.0, 1.0)])
    assert borel(single, 1j) == pytest.approx(1j, abs=1e-15)
    assert abs(1e4 * borel(HALF, 1e4) + 1.0) < 1e-3


def test_borel_box_matches_quadrature_oracle():
    nodes, values = np.array([-1.0, 1.0]), np.array([0.5, 0.5])
    for z in [2.0, -1.7, 0.3 + 0.01j, -0.9 + 2j, 5 - 0.5j]:
        ref = quad_borel(nodes, values, z)
        assert abs(borel(HALF, z) - ref) <= 1e-10 * abs(ref)


@given(grid_measures(), st.floats(-3, 3), st.floats(0.05, 5))
def test_borel_grid_matches_gauss_oracle(m, re, im):
    z = re + 1j * im
    ref = gauss_borel(m.ac.weight.nodes, m.ac.weight.values, z)
    ref += np.sum(m.atom_masses / (m.atom_locations - z))
    assert abs(borel(m, z) - ref) < 1e-9 * max(1.0, abs(ref))


@given(grid_measures(), st.floats(-3, 3), st.floats(1e-3, 10))
def test_herglotz_positivity(m, re, im):
    assert borel(m, re + 1j * im).imag > 0


def test_herglotz_200_points(rng):
    m = grid_measure(np.linspace(-1, 1, 9), rng.random(9) + 0.01, [(1.5, 0.3)])
    z = rng.uniform(-4, 4, 200) + 1j * rng.uniform(1e-9, 10, 200)
    z.imag = np.maximum(z.imag, 1e-6)
    assert np.all(borel(m, z).imag > 0)


def test_borel_rejects_support_and_atoms():
    with pytest.raises(SingularPointError, match="boundary_value"):
        borel(HALF, 0.5)
    with pytest.raises(SingularPointError, match="boundary_value"):
        borel(box_measure(0.5, atoms=[(2.0, 0.3)]), 2.0)


def test_borel_quad_route_agrees():
    m = grid_measure([-1, -0.2, 0.4, 1], [0.1, 0.9, 0.3, 0.6], [(1.8, 0.2)])
    for z in [1.3, -2.0, 0.1 + 0.5j]:
        assert borel_quad(m, z) == pytest.approx(borel(m, z), abs=1e-12)


def test_boundary_value_examples():
    bv = boundary_value(HALF, 0.0)
    assert bv.principal == pytest.approx(0.0, abs=1e-15) and bv.density == 0.5
    bv = boundary_value(HALF, 0.5)
    assert bv.principal == pytest.approx(F_BOX_AT_2, abs=1e-14)
    assert bv.density == 0.5
    # oracle: just above the real axis
    assert borel(HALF, 0.5 + 1e-8j).real == pytest.approx(bv.principal, abs=1e-7)
    tri = grid_measure([-1, 0, 1], [0, 1, 0])
    assert boundary_value(tri, 0.0).density == 1.0
    assert bv.value == pytest.approx(bv.principal + 1j * np.pi * 0.5)


@given(grid_measures(), st.floats(0.01, 0.99))
def test_principal_value_matches_subtraction_oracle(m, frac):
    nodes, values = m.ac.weight.nodes, m.ac.weight.values
    x = nodes[0] + frac * (nodes[-1] - nodes[0])
    ref = subtraction_pv(nodes, values, x) + np.sum(m.atom_masses / (m.atom_locations - x))
    assert boundary_value(m, x).principal == pytest.approx(ref, abs=1e-9)


def test_principal_value_at_grid_node():
    nodes = np.array([-1.0, -0.3, 0.2, 1.0])
    values = np.array([0.4, 1.0, 0.2, 0.7])
    m = grid_measure(nodes, values)
    for x in nodes[1:-1]:
        assert boundary_value(m, x).principal == pytest.approx(subtraction_pv(nodes, values, x), abs=1e-10)


def test_boundary_value_errors():
    with pytest.raises(SingularPointError, match="endpoint"):
        boundary_value(HALF, 1.0)
    with pytest.raises(SingularPointError):
        boundary_value(box_measure(0.5, atoms=[(2.0, 0.3)]), 2.0)


def test_boundary_value_off_support_is_real_transform():
    bv = boundary_value(HALF, 3.0)
    assert bv.density == 0.0 and bv.principal == pytest.approx(borel(HALF, 3.0))


def test_g_examples():
    assert g_transform(HALF, 1.313035) == pytest.approx(G_AT_1313035, rel=1e-14)
    assert g_transform(HALF, 0.0) == np.inf
    assert g_transform(box_measure(0.0, atoms=[(2.0, 0.3)]), 0.0) == pytest.approx(0.075, abs=1e-16)


@pytest.mark.parametrize("x", [1.0001, 1.3, 2.5, -1.05, -7.0])
def test_box_closed_forms_match_adaptive_quadrature(x):
    for tau in (0.5, 0.25, 0.1):
        m = box_measure(tau)
        assert g_transform(m, x) == pytest.approx(2 * tau / (x * x - 1), rel=1e-12)
        assert g_quad(m, x) == pytest.approx(g_transform(m, x), rel=1e-10)
        assert borel_quad(m, x).real == pytest.approx(borel(m, x), rel=1e-10)


@given(grid_measures(), st.floats(0.05, 3.0), st.booleans())
def test_g_matches_quad_oracle(m, gap, right):
    lo, hi = m.support
    x = hi + gap if right else lo - gap
    if np.any(np.abs(m.atom_locations - x) < 1e-3):
        return
    ref = quad_g(m.ac.weight.nodes, m.ac.weight.values, x, zip(m.atom_locations, m.atom_masses))
    assert g_transform(m, x) == pytest.approx(ref, rel=1e-9)


def test_g_is_derivative_of_f(rng):
    m = grid_measure(np.linspace(-1, 1, 7), rng.random(7) + 0.1, [(2.5, 0.4)])
    h = 1e-4
    xs = np.concatenate([rng.uniform(1.2, 2.3, 10), rng.uniform(-4, -1.2, 10)])
    for x in xs:
        fd = (borel(m, x + h) - borel(m, x - h)) / (2 * h)
        third = 6 * g_transform(m, x) / min(abs(x - 1), abs(x + 1), abs(x - 2.5)) ** 2
        assert abs(g_transform(m, x) - fd) <= third * h * h


def test_f_increasing_off_support(rng):
    m = grid_measure(np.linspace(-1, 1, 5), rng.random(5) + 0.1, [(2.0, 0.3), (3.5, 0.2)])
    for a, b in [(1.0, 2.0), (2.0, 3.5), (3.5, 40.0), (-40.0, -1.0)]:
        xs = np.linspace(a, b, 402)[1:-1]
        assert np.all(np.diff(borel(m, xs)) > 0)


def test_krein_shift_examples():
    assert krein_shift(1j, 0.0) == 1j
    assert krein_shift(1j, 1.0) == pytest.approx(0.5 + 0.5j)
    with pytest.raises(PerturbationPole, match="pole"):
        krein_shift(-0.5, 2.0)


@given(st.floats(-5, 5), st.floats(1e-3, 5), st.floats(-3, 3))
def test_krein_imaginary_part_identity(re, im, alpha):
    F = re + 1j * im
    lhs = krein_shift(F, alpha).imag
    assert lhs == pytest.approx(im / abs(1 + alpha * F) ** 2, rel=1e-12)


def test_perturbed_density_examples():
    assert perturbed_ac_density(HALF, 0.0, 0.3) == 0.5
    assert perturbed_ac_density(HALF, 1.0, 0.0) == pytest.approx(DENSITY_ALPHA1_X0, rel=1e-14)
    # oracle: small imaginary part through the Krein relation
    lim = krein_shift(borel(HALF, 1e-9j), 1.0).imag / np.pi
    assert lim == pytest.approx(DENSITY_ALPHA1_X0, rel=1e-7)


def test_perturbed_density_conserves_mass():
    out = perturb(HALF, 1.0)
    assert out.ac.mass() + out.atoms[0].mass == pytest.approx(1.0, abs=1e-6)


def test_representation_identities():
    s = np.linspace(-0.9, 0.9, 7)
    one = representation_apply(HALF, 0.7, lambda t: np.ones_like(t), s)
    np.testing.assert_allclose(one, 1.0, atol=1e-15)
    f = np.cos
    np.testing.assert_array_equal(representation_apply(HALF, 0.0, f, s), f(s))


def test_representation_isometry():
    alpha = 1.0
    pert = perturb(HALF, alpha)
    nodes, w = pert.ac.weight.nodes, pert.ac.weight.values
    f = lambda t: t
    v_ac = representation_apply(HALF, alpha, f, nodes, df=np.ones_like)
    x = pert.atoms[0].location
    v_atom = representation_apply(HALF, alpha, f, np.array([x]), df=np.ones_like)[0]
    lhs = np.trapezoid(v_ac ** 2 * w, nodes) + v_atom ** 2 * pert.atoms[0].mass
    assert lhs == pytest.approx(1.0 / 3.0, rel=1e-4)


def test_representation_rejects_nonfinite():
    with pytest.raises(NumericalError):
        representation_apply(HALF, 1.0, lambda t: np.full_like(t, np.nan), np.array([0.0]))
