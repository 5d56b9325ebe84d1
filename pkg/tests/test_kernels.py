import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from carleson.errors import InvalidGrid, InvalidParameters
from carleson.kernels import (
    HalfPlanePoint,
    ZGrid,
    cp_constant,
    epsilon_d_constant,
    geometric_bound_from_kernel_ratio,
    repkernel_hp_norm,
    repkernel_hp_norm_quadrature,
    repkernel_lq_mu_norm,
    rkt_sup,
)
from carleson.measures import (
    DiscreteMeasure,
    HalfPlaneAtom,
    candidate_tents,
    geometric_constant,
    tent_measure,
)
from carleson.numerics import integrate_adaptive, poisson_kernel


def atom_measure(*triples):
    return DiscreteMeasure(tuple(HalfPlaneAtom(*a) for a in triples))


measure_st = st.lists(
    st.tuples(st.floats(-4, 4), st.floats(0.1, 3), st.floats(0.1, 4)), min_size=1, max_size=5
).map(lambda a: atom_measure(*a))


def test_point_validation():
    with pytest.raises(InvalidParameters):
        HalfPlanePoint(0.0, 1.0)
    assert complex(HalfPlanePoint.from_complex(2 - 3j)) == 2 - 3j


def test_cp_examples():
    assert cp_constant(2) == pytest.approx(math.sqrt(math.pi), abs=1e-10)
    assert cp_constant(3) == pytest.approx(2 ** (1 / 3), abs=1e-8)
    grid = [1.1, 1.5, 2, 3, 5, 10, 40]
    values = [cp_constant(p) for p in grid]
    assert all(a > b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("p", [1.05, 1.3, 1.5, 2.5, 4.0, 7.5])
def test_cp_against_beta_function(p):
    # int_R (1+t^2)^(-p/2) dt = B(1/2, (p-1)/2)
    exact = special.beta(0.5, 0.5 * (p - 1)) ** (1 / p)
    assert cp_constant(p) == pytest.approx(exact, rel=1e-12)


def test_cp_rejects_small_exponent():
    with pytest.raises(InvalidParameters):
        cp_constant(1.0)


def test_hp_norm_examples():
    assert repkernel_hp_norm(HalfPlanePoint(1, 0), 2) == pytest.approx(math.sqrt(math.pi))
    assert repkernel_hp_norm(HalfPlanePoint(4, 7), 2) == pytest.approx(math.sqrt(math.pi) / 2)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("re", [0.3, 1.0, 5.0])
@pytest.mark.parametrize("im", [-2.0, 0.0, 3.0])
def test_hp_norm_formula_vs_boundary_integral(p, re, im):
    z = HalfPlanePoint(re, im)
    assert repkernel_hp_norm_quadrature(z, p) == pytest.approx(repkernel_hp_norm(z, p), rel=1e-6)


def test_hp_norm_against_scipy_quad():
    z = HalfPlanePoint(0.7, 1.2)
    val, _ = integrate.quad(lambda y: (z.re**2 + (y - z.im) ** 2) ** -0.75, -np.inf, np.inf,
                            epsabs=1e-13, epsrel=1e-12)
    assert repkernel_hp_norm(z, 1.5) == pytest.approx(val ** (1 / 1.5), rel=1e-9)


def test_lq_mu_examples():
    z = HalfPlanePoint(1, 0)
    assert repkernel_lq_mu_norm(z, 2, atom_measure((0, 1, 1))) == pytest.approx(0.5)
    assert repkernel_lq_mu_norm(z, 2, DiscreteMeasure(())) == 0
    assert repkernel_lq_mu_norm(z, 2, atom_measure((0, 1, 16))) == pytest.approx(2.0)


def test_lq_mu_uses_conjugate():
    # lambda = 1 + 2i, z = 1 + 2i: |lambda + conj z| = |2| = 2
    assert repkernel_lq_mu_norm(HalfPlanePoint(1, 2), 2, atom_measure((2, 1, 1))) == pytest.approx(0.5)


def test_rkt_examples():
    assert rkt_sup(DiscreteMeasure(()), 2, 2).sup_ratio == 0
    mu = atom_measure((0, 1, 1))
    ratio_at_one = repkernel_lq_mu_norm(HalfPlanePoint(1, 0), 2, mu) / repkernel_hp_norm(HalfPlanePoint(1, 0), 2)
    assert ratio_at_one == pytest.approx(0.5 / math.sqrt(math.pi))
    rep = rkt_sup(mu, 2, 2)
    assert math.isfinite(rep.sup_ratio)
    assert rep.sup_ratio >= ratio_at_one * (1 - 1e-3)
    assert not rep.grid_too_small


def test_rkt_single_atom_closed_form():
    # p = q = 2, atom at 1: ratio^2 = re / (pi (1 + re)^2), maximal at re = 1
    rep = rkt_sup(atom_measure((0, 1, 1)), 2, 2, extra_points=[HalfPlanePoint(1, 0)])
    assert rep.sup_ratio == pytest.approx(0.5 / math.sqrt(math.pi), rel=1e-12)


def test_rkt_flags_tiny_grid():
    rep = rkt_sup(atom_measure((0, 1, 1)), 2, 2, z_grid=ZGrid(0.9, 1.1, -0.1, 0.1, 5, 5))
    assert rep.grid_too_small
    assert "grid too small" in rep.to_dict()["flags"]


def test_zgrid_validation():
    with pytest.raises(InvalidGrid):
        ZGrid(0.0, 1.0, -1, 1)
    with pytest.raises(InvalidGrid):
        ZGrid(1.0, 2.0, -1, 1, 2, 5)


def test_rkt_refinement_monotone():
    mu = atom_measure((0, 1, 1), (3, 0.5, 2))
    coarse = ZGrid(0.01, 100, -40, 40, 21, 21)
    fine = ZGrid(0.01, 100, -40, 40, 41, 41)  # contains every coarse node
    assert rkt_sup(mu, 2, 2, fine).sup_ratio >= rkt_sup(mu, 2, 2, coarse).sup_ratio


@settings(max_examples=25, deadline=None)
@given(measure_st, st.sampled_from([(2.0, 2.0), (1.5, 3.0), (3.0, 2.0)]))
def test_kernel_ratio_bounds_candidate_tents(mu, pq):
    p, q = pq
    tents = candidate_tents(mu)
    apexes = [HalfPlanePoint(t.r, t.omega) for t in tents]
    m = rkt_sup(mu, p, q, ZGrid.covering(mu, 40, 41), extra_points=apexes).sup_ratio
    for t in tents:
        bound = (2 * t.r) ** q * m**q * repkernel_hp_norm(HalfPlanePoint(t.r, t.omega), p) ** q
        assert tent_measure(mu, t) <= bound + 1e-9
    geo = geometric_constant(mu, p / q).constant
    assert geo <= geometric_bound_from_kernel_ratio(m, p) * (1 + 1e-9)


def test_epsilon_one():
    eps = epsilon_d_constant()
    assert eps == 0.5
    quad = integrate_adaptive(lambda y: poisson_kernel(1.0, y), -1.0, 1.0).value
    assert abs(quad - eps) <= 1e-12
    assert eps < 1
