import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from carleson.errors import (
    DivergentParameters,
    EmptyFamily,
    EmptySystem,
    ExponentOrder,
    InvalidParameters,
    InvariantViolation,
    SectorViolation,
    ShapeMismatch,
)
from carleson.kernels import HalfPlanePoint, repkernel_hp_norm, repkernel_lq_mu_norm
from carleson.measures import Interval, candidate_tents, tent_measure
from carleson.systems import (
    DiagonalSystem,
    Indicator,
    StepFunction,
    TruncatedExponential,
    admissibility_probe_sup,
    convolution_majorant_check,
    dyadic_tail_bound,
    finite_time_state,
    laplace_state,
    lq_norm,
    minkowski_check,
    output_norm_exponential,
    phi1,
    poisson_measure,
    realpart_measure,
    reciprocal_measure,
    sandwich_check,
    sandwich_check_dilated,
    square_function_norm,
    vector_output_norm,
    weiss_sup,
    xminus_theta_norm,
)


def sectorial_systems(max_angle=1.2, q=st.sampled_from([1.5, 2.0, 3.0])):
    mode = st.tuples(
        st.floats(0.1, 10), st.floats(-max_angle, max_angle), st.floats(0.1, 3), st.floats(-3, 3)
    ).map(lambda m: (m[0] * complex(math.cos(m[1]), math.sin(m[1])), complex(m[2], m[3])))
    return st.builds(
        lambda modes, q: DiagonalSystem(tuple(l for l, _ in modes), tuple(b for _, b in modes), q),
        st.lists(mode, min_size=1, max_size=5),
        q,
    )


def oracle_state(sys, u, t):
    """Quadrature of int_0^t e^{-lam (t - s)} u(s) ds for every mode."""
    out = []
    pts = [p for p in getattr(u, "breakpoints", ()) if 0 < p < t]
    for lam, b in zip(sys.lambdas, sys.b):
        f = lambda s, part: getattr(complex(np.exp(-lam * (t - s)) * complex(u(s))), part)
        re = integrate.quad(f, 0, t, args=("real",), points=pts or None, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        im = integrate.quad(f, 0, t, args=("imag",), points=pts or None, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        out.append(b * complex(re, im))
    return lq_norm(np.array(out), sys.q)


# construction


def test_system_invariants():
    with pytest.raises(InvariantViolation):
        DiagonalSystem((0j,), (1,), 2)
    with pytest.raises(InvariantViolation):
        DiagonalSystem((1,), (1,), 1.0)
    with pytest.raises(ShapeMismatch):
        DiagonalSystem((1, 2), (1,), 2)


def test_step_function_validation():
    with pytest.raises(InvalidParameters):
        StepFunction((0, 2, 1), (1, 1))
    with pytest.raises(ShapeMismatch):
        StepFunction((0, 1), (1, 1))
    with pytest.raises(InvalidParameters):
        StepFunction((-1, 1), (1,))
    with pytest.raises(InvalidParameters):
        Indicator(0)


def test_phi1_branches_agree():
    w = np.array([1e-8, 0.3, 0.49, 0.51, 2.0, -3.0 + 1j, 0.4j])
    assert np.allclose(phi1(w), np.expm1(w) / w, rtol=1e-12)


# measures


def test_poisson_measure_examples():
    mu = poisson_measure(DiagonalSystem((2 + 3j,), (5,), 2))
    (a,) = mu.atoms
    assert (a.x, a.t, a.w) == pytest.approx((3, 2, 25))
    assert len(poisson_measure(DiagonalSystem((1,), (0,), 2))) == 0
    assert len(poisson_measure(DiagonalSystem((1, 1), (1, 1), 2))) == 2


def test_reciprocal_measure_examples():
    (a,) = reciprocal_measure(DiagonalSystem((2,), (4,), 2)).atoms
    assert (a.x, a.t, a.w) == pytest.approx((0, 0.5, 4))
    (a,) = reciprocal_measure(DiagonalSystem((1 + 1j,), (1,), 2)).atoms
    assert (a.x, a.t, a.w) == pytest.approx((-0.5, 0.5, 0.5))
    assert len(reciprocal_measure(DiagonalSystem((1,), (0,), 2))) == 0


def test_realpart_measure_examples():
    (a,) = realpart_measure(DiagonalSystem((2,), (4,), 2)).atoms
    assert (a.x, a.t, a.w) == pytest.approx((0, 0.5, 4))
    (a,) = realpart_measure(DiagonalSystem((1 + 1j,), (1,), 2)).atoms
    assert (a.x, a.t, a.w) == pytest.approx((0, 1, 1))
    assert len(realpart_measure(DiagonalSystem((), (), 2))) == 0


# exponential outputs


def test_output_norm_examples():
    sys = DiagonalSystem((1,), (1,), 2)
    assert output_norm_exponential(sys, 1) == pytest.approx(0.5)
    assert output_norm_exponential(sys.scaled(3), 1) == pytest.approx(1.5)


@settings(max_examples=50, deadline=None)
@given(sectorial_systems(1.5), st.floats(0.05, 5), st.floats(-5, 5))
def test_output_norm_is_kernel_norm(sys, re, im):
    z = complex(re, im)
    lhs = output_norm_exponential(sys, z)
    rhs = repkernel_lq_mu_norm(HalfPlanePoint(re, im), sys.q, poisson_measure(sys))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


@settings(max_examples=50, deadline=None)
@given(sectorial_systems(1.5), st.floats(0.05, 5), st.floats(-5, 5))
def test_reciprocal_kernel_identity(sys, re, im):
    z = complex(re, im)
    lhs = repkernel_lq_mu_norm(HalfPlanePoint(re, im), sys.q, reciprocal_measure(sys))
    rhs = lq_norm(sys.coeffs / (sys.lam + 1 / z.conjugate()), sys.q) / abs(z)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


# finite-time states


def test_indicator_state_closed_form():
    sys = DiagonalSystem((1,), (1,), 2)
    for t in (0.01, 0.5, 3.0):
        assert finite_time_state(sys, Indicator(100), t) == pytest.approx(-math.expm1(-t), rel=1e-14)
    assert finite_time_state(sys, Indicator(100), 1e-12) < 1e-11
    assert finite_time_state(sys, StepFunction((0, 1), (0,)), 2.0) == 0


@settings(max_examples=30, deadline=None)
@given(sectorial_systems(1.5), st.floats(0.05, 4), st.floats(0.01, 4), st.floats(-3, 3))
def test_exponential_convolution_matches_quadrature(sys, t, zr, zi):
    u = TruncatedExponential(complex(zr, zi))
    assert finite_time_state(sys, u, t) == pytest.approx(oracle_state(sys, u, t), rel=1e-9, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    sectorial_systems(1.5),
    st.lists(st.floats(0.05, 1.0), min_size=1, max_size=4),
    st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=4, max_size=4),
    st.floats(0.1, 5),
)
def test_step_convolution_matches_quadrature(sys, widths, values, t):
    bp = tuple(np.concatenate([[0.0], np.cumsum(widths)]))
    u = StepFunction(bp, tuple(values[: len(widths)]))
    assert finite_time_state(sys, u, t) == pytest.approx(oracle_state(sys, u, t), rel=1e-9, abs=1e-12)


def test_laplace_state_limits():
    sys = DiagonalSystem((1 + 1j, 3), (1, 2j), 2)
    u = TruncatedExponential(2 - 1j)
    assert laplace_state(sys, u) == pytest.approx(output_norm_exponential(sys, 2 - 1j), rel=1e-14)
    assert laplace_state(sys, u, 60.0) == pytest.approx(laplace_state(sys, u), rel=1e-12)


def test_lp_norms_closed_form():
    u = TruncatedExponential(2 + 5j)
    assert u.lp_norm(3) == pytest.approx((3 * 2) ** (-1 / 3))
    val = integrate.quad(lambda s: math.exp(-6 * s), 0, 1.5)[0] ** (1 / 3)
    assert u.lp_norm(3, 1.5) == pytest.approx(val, rel=1e-12)
    step = StepFunction((0, 1, 3), (2, -1j))
    assert step.lp_norm(2) == pytest.approx(math.sqrt(4 + 2))
    assert step.lp_norm(2, 2.0) == pytest.approx(math.sqrt(4 + 1))


# admissibility


def test_probe_single_exponential():
    sys = DiagonalSystem((1,), (1,), 2)
    rep = admissibility_probe_sup(sys, 2, [TruncatedExponential(1)])
    assert rep.ratio == pytest.approx(0.5 * math.sqrt(2), rel=1e-14)
    assert rep.witness_input["kind"] == "exponential"


@settings(max_examples=30, deadline=None)
@given(sectorial_systems(1.5), st.floats(1.2, 4), st.floats(0.05, 5), st.floats(-5, 5))
def test_probe_ratio_formula(sys, p, re, im):
    z = complex(re, im)
    rep = admissibility_probe_sup(sys, p, [TruncatedExponential(z)])
    assert rep.ratio == pytest.approx(output_norm_exponential(sys, z) * (p * re) ** (1 / p), rel=1e-12)


def test_probe_finite_horizon_is_below_infinite():
    sys = DiagonalSystem((1 + 2j, 0.5), (1, 1), 2)
    family = [TruncatedExponential(complex(a, b)) for a in (0.3, 1, 3) for b in (-2, 0, 2)]
    fin = admissibility_probe_sup(sys, 2, family, horizon=5.0)
    assert fin.witness_time is not None and 0 < fin.witness_time <= 5.0
    assert fin.ratio > 0


def test_probe_requires_family():
    with pytest.raises(EmptyFamily):
        admissibility_probe_sup(DiagonalSystem((1,), (1,), 2), 2, [])


@settings(max_examples=15, deadline=None)
@given(sectorial_systems(1.2))
def test_probe_bound_controls_tents(sys):
    # exponential probes bound every kernel ratio, hence every tent
    p = 2.0
    mu = poisson_measure(sys)
    if len(mu) == 0:
        return
    tents = candidate_tents(mu)
    family = [TruncatedExponential(complex(t.r, t.omega)) for t in tents]
    family += [TruncatedExponential(complex(a, b)) for a in np.geomspace(0.01, 100, 15)
               for b in np.linspace(-20, 20, 11)]
    m_probe = admissibility_probe_sup(sys, p, family).ratio
    cp = repkernel_hp_norm(HalfPlanePoint(1, 0), p)
    m_kernel = m_probe / cp  # ratio of the kernel norms
    q = sys.q
    for t in tents:
        bound = (2 * t.r) ** q * m_kernel**q * repkernel_hp_norm(HalfPlanePoint(t.r, t.omega), p) ** q
        assert tent_measure(mu, t) <= bound + 1e-9


# sectorial majorant


def test_majorant_real_spectrum_is_tight():
    sys = DiagonalSystem((0.5, 2.0, 7.0), (1, -2, 0.5), 2)
    for u in (Indicator(1.5), StepFunction((0, 1, 2), (1, 3))):
        check = convolution_majorant_check(sys, u, 1.8)
        assert check.lhs == pytest.approx(check.rhs, rel=1e-12)


def test_majorant_zero_input():
    check = convolution_majorant_check(DiagonalSystem((1 + 1j,), (1,), 2), StepFunction((0, 1), (0,)), 1.0)
    assert tuple(check) == (0.0, 0.0)


def test_majorant_rotated_mode_has_slack():
    check = convolution_majorant_check(DiagonalSystem((1 + 1j,), (1,), 2), Indicator(2.0), 1.5)
    assert check.holds and check.lhs < check.rhs


@settings(max_examples=40, deadline=None)
@given(sectorial_systems(1.4), st.floats(0.1, 5), st.floats(0.1, 5))
def test_majorant_holds_for_sectorial_systems(sys, tau, width):
    assert convolution_majorant_check(sys, Indicator(width), tau).holds


def test_majorant_rejects_half_plane():
    with pytest.raises(SectorViolation):
        convolution_majorant_check(DiagonalSystem((1e-300 + 1j,), (1,), 2), Indicator(1), 1)


# sandwich between reciprocal and real-part measures


def test_sandwich_fails_with_unchanged_radii():
    # arg(lam) = 1.25 > pi/4: the reciprocal atom enters T(0, 1) before the real-part atom
    sys = DiagonalSystem((2 * complex(math.cos(1.25), math.sin(1.25)),), (1,), 1.5)
    first, _ = sandwich_check(sys, 0.0, 1.0)
    assert not first.holds
    # arg(lam) = 0.1 < pi/4: now the real-part atom comes first
    sys = DiagonalSystem((complex(math.cos(0.1), math.sin(0.1)),), (1,), 2)
    _, second = sandwich_check(sys, 0.0, 1.0 / math.cos(0.1))
    assert not second.holds


def test_sandwich_real_spectrum():
    sys = DiagonalSystem((0.5, 2.0, 4.0), (1, 1, 2), 2)
    for r in (0.1, 0.3, 0.6, 1.0, 3.0):
        assert all(c.holds for c in sandwich_check(sys, 0.0, r))


@settings(max_examples=60, deadline=None)
@given(sectorial_systems(1.3), st.floats(-5, 5), st.floats(0.01, 10))
def test_sandwich_with_dilated_radii(sys, omega, r):
    first, second = sandwich_check_dilated(sys, omega, r)
    assert first.holds
    assert second.holds


# extrapolation norms and ring sums


def test_xminus_examples():
    assert xminus_theta_norm(DiagonalSystem((1,), (2,), 2), 1) == pytest.approx(1)
    sys = DiagonalSystem((1 + 1j, 3), (1, 2), 2)
    assert xminus_theta_norm(sys, 0) == pytest.approx(lq_norm(sys.coeffs, 2))
    vals = [xminus_theta_norm(sys, th) for th in (0.1, 0.5, 1, 2)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_dyadic_examples():
    q, pp = 2.0, 2.0
    sums = [dyadic_tail_bound(1.0, 2 / pp, q, pp, range(0, n))[0] for n in (40, 50, 60)]
    assert abs(sums[2] - sums[1]) < 1e-10
    _, tail = dyadic_tail_bound(1.0, 2 / pp, q, pp, range(0, 60))
    assert tail < 1e-10
    with pytest.raises(DivergentParameters):
        dyadic_tail_bound(1.0, 1 / pp, q, pp, range(0, 10))
    assert dyadic_tail_bound(0.0, 2 / pp, q, pp, range(0, 10)) == (0.0, 0.0)


# Weiss condition


def test_weiss_examples():
    rep = weiss_sup(DiagonalSystem((1,), (1,), 2), 2)
    assert rep.sup == pytest.approx(0.5, abs=1e-12)
    assert rep.witness == pytest.approx(1.0, rel=1e-5)
    assert weiss_sup(DiagonalSystem((1,), (0,), 2), 2).sup == 0
    with pytest.raises(EmptySystem):
        weiss_sup(DiagonalSystem((), (), 2), 2)


@settings(max_examples=25, deadline=None)
@given(sectorial_systems(1.3), st.floats(0.1, 10))
def test_weiss_homogeneous(sys, kappa):
    base = weiss_sup(sys, 2).sup
    assert weiss_sup(sys.scaled(kappa), 2).sup == pytest.approx(kappa * base, rel=1e-9)


# square function


def test_square_function_examples():
    sys = DiagonalSystem((1,), (1,), 2)
    assert square_function_norm(sys, [1], 2) == pytest.approx(math.sqrt(0.5), abs=1e-10)
    assert square_function_norm(sys, [0], 2) == 0
    for c in (0.01, 3.0, 250.0):
        scaled = DiagonalSystem((c,), (1,), 2)
        assert square_function_norm(scaled, [1], 2) == pytest.approx(math.sqrt(0.5), rel=1e-9)


def test_square_function_against_scipy():
    sys = DiagonalSystem((1 + 2j, 0.3), (1, 1), 3)
    x = np.array([1.0, -2.0])

    def f(t):
        mags = np.sqrt(t * np.abs(sys.lam)) * np.exp(-t * sys.lam.real) * np.abs(x)
        return np.sum(mags**3) ** (1.5 / 3) / t

    val = integrate.quad(f, 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)[0] ** (1 / 1.5)
    assert square_function_norm(sys, x, 1.5) == pytest.approx(val, rel=1e-8)


def test_square_function_shape():
    with pytest.raises(ShapeMismatch):
        square_function_norm(DiagonalSystem((1,), (1,), 2), [1, 2], 2)


# vector-valued inputs


def test_vector_output_reduces_to_scalar():
    sys = DiagonalSystem((1 + 1j,), (1,), 2)
    u = StepFunction((0, 1, 2), (1, -0.5))
    check = vector_output_norm(sys, [[1.0]], [u], 2.5)
    assert check.lhs == pytest.approx(finite_time_state(sys, u, 2.5), rel=1e-14)


def test_vector_output_zero_functionals():
    sys = DiagonalSystem((1, 2), (1, 1), 2)
    check = vector_output_norm(sys, np.zeros((2, 2)), [Indicator(1), Indicator(2)], 1.0)
    assert tuple(check) == (0.0, 0.0)


def test_vector_output_shapes():
    sys = DiagonalSystem((1, 2), (1, 1), 2)
    with pytest.raises(ShapeMismatch):
        vector_output_norm(sys, np.ones((3, 2)), [Indicator(1), Indicator(1)], 1.0)
    with pytest.raises(ShapeMismatch):
        vector_output_norm(sys, np.ones((2, 2)), [Indicator(1)], 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_vector_output_chain_bound(seed):
    rng = np.random.default_rng(seed)
    lam = rng.uniform(0.1, 3, 3) + 1j * rng.uniform(-3, 3, 3)
    sys = DiagonalSystem(tuple(lam), (1, 1, 1), float(rng.choice([1.5, 2, 3])))
    phi = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    u = [StepFunction((0, 0.5, 1.3, 2.0), tuple(rng.normal(size=3))) for _ in range(3)]
    assert vector_output_norm(sys, phi, u, float(rng.uniform(0.2, 3))).holds


# Minkowski


def test_minkowski_examples():
    rng = np.random.default_rng(7)
    row = rng.normal(size=(1, 50))
    single = minkowski_check(row, 2, 4, 0.1)
    assert single.lhs == pytest.approx(single.rhs, rel=1e-14)
    f = rng.normal(size=(5, 50))
    same = minkowski_check(f, 3, 3, 0.1)
    assert abs(same.lhs - same.rhs) <= 1e-12 * same.rhs
    assert minkowski_check(f, 2, 4, 0.1).holds
    with pytest.raises(ExponentOrder):
        minkowski_check(f, 4, 2, 0.1)


@given(st.integers(0, 2**32 - 1), st.floats(1, 3), st.floats(0, 4))
def test_minkowski_property(seed, p, extra):
    f = np.random.default_rng(seed).normal(size=(4, 20))
    assert minkowski_check(f, p, p + extra, 0.05).holds


def test_exponential_convolution_vectorized_over_time():
    sys = DiagonalSystem((1 + 2j, 0.3, 5 - 1j), (1, 1, 1), 2)
    u = TruncatedExponential(0.7 + 0.4j)
    times = np.geomspace(1e-3, 20, 17)
    stacked = u.convolve(sys.lam, times)
    assert stacked.shape == (17, 3)
    for k, t in enumerate(times):
        assert np.allclose(stacked[k], u.convolve(sys.lam, t), rtol=1e-15, atol=0)
