"""Reciprocal systems ``z' + A^{-1} z = A^{-1} b u`` for diagonal ``A``.

The inverse semigroup acts on mode ``n`` as ``exp(-t / lam_n)``. Bessel-kernel
representations of that semigroup against ``exp(-lam s)`` are checked here
mode by mode, and the finite-time constant ``C_T`` is evaluated by nested
quadrature.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import BesselOverflow, InvalidParameters
from .numerics import (
    LOG_DBL_MAX,
    QuadratureSpec,
    bessel_inu_scaled,
    bessel_j1,
    bessel_jnu,
    integrate_adaptive,
    integrate_semiinfinite,
)
from .systems import DiagonalSystem, InequalityCheck, InputSignal, ProbeReport, lq_norm

VARIANTS = ("zwart", "half", "power", "power_corrected")
IDENTITY_SPEC = QuadratureSpec(1e-11, 1e-10, max_subdivisions=4000)


def inverse_state(sys: DiagonalSystem, t: float) -> np.ndarray:
    """Modes ``exp(-t / lam_n)`` of the inverse semigroup."""
    if t < 0:
        raise InvalidParameters(f"time must be non-negative, got {t}")
    return np.exp(-t / sys.lam)


@dataclass(frozen=True)
class BesselIdentityReport:
    lam: complex
    t: float
    variant: str
    nu: Optional[float]
    lhs: complex
    rhs: complex
    residual: float
    error_estimate: float

    def to_dict(self) -> dict:
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "t": self.t,
            "variant": self.variant,
            "nu": self.nu,
            "lhs": [self.lhs.real, self.lhs.imag],
            "rhs": [self.rhs.real, self.rhs.imag],
            "residual": self.residual,
            "error_estimate": self.error_estimate,
        }


def _growth_cutoff(a: float, t: float, abs_tol: float) -> float:
    """Smallest ``s`` with ``a s - 2 sqrt(s t) = 40 + |ln tol|``."""
    k = 40.0 + abs(math.log(abs_tol))
    u = (math.sqrt(t) + math.sqrt(t + a * k)) / a
    return u * u


def _power_integrand(lam: complex, t: float, nu: float):
    def f(s):
        s = np.asarray(s, dtype=float)
        x = 2.0 * np.sqrt(s * t)
        # I_nu(x) exp(-lam s) = I_nu_scaled(x) exp(x - lam s)
        return (t / s) ** (0.5 * nu) * bessel_inu_scaled(nu, x) * np.exp(x - lam * s)
    return f


def _jnu_integrand(lam: complex, t: float, nu: float):
    def f(s):
        s = np.asarray(s, dtype=float)
        return (s / t) ** (0.5 * nu) * bessel_jnu(nu, 2.0 * np.sqrt(s * t)) * np.exp(-lam * s)
    return f


def bessel_identity_residual(
    lam: complex,
    t: float,
    variant: str,
    spec: QuadratureSpec = IDENTITY_SPEC,
    nu: float = 0.0,
) -> BesselIdentityReport:
    """Scalar form of a Bessel representation of ``exp(-t / lam)``.

    zwart:  ``exp(-t/lam) = 1 - int sqrt(t/s) J_1(2 sqrt(st)) exp(-lam s) ds``
    half:   ``lam^(-1/2) exp(-t/lam) = int (pi s)^(-1/2) cos(2 sqrt(st)) exp(-lam s) ds``
    power:  ``lam^(-nu-1) exp(-t/lam) = int (t/s)^(nu/2) I_nu(2 sqrt(st)) exp(-lam s) ds``
    power_corrected:
            ``lam^(-nu-1) exp(-t/lam) = int (s/t)^(nu/2) J_nu(2 sqrt(st)) exp(-lam s) ds``

    ``power`` is the form with ``I_nu`` and ``(t/s)``; it does not hold for
    ``t > 0``: with ``I_nu`` the transform is ``lam^(-nu-1) exp(+t/lam)`` and
    needs ``(s/t)``. ``power_corrected`` is the valid representation of the
    inverse semigroup. Powers of ``lam`` use the principal branch.
    """
    lam = complex(lam)
    if not lam.real > 0:
        raise InvalidParameters(f"need Re lambda > 0, got {lam}")
    if t < 0:
        raise InvalidParameters(f"t must be non-negative, got {t}")
    if variant not in VARIANTS:
        raise InvalidParameters(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    a = lam.real
    err = 0.0
    if variant == "zwart":
        lhs = cmath.exp(-t / lam)
        if t == 0:
            rhs = 1.0 + 0j
        else:
            def f(s):
                s = np.asarray(s, dtype=float)
                return np.sqrt(t / s) * bessel_j1(2.0 * np.sqrt(s * t)) * np.exp(-lam * s)
            res = integrate_semiinfinite(f, a, spec, vectorized=True)
            rhs, err = 1.0 - res.value, res.error_estimate
        used_nu = None
    elif variant == "half":
        lhs = lam ** -0.5 * cmath.exp(-t / lam)

        def f(s):
            s = np.asarray(s, dtype=float)
            return np.cos(2.0 * np.sqrt(s * t)) * np.exp(-lam * s) / np.sqrt(math.pi * s)
        res = integrate_semiinfinite(f, a, spec, vectorized=True)
        rhs, err = res.value, res.error_estimate
        used_nu = None
    elif variant == "power":
        if not nu > -1:
            raise InvalidParameters(f"order nu must exceed -1, got {nu}")
        lhs = lam ** (-nu - 1.0) * cmath.exp(-t / lam)
        used_nu = float(nu)
        if t == 0:
            # limit of (t/s)^(nu/2) I_nu(2 sqrt(st)) = t^nu / Gamma(nu + 1)
            if nu == 0:
                rhs = 1.0 / lam
            elif nu > 0:
                rhs = 0j
            else:
                raise InvalidParameters("the stated power kernel is unbounded at t = 0 for nu < 0")
        else:
            s_max = _growth_cutoff(a, t, spec.abs_tol)
            decay = a - math.sqrt(t / s_max)
            res = integrate_semiinfinite(_power_integrand(lam, t, nu), decay, spec,
                                         s_max=s_max, vectorized=True)
            rhs, err = res.value, res.error_estimate
    else:
        if not nu >= 0:
            raise InvalidParameters(f"corrected power form needs nu >= 0, got {nu}")
        lhs = lam ** (-nu - 1.0) * cmath.exp(-t / lam)
        used_nu = float(nu)
        if t == 0:
            rhs = lam ** (-nu - 1.0)  # kernel tends to s^nu / Gamma(nu + 1)
        else:
            res = integrate_semiinfinite(_jnu_integrand(lam, t, nu), a, spec, vectorized=True)
            rhs, err = res.value, res.error_estimate
    return BesselIdentityReport(lam, float(t), variant, used_nu, complex(lhs), complex(rhs),
                                abs(lhs - rhs), float(err))


DEFAULT_LAMBDAS = (1 + 0j, 2 + 1j, 0.5 + 2j, 3 - 1j)
DEFAULT_TIMES = (0.0, 0.1, 1.0, 5.0)
DEFAULT_NUS = (0.0, 0.5, 1.0)


def identity_grid(variants=("zwart", "half", "power"), lambdas=DEFAULT_LAMBDAS,
                  times=DEFAULT_TIMES, nus=DEFAULT_NUS,
                  spec: QuadratureSpec = IDENTITY_SPEC) -> list[BesselIdentityReport]:
    reports = []
    for variant in variants:
        orders = nus if variant.startswith("power") else (0.0,)
        for lam in lambdas:
            for t in times:
                for nu in orders:
                    reports.append(bessel_identity_residual(lam, t, variant, spec, nu))
    return reports


# --- the finite-time constant C_T ---------------------------------------------


def _check_ct_args(p: float, T: float):
    if not p >= 1:
        raise InvalidParameters(f"p must be at least 1, got {p}")
    if not T > 0:
        raise InvalidParameters(f"T must be positive, got {T}")


def _f_scaled(t: float, p: float, T: float, spec: QuadratureSpec) -> float:
    """``f(t) * exp(-2 p sqrt(tT))`` with ``f(t) = int_0^T I_0(2 sqrt(st))^p ds``.

    Substituting ``s = T v^2`` keeps the integrand smooth at ``s = 0``.
    """
    top = 2.0 * math.sqrt(t * T)

    def g(v):
        v = np.asarray(v, dtype=float)
        x = top * v
        return 2.0 * T * v * np.exp(p * (x - top)) * bessel_inu_scaled(0.0, x) ** p

    return integrate_adaptive(g, 0.0, 1.0, spec, vectorized=True).value


def f_value(t: float, p: float, T: float, spec: QuadratureSpec = QuadratureSpec(1e-13, 1e-11)) -> float:
    """``f(t) = ||s -> I_0(2 sqrt(st))||_{L^p(0,T)}^p``."""
    _check_ct_args(p, T)
    if not t > 0:
        raise InvalidParameters(f"t must be positive, got {t}")
    log_scale = 2.0 * p * math.sqrt(t * T)
    if log_scale > LOG_DBL_MAX:
        raise BesselOverflow(f"f({t}) exceeds the floating-point range")
    return _f_scaled(t, p, T, spec) * math.exp(log_scale)


def f_bound_stated(t: float, p: float, T: float) -> float:
    """``(2 / (t p^2)) (1 + e^{p sqrt(tT)} (p sqrt(tT) - 1))``; fails for larger ``tT``."""
    y = p * math.sqrt(t * T)
    return 2.0 / (t * p * p) * (1.0 + math.exp(y) * (y - 1.0))


def f_bound_corrected(t: float, p: float, T: float) -> float:
    """``(1 / (2 t p^2)) (1 + e^{2p sqrt(tT)} (2p sqrt(tT) - 1))``.

    This is ``int_0^T exp(2p sqrt(st)) ds`` exactly, which dominates ``f``
    because ``I_0(x) <= e^x``.
    """
    y = 2.0 * p * math.sqrt(t * T)
    return 1.0 / (2.0 * t * p * p) * (1.0 + math.exp(y) * (y - 1.0))


def f_bound_check(t: float, p: float, T: float,
                  spec: QuadratureSpec = QuadratureSpec(1e-13, 1e-11)) -> InequalityCheck:
    """``f(t)`` against the stated bound; see :func:`f_bound_corrected` for a valid one."""
    return InequalityCheck(f_value(t, p, T, spec), f_bound_stated(t, p, T))


def c_T_constant(p: float, epsilon: float, T: float,
                 spec: QuadratureSpec = QuadratureSpec(1e-12, 1e-9)) -> float:
    """``|| t -> e^{-eps t} ||s -> I_0(2 sqrt(st))||_{L^p(0,T)} ||_{L^p(0,inf)}``.

    ``p = math.inf`` gives ``sup_t e^{-eps t} I_0(2 sqrt(tT))``.
    """
    if not epsilon > 0:
        raise InvalidParameters(f"epsilon must be positive, got {epsilon}")
    _check_ct_args(p, T)
    if math.isinf(p):
        return _c_T_sup(epsilon, T)
    # the outer integrand behaves like exp(-eps p t + 2 p sqrt(tT)); its peak
    # is exp(p T / eps) at t = T / eps^2
    if p * T / epsilon > LOG_DBL_MAX:
        raise BesselOverflow(f"C_T^p exceeds the floating-point range (p T / eps = {p * T / epsilon})")
    inner = QuadratureSpec(1e-14, 1e-12)

    def outer(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        vals = [_f_scaled(float(v), p, T, inner) for v in t]
        return np.exp(-epsilon * p * t + 2.0 * p * np.sqrt(t * T)) * np.array(vals)

    k = 40.0 + abs(math.log(spec.abs_tol))
    a = epsilon * p
    u = (p * math.sqrt(T) + math.sqrt(p * p * T + a * k)) / a
    s_max = u * u
    peak = T / epsilon**2
    res = integrate_semiinfinite(outer, a / 2.0, spec, s_max=s_max,
                                 points=[peak] if peak < s_max else (), vectorized=True)
    return res.value ** (1.0 / p)


def _c_T_sup(epsilon: float, T: float) -> float:
    def log_g(t: float) -> float:
        x = 2.0 * math.sqrt(t * T)
        return -epsilon * t + x + math.log(bessel_inu_scaled(0.0, x))

    grid = np.concatenate([[0.0], np.geomspace(1e-6, 1e3, 400) * max(T / epsilon**2, 1.0 / epsilon)])
    vals = np.array([log_g(float(v)) for v in grid])
    k = int(np.argmax(vals))
    best = float(vals[k])
    if 0 < k < len(grid) - 1:
        res = minimize_scalar(lambda v: -log_g(v), bounds=(grid[k - 1], grid[k + 1]),
                              method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    if best > LOG_DBL_MAX:
        raise BesselOverflow("C_T exceeds the floating-point range")
    return math.exp(best)


# --- reciprocal probe ----------------------------------------------------------


def reciprocal_probe(sys: DiagonalSystem, u: InputSignal, T: float, p_prime: float,
                     spec: QuadratureSpec = QuadratureSpec(1e-13, 1e-11)) -> ProbeReport:
    """``||(int_0^T e^{-s/lam_n} (b_n/lam_n) u(s) ds)_n||_q / ||u||_{L^{p'}(0,T)}`` by quadrature."""
    if not T > 0:
        raise InvalidParameters(f"T must be positive, got {T}")
    norm = u.lp_norm(p_prime, T)
    if norm == 0:
        return ProbeReport(0.0, u.describe(), float(p_prime), float(T))
    pts = [v for v in getattr(u, "breakpoints", ()) if 0 < v < T]
    comps = []
    for lam, b in zip(sys.lambdas, sys.b):
        if b == 0:
            comps.append(0j)
            continue

        def f(s, lam=lam):
            s = np.asarray(s, dtype=float)
            return np.exp(-s / lam) * u(s)

        comps.append(b / lam * integrate_adaptive(f, 0.0, T, spec, points=pts, vectorized=True).value)
    return ProbeReport(lq_norm(comps, sys.q) / norm, u.describe(), float(p_prime), float(T))
