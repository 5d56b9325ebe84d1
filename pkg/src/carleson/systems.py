"""Diagonal control systems ``x' + A x = b u`` on ``l_q`` with ``A = diag(lam_n)``.

Inputs are restricted to analytic families whose convolutions with
``exp(-lam s)`` have closed forms, so every state below is exact up to
rounding; quadrature only enters the square-function norm.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    DivergentParameters,
    EmptyFamily,
    EmptySystem,
    ExponentOrder,
    InvalidParameters,
    InvariantViolation,
    SectorViolation,
    ShapeMismatch,
)
from .measures import DiscreteMeasure, HalfPlaneAtom, Interval, tent_measure
from .numerics import QuadratureSpec, integrate_semiinfinite

_ROUNDING = 1e-12


def lq_norm(values, q: float) -> float:
    """``(sum |v|^q)^(1/q)`` with compensated summation in index order."""
    mags = np.abs(np.asarray(values, dtype=complex).ravel())
    if mags.size == 0:
        return 0.0
    return math.fsum((mags**q).tolist()) ** (1.0 / q)


def phi1(w):
    """``(exp(w) - 1) / w`` for complex arrays, series near the origin."""
    w = np.asarray(w, dtype=complex)
    out = np.empty(w.shape, dtype=complex)
    small = np.abs(w) < 0.5
    ws = w[small]
    term = np.ones_like(ws)
    total = np.ones_like(ws)
    for k in range(2, 20):
        term = term * ws / k
        total = total + term
    out[small] = total
    wb = w[~small]
    out[~small] = (np.exp(wb) - 1.0) / wb
    return out


@dataclass(frozen=True)
class InequalityCheck:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + _ROUNDING) + 1e-300

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def __iter__(self):
        return iter((self.lhs, self.rhs))


@dataclass(frozen=True)
class DiagonalSystem:
    lambdas: tuple[complex, ...]
    b: tuple[complex, ...]
    q: float

    def __post_init__(self):
        lam = tuple(complex(v) for v in self.lambdas)
        b = tuple(complex(v) for v in self.b)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "b", b)
        if len(lam) != len(b):
            raise ShapeMismatch(f"{len(lam)} eigenvalues but {len(b)} input coefficients")
        for k, v in enumerate(lam):
            if not (v.real > 0 and math.isfinite(v.real) and math.isfinite(v.imag)):
                raise InvariantViolation(f"mode {k}: eigenvalue {v} must have positive real part")
        if not all(math.isfinite(v.real) and math.isfinite(v.imag) for v in b):
            raise InvariantViolation("input coefficients must be finite")
        if not self.q > 1:
            raise InvariantViolation(f"state exponent q must exceed 1, got {self.q}")

    def __len__(self):
        return len(self.lambdas)

    @property
    def lam(self) -> np.ndarray:
        return np.array(self.lambdas, dtype=complex)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array(self.b, dtype=complex)

    def scaled(self, kappa: complex) -> "DiagonalSystem":
        return DiagonalSystem(self.lambdas, tuple(kappa * v for v in self.b), self.q)

    def sector_angle(self) -> float:
        if not self.lambdas:
            raise EmptySystem("system has no modes")
        return max(abs(math.atan2(v.imag, v.real)) for v in self.lambdas)


# --- input signals ---------------------------------------------------------


class InputSignal(ABC):
    """Scalar input ``u`` supported in ``[0, inf)``."""

    @abstractmethod
    def __call__(self, s) -> np.ndarray:
        """Pointwise values ``u(s)`` (complex)."""

    @abstractmethod
    def lp_norm(self, p: float, horizon: float = math.inf) -> float:
        """``||u||_{L^p(0, horizon)}``."""

    @abstractmethod
    def convolve(self, lambdas, t: float) -> np.ndarray:
        """``int_0^t exp(-lam (t - s)) u(s) ds`` for each ``lam``."""

    @abstractmethod
    def laplace(self, lambdas, horizon: float = math.inf) -> np.ndarray:
        """``int_0^horizon exp(-lam s) u(s) ds`` for each ``lam``."""

    @abstractmethod
    def abs(self) -> "InputSignal":
        ...

    @abstractmethod
    def describe(self) -> dict:
        ...

    def support_end(self) -> float:
        return math.inf


@dataclass(frozen=True)
class TruncatedExponential(InputSignal):
    """``u(s) = exp(-conj(z) s)`` on ``[0, inf)``."""

    z: complex

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        if not self.z.real > 0:
            raise InvalidParameters(f"exponential probe needs Re z > 0, got {self.z}")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s >= 0, np.exp(-self.z.conjugate() * s), 0.0)

    def lp_norm(self, p: float, horizon: float = math.inf) -> float:
        a = p * self.z.real
        if math.isinf(horizon):
            return a ** (-1.0 / p)
        return (-math.expm1(-a * horizon) / a) ** (1.0 / p)

    def convolve(self, lambdas, t) -> np.ndarray:
        """Per-mode convolution at time ``t``; an array of times adds a leading axis."""
        lam = np.asarray(lambdas, dtype=complex)
        zc = self.z.conjugate()
        diff = lam - zc
        tt = np.asarray(t, dtype=float)[..., None]
        out = np.empty(tt.shape[:-1] + diff.shape, dtype=complex)
        # (exp(-zc t) - exp(-lam t)) / diff, factored so phi1 never sees Re > 0
        slow = diff.real >= 0
        out[..., slow] = tt * np.exp(-zc * tt) * phi1(-diff[slow] * tt)
        out[..., ~slow] = tt * np.exp(-lam[~slow] * tt) * phi1(diff[~slow] * tt)
        return out

    def laplace(self, lambdas, horizon: float = math.inf) -> np.ndarray:
        w = np.asarray(lambdas, dtype=complex) + self.z.conjugate()
        if math.isinf(horizon):
            return 1.0 / w
        return horizon * phi1(-w * horizon)

    def abs(self) -> "TruncatedExponential":
        return TruncatedExponential(complex(self.z.real, 0.0))

    def describe(self) -> dict:
        return {"kind": "exponential", "z": [self.z.real, self.z.imag]}


@dataclass(frozen=True)
class StepFunction(InputSignal):
    """Piecewise constant: ``values[k]`` on ``[breakpoints[k], breakpoints[k+1])``."""

    breakpoints: tuple[float, ...]
    values: tuple[complex, ...]

    def __post_init__(self):
        bp = tuple(float(v) for v in self.breakpoints)
        vals = tuple(complex(v) for v in self.values)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if len(bp) != len(vals) + 1:
            raise ShapeMismatch(f"{len(bp)} breakpoints need {len(bp) - 1} values, got {len(vals)}")
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise InvalidParameters("breakpoints must be strictly increasing")
        if bp and bp[0] < 0:
            raise InvalidParameters("inputs are supported in [0, inf)")
        if not all(math.isfinite(v) for v in bp):
            raise InvalidParameters("breakpoints must be finite")

    def _pieces(self, horizon: float):
        for (lo, hi), v in zip(zip(self.breakpoints, self.breakpoints[1:]), self.values):
            hi = min(hi, horizon)
            if hi > lo:
                yield lo, hi, v

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        padded = np.array((0j,) + self.values + (0j,))
        return padded[np.searchsorted(self.breakpoints, s, side="right")]

    def lp_norm(self, p: float, horizon: float = math.inf) -> float:
        return math.fsum(abs(v) ** p * (hi - lo) for lo, hi, v in self._pieces(horizon)) ** (1.0 / p)

    def convolve(self, lambdas, t: float) -> np.ndarray:
        lam = np.asarray(lambdas, dtype=complex)
        total = np.zeros(lam.shape, dtype=complex)
        for lo, hi, v in self._pieces(t):
            h = hi - lo
            total = total + v * np.exp(-lam * (t - hi)) * h * phi1(-lam * h)
        return total

    def laplace(self, lambdas, horizon: float = math.inf) -> np.ndarray:
        lam = np.asarray(lambdas, dtype=complex)
        total = np.zeros(lam.shape, dtype=complex)
        for lo, hi, v in self._pieces(horizon):
            h = hi - lo
            total = total + v * np.exp(-lam * lo) * h * phi1(-lam * h)
        return total

    def abs(self) -> "StepFunction":
        return StepFunction(self.breakpoints, tuple(abs(v) for v in self.values))

    def describe(self) -> dict:
        return {
            "kind": "step",
            "breakpoints": list(self.breakpoints),
            "values": [[v.real, v.imag] for v in self.values],
        }

    def support_end(self) -> float:
        return self.breakpoints[-1] if self.breakpoints else 0.0


def Indicator(tau: float) -> StepFunction:
    """``1_[0, tau)`` as a one-piece step function."""
    if not tau > 0:
        raise InvalidParameters(f"indicator length must be positive, got {tau}")
    return StepFunction((0.0, float(tau)), (1.0,))


# --- measures attached to a system -------------------------------------------


def poisson_measure(sys: DiagonalSystem) -> DiscreteMeasure:
    """Atoms ``|b_n|^q`` at ``lam_n``; zero coefficients are dropped."""
    return DiscreteMeasure(tuple(
        HalfPlaneAtom(lam.imag, lam.real, abs(b) ** sys.q)
        for lam, b in zip(sys.lambdas, sys.b) if b != 0
    ))


def reciprocal_measure(sys: DiagonalSystem) -> DiscreteMeasure:
    """Atoms ``|b_n / lam_n|^q`` at ``1 / lam_n``."""
    atoms = []
    for lam, b in zip(sys.lambdas, sys.b):
        if b == 0:
            continue
        inv = 1.0 / lam
        atoms.append(HalfPlaneAtom(inv.imag, inv.real, abs(b / lam) ** sys.q))
    return DiscreteMeasure(tuple(atoms))


def realpart_measure(sys: DiagonalSystem) -> DiscreteMeasure:
    return DiscreteMeasure(tuple(
        HalfPlaneAtom(0.0, 1.0 / lam.real, abs(b / lam.real) ** sys.q)
        for lam, b in zip(sys.lambdas, sys.b) if b != 0
    ))


def sandwich_check(sys: DiagonalSystem, omega: float, r: float) -> tuple[InequalityCheck, InequalityCheck]:
    """``mu(T(omega, r)) <= nu(T(0, r)) <= cos(theta)^-q mu(T(0, |omega| + r))``.

    ``mu`` is the reciprocal measure, ``nu`` the real-part measure and
    ``theta`` the sector half-angle. This is the comparison with unchanged
    radii; it fails for modes whose argument is on the wrong side of
    ``pi/4``, see :func:`sandwich_check_dilated`.
    """
    mu, nu = reciprocal_measure(sys), realpart_measure(sys)
    low = tent_measure(mu, Interval(omega, r))
    mid = tent_measure(nu, Interval(0.0, r))
    high = math.cos(sys.sector_angle()) ** -sys.q * tent_measure(mu, Interval(0.0, abs(omega) + r))
    return InequalityCheck(low, mid), InequalityCheck(mid, high)


SANDWICH_DILATION = 0.5 * (1.0 + math.sqrt(2.0))


def sandwich_check_dilated(sys: DiagonalSystem, omega: float, r: float) -> tuple[InequalityCheck, InequalityCheck]:
    """Radius-dilated comparisons that do hold on a sector of half-angle ``theta``.

    ``mu(T(omega, r)) <= nu(T(0, r / cos^2 theta))`` and
    ``nu(T(0, r)) <= cos(theta)^-q mu(T(0, c r))`` with
    ``c = max_phi cos(phi)(cos(phi) + sin(phi)) = (1 + sqrt 2) / 2``.
    """
    mu, nu = reciprocal_measure(sys), realpart_measure(sys)
    cos_t = math.cos(sys.sector_angle())
    first = InequalityCheck(tent_measure(mu, Interval(omega, r)),
                            tent_measure(nu, Interval(0.0, r / cos_t**2)))
    second = InequalityCheck(tent_measure(nu, Interval(0.0, r)),
                             cos_t**-sys.q * tent_measure(mu, Interval(0.0, SANDWICH_DILATION * r)))
    return first, second


# --- admissibility functionals --------------------------------------------------


def _as_complex(z) -> complex:
    return complex(z)


def output_norm_exponential(sys: DiagonalSystem, z) -> float:
    """``||(b_n / (lam_n + conj z))_n||_q``: the state reached by the probe ``exp(-conj(z) s)``."""
    z = _as_complex(z)
    if not z.real > 0:
        raise InvalidParameters(f"need Re z > 0, got {z}")
    return lq_norm(sys.coeffs / (sys.lam + z.conjugate()), sys.q)


def finite_time_state(sys: DiagonalSystem, u: InputSignal, t: float) -> float:
    """``||int_0^t S(t - s) b u(s) ds||_q``."""
    if not t > 0:
        raise InvalidParameters(f"time must be positive, got {t}")
    return lq_norm(sys.coeffs * u.convolve(sys.lam, t), sys.q)


def laplace_state(sys: DiagonalSystem, u: InputSignal, horizon: float = math.inf) -> float:
    """``||int_0^horizon S(s) b u(s) ds||_q``; tends to the infinite-time output as ``horizon`` grows."""
    return lq_norm(sys.coeffs * u.laplace(sys.lam, horizon), sys.q)


@dataclass(frozen=True)
class ProbeReport:
    ratio: float
    witness_input: dict
    p: float
    time_horizon: float
    witness_time: Optional[float] = None
    label: str = "probe sup (lower bound for the admissibility constant)"

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "ratio": self.ratio,
            "witness_input": self.witness_input,
            "witness_time": self.witness_time,
            "p": self.p,
            "time_horizon": "inf" if math.isinf(self.time_horizon) else self.time_horizon,
        }


def admissibility_probe_sup(
    sys: DiagonalSystem,
    p: float,
    family: Sequence[InputSignal],
    horizon: float = math.inf,
    n_times: int = 200,
) -> ProbeReport:
    """Largest output-to-input ratio over a family of probes.

    Infinite horizon uses the full Laplace transform of each probe; a finite
    horizon scans ``n_times`` log-spaced times in ``[horizon * 1e-4, horizon]``.
    """
    family = list(family)
    if not family:
        raise EmptyFamily("admissibility probe needs at least one input")
    if not p >= 1:
        raise InvalidParameters(f"p must be at least 1, got {p}")
    best, witness, when = -1.0, None, None
    if math.isinf(horizon):
        for u in family:
            norm = u.lp_norm(p)
            ratio = laplace_state(sys, u) / norm if norm > 0 else 0.0
            if ratio > best:
                best, witness = ratio, u
    else:
        times = np.geomspace(horizon * 1e-4, horizon, n_times)
        for u in family:
            if isinstance(u, TruncatedExponential):
                # all times at once: closed-form norms and states
                a = p * u.z.real
                norms = (-np.expm1(-a * times) / a) ** (1.0 / p)
                states = np.sum(np.abs(sys.coeffs * u.convolve(sys.lam, times)) ** sys.q,
                                axis=-1) ** (1.0 / sys.q)
                ratios = states / norms
                t_k = float(times[int(np.argmax(ratios))])
                ratio = finite_time_state(sys, u, t_k) / u.lp_norm(p, t_k)
                if ratio > best:
                    best, witness, when = ratio, u, t_k
                continue
            for t in times:
                norm = u.lp_norm(p, float(t))
                if norm == 0:
                    continue
                ratio = finite_time_state(sys, u, float(t)) / norm
                if ratio > best:
                    best, witness, when = ratio, u, float(t)
    return ProbeReport(max(best, 0.0), witness.describe() if witness else {}, float(p),
                       float(horizon), when)


def convolution_majorant_check(sys: DiagonalSystem, u: InputSignal, tau: float) -> InequalityCheck:
    """State at ``tau`` against the sectorial majorant with kernel ``r exp(-r x)``.

    ``majorant = (1/cos theta) * (sum |b_n/lam_n|^q ((Phi_{1/r_n} * |u|)(tau))^q)^(1/q)``
    with ``r_n = Re lam_n`` and ``theta`` the sector half-angle of the spectrum.
    """
    theta = sys.sector_angle()
    if theta >= 0.5 * math.pi:
        raise SectorViolation(f"spectrum not inside a sector of half-angle < pi/2 (theta={theta})")
    lam = sys.lam
    lhs = finite_time_state(sys, u, tau)
    r = lam.real
    smoothed = r * u.abs().convolve(r, tau).real
    majorant = lq_norm(sys.coeffs / lam * smoothed, sys.q) / math.cos(theta)
    return InequalityCheck(lhs, majorant)


def xminus_theta_norm(sys: DiagonalSystem, theta: float) -> float:
    """``(sum |b_n|^q / |1 + lam_n|^(theta q))^(1/q)``, the ``X_{-theta}`` norm of ``b``."""
    if theta < 0:
        raise InvalidParameters(f"theta must be non-negative, got {theta}")
    return lq_norm(sys.coeffs / np.abs(1.0 + sys.lam) ** theta, sys.q)


def dyadic_tail_bound(geometric_c: float, theta: float, q: float, p_prime: float,
                      n_range: Iterable[int]) -> tuple[float, float]:
    """Dyadic ring bound ``C sum_n 2^(nq/p') / (1 + 2^(n theta q))`` and its tail.

    Returns ``(partial_sum, tail)`` where ``tail`` bounds the terms beyond
    the last ``n`` by a geometric series with ratio ``2^(q/p' - theta q)``.
    """
    if theta <= 1.0 / p_prime:
        raise DivergentParameters(f"ring sum diverges for theta={theta} <= 1/p'={1.0 / p_prime}")
    ns = list(n_range)
    if geometric_c == 0 or not ns:
        return 0.0, 0.0
    terms = [2.0 ** (n * q / p_prime) / (1.0 + 2.0 ** (n * theta * q)) for n in ns]
    rho = 2.0 ** (q / p_prime - theta * q)
    tail = geometric_c * rho ** (max(ns) + 1) / (1.0 - rho)
    return geometric_c * math.fsum(terms), tail


@dataclass(frozen=True)
class WeissReport:
    sup: float
    witness: float

    def to_dict(self) -> dict:
        return {"weiss_sup": self.sup, "witness_lambda": self.witness}


def default_lambda_grid(sys: DiagonalSystem, n: int = 200) -> np.ndarray:
    lam = sys.lam
    return np.geomspace(float(lam.real.min()) / 100, 100 * float(np.abs(lam).max()), n)


def weiss_sup(sys: DiagonalSystem, p: float, lambda_grid=None) -> WeissReport:
    """``sup_s s^(1/p) ||(b_n / (s + lam_n))||_q`` over ``s > 0``.

    The grid maximum is polished by a bounded scalar search between its
    neighbours; the result is still attained, hence a lower bound.
    """
    if len(sys) == 0:
        raise EmptySystem("system has no modes")
    grid = default_lambda_grid(sys) if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    lam, b = sys.lam, sys.coeffs

    def value(s: float) -> float:
        return s ** (1.0 / p) * lq_norm(b / (s + lam), sys.q)

    vals = np.array([value(float(s)) for s in grid])
    k = int(np.argmax(vals))
    best, witness = float(vals[k]), float(grid[k])
    if best > 0 and len(grid) > 2:
        lo = math.log(grid[max(k - 1, 0)])
        hi = math.log(grid[min(k + 1, len(grid) - 1)])
        res = minimize_scalar(lambda v: -value(math.exp(v)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        if -res.fun > best:
            best, witness = float(-res.fun), math.exp(res.x)
    return WeissReport(best, witness)


def square_function_norm(sys: DiagonalSystem, x, p: float,
                         spec: QuadratureSpec = QuadratureSpec(1e-12, 1e-10)) -> float:
    """``(int_0^inf ||((t lam_n)^(1/2) exp(-t lam_n) x_n)||_q^p dt/t)^(1/p)``."""
    xs = np.asarray(x, dtype=complex)
    if xs.shape != (len(sys),):
        raise ShapeMismatch(f"state vector has shape {xs.shape}, expected ({len(sys)},)")
    if not p >= 1:
        raise InvalidParameters(f"p must be at least 1, got {p}")
    keep = xs != 0
    if not keep.any():
        return 0.0
    lam, xs = sys.lam[keep], xs[keep]
    q = sys.q

    def integrand(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        mags = np.sqrt(t[:, None] * np.abs(lam)) * np.exp(-t[:, None] * lam.real) * np.abs(xs)
        return np.sum(mags**q, axis=1) ** (p / q) / t

    decay = p * float(lam.real.min())
    scales = sorted({1.0 / float(v) for v in np.abs(lam)})
    res = integrate_semiinfinite(integrand, decay, spec, points=scales, vectorized=True)
    return max(res.value, 0.0) ** (1.0 / p)


def vector_output_norm(sys: DiagonalSystem, functionals, u: Sequence[StepFunction],
                       t: float) -> InequalityCheck:
    """Vector-valued input through ``(B u)_n = <phi_n, u>``.

    ``lhs`` is the exact state norm; ``rhs`` is the Hoelder majorant
    ``(sum_n ||phi_n||_{q'}^q sum_j |int e^{-lam_n (t-s)} u_j(s) ds|^q)^(1/q)``.
    ``sys.b`` is not used: the functionals play its role.
    """
    phi = np.atleast_2d(np.asarray(functionals, dtype=complex))
    if phi.shape[0] != len(sys):
        raise ShapeMismatch(f"{phi.shape[0]} functionals for {len(sys)} modes")
    if phi.shape[1] != len(u):
        raise ShapeMismatch(f"functionals have {phi.shape[1]} columns, input has {len(u)} coordinates")
    q = sys.q
    q_dual = q / (q - 1.0)
    conv = np.stack([uj.convolve(sys.lam, t) for uj in u], axis=1)  # modes x coordinates
    direct = lq_norm(np.sum(phi * conv, axis=1), q)
    row_norms = np.array([lq_norm(row, q_dual) for row in phi])
    inner = np.array([lq_norm(row, q) for row in conv])
    return InequalityCheck(direct, lq_norm(row_norms * inner, q))


def minkowski_check(f, p: float, q: float, dt: float) -> InequalityCheck:
    """``||f||_{l_q(L^p)} <= ||f||_{L^p(l_q)}`` for samples ``f[j, k]`` on a uniform time grid."""
    if p > q:
        raise ExponentOrder(f"the inequality needs p <= q, got p={p}, q={q}")
    if not dt > 0:
        raise InvalidParameters(f"dt must be positive, got {dt}")
    mags = np.abs(np.atleast_2d(np.asarray(f, dtype=complex)))
    time_norms = [math.fsum((row**p * dt).tolist()) ** (1.0 / p) for row in mags]
    lhs = math.fsum(v**q for v in time_norms) ** (1.0 / q)
    coord_norms = [math.fsum((col**q).tolist()) ** (1.0 / q) for col in mags.T]
    rhs = math.fsum(v**p * dt for v in coord_norms) ** (1.0 / p)
    return InequalityCheck(lhs, rhs)
