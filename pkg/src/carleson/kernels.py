"""Reproducing kernels ``k_z(lam) = 1 / (lam + conj(z))`` on the right half-plane."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np

from .errors import EmptyMeasure, InvalidGrid, InvalidParameters
from .measures import DiscreteMeasure, lbeta_norm
from .numerics import QuadratureSpec, integrate_adaptive

EPSILON_1 = 0.5


@dataclass(frozen=True)
class HalfPlanePoint:
    re: float
    im: float = 0.0

    def __post_init__(self):
        if not self.re > 0:
            raise InvalidParameters(f"point must lie in the right half-plane, got re={self.re}")

    @classmethod
    def from_complex(cls, z: complex) -> "HalfPlanePoint":
        return cls(float(z.real), float(z.imag))

    def __complex__(self):
        return complex(self.re, self.im)


@dataclass(frozen=True)
class ZGrid:
    """Probe points: ``n_re`` log-spaced real parts times ``n_im`` imaginary parts."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    n_re: int = 160
    n_im: int = 161

    def __post_init__(self):
        if not (0 < self.re_min < self.re_max) or self.im_max < self.im_min:
            raise InvalidGrid(f"bad z-grid bounds {self}")
        if self.n_re < 3 or self.n_im < 3:
            raise InvalidGrid("z-grid needs at least 3 points per axis")

    @classmethod
    def covering(cls, mu: DiscreteMeasure, n_re: int = 160, n_im: int = 161) -> "ZGrid":
        if len(mu) == 0:
            raise EmptyMeasure("cannot size a z-grid for an empty measure")
        reach = float(np.max(mu.t + np.abs(mu.x)))
        half = float(np.max(np.abs(mu.x)) + np.max(mu.t))
        # the ratio decays only like a power of Re z, so pad two decades each way
        return cls(float(mu.t.min()) / 100, 100 * reach, -10 * half, 10 * half, n_re, n_im)

    def axes(self):
        return (np.geomspace(self.re_min, self.re_max, self.n_re),
                np.linspace(self.im_min, self.im_max, self.n_im))

    def describe(self) -> str:
        return (f"re: {self.n_re} log-spaced in [{self.re_min:.6g}, {self.re_max:.6g}]; "
                f"im: {self.n_im} uniform in [{self.im_min:.6g}, {self.im_max:.6g}]")


@dataclass(frozen=True)
class RktReport:
    sup_ratio: float
    witness_z: Optional[HalfPlanePoint]
    grid_description: str
    grid_too_small: bool = False
    extra_points: int = 0

    def to_dict(self) -> dict:
        return {
            "sup_ratio": self.sup_ratio,
            "witness_re": None if self.witness_z is None else self.witness_z.re,
            "witness_im": None if self.witness_z is None else self.witness_z.im,
            "grid": self.grid_description,
            "extra_points": self.extra_points,
            "flags": ["grid too small"] if self.grid_too_small else [],
        }


def _dual(p: float) -> float:
    return p / (p - 1.0)


@lru_cache(maxsize=64)
def _cp_cached(p: float, abs_tol: float, rel_tol: float) -> float:
    # t = tan(theta) turns int_R (1+t^2)^(-p/2) dt into 2 int_0^{pi/2} cos^(p-2);
    # with phi = pi/2 - theta = v^(1/(p-1)) the endpoint singularity disappears
    spec = QuadratureSpec(abs_tol, rel_tol, max_subdivisions=5000)
    if p >= 2:
        res = integrate_adaptive(lambda th: np.cos(th) ** (p - 2.0), 0.0, 0.5 * math.pi, spec,
                                 vectorized=True)
    else:
        m = 1.0 / (p - 1.0)

        def smooth(v):
            phi = v**m
            return (np.sin(phi) / phi) ** (p - 2.0) * m

        res = integrate_adaptive(smooth, 0.0, (0.5 * math.pi) ** (p - 1.0), spec, vectorized=True)
    return (2.0 * res.value) ** (1.0 / p)


def cp_constant(p: float, spec: QuadratureSpec = QuadratureSpec(1e-13, 1e-13)) -> float:
    """``C_p = (int_R (1 + t^2)^(-p/2) dt)^(1/p)``."""
    if not p > 1:
        raise InvalidParameters(f"p must exceed 1, got {p}")
    return _cp_cached(float(p), spec.abs_tol, spec.rel_tol)


def repkernel_hp_norm(z: HalfPlanePoint, p: float) -> float:
    """Closed form ``C_p * Re(z)^(-1/p')``."""
    return cp_constant(p) * z.re ** (-1.0 / _dual(p))


def repkernel_hp_norm_quadrature(z: HalfPlanePoint, p: float,
                                 spec: QuadratureSpec = QuadratureSpec(1e-12, 1e-10)) -> float:
    """``||k_z||_{H^p}`` as the boundary integral of ``|k_z(iy)|^p`` over the imaginary axis."""
    def modulus(y):
        return 1.0 / np.hypot(z.re, np.asarray(y) - z.im)
    return lbeta_norm(modulus, p, (-math.inf, math.inf), spec,
                      points=(z.im - z.re, z.im, z.im + z.re), vectorized=True)


def _kernel_sums(mu: DiscreteMeasure, q: float, re, im) -> np.ndarray:
    """``sum_n w_n |lam_n + conj(z)|^(-q)`` for arrays of probe points."""
    re = np.asarray(re, dtype=float)
    im = np.asarray(im, dtype=float)
    out = np.empty(re.shape)
    flat_re, flat_im, flat_out = re.ravel(), im.ravel(), out.reshape(-1)
    step = max(1, 2_000_000 // max(len(mu), 1))
    for k in range(0, flat_re.size, step):
        sl = slice(k, k + step)
        dist = np.hypot(mu.t[None, :] + flat_re[sl, None], mu.x[None, :] - flat_im[sl, None])
        flat_out[sl] = np.power(dist, -q) @ mu.w
    return out


def repkernel_lq_mu_norm(z: HalfPlanePoint, q: float, mu: DiscreteMeasure) -> float:
    if len(mu) == 0:
        return 0.0
    terms = [a.w * abs(complex(a.t, a.x) + complex(z.re, -z.im)) ** (-q) for a in mu.atoms]
    return math.fsum(terms) ** (1.0 / q)


def rkt_sup(
    mu: DiscreteMeasure,
    p: float,
    q: float,
    z_grid: Optional[ZGrid] = None,
    extra_points: Iterable[HalfPlanePoint] = (),
) -> RktReport:
    """Sup of ``||k_z||_{L^q(mu)} / ||k_z||_{H^p}`` over probe points ``z``.

    ``extra_points`` are probed in addition to the grid (e.g. tent apexes).
    The report is flagged when the ratio on the grid boundary exceeds half the
    interior maximum, a sign the sup may lie outside the grid.
    """
    if not (p > 1 and q > 1):
        raise InvalidParameters(f"need p, q > 1, got {p}, {q}")
    if len(mu) == 0:
        return RktReport(0.0, None, "empty measure")
    grid = z_grid if z_grid is not None else ZGrid.covering(mu)
    re_axis, im_axis = grid.axes()
    re_g, im_g = np.meshgrid(re_axis, im_axis, indexing="ij")
    cp = cp_constant(p)
    ratio = _kernel_sums(mu, q, re_g, im_g) ** (1.0 / q) / (cp * re_g ** (-1.0 / _dual(p)))
    i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    best, witness = float(ratio[i, j]), HalfPlanePoint(float(re_axis[i]), float(im_axis[j]))
    boundary = max(ratio[0].max(), ratio[-1].max(), ratio[:, 0].max(), ratio[:, -1].max())
    interior = ratio[1:-1, 1:-1].max()
    too_small = bool(boundary > 0.5 * interior)
    extras = list(extra_points)
    if extras:
        e_re = np.array([z.re for z in extras])
        e_im = np.array([z.im for z in extras])
        e_ratio = _kernel_sums(mu, q, e_re, e_im) ** (1.0 / q) / (cp * e_re ** (-1.0 / _dual(p)))
        k = int(np.argmax(e_ratio))
        if e_ratio[k] > best:
            best, witness = float(e_ratio[k]), extras[k]
    return RktReport(best, witness, grid.describe(), too_small, len(extras))


def geometric_bound_from_kernel_ratio(m: float, p: float) -> float:
    """Geometric ``p/q``-Carleson constant implied by a kernel-ratio bound ``m``.

    ``mu(T)**(p/q) / |I| <= 2**(p-1) * m**p * C_p**p``.
    """
    return 2.0 ** (p - 1.0) * m**p * cp_constant(p) ** p


def epsilon_d_constant() -> float:
    """Poisson mass of the unit interval at height 1, ``(2/pi) * arctan(1)``."""
    return EPSILON_1
