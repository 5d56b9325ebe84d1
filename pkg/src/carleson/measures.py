"""Finite atomic measures on the upper half-plane and their Carleson functionals.

Coordinates: a complex point ``lam = t + i x`` with ``t > 0`` is stored as an
atom at boundary position ``x`` and height ``t``. The closed tent over the
interval ``(omega - r, omega + r)`` is ``{(x, t): t + |x - omega| <= r}``, so an
atom lies in a tent exactly when its *shadow* ``[x - t, x + t]`` lies inside
the tent's base interval. All extremal searches below work on shadows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import EmptyMeasure, InvalidGrid, InvalidParameters, InvariantViolation
from .numerics import QuadratureSpec, integrate_adaptive, poisson_kernel

_EPS = np.finfo(float).eps
_TIE_RTOL = 1e-12
_CHUNK = 128


def _slack(omega, r):
    # closed-tent tolerance: a few ulps of the tent's coordinate scale
    return 16.0 * _EPS * (np.abs(omega) + r)


@dataclass(frozen=True)
class HalfPlaneAtom:
    x: float
    t: float
    w: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.t) and math.isfinite(self.w)):
            raise InvariantViolation(f"atom coordinates must be finite: {self}")
        if not self.t > 0:
            raise InvariantViolation(f"atom height must be positive: {self}")
        if not self.w > 0:
            raise InvariantViolation(f"atom mass must be positive: {self}")


@dataclass(frozen=True)
class DiscreteMeasure:
    atoms: tuple[HalfPlaneAtom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))

    @classmethod
    def from_arrays(cls, x, t, w) -> "DiscreteMeasure":
        return cls(tuple(HalfPlaneAtom(float(a), float(b), float(c)) for a, b, c in zip(x, t, w)))

    def __len__(self):
        return len(self.atoms)

    @cached_property
    def x(self) -> np.ndarray:
        return np.array([a.x for a in self.atoms], dtype=float)

    @cached_property
    def t(self) -> np.ndarray:
        return np.array([a.t for a in self.atoms], dtype=float)

    @cached_property
    def w(self) -> np.ndarray:
        return np.array([a.w for a in self.atoms], dtype=float)

    @property
    def total_mass(self) -> float:
        return math.fsum(a.w for a in self.atoms)

    def dilate(self, c: float) -> "DiscreteMeasure":
        return DiscreteMeasure.from_arrays(c * self.x, c * self.t, self.w)

    def scale_mass(self, kappa: float) -> "DiscreteMeasure":
        return DiscreteMeasure.from_arrays(self.x, self.t, kappa * self.w)


@dataclass(frozen=True)
class Interval:
    omega: float
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise InvalidParameters(f"interval radius must be positive, got {self.r}")

    @classmethod
    def from_endpoints(cls, left: float, right: float) -> "Interval":
        return cls(0.5 * (left + right), 0.5 * (right - left))

    @property
    def left(self) -> float:
        return self.omega - self.r

    @property
    def right(self) -> float:
        return self.omega + self.r

    @property
    def length(self) -> float:
        return 2.0 * self.r


@dataclass(frozen=True)
class CarlesonReport:
    constant: float
    witness: Interval
    alpha: float
    method: str  # "enumeration" | "grid"

    def to_dict(self) -> dict:
        return {
            "constant": self.constant,
            "witness_omega": self.witness.omega,
            "witness_r": self.witness.r,
            "alpha": self.alpha,
            "method": self.method,
        }


def tent_contains(interval: Interval, x: float, t: float) -> bool:
    return bool(t + abs(x - interval.omega) <= interval.r + _slack(interval.omega, interval.r))


def tent_measure(mu: DiscreteMeasure, interval: Interval) -> float:
    return math.fsum(a.w for a in mu.atoms if tent_contains(interval, a.x, a.t))


def tent_masses(mu: DiscreteMeasure, omegas, rs) -> np.ndarray:
    """Vectorised :func:`tent_measure` over paired arrays of centres and radii."""
    omegas = np.asarray(omegas, dtype=float)
    rs = np.asarray(rs, dtype=float)
    if len(mu) == 0:
        return np.zeros(np.broadcast(omegas, rs).shape)
    om, rr = np.broadcast_arrays(omegas, rs)
    inside = (
        mu.t + np.abs(mu.x - om[..., None]) <= rr[..., None] + _slack(om, rr)[..., None]
    )
    return inside.astype(float) @ mu.w


def _require_atoms(mu: DiscreteMeasure):
    if len(mu) == 0:
        raise EmptyMeasure("operation needs at least one atom")


def _shadows(mu: DiscreteMeasure):
    return mu.x - mu.t, mu.x + mu.t


def candidate_tents(mu: DiscreteMeasure) -> list[Interval]:
    """Minimal tents of single atoms and of covering atom pairs.

    For atoms ordered by position, the pair tent spans from the left shadow
    end of one generator to the right shadow end of the other; it is kept only
    if it contains both generators.
    """
    left, right = _shadows(mu)
    order = np.lexsort((mu.t, mu.x))
    out = [Interval(float(mu.x[j]), float(mu.t[j])) for j in order]
    for a_pos, i in enumerate(order):
        for j in order[a_pos + 1:]:
            lo, hi = left[i], right[j]
            if lo <= left[j] and right[i] <= hi and hi > lo:
                out.append(Interval.from_endpoints(float(lo), float(hi)))
    return out


def _best_interval(left, right, w, alpha, lefts, rights):
    """Maximise ``mass([l, r])**alpha / (r - l)`` over candidate endpoints.

    ``mass([l, r])`` sums ``w`` over shadows inside ``[l, r]``. Returns
    ``(ratio, l, r)``; ties within a relative ``1e-12`` go to the smallest
    ``(centre, radius)``.
    """
    order = np.argsort(right, kind="stable")
    r_sorted, l_sorted, w_sorted = right[order], left[order], w[order]
    rights = np.unique(rights)
    lefts = np.unique(lefts)
    counts = np.searchsorted(r_sorted, rights, side="right")
    best = 0.0
    tied: list[tuple[float, float, float]] = []
    for start in range(0, len(lefts), _CHUNK):
        ls = lefts[start:start + _CHUNK]
        weights = np.where(l_sorted[None, :] >= ls[:, None], w_sorted[None, :], 0.0)
        cum = np.concatenate([np.zeros((len(ls), 1)), np.cumsum(weights, axis=1)], axis=1)
        mass = cum[:, counts]
        length = rights[None, :] - ls[:, None]
        ok = (length > 0) & (mass > 0)
        ratio = np.where(ok, np.power(mass, alpha) / np.where(ok, length, 1.0), 0.0)
        chunk_best = float(ratio.max()) if ratio.size else 0.0
        if chunk_best <= 0.0 or chunk_best < best * (1 - _TIE_RTOL):
            continue
        ii, jj = np.nonzero(ratio >= chunk_best * (1 - _TIE_RTOL))
        for i, j in zip(ii, jj):
            tied.append((float(ratio[i, j]), float(ls[i]), float(rights[j])))
        best = max(best, chunk_best)
    if best == 0.0:
        return 0.0, None, None
    finalists = [c for c in tied if c[0] >= best * (1 - _TIE_RTOL)]
    _, lo, hi = min(finalists, key=lambda c: (0.5 * (c[1] + c[2]), 0.5 * (c[2] - c[1])))
    return best, lo, hi


def geometric_constant(mu: DiscreteMeasure, alpha: float) -> CarlesonReport:
    """Exact ``sup_I mu(T(I))**alpha / |I|`` by extremal-tent enumeration.

    Shrinking an interval onto the minimal tent of the atoms it contains only
    increases the ratio, and a minimal tent is fixed by one left and one right
    shadow endpoint, so every pair of endpoints is tried.
    """
    _require_atoms(mu)
    if not alpha > 0:
        raise InvalidParameters(f"alpha must be positive, got {alpha}")
    left, right = _shadows(mu)
    _, lo, hi = _best_interval(left, right, mu.w, alpha, left, right)
    witness = Interval.from_endpoints(lo, hi)
    constant = tent_measure(mu, witness) ** alpha / witness.length
    return CarlesonReport(constant, witness, float(alpha), "enumeration")


def default_grid_ranges(mu: DiscreteMeasure):
    _require_atoms(mu)
    tmax = float(mu.t.max())
    xmin, xmax = float(mu.x.min()), float(mu.x.max())
    return (xmin - tmax, xmax + tmax), (0.0, 2.0 * ((xmax - xmin) + tmax))


def _ratios(mu, alpha, omegas, rs):
    out = np.empty(len(omegas))
    for k in range(0, len(omegas), 4096):
        sl = slice(k, k + 4096)
        out[sl] = np.power(tent_masses(mu, omegas[sl], rs[sl]), alpha) / (2.0 * rs[sl])
    return out


def _branch_and_bound(mu, alpha, om_lo, om_hi, r_hi, n_cells, rtol, max_rounds):
    """Refine the grid lower bound by bisecting boxes of tent parameters.

    A box ``[om0, om1] x [r0, r1]`` is bounded above by the mass of the tent
    centred at ``(om0 + om1) / 2`` with radius ``r1 + (om1 - om0) / 2``, which
    contains every tent of the box, divided by ``2 * r0``.
    """
    edges_om = np.linspace(om_lo, om_hi, n_cells + 1)
    edges_r = np.linspace(0.0, r_hi, n_cells + 1)
    o0, r0 = np.meshgrid(edges_om[:-1], edges_r[:-1], indexing="ij")
    o1, r1 = np.meshgrid(edges_om[1:], edges_r[1:], indexing="ij")
    boxes = np.stack([o0.ravel(), o1.ravel(), r0.ravel(), r1.ravel()], axis=1)
    best_val, best = -1.0, None
    upper = math.inf
    for _ in range(max_rounds):
        oc = 0.5 * (boxes[:, 0] + boxes[:, 1])
        rc = 0.5 * (boxes[:, 2] + boxes[:, 3])
        vals = _ratios(mu, alpha, oc, rc)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best = float(vals[k]), Interval(float(oc[k]), float(rc[k]))
        cover = tent_masses(mu, oc, boxes[:, 3] + 0.5 * (boxes[:, 1] - boxes[:, 0]))
        with np.errstate(divide="ignore", invalid="ignore"):
            bound = np.where(cover > 0, np.power(cover, alpha) / (2.0 * boxes[:, 2]), 0.0)
        live = bound > best_val * (1.0 + rtol)
        upper = max(best_val, float(bound.max(initial=0.0)))
        boxes = boxes[live]
        if len(boxes) == 0:
            upper = best_val
            break
        om_mid = 0.5 * (boxes[:, 0] + boxes[:, 1])
        r_mid = 0.5 * (boxes[:, 2] + boxes[:, 3])
        quads = []
        for lo_o, hi_o in ((boxes[:, 0], om_mid), (om_mid, boxes[:, 1])):
            for lo_r, hi_r in ((boxes[:, 2], r_mid), (r_mid, boxes[:, 3])):
                quads.append(np.stack([lo_o, hi_o, lo_r, hi_r], axis=1))
        boxes = np.concatenate(quads)
    return best_val, best, upper


def geometric_constant_grid(
    mu: DiscreteMeasure,
    alpha: float,
    omega_range: Optional[tuple[float, float]] = None,
    r_range: Optional[tuple[float, float]] = None,
    n_grid: int = 400,
    *,
    refine_tol: Optional[float] = None,
    max_rounds: int = 60,
) -> CarlesonReport:
    """Brute-force lower bound for the geometric constant on a tent grid.

    The plain grid is ``n_grid`` centres by ``n_grid`` radii (radii exclude 0).
    With ``refine_tol`` the grid cells are further bisected, branch-and-bound
    style, until no cell can beat the best tent found by more than that
    relative margin (or ``max_rounds`` is reached). The result is still a
    value attained by an actual tent, so it stays a lower bound.
    """
    _require_atoms(mu)
    if n_grid < 2:
        raise InvalidGrid("grids need at least two points per axis")
    d_om, d_r = default_grid_ranges(mu)
    om_lo, om_hi = omega_range if omega_range is not None else d_om
    r_lo, r_hi = r_range if r_range is not None else d_r
    if not (om_hi > om_lo and r_hi > max(r_lo, 0.0)):
        raise InvalidGrid(f"degenerate grid ranges {omega_range}, {r_range}")
    omegas = np.linspace(om_lo, om_hi, n_grid)
    if r_lo <= 0:
        rs = r_hi * np.arange(1, n_grid + 1) / n_grid
    else:
        rs = np.linspace(r_lo, r_hi, n_grid)
    om_g, r_g = np.meshgrid(omegas, rs, indexing="ij")
    vals = _ratios(mu, alpha, om_g.ravel(), r_g.ravel())
    k = int(np.argmax(vals))
    best_val = float(vals[k])
    best = Interval(float(om_g.ravel()[k]), float(r_g.ravel()[k]))
    if refine_tol is not None:
        val, witness, _ = _branch_and_bound(
            mu, alpha, om_lo, om_hi, r_hi, min(n_grid, 64), refine_tol, max_rounds)
        if val > best_val:
            best_val, best = val, witness
    return CarlesonReport(best_val, best, float(alpha), "grid")


class MaximalFunction:
    """Fefferman-Stein maximal function of a fixed measure.

    ``psi(x) = sup { mu(T(Q)) / |Q| : x in Q }`` evaluated exactly. Candidate
    intervals are bounded by shadow endpoints or by ``x`` itself. Only atoms in
    a window around ``x`` are enumerated; the window doubles until a dyadic
    upper bound for all longer intervals falls below the window's maximum.
    """

    def __init__(self, mu: DiscreteMeasure):
        self.mu = mu
        order = np.argsort(mu.x, kind="stable")
        self._x = mu.x[order]
        self._t = mu.t[order]
        self._w = mu.w[order]
        self._cum = np.concatenate([[0.0], np.cumsum(self._w)])
        self._total = float(self._cum[-1])

    def _mass_within(self, x, dist):
        lo = np.searchsorted(self._x, x - dist, side="left")
        hi = np.searchsorted(self._x, x + dist, side="right")
        return self._cum[hi] - self._cum[lo]

    def _window_sup(self, x, lo, hi):
        xs, ts, ws = self._x[lo:hi], self._t[lo:hi], self._w[lo:hi]
        left, right = xs - ts, xs + ts
        lefts = np.append(left[left <= x], x)
        rights = np.append(right[right >= x], x)
        ratio, _, _ = _best_interval(left, right, ws, 1.0, lefts, rights)
        return ratio

    def __call__(self, x):
        if np.ndim(x):
            return np.array([self._scalar(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))
        return self._scalar(float(x))

    def _scalar(self, x: float) -> float:
        n = len(self._x)
        if n == 0:
            return 0.0
        pos = int(np.searchsorted(self._x, x))
        near = slice(max(pos - 16, 0), min(pos + 16, n))
        dist = float(np.max(np.abs(self._x[near] - x) + self._t[near]))
        while True:
            lo = int(np.searchsorted(self._x, x - dist, side="left"))
            hi = int(np.searchsorted(self._x, x + dist, side="right"))
            value = self._window_sup(x, lo, hi)
            if lo == 0 and hi == n:
                return value
            # intervals of length >= dist: bound mass/length on dyadic shells
            span = max(abs(x - self._x[0]), abs(self._x[-1] - x)) + float(self._t.max())
            n_shells = max(1, int(math.ceil(math.log2(max(span / dist, 1.0)))) + 1)
            lengths = dist * 2.0 ** np.arange(n_shells + 1)
            bound = float(np.max(self._mass_within(x, lengths[1:]) / lengths[:-1]))
            bound = max(bound, self._total / lengths[-1])
            if value >= bound:
                return value
            dist *= 2.0


def maximal_function_at(mu: DiscreteMeasure, x: float) -> float:
    return MaximalFunction(mu)(x)


def _map_half_line(f, anchor: float, direction: float):
    # nodes that round to u == 1 sit at infinity, where an integrable f vanishes
    def g(u):
        u = np.asarray(u, dtype=float)
        gap = 1.0 - u
        far = gap <= 0
        gap = np.where(far, 1.0, gap)
        x = anchor + direction * u / gap
        return np.where(far, 0.0, f(x) / gap**2)
    return g


def lbeta_norm(
    f: Callable,
    beta: float,
    domain: tuple[float, float],
    spec: QuadratureSpec = QuadratureSpec(1e-10, 1e-8),
    *,
    points: Sequence[float] = (),
    vectorized: bool = False,
) -> float:
    """``(int_domain f**beta)**(1/beta)`` for a non-negative ``f``.

    Infinite endpoints are handled by the map ``x = c + u / (1 - u)``.
    """
    if not beta > 1:
        raise InvalidParameters(f"beta must exceed 1, got {beta}")
    a, b = map(float, domain)
    if not a < b:
        raise InvalidParameters(f"empty domain {domain}")

    if vectorized:
        def powered(x):
            return np.power(np.asarray(f(x), dtype=float), beta)
    else:
        def powered(x):
            x = np.asarray(x, dtype=float)
            return np.array([f(float(v)) ** beta for v in np.ravel(x)]).reshape(x.shape)

    inner_pts = sorted(float(p) for p in points if a < p < b)
    if math.isinf(a) or math.isinf(b):
        finite = [v for v in (a, b) if math.isfinite(v)]
        c_lo = finite[0] if math.isfinite(a) else (inner_pts[0] if inner_pts else (b if math.isfinite(b) else 0.0))
        c_hi = finite[-1] if math.isfinite(b) else (inner_pts[-1] if inner_pts else c_lo)
        if c_lo > c_hi:
            c_lo = c_hi
    else:
        c_lo, c_hi = a, b
    pieces = []
    if c_hi > c_lo:
        mid_pts = [p for p in inner_pts if c_lo < p < c_hi]
        pieces.append(integrate_adaptive(powered, c_lo, c_hi, spec, points=mid_pts, vectorized=True).value)
    if math.isinf(b):
        pts = [(p - c_hi) / (1.0 + p - c_hi) for p in inner_pts if p > c_hi]
        pieces.append(integrate_adaptive(_map_half_line(powered, c_hi, 1.0), 0.0, 1.0, spec,
                                         points=pts, vectorized=True).value)
    if math.isinf(a):
        pts = [(c_lo - p) / (1.0 + c_lo - p) for p in inner_pts if p < c_lo]
        pieces.append(integrate_adaptive(_map_half_line(powered, c_lo, -1.0), 0.0, 1.0, spec,
                                         points=pts, vectorized=True).value)
    total = math.fsum(pieces)
    return max(total, 0.0) ** (1.0 / beta)


def balayee_at(mu: DiscreteMeasure, y: float) -> float:
    """``F(y) = sum_n w_n P_{t_n}(x_n - y)``, the boundary sweep of ``mu``."""
    return math.fsum(a.w * poisson_kernel(a.t, a.x - y) for a in mu.atoms)


def sectorial_g(mu: DiscreteMeasure, r: float) -> float:
    if not r > 0:
        raise InvalidParameters(f"r must be positive, got {r}")
    return math.fsum(a.w for a in mu.atoms if a.t < r) / r


def sector_half_angle(mu: DiscreteMeasure) -> float:
    """Smallest ``theta`` with every atom ``t + i x`` inside ``|arg| <= theta``."""
    _require_atoms(mu)
    return max(math.atan2(abs(a.x), a.t) for a in mu.atoms)


def example_family_measure(epsilon: float, gamma: float, N: int) -> DiscreteMeasure:
    """Atoms of mass ``|n|**-epsilon`` at ``1 + i sign(n) |n|**gamma``, ``0 < |n| <= N``.

    Geometric but not embedding Carleson for ``gamma / (1 - epsilon) > 1``;
    the infinite family is truncated at ``N``.
    """
    if not (0.0 <= epsilon < 1.0) or not gamma >= 1.0 or int(N) != N or N < 1:
        raise InvalidParameters(f"need 0 <= epsilon < 1, gamma >= 1, N >= 1; got {epsilon}, {gamma}, {N}")
    n = np.arange(1, int(N) + 1, dtype=float)
    pos = n**gamma
    mass = n ** (-epsilon)
    xs = np.concatenate([-pos[::-1], pos])
    ws = np.concatenate([mass[::-1], mass])
    return DiscreteMeasure.from_arrays(xs, np.ones_like(xs), ws)


def embedding_report(
    mu: DiscreteMeasure, alpha: float, spec: QuadratureSpec = QuadratureSpec(1e-10, 1e-8)
) -> dict:
    """Embedding alpha-Carleson check.

    For ``alpha <= 1`` the embedding and geometric notions coincide and the
    geometric constant is returned. For ``alpha > 1`` the ``L^beta`` norm of
    the maximal function is computed, ``1/alpha + 1/beta = 1``.
    """
    if alpha <= 1:
        report = geometric_constant(mu, alpha).to_dict()
        report["route"] = "delegated to geometric (Carleson-Duren)"
        return report
    _require_atoms(mu)
    beta = alpha / (alpha - 1.0)
    psi = MaximalFunction(mu)
    left, right = _shadows(mu)
    ends = np.unique(np.concatenate([left, right]))
    if len(ends) > 400:
        ends = ends[np.linspace(0, len(ends) - 1, 400).astype(int)]
    norm = lbeta_norm(psi, beta, (-math.inf, math.inf), spec, points=ends, vectorized=True)
    return {
        "alpha": float(alpha),
        "beta": beta,
        "psi_lbeta_norm": norm,
        "route": "maximal function in L^beta (Fefferman-Stein)",
    }


def family_tent_table(mu: DiscreteMeasure, epsilon: float, gamma: float, radii) -> list[dict]:
    """``mu(T(B(0, 2r)))`` against ``(2 / (1 - eps)) (2r)^((1 - eps) / gamma)``."""
    rows = []
    for r in radii:
        mass = tent_measure(mu, Interval(0.0, 2.0 * float(r)))
        bound = 2.0 / (1.0 - epsilon) * (2.0 * float(r)) ** ((1.0 - epsilon) / gamma)
        rows.append({"r": float(r), "mass": mass, "bound": bound, "holds": mass <= bound})
    return rows


def family_gap_integrals(
    mu: DiscreteMeasure,
    gamma: float,
    beta: float,
    ns,
    spec: QuadratureSpec = QuadratureSpec(1e-12, 1e-7, max_subdivisions=4000),
) -> list[dict]:
    """``int psi^beta`` over each gap ``[n^gamma, (n+1)^gamma]`` and running totals.

    Also fits ``c = min_n (n+1) * I_n`` and a least-squares line of the
    running total against ``log (n+1)^gamma``.
    """
    psi = MaximalFunction(mu)
    left, right = _shadows(mu)
    ends = np.unique(np.concatenate([left, right]))
    rows, running = [], 0.0
    for n in ns:
        lo, hi = float(n) ** gamma, float(n + 1) ** gamma
        pts = ends[(ends > lo) & (ends < hi)]
        val = integrate_adaptive(lambda x: np.power(psi(x), beta), lo, hi, spec,
                                 points=pts, vectorized=True).value
        running += val
        rows.append({"n": int(n), "integral": val, "scaled": (n + 1) * val,
                     "log_x": math.log(hi), "cumulative": running})
    return rows


def log_growth_fit(rows: list[dict]) -> dict:
    c = min(r["scaled"] for r in rows)
    xs = np.array([r["log_x"] for r in rows])
    ys = np.array([r["cumulative"] for r in rows])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (intercept + slope * xs)
    r2 = 1.0 - float(resid @ resid) / float(((ys - ys.mean()) ** 2).sum())
    return {"c": c, "intercept": float(intercept), "slope": float(slope), "r_squared": r2}
