"""Exponent polygon K of an exponential sum and the asymptotics it predicts.

The points gamma_r = conj(mu_r) are placed in the plane; their convex hull
K (vertices anticlockwise) governs the large zeros: each edge
(gamma_{r-}, gamma_r) carries a series of zeros approaching the line
Re(z conj(gamma_r - gamma_{r-})) = log|delta_{r-}/delta_r|, spaced
2 pi / |gamma_r - gamma_{r-}| apart, and N(E) ~ perimeter(K) E / 2 pi.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateSpectrum
from .expsum import ExpSum
from .system_model import PiecewiseFirstOrderSystem, dirichlet_system, expand_char_function

EDGE_TOL = 1e-9


class NonGenericWarning(UserWarning):
    pass


def _cross(o, a, b) -> float:
    return (a.real - o.real) * (b.imag - o.imag) - (a.imag - o.imag) * (b.real - o.real)


def convex_hull_indices(points: Sequence[complex], rel_tol: float = 1e-12) -> list[int]:
    """Monotone chain hull; anticlockwise vertex indices starting from the lowest-leftmost point.

    Collinear boundary points are not vertices. All-collinear input gives the
    two extreme points; a single distinct point gives one index.
    """
    pts = np.asarray(points, dtype=complex)
    if pts.size == 0:
        return []
    order = sorted(range(pts.size), key=lambda k: (pts[k].real, pts[k].imag))
    diam = float(np.abs(pts - pts[order[0]]).max()) or 1.0
    tol = rel_tol * diam
    # points closer than tol are one point for the hull (keep the first in order)
    kept: list[int] = []
    for k in order:
        if not kept or np.abs(pts[kept] - pts[k]).min() > tol:
            kept.append(k)
    order = kept

    def half(indices):
        chain: list[int] = []
        for k in indices:
            while len(chain) >= 2 and _cross(pts[chain[-2]], pts[chain[-1]], pts[k]) <= 0:
                chain.pop()
            chain.append(k)
        return chain

    lower = half(order)
    upper = half(order[::-1])
    hull = lower[:-1] + upper[:-1]
    if not hull:
        return order[:1]
    # drop nearly collinear vertices only after the exact chain is built, so
    # that a tolerance never discards a genuine extreme point
    while len(hull) > 2:
        height = []
        for j in range(len(hull)):
            a, b, c = pts[hull[j - 1]], pts[hull[j]], pts[hull[(j + 1) % len(hull)]]
            chord = c - a
            t = ((b - a) * chord.conjugate()).real / max(abs(chord) ** 2, 1e-300)
            # only a vertex lying between its neighbours may be dropped
            inside = -rel_tol <= t <= 1 + rel_tol
            height.append(abs(_cross(a, b, c)) / max(abs(chord), 1e-300) if inside else math.inf)
        j = int(np.argmin(height))
        if height[j] > tol:
            break
        del hull[j]
    start = min(range(len(hull)), key=lambda j: (pts[hull[j]].real, pts[hull[j]].imag))
    hull = hull[start:] + hull[:start]
    if len(hull) == 2 and abs(pts[hull[0]] - pts[hull[1]]) <= rel_tol * diam:
        return hull[:1]
    return hull


def perimeter(points: Iterable[complex]) -> float:
    """Boundary length of the convex hull; a segment counts twice."""
    pts = np.asarray(list(points), dtype=complex)
    idx = convex_hull_indices(pts)
    if len(idx) < 2:
        return 0.0
    v = pts[idx]
    return float(np.abs(v - np.roll(v, 1)).sum())


@dataclass(frozen=True)
class EdgeRecord:
    r_minus: int
    r: int
    rho: float
    theta: float
    normal: complex
    k: float
    c: complex
    gamma_minus: complex
    gamma: complex

    @property
    def vector(self) -> complex:
        return self.gamma - self.gamma_minus

    @property
    def spacing(self) -> float:
        return 2 * math.pi / self.rho

    def line_distance(self, z) -> np.ndarray:
        """Distance from z to the semi-infinite asymptotic line of this edge."""
        z = np.asarray(z, dtype=complex)
        along = self.vector / self.rho
        s = (z * along.conjugate()).real  # coordinate along the edge direction
        t = (z * self.normal.conjugate()).real  # coordinate along the outward normal
        t0 = (self.gamma * self.normal.conjugate()).real
        s0 = self.k / self.rho
        perp = np.abs(s - s0)
        return np.where(t >= t0, perp, np.hypot(perp, t0 - t))

    def on_ray(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return (z * self.normal.conjugate()).real >= (self.gamma * self.normal.conjugate()).real

    def lattice(self, n) -> np.ndarray:
        n = np.asarray(n)
        return (self.c + (2 * n + 1) * math.pi * 1j) * np.exp(1j * self.theta) / self.rho

    def nearest_lattice(self, z) -> np.ndarray:
        """Closest zero of the two-term sum G_r to each z."""
        z = np.asarray(z, dtype=complex)
        w = (z * self.rho * np.exp(-1j * self.theta) - self.c) / (math.pi * 1j)
        n = np.round((w.real - 1) / 2)
        return self.lattice(n)

    def to_json(self) -> dict:
        return {
            "r_minus": self.r_minus,
            "r": self.r,
            "gamma_minus": [self.gamma_minus.real, self.gamma_minus.imag],
            "gamma": [self.gamma.real, self.gamma.imag],
            "length": self.rho,
            "theta": self.theta,
            "normal": [self.normal.real, self.normal.imag],
            "k": self.k,
            "c": [self.c.real, self.c.imag],
            "zero_spacing": self.spacing,
        }


@dataclass(frozen=True)
class HullReport:
    gammas: np.ndarray
    deltas: np.ndarray
    vertex_order: tuple
    edges: tuple
    b_K: float
    generic: bool
    violations: tuple = field(default=())

    @property
    def Q(self) -> int:
        return len(self.vertex_order)

    @property
    def R(self) -> int:
        return int(self.gammas.size)

    @property
    def count_slope(self) -> float:
        return self.b_K / (2 * math.pi)

    def to_json(self) -> dict:
        return {
            "exponents": [{"gamma": [g.real, g.imag], "delta": [d.real, d.imag]}
                          for g, d in zip(self.gammas, self.deltas)],
            "vertices": [int(k) for k in self.vertex_order],
            "edges": [e.to_json() for e in self.edges],
            "b_K": self.b_K,
            "count_slope": self.count_slope,
            "generic": self.generic,
            "violations": list(self.violations),
        }


def classify_spectrum(f: ExpSum) -> str:
    """'whole_plane' for F = 0, 'empty' for a single exponential, else 'discrete'."""
    if f.is_zero:
        return "whole_plane"
    if len(f) == 1:
        return "empty"
    return "discrete"


def _segment_distance(p: complex, a: complex, b: complex) -> float:
    d = b - a
    t = ((p - a) * d.conjugate()).real / abs(d) ** 2
    t = min(max(t, 0.0), 1.0)
    return abs(p - (a + t * d))


def analyze_exponents(f: ExpSum, edge_tol: float = EDGE_TOL) -> HullReport:
    """Convex hull, edges, asymptotic lines and genericity verdict for F."""
    kind = classify_spectrum(f)
    if kind != "discrete":
        what = "F vanishes identically (spectrum is C)" if kind == "whole_plane" else "F has no zeros"
        raise DegenerateSpectrum(f"need at least two exponents: {what}")
    gammas = f.gammas.copy()
    deltas = f.delta.copy()
    verts = convex_hull_indices(gammas)
    Q = len(verts)
    edges = []
    for j in range(Q):
        r, rm = verts[j], verts[j - 1]
        d = gammas[r] - gammas[rm]
        rho = abs(d)
        edges.append(EdgeRecord(
            r_minus=int(rm), r=int(r), rho=float(rho), theta=float(np.angle(d)),
            normal=complex(-1j * d / rho),
            k=float(np.log(abs(deltas[rm]) / abs(deltas[r]))),
            c=complex(np.log(deltas[rm] / deltas[r])),
            gamma_minus=complex(gammas[rm]), gamma=complex(gammas[r]),
        ))
    b_K = float(sum(e.rho for e in edges))

    diam = float(np.abs(gammas[:, None] - gammas[None, :]).max())
    tol = edge_tol * (1 + diam)
    violations = []
    vset = set(verts)
    for k in range(gammas.size):
        if k in vset:
            continue
        for j, e in enumerate(edges[: 1 if Q == 2 else Q]):
            if _segment_distance(gammas[k], e.gamma_minus, e.gamma) <= tol:
                violations.append({"kind": "point_on_edge", "index": int(k), "edge": j})
    for k in verts:
        if deltas[k] == 0:
            violations.append({"kind": "zero_vertex_coefficient", "index": int(k)})
    return HullReport(gammas, deltas, tuple(int(v) for v in verts), tuple(edges), b_K,
                      not violations, tuple(violations))


def lattice_zeros(report: HullReport, edge: int, n_range) -> np.ndarray:
    """Zeros z_n = (c_r + (2n+1) pi i) e^{i theta}/rho of the two-term sum on an edge.

    ``n_range`` is an iterable of integers or an inclusive (lo, hi) pair.
    """
    if isinstance(n_range, tuple) and len(n_range) == 2:
        n_range = range(int(n_range[0]), int(n_range[1]) + 1)
    return report.edges[edge].lattice(np.fromiter(n_range, dtype=float))


def predicted_count(report: HullReport, E: float) -> float:
    """Leading term b(K) E / 2 pi of the zero counting function."""
    if not report.generic:
        warnings.warn("exponent polygon is non-generic; count prediction is advisory", NonGenericWarning,
                      stacklevel=2)
    return report.b_K * float(E) / (2 * math.pi)


def symbol_density(sys: PiecewiseFirstOrderSystem, mode: str = "hull") -> float:
    """Integral of the local density b(x) over the interval.

    mode "hull": b = perimeter of the hull of the eigenvalues of A(x)^{-1};
    mode "weyl": b = 2 sum_r |a_r(x)|^{-1}.
    """
    total = 0.0
    for s, L in enumerate(sys.lengths):
        inv = sys.inverse_speeds(s)
        if mode == "hull":
            b = perimeter(inv)
        elif mode == "weyl":
            b = 2 * float(np.abs(inv).sum())
        else:
            raise ValueError(f"mode must be 'hull' or 'weyl', not {mode!r}")
        total += b * float(L)
    return total


@dataclass(frozen=True)
class PerturbationFit:
    kappa: float
    quality: float
    kappa_predicted: float
    deltas: tuple
    b_values: tuple

    def __iter__(self):
        return iter((self.kappa, self.quality))


def perturbation_fit(B, alpha_scalar: complex, U_dim: int, deltas: Sequence[float],
                     interval: tuple[float, float] = (0.0, 1.0), seed: int = 0) -> PerturbationFit:
    """Fit b(K(delta)) ~ kappa delta for A(delta) = alpha I + delta B with Dirichlet data.

    The subspaces U (dim ``U_dim``) and V (dim n - U_dim) are fixed random
    subspaces drawn from ``seed``. kappa is fitted by least squares on the two
    smallest deltas; quality is the largest relative residual over all deltas.
    ``kappa_predicted`` is the first-order value: the perimeter of the hull
    of d(gamma)/d(delta) over all U_dim-subsets of eigenvalues of B.
    """
    from itertools import combinations

    B = np.asarray(B, dtype=complex)
    n = B.shape[0]
    rng = np.random.default_rng(seed)
    basis = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))[0]
    other = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))[0]
    U = list(basis[:, :U_dim].T)
    V = list(other[:, : n - U_dim].T)
    deltas = [float(d) for d in deltas]
    bvals = []
    for d in deltas:
        A = alpha_scalar * np.eye(n) + d * B
        sys = dirichlet_system(list(interval), [A], U, V)
        bvals.append(analyze_exponents(expand_char_function(sys)).b_K)
    bvals = np.array(bvals)
    dv = np.array(deltas)
    pick = np.argsort(dv)[:2]
    kappa = float(np.dot(bvals[pick], dv[pick]) / np.dot(dv[pick], dv[pick]))
    quality = float(np.max(np.abs(bvals - kappa * dv) / np.abs(bvals)))
    L = interval[1] - interval[0]
    eig_b = np.linalg.eigvals(B)
    sigma = [-(L / alpha_scalar ** 2) * sum(eig_b[list(J)]) for J in combinations(range(n), U_dim)]
    kappa_pred = perimeter(np.conj(sigma))
    return PerturbationFit(kappa, quality, float(kappa_pred), tuple(deltas), tuple(bvals.tolist()))


def minkowski_sum(K1: Sequence[complex], K2: Sequence[complex]) -> np.ndarray:
    a = np.asarray(K1, dtype=complex)
    b = np.asarray(K2, dtype=complex)
    return (a[:, None] + b[None, :]).ravel()


def minkowski_check(K1_points, K2_points) -> tuple[float, float, float]:
    """Perimeters of K1, K2 and of their Minkowski sum."""
    return perimeter(K1_points), perimeter(K2_points), perimeter(minkowski_sum(K1_points, K2_points))
