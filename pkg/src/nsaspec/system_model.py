"""Operator descriptions and their characteristic functions.

A first-order system is  L f = A(x) f'  on [alpha_0, alpha_m] with
A(x) = A_s on (alpha_{s-1}, alpha_s] and boundary condition
S f(alpha_0) + T f(alpha_m) = 0.  Its eigenvalues are the zeros of
F(z) = det(S + T U(z)), U(z) the transfer matrix across the interval.

Each builder can produce F both numerically (pointwise) and exactly as
an :class:`~nsaspec.expsum.ExpSum`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import linalg_core as la
from .errors import (
    DimensionMismatch,
    EvaluationOverflow,
    IntersectingSubspaces,
    NotDiagonalizable,
    SpectrumIsWholePlane,
)
from .expsum import ExpSum, ExpSumMatrix, es_matrix_det

EXPANSION_DROP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PiecewiseFirstOrderSystem:
    breakpoints: np.ndarray
    matrices: tuple
    S: np.ndarray
    T: np.ndarray
    eigs: tuple = field(init=False, repr=False)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float).reshape(-1)
        if bp.size < 2:
            raise DimensionMismatch("need at least two breakpoints")
        if not np.all(np.isfinite(bp)) or np.any(np.diff(bp) <= 0):
            raise DimensionMismatch("breakpoints must be finite and strictly increasing")
        mats = tuple(la.as_matrix(A, f"A_{k + 1}") for k, A in enumerate(self.matrices))
        if len(mats) != bp.size - 1:
            raise DimensionMismatch(f"{bp.size} breakpoints need {bp.size - 1} matrices, got {len(mats)}")
        n = mats[0].shape[0]
        S = la.as_matrix(self.S, "S")
        T = la.as_matrix(self.T, "T")
        for name, M in [("S", S), ("T", T)] + [(f"A_{k + 1}", A) for k, A in enumerate(mats)]:
            if M.shape != (n, n):
                raise DimensionMismatch(f"{name} has shape {M.shape}, expected {(n, n)}")
        eigs = []
        for k, A in enumerate(mats):
            dec = la.eig_decompose(A)
            if np.any(np.abs(dec.d) <= 1e-12 * (1 + np.abs(A).max())):
                raise DimensionMismatch(f"A_{k + 1} not invertible")
            eigs.append(dec)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "eigs", tuple(eigs))

    @property
    def n(self) -> int:
        return self.S.shape[0]

    @property
    def m(self) -> int:
        return len(self.matrices)

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def segment_exponents(self, s: int) -> np.ndarray:
        """Diagonal of D_s: (alpha_s - alpha_{s-1}) / a_{s,t}."""
        return self.lengths[s] / self.eigs[s].d

    def inverse_speeds(self, s: int) -> np.ndarray:
        return 1.0 / self.eigs[s].d


def _segment_propagator(dec: la.EigDecomposition, z: complex, dx: float) -> np.ndarray:
    expo = z * dx / dec.d
    if np.any(expo.real > 700):
        raise EvaluationOverflow("transfer matrix overflows", log_abs=float(expo.real.max()), arg=0.0)
    return (dec.V * np.exp(expo)) @ dec.V_inv


def transfer_matrix(sys: PiecewiseFirstOrderSystem, z: complex, x: float | None = None) -> np.ndarray:
    """U(z, x): maps f(alpha_0) to f(x) for solutions of A f' = z f (default x = alpha_m)."""
    bp = sys.breakpoints
    x = bp[-1] if x is None else float(x)
    U = np.eye(sys.n, dtype=complex)
    for s, dec in enumerate(sys.eigs):
        lo, hi = bp[s], bp[s + 1]
        if x <= lo:
            break
        U = _segment_propagator(dec, z, min(x, hi) - lo) @ U
    return U


def char_function_numeric(sys: PiecewiseFirstOrderSystem, z: complex) -> complex:
    """F(z) = det(S + T U(z)) evaluated pointwise."""
    M = sys.S + sys.T @ transfer_matrix(sys, z)
    return complex(np.linalg.det(M))


def expand_char_function(sys: PiecewiseFirstOrderSystem, merge_tol: float = 1e-10,
                         drop_tol: float = EXPANSION_DROP_TOL, allow_zero: bool = False) -> ExpSum:
    """Exact exponential-sum expansion of det(S + T U(z)).

    Each segment propagator is written as sum_t exp(z d_{s,t}) P_{s,t}
    with spectral projectors P_{s,t}; products and the determinant are
    taken in the ExpSum ring. Raises SpectrumIsWholePlane when every
    coefficient cancels (unless ``allow_zero``).
    """
    U = None
    for s, dec in enumerate(sys.eigs):
        Vinv = dec.V_inv
        projectors = [np.outer(dec.V[:, t], Vinv[t, :]) for t in range(sys.n)]
        Us = ExpSumMatrix.from_spectral(projectors, sys.segment_exponents(s), merge_tol, drop_tol)
        U = Us if U is None else Us @ U
    M = ExpSumMatrix.from_constant(sys.S, merge_tol, drop_tol) + U.left_multiply(sys.T)
    F = es_matrix_det(M)
    if F.is_zero and not allow_zero:
        raise SpectrumIsWholePlane("characteristic function vanishes identically: Spec(L) = C", expsum=F)
    return F


def _subspace_basis(vectors, n: int, name: str) -> np.ndarray:
    vecs = [np.asarray(v, dtype=complex).reshape(-1) for v in (vectors or [])]
    for v in vecs:
        if v.shape[0] != n:
            raise DimensionMismatch(f"{name}: vector of length {v.shape[0]} in dimension {n}")
    return la.orthonormal_basis(vecs, n)


def boundary_from_subspaces(U, V, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Boundary matrices for the conditions f(alpha) in U, f(beta) in V.

    S has kernel U and range the first n - dim U coordinates; T has
    kernel V and range the last dim U coordinates.
    """
    if n is None:
        sample = list(U or []) + list(V or [])
        if not sample:
            raise DimensionMismatch("cannot infer dimension from empty subspaces")
        n = len(sample[0])
    QU = _subspace_basis(U, n, "U")
    QV = _subspace_basis(V, n, "V")
    p, q = QU.shape[1], QV.shape[1]
    if p + q != n:
        raise DimensionMismatch(f"dim U + dim V = {p} + {q} != n = {n}")
    if p and q and np.linalg.matrix_rank(np.hstack([QU, QV]), tol=1e-10) < n:
        raise IntersectingSubspaces("U and V intersect nontrivially: Spec(L) = C (SpectrumIsWholePlane)")
    CU = la.orthogonal_complement(QU)  # n x (n - p)
    CV = la.orthogonal_complement(QV)  # n x p
    S = np.zeros((n, n), complex)
    T = np.zeros((n, n), complex)
    S[: n - p, :] = CU.conj().T
    T[n - p:, :] = CV.conj().T
    return S, T


def dirichlet_system(breakpoints, matrices, U, V) -> PiecewiseFirstOrderSystem:
    n = np.asarray(matrices[0]).shape[0]
    S, T = boundary_from_subspaces(U, V, n)
    return PiecewiseFirstOrderSystem(breakpoints, tuple(matrices), S, T)


def direct_sum(sys1: PiecewiseFirstOrderSystem, sys2: PiecewiseFirstOrderSystem) -> PiecewiseFirstOrderSystem:
    """L1 (+) L2 on a common interval; breakpoints are merged."""
    if not np.allclose(sys1.interval, sys2.interval):
        raise DimensionMismatch("direct sum needs a common interval")
    bp = np.unique(np.concatenate([sys1.breakpoints, sys2.breakpoints]))

    def coefficient(sys, x):
        k = int(np.searchsorted(sys.breakpoints, x, side="left")) - 1
        return sys.matrices[min(max(k, 0), sys.m - 1)]

    mats = []
    for s in range(bp.size - 1):
        mid = 0.5 * (bp[s] + bp[s + 1])
        mats.append(_block_diag(coefficient(sys1, mid), coefficient(sys2, mid)))
    return PiecewiseFirstOrderSystem(bp, tuple(mats), _block_diag(sys1.S, sys2.S), _block_diag(sys1.T, sys2.T))


def _block_diag(A, B) -> np.ndarray:
    n1, n2 = A.shape[0], B.shape[0]
    out = np.zeros((n1 + n2, n1 + n2), complex)
    out[:n1, :n1] = A
    out[n1:, n1:] = B
    return out


@dataclass(frozen=True, eq=False)
class SecondOrderDiagonalSystem:
    """(H f)_r = a_r^2 f_r'' on (alpha, beta) with eigenvalue z^2 and
    f(alpha) in U1, f'(alpha) in U2, f(beta) in V1, f'(beta) in V2."""

    speeds: np.ndarray
    U1: tuple
    U2: tuple
    V1: tuple
    V2: tuple
    interval: tuple = (0.0, np.pi)

    def __post_init__(self):
        a = np.asarray(self.speeds, dtype=complex).reshape(-1)
        if np.any(a == 0):
            raise DimensionMismatch("all speeds a_r must be nonzero")
        n = a.size
        dims = []
        for name in ("U1", "U2", "V1", "V2"):
            basis = _subspace_basis(getattr(self, name), n, name)
            dims.append(basis.shape[1])
            object.__setattr__(self, name, tuple(basis.T))
        if sum(dims) != 2 * n:
            raise DimensionMismatch(f"subspace dimensions {dims} must sum to 2n = {2 * n}")
        lo, hi = map(float, self.interval)
        if not hi > lo:
            raise DimensionMismatch("interval must have beta > alpha")
        object.__setattr__(self, "speeds", a)
        object.__setattr__(self, "interval", (lo, hi))

    @property
    def n(self) -> int:
        return self.speeds.size


class SecondOrderCharacteristic(NamedTuple):
    expsum: ExpSum
    z_power: int


def build_second_order(sys: SecondOrderDiagonalSystem, merge_tol: float = 1e-10,
                       drop_tol: float = EXPANSION_DROP_TOL) -> SecondOrderCharacteristic:
    """Characteristic exponential sum of a diagonal second-order system.

    With f_r = c_r e^{(x-alpha) z/a_r} + d_r e^{-(x-alpha) z/a_r}, each
    subspace condition contributes annihilator rows on (c, d). Rows from
    derivative conditions carry a factor z, which is removed; the number
    of such rows is returned as ``z_power``.
    """
    n = sys.n
    a = sys.speeds
    L = sys.interval[1] - sys.interval[0]
    const = lambda c: ExpSum.constant(c, merge_tol, drop_tol)  # noqa: E731
    expo = lambda mu, c: ExpSum.exponential(mu, c, merge_tol, drop_tol)  # noqa: E731

    rows: list[list[ExpSum]] = []
    z_power = 0
    for name, at_end, derivative in (("U1", False, False), ("U2", False, True),
                                     ("V1", True, False), ("V2", True, True)):
        basis = np.array(getattr(sys, name), dtype=complex).reshape(-1, n).T
        for w in la.orthogonal_complement(basis).T:
            wc = w.conj()
            row_c, row_d = [], []
            for r in range(n):
                factor = wc[r] / a[r] if derivative else wc[r]
                sign = -1.0 if derivative else 1.0
                if at_end:
                    row_c.append(expo(L / a[r], factor))
                    row_d.append(expo(-L / a[r], sign * factor))
                else:
                    row_c.append(const(factor))
                    row_d.append(const(sign * factor))
            rows.append(row_c + row_d)
            z_power += int(derivative)
    F = es_matrix_det(ExpSumMatrix(rows))
    if F.is_zero:
        raise SpectrumIsWholePlane("second-order characteristic function vanishes identically", expsum=F)
    return SecondOrderCharacteristic(F, z_power)


def characteristic_expsum(obj) -> ExpSum:
    """ExpSum for any supported description (system, second-order system, or ExpSum)."""
    if isinstance(obj, ExpSum):
        return obj
    if isinstance(obj, PiecewiseFirstOrderSystem):
        return expand_char_function(obj)
    if isinstance(obj, SecondOrderDiagonalSystem):
        return build_second_order(obj).expsum
    raise TypeError(f"cannot build a characteristic function from {type(obj).__name__}")


def random_first_order_system(rng: np.random.Generator, n: int = 2, m: int = 1, bc: str = "full",
                              speed_range: tuple[float, float] = (0.7, 2.0),
                              interval: tuple[float, float] = (0.0, 1.0)) -> PiecewiseFirstOrderSystem:
    """Random system with well-conditioned, diagonalizable A_s.

    ``bc`` is "full" (dense random S, T) or "rank_one" (f(alpha) in span u,
    f(beta) orthogonal to v).
    """
    lo, hi = interval
    cuts = np.sort(rng.uniform(0.2, 0.8, m - 1)) if m > 1 else np.zeros(0)
    cuts = np.unique(np.round(cuts, 6))
    bp = np.concatenate([[0.0], cuts, [1.0]]) * (hi - lo) + lo
    mats = []
    for _ in range(bp.size - 1):
        while True:
            radius = rng.uniform(*speed_range, n)
            angle = rng.uniform(0, 2 * np.pi, n)
            a = radius * np.exp(1j * angle)
            V = np.eye(n) + 0.4 * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
            if np.linalg.cond(V) < 20 and np.min(np.abs(a[:, None] - a[None, :]) + np.eye(n)) > 0.1:
                break
        mats.append(V @ np.diag(a) @ np.linalg.inv(V))
    if bc == "full":
        S = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        T = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        return PiecewiseFirstOrderSystem(bp, tuple(mats), S, T)
    if bc == "rank_one":
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        Vperp = la.orthogonal_complement(la.orthonormal_basis([v], n))
        return dirichlet_system(bp, mats, [u], list(Vperp.T))
    raise ValueError(f"unknown boundary kind {bc!r}")


def rank_one_functional(sys: PiecewiseFirstOrderSystem, u: Sequence[complex], v: Sequence[complex]):
    """z -> <U(z, beta) u, v>, the scalar characteristic function of the rank-one case."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    return lambda z: complex(np.vdot(v, transfer_matrix(sys, z) @ u))


__all__ = [
    "PiecewiseFirstOrderSystem",
    "SecondOrderDiagonalSystem",
    "SecondOrderCharacteristic",
    "transfer_matrix",
    "char_function_numeric",
    "expand_char_function",
    "boundary_from_subspaces",
    "build_second_order",
    "dirichlet_system",
    "direct_sum",
    "characteristic_expsum",
    "random_first_order_system",
    "rank_one_functional",
    "NotDiagonalizable",
]
