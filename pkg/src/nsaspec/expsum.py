"""Exact arithmetic on exponential sums  F(z) = sum_r delta_r exp(mu_r z).

An :class:`ExpSum` is kept in canonical form: exponents closer than
``merge_tol * (1 + max|mu|)`` are merged, coefficients below
``drop_tol * scale`` are dropped, and terms are sorted by (Re mu, Im mu).

``scale`` tracks the largest coefficient magnitude that fed into a value
(propagated multiplicatively through products), so that coefficients
which cancel down to rounding noise are recognised as zero even when
every surviving coefficient is itself tiny.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionTooLarge, EvaluationOverflow, TermBudgetExceeded

MERGE_TOL = 1e-10
DROP_TOL = 1e-14
MAX_TERMS = 100_000
MAX_DET_DIM = 8
OVERFLOW_EXP = 700.0


@dataclass(frozen=True, eq=False)
class ExpSum:
    mu: np.ndarray
    delta: np.ndarray
    merge_tol: float = MERGE_TOL
    drop_tol: float = DROP_TOL
    scale: float = field(default=0.0)

    def __post_init__(self):
        mu = np.array(self.mu, dtype=complex).reshape(-1)
        delta = np.array(self.delta, dtype=complex).reshape(-1)
        if mu.shape != delta.shape:
            raise ValueError("mu and delta must have equal length")
        mu.setflags(write=False)
        delta.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "delta", delta)
        if self.scale == 0.0 and delta.size:
            object.__setattr__(self, "scale", float(np.abs(delta).max()))

    # construction -------------------------------------------------------
    @classmethod
    def from_terms(cls, terms: Iterable[tuple[complex, complex]], merge_tol: float = MERGE_TOL,
                   drop_tol: float = DROP_TOL) -> "ExpSum":
        """Canonical sum from raw (mu, delta) pairs."""
        terms = list(terms)
        mu = [t[0] for t in terms]
        delta = [t[1] for t in terms]
        return es_normalize(mu, delta, merge_tol=merge_tol, drop_tol=drop_tol)

    @classmethod
    def zero(cls, merge_tol: float = MERGE_TOL, drop_tol: float = DROP_TOL) -> "ExpSum":
        return cls(np.zeros(0, complex), np.zeros(0, complex), merge_tol, drop_tol, 0.0)

    @classmethod
    def constant(cls, c: complex, merge_tol: float = MERGE_TOL, drop_tol: float = DROP_TOL) -> "ExpSum":
        return cls.exponential(0.0, c, merge_tol, drop_tol)

    @classmethod
    def exponential(cls, mu: complex, delta: complex = 1.0, merge_tol: float = MERGE_TOL,
                    drop_tol: float = DROP_TOL) -> "ExpSum":
        if delta == 0:
            return cls.zero(merge_tol, drop_tol)
        return cls(np.array([mu], complex), np.array([delta], complex), merge_tol, drop_tol,
                   abs(complex(delta)))

    # container protocol -------------------------------------------------
    def __len__(self) -> int:
        return int(self.mu.size)

    @property
    def terms(self) -> list[tuple[complex, complex]]:
        return [(complex(m), complex(d)) for m, d in zip(self.mu, self.delta)]

    @property
    def is_zero(self) -> bool:
        return self.mu.size == 0

    @property
    def gammas(self) -> np.ndarray:
        """Exponent-plane points gamma_r = conj(mu_r)."""
        return self.mu.conj()

    def __repr__(self) -> str:
        body = " + ".join(f"({d:.6g})e^({m:.6g} z)" for m, d in self.terms[:6])
        more = "" if len(self) <= 6 else f" + ... [{len(self)} terms]"
        return f"ExpSum({body or '0'}{more})"

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, ExpSum):
            other = ExpSum.constant(complex(other), self.merge_tol, self.drop_tol)
        return es_add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return ExpSum(self.mu, -self.delta, self.merge_tol, self.drop_tol, self.scale)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, ExpSum):
            return es_mul(self, other)
        return es_scale(self, complex(other))

    __rmul__ = __mul__

    def __call__(self, z):
        return es_eval(self, z)

    def derivative(self) -> "ExpSum":
        return es_derivative(self)

    def shifted(self, c: complex) -> "ExpSum":
        """Multiply by exp(c z); translates every gamma by conj(c)."""
        return ExpSum(self.mu + c, self.delta, self.merge_tol, self.drop_tol, self.scale)

    # serialization ------------------------------------------------------
    def to_json_terms(self) -> list[dict]:
        return [{"mu": [m.real, m.imag], "delta": [d.real, d.imag]} for m, d in self.terms]

    @classmethod
    def from_json_terms(cls, items: Sequence[dict], merge_tol: float = MERGE_TOL) -> "ExpSum":
        terms = []
        for k, item in enumerate(items):
            try:
                mu = complex(*item["mu"])
                delta = complex(*item["delta"])
            except (KeyError, TypeError) as exc:
                raise ValueError(f"term {k}: expected {{'mu': [re, im], 'delta': [re, im]}}") from exc
            terms.append((mu, delta))
        return cls.from_terms(terms, merge_tol=merge_tol)

    def to_json(self) -> str:
        return json.dumps(self.to_json_terms())


def es_normalize(mu, delta, merge_tol: float = MERGE_TOL, drop_tol: float = DROP_TOL,
                 scale: float | None = None) -> ExpSum:
    """Canonicalize raw terms: merge close exponents, drop negligible coefficients, sort."""
    mu = np.asarray(mu, dtype=complex).reshape(-1)
    delta = np.asarray(delta, dtype=complex).reshape(-1)
    keep = np.isfinite(mu) & np.isfinite(delta) & (delta != 0)
    raw_scale = float(np.abs(delta[keep]).max()) if keep.any() else 0.0
    scale = max(raw_scale, scale or 0.0)
    mu, delta = mu[keep], delta[keep]
    if mu.size == 0:
        return ExpSum(mu, delta, merge_tol, drop_tol, scale)

    tol = merge_tol * (1.0 + float(np.abs(mu).max()))
    order = np.lexsort((mu.imag, mu.real))
    mu, delta = mu[order], delta[order]
    # split into runs of nearly equal real part, then by imaginary part inside a run
    re_group = np.concatenate([[0], np.cumsum(np.diff(mu.real) > tol)])
    order = np.lexsort((mu.imag, re_group))
    mu, delta, re_group = mu[order], delta[order], re_group[order]
    new_cluster = np.ones(mu.size, dtype=bool)
    new_cluster[1:] = (re_group[1:] != re_group[:-1]) | (np.diff(mu.imag) > tol)
    cluster = np.cumsum(new_cluster) - 1
    n_clusters = int(cluster[-1]) + 1
    merged = np.zeros(n_clusters, dtype=complex)
    np.add.at(merged, cluster, delta)
    rep = mu[new_cluster]

    alive = np.abs(merged) > drop_tol * scale
    rep, merged = rep[alive], merged[alive]
    order = np.lexsort((rep.imag, rep.real))
    return ExpSum(rep[order], merged[order], merge_tol, drop_tol, scale)


def _tols(*sums: ExpSum) -> tuple[float, float]:
    return max(s.merge_tol for s in sums), max(s.drop_tol for s in sums)


def es_add(*sums: ExpSum) -> ExpSum:
    """Sum of exponential sums (term concatenation plus normalization)."""
    if not sums:
        return ExpSum.zero()
    merge_tol, drop_tol = _tols(*sums)
    mu = np.concatenate([s.mu for s in sums])
    delta = np.concatenate([s.delta for s in sums])
    return es_normalize(mu, delta, merge_tol, drop_tol, scale=max(s.scale for s in sums))


def es_scale(a: ExpSum, c: complex) -> ExpSum:
    if c == 0:
        return ExpSum.zero(a.merge_tol, a.drop_tol)
    return ExpSum(a.mu, a.delta * c, a.merge_tol, a.drop_tol, a.scale * abs(c))


def es_mul(a: ExpSum, b: ExpSum) -> ExpSum:
    """Product: exponents add pairwise, coefficients multiply."""
    merge_tol, drop_tol = _tols(a, b)
    if len(a) * len(b) > MAX_TERMS:
        raise TermBudgetExceeded(f"product of {len(a)} x {len(b)} terms exceeds {MAX_TERMS}")
    if a.is_zero or b.is_zero:
        return ExpSum.zero(merge_tol, drop_tol)
    mu = (a.mu[:, None] + b.mu[None, :]).ravel()
    delta = (a.delta[:, None] * b.delta[None, :]).ravel()
    return es_normalize(mu, delta, merge_tol, drop_tol, scale=a.scale * b.scale)


def es_derivative(f: ExpSum) -> ExpSum:
    return es_normalize(f.mu, f.mu * f.delta, f.merge_tol, f.drop_tol,
                        scale=f.scale * (float(np.abs(f.mu).max()) if len(f) else 0.0))


def _exponents(f: ExpSum, z):
    z = np.asarray(z, dtype=complex)
    return np.multiply.outer(f.mu, z), z


def es_eval_scaled(f: ExpSum, z):
    """Evaluate in scaled form: returns (value, log_scale) with F(z) = value * exp(log_scale).

    ``log_scale`` is the log-modulus of the dominant term at each z, so
    ``value`` is O(1) whenever no catastrophic cancellation occurs.
    Works elementwise on arrays.
    """
    E, z = _exponents(f, z)
    if f.is_zero:
        return np.zeros(z.shape, complex), np.full(z.shape, -np.inf)
    logmag = E.real + np.log(np.abs(f.delta)).reshape((-1,) + (1,) * z.ndim)
    s = logmag.max(axis=0)
    value = (f.delta.reshape((-1,) + (1,) * z.ndim) * np.exp(E - s)).sum(axis=0)
    return value, s


def es_eval(f: ExpSum, z):
    """F(z) = sum_r delta_r exp(mu_r z), summed in canonical term order.

    Raises EvaluationOverflow (carrying log|F| and arg F) when some
    Re(mu_r z) exceeds 700 and the value cannot be represented.
    """
    E, zz = _exponents(f, z)
    if f.is_zero:
        return 0j if zz.ndim == 0 else np.zeros(zz.shape, complex)
    if np.any(E.real > OVERFLOW_EXP):
        value, s = es_eval_scaled(f, z)
        with np.errstate(divide="ignore"):
            log_abs = np.log(np.abs(value)) + s
        raise EvaluationOverflow(
            "exponential sum overflows double precision; see log_abs/arg",
            log_abs=log_abs if np.ndim(log_abs) else float(log_abs),
            arg=np.angle(value) if np.ndim(value) else float(np.angle(value)),
        )
    out = (f.delta.reshape((-1,) + (1,) * zz.ndim) * np.exp(E)).sum(axis=0)
    return complex(out) if zz.ndim == 0 else out


def es_log_abs(f: ExpSum, z):
    value, s = es_eval_scaled(f, z)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(value)) + s


def term_scale(f: ExpSum, z):
    """max_r |delta_r exp(mu_r z)|, the natural yardstick for |F(z)|."""
    E, z = _exponents(f, z)
    logmag = E.real + np.log(np.abs(f.delta)).reshape((-1,) + (1,) * z.ndim)
    return np.exp(logmag.max(axis=0))


class ExpSumMatrix:
    """Square matrix with ExpSum entries (row-major list of lists)."""

    def __init__(self, entries: Sequence[Sequence[ExpSum]]):
        rows = [list(r) for r in entries]
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("ExpSumMatrix must be square and nonempty")
        tols = {(e.merge_tol) for r in rows for e in r}
        if len(tols) > 1:
            raise ValueError("all entries must share merge_tol")
        self.entries = rows
        self.n = n

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    @classmethod
    def from_constant(cls, M, merge_tol: float = MERGE_TOL, drop_tol: float = DROP_TOL) -> "ExpSumMatrix":
        M = np.asarray(M, dtype=complex)
        return cls([[ExpSum.constant(M[i, j], merge_tol, drop_tol) for j in range(M.shape[1])]
                    for i in range(M.shape[0])])

    @classmethod
    def from_spectral(cls, projectors: Sequence[np.ndarray], exponents: Sequence[complex],
                      merge_tol: float = MERGE_TOL, drop_tol: float = DROP_TOL) -> "ExpSumMatrix":
        """sum_t exp(exponents[t] z) * projectors[t]."""
        n = projectors[0].shape[0]
        mu = np.asarray(exponents, dtype=complex)
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                coef = np.array([P[i, j] for P in projectors], dtype=complex)
                scale = float(np.abs(coef).max())
                row.append(es_normalize(mu, coef, merge_tol, drop_tol, scale=scale))
            rows.append(row)
        return cls(rows)

    def __matmul__(self, other: "ExpSumMatrix") -> "ExpSumMatrix":
        n = self.n
        return ExpSumMatrix([[es_add(*[es_mul(self.entries[i][k], other.entries[k][j]) for k in range(n)])
                              for j in range(n)] for i in range(n)])

    def __add__(self, other: "ExpSumMatrix") -> "ExpSumMatrix":
        return ExpSumMatrix([[es_add(a, b) for a, b in zip(ra, rb)]
                             for ra, rb in zip(self.entries, other.entries)])

    def left_multiply(self, M) -> "ExpSumMatrix":
        """Constant matrix times this matrix."""
        M = np.asarray(M, dtype=complex)
        n = self.n
        return ExpSumMatrix([[es_add(*[es_scale(self.entries[k][j], M[i, k]) for k in range(n)])
                              for j in range(n)] for i in range(n)])

    def evaluate(self, z: complex) -> np.ndarray:
        return np.array([[es_eval(e, z) for e in row] for row in self.entries])

    def det(self) -> ExpSum:
        return es_matrix_det(self)


def es_matrix_det(M: ExpSumMatrix) -> ExpSum:
    """Determinant over the ExpSum ring by cofactor expansion with memoized minors.

    Minors are indexed by (bitmask of columns) for the trailing rows, so
    each of the 2^n minors is built once.
    """
    if not isinstance(M, ExpSumMatrix):
        M = ExpSumMatrix(M)
    n = M.n
    if n > MAX_DET_DIM:
        raise DimensionTooLarge(f"cofactor determinant limited to n <= {MAX_DET_DIM}, got {n}")
    merge_tol = M.entries[0][0].merge_tol
    drop_tol = M.entries[0][0].drop_tol
    minors: dict[int, ExpSum] = {0: ExpSum.constant(1.0, merge_tol, drop_tol)}
    for k in range(1, n + 1):
        row = n - k
        next_minors: dict[int, ExpSum] = {}
        for mask in _masks_of_size(n, k):
            cols = [j for j in range(n) if mask >> j & 1]
            parts = []
            for idx, j in enumerate(cols):
                entry = M.entries[row][j]
                sub = minors[mask & ~(1 << j)]
                if entry.is_zero or sub.is_zero:
                    continue
                prod = es_mul(entry, sub)
                parts.append(-prod if idx % 2 else prod)
            next_minors[mask] = es_add(*parts) if parts else ExpSum.zero(merge_tol, drop_tol)
        minors = next_minors
    return minors[(1 << n) - 1]


def _masks_of_size(n: int, k: int):
    from itertools import combinations

    for cols in combinations(range(n), k):
        yield sum(1 << j for j in cols)


def dominant_index(f: ExpSum, z: complex) -> int:
    """Index of the term with largest modulus at z."""
    logmag = (f.mu * z).real + np.log(np.abs(f.delta))
    return int(np.argmax(logmag))


def log_asymptote(f: ExpSum, z: complex, r: int) -> complex:
    """log(delta_r) + mu_r z, the sector asymptote of log F."""
    return complex(np.log(f.delta[r]) + f.mu[r] * z)


def principal_log_eval(f: ExpSum, z: complex) -> complex:
    """log F(z) computed without overflow (branch continued from the dominant term)."""
    r = dominant_index(f, z)
    ratio = (f.delta / f.delta[r] * np.exp((f.mu - f.mu[r]) * z)).sum()
    return log_asymptote(f, z, r) + complex(np.log(ratio))


def isclose_sums(a: ExpSum, b: ExpSum, rtol: float = 1e-10) -> bool:
    """Term-for-term comparison of two canonical sums."""
    if len(a) != len(b):
        return False
    tol_mu = rtol * (1 + max(np.abs(a.mu).max(initial=0), np.abs(b.mu).max(initial=0)))
    tol_d = rtol * max(np.abs(a.delta).max(initial=0), np.abs(b.delta).max(initial=0))
    return bool(np.all(np.abs(a.mu - b.mu) <= tol_mu) and np.all(np.abs(a.delta - b.delta) <= tol_d))
