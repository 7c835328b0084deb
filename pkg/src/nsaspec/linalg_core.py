"""Small dense complex matrix kernel (n <= 16).

Thin, validated wrappers over LAPACK via numpy. Everything here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotDiagonalizable, NumericalFailure

MAX_DIM = 16
DEFECT_TOL = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite square complex array, raising DimensionMismatch otherwise."""
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be a nonempty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DimensionMismatch(f"{name} has non-finite entries")
    return m


def phase_fix(v: np.ndarray, rel: float = 1e-12) -> np.ndarray:
    """Rotate ``v`` so its first significant entry is positive real."""
    v = np.asarray(v, dtype=complex)
    mags = np.abs(v)
    if mags.max(initial=0.0) == 0.0:
        return v
    k = int(np.argmax(mags > rel * mags.max()))
    return v * (abs(v[k]) / v[k])


@dataclass(frozen=True)
class EigDecomposition:
    V: np.ndarray
    d: np.ndarray
    cond_V: float

    @property
    def V_inv(self) -> np.ndarray:
        return np.linalg.inv(self.V)

    def reconstruct(self) -> np.ndarray:
        return (self.V * self.d) @ np.linalg.inv(self.V)


def eig_decompose(A, tol: float = DEFECT_TOL) -> EigDecomposition:
    """Eigendecomposition ``A = V diag(d) V^{-1}`` with deterministic ordering.

    Eigenvalues are sorted lexicographically by (Re, Im); eigenvector
    columns have unit norm and a fixed phase. Raises NotDiagonalizable
    when cond(V) exceeds 1/tol.
    """
    A = as_matrix(A, "A")
    n = A.shape[0]
    if n > MAX_DIM:
        raise DimensionMismatch(f"dimension {n} exceeds {MAX_DIM}")
    try:
        d, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalFailure(str(exc)) from exc
    order = np.lexsort((d.imag, d.real))
    d = d[order]
    V = V[:, order]
    V = V / np.linalg.norm(V, axis=0)
    V = np.column_stack([phase_fix(V[:, k]) for k in range(n)])
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond > 1.0 / tol:
        raise NotDiagonalizable(f"eigenvector matrix condition {cond:.3g} exceeds {1.0 / tol:.3g}")
    scale = 1.0 + np.abs(A).max()
    resid = np.abs(A @ V - V * d).max()
    if resid > 1e-10 * scale:
        raise NumericalFailure(f"eigen-residual {resid:.3g} too large")
    return EigDecomposition(V=V, d=d, cond_V=cond)


def hermitian_min_eig(A) -> float:
    """Smallest eigenvalue of the Hermitian part (A + A*)/2.

    ``A`` is accretive exactly when the result is >= 0.
    """
    A = as_matrix(A, "A")
    H = (A + A.conj().T) / 2
    return float(np.linalg.eigvalsh(H)[0])


def det(A) -> complex:
    return complex(np.linalg.det(as_matrix(A)))


def inv(A) -> np.ndarray:
    A = as_matrix(A)
    if np.linalg.cond(A) > 1e14:
        raise NumericalFailure("matrix is numerically singular")
    return np.linalg.inv(A)


def orthonormal_basis(vectors, n: int, rank_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of span(vectors) by modified Gram-Schmidt."""
    basis: list[np.ndarray] = []
    for v in vectors:
        w = np.array(v, dtype=complex).reshape(-1)
        if w.shape[0] != n:
            raise DimensionMismatch(f"vector of length {w.shape[0]} in {n}-dimensional space")
        norm0 = np.linalg.norm(w)
        if norm0 == 0:
            continue
        for _ in range(2):  # re-orthogonalize once
            for q in basis:
                w = w - np.vdot(q, w) * q
        if np.linalg.norm(w) > rank_tol * max(norm0, 1.0):
            basis.append(w / np.linalg.norm(w))
    if not basis:
        return np.zeros((n, 0), dtype=complex)
    return np.column_stack(basis)


def orthogonal_complement(basis: np.ndarray, rank_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the column span of ``basis``."""
    n = basis.shape[0]
    eye = np.eye(n, dtype=complex)
    if basis.shape[1] == 0:
        return eye
    full = orthonormal_basis(list(basis.T) + list(eye), n, rank_tol)
    return full[:, basis.shape[1]:]


def null_space(M: np.ndarray, rel_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of ker M from the SVD."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    _, s, vh = np.linalg.svd(M)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rel_tol * max(smax, 1e-300)))
    return vh[rank:].conj().T
