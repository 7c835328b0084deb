"""Eigenfunctions, adjoint eigenfunctions and spectral projection norms.

Everything is kept in closed form: on each interval a function is
C @ exp(mu (x - x_left)), so inner products reduce to exponential integrals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateKernel, NotAnEigenvalue
from ..linalg_core import null_space, phase_fix
from ..system_model import PiecewiseFirstOrderSystem, transfer_matrix

KERNEL_TOL = 1e-8
GAP_TOL = 1e-6
GRAM_EPS = 1e-12


def exp_integral(w, L):
    """Integral of e^{w y} over [0, L], elementwise; uses the series limit near w = 0."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) <= GRAM_EPS
    safe = np.where(small, 1.0, w)
    return np.where(small, L * (1 + w * L / 2), np.expm1(w * L) / safe)


def gram_integral(mu: complex, nu: complex, a: float, b: float) -> complex:
    """Integral over [a, b] of e^{mu x} conj(e^{nu x})."""
    w = mu + np.conj(nu)
    if abs(w) <= GRAM_EPS:
        return complex((b - a) * np.exp(w * a))
    return complex(np.exp(w * a) * np.expm1(w * (b - a)) / w)


@dataclass(frozen=True)
class PiecewiseExponentialFunction:
    """Vector function equal to coefs[s] @ exp(exponents[s] (x - breakpoints[s])) on interval s."""

    breakpoints: np.ndarray
    coefs: tuple
    exponents: tuple

    @property
    def n(self) -> int:
        return self.coefs[0].shape[0]

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        bp = self.breakpoints
        s = np.clip(np.searchsorted(bp, x, side="right") - 1, 0, len(self.coefs) - 1)
        out = np.empty((x.size, self.n), dtype=complex)
        for k in range(len(self.coefs)):
            m = s == k
            if m.any():
                E = np.exp(np.outer(x[m] - bp[k], self.exponents[k]))
                out[m] = E @ self.coefs[k].T
        return out

    def left_value(self, s: int) -> np.ndarray:
        return self.coefs[s].sum(axis=1)

    def right_value(self, s: int) -> np.ndarray:
        L = self.breakpoints[s + 1] - self.breakpoints[s]
        return self.coefs[s] @ np.exp(self.exponents[s] * L)

    def inner(self, other: "PiecewiseExponentialFunction") -> complex:
        """<self, other> = integral of sum_i self_i conj(other_i)."""
        if not np.allclose(self.breakpoints, other.breakpoints):
            raise ValueError("functions live on different partitions")
        total = 0j
        for s in range(len(self.coefs)):
            L = self.breakpoints[s + 1] - self.breakpoints[s]
            G = self.coefs[s].T @ other.coefs[s].conj()  # (K_self, K_other)
            W = self.exponents[s][:, None] + np.conj(other.exponents[s])[None, :]
            total += complex((G * exp_integral(W, L)).sum())
        return total

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self).real, 0.0)))

    def scaled(self, c: complex) -> "PiecewiseExponentialFunction":
        return PiecewiseExponentialFunction(self.breakpoints, tuple(c * C for C in self.coefs), self.exponents)


def _kernel_vector(M: np.ndarray, z0: complex) -> np.ndarray:
    scale = np.linalg.norm(M, axis=1)
    # rows that vanish up to rounding impose no condition; do not blow them up
    null_rows = scale <= 1e-13 * scale.max()
    scale[null_rows] = 1.0
    Me = M / scale[:, None]
    Me[null_rows] = 0.0
    _, s, vh = np.linalg.svd(Me)
    if s[-1] > KERNEL_TOL * s[0]:
        raise NotAnEigenvalue(f"z = {z0} is not an eigenvalue: sigma_min/sigma_max = {s[-1] / s[0]:.3g}")
    if s.size > 1 and s[-2] <= GAP_TOL * s[0]:
        raise DegenerateKernel(f"eigenvalue {z0} has a kernel of dimension > 1")
    return phase_fix(vh[-1].conj())


def eigenfunction(sys: PiecewiseFirstOrderSystem, z0: complex) -> PiecewiseExponentialFunction:
    """Solution of A f' = z0 f with S f(alpha) + T f(beta) = 0; f(alpha) has unit norm."""
    z0 = complex(z0)
    M = sys.S + sys.T @ transfer_matrix(sys, z0)
    f = _kernel_vector(M, z0)
    coefs, exps = [], []
    for s, dec in enumerate(sys.eigs):
        c = dec.V_inv @ f
        coefs.append(dec.V * c)
        mu = z0 / dec.d
        exps.append(mu)
        f = dec.V @ (c * np.exp(mu * sys.lengths[s]))
    return PiecewiseExponentialFunction(sys.breakpoints, tuple(coefs), tuple(exps))


def _boundary_pairs(sys: PiecewiseFirstOrderSystem) -> tuple[np.ndarray, np.ndarray]:
    """Bases (a_k, b_k) of ker [S T]: all admissible (f(alpha), f(beta))."""
    K = null_space(np.hstack([sys.S, sys.T]))
    n = sys.n
    return K[:n].T, K[n:].T


def adjoint_eigenfunction(sys: PiecewiseFirstOrderSystem, z0: complex) -> PiecewiseExponentialFunction:
    """Eigenfunction g of L* for conj(z0).

    With h = A* g (continuous), h' = -conj(z0) A^{-*} h and the boundary form
    requires <a, h(alpha)> = <b, h(beta)> for all (a, b) in ker [S T].
    """
    z0 = complex(z0)
    Phi = np.linalg.inv(transfer_matrix(sys, z0)).conj().T  # h(beta) = Phi h(alpha)
    A_rows, B_rows = _boundary_pairs(sys)
    M = A_rows.conj() - B_rows.conj() @ Phi
    h = _kernel_vector(M, z0)
    coefs, exps = [], []
    for s, dec in enumerate(sys.eigs):
        Vh = dec.V.conj().T
        Vinv_h = np.linalg.inv(Vh)
        c = Vh @ h
        mu = -np.conj(z0 / dec.d)
        # g = A^{-*} h = V^{-*} conj(D)^{-1} V^* h
        coefs.append(Vinv_h * (c / np.conj(dec.d)))
        exps.append(mu)
        h = Vinv_h @ (c * np.exp(mu * sys.lengths[s]))
    return PiecewiseExponentialFunction(sys.breakpoints, tuple(coefs), tuple(exps))


@dataclass(frozen=True)
class ProjectionReport:
    z0: complex
    norm_f: float
    norm_g: float
    pairing: complex
    proj_norm: float

    def to_json(self) -> dict:
        return {"z0": [self.z0.real, self.z0.imag], "norm_f": self.norm_f, "norm_g": self.norm_g,
                "pairing": [self.pairing.real, self.pairing.imag], "proj_norm": self.proj_norm}


def projection_norm(sys: PiecewiseFirstOrderSystem, z0: complex) -> ProjectionReport:
    """Norm ||f|| ||g|| / |<f, g>| of the rank-one spectral projection at a simple eigenvalue."""
    f = eigenfunction(sys, z0)
    g = adjoint_eigenfunction(sys, z0)
    nf, ng = f.norm(), g.norm()
    p = f.inner(g)
    return ProjectionReport(complex(z0), nf, ng, p, nf * ng / abs(p))
