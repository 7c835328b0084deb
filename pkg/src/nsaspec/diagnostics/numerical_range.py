"""Rayleigh-quotient probe showing the numerical range of H = -A d^2/dx^2 is unbounded.

Test functions f_n = (c + e^{i psi} d [(x + 1/n)^{2/3} - n^{-2/3}]) phi(x)
satisfy f(0) = c in U and f'(0) in span(d) = V, are cut off smoothly by phi,
and have <H f_n, f_n> growing like (2/3) e^{i psi} n^{1/3} <A d, c>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..errors import QuadratureFailure
from ..linalg_core import orthonormal_basis

QUAD_RTOL = 1e-8


@dataclass(frozen=True)
class ProbeConfig:
    """Diagonal coefficient A and boundary vectors c (in U) and d (in V)."""

    A: np.ndarray
    c: np.ndarray
    d: np.ndarray

    @classmethod
    def rhombus(cls, alpha: float = math.pi / 6, theta: float = math.pi / 4) -> "ProbeConfig":
        A = np.array([np.exp(2j * alpha), np.exp(-2j * alpha)])
        c = np.array([math.sin(theta), -math.cos(theta)], dtype=complex)
        d = np.array([math.cos(theta), math.sin(theta)], dtype=complex)
        return cls(A, c, d)

    @classmethod
    def from_subspaces(cls, A_diag, U, V) -> "ProbeConfig":
        """Choose unit c in U and d in V maximizing |<A d, c>|."""
        A = np.asarray(A_diag, dtype=complex).reshape(-1)
        n = A.size
        Ub = orthonormal_basis(U, n)
        Vb = orthonormal_basis(V, n)
        M = Ub.conj().T @ (A[:, None] * Vb)
        left, _, right_h = np.linalg.svd(M)
        return cls(A, Ub @ left[:, 0], Vb @ right_h[0].conj())

    @property
    def coupling(self) -> complex:
        """<A d, c>."""
        return complex(np.vdot(self.c, self.A * self.d))


def bump(x):
    """(phi, phi', phi'') with phi = 1 on [0, 1/3], 0 on [2/3, oo), smooth in between."""
    x = np.asarray(x, dtype=float)
    d1 = np.zeros_like(x)
    d2 = np.zeros_like(x)
    t = 3 * x - 1
    m = (t > 0) & (t < 1)  # decided on t so rounding never puts t = 0 inside
    phi = np.where(t <= 0, 1.0, 0.0)
    if m.any():
        t = t[m]
        E = 1 / (1 - t) - 1 / t
        E1 = 1 / (1 - t) ** 2 + 1 / t ** 2
        E2 = 2 / (1 - t) ** 3 - 2 / t ** 3
        p = expit(-E)
        q = expit(E)  # 1 - p without cancellation
        p1 = -p * q * E1
        p2 = -p1 * (q - p) * E1 - p * q * E2
        phi[m] = p
        d1[m] = 3 * p1
        d2[m] = 9 * p2
    return phi, d1, d2


def _integrands(cfg: ProbeConfig, psi: float, n: float, x: np.ndarray):
    eps = 1.0 / n
    s = x + eps
    w = s ** (2 / 3) - eps ** (2 / 3)
    w1 = (2 / 3) * s ** (-1 / 3)
    w2 = -(2 / 9) * s ** (-4 / 3)
    phi, phi1, phi2 = bump(x)
    e = np.exp(1j * psi)
    c, d = cfg.c[None, :], cfg.d[None, :]
    f = (c + e * d * w[:, None]) * phi[:, None]
    f2 = (e * d * (w2 * phi + 2 * w1 * phi1)[:, None] + (c + e * d * w[:, None]) * phi2[:, None])
    Hf = -cfg.A[None, :] * f2
    num = (Hf * f.conj()).sum(axis=1)
    den = (np.abs(f) ** 2).sum(axis=1)
    return num, den


def _mesh(n: float) -> np.ndarray:
    """Geometric grading from 1e-3/n up to 1/3, then uniform pieces across the cutoff."""
    eps = 1.0 / n
    pts = [0.0]
    x = 1e-3 * eps
    while x < 1 / 3:
        pts.append(x)
        x *= 2.0
    pts.extend(np.linspace(1 / 3, 2 / 3, 17))
    return np.unique(np.array(pts))


def _gauss(cfg, psi, n, order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    mesh = _mesh(n)
    a, b = mesh[:-1], mesh[1:]
    x = ((b - a)[:, None] * (nodes[None, :] + 1) / 2 + a[:, None]).ravel()
    w = ((b - a)[:, None] / 2 * weights[None, :]).ravel()
    num, den = _integrands(cfg, psi, n, x)
    return complex((w * num).sum()), float((w * den).sum())


def numerical_range_probe(cfg: ProbeConfig, psi: float, n: float, order: int = 20) -> complex:
    """<H f_n, f_n> / <f_n, f_n> by composite Gauss-Legendre quadrature.

    The result is accepted when doubling the order changes it by less
    than 1e-8 relative; otherwise QuadratureFailure is raised.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    num1, den1 = _gauss(cfg, psi, n, order)
    num2, den2 = _gauss(cfg, psi, n, 2 * order)
    q1, q2 = num1 / den1, num2 / den2
    if not np.isfinite(q2) or abs(q1 - q2) > QUAD_RTOL * max(abs(q2), 1.0):
        raise QuadratureFailure(f"quadrature not converged: {q1} vs {q2}")
    return q2
