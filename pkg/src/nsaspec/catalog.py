"""Named example operators, replayable from the CLI and the self-test."""

from __future__ import annotations

import numpy as np

from .errors import UnknownExample
from .expsum import ExpSum
from .system_model import (
    PiecewiseFirstOrderSystem,
    SecondOrderDiagonalSystem,
    boundary_from_subspaces,
    direct_sum,
)

# f_1 = f_2 at both ends of (0, pi)
_EQUAL_ENDS_S = np.array([[1, -1], [0, 0]], dtype=complex)
_EQUAL_ENDS_T = np.array([[0, 0], [1, -1]], dtype=complex)


def satwodim(t: float = 1.0) -> PiecewiseFirstOrderSystem:
    """(Lf)_1 = i t f_1', (Lf)_2 = -i t f_2' on (0, pi); self-adjoint, spectrum tZ."""
    A = np.diag([1j * t, -1j * t])
    return PiecewiseFirstOrderSystem([0.0, np.pi], (A,), _EQUAL_ENDS_S, _EQUAL_ENDS_T)


def twodim(s: float = 1.0, t: float = 1.0) -> PiecewiseFirstOrderSystem:
    """(Lf)_1 = u f_1', (Lf)_2 = conj(u) f_2' with u = s + i t; spectrum (s^2+t^2) Z / t."""
    u = complex(s, t)
    A = np.diag([u, u.conjugate()])
    return PiecewiseFirstOrderSystem([0.0, np.pi], (A,), _EQUAL_ENDS_S, _EQUAL_ENDS_T)


def pathol(n: int = 4) -> ExpSum:
    """F_n(z) = (1/n) sum_r exp(e^{2 pi i r/n} z)."""
    n = int(n)
    roots = np.exp(2j * np.pi * np.arange(1, n + 1) / n)
    return ExpSum.from_terms([(w, 1.0 / n) for w in roots])


def periodic(A1=None, A2=None, seed: int = 0, opposite: bool = False) -> PiecewiseFirstOrderSystem:
    """Periodic conditions f(0) = f(2), A = A1 on (0, 1], A2 on (1, 2].

    Unspecified matrices are drawn from a seeded generator; ``opposite``
    forces A2 = -A1 (every solution periodic, F identically zero).
    """
    rng = np.random.default_rng(seed)

    def draw():
        V = np.eye(2) + 0.4 * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        a = rng.uniform(0.7, 2.0, 2) * np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
        return V @ np.diag(a) @ np.linalg.inv(V)

    A1 = draw() if A1 is None else np.asarray(A1, dtype=complex)
    if opposite:
        A2 = -A1
    elif A2 is None:
        A2 = draw()
    return PiecewiseFirstOrderSystem([0.0, 1.0, 2.0], (A1, np.asarray(A2, dtype=complex)),
                                     np.eye(2, dtype=complex), -np.eye(2, dtype=complex))


def rhombus(alpha: float = np.pi / 6, theta: float = np.pi / 4) -> SecondOrderDiagonalSystem:
    """Coupled second-order pair on (0, pi) whose exponent polygon is a rhombus.

    Speeds e^{+-i alpha}; conditions f_1(0) = 0, f_2'(0) = 0,
    cos(theta) f_1(pi) + sin(theta) f_2(pi) = 0 and
    -sin(theta) f_1'(pi) + cos(theta) f_2'(pi) = 0. The operator
    -e^{2i alpha} d^2/dx^2 (+) -e^{-2i alpha} d^2/dx^2 has eigenvalues -z^2
    at the zeros z.
    """
    c, s = np.cos(theta), np.sin(theta)
    return SecondOrderDiagonalSystem(
        speeds=np.array([np.exp(1j * alpha), np.exp(-1j * alpha)]),
        U1=([0, 1],),
        U2=([1, 0],),
        V1=([s, -c],),
        V2=([c, s],),
        interval=(0.0, np.pi),
    )


def quasi_periodic(S=((2, 0), (0, 3)), alpha: float = 0.0, beta: float = 1.0) -> PiecewiseFirstOrderSystem:
    """L f = f' with f(beta) = S f(alpha); F(z) = det(S - e^{z(beta-alpha)} I)."""
    S = np.asarray(S, dtype=complex)
    n = S.shape[0]
    return PiecewiseFirstOrderSystem([alpha, beta], (np.eye(n, dtype=complex),), S, -np.eye(n, dtype=complex))


def constant_dirichlet(a: complex = 1.0, u=(1.0, 0.0), v=(1.0, 1.0), length: float = 1.0) -> PiecewiseFirstOrderSystem:
    """A = a I with f(0) in span(u) and <f(length), v> = 0."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    n = u.size
    from .linalg_core import orthogonal_complement, orthonormal_basis

    Vperp = orthogonal_complement(orthonormal_basis([v], n))
    S, T = boundary_from_subspaces([u], list(Vperp.T), n)
    return PiecewiseFirstOrderSystem([0.0, length], (complex(a) * np.eye(n),), S, T)


def _direct_sum(first: dict, second: dict) -> PiecewiseFirstOrderSystem:
    return direct_sum(example_catalog(first["name"], **first.get("params", {})),
                      example_catalog(second["name"], **second.get("params", {})))


CATALOG = {
    "satwodim": satwodim,
    "twodim": twodim,
    "pathol": pathol,
    "periodic": periodic,
    "rhombus": rhombus,
    "quasi_periodic": quasi_periodic,
    "constant_dirichlet": constant_dirichlet,
    "direct_sum": _direct_sum,
}


def example_catalog(name: str, **params):
    try:
        builder = CATALOG[name]
    except KeyError:
        raise UnknownExample(f"unknown example {name!r}; known: {', '.join(sorted(CATALOG))}") from None
    return builder(**params)
