import math

import numpy as np
import pytest

from nsaspec import catalog
from nsaspec.errors import (
    DimensionMismatch,
    IntersectingSubspaces,
    SpectrumIsWholePlane,
    UnknownExample,
)
from nsaspec.expsum import ExpSum, es_eval, isclose_sums
from nsaspec.rootfinder import Rect, find_zeros
from nsaspec.system_model import (
    PiecewiseFirstOrderSystem,
    SecondOrderDiagonalSystem,
    boundary_from_subspaces,
    build_second_order,
    char_function_numeric,
    characteristic_expsum,
    direct_sum,
    expand_char_function,
    random_first_order_system,
    rank_one_functional,
    transfer_matrix,
)

U = 1 + 1j


def test_transfer_matrix_examples():
    sys = PiecewiseFirstOrderSystem([0, math.pi], [np.diag([1, -1])], np.eye(2), np.eye(2))
    assert np.allclose(transfer_matrix(sys, 0), np.eye(2))
    z = 0.4 - 0.7j
    tw = catalog.twodim(1, 1)
    want = np.diag([np.exp(math.pi * z * (1 - 1j) / 2), np.exp(math.pi * z * (1 + 1j) / 2)])
    assert np.allclose(transfer_matrix(tw, z), want)


def test_transfer_composition():
    rng = np.random.default_rng(0)
    sys = random_first_order_system(rng, n=3, m=2)
    a1 = sys.breakpoints[1]
    first = PiecewiseFirstOrderSystem(sys.breakpoints[:2], sys.matrices[:1], sys.S, sys.T)
    second = PiecewiseFirstOrderSystem(sys.breakpoints[1:], sys.matrices[1:], sys.S, sys.T)
    for z in rng.standard_normal(5) + 1j * rng.standard_normal(5):
        lhs = transfer_matrix(sys, z)
        rhs = transfer_matrix(second, z) @ transfer_matrix(first, z)
        assert np.abs(lhs - rhs).max() <= 1e-10 * np.abs(lhs).max()
        assert np.allclose(transfer_matrix(sys, z, a1), transfer_matrix(first, z))


def test_numeric_char_function_vanishes_on_known_spectra():
    tw = catalog.twodim(1, 1)
    for n in range(-2, 3):
        assert abs(char_function_numeric(tw, 2 * n)) <= 1e-10
    sa = catalog.satwodim(1)
    for n in range(-3, 4):
        assert abs(char_function_numeric(sa, n)) <= 1e-10


def test_constant_coefficient_dirichlet_has_no_zeros():
    sys = catalog.constant_dirichlet(a=0.7 + 0.2j, u=(1, 0), v=(1, 1))
    rng = np.random.default_rng(3)
    for z in 5 * (rng.standard_normal(100) + 1j * rng.standard_normal(100)):
        assert abs(char_function_numeric(sys, z)) > 0


def test_twodim_expansion():
    F = expand_char_function(catalog.twodim(1, 1))
    want = ExpSum.from_terms([(math.pi * (1 - 1j) / 2, 1), (math.pi * (1 + 1j) / 2, -1)])
    c = F.delta[0] / want.delta[0]
    assert isclose_sums(F, want * c)


def test_expansion_matches_oracle():
    rng = np.random.default_rng(11)
    for n, m in [(1, 1), (2, 2), (3, 1), (3, 3)]:
        sys = random_first_order_system(rng, n=n, m=m)
        F = expand_char_function(sys)
        for z in 2 * (rng.standard_normal(10) + 1j * rng.standard_normal(10)):
            a, b = es_eval(F, z), char_function_numeric(sys, z)
            assert abs(a - b) <= 1e-10 * abs(b)


def test_periodic_exponents_and_whole_plane():
    sys = catalog.periodic(seed=4)
    F = expand_char_function(sys)
    u = [1 / d for d in sys.eigs[0].d]
    v = [1 / d for d in sys.eigs[1].d]
    allowed = np.array([0, u[0] + v[0], u[0] + v[1], u[1] + v[0], u[1] + v[1], sum(u) + sum(v)])
    assert all(np.abs(allowed - m).min() < 1e-9 for m in F.mu)
    with pytest.raises(SpectrumIsWholePlane) as info:
        expand_char_function(catalog.periodic(seed=4, opposite=True))
    assert info.value.expsum is not None and info.value.expsum.is_zero


def test_boundary_from_subspaces():
    S, T = boundary_from_subspaces([[1, 0]], [[0, 1]])
    assert np.allclose(S @ [1, 0], 0) and np.allclose(T @ [0, 1], 0)
    assert np.linalg.matrix_rank(np.hstack([S, T])) == 2
    with pytest.raises(IntersectingSubspaces):
        boundary_from_subspaces([[1, 1]], [[1, 1]])
    with pytest.raises(DimensionMismatch):  # same refusal, seen as a dimension problem
        boundary_from_subspaces([[1, 1]], [[2, 2]])


def test_rank_one_functional_shares_zeros():
    from nsaspec.system_model import dirichlet_system

    u, v = np.array([1, 1]), np.array([1, 1])  # V = v^perp = span(1, -1)
    sys = dirichlet_system([0, 1], [np.diag([1, -1])], [u], [[1, -1]])
    F = expand_char_function(sys)
    g = rank_one_functional(sys, u, v)
    for z in np.array([0.3 + 0.2j, -1 + 2j, 2.5j]):
        assert es_eval(F, z) / g(z) == pytest.approx(es_eval(F, 0.1) / g(0.1), rel=1e-10)
    for q in find_zeros(F, Rect(-1, 1, -10, 10)).points:
        assert abs(g(q)) <= 1e-10


def test_rhombus_expsum():
    alpha, theta = math.pi / 6, math.pi / 4
    ch = build_second_order(catalog.rhombus(alpha, theta))
    F = ch.expsum
    want = {2 * math.pi * math.cos(alpha), -2 * math.pi * math.cos(alpha),
            2j * math.pi * math.sin(alpha), -2j * math.pi * math.sin(alpha)}
    assert len(F) == 4
    for m in F.mu:
        assert min(abs(m - w) for w in want) < 1e-12
    # coefficients of e^{+-2 pi cos(alpha) z} and e^{+-2 pi i sin(alpha) z}, up to one common factor
    big = 0.5 * (np.exp(1j * alpha) * math.cos(theta) ** 2 + np.exp(-1j * alpha) * math.sin(theta) ** 2)
    small = -0.5 * (np.exp(1j * alpha) * math.cos(theta) ** 2 - np.exp(-1j * alpha) * math.sin(theta) ** 2)
    d = dict(zip(np.round(F.mu, 9), F.delta))
    r1 = d[np.round(2 * math.pi * math.cos(alpha), 9)] / big
    r2 = d[np.round(2j * math.pi * math.sin(alpha), 9)] / small
    assert r1 == pytest.approx(r2, rel=1e-12)


def test_rhombus_theta_zero_spectrum():
    alpha = math.pi / 6
    F = build_second_order(catalog.rhombus(alpha, 0.0)).expsum
    zs = find_zeros(F, Rect(-6.3, 6.1, -6.2, 6.4)).points
    targets = [n * n * np.exp(2j * alpha) for n in range(12)] + [m * m * np.exp(-2j * alpha) for m in range(12)]
    for z in zs:
        # with eigenvalue -z^2 (see the catalog docstring) the squares sit on n^2 e^{+-2 i alpha}
        assert min(abs(-z * z - t) for t in targets) < 1e-8 * (1 + abs(z) ** 2)


def test_square_of_first_order_system():
    A = np.array([U, U.conjugate()])
    w = np.array([1, 1])
    L2 = SecondOrderDiagonalSystem(speeds=A, U1=(w,), U2=(w / A,), V1=(w,), V2=(w / A,), interval=(0, math.pi))
    F = build_second_order(L2).expsum
    found = find_zeros(F, Rect(0.5, 10.5, -1, 1))
    zs = found.points
    # +-2n of the first-order system square to the same value, so each zero is double
    assert np.allclose(np.sort(zs.real), [2, 4, 6, 8, 10], atol=1e-6)
    assert [z.multiplicity for z in found.zeros] == [2] * 5 and found.count == 10
    neg = find_zeros(F, Rect(-10.5, -0.5, -1, 1)).points
    assert np.allclose(np.sort(neg.real), [-10, -8, -6, -4, -2], atol=1e-6)


def test_catalog():
    p = catalog.pathol(4)
    assert len(p) == 4 and np.allclose(p.delta, 0.25)
    assert np.allclose(sorted(np.round(p.mu, 12), key=lambda m: np.angle(m)),
                       sorted(np.exp(2j * math.pi * np.arange(4) / 4), key=lambda m: np.angle(np.round(m, 12))))
    F = characteristic_expsum(catalog.quasi_periodic())
    for z in [math.log(2), math.log(3) + 2j * math.pi]:
        assert abs(es_eval(F, z)) < 1e-12
    with pytest.raises(UnknownExample):
        catalog.example_catalog("nope")


def test_direct_sum_multiplies():
    rng = np.random.default_rng(8)
    a = random_first_order_system(rng, 2, 1)
    b = random_first_order_system(rng, 1, 2)
    F = expand_char_function(direct_sum(a, b))
    G = expand_char_function(a) * expand_char_function(b)
    z = 0.3 - 0.8j
    assert es_eval(F, z) == pytest.approx(es_eval(G, z), rel=1e-10)


def test_validation():
    with pytest.raises(DimensionMismatch, match="A_1 not invertible"):
        PiecewiseFirstOrderSystem([0, 1], [np.diag([1, 0])], np.eye(2), np.eye(2))
    with pytest.raises(DimensionMismatch):
        PiecewiseFirstOrderSystem([0, 1, 0.5], [np.eye(2), np.eye(2)], np.eye(2), np.eye(2))
    with pytest.raises(DimensionMismatch):
        SecondOrderDiagonalSystem(speeds=[1, 1], U1=([1, 0],), U2=(), V1=(), V2=())
