import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
import mpmath

from nsaspec import catalog
from nsaspec.diagnostics import (
    ProbeConfig,
    adjoint_eigenfunction,
    bump,
    eigenfunction,
    gram_integral,
    numerical_range_probe,
    projection_norm,
    reconstruct_polygon,
)
from nsaspec.errors import InsufficientData, NonGenericPattern, NotAnEigenvalue
from nsaspec.hull import analyze_exponents
from nsaspec.rootfinder import Rect, find_zeros
from nsaspec.system_model import (
    build_second_order,
    char_function_numeric,
    expand_char_function,
    random_first_order_system,
    transfer_matrix,
)

X = np.linspace(0, math.pi, 7)


def test_twodim_eigenfunction_and_adjoint():
    u = 1 + 1j
    sys = catalog.twodim(1, 1)
    lam = 6.0
    f = eigenfunction(sys, lam)(X)
    want = np.column_stack([np.exp(X * lam / u), np.exp(X * lam / u.conjugate())])
    assert np.allclose(f / f[0, 0], want / want[0, 0], atol=1e-10)
    g = adjoint_eigenfunction(sys, lam)(X)
    want = np.column_stack([u * np.exp(-X * lam / u.conjugate()), -u.conjugate() * np.exp(-X * lam / u)])
    ratio = g / want
    assert np.allclose(ratio, ratio[0, 0], atol=1e-10)


def test_satwodim_zero_mode():
    f = eigenfunction(catalog.satwodim(1), 0.0)
    assert np.allclose(f(X), 1 / math.sqrt(2))


def test_satwodim_adjoint_is_itself():
    sys = catalog.satwodim(1)
    for lam in (-2, 1, 3):
        f, g = eigenfunction(sys, lam), adjoint_eigenfunction(sys, lam)
        fx, gx = f(X), g(X)
        c = gx[0, 0] / fx[0, 0]
        assert np.allclose(gx, c * fx, atol=1e-10)
        assert abs(f.inner(f)) == pytest.approx(f.norm() ** 2)
        assert projection_norm(sys, lam).proj_norm == pytest.approx(1, abs=1e-8)


def test_boundary_condition_on_random_systems():
    rng = np.random.default_rng(21)
    checked = 0
    for _ in range(6):
        sys = random_first_order_system(rng, n=2, m=2)
        F = expand_char_function(sys)
        zs = find_zeros(F, Rect(-3.1, 2.9, -3.2, 3.3))
        for q in zs.zeros[:3]:
            if q.multiplicity != 1:
                continue
            f = eigenfunction(sys, q.z)
            fa = f(sys.breakpoints[0])[0]
            fb = transfer_matrix(sys, q.z) @ fa
            assert np.abs(sys.S @ fa + sys.T @ fb).max() <= 1e-8
            # continuity across interior breakpoints
            for s in range(1, len(sys.breakpoints) - 1):
                left = f.right_value(s - 1)
                right = f.left_value(s)
                assert np.abs(left - right).max() <= 1e-9 * (1 + np.abs(left).max())
            checked += 1
    assert checked >= 5


def test_biorthogonality():
    sys = catalog.twodim(1, 1)
    lams = [-4.0, 2.0, 6.0]
    fs = [eigenfunction(sys, z) for z in lams]
    gs = [adjoint_eigenfunction(sys, z) for z in lams]
    for a in range(3):
        for b in range(3):
            if a != b:
                scale = fs[a].norm() * gs[b].norm()
                assert abs(fs[a].inner(gs[b])) <= 1e-8 * scale


def test_not_an_eigenvalue():
    with pytest.raises(NotAnEigenvalue):
        eigenfunction(catalog.twodim(1, 1), 1.0)


def test_projection_norm_twodim():
    sys = catalog.twodim(1, 1)
    for n in (10, 15, 20):
        rep = projection_norm(sys, 2 * n)
        assert rep.proj_norm >= 1
        assert rep.proj_norm == pytest.approx(rep.norm_f * rep.norm_g / abs(rep.pairing))
        predicted = math.sqrt(2) * math.exp(math.pi * n) / (2 * math.pi * n)
        assert rep.proj_norm / predicted == pytest.approx(1, rel=0.05)


def test_projection_norm_scale_invariant():
    sys = catalog.twodim(1, 1)
    f, g = eigenfunction(sys, 4.0), adjoint_eigenfunction(sys, 4.0)
    base = f.norm() * g.norm() / abs(f.inner(g))
    f2, g2 = f.scaled(3 - 2j), g.scaled(0.1j)
    assert f2.norm() * g2.norm() / abs(f2.inner(g2)) == pytest.approx(base, rel=1e-12)


def test_isospectral_pair():
    a, b = catalog.twodim(1, 1), catalog.twodim(0.6, 1.8)  # both on s^2 + t^2 = 2t
    for n in range(-3, 4):
        assert abs(char_function_numeric(a, 2 * n)) <= 1e-10
        assert abs(char_function_numeric(b, 2 * n)) <= 1e-10
    ratios = [projection_norm(a, 2 * n).proj_norm / projection_norm(b, 2 * n).proj_norm for n in (5, 10, 15)]
    assert ratios[0] < ratios[1] < ratios[2]


@settings(max_examples=40, deadline=None)
@given(st.complex_numbers(max_magnitude=4, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=4, allow_nan=False, allow_infinity=False),
       st.floats(-1, 1), st.floats(0.01, 2))
def test_gram_integral_matches_quadrature(mu, nu, a, length):
    b = a + length
    with mpmath.workdps(30):
        m, n = mpmath.mpc(mu), mpmath.mpc(nu)
        want = complex(mpmath.quad(lambda x: mpmath.exp(m * x) * mpmath.conj(mpmath.exp(n * x)), [a, b]))
    got = gram_integral(mu, nu, a, b)
    assert abs(got - want) <= 1e-10 * (1 + abs(got))


def test_gram_integral_near_singular():
    mu = 1 + 2j
    nu = -np.conj(mu) + 1e-14
    assert gram_integral(mu, nu, 0, 2) == pytest.approx(2, rel=1e-12)


def test_bump():
    x = np.linspace(0, 1, 301)
    phi, d1, d2 = bump(x)
    assert np.all(phi[x <= 1 / 3] == 1) and np.all(phi[x >= 2 / 3] == 0)
    assert np.all(np.diff(phi) <= 1e-15)
    # derivatives agree with finite differences in the transition
    h = 1e-6
    t = np.array([0.4, 0.5, 0.6])
    assert np.allclose(bump(t)[1], (bump(t + h)[0] - bump(t - h)[0]) / (2 * h), atol=1e-6)
    assert np.allclose(bump(t)[2], (bump(t + h)[1] - bump(t - h)[1]) / (2 * h), atol=1e-5)


def test_probe_coupling():
    cfg = ProbeConfig.rhombus(math.pi / 6, math.pi / 4)
    assert cfg.coupling == pytest.approx(1j * math.sin(math.pi / 2) * math.sin(math.pi / 3))
    assert abs(ProbeConfig.rhombus(math.pi / 6, 0.0).coupling) < 1e-15


def test_probe_phase_follows_psi():
    cfg = ProbeConfig.rhombus()
    n = 1e5
    psis = [0, math.pi / 2, math.pi, 3 * math.pi / 2]
    q = {p: numerical_range_probe(cfg, p, n) for p in psis}
    base = np.angle(cfg.coupling)
    for p in psis[:2]:
        # the part odd in e^{i psi} carries the growing term
        odd = q[p] - q[p + math.pi]
        diff = np.angle(odd * np.exp(-1j * (base + p)))
        assert abs(math.degrees(diff)) < 5
    # at large n the whole quotient lines up too
    far = [numerical_range_probe(cfg, p, 1e7) for p in psis]
    for p, v in zip(psis, far):
        assert abs(math.degrees(np.angle(v * np.exp(-1j * (base + p))))) < 5


def test_probe_bounded_without_coupling():
    cfg = ProbeConfig.rhombus(math.pi / 6, 0.0)
    vals = [abs(numerical_range_probe(cfg, 0.0, n)) for n in (1e3, 1e4, 1e5)]
    assert max(vals) / min(vals) <= 2


def test_probe_rejects_bad_n():
    with pytest.raises(ValueError):
        numerical_range_probe(ProbeConfig.rhombus(), 0.0, 0)


def test_reconstruct_twodim():
    zs = np.arange(-40, 41, 2).astype(complex)
    rec = reconstruct_polygon(zs, 5)
    assert len(rec.edges) == 2
    assert np.allclose(rec.lengths, math.pi, rtol=0.02)
    assert abs(rec.edges.sum()) < 1e-9


@pytest.fixture(scope="module")
def rhombus_zeros():
    f = build_second_order(catalog.rhombus(math.pi / 6, math.pi / 4)).expsum
    return f, find_zeros(f, Rect(-45.3, 45.1, -45.2, 45.4))


def test_reconstruct_rhombus(rhombus_zeros):
    f, zs = rhombus_zeros
    rec = reconstruct_polygon(zs, 15)
    true = [e.vector for e in analyze_exponents(f).edges]
    assert len(rec.edges) == 4
    for e in rec.edges:
        assert min(abs(e - t) / abs(t) for t in true) < 0.03
    assert rec.closure_defect < 0.03


def test_reconstruct_errors():
    with pytest.raises(InsufficientData):
        reconstruct_polygon(np.array([10, 12, 14], dtype=complex), 5)
    rng = np.random.default_rng(1)
    pts = np.cumsum(rng.uniform(0.5, 3, 12)) + 10
    with pytest.raises(NonGenericPattern):
        reconstruct_polygon(pts.astype(complex), 5)
    with pytest.raises(InsufficientData):
        reconstruct_polygon(np.array([1j]), 5)
