import math

import numpy as np
import pytest

from conftest import MANIFOLDS, rng_for, sample
from gcvx.errors import Diverged, StepRuleUnresolvable, UnsupportedComposite
from gcvx.geometry import PHI, geodesic_average, zeta
from gcvx.manifolds import Euclidean, Hyperbolic, SphericalCap
from gcvx.objectives import Constant, Distance, MaxOfSquaredDistances, karcher, saddle_toy, squared_distance
from gcvx.solvers import (
    RGD_INVERSE_L,
    RGD_INVERSE_L_ZETA,
    RIPPA,
    RPPA_EXACT,
    SUBGRADIENT,
    Composite,
    IterateBoundCertificate,
    StepRule,
    certified_radius,
    crgd,
    crgd_step,
    prgd,
    rgd,
    rgda,
    subgradient_rgd,
)


def long_run(f, x0, T=3000):
    tr = rgd(f, x0, StepRule.inverse_l(radius=4.0), T, grad_tol=1e-14)
    return tr.last, tr.f_values[-1]


def test_rgd_isotropic_quadratic_one_step():
    E = Euclidean(3)
    f = squared_distance(np.zeros(3), E)
    tr = rgd(f, np.array([1.0, -2.0, 0.5]), StepRule.inverse_l(radius=1.0), 1)
    assert tr.eta == 1.0
    np.testing.assert_array_equal(tr.iterates[1], np.zeros(3))


def test_rgd_two_hyperbolic_centers(rng):
    H = Hyperbolic(3)
    y1, y2 = sample(H, rng, 2.0), sample(H, rng, 2.0)
    mid = H.exp(y1, 0.5 * H.log(y1, y2))
    f = karcher([y1, y2], H)
    tr = rgd(f, y1, StepRule.inverse_l(R_bound=H.dist(y1, mid), center=mid), 200, ref=mid)
    assert tr.dist_to_ref_sq[-1] <= 1e-12


def test_rgd_zeta_rate():
    H = Hyperbolic(3)
    rng = rng_for(3)
    for _ in range(5):
        f = karcher([sample(H, rng, 1.5) for _ in range(6)], H)
        xs, fs = long_run(f, f.reference)
        x0 = sample(H, rng, 2.0)
        R = H.dist(x0, xs)
        rule = StepRule.inverse_l_zeta(R, center=xs)
        eta, L = rule.resolve(f)
        z = zeta(math.sqrt(1.5) * R, H.kappa_min)
        assert abs(eta - 1 / (z * L)) <= 1e-15
        for T in (5, 20, 80):
            tr = rgd(f, x0, rule, T)
            assert tr.f_values[-1] - fs <= 3 * z * L * R**2 / (4 * T) + 1e-12


def test_rgd_monotone_values():
    for kind in MANIFOLDS:
        M = MANIFOLDS[kind]()
        rng = rng_for(4)
        f = karcher([sample(M, rng, 0.4) for _ in range(5)], M)
        tr = rgd(f, sample(M, rng, 0.4), StepRule.inverse_l(radius=1.0), 50)
        assert not tr.violations
        assert all(b <= a + 1e-12 for a, b in zip(tr.f_values, tr.f_values[1:]))


def test_rgd_step_rule_errors():
    f = karcher([np.zeros(2)], Euclidean(2))
    with pytest.raises(StepRuleUnresolvable):
        StepRule.inverse_l_zeta(None).resolve(f)
    with pytest.raises(StepRuleUnresolvable):
        StepRule.inverse_l().resolve(f)
    with pytest.raises(StepRuleUnresolvable):
        StepRule.subgradient(1.0, 0).resolve(f)


def test_rgd_diverges_with_huge_step():
    f = squared_distance(np.zeros(2), Euclidean(2))
    with pytest.raises(Diverged) as err:
        rgd(f, np.ones(2), 10.0, 100)
    assert err.value.trace.steps >= 1


def test_certified_radius_values():
    H, C = Hyperbolic(2), SphericalCap(2)
    assert certified_radius(RGD_INVERSE_L, H, 2.0) == PHI * 2.0
    assert certified_radius(RGD_INVERSE_L, C, 0.5) == PHI * 0.5 * zeta(0.5, 1.0)
    assert certified_radius(RGD_INVERSE_L_ZETA, H, 2.0) == math.sqrt(1.5) * 2.0
    assert certified_radius(SUBGRADIENT, H, 1.0) == math.sqrt(2.0)
    assert certified_radius(RIPPA, H, 1.0) == math.sqrt(2.0)
    assert certified_radius(RPPA_EXACT, H, 1.5) == 1.5
    with pytest.raises(ValueError):
        certified_radius("nope", H, 1.0)


def test_certificate_excess():
    E = Euclidean(1)
    cert = IterateBoundCertificate.for_solver(RPPA_EXACT, E, np.zeros(1), 1.0)
    assert cert.worst_excess(E, [np.array([0.5]), np.array([1.5])]) == 0.5


def test_subgradient_abs_stays_in_ball():
    E = Euclidean(1)
    f = Distance(E, np.zeros(1))
    for T in (1, 10, 100, 1000):
        tr = subgradient_rgd(f, np.ones(1), 1.0, T, ref=np.zeros(1))
        assert max(abs(x[0]) for x in tr.iterates) <= math.sqrt(2) + 1e-12
        assert tr.steps == T


def test_subgradient_constant_objective_does_not_move():
    H = Hyperbolic(2)
    x0 = sample(H, rng_for(1), 1.0)
    tr = subgradient_rgd(Constant(H), x0, 1.0, 20)
    assert all(np.array_equal(x, x0) for x in tr.iterates)


@pytest.mark.parametrize("kind", ["euclidean", "hyperbolic"])
def test_subgradient_average_bound(kind):
    M = MANIFOLDS[kind]()
    rng = rng_for(9)
    for _ in range(5):
        p1, p2 = sample(M, rng, 1.0), sample(M, rng, 1.0)
        for f in (Distance(M, p1), MaxOfSquaredDistances(M, p1, p2)):
            xs = f.minimizer
            fs = f.value(xs)
            x0 = sample(M, rng, 1.0, xs)
            R = M.dist(x0, xs)
            for T in (10, 100, 400):
                tr = subgradient_rgd(f, x0, R, T, center=xs)
                Mlip = f.lipschitz_on(math.sqrt(2) * R, xs)
                bound = math.sqrt(zeta(R, M.kappa_min)) * Mlip * R / math.sqrt(T)
                assert f.value(tr.averaged_output) - fs <= bound + 1e-9
                # the average is no worse than the mean value along the run
                assert f.value(tr.averaged_output) <= np.mean(tr.f_values[:-1]) + 1e-12
                np.testing.assert_allclose(tr.averaged_output, geodesic_average(M, tr.iterates[:-1]), atol=1e-12)


def test_prgd_projection_example():
    E = Euclidean(3)
    f = squared_distance(np.array([2.0, 0.0, 0.0]), E)
    tr = prgd(f, np.zeros(3), (np.zeros(3), 1.0), 1.0, 3)
    for x in tr.iterates[1:]:
        np.testing.assert_allclose(x, [1.0, 0.0, 0.0], atol=1e-15)


def test_prgd_matches_rgd_when_inactive(rng):
    H = Hyperbolic(3)
    f = karcher([sample(H, rng, 0.5) for _ in range(4)], H)
    x0 = sample(H, rng, 0.5)
    a = prgd(f, x0, (H.origin(), 3.0), 0.5, 30)
    b = rgd(f, x0, 0.5, 30)
    for x, y in zip(a.iterates, b.iterates):
        np.testing.assert_array_equal(x, y)


def test_prgd_stays_in_ball(rng):
    H = Hyperbolic(3)
    f = squared_distance(sample(H, rng, 3.0), H)
    c = H.origin()
    tr = prgd(f, c, (c, 0.5), 0.3, 50)
    assert max(H.dist(c, x) for x in tr.iterates) <= 0.5 + 1e-10


def test_crgd_quadratic_closed_form(rng):
    E = Euclidean(3)
    for _ in range(10):
        a, c, x = rng.standard_normal((3, 3))
        w, lam = rng.uniform(0.5, 2.0, 2)
        f = squared_distance(a, E, w)
        L = w
        y, _ = crgd_step(E, x, f.gradient(x), L, Composite.squared_distance(c, lam))
        np.testing.assert_allclose(y, (L * x - f.gradient(x) + lam * c) / (L + lam), atol=1e-12)


def test_crgd_ball_step_is_projected_step(rng):
    E = Euclidean(3)
    for _ in range(10):
        a, x = rng.standard_normal((2, 3)) * 2
        x = x / max(1.0, np.linalg.norm(x))
        f = squared_distance(a, E)
        L = 2.0
        y, _ = crgd_step(E, x, f.gradient(x), L, Composite.ball_indicator(np.zeros(3), 1.0))
        free = x - f.gradient(x) / L
        expect = free / max(1.0, np.linalg.norm(free))
        np.testing.assert_allclose(y, expect, atol=1e-9)


def test_crgd_self_centered_matches_half_step(rng):
    H = Hyperbolic(3)
    f = karcher([sample(H, rng, 1.0) for _ in range(5)], H)
    x = sample(H, rng, 1.0)
    L = f.smoothness_on(2.0, x)
    y, inner = crgd_step(H, x, f.gradient(x), L, Composite.squared_distance(x, L))
    assert inner == 0
    expect = H.exp(x, -f.gradient(x) / (2 * L))
    assert H.dist(y, expect) <= 1e-14


@pytest.mark.parametrize("composite", ["sqdist", "ball"])
def test_crgd_linear_rate(composite):
    H = Hyperbolic(3)
    rng = rng_for(21)
    for _ in range(3):
        ys = [sample(H, rng, 1.0) for _ in range(5)]
        f = karcher(ys, H)
        c = sample(H, rng, 0.5)
        r = 3.0
        if composite == "sqdist":
            lam = 0.5
            g = Composite.squared_distance(c, lam)
            full = f.with_center(c, lam)
        else:
            g = Composite.ball_indicator(c, 0.4)
            full = f
        L = f.smoothness_on(r, c)
        mu = full.strong_convexity_on(r, c)
        if composite == "sqdist":
            _, best = long_run(full, c)
        else:
            best = prgd(f, c, (c, 0.4), 1 / L, 5000).f_values[-1]
        x0 = c
        tr = crgd(f, g, x0, 40, L=L)
        gap0 = tr.f_values[0] - best
        for T, F in enumerate(tr.f_values):
            assert F - best <= gap0 * math.exp(-T * mu / (4 * L)) + 1e-12


def test_crgd_rejects_other_composites():
    f = squared_distance(np.zeros(2), Euclidean(2))
    with pytest.raises(UnsupportedComposite):
        crgd(f, lambda y: 0.0, np.zeros(2), 1, L=1.0)
    with pytest.raises(UnsupportedComposite):
        Composite()


def test_rgda_stationary_at_saddle(rng):
    H = Hyperbolic(2)
    a, b = sample(H, rng, 1.0), sample(H, rng, 1.0)
    tr = rgda(saddle_toy(a, b, 0.0, H, H), (a, b), 0.5, 10)
    assert tr.converged and tr.steps == 0


def test_rgda_decoupled_matches_two_rgd_runs(rng):
    H = Hyperbolic(2)
    a, b, x0, y0 = (sample(H, rng, 1.0) for _ in range(4))
    eta = 0.4
    tr = rgda(saddle_toy(a, b, 0.0, H, H), (x0, y0), eta, 25)
    tx = rgd(squared_distance(a, H), x0, eta, 25)
    ty = rgd(squared_distance(b, H), y0, eta, 25)
    for (x, y), u, v in zip(tr.iterates, tx.iterates, ty.iterates):
        assert H.dist(x, u) <= 1e-13 and H.dist(y, v) <= 1e-13


def test_rgda_coupled_field_contracts():
    E = Euclidean(2)
    rng = rng_for(2)
    a, b, x0, y0 = rng.standard_normal((4, 2))
    c = 0.5
    f = saddle_toy(a, b, c, E, E)
    L = f.smoothness_on(10.0)
    assert abs(L - math.sqrt(1 + c * c)) <= 1e-15
    eta = 1 / L
    tr = rgda(f, (x0, y0), eta, 40)
    # the linear map I - eta [[1, c], [-c, 1]] is normal with this spectral radius
    rho = math.sqrt((1 - eta) ** 2 + (eta * c) ** 2)
    sq = tr.extras["field_norm_sq"]
    for s, t in zip(sq, sq[1:]):
        assert t <= s
        if t > 1e-12:
            assert abs(math.sqrt(t / s) - rho) <= 1e-9
