import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import MANIFOLDS, rng_for, sample
from gcvx import _kernels_py
from gcvx.errors import CapExceeded, NonFinite
from gcvx.manifolds import SPD, Euclidean, Hyperbolic, Manifold, Product, SphericalCap, minkowski


def test_curvature_bounds():
    assert (Euclidean(2).kappa_min, Euclidean(2).kappa_max) == (0.0, 0.0)
    assert (Hyperbolic(2).kappa_min, Hyperbolic(2).kappa_max) == (-1.0, -1.0)
    assert (SPD(2).kappa_min, SPD(2).kappa_max) == (-0.5, 0.0)
    cap = SphericalCap(2, 1.0)
    assert (cap.kappa_min, cap.kappa_max) == (1.0, 1.0)
    assert cap.descriptor.max_radius < math.pi / 2


def test_exp_of_zero_is_identity(manifold, rng):
    x = sample(manifold, rng, 0.5)
    assert manifold.dist(manifold.exp(x, manifold.zero(x)), x) <= 1e-12
    assert manifold.norm(x, manifold.log(x, x)) <= 1e-12


def test_hyperbolic_unit_step():
    H = Hyperbolic(2)
    x = H.origin()
    y = H.exp(x, np.array([0.0, 1.0, 0.0]))
    assert abs(H.dist(x, y) - 1.0) <= 1e-14
    np.testing.assert_allclose(y, [math.cosh(1), math.sinh(1), 0.0], atol=1e-15)


def test_hyperbolic_log_inverts_example():
    H = Hyperbolic(2)
    v = H.log(H.origin(), np.array([math.cosh(1), math.sinh(1), 0.0]))
    np.testing.assert_allclose(v, [0.0, 1.0, 0.0], atol=1e-14)


def test_hyperbolic_distance_two():
    H = Hyperbolic(2)
    y = np.array([math.cosh(2), math.sinh(2), 0.0])
    assert abs(H.dist(H.origin(), y) - 2.0) <= 1e-14
    # independent route through acosh of the Minkowski product
    assert abs(math.acosh(-minkowski(H.origin(), y)) - 2.0) <= 1e-12


def test_spd_exp_of_identity():
    S = SPD(2)
    np.testing.assert_allclose(S.exp(np.eye(2), np.eye(2)), math.e * np.eye(2), rtol=1e-14)


def test_spd_distance_example():
    S = SPD(2)
    assert abs(S.dist(np.eye(2), math.e * np.eye(2)) - math.sqrt(2)) <= 1e-14


def test_spd_inner_at_identity(rng):
    S = SPD(3)
    U, V = (S.random_tangent(np.eye(3), rng) for _ in range(2))
    assert abs(S.inner(np.eye(3), U, V) - np.trace(U @ V)) <= 1e-13


def test_spd_metric_matches_eigen_formula(rng):
    # distance via generalized eigenvalues, independent of the whitening path
    S = SPD(3)
    P, Q = sample(S, rng, 1.5), sample(S, rng, 1.5)
    lam = np.linalg.eigvals(np.linalg.solve(P, Q)).real
    assert abs(S.dist(P, Q) - math.sqrt(np.sum(np.log(lam) ** 2))) <= 1e-12


def test_euclidean_maps():
    E = Euclidean(2)
    a, b = np.array([1.0, 2.0]), np.array([-3.0, 0.5])
    np.testing.assert_array_equal(E.log(a, b), b - a)
    np.testing.assert_array_equal(E.transport(a, b, np.array([1.0, 1.0])), [1.0, 1.0])
    assert E.inner(a, a, b) == float(a @ b)


@pytest.mark.parametrize("kind", list(MANIFOLDS))
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.0, 1.0))
def test_roundtrip_property(kind, seed, scale):
    M = MANIFOLDS[kind]()
    rng = rng_for(seed)
    if kind == "cap":
        x = sample(M, rng, 0.3)
        length = scale * (M.max_radius - 0.31)
    else:
        x = sample(M, rng, 1.5)
        length = 5.0 * scale
    u = M.random_tangent(x, rng)
    v = u * (length / M.norm(x, u))
    y = M.exp(x, v)
    assert abs(M.dist(x, y) - length) <= 1e-9 * (1 + length)
    assert M.norm(x, M.log(x, y) - v) <= 1e-7 * (1 + length)


@pytest.mark.parametrize("kind", list(MANIFOLDS))
@given(seed=st.integers(0, 2**32 - 1))
def test_transport_isometry_property(kind, seed):
    M = MANIFOLDS[kind]()
    rng = rng_for(seed)
    r = 0.35 if kind == "cap" else 1.5
    x, y = sample(M, rng, r), sample(M, rng, r)
    u, v = M.random_tangent(x, rng), M.random_tangent(x, rng)
    lhs = M.inner(y, M.transport(x, y, u), M.transport(x, y, v))
    assert abs(lhs - M.inner(x, u, v)) <= 1e-9 * M.norm(x, u) * M.norm(x, v)
    np.testing.assert_allclose(M.transport(x, x, u), u, atol=1e-13)


@pytest.mark.parametrize("kind", ["euclidean", "hyperbolic", "spd"])
@given(seed=st.integers(0, 2**32 - 1))
def test_log_contraction_property(kind, seed):
    M = MANIFOLDS[kind]()
    rng = rng_for(seed)
    x, y, z = (sample(M, rng, 2.0) for _ in range(3))
    assert M.norm(z, M.log(z, x) - M.log(z, y)) <= M.dist(x, y) + 1e-9


def test_point_and_tangent_invariants(rng):
    H = Hyperbolic(4)
    x = sample(H, rng, 3.0)
    assert abs(minkowski(x, x) + 1.0) <= 1e-10 and x[0] > 0
    v = H.random_tangent(x, rng)
    assert abs(minkowski(x, v)) <= 1e-10 * np.linalg.norm(v)
    S = SPD(3)
    P = sample(S, rng, 2.0)
    assert np.abs(P - P.T).max() <= 1e-12 and np.linalg.eigvalsh(P).min() > 0
    C = SphericalCap(3, 1.2)
    q = sample(C, rng, 1.0)
    assert abs(np.linalg.norm(q) - 1.0) <= 1e-12
    assert abs(C.random_tangent(q, rng) @ q) <= 1e-12


@pytest.mark.parametrize("kind", list(MANIFOLDS))
def test_tangent_basis_orthonormal(kind, rng):
    M = MANIFOLDS[kind]()
    x = sample(M, rng, 0.5)
    B = M.tangent_basis(x)
    G = np.array([[M.inner(x, a, b) for b in B] for a in B])
    np.testing.assert_allclose(G, np.eye(len(B)), atol=1e-12)


def test_product_distance_pythagorean(rng):
    P = Product(Hyperbolic(2), SPD(2))
    z, w = sample(P, rng, 2.0), sample(P, rng, 2.0)
    d1 = P.parts[0].dist(z[0], w[0])
    d2 = P.parts[1].dist(z[1], w[1])
    assert abs(P.dist(z, w) ** 2 - d1 * d1 - d2 * d2) <= 1e-12
    assert P.kappa_min == -1.0 and P.kappa_max == 0.0


def test_cap_rejects_leaving():
    C = SphericalCap(2, 0.5)
    x = C.origin()
    with pytest.raises(CapExceeded):
        C.exp(x, np.array([0.0, 0.6, 0.0]))
    outside = np.array([math.cos(1.0), math.sin(1.0), 0.0])
    with pytest.raises(CapExceeded):
        C.log(x, outside)


def test_non_finite_rejected(manifold):
    x = manifold.origin()
    bad = np.full_like(x, np.nan)
    with pytest.raises(NonFinite):
        manifold.dist(x, bad)


@pytest.mark.parametrize("kind", ["hyperbolic", "spd", "cap"])
def test_dexp_adjoint_matches_finite_differences(kind, rng):
    M = MANIFOLDS[kind]()
    x = sample(M, rng, 0.3)
    v = M.random_tangent(x, rng, 0.2)
    y = M.exp(x, v)
    u = M.random_tangent(y, rng)
    adj = M.dexp_adjoint(x, v, u)
    h = 1e-5
    for b in M.tangent_basis(x):
        # <u, dExp_x(v)[b]> by central differences
        dy = (M.exp(x, v + h * b) - M.exp(x, v - h * b)) / (2 * h)
        lhs = M.inner(y, u, M.proju(y, dy))
        assert abs(lhs - M.inner(x, adj, b)) <= 1e-7


@pytest.mark.parametrize("kind", ["hyperbolic", "cap"])
def test_kernels_match_generic_loop(kind, rng):
    M = MANIFOLDS[kind]()
    x = sample(M, rng, 0.3)
    Y = M.stack([sample(M, rng, 0.3) for _ in range(7)])
    w = rng.uniform(0.1, 1.0, 7)
    v_fast, g_fast = M.karcher_value_grad(x, Y, w)
    v_ref, g_ref = Manifold.karcher_value_grad(M, x, Y, w)
    assert abs(v_fast - v_ref) <= 1e-14
    np.testing.assert_allclose(g_fast, g_ref, atol=1e-14)


@pytest.mark.parametrize("name", ["hyperboloid_karcher", "sphere_karcher"])
def test_compiled_and_python_kernels_agree(name, rng):
    compiled = pytest.importorskip("gcvx._kernels")
    M = Hyperbolic(20) if name.startswith("hyper") else SphericalCap(20)
    x = sample(M, rng, 0.4)
    Y = M.stack([sample(M, rng, 0.4) for _ in range(50)])
    # include an exact duplicate to hit the zero-distance branch
    Y[3] = x
    w = np.full(50, 1 / 50)
    a = getattr(compiled, name)(x, Y, w)
    b = getattr(_kernels_py, name)(x, Y, w)
    assert abs(a[0] - b[0]) <= 1e-14
    np.testing.assert_allclose(a[1], b[1], atol=1e-15)
