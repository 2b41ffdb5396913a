import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from hmcflab.ambient import DiscBody, ModelSpace, cs, ct, dist_to_disc, sn, sn2_integral
from hmcflab.errors import DomainError

H = ModelSpace(-1.0)
E = ModelSpace(0.0)


def random_points(space, rng, n, spread=2.0):
    v = rng.normal(size=(n, 3))
    return space.exp(np.broadcast_to(space.origin(), (n, space.dim)), (spread * v) @ space.standard_frame())


def random_unit_tangents(space, base, rng):
    v = rng.normal(size=base.shape[:-1] + (space.dim,))
    v = space.project_tangent(base, v)
    return v / space.norm(v)[..., None]


def test_warped_coefficients():
    assert sn(0, 2.0) == 2.0
    assert sn(-1, 1.0) == pytest.approx(np.sinh(1.0), abs=1e-15)
    assert float(sn(-1, 1.0)) == pytest.approx(1.1752012, abs=1e-7)
    assert float(ct(-1, 1.0)) == pytest.approx(1.3130353, abs=1e-7)
    assert float(ct(0, 4.0)) == 0.25
    assert float(cs(-4, 0.5)) == pytest.approx(np.cosh(1.0))


def test_warped_coefficients_reject_bad_input():
    with pytest.raises(DomainError):
        sn(0.5, 1.0)
    with pytest.raises(DomainError):
        sn(-1, -0.1)
    with pytest.raises(DomainError):
        ct(-1, 0.0)
    with pytest.raises(DomainError):
        ModelSpace(1.0)


@pytest.mark.parametrize("a", [0.0, -0.5, -1.0, -2.0])
def test_sn2_integral_against_quadrature(a):
    from scipy.integrate import quad

    for rho in (1e-4, 5e-3, 0.3, 1.0, 2.5):
        ref, _ = quad(lambda s: float(sn(a, s)) ** 2, 0.0, rho, epsabs=0, epsrel=1e-13)
        assert float(sn2_integral(a, rho)) == pytest.approx(ref, rel=1e-11)


def test_points_stay_on_model():
    rng = np.random.default_rng(0)
    p = random_points(H, rng, 200, spread=1.0)
    assert H.on_model(p)
    assert np.all(np.abs(H.a * H.inner(p, p) - 1.0) < 1e-10)
    assert np.all(p[:, 0] > 0)


def test_geodesic_examples():
    assert np.allclose(E.geodesic(E.origin(), np.array([1.0, 0, 0]), 3.0), [3.0, 0, 0])
    rng = np.random.default_rng(1)
    base = random_points(H, rng, 50)
    v = random_unit_tangents(H, base, rng)
    assert np.allclose(H.geodesic(base, v, np.zeros(50)), base, atol=1e-14)
    assert np.allclose(H.distance(base, H.geodesic(base, v, np.full(50, 0.7))), 0.7, atol=1e-10)
    assert np.allclose(H.distance(H.geodesic(base, v, np.full(50, 1.3)), base), 1.3, atol=1e-10)


def test_distance_examples():
    assert E.distance(np.zeros(3), np.array([0.0, 3.0, 4.0])) == 5.0
    p = H.exp(H.origin(), np.array([0.3, -0.2, 0.5]) @ H.standard_frame())
    assert H.distance(p, p) == 0.0


def test_triangle_inequality_random_triples():
    rng = np.random.default_rng(2)
    for space in (E, H, ModelSpace(-2.0)):
        x, y, z = (random_points(space, rng, 1000) for _ in range(3))
        dxy, dyz, dxz = space.distance(x, y), space.distance(y, z), space.distance(x, z)
        assert np.all(dxz <= dxy + dyz + 1e-9)


def test_exp_log_inverse():
    # hyperboloid coordinates grow like e^dist, so keep the pairs within ~6 units
    rng = np.random.default_rng(3)
    base = random_points(H, rng, 100, spread=1.0)
    q = random_points(H, rng, 100, spread=1.0)
    w = H.log(base, q)
    assert np.allclose(H.exp(base, w), q, atol=1e-9)
    assert np.allclose(H.norm(w), H.distance(base, q), atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(
    s=st.floats(-3.0, 3.0),
    t=st.floats(-3.0, 3.0),
    seed=st.integers(0, 2**31 - 1),
    a=st.sampled_from([0.0, -0.25, -1.0, -3.0]),
)
def test_geodesic_is_isometric_in_parameter(s, t, seed, a):
    space = ModelSpace(a)
    rng = np.random.default_rng(seed)
    # base within a couple of curvature lengths of the origin
    scale = 1.0 / space.k if space.hyperbolic else 1.0
    base = random_points(space, rng, 1, spread=0.5 * scale)[0]
    v = random_unit_tangents(space, base, rng)
    d = space.distance(space.geodesic(base, v, s * scale), space.geodesic(base, v, t * scale))
    assert abs(d - abs(s - t) * scale) < 1e-9


def disc_brute_force(p, disc, n=400):
    """Coarse search over a polar sample of the disc followed by a local polish."""
    space = disc.space
    c, f = disc.center, disc.frame

    def point(rho, ang):
        return space.geodesic(c, np.cos(ang)[..., None] * f[0] + np.sin(ang)[..., None] * f[1], rho)

    rho = np.linspace(0.0, disc.radius, n)
    ang = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    R, A = np.meshgrid(rho, ang, indexing="ij")
    d = space.distance(point(R, A), p)
    k = np.unravel_index(np.argmin(d), d.shape)
    x0 = np.array([R[k], A[k]])

    def obj(x):
        return float(space.distance(point(np.clip(x[0], 0.0, disc.radius), x[1]), p))

    res = minimize(obj, x0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15})
    return min(float(d[k]), float(res.fun))


def test_dist_to_disc_examples():
    disc = DiscBody.standard(1.0)
    f = disc.frame
    inside = H.geodesic(disc.center, (f[0] + f[1]) / np.sqrt(2.0), 0.6)
    assert dist_to_disc(inside, disc) < 1e-12
    for h in (0.1, 0.7, 2.0):
        on_axis = H.geodesic(disc.center, f[2], h)
        assert dist_to_disc(on_axis, disc) == pytest.approx(h, abs=1e-12)
        # beyond the rim in the disc plane
        planar = H.geodesic(disc.center, f[0], 1.0 + h)
        assert dist_to_disc(planar, disc) == pytest.approx(h, abs=1e-12)


def test_dist_to_disc_matches_brute_force():
    rng = np.random.default_rng(4)
    disc = DiscBody.standard(1.5)
    for p in random_points(H, rng, 12, spread=1.2):
        assert dist_to_disc(p, disc) == pytest.approx(disc_brute_force(p, disc), abs=1e-6)


def test_dist_to_disc_is_lipschitz_along_geodesics():
    rng = np.random.default_rng(5)
    disc = DiscBody.standard(2.0)
    base = random_points(H, rng, 40, spread=1.5)
    v = random_unit_tangents(H, base, rng)
    t = np.linspace(-2.0, 2.0, 201)
    for b, u in zip(base, v):
        pts = H.geodesic(b, u, t)
        d = dist_to_disc(pts, disc)
        assert np.all(np.abs(np.diff(d)) <= np.diff(t) + 1e-9)


def test_disc_rejects_bad_input():
    with pytest.raises(DomainError):
        DiscBody.standard(0.0)
    with pytest.raises(DomainError):
        dist_to_disc(E.origin(), DiscBody(E, E.origin(), E.standard_frame(), 1.0))
