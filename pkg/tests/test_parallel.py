import numpy as np
import pytest

from hmcflab.ambient import DiscBody, ModelSpace, dist_to_disc
from hmcflab.closedform import sphere_quantities
from hmcflab.errors import DomainError, ReachExceeded
from hmcflab.parallel import (
    NsBody,
    coarea_volume_audit,
    d_convexity_check,
    estimate_inradius,
    estimate_reach,
    first_variation_audit,
    ns_ray_radius,
    ns_surface,
    ordered_map,
    parallel_family,
    parallel_surface,
    steiner_audit,
    worker_count,
)
from hmcflab.surface import RadialSurface, fundamental_forms, geodesic_sphere, perturbed_sphere, resample, surface_integrals

E = ModelSpace(0.0)
H = ModelSpace(-1.0)
MODES = [(2, 0, 0.05), (3, 1, 0.03)]


def area(s):
    return surface_integrals(s)[0].area


# --------------------------------------------------------------------------
# threads


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("HMCF_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("HMCF_THREADS", "0")
    assert worker_count() >= 1
    monkeypatch.setenv("HMCF_THREADS", "x")
    with pytest.raises(DomainError):
        worker_count()
    monkeypatch.setenv("HMCF_THREADS", "-2")
    with pytest.raises(DomainError):
        worker_count()


def test_ordered_map_keeps_order():
    items = list(range(40))
    assert ordered_map(lambda x: x * x, items, workers=4) == [x * x for x in items]
    assert ordered_map(lambda x: -x, items, workers=1) == [-x for x in items]


# --------------------------------------------------------------------------
# parallel surfaces


def test_zero_offset_is_identity():
    s = perturbed_sphere(H, modes=MODES, ntheta=16, nphi=32)
    out = parallel_surface(s, 0.0)
    assert np.array_equal(out.radii, s.radii)


@pytest.mark.parametrize("space", [E, H])
def test_sphere_offsets(space):
    s = geodesic_sphere(space, 1.0, ntheta=16, nphi=32)
    for t in (-0.4, 0.3, 1.0):
        assert np.allclose(parallel_surface(s, t).radii, 1.0 + t, atol=1e-10)


def test_euclidean_steiner_polynomial_on_perturbed_surface():
    s = perturbed_sphere(E, modes=MODES, ntheta=32, nphi=64)
    i, _ = surface_integrals(s)
    for t in (0.1, 0.5):
        got = area(parallel_surface(s, t))
        assert got == pytest.approx(i.area + i.M * t + i.Gtot * t * t, rel=1e-7)


def test_semigroup():
    s = perturbed_sphere(H, modes=MODES, ntheta=24, nphi=48)
    two = parallel_surface(parallel_surface(s, 0.2), 0.3)
    one = parallel_surface(s, 0.5)
    assert np.max(np.abs(two.radii - one.radii)) < 1e-6


def test_round_trip_within_reach():
    s = perturbed_sphere(H, modes=MODES, ntheta=24, nphi=48)
    back = parallel_surface(parallel_surface(s, -0.3), 0.3)
    assert area(back) == pytest.approx(area(s), rel=1e-6)
    assert np.max(np.abs(back.radii - s.radii)) < 1e-6


def test_members_are_nested():
    s = perturbed_sphere(H, modes=MODES, ntheta=24, nphi=48)
    fam = parallel_family(s, [-0.3, -0.1, 0.1, 0.4], workers=2)
    radii = [fam.members[0].radii, fam.members[1].radii, s.radii, fam.members[2].radii, fam.members[3].radii]
    for lo, hi in zip(radii, radii[1:]):
        assert np.all(lo < hi)
    areas = [i.area for i in fam.integrals()]
    assert areas == sorted(areas)


def test_reach_guard():
    s = perturbed_sphere(E, rho0=1.0, modes=[(2, 0, 0.15)], ntheta=24, nphi=48)
    reach = estimate_reach(s)
    assert 0 < reach < 1.0
    parallel_surface(s, -0.5 * reach)
    with pytest.raises(ReachExceeded):
        parallel_surface(s, -1.01 * reach)
    assert estimate_reach(geodesic_sphere(H, 1.0, ntheta=16, nphi=32)) == pytest.approx(1.0, rel=1e-10)


def test_outer_parallels_stay_convex():
    s = perturbed_sphere(H, modes=MODES, ntheta=24, nphi=48)
    for t in (0.2, 1.0):
        assert fundamental_forms(parallel_surface(s, t)).kappa_min > 0


# --------------------------------------------------------------------------
# disc tubes


def test_ns_ray_radius_axis_and_plane():
    disc = DiscBody.standard(1.0)
    d = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
    r = ns_ray_radius(disc, 0.05, d)
    assert r[:2] == pytest.approx([0.05, 0.05], abs=1e-11)
    assert r[2:] == pytest.approx([1.05, 1.05], abs=1e-11)
    with pytest.raises(DomainError):
        ns_ray_radius(disc, 0.0, d)


def test_ns_surface_is_level_set():
    disc = DiscBody.standard(1.0)
    s = ns_surface(disc, 0.05, ntheta=16, nphi=32)
    from hmcflab.surface import embed

    assert np.allclose(dist_to_disc(embed(s), disc), 0.05, atol=1e-10)


def test_ns_surface_area_first_order_estimate():
    # the face meets the rim with slope ~ sinh(r)/sinh(eps), so the grid needs many
    # theta nodes; the tube is axisymmetric, so few phi nodes suffice
    estimate = np.cosh(0.05) ** 2 * 4 * np.pi * (np.cosh(1.0) - 1) + 2 * np.pi * np.sinh(1.0) * np.pi * np.sinh(0.05)
    assert estimate == pytest.approx(8.00, abs=0.01)
    s = ns_surface(DiscBody.standard(1.0), 0.05, ntheta=512, nphi=32)
    assert area(s) == pytest.approx(estimate, rel=0.05)
    assert NsBody(DiscBody.standard(1.0), 0.05).integrals.area == pytest.approx(estimate, rel=0.05)


def test_ns_profile_matches_root_finder():
    body = NsBody(DiscBody.standard(2.0), 0.1)
    th = np.linspace(0.01, np.pi / 2, 50)
    rho, _, _ = body.profile(th)
    dirs = np.stack([np.sin(th), np.zeros_like(th), np.cos(th)], -1)
    assert np.allclose(rho, ns_ray_radius(body.disc, 0.1, dirs), atol=1e-10)


def test_ns_body_integrals():
    for r, eps in ((1.0, 0.1), (3.0, 0.05)):
        body = NsBody(DiscBody.standard(r), eps)
        i = body.integrals
        assert i.Gtot == pytest.approx(4 * np.pi + i.area, rel=1e-12)
        h = 1e-5
        dA = (body.parallel(h).integrals.area - body.parallel(-h).integrals.area) / (2 * h)
        assert dA == pytest.approx(i.M, rel=1e-7)
        dV = (body.parallel(h).integrals.volume - body.parallel(-h).integrals.volume) / (2 * h)
        assert dV == pytest.approx(i.area, rel=1e-7)
        assert body.kappa_min() == pytest.approx(np.tanh(eps), rel=1e-6)


def test_ns_grid_area_converges_to_profile_area():
    body = NsBody(DiscBody.standard(1.0), 0.1)
    errors = [abs(area(body.surface(nt, 32)) / body.integrals.area - 1) for nt in (64, 128, 256)]
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 5e-3


def test_ns_body_validation():
    with pytest.raises(DomainError):
        NsBody(DiscBody.standard(1.0), 0.0)
    with pytest.raises(ReachExceeded):
        NsBody(DiscBody.standard(1.0), 0.1).parallel(-0.1)


# --------------------------------------------------------------------------
# inradius


@pytest.mark.parametrize("space", [E, H])
def test_inradius_sphere(space):
    s = geodesic_sphere(space, 0.8, ntheta=16, nphi=32)
    assert estimate_inradius(s) == pytest.approx(0.8, abs=1e-6)


def test_inradius_off_center_sphere():
    # a Euclidean sphere graphed about an interior point that is not its center
    g = geodesic_sphere(E, 1.0, ntheta=24, nphi=48).grid
    th, ph = g.mesh
    c = np.array([0.2, -0.1, 0.1])
    u = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], -1)
    b = u @ c
    r = -b + np.sqrt(b * b - c @ c + 1.0)  # |c + r u| = 1
    s = RadialSurface(E, c, np.eye(3), r)
    assert estimate_inradius(s) == pytest.approx(1.0, abs=1e-4)


def test_inradius_ns_surface():
    for eps in (0.05, 0.1):
        s = ns_surface(DiscBody.standard(1.0), eps, ntheta=64, nphi=128)
        assert estimate_inradius(s) == pytest.approx(eps, rel=0.02)


def test_inradius_ellipsoid():
    g = geodesic_sphere(E, 1.0, ntheta=32, nphi=64).grid
    th, ph = g.mesh
    a, b = 2.0, 1.0
    u = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], -1)
    r = 1.0 / np.sqrt((u[..., 0] / a) ** 2 + (u[..., 1] / b) ** 2 + (u[..., 2] / b) ** 2)
    s = RadialSurface(E, np.zeros(3), np.eye(3), r)
    assert estimate_inradius(s) == pytest.approx(1.0, rel=0.01)


# --------------------------------------------------------------------------
# convexity of inner parallels


def test_d_convexity_examples():
    assert d_convexity_check(geodesic_sphere(H, 1.0, ntheta=16, nphi=32), [-0.2, -0.5, -0.9]).ok
    assert d_convexity_check(NsBody(DiscBody.standard(1.0), 0.1), [-0.02, -0.05, -0.09]).ok
    s = perturbed_sphere(E, rho0=1.0, modes=[(2, 0, 0.15)], ntheta=24, nphi=48)
    rep = d_convexity_check(s, [-0.3, -0.6, -0.9])
    assert not rep
    assert rep.failed_offset == -0.9
    assert rep.failure
    with pytest.raises(DomainError):
        d_convexity_check(s, [0.1])


# --------------------------------------------------------------------------
# audits


def test_steiner_euclidean_sphere_equality():
    rep = steiner_audit(geodesic_sphere(E, 1.0, ntheta=16, nphi=32), [0.1, 0.5, 1.0])
    assert rep.passed
    for part in rep.metadata["parts"]:
        assert abs(part["slack"]) < 1e-8 * part["rhs"]


def test_steiner_hyperbolic_sphere_slack():
    rep = steiner_audit(geodesic_sphere(H, 1.0, ntheta=16, nphi=32), [0.5])
    q = sphere_quantities(-1.0, 1.0)
    exact_lhs = 4 * np.pi * np.sinh(1.5) ** 2
    exact_rhs = q.area + q.M * 0.5 + q.Gtot * 0.25
    assert rep.passed
    assert rep.lhs == pytest.approx(exact_lhs, rel=1e-9)
    assert rep.slack == pytest.approx(exact_lhs - exact_rhs, rel=1e-6)


def test_steiner_perturbed_passes():
    s = perturbed_sphere(H, modes=MODES, ntheta=24, nphi=48)
    rep = steiner_audit(s, [0.1, 0.5, 1.0], workers=2)
    assert rep.passed
    assert [p["name"] for p in rep.metadata["parts"]] == ["steiner[t=0.1]", "steiner[t=0.5]", "steiner[t=1]"]
    with pytest.raises(DomainError):
        steiner_audit(s, [-0.1])


def test_first_variation():
    assert first_variation_audit(geodesic_sphere(E, 1.0, ntheta=16, nphi=32), 0.1) < 1e-11
    s = geodesic_sphere(H, 1.0, ntheta=16, nphi=32)
    M = surface_integrals(s)[0].M
    assert first_variation_audit(s, 1e-3) < 1e-4 * M
    p = perturbed_sphere(H, modes=MODES, ntheta=24, nphi=48)
    ratio = first_variation_audit(p, 0.1) / first_variation_audit(p, 0.05)
    assert 3.5 <= ratio <= 4.5
    with pytest.raises(DomainError):
        first_variation_audit(p, 0.0)


def test_coarea_spheres():
    assert coarea_volume_audit(geodesic_sphere(E, 1.0, ntheta=16, nphi=32), n_layers=200, inradius=1.0) < 1e-5
    assert coarea_volume_audit(geodesic_sphere(H, 1.0, ntheta=16, nphi=32), n_layers=16, inradius=1.0) < 1e-4


def test_coarea_ns_body():
    body = NsBody(DiscBody.standard(1.0), 0.1)
    assert coarea_volume_audit(body, n_layers=16) < 1e-3 * body.integrals.volume


def test_coarea_reach_failure_reports_offset():
    s = perturbed_sphere(E, rho0=1.0, modes=[(2, 0, 0.15)], ntheta=24, nphi=48)
    with pytest.raises(ReachExceeded) as info:
        coarea_volume_audit(s, n_layers=8, inradius=0.95)
    assert info.value.offset is not None and info.value.offset < 0


def test_resampled_family_consistency():
    s = perturbed_sphere(H, modes=MODES, ntheta=24, nphi=48)
    coarse = area(parallel_surface(s, 0.3))
    fine = area(parallel_surface(resample(s, 48, 96), 0.3))
    assert coarse == pytest.approx(fine, rel=1e-6)
