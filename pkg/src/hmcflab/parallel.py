"""Parallel surfaces, disc tubes, inradius estimates and the offset audits.

Outer and inner parallels of a radial graph are produced by pushing each
point along its normal geodesic and re-graphing about the same center.
Inner offsets are guarded by a focal-distance estimate plus a posteriori
star-shapedness and convexity checks.

Tubes about a totally geodesic disc (``NsBody``) have a closed-form
meridian profile, so their integrals are evaluated along that profile
with Gauss-Legendre rules split at the face/rim seam; the curvature jump
across the seam is far below any practical grid resolution for thin tubes.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize
from scipy.special import roots_legendre

from .ambient import DiscBody, ModelSpace, dist_to_disc, sn2_integral
from .errors import DomainError, NumericalFailure, ReachExceeded, RootBracketFailure
from .grid import sphere_grid
from .regraph import _tangent_basis, image_points, regraph
from .report import AuditReport, combine
from .surface import (
    RadialSurface,
    SurfaceIntegrals,
    embed,
    fundamental_forms,
    gauss_bonnet_residual,
    local_geometry,
    shape_data,
    surface_integrals,
)

log = logging.getLogger(__name__)

ROOT_TOL = 1e-12
REACH_MARGIN = 1e-9


def worker_count():
    """Thread cap from ``HMCF_THREADS`` (unset or 0 means automatic)."""
    raw = os.environ.get("HMCF_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError as exc:
        raise DomainError(f"HMCF_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise DomainError("HMCF_THREADS must be >= 0")
    return n if n > 0 else min(8, os.cpu_count() or 1)


def ordered_map(fn, items, workers=None):
    """Map in a thread pool, returning results in input order."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# parallel surfaces of radial graphs


def estimate_reach(s: RadialSurface, f=None):
    """Focal distance of the inner side: first ``t`` with ``cs(t) = kappa2 * sn(t)``."""
    f = fundamental_forms(s) if f is None else f
    kmax = float(np.max(f.kappa2))
    if kmax <= 0:
        return np.inf
    if s.a == 0:
        return 1.0 / kmax
    k = np.sqrt(-s.a)
    if kmax <= k:
        return np.inf
    return float(np.arctanh(k / kmax) / k)


def parallel_surface(s: RadialSurface, t, check=True) -> RadialSurface:
    """Parallel surface at signed distance ``t`` (outward for ``t > 0``)."""
    t = float(t)
    if t == 0.0:
        return s.with_radii(s.radii.copy())
    f = fundamental_forms(s, require_convex=True)
    if t < 0:
        reach = estimate_reach(s, f)
        if -t >= reach * (1.0 - REACH_MARGIN):
            raise ReachExceeded(f"offset {t} reaches the focal distance {reach:.6g}", offset=t)
    try:
        out, info = regraph(s, push=t)
    except NumericalFailure as exc:
        if t < 0:
            raise ReachExceeded(f"inner parallel at {t} is not star-shaped: {exc}", offset=t) from exc
        raise
    if np.any(info["orientation"] <= 0):
        if t < 0:
            raise ReachExceeded(f"inner parallel at {t} folds over", offset=t)
        raise NumericalFailure(f"outer parallel at {t} folds over")
    if check and t < 0:
        g = fundamental_forms(out)
        if g.kappa_min <= 0:
            raise ReachExceeded(f"inner parallel at {t} lost convexity (min kappa1 {g.kappa_min:.3e})", offset=t)
    return out


@dataclass
class ParallelFamily:
    base: RadialSurface
    offsets: list
    members: list = field(default_factory=list)

    def __post_init__(self):
        if self.members and len(self.members) != len(self.offsets):
            raise DomainError("one member per offset")

    def integrals(self):
        return [surface_integrals(m)[0] for m in self.members]


def parallel_family(s: RadialSurface, offsets, workers=None) -> ParallelFamily:
    offsets = [float(t) for t in offsets]
    members = ordered_map(lambda t: parallel_surface(s, t), offsets, workers)
    return ParallelFamily(base=s, offsets=offsets, members=members)


# --------------------------------------------------------------------------
# tubes about a totally geodesic disc


def _gl_rule(n):
    x, w = roots_legendre(n)
    return x, w


@dataclass(frozen=True, eq=False)
class NsBody:
    """Closed ``eps``-neighborhood of a geodesic disc in hyperbolic space."""

    disc: DiscBody
    eps: float
    nodes: int = 200

    def __post_init__(self):
        if not self.disc.space.hyperbolic:
            raise DomainError("disc tubes need a < 0")
        if not self.eps > 0:
            raise DomainError("eps must be positive")

    @property
    def space(self) -> ModelSpace:
        return self.disc.space

    @property
    def r(self):
        return float(self.disc.radius)

    @property
    def inradius(self):
        return float(self.eps)

    @property
    def seam(self):
        """Polar angle (from the disc normal) where the face meets the rim."""
        k = self.space.k
        kr, ke = k * self.r, k * self.eps
        s_star = np.sqrt(np.cosh(kr) ** 2 * np.cosh(ke) ** 2 - 1.0)
        return float(np.arccos(np.sinh(ke) / s_star))

    def profile(self, theta):
        """Radius along the ray at polar angle ``theta`` and its first two derivatives."""
        k = self.space.k
        kr, ke = k * self.r, k * self.eps
        theta = np.asarray(theta, dtype=float)
        flip = theta > 0.5 * np.pi
        th = np.where(flip, np.pi - theta, theta)
        face = th <= self.seam
        st, ct_ = np.sin(th), np.cos(th)
        with np.errstate(divide="ignore", invalid="ignore"):
            # face: sinh(rho) cos(theta) = sinh(eps)
            rf = np.arcsinh(np.sinh(ke) / ct_)
            d1f = np.tanh(rf) * np.tan(th)
            d2f = d1f * np.tan(th) / np.cosh(rf) ** 2 + np.tanh(rf) / ct_**2
            # rim: cosh(r) cosh(rho) - sin(theta) sinh(r) sinh(rho) = cosh(eps)
            # written without the A - B cancellation that bites for wide discs
            A = np.cosh(kr)
            B = st * np.sinh(kr)
            A_minus_B = np.exp(-kr) + np.sinh(kr) * ct_**2 / (1.0 + st)
            Q2 = 1.0 + (ct_ * np.sinh(kr)) ** 2
            beta = 0.5 * np.log((A + B) / A_minus_B)
            rr = beta + np.arccosh(np.maximum(np.cosh(ke) / np.sqrt(Q2), 1.0))
            # D = A sinh(rho) - B cosh(rho) = sqrt(cosh(eps)^2 - Q^2)
            D = np.sqrt(np.maximum(np.sinh(ke) ** 2 - (ct_ * np.sinh(kr)) ** 2, 0.0))
            D1 = st * ct_ * np.sinh(kr) ** 2 / D
            N = ct_ * np.sinh(kr) * np.sinh(rr)
            d1r = N / D
            N1 = np.sinh(kr) * (-st * np.sinh(rr) + ct_ * np.cosh(rr) * d1r)
            d2r = (N1 * D - N * D1) / D**2
        rho = np.where(face, rf, rr) / k
        d1 = np.where(face, d1f, d1r) / k
        d2 = np.where(face, d2f, d2r) / k
        d1 = np.where(flip, -d1, d1)
        return rho, d1, d2

    def _geometry(self, theta):
        rho, d1, d2 = self.profile(theta)
        phi = np.zeros_like(theta)
        zero = np.zeros_like(theta)
        geo = local_geometry(self.space, self.disc.center, self.disc.frame, theta, phi, rho, d1, zero, (d2, zero, zero))
        return rho, shape_data(self.space, geo)

    @cached_property
    def _nodes(self):
        """Quadrature in the polar angle on [0, pi/2]; weights include the 2 pi azimuth and the mirror half.

        The face is swept by the in-plane distance ``sigma`` of the foot
        point and the rim by the angle ``alpha`` around the boundary circle;
        both integrands are smooth in those variables, while in ``theta`` the
        face piece piles up against the seam for wide discs.
        """
        x, w = _gl_rule(self.nodes)
        k = self.space.k
        kr, ke = k * self.r, k * self.eps
        se, ce = np.sinh(ke), np.cosh(ke)
        # face: tan(theta) = cosh(eps) sinh(sigma) / sinh(eps)
        sig = 0.5 * kr * (x + 1.0)
        th_face = np.arctan2(ce * np.sinh(sig), se)
        jac_face = ce * np.cosh(sig) / se * np.cos(th_face) ** 2
        w_face = 0.5 * kr * w * jac_face
        # rim: point at distance eps from the boundary circle, at angle alpha from the normal
        al = 0.25 * np.pi * (x + 1.0)
        Y = ce * np.sinh(kr) + se * np.sin(al) * np.cosh(kr)
        Z = se * np.cos(al)
        dY = se * np.cos(al) * np.cosh(kr)
        dZ = -se * np.sin(al)
        th_rim = np.arctan2(Y, Z)
        jac_rim = (Z * dY - Y * dZ) / (Y * Y + Z * Z)
        w_rim = 0.25 * np.pi * w * jac_rim
        return np.concatenate([th_face, th_rim]), 4.0 * np.pi * np.concatenate([w_face, w_rim])

    @cached_property
    def integrals(self) -> SurfaceIntegrals:
        th, wt = self._nodes
        rho, c = self._geometry(th)
        dmu = c["area_density"] * wt
        return SurfaceIntegrals(
            area=float(np.sum(dmu)),
            M=float(np.sum(c["H"] * dmu)),
            Gtot=float(np.sum(c["G"] * dmu)),
            volume=float(np.sum(sn2_integral(self.space.a, rho) * np.sin(th) * wt)),
        )

    def kappa_min(self, samples=2001):
        th = np.linspace(1e-6, 0.5 * np.pi, samples)
        th = np.union1d(th, [self.seam * (1 - 1e-9), self.seam * (1 + 1e-9)])
        _, c = self._geometry(th)
        return float(np.min(c["kappa1"]))

    def parallel(self, t):
        """Level set of the disc distance at ``eps + t``."""
        e = self.eps + float(t)
        if e <= 0:
            raise ReachExceeded(f"offset {t} passes the disc (eps = {self.eps})", offset=t)
        return NsBody(self.disc, e, self.nodes)

    def surface(self, ntheta=64, nphi=128) -> RadialSurface:
        return ns_surface(self.disc, self.eps, ntheta, nphi)


def ns_ray_radius(disc: DiscBody, eps, directions, tol=ROOT_TOL):
    """Distance from the disc center to ``{dist_to_disc = eps}`` along each frame-coordinate direction."""
    space = disc.space
    if not space.hyperbolic:
        raise DomainError("disc tubes need a < 0")
    if not eps > 0:
        raise DomainError("eps must be positive")
    d = np.asarray(directions, dtype=float)
    shape = d.shape[:-1]
    U = d.reshape(-1, 3) @ disc.frame
    c = disc.center

    def g(t):
        return dist_to_disc(space.geodesic(c, U, t), disc) - eps

    lo = np.zeros(len(U))
    hi = np.full(len(U), disc.radius + eps)
    if np.any(g(lo) >= 0) or np.any(g(hi) < -tol):
        raise RootBracketFailure("level set of the disc distance is not bracketed on every ray")
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        below = g(mid) < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return (0.5 * (lo + hi)).reshape(shape)


def ns_surface(disc: DiscBody, eps, ntheta=64, nphi=128) -> RadialSurface:
    """Radial graph of the ``eps``-level set of the disc distance about the disc center."""
    grid = sphere_grid(ntheta, nphi)
    r = ns_ray_radius(disc, eps, grid.directions())
    return RadialSurface(disc.space, disc.center, disc.frame, r)


# --------------------------------------------------------------------------
# inradius


def _center_at(s: RadialSurface, x):
    return s.space.exp(s.center, np.asarray(x, dtype=float) @ s.frame)


def _min_node_distance(s, X, x):
    c = _center_at(s, x)
    return float(np.min(s.space.distance(c[None, :], X)))


def _continuous_min(s: RadialSurface, c, X, starts=6):
    """Polish the nearest node to the nearest point of the interpolated surface."""
    dist = s.space.distance(c[None, :], X)
    order = np.argsort(dist)[:starts]
    th, ph = s.grid.mesh
    th, ph = th.reshape(-1), ph.reshape(-1)
    best = float(dist[order[0]])
    for idx in order:
        q0 = np.array([np.sin(th[idx]) * np.cos(ph[idx]), np.sin(th[idx]) * np.sin(ph[idx]), np.cos(th[idx])])
        b1, b2 = _tangent_basis(q0)

        def obj(y, q0=q0, b1=b1, b2=b2):
            q = q0 + y[0] * b1 + y[1] * b2
            q = q / np.linalg.norm(q)
            return float(s.space.distance(c, image_points(s, q[None, :])[0]))

        res = minimize(obj, np.zeros(2), method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
        best = min(best, float(res.fun))
    return best


def estimate_inradius(s: RadialSurface, lattice=5, refine=True, polish=False):
    """Radius of a large ball inside the graph, found by a center search.

    Candidate centers form a lattice in normal coordinates about the graph
    center; the best one is improved with Nelder-Mead on the nodal
    min-distance.  ``polish`` additionally scores the final center against
    the interpolated surface, which helps on smooth graphs with coarse grids
    but follows interpolation ripples on surfaces with curvature jumps.
    """
    X = embed(s).reshape(-1, s.space.dim)
    span = 0.5 * float(np.min(s.radii))
    ticks = np.linspace(-span, span, lattice) if lattice > 1 else np.zeros(1)
    cands = np.array(np.meshgrid(ticks, ticks, ticks, indexing="ij")).reshape(3, -1).T
    cands = cands[np.linalg.norm(cands, axis=1) <= span + 1e-15]
    scores = [_min_node_distance(s, X, x) for x in cands]
    x0 = cands[int(np.argmax(scores))]
    if refine:
        res = minimize(
            lambda x: -_min_node_distance(s, X, x),
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-9 * max(span, 1e-300), "fatol": 1e-14, "initial_simplex": x0 + 0.1 * span * np.vstack([np.zeros(3), np.eye(3)])},
        )
        if -res.fun >= max(scores):
            x0 = res.x
    if not polish:
        return _min_node_distance(s, X, x0)
    return _continuous_min(s, _center_at(s, x0), X)


# --------------------------------------------------------------------------
# convexity of inner parallels and the offset audits


@dataclass(frozen=True)
class DConvexityReport:
    ok: bool
    offsets: list
    kappa_min: list
    failure: str = ""
    failed_offset: float | None = None

    def __bool__(self):
        return self.ok


def d_convexity_check(body, offsets) -> DConvexityReport:
    """True iff every sampled inner parallel is strictly convex."""
    offsets = [float(t) for t in offsets]
    if any(t >= 0 for t in offsets):
        raise DomainError("d-convexity offsets must be negative")
    kmins = []
    for t in offsets:
        try:
            if isinstance(body, NsBody):
                k = body.parallel(t).kappa_min()
            else:
                k = fundamental_forms(parallel_surface(body, t)).kappa_min
        except NumericalFailure as exc:
            return DConvexityReport(False, offsets, kmins, failure=str(exc), failed_offset=t)
        kmins.append(k)
        if k <= 0:
            return DConvexityReport(False, offsets, kmins, failure="inner parallel not convex", failed_offset=t)
    return DConvexityReport(True, offsets, kmins)


def _base_tolerance(i: SurfaceIntegrals, a, rhs):
    return max(1e-9 * abs(rhs), gauss_bonnet_residual(i, a))


def steiner_audit(s: RadialSurface, ts, tolerance=None, workers=None) -> AuditReport:
    """Outer parallel areas against the Steiner polynomial ``A + M t + Gtot t^2``."""
    ts = [float(t) for t in ts]
    if any(t <= 0 for t in ts):
        raise DomainError("Steiner offsets must be positive")
    base, _ = surface_integrals(s, require_convex=True)
    members = ordered_map(lambda t: parallel_surface(s, t), ts, workers)
    parts = []
    for t, m in zip(ts, members):
        lhs = surface_integrals(m)[0].area
        rhs = base.area + base.M * t + base.Gtot * t * t
        tol = _base_tolerance(base, s.a, rhs) if tolerance is None else tolerance
        parts.append(AuditReport.build(f"steiner[t={t:g}]", lhs, rhs, tol, t=t, a=s.a))
    return combine("steiner", parts, a=s.a, grid=list(s.radii.shape))


def first_variation_audit(s: RadialSurface, h) -> float:
    """``|(A(h) - A(-h)) / 2h - M|`` for the parallel family through ``s``."""
    h = float(h)
    if not h > 0:
        raise DomainError("h must be positive")
    base, _ = surface_integrals(s, require_convex=True)
    up = surface_integrals(parallel_surface(s, h))[0].area
    down = surface_integrals(parallel_surface(s, -h))[0].area
    return abs((up - down) / (2 * h) - base.M)


def _layer_rule(n_layers, order=4):
    """Composite Gauss-Legendre nodes on [0, 1] with ``n_layers`` points in total."""
    if n_layers < 1:
        raise DomainError("n_layers must be positive")
    order = min(order, n_layers)
    panels = max(1, n_layers // order)
    x, w = roots_legendre(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    nodes = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])])
    weights = np.concatenate([0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])])
    return nodes, weights


def coarea_volume_audit(body, n_layers=16, inradius=None, workers=None) -> float:
    """``|volume - int_0^r area(inner parallel at depth t) dt|`` with ``r`` the inradius."""
    if isinstance(body, NsBody):
        r = body.inradius if inradius is None else inradius
        volume = body.integrals.volume

        def layer_area(t):
            return body.parallel(-t).integrals.area

    else:
        r = estimate_inradius(body) if inradius is None else inradius
        volume = surface_integrals(body)[0].volume

        def layer_area(t):
            return surface_integrals(parallel_surface(body, -t))[0].area

    x, w = _layer_rule(n_layers)
    areas = ordered_map(layer_area, list(r * x), workers)
    return abs(volume - r * float(np.dot(w, areas)))


__all__ = [
    "ParallelFamily",
    "NsBody",
    "DConvexityReport",
    "parallel_surface",
    "parallel_family",
    "estimate_reach",
    "ns_surface",
    "ns_ray_radius",
    "estimate_inradius",
    "d_convexity_check",
    "steiner_audit",
    "first_variation_audit",
    "coarea_volume_audit",
    "worker_count",
    "ordered_map",
]
