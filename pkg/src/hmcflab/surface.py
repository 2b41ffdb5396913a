"""Closed star-shaped surfaces stored as radial graphs over a sphere grid.

A surface is ``X(theta, phi) = exp_c(r(theta, phi) * U(theta, phi))``
where ``U`` is the unit direction built from an orthonormal frame at the
center ``c``.  In polar form ``X = cs(r) c + sn(r) U``, so every derivative
of the embedding follows from the chain rule once the derivatives of the
radius field are known; the only numerical differentiation is the
spectral differentiation of ``r`` itself.  Spheres about the center are
therefore reproduced exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import lpmv

from .ambient import ModelSpace, cs, frame_is_orthonormal, sn, sn2_integral
from .errors import DomainError, NegativeRadius, NonConvex, SingularMetric
from .grid import SphereGrid, sphere_grid, unit_direction


@dataclass(frozen=True, eq=False)
class RadialSurface:
    space: ModelSpace
    center: np.ndarray
    frame: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        center = np.array(self.center, dtype=float)
        frame = np.array(self.frame, dtype=float)
        radii = np.array(self.radii, dtype=float)
        if radii.ndim != 2:
            raise DomainError("radii must be a 2-D (ntheta, nphi) array")
        sphere_grid(*radii.shape)  # validates grid floors
        if not np.all(np.isfinite(radii)):
            raise DomainError("radii must be finite")
        if np.any(radii <= 0):
            raise NegativeRadius("radial graph requires all radii > 0")
        if not self.space.on_model(center):
            raise DomainError("center is not on the model")
        if frame.shape != (3, self.space.dim) or not frame_is_orthonormal(self.space, center, frame):
            raise DomainError("frame must be an orthonormal tangent 3-frame at the center")
        for arr in (center, frame, radii):
            arr.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "radii", radii)

    @property
    def grid(self) -> SphereGrid:
        return sphere_grid(*self.radii.shape)

    @property
    def a(self):
        return self.space.a

    def with_radii(self, radii):
        return RadialSurface(self.space, self.center, self.frame, radii)

    @cached_property
    def coefficients(self):
        return self.grid.coefficients(self.radii)

    def radius_at(self, theta, phi, deriv=False):
        return self.grid.evaluate(self.coefficients, theta, phi, deriv=deriv)

    def ambient_directions(self, u):
        """Map frame-coordinate vectors (last axis 3) to tangent vectors at the center."""
        return np.asarray(u, dtype=float) @ self.frame


@dataclass(frozen=True, eq=False)
class CurvatureField:
    position: np.ndarray
    nu: np.ndarray
    g: np.ndarray
    II: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    H: np.ndarray
    G: np.ndarray
    area_density: np.ndarray
    W: np.ndarray
    grid: SphereGrid = field(repr=False)

    @property
    def kappa_min(self):
        return float(self.kappa1.min())

    def integrate(self, values):
        """Surface integral of a nodal field with respect to the area measure."""
        return float(np.sum(np.asarray(values) * self.area_density * self.grid.param_weights))


@dataclass(frozen=True)
class SurfaceIntegrals:
    area: float
    M: float
    Gtot: float
    volume: float

    def as_dict(self):
        return {"area": self.area, "M": self.M, "Gtot": self.Gtot, "volume": self.volume}


def _frame_vectors(frame, theta, phi):
    """Radial direction and its angular derivatives, in ambient coordinates."""
    st, ct_ = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    zero = np.zeros_like(theta)
    U = np.stack([st * cp, st * sp, ct_], -1) @ frame
    U_t = np.stack([ct_ * cp, ct_ * sp, -st], -1) @ frame
    U_p = np.stack([-st * sp, st * cp, zero], -1) @ frame
    U_tp = np.stack([-ct_ * sp, ct_ * cp, zero], -1) @ frame
    U_pp = np.stack([-st * cp, -st * sp, zero], -1) @ frame
    return U, U_t, U_p, U_tp, U_pp


def local_geometry(space, center, frame, theta, phi, r, r_t, r_p, second=None):
    """Position, normal data and (optionally) second derivatives of the embedding.

    ``second`` is ``(r_tt, r_tp, r_pp)``; without it only first-order data
    (position, tangents, unit normal, graph factor) are produced.
    """
    a = space.a
    U, U_t, U_p, U_tp, U_pp = _frame_vectors(frame, theta, phi)
    Sn = sn(a, r)[..., None]
    Cs = cs(a, r)[..., None]
    c = np.asarray(center, dtype=float)
    X = Cs * c + Sn * U
    R = -a * Sn * c + Cs * U
    X_t = R * r_t[..., None] + Sn * U_t
    X_p = R * r_p[..., None] + Sn * U_p
    sin2 = np.sin(theta) ** 2
    grad2 = r_t**2 + r_p**2 / sin2
    W = np.sqrt(1.0 + grad2 / Sn[..., 0] ** 2)
    grad = U_t * r_t[..., None] + U_p * (r_p / sin2)[..., None]
    nu = (R - grad / Sn) / W[..., None]
    out = {"X": space.normalize(X), "R": R, "X_t": X_t, "X_p": X_p, "nu": nu, "W": W}
    if second is None:
        return out
    r_tt, r_tp, r_pp = second
    RR = -a * Cs * c - a * Sn * U  # d R / d r
    X_tt = RR * (r_t * r_t)[..., None] + R * r_tt[..., None] + 2 * Cs * U_t * r_t[..., None] - Sn * U
    X_tp = (
        RR * (r_t * r_p)[..., None]
        + R * r_tp[..., None]
        + Cs * (U_t * r_p[..., None] + U_p * r_t[..., None])
        + Sn * U_tp
    )
    X_pp = RR * (r_p * r_p)[..., None] + R * r_pp[..., None] + 2 * Cs * U_p * r_p[..., None] + Sn * U_pp
    out.update(X_tt=X_tt, X_tp=X_tp, X_pp=X_pp)
    return out


def embed(s: RadialSurface):
    """Node positions on the model, shape (ntheta, nphi, dim)."""
    th, ph = s.grid.mesh
    U = s.ambient_directions(unit_direction(th, ph))
    return s.space.geodesic(s.center, U, s.radii)


def shape_data(space, geo):
    """Metric, second fundamental form and principal curvatures from embedding derivatives."""
    inner = space.inner
    X_t, X_p, nu = geo["X_t"], geo["X_p"], geo["nu"]
    g = np.empty(X_t.shape[:-1] + (2, 2))
    g[..., 0, 0] = inner(X_t, X_t)
    g[..., 0, 1] = g[..., 1, 0] = inner(X_t, X_p)
    g[..., 1, 1] = inner(X_p, X_p)
    det_g = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
    if np.any(det_g <= 0) or not np.all(np.isfinite(det_g)):
        raise SingularMetric("first fundamental form is degenerate at some node")
    II = np.empty_like(g)
    # sign makes spheres about the center positively curved
    II[..., 0, 0] = -inner(geo["X_tt"], nu)
    II[..., 0, 1] = II[..., 1, 0] = -inner(geo["X_tp"], nu)
    II[..., 1, 1] = -inner(geo["X_pp"], nu)
    det_II = II[..., 0, 0] * II[..., 1, 1] - II[..., 0, 1] ** 2
    H = (g[..., 1, 1] * II[..., 0, 0] - 2 * g[..., 0, 1] * II[..., 0, 1] + g[..., 0, 0] * II[..., 1, 1]) / det_g
    G = det_II / det_g
    # eigenvalue split from the traceless part of g^-1 II (exact zero at umbilics)
    inv = np.empty_like(g)
    inv[..., 0, 0] = g[..., 1, 1] / det_g
    inv[..., 1, 1] = g[..., 0, 0] / det_g
    inv[..., 0, 1] = inv[..., 1, 0] = -g[..., 0, 1] / det_g
    S = inv @ II
    disc = np.sqrt(np.maximum((S[..., 0, 0] - S[..., 1, 1]) ** 2 + 4 * S[..., 0, 1] * S[..., 1, 0], 0.0))
    return {
        "g": g,
        "II": II,
        "H": H,
        "G": G,
        "kappa1": 0.5 * (H - disc),
        "kappa2": 0.5 * (H + disc),
        "area_density": np.sqrt(det_g),
    }


def fundamental_forms(s: RadialSurface, require_convex=False) -> CurvatureField:
    grid = s.grid
    th, ph = grid.mesh
    r = s.radii
    r_t, r_p, r_tt, r_tp, r_pp = grid.derivatives(r)
    geo = local_geometry(s.space, s.center, s.frame, th, ph, r, r_t, r_p, (r_tt, r_tp, r_pp))
    c = shape_data(s.space, geo)
    cf = CurvatureField(
        position=geo["X"],
        nu=geo["nu"],
        g=c["g"],
        II=c["II"],
        kappa1=c["kappa1"],
        kappa2=c["kappa2"],
        H=c["H"],
        G=c["G"],
        area_density=c["area_density"],
        W=geo["W"],
        grid=grid,
    )
    if require_convex and cf.kappa_min <= 0:
        raise NonConvex(f"surface is not strictly convex (min kappa1 = {cf.kappa_min:.3e})")
    return cf


def integrals(f: CurvatureField, s: RadialSurface) -> SurfaceIntegrals:
    grid = s.grid
    w = f.area_density * grid.param_weights
    return SurfaceIntegrals(
        area=float(np.sum(w)),
        M=float(np.sum(f.H * w)),
        Gtot=float(np.sum(f.G * w)),
        volume=enclosed_volume(s),
    )


def enclosed_volume(s: RadialSurface):
    return s.grid.integrate(sn2_integral(s.a, s.radii))


def surface_integrals(s: RadialSurface, require_convex=False):
    f = fundamental_forms(s, require_convex=require_convex)
    return integrals(f, s), f


def gauss_bonnet_residual(i: SurfaceIntegrals, a):
    """|Gtot - 4 pi + a * area|: zero in the continuum for constant curvature a."""
    return abs(i.Gtot - 4.0 * np.pi + a * i.area)


def geodesic_sphere(space, rho, center=None, frame=None, ntheta=64, nphi=128):
    center = space.origin() if center is None else center
    frame = space.standard_frame(center) if frame is None else frame
    return RadialSurface(space, center, frame, np.full((ntheta, nphi), float(rho)))


def harmonic_mode(l, m, theta, phi):
    """Real spherical-harmonic-shaped bump ``P_l^|m|(cos theta) * trig(m phi)``.

    Scaled to unit peak, so (2, 0) is exactly ``(3 cos^2 theta - 1)/2``.
    Negative ``m`` selects the sine partner.
    """
    if l < 0 or abs(m) > l:
        raise DomainError(f"invalid mode ({l}, {m})")
    leg = lpmv(abs(m), l, np.cos(theta)) / _legendre_peak(l, abs(m))
    if m > 0:
        return leg * np.cos(m * phi)
    if m < 0:
        return leg * np.sin(-m * phi)
    return leg


@lru_cache(maxsize=None)
def _legendre_peak(l, m):
    x = np.cos(np.linspace(0.0, np.pi, 20001))
    return float(np.max(np.abs(lpmv(m, l, x))))


def perturbed_sphere(space, center=None, rho0=1.0, modes=(), frame=None, ntheta=64, nphi=128, check=True):
    """Geodesic sphere of radius ``rho0`` plus small harmonic bumps.

    ``modes`` is a sequence of ``(l, m, amplitude)``.  The result is checked
    for strict convexity unless ``check`` is false.
    """
    if rho0 <= 0:
        raise DomainError("rho0 must be positive")
    center = space.origin() if center is None else np.asarray(center, dtype=float)
    frame = space.standard_frame(center) if frame is None else frame
    th, ph = sphere_grid(ntheta, nphi).mesh
    r = np.full(th.shape, float(rho0))
    for l, m, amp in modes:
        r = r + amp * harmonic_mode(int(l), int(m), th, ph)
    if np.any(r <= 0):
        raise NonConvex("perturbation drives the radius nonpositive")
    s = RadialSurface(space, center, frame, r)
    if check:
        fundamental_forms(s, require_convex=True)
    return s


def resample(s: RadialSurface, ntheta, nphi) -> RadialSurface:
    """Interpolate the radius field onto another grid (spectral interpolation)."""
    if (ntheta, nphi) == s.radii.shape:
        return s.with_radii(s.radii.copy())
    target = sphere_grid(ntheta, nphi)
    th, ph = target.mesh
    return s.with_radii(s.radius_at(th, ph))
