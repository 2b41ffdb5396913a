"""Constant-curvature model spaces of curvature ``a <= 0``.

Points are plain numpy arrays whose last axis holds flat-embedding
coordinates: three Cartesian components when ``a == 0`` and four
components on the hyperboloid sheet ``<x, x>_L = 1/a, x0 > 0`` when
``a < 0``, with ``<x, y>_L = -x0*y0 + x1*y1 + x2*y2 + x3*y3``.  Every
operation broadcasts over leading axes, so a whole surface grid can be
pushed through a single call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

ON_MODEL_TOL = 1e-10


def _check_curvature(a):
    if a > 0:
        raise DomainError(f"curvature must be <= 0, got {a}")


def sn(a, rho):
    """Warped-product coefficient: ``rho`` for a = 0, ``sinh(k rho)/k`` otherwise."""
    _check_curvature(a)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise DomainError("sn requires rho >= 0")
    if a == 0:
        return rho * 1.0
    k = np.sqrt(-a)
    return np.sinh(k * rho) / k


def cs(a, rho):
    """Derivative of :func:`sn` in ``rho`` (``cosh(k rho)``)."""
    _check_curvature(a)
    rho = np.asarray(rho, dtype=float)
    if a == 0:
        return np.ones_like(rho)
    return np.cosh(np.sqrt(-a) * rho)


def ct(a, rho):
    """Generalized cotangent ``sn'/sn``; the curvature of a geodesic sphere."""
    _check_curvature(a)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise DomainError("ct requires rho > 0")
    if a == 0:
        return 1.0 / rho
    k = np.sqrt(-a)
    return k / np.tanh(k * rho)


def sn2_integral(a, rho):
    """Closed form of the integral of ``sn(a, s)**2`` for s in [0, rho]."""
    _check_curvature(a)
    rho = np.asarray(rho, dtype=float)
    if a == 0:
        return rho**3 / 3.0
    k2 = -a
    k = np.sqrt(k2)
    x = k * rho
    series = rho**3 * (
        1.0 / 3.0 + x**2 / 15.0 + 2.0 * x**4 / 315.0 + x**6 / 2835.0 + 2.0 * x**8 / 155925.0
    )
    with np.errstate(over="ignore"):
        exact = (np.sinh(2.0 * x) - 2.0 * x) / (4.0 * k2 * k)
    return np.where(np.abs(x) < 1e-2, series, exact)


@dataclass(frozen=True)
class ModelSpace:
    """Simply connected 3-space of constant sectional curvature ``a <= 0``."""

    a: float

    def __post_init__(self):
        _check_curvature(self.a)
        object.__setattr__(self, "a", float(self.a))

    @property
    def hyperbolic(self):
        return self.a < 0

    @property
    def k(self):
        return float(np.sqrt(-self.a))

    @property
    def dim(self):
        return 4 if self.hyperbolic else 3

    # Ricci curvature in any unit direction; sectional curvature is a.
    @property
    def ricci(self):
        return 2.0 * self.a

    def inner(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.hyperbolic:
            return -x[..., 0] * y[..., 0] + np.einsum("...i,...i->...", x[..., 1:], y[..., 1:])
        return np.einsum("...i,...i->...", x, y)

    def norm(self, v):
        return np.sqrt(np.maximum(self.inner(v, v), 0.0))

    def origin(self):
        if self.hyperbolic:
            return np.array([1.0 / self.k, 0.0, 0.0, 0.0])
        return np.zeros(3)

    def standard_frame(self, base=None):
        """Orthonormal tangent frame (rows) at ``base``, default the origin."""
        if base is None:
            base = self.origin()
        eye = np.eye(self.dim)[-3:]
        return orthonormalize(self, base, eye)

    def normalize(self, x):
        """Project flat coordinates back onto the model (hyperboloid renormalization)."""
        x = np.array(x, dtype=float)
        if self.hyperbolic:
            spatial = x[..., 1:]
            x[..., 0] = np.sqrt(1.0 / self.k**2 + np.einsum("...i,...i->...", spatial, spatial))
        return x

    def project_tangent(self, base, v):
        base = np.asarray(base, dtype=float)
        v = np.asarray(v, dtype=float)
        if not self.hyperbolic:
            return v * 1.0
        return v - (self.a * self.inner(v, base))[..., None] * base

    def on_model(self, x, tol=ON_MODEL_TOL):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            return False
        if not self.hyperbolic:
            return bool(np.all(np.isfinite(x)))
        return bool(np.all(np.abs(self.a * self.inner(x, x) - 1.0) < tol) and np.all(x[..., 0] > 0))

    def exp(self, base, w):
        """Exponential map: follow the geodesic from ``base`` with initial velocity ``w``."""
        base = np.asarray(base, dtype=float)
        w = np.asarray(w, dtype=float)
        if not self.hyperbolic:
            return base + w
        length = self.norm(w)
        kl = self.k * length
        with np.errstate(invalid="ignore", divide="ignore"):
            factor = np.where(kl > 1e-8, np.sinh(kl) / np.where(kl > 0, kl, 1.0), 1.0 + kl**2 / 6.0)
        out = base * np.cosh(kl)[..., None] + w * factor[..., None]
        return self.normalize(out)

    def geodesic(self, base, v, t):
        """Point at signed distance ``t`` along the unit-speed geodesic ``(base, v)``."""
        t = np.asarray(t, dtype=float)
        base = np.asarray(base, dtype=float)
        v = np.asarray(v, dtype=float)
        if not self.hyperbolic:
            return base + v * t[..., None]
        kt = self.k * t
        out = base * np.cosh(kt)[..., None] + v * (np.sinh(kt) / self.k)[..., None]
        return self.normalize(out)

    def geodesic_velocity(self, base, v, t):
        """Unit tangent of the geodesic ``(base, v)`` at parameter ``t``."""
        t = np.asarray(t, dtype=float)
        if not self.hyperbolic:
            return np.broadcast_to(v, np.broadcast_shapes(np.shape(v), t.shape + (3,))) * 1.0
        kt = self.k * t
        return base * (self.k * np.sinh(kt))[..., None] + v * np.cosh(kt)[..., None]

    def distance(self, p, q):
        """Geodesic distance; evaluated through the chord so near-coincident points keep precision."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        d = p - q
        if not self.hyperbolic:
            return np.sqrt(np.einsum("...i,...i->...", d, d))
        # chord^2 = 4 sinh^2(k rho / 2) / k^2; clamping at 0 absorbs roundoff
        chord2 = np.maximum(self.inner(d, d), 0.0)
        return 2.0 / self.k * np.arcsinh(0.5 * self.k * np.sqrt(chord2))

    def log(self, base, q):
        """Inverse of :meth:`exp`: the tangent vector at ``base`` pointing to ``q``."""
        base = np.asarray(base, dtype=float)
        q = np.asarray(q, dtype=float)
        if not self.hyperbolic:
            return q - base
        w = self.project_tangent(base, q)
        n = self.norm(w)
        dist = self.distance(base, q)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(n > 0, dist / np.where(n > 0, n, 1.0), 0.0)
        return w * scale[..., None]


def orthonormalize(space, base, vectors):
    """Gram-Schmidt (in the model metric) of row vectors projected to ``T_base``."""
    out = []
    for v in np.asarray(vectors, dtype=float):
        v = space.project_tangent(base, v)
        for e in out:
            v = v - space.inner(v, e) * e
        n = space.norm(v)
        if n < 1e-12:
            raise DomainError("degenerate frame")
        out.append(v / n)
    return np.array(out)


def frame_is_orthonormal(space, base, frame, tol=ON_MODEL_TOL):
    frame = np.asarray(frame, dtype=float)
    gram = np.array([[space.inner(e, f) for f in frame] for e in frame])
    tangent = np.abs(space.inner(frame, base)) if space.hyperbolic else np.zeros(len(frame))
    return bool(np.max(np.abs(gram - np.eye(len(frame)))) < tol and np.max(tangent) < tol)


@dataclass(frozen=True, eq=False)
class DiscBody:
    """Closed geodesic disc of radius ``radius`` in the totally geodesic plane
    through ``center`` spanned by ``frame[0]`` and ``frame[1]``."""

    space: ModelSpace
    center: np.ndarray
    frame: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise DomainError("disc radius must be positive")
        center = np.asarray(self.center, dtype=float)
        frame = np.asarray(self.frame, dtype=float)
        if not self.space.on_model(center):
            raise DomainError("disc center is not on the model")
        if frame.shape[0] == 2:
            frame = _complete_frame(self.space, center, frame)
        if not frame_is_orthonormal(self.space, center, frame):
            raise DomainError("disc frame is not orthonormal")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "frame", frame)

    @property
    def normal(self):
        return self.frame[2]

    @classmethod
    def standard(cls, radius, space=None):
        space = space or ModelSpace(-1.0)
        return cls(space, space.origin(), space.standard_frame(), radius)


def _complete_frame(space, base, two):
    """Append the unit normal to a 2-frame at ``base``."""
    trial = np.eye(space.dim)
    best = None
    for cand in trial:
        try:
            full = orthonormalize(space, base, np.vstack([two, cand]))
        except DomainError:
            continue
        best = full
        break
    if best is None:
        raise DomainError("cannot complete disc frame")
    return best


def _disc_foot(p, disc):
    """Foot of ``p`` on the plane of ``disc`` and the signed height above it."""
    space = disc.space
    n = disc.normal
    h = space.inner(p, n)
    foot = p - h[..., None] * n
    # rescale onto the sheet: <foot, foot> = 1/a - h^2
    scale = 1.0 / (space.k * np.sqrt(-space.inner(foot, foot)))
    foot = space.normalize(foot * scale[..., None])
    return foot, h


def nearest_point_on_disc(p, disc):
    """Closest point of the closed disc to ``p`` (vectorized over leading axes)."""
    space = disc.space
    if not space.hyperbolic:
        raise DomainError("disc distance is only provided for a < 0")
    p = np.asarray(p, dtype=float)
    foot, _ = _disc_foot(p, disc)
    c = disc.center
    w = space.log(c, foot)
    rho = space.norm(w)
    inside = rho <= disc.radius
    with np.errstate(invalid="ignore", divide="ignore"):
        u = w / np.where(rho > 0, rho, 1.0)[..., None]
    rim = space.geodesic(c, u, np.full(rho.shape, disc.radius))
    return np.where(inside[..., None], foot, rim)


def dist_to_disc(p, disc):
    """Exact geodesic distance from ``p`` to the closed disc; zero on the disc."""
    space = disc.space
    if not space.hyperbolic:
        raise DomainError("disc distance is only provided for a < 0")
    p = np.asarray(p, dtype=float)
    foot, h = _disc_foot(p, disc)
    rho = space.distance(disc.center, foot)
    plane = np.arcsinh(space.k * np.abs(h)) / space.k
    rim = space.distance(p, nearest_point_on_disc(p, disc))
    return np.where(rho <= disc.radius, plane, rim)


def dist_to_disc_gradient(p, disc):
    """Unit gradient of :func:`dist_to_disc` at points off the disc."""
    space = disc.space
    q = nearest_point_on_disc(p, disc)
    w = -space.log(p, q)
    n = space.norm(w)
    return w / n[..., None]
