"""Re-express a (pushed) surface as a radial graph about a chosen center.

For every target ray we solve, by Newton's method on the unit sphere of
source parameters, for the source point whose image lies on that ray.
The image of a source point is ``exp_X(push * nu)``: the surface itself for
``push == 0`` and its parallel surface at signed distance ``push``
otherwise.  All evaluation goes through the global spectral interpolant
of the source radius field, so smooth inputs keep spectral accuracy.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalFailure
from .grid import direction_angles, sphere_grid
from .surface import RadialSurface, local_geometry

NEWTON_TOL = 1e-14
MAX_ITER = 30
FD_STEP = 1e-6
MAX_STEP = 0.25


class RegraphFailure(NumericalFailure):
    """Some target ray could not be matched to a unique source point."""


def _tangent_basis(u):
    """Two unit vectors orthonormal to each unit vector ``u`` (last axis 3)."""
    helper = np.where(np.abs(u[..., 2:3]) < 0.9, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
    b1 = np.cross(u, helper)
    b1 /= np.linalg.norm(b1, axis=-1, keepdims=True)
    b2 = np.cross(u, b1)
    return b1, b2


def image_points(source: RadialSurface, q, push=0.0):
    """Image of source parameter directions ``q`` (frame coordinates, shape (P, 3))."""
    theta, phi = direction_angles(q)
    r, r_t, r_p = source.radius_at(theta, phi, deriv=True)
    if np.any(r <= 0):
        raise RegraphFailure("interpolated radius is nonpositive")
    geo = local_geometry(source.space, source.center, source.frame, theta, phi, r, r_t, r_p)
    X = geo["X"]
    if push == 0.0:
        return X
    nu = source.space.project_tangent(X, geo["nu"])
    nu = nu / source.space.norm(nu)[..., None]
    return source.space.geodesic(X, nu, np.full(theta.shape, float(push)))


def _ray_coords(space, center, frame, points):
    w = space.log(center, points)
    comps = space.inner(w[..., None, :], frame[None, :, :]) if space.hyperbolic else w @ frame.T
    dist = np.linalg.norm(comps, axis=-1)
    return comps / dist[..., None], dist


def regraph(source: RadialSurface, push=0.0, center=None, frame=None, shape=None, initial=None):
    """Radial graph of the pushed surface about ``center``.

    Returns ``(surface, info)`` where ``info`` carries the orientation
    determinant of the ray map (negative values flag folds) and the final
    Newton residual.
    """
    space = source.space
    center = source.center if center is None else np.asarray(center, dtype=float)
    frame = source.frame if frame is None else np.asarray(frame, dtype=float)
    shape = source.radii.shape if shape is None else tuple(shape)
    grid = sphere_grid(*shape)
    d = grid.directions().reshape(-1, 3)
    e1, e2 = _tangent_basis(d)

    def residual(q):
        pts = image_points(source, q, push)
        u, dist = _ray_coords(space, center, frame, pts)
        return np.stack([np.einsum("pi,pi->p", u, e1), np.einsum("pi,pi->p", u, e2)], -1), u, dist

    if initial is not None:
        q = np.asarray(initial, dtype=float).reshape(-1, 3)
    elif center is source.center or np.allclose(center, source.center, atol=1e-15):
        # same center: rotate target rays into source frame coordinates
        T = d @ frame
        q = space.inner(T[:, None, :], source.frame[None, :, :]) if space.hyperbolic else T @ source.frame.T
    else:
        mean_r = float(np.mean(source.radii))
        T = d @ frame
        pts = space.geodesic(center, T, np.full(len(d), mean_r))
        q, _ = _ray_coords(space, source.center, source.frame, pts)
    q = q / np.linalg.norm(q, axis=1, keepdims=True)

    res, u, dist = residual(q)
    for _ in range(MAX_ITER):
        err = np.max(np.abs(res))
        if err < NEWTON_TOL:
            break
        b1, b2 = _tangent_basis(q)
        r1, _, _ = residual(q + FD_STEP * b1)
        r2, _, _ = residual(q + FD_STEP * b2)
        J = np.stack([(r1 - res) / FD_STEP, (r2 - res) / FD_STEP], -1)
        step = -np.linalg.solve(J, res[..., None])[..., 0]
        norm = np.linalg.norm(step, axis=1, keepdims=True)
        step = np.where(norm > MAX_STEP, step * MAX_STEP / np.maximum(norm, 1e-300), step)
        q = q + step[:, :1] * b1 + step[:, 1:] * b2
        q /= np.linalg.norm(q, axis=1, keepdims=True)
        new_res, u, dist = residual(q)
        res = new_res
    err = float(np.max(np.abs(res)))
    aligned = np.einsum("pi,pi->p", u, d)
    if err > 1e-9 or np.any(aligned <= 0):
        raise RegraphFailure(f"ray inversion did not converge (residual {err:.2e})")
    b1, b2 = _tangent_basis(q)
    r1, _, _ = residual(q + FD_STEP * b1)
    r2, _, _ = residual(q + FD_STEP * b2)
    det = ((r1 - res)[:, 0] * (r2 - res)[:, 1] - (r1 - res)[:, 1] * (r2 - res)[:, 0]) / FD_STEP**2
    # orientation of (b1, b2) vs (e1, e2) bases: both are right-handed about q / d
    surface = RadialSurface(space, center, frame, dist.reshape(shape))
    return surface, {"orientation": det.reshape(shape), "residual": err, "params": q.reshape(shape + (3,))}


def recentered(source: RadialSurface, center, frame=None):
    """Same surface, graphed about a different interior point."""
    space = source.space
    if frame is None:
        from .ambient import orthonormalize

        frame = orthonormalize(space, center, source.frame)
    surface, _ = regraph(source, 0.0, center=center, frame=frame)
    return surface


def surface_centroid(source: RadialSurface, weights=None):
    """Area-weighted barycenter of the surface nodes, projected onto the model."""
    from .surface import embed

    space = source.space
    X = embed(source)
    w = source.grid.sphere_weights if weights is None else weights
    mean = np.tensordot(w, X, axes=([0, 1], [0, 1])) / np.sum(w)
    if space.hyperbolic:
        n = np.sqrt(-space.inner(mean, mean))
        return space.normalize(mean / (space.k * n))
    return mean


__all__ = ["regraph", "recentered", "surface_centroid", "image_points", "RegraphFailure"]
