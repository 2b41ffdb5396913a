"""Latitude-longitude grid on the unit sphere with spectral calculus.

Colatitudes are Gauss-Legendre nodes in ``cos(theta)`` (poles excluded),
longitudes are uniform.  A field sampled on the grid is continued across
the poles with ``r(-theta, phi) = r(theta, phi + pi)``, which turns every
meridian pair into a smooth periodic function on a doubled set of
``2*ntheta`` nonuniform nodes.  Trigonometric interpolation on that set,
together with ordinary Fourier interpolation in ``phi``, gives a global
tensor interpolant used for derivatives, resampling and off-grid
evaluation.
"""

from __future__ import annotations

from functools import cached_property, lru_cache

import numpy as np
from scipy.special import sph_harm_y

from .errors import DomainError

MIN_NTHETA = 16
MIN_NPHI = 32


def _trig_basis(t, nmodes, top, deriv=0):
    """Real trigonometric basis with ``2*nmodes`` functions.

    Columns: 1, cos t, sin t, ..., cos (n-1)t, sin (n-1)t, top(n t), where
    ``top`` is ``"sin"`` for the doubled colatitude nodes (which are
    symmetric about 0, so the even and odd parts each need n functions)
    and ``"cos"`` for uniform longitude nodes.
    """
    t = np.asarray(t, dtype=float)
    cols = []
    if deriv == 0:
        cols.append(np.ones_like(t))
    else:
        cols.append(np.zeros_like(t))
    for k in range(1, nmodes):
        c, s = np.cos(k * t), np.sin(k * t)
        if deriv == 0:
            cols += [c, s]
        elif deriv == 1:
            cols += [-k * s, k * c]
        else:
            cols += [-(k**2) * c, -(k**2) * s]
    k = nmodes
    c, s = np.cos(k * t), np.sin(k * t)
    if top == "sin":
        cols.append([s, k * c, -(k**2) * s][deriv])
    else:
        cols.append([c, -k * s, -(k**2) * c][deriv])
    return np.stack(cols, axis=-1)


class SphereGrid:
    """Immutable grid description plus cached spectral operators."""

    def __init__(self, ntheta, nphi):
        if ntheta < MIN_NTHETA or nphi < MIN_NPHI or nphi % 2:
            raise DomainError(
                f"grid {ntheta}x{nphi} violates ntheta >= {MIN_NTHETA}, nphi >= {MIN_NPHI}, nphi even"
            )
        self.ntheta = int(ntheta)
        self.nphi = int(nphi)
        x, w = np.polynomial.legendre.leggauss(self.ntheta)
        order = np.argsort(-x)
        self.cos_theta = x[order]
        self.gl_weights = w[order]
        self.theta = np.arccos(self.cos_theta)
        self.sin_theta = np.sqrt(1.0 - self.cos_theta**2)
        self.phi = 2.0 * np.pi * np.arange(self.nphi) / self.nphi
        self.dphi = 2.0 * np.pi / self.nphi
        for arr in (self.cos_theta, self.gl_weights, self.theta, self.sin_theta, self.phi):
            arr.setflags(write=False)

    def __repr__(self):
        return f"SphereGrid({self.ntheta}, {self.nphi})"

    @property
    def shape(self):
        return (self.ntheta, self.nphi)

    @cached_property
    def mesh(self):
        th, ph = np.meshgrid(self.theta, self.phi, indexing="ij")
        return th, ph

    @cached_property
    def sphere_weights(self):
        """Quadrature weights for integrals over the unit sphere."""
        return np.outer(self.gl_weights, np.full(self.nphi, self.dphi))

    @cached_property
    def param_weights(self):
        """Weights for integrals ``dtheta dphi`` (area density already carries sin)."""
        return self.sphere_weights / self.sin_theta[:, None]

    @cached_property
    def doubled_theta(self):
        return np.concatenate([-self.theta[::-1], self.theta])

    @cached_property
    def _theta_ops(self):
        t = self.doubled_theta
        n = self.ntheta
        V = _trig_basis(t, n, "sin")
        inv = np.linalg.inv(V)
        D1 = _trig_basis(t, n, "sin", 1) @ inv
        D2 = _trig_basis(t, n, "sin", 2) @ inv
        return inv, D1[n:], D2[n:]

    @cached_property
    def _phi_ops(self):
        p = self.phi
        m = self.nphi // 2
        V = _trig_basis(p, m, "cos")
        inv = np.linalg.inv(V)
        D1 = _trig_basis(p, m, "cos", 1) @ inv
        D2 = _trig_basis(p, m, "cos", 2) @ inv
        return inv, D1, D2

    def double(self, field):
        """Stack the pole-continued copy of ``field`` above it (rows = doubled nodes)."""
        field = np.asarray(field, dtype=float)
        flipped = np.roll(field, self.nphi // 2, axis=1)[::-1]
        return np.concatenate([flipped, field], axis=0)

    def derivatives(self, field):
        """``(f_t, f_p, f_tt, f_tp, f_pp)`` on the grid by spectral differentiation."""
        _, Dt, Dtt = self._theta_ops
        _, Dp, Dpp = self._phi_ops
        field = np.asarray(field, dtype=float)
        # constants differentiate to exactly zero; keeps spheres umbilic to roundoff
        field = field - field.mean()
        doubled = self.double(field)
        f_t = Dt @ doubled
        f_tt = Dtt @ doubled
        f_p = field @ Dp.T
        f_pp = field @ Dpp.T
        f_tp = Dt @ self.double(f_p)
        return f_t, f_p, f_tt, f_tp, f_pp

    def coefficients(self, field):
        """Tensor trigonometric coefficients of the pole-continued field."""
        inv_t, _, _ = self._theta_ops
        inv_p, _, _ = self._phi_ops
        return inv_t @ self.double(field) @ inv_p.T

    def evaluate(self, coeffs, theta, phi, deriv=False):
        """Evaluate the interpolant at arbitrary points.

        With ``deriv`` also returns the first derivatives in theta and phi.
        """
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        shape = np.broadcast_shapes(theta.shape, phi.shape)
        theta = np.broadcast_to(theta, shape).ravel()
        phi = np.broadcast_to(phi, shape).ravel()
        bt = _trig_basis(theta, self.ntheta, "sin")
        bp = _trig_basis(phi, self.nphi // 2, "cos")
        tmp = bt @ coeffs
        val = np.einsum("pi,pi->p", tmp, bp).reshape(shape)
        if not deriv:
            return val
        dbt = _trig_basis(theta, self.ntheta, "sin", 1)
        dbp = _trig_basis(phi, self.nphi // 2, "cos", 1)
        f_t = np.einsum("pi,pi->p", dbt @ coeffs, bp).reshape(shape)
        f_p = np.einsum("pi,pi->p", tmp, dbp).reshape(shape)
        return val, f_t, f_p

    def integrate(self, field):
        """Integral over the unit sphere of a grid field (fixed summation order)."""
        return float(np.sum(np.asarray(field) * self.sphere_weights))

    def directions(self):
        """Unit direction vectors (frame coordinates) at every node, shape (nt, np, 3)."""
        th, ph = self.mesh
        return unit_direction(th, ph)

    @cached_property
    def default_filter_degree(self):
        return max(2, (2 * (self.ntheta - 1)) // 3)

    @lru_cache(maxsize=8)
    def _sh_projectors(self, degree):
        x = self.cos_theta
        th = self.theta
        mats = []
        for m in range(degree + 1):
            ls = np.arange(m, degree + 1)
            P = np.real(sph_harm_y(ls[:, None], m, th[None, :], 0.0)).T
            mats.append(2.0 * np.pi * P @ (P * self.gl_weights[:, None]).T)
        return np.array(mats), x

    def sh_filter(self, field, degree=None):
        """Orthogonal projection onto spherical harmonics of degree <= ``degree``.

        Removes the high longitudinal modes near the poles that would
        otherwise limit explicit time steps to the tiny polar spacing.
        """
        degree = self.default_filter_degree if degree is None else int(degree)
        if degree >= self.ntheta:
            raise DomainError("filter degree must be below ntheta")
        mats, _ = self._sh_projectors(degree)
        spec = np.fft.rfft(np.asarray(field, dtype=float), axis=1)
        out = np.zeros_like(spec)
        out[:, : degree + 1] = np.einsum("mij,jm->im", mats, spec[:, : degree + 1])
        return np.fft.irfft(out, n=self.nphi, axis=1)


@lru_cache(maxsize=32)
def sphere_grid(ntheta, nphi):
    return SphereGrid(ntheta, nphi)


def unit_direction(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def direction_angles(u):
    """Inverse of :func:`unit_direction` for unit vectors (last axis)."""
    u = np.asarray(u, dtype=float)
    theta = np.arccos(np.clip(u[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(u[..., 1], u[..., 0]), 2.0 * np.pi)
    return theta, phi
