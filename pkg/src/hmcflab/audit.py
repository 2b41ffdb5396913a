"""Inequality audits over computed surface quantities.

Each audit returns an :class:`AuditReport` whose pass flag depends only on
its serialized numbers.  Default tolerances are
``max(1e-9 * |rhs|, Gauss-Bonnet residual of the input)`` so that the
discretization error, not the inequality, sets the bar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .ambient import DiscBody, ModelSpace
from .closedform import NsLimits, bonnesen_rhs, lambda_threshold, ns_limits, sphere_quantities
from .errors import DomainError, NotHConvex
from .parallel import NsBody, estimate_inradius, ns_surface, ordered_map, parallel_surface
from .report import AuditReport, combine
from .surface import CurvatureField, SurfaceIntegrals, gauss_bonnet_residual, geodesic_sphere, surface_integrals

HCONVEX_SLACK = 1e-9


def default_tolerance(rhs, i=None, a=None, scale=1.0):
    tol = 1e-9 * abs(rhs)
    if isinstance(i, SurfaceIntegrals) and a is not None:
        tol = max(tol, gauss_bonnet_residual(i, a))
    return scale * tol


def _area_M(i):
    if isinstance(i, NsLimits):
        return i.area_limit, i.M_limit
    return i.area, i.M


def minkowski_audit(i, a, tolerance=None, tolerance_scale=1.0, **meta) -> AuditReport:
    """``M^2 >= 16 pi A - 2 a A^2``."""
    area, M = _area_M(i)
    rhs = 16 * np.pi * area - 2 * a * area * area
    tol = default_tolerance(rhs, i, a, tolerance_scale) if tolerance is None else tolerance
    return AuditReport.build("minkowski", M * M, rhs, tol, **{**meta, "a": a})


def santalo_audit(i, a, tolerance=None, ns_r=None, tolerance_scale=1.0, **meta) -> AuditReport:
    """``M^2 >= 16 pi A - 4 a A^2``; expected to fail on thin disc tubes with lambda threshold below 4."""
    if a >= 0:
        raise DomainError("the Santalo-type bound is stated for a < 0")
    area, M = _area_M(i)
    if isinstance(i, NsLimits):
        ns_r = i.r
    rhs = 16 * np.pi * area - 4 * a * area * area
    tol = default_tolerance(rhs, i, a, tolerance_scale) if tolerance is None else tolerance
    expected = ns_r is not None and float(lambda_threshold(ns_r)) < 4.0
    if ns_r is not None:
        meta["lambda_threshold"] = float(lambda_threshold(ns_r))
        meta["r"] = float(ns_r)
    return AuditReport.build("santalo", M * M, rhs, tol, expected_to_fail=expected, **{**meta, "a": a})


def hconvex_audit(i: SurfaceIntegrals, f: CurvatureField, a, tolerance=None, tolerance_scale=1.0, **meta) -> AuditReport:
    """``M^2 >= 16 pi A - 3.5 a A^2`` for h-convex surfaces, plus the
    ``(int H)(int 1/H) <= A * Gtot`` sub-check after rescaling to a = -1."""
    if a >= 0:
        raise DomainError("h-convexity needs a < 0")
    k = np.sqrt(-a)
    if f.kappa_min < k * (1.0 - HCONVEX_SLACK):
        raise NotHConvex(f"min kappa1 = {f.kappa_min:.6g} is below sqrt(-a) = {k:.6g}")
    rhs = 16 * np.pi * i.area - 3.5 * a * i.area**2
    tol = default_tolerance(rhs, i, a, tolerance_scale) if tolerance is None else tolerance
    main = AuditReport.build("hconvex.main", i.M**2, rhs, tol, a=a)
    # unit-curvature rescaling: H -> H/k, dmu -> k^2 dmu
    int_H = f.integrate(f.H) * k
    int_inv_H = f.integrate(1.0 / f.H) * k**3
    area1 = i.area * k * k
    sub_lhs = area1 * i.Gtot
    sub_rhs = int_H * int_inv_H
    sub_tol = default_tolerance(sub_rhs, i, a, tolerance_scale) if tolerance is None else tolerance
    sub = AuditReport.build("hconvex.sub", sub_lhs, sub_rhs, sub_tol, a=a)
    return combine("hconvex", [main, sub], **{**meta, "a": a})


def bonnesen_audit(volume, area, inrad, tolerance=None, gb_residual=0.0, **meta) -> AuditReport:
    """Volume against the Euclidean shell bound built from area and inradius."""
    lhs = bonnesen_rhs(area, inrad)
    tol = max(1e-9 * abs(volume), gb_residual) if tolerance is None else tolerance
    return AuditReport.build("bonnesen", lhs, volume, tol, area=area, inrad=inrad, **meta)


def nesting_audit(inner: SurfaceIntegrals, outer: SurfaceIntegrals, tolerance=None, tolerance_scale=1.0, **meta) -> AuditReport:
    """Total mean curvature and area do not decrease from a nested body to its container."""
    parts = []
    for name, lo, hi in (("M", inner.M, outer.M), ("area", inner.area, outer.area)):
        tol = 1e-9 * abs(hi) * tolerance_scale if tolerance is None else tolerance
        parts.append(AuditReport.build(f"nesting.{name}", hi, lo, tol))
    return combine("nesting", parts, **meta)


def parallel_monotone_audit(s, ts, tolerance=None, quad_rtol=1e-6, layer_nodes=3, workers=None) -> AuditReport:
    """``t -> M(Gamma_t)`` nondecreasing, and ``dM/dt = int (2G - 2a)`` over the sweep.

    The integrated form sums ``(2G - 2a) dmu dt`` over layers placed at
    ``layer_nodes`` Gauss-Legendre points inside every interval of ``ts``.
    """
    ts = np.asarray([float(t) for t in ts])
    if ts.size < 2 or np.any(ts < 0) or np.any(np.diff(ts) <= 0):
        raise DomainError("ts must be ascending, nonnegative and have at least two entries")
    a = s.a
    x, w = roots_legendre(layer_nodes)
    lo, hi = ts[:-1, None], ts[1:, None]
    layer_t = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
    layer_w = (0.5 * (hi - lo) * w).ravel()
    sweep = list(ts) + list(layer_t)
    members = ordered_map(lambda t: parallel_surface(s, t), sweep, workers)
    ints = [surface_integrals(m)[0] for m in members]
    M = np.array([i.M for i in ints[: len(ts)]])
    rate = np.array([2 * i.Gtot - 2 * a * i.area for i in ints[len(ts) :]])
    parts = []
    for k in range(1, len(ts)):
        tol = max(1e-9 * abs(M[k]), gauss_bonnet_residual(ints[k], a)) if tolerance is None else tolerance
        parts.append(AuditReport.build(f"monotone[t={ts[k]:g}]", M[k], M[k - 1], tol))
    integral = float(np.dot(layer_w, rate))
    dM = float(M[-1] - M[0])
    qtol = quad_rtol * abs(dM)
    parts.append(AuditReport.build("integrated.upper", integral, dM, qtol))
    parts.append(AuditReport.build("integrated.lower", dM, integral, qtol))
    return combine("parallel_monotone", parts, a=a, ts=list(ts), M=list(M), layer_integral=integral)


# --------------------------------------------------------------------------
# disc tube scan


def extrapolate_to_zero(eps, values):
    """Polynomial extrapolation to ``eps = 0`` (Richardson for halving sequences)."""
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    out = 0.0
    for j in range(len(eps)):
        others = np.delete(eps, j)
        out += values[j] * np.prod(others / (others - eps[j]))
    return float(out)


@dataclass(frozen=True)
class NsRow:
    r: float
    eps: tuple
    area: float
    M: float
    area_limit: float
    M_limit: float
    implied_lambda: float
    lambda_threshold: float

    @property
    def area_error(self):
        return abs(self.area / self.area_limit - 1.0)

    @property
    def M_error(self):
        return abs(self.M / self.M_limit - 1.0)

    def as_dict(self):
        return {
            "r": self.r,
            "eps": list(self.eps),
            "area": self.area,
            "M": self.M,
            "area_limit": self.area_limit,
            "M_limit": self.M_limit,
            "area_error": self.area_error,
            "M_error": self.M_error,
            "implied_lambda": self.implied_lambda,
            "lambda_threshold": self.lambda_threshold,
        }


def ns_integrals(r, eps, method="profile", grid=(64, 128), space=None):
    disc = DiscBody.standard(r, space or ModelSpace(-1.0))
    if method == "profile":
        return NsBody(disc, eps).integrals
    if method == "grid":
        return surface_integrals(ns_surface(disc, eps, *grid))[0]
    raise DomainError(f"unknown method {method!r}")


def ns_scan(r_values, eps_values, method="profile", grid=(64, 128), area_rtol=0.01, M_rtol=0.02, workers=None):
    """Extrapolate disc-tube area and total mean curvature to ``eps -> 0`` and audit them.

    Returns ``(rows, report)``.
    """
    eps_values = tuple(sorted((float(e) for e in eps_values), reverse=True))
    if len(eps_values) < 1 or min(eps_values) <= 0:
        raise DomainError("eps values must be positive")
    jobs = [(float(r), e) for r in r_values for e in eps_values]
    results = ordered_map(lambda job: ns_integrals(job[0], job[1], method, grid), jobs, workers)
    rows, parts = [], []
    for n, r in enumerate(float(r) for r in r_values):
        chunk = results[n * len(eps_values) : (n + 1) * len(eps_values)]
        A = extrapolate_to_zero(eps_values, [c.area for c in chunk])
        M = extrapolate_to_zero(eps_values, [c.M for c in chunk])
        lim = ns_limits(r)
        row = NsRow(r, eps_values, A, M, lim.area_limit, lim.M_limit, (M * M - 16 * np.pi * A) / A**2, lim.lambda_threshold)
        rows.append(row)
        parts.append(AuditReport.build(f"ns_area[r={r:g}]", area_rtol, row.area_error, 0.0, r=r))
        parts.append(AuditReport.build(f"ns_M[r={r:g}]", M_rtol, row.M_error, 0.0, r=r))
        extrap = SurfaceIntegrals(area=A, M=M, Gtot=4 * np.pi + A, volume=0.0)
        mk = minkowski_audit(extrap, -1.0, r=r)
        parts.append(AuditReport.build(f"minkowski[r={r:g}]", mk.lhs, mk.rhs, mk.tolerance, r=r))
        st = santalo_audit(extrap, -1.0, ns_r=r)
        parts.append(
            AuditReport.build(f"santalo[r={r:g}]", st.lhs, st.rhs, st.tolerance, expected_to_fail=st.expected_to_fail, r=r)
        )
    return rows, combine("ns_scan", parts, method=method)


# --------------------------------------------------------------------------
# convenience bundle for a single geodesic sphere


def sphere_audits(a, rho, ntheta=64, nphi=128, tolerance_scale=1.0):
    """Integrals, oracle errors and every applicable audit for a geodesic sphere."""
    space = ModelSpace(float(a))
    s = geodesic_sphere(space, rho, ntheta=ntheta, nphi=nphi)
    i, f = surface_integrals(s, require_convex=True)
    exact = sphere_quantities(a, rho)
    gb = gauss_bonnet_residual(i, a)

    def tol(rhs):
        return default_tolerance(rhs, i, a, scale=tolerance_scale)

    meta = {"rho": rho, "grid": [ntheta, nphi]}
    reports = [minkowski_audit(i, a, tolerance=tol(16 * np.pi * i.area - 2 * a * i.area**2), **meta)]
    if a < 0:
        reports.append(santalo_audit(i, a, tolerance=tol(16 * np.pi * i.area - 4 * a * i.area**2), **meta))
        if f.kappa_min >= np.sqrt(-a) * (1 - HCONVEX_SLACK):
            reports.append(hconvex_audit(i, f, a, tolerance_scale=tolerance_scale, **meta))
    inrad = estimate_inradius(s)
    R = np.sqrt(i.area / (4 * np.pi))
    reports.append(
        bonnesen_audit(i.volume, i.area, min(inrad, R), tolerance=max(1e-9 * i.volume, gb) * tolerance_scale, a=a, **meta)
    )
    errors = {k: abs(getattr(i, k) / getattr(exact, k) - 1.0) for k in ("area", "M", "Gtot", "volume")}
    return {"integrals": i, "exact": exact, "gauss_bonnet": gb, "errors": errors, "inradius": inrad, "reports": reports}
