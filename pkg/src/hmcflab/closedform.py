"""Exact reference values: geodesic spheres, the phi functional, the
disc-tube (Naveira-Solanes) limits and the Bonnesen-type volume bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ambient import _check_curvature, cs, sn, sn2_integral
from .errors import DomainError, InradExceedsRadius
from .surface import SurfaceIntegrals

INRAD_SLACK = 1e-12


def sphere_quantities(a, rho) -> SurfaceIntegrals:
    """Area, total mean curvature, total Gauss curvature and volume of a geodesic sphere."""
    _check_curvature(a)
    if rho <= 0:
        raise DomainError("sphere radius must be positive")
    s = float(sn(a, rho))
    c = float(cs(a, rho))
    return SurfaceIntegrals(
        area=4 * np.pi * s * s,
        M=8 * np.pi * s * c,
        Gtot=4 * np.pi * c * c,
        volume=4 * np.pi * float(sn2_integral(a, rho)),
    )


def phi(M, area, a, lam=2.0):
    """``M^2 - 16 pi area + lam * a * area^2``; nonincreasing along the flow for lam = 2."""
    return M * M - 16 * np.pi * area + lam * a * area * area


@dataclass(frozen=True)
class NsLimits:
    r: float
    area_limit: float
    M_limit: float
    lambda_threshold: float


def lambda_threshold(r):
    """Largest lam keeping ``phi_lam >= 0`` on thin tubes about a disc of radius ``r`` (a = -1)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("disc radius must be positive")
    ch1 = np.cosh(r) - 1.0
    return (np.pi**2 * np.sinh(r) ** 2 - 16.0 * ch1) / (4.0 * ch1**2)


def ns_limits(r) -> NsLimits:
    """Flat-limit area and total mean curvature of the thin tube about a disc (a = -1)."""
    if r <= 0:
        raise DomainError("disc radius must be positive")
    return NsLimits(
        r=float(r),
        area_limit=4 * np.pi * (np.cosh(r) - 1.0),
        M_limit=2 * np.pi**2 * np.sinh(r),
        lambda_threshold=float(lambda_threshold(r)),
    )


def bonnesen_rhs(area, inrad):
    """Volume of the Euclidean shell between radius R = sqrt(area/4 pi) and R - inrad."""
    if area <= 0:
        raise DomainError("area must be positive")
    if inrad < 0:
        raise DomainError("inradius must be nonnegative")
    R = np.sqrt(area / (4 * np.pi))
    if inrad > R + INRAD_SLACK:
        raise InradExceedsRadius(f"inradius {inrad!r} exceeds the comparison radius {R!r}")
    inrad = min(inrad, R)
    return 4 * np.pi / 3 * (R**3 - (R - inrad) ** 3)
