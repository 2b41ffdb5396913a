"""Numerical laboratory for harmonic mean curvature flow and total mean
curvature inequalities in constant curvature a <= 0."""

from .ambient import DiscBody, ModelSpace, cs, ct, sn
from .closedform import bonnesen_rhs, lambda_threshold, ns_limits, phi, sphere_quantities
from .flow import FlowConfig, FlowTrace, run, step
from .parallel import NsBody, estimate_inradius, ns_surface, parallel_surface
from .report import AuditReport
from .surface import (
    CurvatureField,
    RadialSurface,
    SurfaceIntegrals,
    fundamental_forms,
    geodesic_sphere,
    integrals,
    perturbed_sphere,
    surface_integrals,
)

__version__ = "0.1.0"

__all__ = [
    "AuditReport",
    "CurvatureField",
    "DiscBody",
    "FlowConfig",
    "FlowTrace",
    "ModelSpace",
    "NsBody",
    "RadialSurface",
    "SurfaceIntegrals",
    "bonnesen_rhs",
    "cs",
    "ct",
    "estimate_inradius",
    "fundamental_forms",
    "geodesic_sphere",
    "integrals",
    "lambda_threshold",
    "ns_limits",
    "ns_surface",
    "parallel_surface",
    "perturbed_sphere",
    "phi",
    "run",
    "sn",
    "sphere_quantities",
    "step",
    "surface_integrals",
]
