"""Hypersurfaces, adapted frames, fields and surface quadrature"""

from simonslab.geometry.frame import (FramedPoint, surface_curve, surface_frame,
                                      surface_laplacian, tangential_derivative)
from simonslab.geometry.graph import GraphSurface, Polynomial
from simonslab.geometry.motion import RigidMotion
from simonslab.geometry.rules import QuadratureRule, build_quadrature
from simonslab.geometry.surfaces import Surface, TransformedSurface, make_surface

__all__ = [
    "FramedPoint", "GraphSurface", "Polynomial", "QuadratureRule", "RigidMotion", "Surface",
    "TransformedSurface", "build_quadrature", "make_surface", "surface_curve",
    "surface_frame", "surface_laplacian", "tangential_derivative",
]
