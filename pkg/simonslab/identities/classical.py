import logging

import numpy as np

from simonslab.core.errors import HypothesisError
from simonslab.geometry.fields import ShapeNormField
from simonslab.geometry.frame import surface_frame, surface_laplacian

logger = logging.getLogger(__name__)

MINIMAL_TOL = 1e-10
LAPLACIAN_STEP = 2e-3


def classical_simons_terms(S, x, h=None, tol=MINIMAL_TOL):
    """Laplacian of c^2, c^4 and |grad A|^2 at a point of a minimal surface"""
    x = np.asarray(x, dtype=float)
    frame = surface_frame(S, x, third_order=True)
    if abs(frame.mean_curvature) > tol:
        raise HypothesisError(
            f"mean curvature {frame.mean_curvature:.3e} at {x.tolist()} is not zero")
    h = LAPLACIAN_STEP * S.length_scale if h is None else float(h)
    c2 = frame.total_curvature_sq
    laplacian = surface_laplacian(S, ShapeNormField(S), x, h=h, frame=frame)
    gradient_sq = float(np.sum(frame.curvature_gradient ** 2))
    return {
        "laplacian_c2": laplacian,
        "c2": c2,
        "c4": c2 ** 2,
        "gradient_sq": gradient_sq,
        "residual": laplacian + 2.0 * c2 ** 2 - 2.0 * gradient_sq,
        "mean_curvature": frame.mean_curvature,
    }


def classical_simons_residual(S, x, h=None, tol=MINIMAL_TOL):
    """Laplacian c^2 + 2 c^4 - 2 sum |delta_k h_ij|^2"""
    terms = classical_simons_terms(S, x, h, tol)
    logger.debug("Classical Simons terms on %s: %s", S.name, terms)
    return terms["residual"]
