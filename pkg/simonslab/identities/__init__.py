"""Simons-type identities assembled from the nonlocal operators"""

from simonslab.identities.classical import classical_simons_residual, classical_simons_terms
from simonslab.identities.limit import LimitStudy, limit_study
from simonslab.identities.reports import (LimitStudyRow, ResidualReport, StabilityConclusion,
                                          StabilityReport)
from simonslab.identities.simons import simons_residual
from simonslab.identities.stability import stability_conclusion_check, stability_decomposition_check

__all__ = [
    "LimitStudy", "LimitStudyRow", "ResidualReport", "StabilityConclusion", "StabilityReport",
    "classical_simons_residual", "classical_simons_terms", "limit_study", "simons_residual",
    "stability_conclusion_check", "stability_decomposition_check",
]
