"""Function-case operators on the level sets of a smooth u"""

from simonslab.levelset.functions import LevelSetFunction, TransformedFunction, make_levelset
from simonslab.levelset.grid import VolumeGrid
from simonslab.levelset.operators import (c_ku_sq, c_ku_sq_rearranged, coarea_check, h_ku, l_ku_apply,
                                          levelset_context, sharp_interface_study, simons_u_residual)

__all__ = [
    "LevelSetFunction", "TransformedFunction", "VolumeGrid", "c_ku_sq", "c_ku_sq_rearranged",
    "coarea_check", "h_ku", "l_ku_apply", "levelset_context", "make_levelset",
    "sharp_interface_study", "simons_u_residual",
]
