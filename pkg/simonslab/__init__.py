"""
Simons Lab - numerical verification of nonlocal Simons-type identities
"""

__version__ = "0.1.0"
__author__ = "SimonsLab Team"
