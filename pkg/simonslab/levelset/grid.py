"""Frame-aligned midpoint grids for the function-case volume integrals.

The grid has N cells per axis over x + R [-a, a]^n, where the rows of R
are the adapted frame (t_1, ..., t_{n-1}, nu).  Nodes are generated in
slabs along the first frame axis; each slab is reduced with the tree sum
and the slab sums are reduced again in slab order, so the result does not
depend on how many workers evaluate the slabs.
"""

import logging
from dataclasses import dataclass

import numpy as np

from simonslab.core.errors import ParameterError
from simonslab.core.executor import CheckExecutor
from simonslab.core.reduction import tree_sum

logger = logging.getLogger(__name__)

SLAB_NODES = 1 << 16
GRADIENT_CUTOFF = 1e-3


@dataclass(frozen=True)
class VolumeGrid:
    center: np.ndarray
    rotation: np.ndarray     # rows: frame axes
    half_width: float
    cells: int

    def __post_init__(self):
        if self.cells < 2:
            raise ParameterError(f"grid needs at least 2 cells per axis, got {self.cells}")
        if self.half_width <= 0.0:
            raise ParameterError(f"grid half width must be positive, got {self.half_width}")

    @property
    def dimension(self):
        return len(self.center)

    @property
    def spacing(self):
        return 2.0 * self.half_width / self.cells

    @property
    def cell_volume(self):
        return self.spacing ** self.dimension

    @property
    def size(self):
        return self.cells ** self.dimension

    def coarser(self):
        """Same box with half the cells per axis"""
        return VolumeGrid(self.center, self.rotation, self.half_width, max(2, self.cells // 2))

    def with_cells(self, cells):
        return VolumeGrid(self.center, self.rotation, self.half_width, int(cells))

    def axis_nodes(self):
        return -self.half_width + (np.arange(self.cells) + 0.5) * self.spacing

    def slabs(self):
        """Index ranges along the first axis, each holding at most SLAB_NODES nodes"""
        per_layer = self.cells ** (self.dimension - 1)
        layers = max(1, SLAB_NODES // per_layer)
        return [(start, min(start + layers, self.cells)) for start in range(0, self.cells, layers)]

    def slab_points(self, start, stop):
        """Ambient points of the layers [start, stop) in C order"""
        z = self.axis_nodes()
        axes = [z[start:stop]] + [z] * (self.dimension - 1)
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dimension)
        return self.center + mesh @ self.rotation

    def describe(self):
        return {"cells": self.cells, "half_width": self.half_width, "spacing": self.spacing,
                "size": self.size}


def grid_reduce(grid, integrand, executor=None):
    """sum over nodes of integrand(points) * cell volume.

    ``integrand`` maps an (m, n) block of points to an array whose leading
    axis has length m; every trailing shape is summed independently.
    """
    def slab_sum(bounds):
        points = grid.slab_points(*bounds)
        return tree_sum(np.asarray(integrand(points), dtype=float), axis=0)

    executor = executor or CheckExecutor(1)
    partial = executor.map(slab_sum, grid.slabs())
    return tree_sum(np.stack([np.asarray(p) for p in partial]), axis=0) * grid.cell_volume


def grid_max(grid, fn, executor=None):
    """max over nodes of fn(points)"""
    executor = executor or CheckExecutor(1)
    return float(max(executor.map(lambda b: float(np.max(fn(grid.slab_points(*b)))), grid.slabs())))


def gradient_max(u, grid, executor=None):
    """max |grad u| over the grid nodes"""
    return grid_max(grid, lambda p: np.linalg.norm(u.gradient(p), axis=-1), executor)
