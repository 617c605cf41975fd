"""
Helper class for uniform Cartesian grids centred on the origin, used to sample
fields on a disk B_radius of R^n and to index the grid nodes.
Node coordinates are x = h * (idx - m) with idx in 0..2m along every axis.
disk_cells gives the midpoint-rule cells covering a disk, for quadratures.

>>> grid = CartesianGrid(h=0.25, radius=0.5, n=2, pad=0)
>>> grid.shape
(5, 5)
>>> int(grid.inside().sum())
9
"""

import numpy as np

from hemirigid.errors import ConfigurationError


class CartesianGrid:
    """
    Nodes h*k, k in -m..m, along each of the n axes, with m = ceil(radius/h) + pad.
    """

    def __init__(self, h, radius=1.0, n=2, pad=2):
        if not h > 0:
            raise ConfigurationError(f"Grid spacing must be positive, got {h}.")
        self.h = float(h)
        self.radius = float(radius)
        self.n = n  # Dimension of the vector space
        self.pad = pad
        self.m = int(np.ceil(self.radius / self.h - 1e-9)) + pad
        self.axis = self.h * np.arange(-self.m, self.m + 1)

    @property
    def shape(self):
        return (2 * self.m + 1,) * self.n

    @property
    def points(self):
        """Node coordinates, array of shape (*shape, n)."""
        return np.stack(np.meshgrid(*[self.axis] * self.n, indexing="ij"), axis=-1)

    @property
    def r(self):
        return np.linalg.norm(self.points, axis=-1)

    def inside(self, radius=None, margin=0.0):
        """Mask of the nodes with |x| < radius - margin (default radius: the grid's)."""
        radius = self.radius if radius is None else radius
        return self.r < radius - margin

    def closed_inside(self, radius=None):
        radius = self.radius if radius is None else radius
        return self.r <= radius * (1 + 1e-12)

    def node_coordinates(self, vd):
        return self.h * (np.asarray(vd) - self.m)

    def fractional_index(self, x):
        """Continuous index of a point, i.e. x/h + m on every axis."""
        return np.asarray(x, dtype=np.float64) / self.h + self.m

    def to_dict(self):
        return dict(n=self.n, h=self.h, radius=self.radius, pad=self.pad)


def disk_cells(a, h, n=2, subsamples=8):
    """
    Midpoint-rule cells covering the ball B_a of R^n: the cells are the cubes of
    side h centred at (k + 1/2) h. Return (centres, weights) where the weight is
    h^n times the fraction of the cell inside B_a, estimated on subsamples^n
    points for the cells cut by the sphere.
    >>> centres, weights = disk_cells(1.0, 0.5)
    >>> centres.shape
    (16, 2)
    >>> bool(abs(weights.sum() - np.pi) < 0.1)
    True
    """
    m = int(np.ceil(a / h))
    axis = h * (np.arange(-m, m) + 0.5)
    centres = np.stack(np.meshgrid(*[axis] * n, indexing="ij"), axis=-1).reshape(-1, n)
    rc = np.linalg.norm(centres, axis=1)
    half_diag = 0.5 * h * np.sqrt(n)
    full = rc + half_diag <= a
    cut = np.logical_and(~full, rc - half_diag < a)

    # Sub-sample offsets inside one cell, relative to its centre.
    sub = h * ((np.arange(subsamples) + 0.5) / subsamples - 0.5)
    offsets = np.stack(np.meshgrid(*[sub] * n, indexing="ij"), axis=-1).reshape(-1, n)
    samples = centres[cut][:, None, :] + offsets[None, :, :]
    fraction = np.mean(np.linalg.norm(samples, axis=-1) < a, axis=1)

    weights = np.zeros(len(centres))
    weights[full] = h**n
    weights[cut] = fraction * h**n
    keep = weights > 0
    return centres[keep], weights[keep]
