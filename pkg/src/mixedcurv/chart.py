"""Periodic coordinate boxes standing in for closed manifolds.

A chart is a flat n-torus: an axis-aligned box with opposite faces glued.
That realizes the closed-manifold assumption behind the Stokes-based integral
identities while keeping quadrature trivial: on a torus the rectangle rule on
the uniform grid equals the trapezoid rule and is spectrally accurate for
smooth integrands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["PeriodicChart"]


@dataclass(frozen=True)
class PeriodicChart:
    """An n-dimensional periodic box with a uniform quadrature grid.

    Attributes
    ----------
    n : manifold dimension (>= 2)
    periods : edge length per axis (> 0)
    grid_res : quadrature points per axis (>= 4)
    """

    n: int
    periods: tuple = field(default=None)
    grid_res: tuple = field(default=None)

    def __post_init__(self):
        periods = self.periods or (2.0 * np.pi,) * self.n
        grid_res = self.grid_res or (16,) * self.n
        object.__setattr__(self, "periods", tuple(float(p) for p in periods))
        object.__setattr__(self, "grid_res", tuple(int(r) for r in grid_res))
        if self.n < 2:
            raise ValueError("chart dimension must be at least 2")
        if len(self.periods) != self.n or len(self.grid_res) != self.n:
            raise ValueError("periods and grid_res must have length n")
        if any(p <= 0 for p in self.periods):
            raise ValueError("periods must be positive")
        if any(r < 4 for r in self.grid_res):
            raise ValueError("grid_res must be at least 4 per axis")

    # ------------------------------------------------------------------ grid

    @property
    def num_points(self):
        return int(np.prod(self.grid_res))

    @property
    def cell_volume(self):
        """Coordinate volume of one grid cell (uniform quadrature weight)."""
        return float(
            np.prod([p / r for p, r in zip(self.periods, self.grid_res)])
        )

    def axis_coords(self, axis):
        """Left-endpoint uniform nodes along one axis (periodic: no endpoint)."""
        r = self.grid_res[axis]
        return self.periods[axis] * np.arange(r) / r

    def grid_points(self):
        """All grid points, shape (n, N) in C order."""
        axes = [self.axis_coords(m) for m in range(self.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh])

    def point_chunks(self, chunk_size=32768):
        """Yield (offset, points) batches covering the grid in C order."""
        pts = self.grid_points()
        total = pts.shape[1]
        for start in range(0, total, chunk_size):
            yield start, pts[:, start : start + chunk_size]

    def with_resolution(self, grid_res):
        if np.isscalar(grid_res):
            grid_res = (int(grid_res),) * self.n
        return PeriodicChart(self.n, self.periods, tuple(grid_res))

    # --------------------------------------------------------------- helpers

    def wrap(self, points):
        """Map points into the fundamental box."""
        points = np.asarray(points, dtype=float)
        per = np.asarray(self.periods)[:, None] if points.ndim == 2 else np.asarray(
            self.periods
        )
        return np.mod(points, per)

    def point_label(self, flat_index):
        """Human-readable coordinates of a grid point by flat index."""
        idx = np.unravel_index(int(flat_index), self.grid_res)
        coords = [self.axis_coords(m)[i] for m, i in enumerate(idx)]
        return "(" + ", ".join(f"{c:.6g}" for c in coords) + ")"
