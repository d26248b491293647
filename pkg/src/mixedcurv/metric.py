"""Metric fields on periodic charts.

Adapted metrics are assembled block-diagonally in the coframe dual to the
splitting's seed frame: g = sum_i G_i[a,b] theta^a (x) theta^b with each G_i a
symmetric nondegenerate coefficient matrix over block i.  This makes the
distributions pairwise g-orthogonal for every admissible coefficient choice,
so adaptedness is structural rather than enforced by constraints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jet, coordinate_jets, jet_einsum, matdet, matinv

__all__ = [
    "DegenerateMetricError",
    "MetricField",
    "block_coefficient_metric",
    "metric_jet",
]

DEGENERATE_TOL = 1e-10


class DegenerateMetricError(RuntimeError):
    """|det g| fell below tolerance at some sample: inadmissible metric."""


@dataclass
class MetricField:
    """Evaluator mapping point batches to metric jets.

    ``builder(points) -> Jet`` of component shape (n, n), order 2.  The
    signature index (number of negative eigenvalues) must be constant over
    the chart; the Riemannian default is 0.
    """

    chart: object
    builder: object
    signature_index: int = 0

    def jet(self, points, check=True):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[0] != self.chart.n:
            points = points.T
        g = self.builder(points)
        if check:
            self._check_degeneracy(g, points)
        return g

    def _check_degeneracy(self, g, points):
        det = matdet(g.truncate(0)).v
        diag = np.abs(np.einsum("iiZ->iZ", g.v)).prod(axis=0)
        bad = np.abs(det) < DEGENERATE_TOL * np.maximum(diag, 1e-300)
        if np.any(bad):
            j = int(np.argmax(bad))
            coords = ", ".join(f"{c:.6g}" for c in points[:, j])
            raise DegenerateMetricError(
                f"metric degenerate at point ({coords}): det g = {det[j]:.3e}"
            )

    def volume_element(self, points):
        """sqrt|det g| as a jet (order 1), for quadrature and Lie oracles."""
        g = self.jet(points)
        det = matdet(g)
        return (det * np.sign(det.v)).sqrt().truncate(1)


def metric_jet(point, g: MetricField):
    """Metric jet at a single point (spec op): returns the (n, n) jet."""
    pts = np.asarray(point, dtype=float).reshape(-1, 1)
    return g.jet(pts)


def block_coefficient_metric(chart, split, coeff_fn, signature_index=0):
    """Metric from blockwise coefficient matrices in the seed coframe.

    ``coeff_fn(x) -> list of Jets``: for each block i a jet of component
    shape (n_i, n_i), symmetric, evaluated on the coordinate jet ``x``.
    """
    n = split.n
    blocks = split.blocks

    def builder(points):
        x = coordinate_jets(points)
        seeds = split.seeds(points)
        frame_mat = seeds.transpose((1, 0))  # columns are the seed vectors
        coframe = matinv(frame_mat)  # rows theta^a
        mats = coeff_fn(x)
        b = x.batch
        gv = np.zeros((n, n, b))
        gd = np.zeros((n, n, n, b))
        gh = np.zeros((n, n, n, n, b))
        full = Jet(gv, gd, gh)
        for i, idx in enumerate(blocks):
            gi = mats[i]
            th = coframe[idx]  # (n_i, n)
            contrib = jet_einsum(
                "am,bn->abmn", th, th
            )  # theta^a_m theta^b_n
            full = full + jet_einsum("ab,abmn->mn", gi, contrib)
        return full

    return MetricField(chart=chart, builder=builder, signature_index=signature_index)
