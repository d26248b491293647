"""Distribution splittings and per-point orthonormal adapted frames.

A splitting is k blocks of smooth seed vector fields spanning D_1..D_k.  The
adapted frame is produced by blockwise two-pass modified Gram-Schmidt carried
out in jet arithmetic, so frame derivatives are available downstream.  Cross
block orthogonality is not enforced here: it is structural for metrics built
block-diagonally in the seed coframe (see :mod:`mixedcurv.metric`), which is
how every admissible scenario is constructed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expressions import compile_expression
from .jets import Jet, coordinate_jets, jet_einsum

__all__ = [
    "DegenerateBlockError",
    "SplittingFrame",
    "AdaptedFrame",
    "orthonormalize",
    "project",
]

PIVOT_TOL = 1e-10


class DegenerateBlockError(RuntimeError):
    """A Gram-Schmidt pivot collapsed: null or degenerate direction."""


@dataclass(frozen=True)
class SplittingFrame:
    """k blocks of seed vector fields spanning the distributions.

    ``seeds(points)`` returns a jet of component shape (n, n): axis 0 indexes
    the seed vector, axis 1 its coordinate components.  ``dims`` gives the
    block sizes (n_1, ..., n_k) in seed order.
    """

    dims: tuple
    seeds: object  # callable points -> Jet

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if len(self.dims) < 2:
            raise ValueError("need k >= 2 blocks")
        if any(d < 1 for d in self.dims):
            raise ValueError("block dimensions must be positive")

    @property
    def n(self):
        return sum(self.dims)

    @property
    def k(self):
        return len(self.dims)

    @property
    def blocks(self):
        """Index lists per block, in frame order."""
        out = []
        start = 0
        for d in self.dims:
            out.append(list(range(start, start + d)))
            start += d
        return out

    def block_of(self, a):
        for i, idx in enumerate(self.blocks):
            if a in idx:
                return i
        raise IndexError(a)

    # ------------------------------------------------------------- builders

    @staticmethod
    def coordinate(dims):
        """Coordinate-plane splitting: seed a = d/dx^a."""
        n = int(sum(dims))

        def seeds(points):
            b = np.asarray(points).shape[1]
            v = np.broadcast_to(np.eye(n)[:, :, None], (n, n, b)).copy()
            d = np.zeros((n, n, n, b))
            h = np.zeros((n, n, n, n, b))
            return Jet(v, d, h)

        return SplittingFrame(tuple(dims), seeds)

    @staticmethod
    def from_expressions(dims, rows):
        """Seeds from component expression strings, one row per seed vector."""
        n = int(sum(dims))
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError("need an n x n table of component expressions")
        compiled = [[compile_expression(e, n) for e in row] for row in rows]

        def seeds(points):
            x = coordinate_jets(np.asarray(points, dtype=float))
            b = x.batch
            comps = []
            for row in compiled:
                entries = []
                for fn in row:
                    val = fn(x)
                    if not isinstance(val, Jet):
                        val = Jet(
                            np.full((b,), float(val)),
                            np.zeros((n, b)),
                            np.zeros((n, n, b)),
                        )
                    entries.append(val)
                comps.append(entries)
            v = np.stack([np.stack([e.v for e in row]) for row in comps])
            d = np.stack([np.stack([e.d for e in row]) for row in comps])
            h = np.stack([np.stack([e.h for e in row]) for row in comps])
            return Jet(v, d, h)

        return SplittingFrame(tuple(dims), seeds)


@dataclass
class AdaptedFrame:
    """Per-point orthonormal frame adapted to the splitting.

    ``vectors`` is a jet of shape (n, n): vectors[a] = E_a coordinate
    components.  ``signs[a]`` = <E_a, E_a> in {-1, +1}.  ``covectors`` holds
    the metric duals (E_a)_flat.
    """

    split: SplittingFrame
    g: Jet
    vectors: Jet
    signs: np.ndarray
    covectors: Jet = None

    def __post_init__(self):
        if self.covectors is None:
            self.covectors = jet_einsum("am,mn->an", self.vectors, self.g)

    @property
    def blocks(self):
        return self.split.blocks

    def block_of(self, a):
        return self.split.block_of(a)

    def weighted_covectors(self, indices):
        """eps_a-weighted covector rows for the given frame indices."""
        sub = self.covectors[list(indices)]
        return sub * self.signs[list(indices)][:, None]

    def projector(self, i, complement=False):
        """Orthoprojector P_i (or id - P_i) as a (1,1) jet P[mu, nu]."""
        idx = self.blocks[i]
        e = self.vectors[idx]
        ef = self.weighted_covectors(idx)
        p = jet_einsum("am,an->mn", e, ef)
        if complement:
            b = p.v.shape[-1]
            n = self.split.n
            eye = np.broadcast_to(np.eye(n)[:, :, None], (n, n, b))
            return Jet(eye - p.v, -p.d, -p.h)
        return p

    def gram(self):
        """<E_a, E_b> values, shape (n, n, B)."""
        return jet_einsum("am,bm->ab", self.vectors, self.covectors).v


def _inner(g, u, w):
    """<u, w> for vector jets of shape (n,) -> scalar jet."""
    return jet_einsum("m,m->", u, jet_einsum("mn,n->m", g, w))


def orthonormalize(g, split, points=None, seeds=None):
    """Blockwise two-pass modified Gram-Schmidt in jet arithmetic.

    Parameters
    ----------
    g : metric jet of shape (n, n) at the batch, order 2
    split : SplittingFrame
    points : batch of points (used when ``seeds`` not given)
    seeds : optional precomputed seed jet (n, n)

    Returns the :class:`AdaptedFrame`; raises :class:`DegenerateBlockError`
    when a pivot norm falls under ``PIVOT_TOL`` or a sign flips across the
    batch (collapsing or null direction).
    """
    if seeds is None:
        seeds = split.seeds(points)
    n = split.n
    vecs = [seeds[a] for a in range(n)]
    out = [None] * n
    signs = np.zeros(n)

    for block in split.blocks:
        done = []
        for a in block:
            v = vecs[a]
            for _ in range(2):  # two passes for numerical stability
                for s_b, u_b in done:
                    coeff = _inner(g, v, u_b) * s_b
                    v = v - jet_einsum(",m->m", coeff, u_b)
            nrm2 = _inner(g, v, v)
            scale = np.max(np.abs(nrm2.v))
            if np.min(np.abs(nrm2.v)) < PIVOT_TOL * max(scale, 1.0):
                raise DegenerateBlockError(
                    f"Gram-Schmidt pivot collapsed for seed {a}"
                )
            sgn = np.sign(nrm2.v)
            if not (np.all(sgn > 0) or np.all(sgn < 0)):
                raise DegenerateBlockError(
                    f"metric sign of seed {a} varies over the chart"
                )
            s = float(sgn.flat[0])
            u = v * (nrm2 * s).sqrt().reciprocal()
            out[a] = u
            signs[a] = s
            done.append((s, u))

    vectors = Jet(
        np.stack([u.v for u in out]),
        np.stack([u.d for u in out]) if out[0].d is not None else None,
        np.stack([u.h for u in out]) if out[0].h is not None else None,
    )
    return AdaptedFrame(split=split, g=g, vectors=vectors, signs=signs)


def project(frame, i, x, complement=False):
    """P_i X (or its complement) for a vector jet or plain components."""
    was_jet = isinstance(x, Jet)
    xj = x if was_jet else Jet(np.asarray(x, dtype=float))
    p = frame.projector(i, complement=complement).truncate(xj.order)
    res = jet_einsum("mn,n->m", p, xj)
    return res if was_jet else res.v
