"""Batched second-order Taylor (jet) arithmetic.

Every field evaluated on a chart is carried as a :class:`Jet`: the value of a
tensor quantity together with its first and second coordinate partials at a
batch of points.  Propagating jets through the analytic definitions of the
metric and frame fields gives machine-exact derivatives, which the identity
suites need at the 1e-8 residual scale; finite differences are kept only as
test oracles.

Layout convention: every coefficient array has shape

    ``(*component_shape, *derivative_axes, batch)``

i.e. tensor component axes first, then zero, one or two derivative axes of
length ``nvars``, then the point batch last.  With the batch trailing, plain
numpy broadcasting aligns jets of different component shapes correctly.

A jet only trusts as many derivative levels as it carries: taking a formal
partial derivative (:func:`grad`) drops one level.  Arithmetic propagates the
minimum order of its operands, so reading ``.d`` of a quantity that was built
from already-differentiated data raises instead of returning garbage.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "Jet",
    "coordinate_jets",
    "constant_jet",
    "grad",
    "jet_einsum",
    "matinv",
    "matdet",
    "sym2",
]


class Jet:
    """Value/gradient/Hessian coefficients of a tensor field on a point batch.

    Parameters
    ----------
    v : ndarray, shape (*shape, B)
        Component values.
    d : ndarray or None, shape (*shape, n, B)
        First partials; ``d[..., m, :]`` is the d/dx^m coefficient.
    h : ndarray or None, shape (*shape, n, n, B)
        Second partials, symmetric in the two derivative axes.
    """

    __slots__ = ("v", "d", "h")

    def __init__(self, v, d=None, h=None):
        self.v = np.asarray(v, dtype=float)
        self.d = None if d is None else np.asarray(d, dtype=float)
        self.h = None if h is None else np.asarray(h, dtype=float)

    # ----------------------------------------------------------------- basics

    @property
    def order(self):
        if self.h is not None:
            return 2
        if self.d is not None:
            return 1
        return 0

    @property
    def shape(self):
        """Component shape (derivative and batch axes excluded)."""
        return self.v.shape[:-1]

    @property
    def nvars(self):
        if self.d is not None:
            return self.d.shape[-2]
        raise ValueError("order-0 jet has no derivative axes")

    @property
    def batch(self):
        return self.v.shape[-1]

    def require(self, order):
        if self.order < order:
            raise ValueError(
                f"jet carries only {self.order} derivative level(s), need {order}"
            )
        return self

    def truncate(self, order):
        """Forget derivative levels above ``order``."""
        if order >= 2:
            return self
        if order == 1:
            return Jet(self.v, self.d, None)
        return Jet(self.v, None, None)

    def copy(self):
        return Jet(
            self.v.copy(),
            None if self.d is None else self.d.copy(),
            None if self.h is None else self.h.copy(),
        )

    # ------------------------------------------------------------ arithmetic

    def __add__(self, other):
        if isinstance(other, Jet):
            order = min(self.order, other.order)
            return Jet(
                self.v + other.v,
                self.d + other.d if order >= 1 else None,
                self.h + other.h if order >= 2 else None,
            )
        other = np.asarray(other, dtype=float)
        if other.ndim > 0:
            other = other[..., None]  # align component axes before the batch
        return Jet(self.v + other, self.d, self.h)

    __radd__ = __add__

    def __neg__(self):
        return Jet(
            -self.v,
            None if self.d is None else -self.d,
            None if self.h is None else -self.h,
        )

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if other.ndim == 0:
                return Jet(
                    self.v * other,
                    None if self.d is None else self.d * other,
                    None if self.h is None else self.h * other,
                )
            # constant component array: give it a broadcastable batch axis
            other = other[..., None]
            return Jet(
                self.v * other,
                None if self.d is None else self.d * _expand(other, 1),
                None if self.h is None else self.h * _expand(other, 2),
            )
        order = min(self.order, other.order)
        v = self.v * other.v
        d = h = None
        if order >= 1:
            d = self.d * _expand(other.v, 1) + _expand(self.v, 1) * other.d
        if order >= 2:
            cross = self.d[..., :, None, :] * other.d[..., None, :, :]
            h = (
                self.h * _expand(other.v, 2)
                + _expand(self.v, 2) * other.h
                + cross
                + np.swapaxes(cross, -3, -2)
            )
        return Jet(v, d, h)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, exponent):
        return self._chain(
            lambda x: x**exponent,
            lambda x: exponent * x ** (exponent - 1),
            lambda x: exponent * (exponent - 1) * x ** (exponent - 2),
        )

    # --------------------------------------------------- scalar compositions

    def _chain(self, f0, f1, f2):
        """Compose with a scalar function given f, f', f''."""
        v = f0(self.v)
        d = h = None
        if self.order >= 1:
            g1 = f1(self.v)
            d = _expand(g1, 1) * self.d
        if self.order >= 2:
            g2 = f2(self.v)
            h = _expand(g1, 2) * self.h + _expand(g2, 2) * (
                self.d[..., :, None, :] * self.d[..., None, :, :]
            )
        return Jet(v, d, h)

    def reciprocal(self):
        return self._chain(
            lambda x: 1.0 / x, lambda x: -1.0 / x**2, lambda x: 2.0 / x**3
        )

    def sqrt(self):
        return self._chain(
            np.sqrt,
            lambda x: 0.5 / np.sqrt(x),
            lambda x: -0.25 * x ** (-1.5),
        )

    def sin(self):
        return self._chain(np.sin, np.cos, lambda x: -np.sin(x))

    def cos(self):
        return self._chain(np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x))

    def exp(self):
        return self._chain(np.exp, np.exp, np.exp)

    def log(self):
        return self._chain(np.log, lambda x: 1.0 / x, lambda x: -1.0 / x**2)

    def absolute(self):
        """|f| for fields bounded away from zero (sign taken pointwise)."""
        sign = np.sign(self.v)
        return self * sign

    # -------------------------------------------------- component reshuffles

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        # indexing applies to component axes only; pad slices over the
        # derivative/batch tail
        tail = (slice(None),) * (self.v.ndim - len(self.shape))
        return Jet(
            self.v[idx + tail],
            None if self.d is None else self.d[idx + (slice(None),) + tail],
            None
            if self.h is None
            else self.h[idx + (slice(None), slice(None)) + tail],
        )

    def transpose(self, axes):
        """Permute component axes."""
        k = len(self.shape)
        if sorted(axes) != list(range(k)):
            raise ValueError("axes must permute the component axes")

        def perm(arr, extra):
            full = tuple(axes) + tuple(range(k, k + extra + 1))
            return np.transpose(arr, full)

        return Jet(
            perm(self.v, 0),
            None if self.d is None else perm(self.d, 1),
            None if self.h is None else perm(self.h, 2),
        )

    def __repr__(self):
        return f"Jet(shape={self.shape}, order={self.order}, batch={self.batch})"


def _expand(arr, levels):
    """Insert ``levels`` unit axes before the batch axis."""
    idx = (Ellipsis,) + (None,) * levels + (slice(None),)
    return arr[idx]


# ------------------------------------------------------------------ builders


def coordinate_jets(points, order=2):
    """Coordinate functions x^0..x^{n-1} as a jet of shape (n,).

    ``points`` has shape (n, B).
    """
    points = np.asarray(points, dtype=float)
    n, b = points.shape
    v = points
    if order == 0:
        return Jet(v)
    d = np.broadcast_to(np.eye(n)[:, :, None], (n, n, b)).copy()
    if order == 1:
        return Jet(v, d)
    h = np.zeros((n, n, n, b))
    return Jet(v, d, h)


def constant_jet(values, nvars, batch, order=2):
    """Constant (point-independent) field as a jet."""
    values = np.asarray(values, dtype=float)
    v = np.broadcast_to(values[..., None], values.shape + (batch,)).copy()
    if order == 0:
        return Jet(v)
    d = np.zeros(values.shape + (nvars, batch))
    if order == 1:
        return Jet(v, d)
    h = np.zeros(values.shape + (nvars, nvars, batch))
    return Jet(v, d, h)


def grad(a):
    """Formal partial derivative: appends the d/dx index as the LAST component axis.

    The result trusts one derivative level fewer than ``a``.
    """
    a.require(1)
    return Jet(a.d, a.h, None)


# ------------------------------------------------------------------- einsum

_RESERVED = set("XYZ")


def _parse_spec(spec):
    lhs, rhs = spec.split("->")
    sa, sb = lhs.split(",")
    used = set(sa) | set(sb) | set(rhs)
    if used & _RESERVED:
        raise ValueError("einsum spec may not use reserved letters X, Y, Z")
    return sa, sb, rhs


def jet_einsum(spec, a, b):
    """Einsum contraction over component axes with jet product rule.

    ``spec`` addresses component axes only, e.g. ``"cd,dab->cab"``; derivative
    and batch axes ride along automatically.
    """
    sa, sb, rc = _parse_spec(spec)
    order = min(a.order, b.order)
    ein = np.einsum
    v = ein(f"{sa}Z,{sb}Z->{rc}Z", a.v, b.v, optimize=True)
    d = h = None
    if order >= 1:
        d = ein(f"{sa}XZ,{sb}Z->{rc}XZ", a.d, b.v, optimize=True) + ein(
            f"{sa}Z,{sb}XZ->{rc}XZ", a.v, b.d, optimize=True
        )
    if order >= 2:
        cross = ein(f"{sa}XZ,{sb}YZ->{rc}XYZ", a.d, b.d, optimize=True)
        h = (
            ein(f"{sa}XYZ,{sb}Z->{rc}XYZ", a.h, b.v, optimize=True)
            + ein(f"{sa}Z,{sb}XYZ->{rc}XYZ", a.v, b.h, optimize=True)
            + cross
            + np.swapaxes(cross, -3, -2)
        )
    return Jet(v, d, h)


# ------------------------------------------------------------ matrix kernels


def _batch_inv(values):
    """Invert (m, m, B) stacked matrices."""
    return np.moveaxis(np.linalg.inv(np.moveaxis(values, -1, 0)), 0, -1)


def matinv(a):
    """Inverse of a square-matrix jet, component shape (m, m)."""
    if len(a.shape) != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matinv expects component shape (m, m)")
    inv = _batch_inv(a.v)
    d = h = None
    if a.order >= 1:
        # dB = -B dA B
        d = -np.einsum("ikZ,klXZ,ljZ->ijXZ", inv, a.d, inv, optimize=True)
    if a.order >= 2:
        t2 = np.einsum(
            "ikZ,klXZ,lmZ,mpYZ,pjZ->ijXYZ", inv, a.d, inv, a.d, inv, optimize=True
        )
        h = (
            -np.einsum("ikZ,klXYZ,ljZ->ijXYZ", inv, a.h, inv, optimize=True)
            + t2
            + np.swapaxes(t2, -3, -2)
        )
    return Jet(inv, d, h)


def matdet(a):
    """Determinant of a square-matrix jet (scalar jet)."""
    if len(a.shape) != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matdet expects component shape (m, m)")
    det = np.linalg.det(np.moveaxis(a.v, -1, 0))  # (B,)
    d = h = None
    if a.order >= 1:
        inv = _batch_inv(a.v)
        tr1 = np.einsum("jiZ,ijXZ->XZ", inv, a.d, optimize=True)  # tr(A^-1 dA)
        d = det * tr1
    if a.order >= 2:
        # d2(det) = det [ tr(A^-1 dX A) tr(A^-1 dY A)
        #                - tr(A^-1 dY A A^-1 dX A) + tr(A^-1 d2A) ]
        tr2 = tr1[..., :, None, :] * tr1[..., None, :, :]
        trm = np.einsum(
            "ikZ,kjYZ,jlZ,liXZ->XYZ", inv, a.d, inv, a.d, optimize=True
        )
        trh = np.einsum("jiZ,ijXYZ->XYZ", inv, a.h, optimize=True)
        h = det * (tr2 - trm + trh)
    return Jet(det, d, h)


def sym2(a):
    """Symmetrize the two component axes of a (0,2)-tensor jet."""
    return (a + a.transpose((1, 0))) * 0.5
