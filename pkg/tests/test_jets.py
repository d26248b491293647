"""Jet arithmetic against closed forms and central finite differences."""

import numpy as np
import numpy.testing as npt
import pytest

from mixedcurv.jets import (
    Jet,
    constant_jet,
    coordinate_jets,
    grad,
    jet_einsum,
    matdet,
    matinv,
    sym2,
)

RNG = np.random.default_rng(20240811)


def scalar_field(x):
    """Smooth scalar built from the coordinate jets (any dimension >= 2)."""
    return (x[0].sin() * (2.0 + x[1]).log() + (0.3 * x[0] * x[1]).exp()) / (
        2.5 + x[1].cos()
    )


def fd_grad(f, pts, h=1e-5):
    n, b = pts.shape
    out = np.zeros((n, b))
    for m in range(n):
        dp = np.zeros_like(pts)
        dp[m] = h
        out[m] = (f(pts + dp) - f(pts - dp)) / (2 * h)
    return out


def fd_hess(f, pts, h=1e-4):
    n, b = pts.shape
    out = np.zeros((n, n, b))
    f0 = f(pts)
    for m in range(n):
        for l in range(n):
            dm = np.zeros_like(pts)
            dl = np.zeros_like(pts)
            dm[m] = h
            dl[l] = h
            if m == l:
                out[m, l] = (f(pts + dm) - 2 * f0 + f(pts - dm)) / h**2
            else:
                out[m, l] = (
                    f(pts + dm + dl)
                    - f(pts + dm - dl)
                    - f(pts - dm + dl)
                    + f(pts - dm - dl)
                ) / (4 * h**2)
    return out


def eval_value(pts):
    return scalar_field(coordinate_jets(pts, order=0)).v


# ---------------------------------------------------------------------------
# derivative propagation
# ---------------------------------------------------------------------------


def test_scalar_field_matches_finite_differences():
    pts = RNG.uniform(0.2, 2.0, size=(2, 7))
    jet = scalar_field(coordinate_jets(pts))
    npt.assert_allclose(jet.d, fd_grad(eval_value, pts), rtol=0, atol=1e-8)
    npt.assert_allclose(jet.h, fd_hess(eval_value, pts), rtol=0, atol=1e-5)


def test_hessian_symmetric():
    pts = RNG.uniform(0.1, 1.5, size=(3, 11))
    x = coordinate_jets(pts)
    jet = (x[0] * x[1]).exp() * x[2].sin() + (x[0] ** 3) * x[2]
    npt.assert_allclose(jet.h, np.swapaxes(jet.h, 0, 1), atol=1e-13)


@pytest.mark.parametrize("op", ["add", "mul", "div", "pow"])
def test_binary_ops_match_fd(op):
    pts = RNG.uniform(0.3, 1.2, size=(2, 5))

    def build(x):
        a = x[0].sin() + 1.7
        b = (0.5 * x[1]).exp()
        if op == "add":
            return a + b
        if op == "mul":
            return a * b
        if op == "div":
            return a / b
        return a**3

    jet = build(coordinate_jets(pts))
    val = lambda p: build(coordinate_jets(p, order=0)).v
    npt.assert_allclose(jet.d, fd_grad(val, pts), atol=1e-8)
    npt.assert_allclose(jet.h, fd_hess(val, pts), atol=1e-5)


def test_formal_grad_shifts_coefficients():
    pts = RNG.uniform(0.0, 1.0, size=(2, 4))
    x = coordinate_jets(pts)
    f = x[0].sin() * x[1]
    g = grad(f)
    assert g.order == 1
    npt.assert_allclose(g.v, f.d, atol=0)
    npt.assert_allclose(g.d, f.h, atol=0)
    with pytest.raises(ValueError):
        grad(grad(g))  # order exhausted


def test_order_propagates_through_products():
    pts = RNG.uniform(0.0, 1.0, size=(2, 3))
    x = coordinate_jets(pts)
    f = x[0].exp()
    assert (f * grad(f)).order == 1
    assert (f * f).order == 2


# ---------------------------------------------------------------------------
# einsum product rule
# ---------------------------------------------------------------------------


def test_jet_einsum_matrix_product():
    pts = RNG.uniform(0.2, 1.0, size=(2, 6))

    def mats(x):
        a = Jet(
            np.stack(
                [
                    np.stack([(x[0].sin() + 2.0).v, (x[0] * x[1]).v]),
                    np.stack([(x[1] ** 2).v, (x[0].cos() + 3.0).v]),
                ]
            )
        )
        return a

    # build with full jets via stacking of components
    x = coordinate_jets(pts)
    comps = [[x[0].sin() + 2.0, x[0] * x[1]], [x[1] ** 2, x[0].cos() + 3.0]]
    a = _stack_matrix(comps)
    b = _stack_matrix([[x[1].exp(), x[0] * 0.0], [x[0], 1.0 + 0.0 * x[0]]])
    c = jet_einsum("ij,jk->ik", a, b)

    def val(p):
        y = coordinate_jets(p, order=0)
        av = np.stack(
            [
                np.stack([(y[0].sin() + 2.0).v, (y[0] * y[1]).v]),
                np.stack([(y[1] ** 2).v, (y[0].cos() + 3.0).v]),
            ]
        )
        bv = np.stack(
            [
                np.stack([y[1].exp().v, 0.0 * y[0].v]),
                np.stack([y[0].v, 1.0 + 0.0 * y[0].v]),
            ]
        )
        return np.einsum("ijZ,jkZ->ikZ", av, bv)

    npt.assert_allclose(c.v, val(pts), atol=1e-13)
    for m in range(2):
        dp = np.zeros_like(pts)
        dp[m] = 1e-5
        fd = (val(pts + dp) - val(pts - dp)) / 2e-5
        npt.assert_allclose(c.d[:, :, m, :], fd, atol=1e-8)


def _stack_matrix(rows):
    vs = np.stack([np.stack([e.v for e in row]) for row in rows])
    ds = np.stack([np.stack([e.d for e in row]) for row in rows])
    hs = np.stack([np.stack([e.h for e in row]) for row in rows])
    return Jet(vs, ds, hs)


# ---------------------------------------------------------------------------
# matrix inverse / determinant
# ---------------------------------------------------------------------------


def _random_spd_jet(pts):
    x = coordinate_jets(pts)
    a11 = 2.0 + x[0].sin() * 0.5
    a22 = 3.0 + x[1].cos() * 0.5
    a12 = 0.4 * (x[0] * x[1]).sin()
    return _stack_matrix([[a11, a12], [a12, a22]])


def test_matinv_identity_and_derivatives():
    pts = RNG.uniform(0.1, 2.0, size=(2, 5))
    a = _random_spd_jet(pts)
    ainv = matinv(a)
    prod = jet_einsum("ij,jk->ik", a, ainv)
    eye = np.broadcast_to(np.eye(2)[:, :, None], prod.v.shape)
    npt.assert_allclose(prod.v, eye, atol=1e-12)
    # derivative of A A^-1 = I must vanish identically
    npt.assert_allclose(prod.d, 0.0, atol=1e-11)
    npt.assert_allclose(prod.h, 0.0, atol=1e-10)


def test_matdet_matches_closed_form():
    pts = RNG.uniform(0.1, 2.0, size=(2, 5))
    a = _random_spd_jet(pts)
    det = matdet(a)
    direct = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    npt.assert_allclose(det.v, direct.v, atol=1e-12)
    npt.assert_allclose(det.d, direct.d, atol=1e-11)
    npt.assert_allclose(det.h, direct.h, atol=1e-10)


def test_constant_jet_and_sym():
    c = constant_jet(np.array([[1.0, 2.0], [0.0, 1.0]]), nvars=2, batch=3)
    assert c.order == 2
    npt.assert_allclose(c.d, 0.0)
    s = sym2(c)
    npt.assert_allclose(s.v[0, 1], s.v[1, 0])
