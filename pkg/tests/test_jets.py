import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dwplab import jets as J


def fd_grad_hess(fun, p, h=1e-4):
    p = np.asarray(p, dtype=float)
    d = p.size
    E = np.eye(d)
    g = np.array([(fun(p + h * E[i]) - fun(p - h * E[i])) / (2 * h) for i in range(d)])
    H = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            H[i, j] = (
                fun(p + h * (E[i] + E[j])) - fun(p + h * (E[i] - E[j])) - fun(p - h * (E[i] - E[j])) + fun(p - h * (E[i] + E[j]))
            ) / (4 * h * h)
    return g, H


def expression(x, np_mode=False):
    sin, exp, sqrt, cosh = (np.sin, np.exp, np.sqrt, np.cosh) if np_mode else (J.sin, J.exp, J.sqrt, J.cosh)
    return sin(x[0]) * exp(x[1]) + x[0] ** 3 / x[1] + sqrt(1.0 + x[0] ** 2) * cosh(x[1] - x[0])


coords = st.floats(0.2, 1.5)


@given(coords, st.floats(0.5, 1.5))
def test_jet_matches_finite_differences(a, b):
    f = expression(J.variables([a, b], 2))
    g, H = fd_grad_hess(lambda q: expression(q, True), [a, b])
    scale = max(1.0, abs(float(f.v)))
    assert abs(float(f.v) - expression(np.array([a, b]), True)) < 1e-12 * scale
    np.testing.assert_allclose(f.g, g, atol=1e-7 * scale)
    np.testing.assert_allclose(f.h, H, atol=1e-5 * max(scale, np.max(np.abs(H))))


def test_hessian_is_symmetric():
    f = expression(J.variables([0.4, 0.9], 2))
    np.testing.assert_allclose(f.h, f.h.T, atol=1e-14)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_elementary_identities(a, b):
    x = J.variables([a, b], 2)
    one = J.sin(x[0]) ** 2 + J.cos(x[0]) ** 2
    assert abs(float(one.v) - 1) < 1e-14
    assert np.max(np.abs(one.g)) < 1e-13 and np.max(np.abs(one.h)) < 1e-12
    hyp = J.cosh(x[1]) ** 2 - J.sinh(x[1]) ** 2
    assert np.max(np.abs(hyp.g)) < 1e-10 * np.cosh(b) ** 2


def test_log_exp_round_trip():
    x = J.variables([0.3, -0.2], 2)
    y = J.log(J.exp(x[0] + 2 * x[1]))
    np.testing.assert_allclose(y.g, [1.0, 2.0], atol=1e-14)
    np.testing.assert_allclose(y.h, 0.0, atol=1e-14)


def test_matrix_inverse_jet():
    x = J.variables([0.3, 0.5], 2)
    M = J.stack([J.concatenate([2.0 + x[0] + 0.0 * x[1], x[0] * x[1]]), J.concatenate([x[0] * x[1], 3.0 + J.sin(x[1])])])
    Minv = J.inv(M)
    prod = J.einsum("ij,jk->ik", M, Minv)
    np.testing.assert_allclose(prod.v, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(prod.g, 0.0, atol=1e-13)
    np.testing.assert_allclose(prod.h, 0.0, atol=1e-12)


def test_D_lowers_order():
    x = J.variables([0.3, 0.5], 2)
    f = x[0] ** 2 * x[1]
    df = J.D(f)
    assert J.order(df) == 1
    np.testing.assert_allclose(df.v, [2 * 0.3 * 0.5, 0.3**2])
    np.testing.assert_allclose(df.g, [[2 * 0.5, 2 * 0.3], [2 * 0.3, 0.0]])


def test_truncate_drops_hessian():
    f = J.exp(J.variables([0.1], 2)[0])
    assert f.truncate(1).order == 1
    assert f.truncate(0).order == 0
    with pytest.raises(Exception):
        f.truncate(1).h[0, 0] + 0
