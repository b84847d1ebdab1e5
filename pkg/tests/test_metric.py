import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dwplab import jets as J
from dwplab.flows import get_model
from dwplab.metric import (
    Chart,
    ChartDomainError,
    PointGeometry,
    christoffel,
    coordinate_field,
    covariant_derivative,
    gradient_hessian,
    lie_bracket,
    riemann_ricci,
)


def euclid(dim=3):
    return Chart(dim, tuple((-5.0, 5.0) for _ in range(dim)), lambda x: J.array(np.eye(dim)) + 0.0 * x[0], "euclid")


def polar():
    def metric(x):
        r = x[0]
        return J.stack([J.concatenate([1.0 + 0.0 * r, 0.0 * r]), J.concatenate([0.0 * r, r * r])])

    return Chart(2, ((0.1, 5.0), (-3.0, 3.0)), metric, "polar")


def test_euclidean_has_no_christoffels():
    con = christoffel(euclid(), [0.1, 0.2, 0.3])
    assert np.max(np.abs(con.gamma)) == 0.0
    cur = riemann_ricci(euclid(), [0.1, 0.2, 0.3])
    assert np.max(np.abs(cur.riemann)) == 0.0


def test_constant_fields_are_parallel_on_euclidean_space():
    v = covariant_derivative(euclid(), [0.3, -0.1, 1.0], coordinate_field(0, 3), coordinate_field(2, 3))
    assert np.max(np.abs(v)) == 0.0


def test_linear_function_has_zero_hessian():
    _, H = gradient_hessian(euclid(), [0.3, 0.2, 0.1], lambda x: 2 * x[0] - x[1] + 0.5 * x[2])
    assert np.max(np.abs(H)) == 0.0


def test_polar_christoffels():
    r = 1.7
    g = christoffel(polar(), [r, 0.4]).gamma
    assert g[0, 1, 1] == pytest.approx(-r)
    assert g[1, 0, 1] == pytest.approx(1 / r)
    assert g[1, 1, 0] == pytest.approx(1 / r)
    assert riemann_ricci(polar(), [r, 0.4]).scalar == pytest.approx(0.0, abs=1e-13)


@pytest.mark.parametrize("model, dim", [("hopf-s3", 3), ("hopf-s5", 5)])
def test_round_sphere_is_einstein(model, dim, rng):
    flow = get_model(model)
    for p in flow.sample(5, rng):
        cur = riemann_ricci(flow.chart, p)
        G = flow.chart.metric_value(p)
        np.testing.assert_allclose(cur.ricci02, (dim - 1) * G, atol=1e-10)
        assert cur.scalar == pytest.approx(dim * (dim - 1), rel=1e-12)
        assert cur.antisymmetry_residual() < 1e-12
        assert cur.bianchi_residual() < 1e-12


def test_jet_and_finite_difference_connection_agree(rng):
    chart = get_model("hopf-s5").chart
    for p in chart.sample(3, rng):
        a = PointGeometry(chart, p, "jet")
        b = PointGeometry(chart, p, "fd")
        np.testing.assert_allclose(a.gamma.v, b.gamma.v, atol=1e-7)
        assert a.compatibility_residual() < 1e-12


@given(st.floats(0.2, 1.3), st.floats(0.1, 6.0), st.floats(0.1, 6.0))
def test_bracket_of_coordinate_fields_vanishes(a, b, c):
    chart = get_model("hopf-s3").chart
    assert np.max(np.abs(lie_bracket(chart, [a, b, c], coordinate_field(0, 3), coordinate_field(1, 3)))) == 0.0


def test_out_of_chart_point_is_rejected():
    with pytest.raises(ChartDomainError):
        PointGeometry(polar(), [-1.0, 0.0])
