import numpy as np
import pytest

from dwplab import dwp as W
from dwplab import jets as J
from dwplab import obata as O
from dwplab.flows import get_model


def product(model="hopf-s3", profile="sinh-cosh"):
    return W.build(get_model(model), W.preset(profile))


@pytest.mark.parametrize("model", ["hopf-s3", "heisenberg3", "hopf-s5"])
@pytest.mark.parametrize("profile", ["sinh-cosh", "exp", "cosh", "linear", "custom-poly-exp"])
def test_rho_squared_hessian_structure(model, profile, rng):
    dwp = product(model, profile)
    reps = O.obata_reports(dwp, O.rho_squared(dwp), dwp.random_points(4, rng))
    assert {r.identity_name for r in reps} == {"j_invariance", "eigenvector", "two_eigenvalue", "geodesic", "lambda_vs_u2", "mu_ratio"}
    for r in reps:
        assert r.verdict, r.line()


def test_rho_is_not_an_obata_potential(rng):
    dwp = product()
    reps = {r.identity_name: r for r in O.obata_reports(dwp, O.rho_potential(dwp), dwp.random_points(4, rng), expect_rho_squared=False)}
    assert not reps["j_invariance"].verdict
    assert reps["j_invariance"].residual_max > 1e-2


def test_exponential_case(rng):
    dwp = product("hopf-s3", "exp")
    rep = O.exponential_case_check(dwp, dwp.random_points(6, rng))
    assert rep.passed(1e-8), rep
    assert rep.kernel_dim == 2


def test_flat_product_linear_potential(rng):
    dwp = product("flat-product", "const")
    for P in dwp.random_points(3, rng):
        hs = O.hessian_spectrum(dwp, O.t_potential(), P)
        assert abs(hs.lam) < 1e-14 and abs(hs.mu) < 1e-14
        assert hs.grad_norm == pytest.approx(1.0)


def test_critical_point_is_reported():
    dwp = product("flat-product", "const")
    flat = O.PotentialField(lambda X: 1.0 + 0.0 * X[0], "const")
    with pytest.raises(O.CriticalPointError):
        O.hessian_spectrum(dwp, flat, [0.1, 0.2, 0.3, 0.4])


def flow_lie_derivative(dwp, u, P, h=1e-3):
    """``d/ds (D phi_s)^{-1} J(phi_s P) D phi_s`` at ``s = 0`` by central differences."""
    d = dwp.dim
    fs = O.integrate_flow(dwp, u, P, (-2 * h, 2 * h), np.eye(d), rtol=1e-13, atol=1e-14)

    def pulled(s):
        X, V = fs.state(s)
        Jm = np.asarray(J.value(dwp.complex_structure(X)))
        return np.linalg.solve(V, Jm @ V)

    return (pulled(-2 * h) - 8 * pulled(-h) + 8 * pulled(h) - pulled(2 * h)) / (12 * h)


@pytest.mark.parametrize("model, profile, shear", [("hopf-s3", "sinh-cosh", None), ("heisenberg3", "exp", None), ("hopf-s3", "cosh", (0.1, 0.05, 0.1))])
def test_lie_derivative_against_flow_differences(model, profile, shear, rng):
    dwp = product(model, profile)
    target = O.sheared(dwp, shear) if shear else dwp
    u = O.rho_squared(target)
    for P in dwp.random_points(2, rng):
        Y = target.chart_point(P) if shear else P
        L = O.lie_derivative_J(target, u, Y)
        L_fd = flow_lie_derivative(target, u, Y)
        np.testing.assert_allclose(L, L_fd, atol=1e-7 * max(1.0, np.max(np.abs(L))))


@pytest.mark.parametrize("model", ["hopf-s3", "hopf-s5"])
def test_level_set_oneill_tensor(model, rng):
    dwp = product(model, "sinh-cosh")
    u = O.rho_squared(dwp)
    for P in dwp.random_points(3, rng):
        chk = O.oneill_from_mu(dwp, u, P)
        assert chk.oneill_residual < 1e-9 * max(1.0, chk.oneill_norm)
        assert chk.lie_residual < 1e-9
        assert chk.lie_transverse < 1e-9


def test_level_seed_and_empty_level():
    dwp = product()
    u = O.rho_squared(dwp)
    x = dwp.base.sample(1, np.random.default_rng(0))[0]
    P = O.level_seed(dwp, u, 1.0, x)
    assert u.value(P) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(O.LevelSetEmpty):
        O.level_seed(dwp, u, 1e6, x)


@pytest.mark.parametrize("shear", [None, (0.1, 0.05, 0.1)])
def test_flow_reconstruction(shear):
    dwp = product()
    target = O.sheared(dwp, shear) if shear else dwp
    rec = O.flow_reconstruct(target, O.rho_squared(target), float(np.sinh(1.0) ** 2), n_seeds=2, n_samples=5)
    for r in rec.reports():
        assert r.verdict, r.line()
    assert len(rec.rows()) == 5 and len(rec.rows()[0]) == len(rec.HEADER)


def test_shear_requires_one_coefficient_per_base_coordinate():
    with pytest.raises(ValueError):
        O.sheared(product(), (0.1,))


def test_sheared_chart_round_trip(rng):
    sp = O.sheared(product(), (0.1, -0.2, 0.3))
    P = product().random_points(1, rng)[0]
    np.testing.assert_allclose(J.value(sp.product_point(sp.chart_point(P))), P, atol=1e-15)


def test_sheared_chart_accepts_every_product_point(rng):
    dwp = product()
    sp = O.sheared(dwp, (0.3, 0.2, -0.4))
    for P in dwp.random_points(50, rng):
        assert sp.ambient_chart.contains(sp.chart_point(P))
    outside = np.array([1.0, 1.0, 1.0, 1.0])
    outside[1] = np.pi / 2 - 0.3 * 1.0 + 0.01  # product theta just past pi/2
    assert not sp.ambient_chart.contains(outside)
