import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from dwplab import ode
from dwplab.ode import ClosedForm, EndpointKind, OdeParams, RegimeKind

params = st.builds(
    OdeParams,
    n=st.sampled_from([2, 3, 4]),
    eps=st.sampled_from([-1, 0, 1]),
    c=st.floats(-4.0, 4.0),
    D=st.one_of(st.just(0.0), st.floats(-1.0, 1.0)),
    rho0=st.floats(0.2, 3.0),
)


def test_parameter_validation():
    with pytest.raises(ValueError):
        OdeParams(1, -1, 0.0, 0.0)
    with pytest.raises(ValueError):
        OdeParams(2, 2, 0.0, 0.0)
    with pytest.raises(ValueError):
        OdeParams(2, -1, 0.0, 0.0, rho0=0.0)
    assert OdeParams(2, -1, 0.0, 0.0).C == -6.0


@given(params)
def test_roots_match_bisection_oracle(p):
    roots = ode.find_roots(p)
    simple = sorted(r.x for r in roots if not r.double)
    oracle = ode.bisection_roots(p)
    assume(all(1e-5 < r < 1e5 for r in simple + oracle))
    assert len(simple) == len(oracle)
    for a, b in zip(simple, oracle):
        assert abs(a - b) < 1e-8 * max(1.0, b)


@given(params)
def test_decision_tree_agrees_with_classify(p):
    kind, tag = ode.decision_tree(p)
    assume(kind is not None)
    try:
        reg = ode.classify(p)
    except ode.InfeasibleInitialCondition:
        assume(False)
    assert reg.kind is kind
    assert reg.closed_form is tag
    assert reg.source == "decision_tree"


@pytest.mark.parametrize(
    "eps, c, tag",
    [(-1, -0.5, ClosedForm.COSH), (-1, 0.0, ClosedForm.EXP), (-1, 2.0, ClosedForm.SINH), (0, 2.0, ClosedForm.LINEAR), (1, 4.0, ClosedForm.SIN)],
)
@pytest.mark.parametrize("n", [2, 3])
def test_closed_forms_solve_the_ode(n, eps, c, tag):
    p = OdeParams(n, eps, c, 0.0, 0.5 if eps == 1 else 1.0)
    assume_feasible = p.f(p.rho0) > 0
    if not assume_feasible:
        pytest.skip("rho0 not in the admissible range")
    assert ode.closed_form_tag(p) is tag
    lo, hi = ode.closed_form_interval(p)
    ts = np.linspace(max(lo, -3) + 1e-3, min(hi, 3) - 1e-3, 50)
    for t in ts:
        r, r1, _, _ = ode.closed_form_derivatives(p, t)
        assert r1 > 0
        assert r1 * r1 == pytest.approx(float(p.f(r)), rel=1e-10, abs=1e-12)
    assert ode.third_order_check(p, ts) < 1e-12


def test_exp_is_global():
    reg = ode.classify(OdeParams(2, -1, 0.0, 0.0, 1.0))
    assert reg.kind is RegimeKind.GLOBAL_ON_R
    assert reg.closed_form is ClosedForm.EXP


def test_sin_interval_has_two_roots():
    p = OdeParams(2, 1, 4.0, 0.0, 0.5)
    reg = ode.classify(p)
    assert reg.kind is RegimeKind.MAXIMAL_INTERVAL
    assert reg.left.kind is EndpointKind.FINITE_TIME_ROOT and reg.left.rho_limit == 0.0
    assert reg.right.kind is EndpointKind.FINITE_TIME_ROOT
    assert reg.right.rho_limit == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert reg.interval[1] - reg.interval[0] == pytest.approx(math.pi / 2, abs=1e-12)


@given(st.sampled_from([2, 3]), st.floats(-4.0, 4.0), st.floats(0.2, 2.0), st.sampled_from([-1, 0, 1]))
def test_travel_time_matches_closed_interval(n, c, rho0, eps):
    p = OdeParams(n, eps, c, 0.0, rho0)
    # |c| -> 0 makes the quadrature log-divergent in floating point
    assume(ode.closed_form_tag(p) is not ClosedForm.NONE and p.f(rho0) > 1e-6 and (c == 0 or abs(c) > 1e-3))
    reg = ode.classify(p)
    lo, hi = ode.closed_form_interval(p)
    a, b = ode._component(p, ode.find_roots(p))
    if math.isfinite(lo):
        lo_root = a is not None
        t = ode.travel_time(p, a.x if lo_root else 0.0, rho0, lo_root=lo_root)
        assert -t == pytest.approx(lo, abs=1e-8)
    if math.isfinite(hi):
        assert ode.travel_time(p, rho0, b.x, hi_root=True) == pytest.approx(hi, abs=1e-8)
    assert reg.interval == (lo, hi)


def test_special_global_configuration():
    n, D = 2, 0.2
    c = -(n + 1) * (n * D) ** (1.0 / (n + 1))
    xc = (n * D) ** (1.0 / (2 * n + 2))
    above = OdeParams(n, -1, c, D, 1.5 * xc)
    below = OdeParams(n, -1, c, D, 0.6 * xc)
    assert ode.is_special_global(above) and not ode.is_special_global(below)
    reg = ode.classify(above)
    assert reg.kind is RegimeKind.GLOBAL_ON_R
    assert reg.double_roots and reg.double_roots[0] == pytest.approx(xc, rel=1e-10)
    low = ode.classify(below)
    assert low.left.kind is EndpointKind.BLOWUP
    assert low.right.kind is EndpointKind.INFINITE_TIME


def test_blowup_for_positive_D():
    reg = ode.classify(OdeParams(2, -1, 2.0, 0.2, 1.0))
    assert reg.left.kind is EndpointKind.BLOWUP
    assert reg.left.rho_limit == 0.0 and math.isfinite(reg.left.t)
    assert reg.source == "inferred"


def test_no_solution_and_infeasible():
    p = OdeParams(2, 1, -1.0, 0.0, 1.0)
    assert ode.classify(p).kind is RegimeKind.NO_SOLUTION
    with pytest.raises(ode.NoSolution):
        ode.integrate(p)
    with pytest.raises(ode.InfeasibleInitialCondition):
        ode.classify(OdeParams(2, 1, 2.0, 0.0, 1.0))
    with pytest.raises(ode.InfeasibleInitialCondition):
        ode.integrate(OdeParams(2, 1, 2.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        ode.closed_form_eval(OdeParams(2, -1, 2.0, 0.0, 1.0), [-10.0])


@pytest.mark.parametrize("p", [OdeParams(2, -1, 2.0, 0.0, 1.0), OdeParams(3, 1, 4.0, 0.0, 1.0), OdeParams(2, -1, -0.5, 0.0, 1.0)])
def test_integrator_matches_closed_form(p):
    cmp = ode.closed_form_comparison(p)
    assert cmp.sup_error < 1e-6
    for dt in (cmp.left_dt, cmp.right_dt):
        assert math.isnan(dt) or dt < 1e-6


@pytest.mark.parametrize(
    "p", [OdeParams(2, -1, 2.0, 0.2, 1.0), OdeParams(3, 1, 4.0, -0.1, 1.0), OdeParams(2, 0, 1.0, 0.5, 0.8), OdeParams(3, -1, -2.0, 1.0, 1.0)]
)
def test_trajectory_invariants(p):
    tr = ode.integrate(p, (-3.0, 3.0))
    assert tr.is_monotone()
    assert tr.z_drift() < 1e-8
    assert tr.quadrature_time_error() < 1e-7
    assert ode.third_order_check(tr) < 1e-9


def test_feasible_rho0_finds_admissible_start():
    p = OdeParams(2, 1, 1.0, -0.01, 1.0)
    assert p.f(1.0) <= 0
    r0 = ode.feasible_rho0(p)
    assert r0 is not None and p.f(r0) > 0
    assert ode.feasible_rho0(OdeParams(2, 1, -1.0, 0.0)) is None
