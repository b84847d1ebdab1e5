"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

import itertools
import math
import os
import time

import numpy as np
import pytest

from dwplab import atlas
from dwplab import dwp as W
from dwplab import einstein as E
from dwplab import jets as J
from dwplab import obata as O
from dwplab import ode
from dwplab import profiles as Pr
from dwplab.flows import MODEL_IDS, get_model

from helpers import kaehler_violations


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        return ok

    return emit


def _random_product(rng):
    model = MODEL_IDS[int(rng.integers(len(MODEL_IDS)))]
    interval = (-1.0, 2.0)
    rho = Pr.random_poly_exp(rng, interval)
    sigma = rho.derivative() if rng.random() < 0.5 else Pr.random_poly_exp(rng, interval)
    k = None
    if rng.random() < 0.5:
        a, b, j = rng.uniform(0.05, 0.3), rng.uniform(0.0, 0.1), int(rng.integers(get_model(model).dim))
        k = lambda t, x, a=a, b=b, j=j: 1.0 + a * J.sin(x[j]) ** 2 + b * t * t
    wp = W.WarpProfile(rho, sigma, k, interval, interval, f"random-{model}")
    return W.build(get_model(model), wp)


def test_connection_identities(verdict):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst, failed = 0.0, []
    for i in range(10):
        dwp = _random_product(rng)
        for rep in W.verify_connection_identities(dwp, count=100, seed=i, tol=1e-7):
            worst = max(worst, rep.residual_max)
            if not rep.verdict:
                failed.append(f"{dwp.ambient_chart.label}:{rep.identity_name}")
    elapsed = time.perf_counter() - start
    ok = not failed and elapsed < 30.0
    assert verdict(1, ok, f"10 combos x 100 points, max residual {worst:.2e} < 1e-7, {elapsed:.1f}s < 30s {failed}")


def test_kaehler_characterization(verdict):
    rng = np.random.default_rng(7)
    worst = 0.0
    for model, profile in itertools.product(("hopf-s3", "hopf-s5", "heisenberg3"), ("sinh-cosh", "exp", "cosh", "linear", "custom-poly-exp")):
        dwp = W.build(get_model(model), W.preset(profile))
        worst = max(worst, max(W.kaehler_defect(dwp, P) for P in dwp.sample(4, 6, rng)))
    violations = {}
    for name, dwp in kaehler_violations().items():
        violations[name] = max(W.kaehler_defect(dwp, P) for P in dwp.sample(4, 6, rng))
    ok = worst < 1e-7 and all(v > 1e-3 for v in violations.values())
    detail = ", ".join(f"{k} {v:.2e}" for k, v in violations.items())
    assert verdict(2, ok, f"Kaehler defect {worst:.2e} < 1e-7; violations > 1e-3: {detail}")


def test_ricci_closed_form(verdict):
    rng = np.random.default_rng(11)
    rel = mixed = 0.0
    for model, profile in itertools.product(("hopf-s3", "heisenberg3"), ("exp", "sinh-cosh", "cosh")):
        dwp = W.build(get_model(model), W.preset(profile))
        for P in dwp.random_points(10, rng):
            b = E.ricci_blocks(dwp, P)
            rel = max(rel, b.vertical_rel_error, b.reeb_rel_error, b.transverse_rel_error)
            mixed = max(mixed, b.mixed_max)
    ok = rel < 1e-6 and mixed < 1e-8
    assert verdict(3, ok, f"Ricci block relative error {rel:.2e} < 1e-6, mixed {mixed:.2e} < 1e-8")


def test_einstein_model(verdict):
    dwp = W.build(get_model("hopf-s3"), W.preset("sinh-cosh"))
    rng = np.random.default_rng(3)
    ts = np.linspace(0.1, 3.0, 59)
    eq1 = eq2 = 0.0
    for x in dwp.base.sample(4, rng):
        for t, e1, e2, _ in E.einstein_scan(dwp, -6.0, ts, x):
            eq1, eq2 = max(eq1, abs(e1)), max(eq2, e2)
    cc = E.conserved_c(dwp, -6.0, ts, dwp.base.sample(4, rng))
    c_err = max(abs(v - 2.0) for v in cc.values)
    lin = W.build(get_model("hopf-s3"), W.preset("linear"))
    neg = min(abs(E.eq1(lin.profile.rho, t, 2, -6.0)) for t in np.linspace(-0.9, 3.0, 40))
    ok = eq1 < 1e-7 and eq2 < 1e-7 and cc.drift < 1e-9 and c_err < 1e-9 and neg > 1e-2
    detail = f"eq1 {eq1:.2e}, eq2 {eq2:.2e} < 1e-7; c drift {cc.drift:.2e} < 1e-9, |c - 2| {c_err:.2e}; rho = t + 2 eq1 >= {neg:.2e} > 1e-2"
    assert verdict(4, ok, detail)


def _closed_form_configs():
    out = []
    for n, eps, c, rho0 in itertools.product((2, 3), (-1, 0, 1), (-2.0, -0.5, 0.0, 0.5, 2.0, 4.0), (0.3, 1.0, 1.7)):
        p = ode.OdeParams(n, eps, c, 0.0, rho0)
        if ode.closed_form_tag(p) is not ode.ClosedForm.NONE and p.f(rho0) > 0:
            out.append(p)
    return out


def test_ode_closed_forms(verdict):
    span = (-5.0, 5.0)
    configs = _closed_form_configs()
    sup = dt = 0.0
    unchecked = []
    for p in configs:
        cmp = ode.closed_form_comparison(p, span, keep=0.9)
        sup = max(sup, cmp.sup_error)
        lo, hi = ode.closed_form_interval(p)
        for end, err in ((lo, cmp.left_dt), (hi, cmp.right_dt)):
            if math.isfinite(end):
                if math.isnan(err):
                    unchecked.append(p)
                else:
                    dt = max(dt, err)
    ok = sup < 1e-6 and dt < 1e-6 and not unchecked
    assert verdict(5, ok, f"{len(configs)} D = 0 regimes: sup error {sup:.2e} < 1e-6, endpoint |dt| {dt:.2e} < 1e-6")


def _z_configs():
    out = []
    for p in atlas.default_grid():
        for s in (1.0, 1.5):
            q = p.with_rho0(p.rho0 * s)
            if ode.sup_f_positive(q) and q.f(q.rho0) > 0:
                out.append(q)
    return out


def test_z_conservation(verdict):
    configs = _z_configs()
    drift = max(ode.integrate(p).z_drift() for p in configs)
    ns = {p.n for p in configs}
    ok = len(configs) >= 200 and ns == {2, 3} and drift < 1e-8
    assert verdict(6, ok, f"{len(configs)} trajectories, n in {sorted(ns)}, max z drift {drift:.2e} < 1e-8")


def test_regime_atlas(verdict):
    entries = atlas.run_atlas(atlas.default_grid(), horizon=5.0, jobs=os.cpu_count() or 1)
    bad = [e for e in entries if not e.agree]
    kinds = sorted({e.kind for e in entries})
    root = max(e.root_error for e in entries)
    ok = not bad
    detail = f"{len(entries)} configurations, {len(bad)} disagreements, max root error {root:.2e}, kinds {kinds}"
    assert verdict(7, ok, detail), [(e.n, e.eps, e.c, e.D, e.rho0, e.notes) for e in bad]


def test_obata_structure(verdict):
    rng = np.random.default_rng(5)
    worst = {}
    for model, profile in itertools.product(("hopf-s3", "hopf-s5", "heisenberg3"), ("sinh-cosh", "exp", "cosh", "custom-poly-exp")):
        dwp = W.build(get_model(model), W.preset(profile))
        pts = dwp.random_points(8, rng)
        assert max(W.kaehler_defect(dwp, P) for P in pts) < 1e-7
        for rep in O.obata_reports(dwp, O.rho_squared(dwp), pts, tol=1e-7):
            worst[rep.identity_name] = max(worst.get(rep.identity_name, 0.0), rep.residual_max)
    exp_dwp = W.build(get_model("hopf-s3"), W.preset("exp"))
    exp_rep = O.exponential_case_check(exp_dwp, exp_dwp.random_points(10, rng))
    ok = all(v < 1e-7 for v in worst.values()) and exp_rep.passed(1e-8)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    detail += f"; exponential case (4u, 2u) errors {exp_rep.lambda_error:.1e}, {exp_rep.mu_error:.1e} < 1e-8"
    assert verdict(8, ok, detail)


def test_flow_reconstruction(verdict):
    worst = {}
    cases = [
        ("hopf-s3", "sinh-cosh", None),
        ("heisenberg3", "exp", None),
        ("hopf-s5", "cosh", None),
        ("hopf-s3", "sinh-cosh", (0.1, 0.05, 0.1)),
    ]
    for model, profile, shear in cases:
        dwp = W.build(get_model(model), W.preset(profile))
        target = O.sheared(dwp, shear) if shear else dwp
        lo, hi = dwp.profile.grid_interval()
        level = dwp.profile.rho.value(0.5 * (lo + hi)) ** 2
        rec = O.flow_reconstruct(target, O.rho_squared(target), level, n_seeds=3, n_samples=9)
        for rep in rec.reports(tol_spread=1e-8, tol_fp=1e-7, tol_xi=1e-6, tol_metric=1e-5):
            worst[rep.identity_name] = max(worst.get(rep.identity_name, 0.0), rep.residual_max)
    limits = {"level_spread": 1e-8, "f_prime_vs_grad": 1e-7, "xi_scaling": 1e-6, "rebuilt_metric": 1e-5, "f_second_vs_lambda": 1e-6, "splitting_orthogonality": 1e-8}
    ok = all(worst[k] < limits[k] for k in limits)
    detail = ", ".join(f"{k} {worst[k]:.1e} < {limits[k]:.0e}" for k in limits)
    assert verdict(9, ok, detail)
