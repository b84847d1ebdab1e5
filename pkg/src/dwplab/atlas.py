"""Regime atlas: classification cross-checked against integration and a root oracle."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .ode import (
    EndpointKind,
    IntegratorConfig,
    NoSolution,
    OdeParams,
    RegimeKind,
    bisection_roots,
    classify,
    feasible_rho0,
    integrate,
)

TIME_TOL = 1e-6
ROOT_TOL = 1e-8

DEFAULT_N = (2, 3)
DEFAULT_EPS = (-1, 0, 1)
DEFAULT_C = (-2.0, -0.5, 0.0, 0.5, 2.0, 4.0)
DEFAULT_D = (-0.2, -0.02, 0.0, 0.02, 0.2, 1.0)


@dataclass
class AtlasEntry:
    n: int
    eps: int
    c: float
    D: float
    rho0: float
    kind: str
    closed_form: str
    source: str
    left_kind: str = ""
    right_kind: str = ""
    t_left: float = math.nan
    t_right: float = math.nan
    obs_left_kind: str = ""
    obs_right_kind: str = ""
    obs_t_left: float = math.nan
    obs_t_right: float = math.nan
    root_error: float = 0.0
    z_drift: float = 0.0
    agree: bool = True
    notes: list = field(default_factory=list)

    HEADER = (
        "n", "eps", "c", "D", "rho0", "kind", "closed_form", "source", "left_kind", "right_kind",
        "t_left", "t_right", "obs_left_kind", "obs_right_kind", "obs_t_left", "obs_t_right",
        "root_error", "z_drift", "agree",
    )

    def row(self) -> tuple:
        return tuple(getattr(self, h) if h != "agree" else int(self.agree) for h in self.HEADER)


def default_grid(
    ns: Sequence[int] = DEFAULT_N,
    eps_values: Sequence[int] = DEFAULT_EPS,
    c_values: Sequence[float] = DEFAULT_C,
    D_values: Sequence[float] = DEFAULT_D,
    special: bool = True,
) -> list:
    """Parameter grid plus the tangential global configurations on both sides."""
    out = []
    for n, eps, c, D in itertools.product(ns, eps_values, c_values, D_values):
        p = OdeParams(n, eps, c, D, 1.0)
        r0 = feasible_rho0(p)
        out.append(p.with_rho0(r0) if r0 is not None else p)
    if special:
        for n, D in itertools.product(ns, (0.2, 1.0)):
            c = -(n + 1) * (n * D) ** (1.0 / (n + 1))
            xc = (n * D) ** (1.0 / (2 * n + 2))
            for r0 in (1.5 * xc, 0.6 * xc):
                out.append(OdeParams(n, -1, c, D, r0))
    return out


def _sampled_sup_f(p: OdeParams) -> float:
    xs = np.geomspace(1e-4, 1e4, 40001)
    return float(np.max(p.f(xs)))


def _match_roots(found: Sequence[float], oracle: Sequence[float]) -> float:
    if len(found) != len(oracle):
        return math.inf
    if not found:
        return 0.0
    return float(max(abs(a - b) for a, b in zip(sorted(found), sorted(oracle))))


def _check_end(entry: AtlasEntry, side: str, predicted, observed, reason: str, rho_obs_end: float, rho0: float, horizon: float, oracle: Sequence[float]) -> None:
    pk = predicted.kind
    if math.isfinite(predicted.t) and abs(predicted.t) < horizon:
        if observed.kind != pk:
            entry.agree = False
            entry.notes.append(f"{side}: kind {observed.kind.value} != {pk.value}")
            return
        if not abs(observed.t - predicted.t) <= TIME_TOL:
            entry.agree = False
            entry.notes.append(f"{side}: |dt| = {abs(observed.t - predicted.t):.2e}")
        if pk is EndpointKind.FINITE_TIME_ROOT and predicted.rho_limit > 0:
            near = min(oracle, key=lambda r: abs(r - observed.rho_limit)) if oracle else math.nan
            err = abs(observed.rho_limit - near)
            entry.root_error = max(entry.root_error, err)
            if not err < ROOT_TOL:
                entry.agree = False
                entry.notes.append(f"{side}: root error {err:.2e}")
        return
    # not reachable inside the horizon: the integrator must not have stopped
    if reason not in ("horizon", "cap"):
        entry.agree = False
        entry.notes.append(f"{side}: terminated ({reason}) but predicted t = {predicted.t}")
        return
    lim = predicted.rho_limit
    if math.isfinite(lim) and not (min(lim, rho0) - 1e-12 <= rho_obs_end <= max(lim, rho0) + 1e-12):
        entry.agree = False
        entry.notes.append(f"{side}: rho left the range toward {lim}")


def check_config(p: OdeParams, horizon: float = 5.0) -> AtlasEntry:
    reg = classify(p)
    e = AtlasEntry(p.n, p.eps, p.c, p.D, p.rho0, reg.kind.value, reg.closed_form.value, reg.source)
    oracle = bisection_roots(p)
    simple = [r for r in reg.roots if r not in reg.double_roots]
    e.root_error = _match_roots(simple, oracle)
    if not e.root_error < ROOT_TOL:
        e.agree = False
        e.notes.append(f"roots {reg.roots} vs oracle {oracle}")
    for r in reg.double_roots:
        if abs(float(p.f(r))) > 1e-12 * p.scale(r) or abs(float(p.df(r))) > 1e-8 * max(1.0, p.scale(r) / r):
            e.agree = False
            e.notes.append(f"double root {r} is not tangential")
    if reg.kind is RegimeKind.NO_SOLUTION:
        if _sampled_sup_f(p) > 0:
            e.agree = False
            e.notes.append("sampled f > 0 somewhere")
        try:
            integrate(p)
            e.agree = False
            e.notes.append("integrator accepted a no-solution configuration")
        except NoSolution:
            pass
        return e
    e.left_kind, e.right_kind = reg.left.kind.value, reg.right.kind.value
    e.t_left, e.t_right = reg.left.t, reg.right.t
    tr = integrate(p, (-horizon, horizon), IntegratorConfig(t_span=(-horizon, horizon)))
    e.obs_left_kind, e.obs_right_kind = tr.left.kind.value, tr.right.kind.value
    e.obs_t_left, e.obs_t_right = tr.left.t, tr.right.t
    e.z_drift = tr.z_drift()
    _check_end(e, "left", reg.left, tr.left, tr.left_reason, float(tr.rho[0]), p.rho0, horizon, oracle)
    _check_end(e, "right", reg.right, tr.right, tr.right_reason, float(tr.rho[-1]), p.rho0, horizon, oracle)
    return e


def _check_tuple(args) -> AtlasEntry:
    (n, eps, c, D, rho0), horizon = args
    return check_config(OdeParams(n, eps, c, D, rho0), horizon)


def run_atlas(configs: Optional[Iterable[OdeParams]] = None, horizon: float = 5.0, jobs: int = 1) -> list:
    configs = list(configs) if configs is not None else default_grid()
    args = [((p.n, p.eps, p.c, p.D, p.rho0), horizon) for p in configs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_check_tuple, args, chunksize=8))
    return [_check_tuple(a) for a in args]
