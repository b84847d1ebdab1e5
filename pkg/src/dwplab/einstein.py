"""Ricci tensor and Einstein system of Kaehler doubly-warped products.

For ``sigma = rho'`` and ``k = 1`` over a Sasaki base the ambient Ricci
tensor is block diagonal:

* on ``span{d_t, xi}``: ``-(2n+1) rho''/rho - rho'''/rho'`` (both entries);
* on ``Q``: ``Ric^T / rho^2 - 2 (rho rho'' + n rho'^2) / rho^2``, with
  ``Ric^T`` the transverse Ricci endomorphism of the base.

Being Einstein with ``Ric = C g`` is then equivalent to

* ``eq1 = rho rho''' + (2n+1) rho' rho'' + C rho rho' = 0``, and
* ``Ric^T = (2 (rho rho'' + n rho'^2) + C rho^2) Id = 2c Id``.

``C = 2 (n + 1) eps`` relates the raw constant to its normalized sign.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import jets as J
from .dwp import AmbientPoint, DoublyWarpedProduct, ambient_frame
from .flows import FlowGeometry, is_sasaki
from .profiles import Profile


def C_from_eps(eps: float, n: int) -> float:
    return 2.0 * (n + 1) * eps


def eps_from_C(C: float, n: int) -> float:
    return C / (2.0 * (n + 1))


def _require_kaehler_normal_form(dwp: DoublyWarpedProduct, t: float) -> None:
    prof = dwp.profile
    if prof.k is not None:
        raise ValueError("Ricci block formula needs k = 1")
    if abs(prof.sigma.value(t) - prof.rho.value(t, 1)) > 1e-12 * max(1.0, abs(prof.sigma.value(t))):
        raise ValueError("Ricci block formula needs sigma = rho'")


@dataclass
class RicciBlocks:
    t: float
    vertical: float
    reeb: float
    mixed_dt_xi: float
    mixed_Z_dt: float
    mixed_Z_xi: float
    transverse: np.ndarray
    vertical_closed: float
    transverse_closed: np.ndarray
    base_transverse_ricci: np.ndarray
    ricci_frame: np.ndarray

    @property
    def vertical_rel_error(self) -> float:
        return abs(self.vertical - self.vertical_closed) / max(1.0, abs(self.vertical_closed))

    @property
    def reeb_rel_error(self) -> float:
        return abs(self.reeb - self.vertical_closed) / max(1.0, abs(self.vertical_closed))

    @property
    def transverse_rel_error(self) -> float:
        scale = max(1.0, float(np.max(np.abs(self.transverse_closed))))
        return float(np.max(np.abs(self.transverse - self.transverse_closed))) / scale

    @property
    def mixed_max(self) -> float:
        return max(abs(self.mixed_dt_xi), self.mixed_Z_dt, self.mixed_Z_xi)


def closed_form_vertical(rho: Profile, t: float, n: int) -> float:
    r, r1, r2, r3 = rho.values(t, 3)
    return -(2 * n + 1) * r2 / r - r3 / r1


def closed_form_transverse(rho: Profile, t: float, n: int, base_ricci: np.ndarray) -> np.ndarray:
    r, r1, r2 = rho.values(t, 2)
    m = base_ricci.shape[0]
    return base_ricci / r**2 - 2.0 * (r * r2 + n * r1 * r1) / r**2 * np.eye(m)


def ricci_blocks(dwp: DoublyWarpedProduct, P, check_sasaki: bool = False) -> RicciBlocks:
    """Numeric ambient Ricci in the frame ``{d_t, xi, E_a/rho}`` and its closed form."""
    ap = AmbientPoint(dwp, P)
    t = float(ap.t)
    _require_kaehler_normal_form(dwp, t)
    if check_sasaki:
        v = is_sasaki(dwp.base, points=[ap.x])
        if not v.verdict:
            warnings.warn(f"base {dwp.base.label} is not Sasaki at {ap.x.tolist()}; block formula assumes h = -J")
    curv = ap.geo.curvature()
    F = ambient_frame(ap)
    R = F.T @ curv.ricci02 @ F
    R = 0.5 * (R + R.T)
    base_ric = ap.base.transverse_ricci()
    n = dwp.n
    return RicciBlocks(
        t=t,
        vertical=float(R[0, 0]),
        reeb=float(R[1, 1]),
        mixed_dt_xi=float(R[0, 1]),
        mixed_Z_dt=float(np.max(np.abs(R[2:, 0]))),
        mixed_Z_xi=float(np.max(np.abs(R[2:, 1]))),
        transverse=R[2:, 2:],
        vertical_closed=closed_form_vertical(dwp.profile.rho, t, n),
        transverse_closed=closed_form_transverse(dwp.profile.rho, t, n, base_ric),
        base_transverse_ricci=base_ric,
        ricci_frame=R,
    )


def eq1(rho: Profile, t: float, n: int, C: float) -> float:
    r, r1, r2, r3 = rho.values(t, 3)
    return r * r3 + (2 * n + 1) * r1 * r2 + C * r * r1


def two_c(rho: Profile, t: float, n: int, C: float) -> float:
    r, r1, r2 = rho.values(t, 2)
    return 2.0 * (r * r2 + n * r1 * r1) + C * r * r


@dataclass
class EinsteinResidual:
    t: float
    eq1: float
    eq2: float
    c: float


def einstein_residual(dwp: DoublyWarpedProduct, C: float, P) -> EinsteinResidual:
    P = np.asarray(P, dtype=float)
    t = float(P[0])
    _require_kaehler_normal_form(dwp, t)
    base_ric = FlowGeometry(dwp.base, P[1:]).transverse_ricci()
    target = two_c(dwp.profile.rho, t, dwp.n, C)
    e2 = float(np.linalg.norm(base_ric - target * np.eye(base_ric.shape[0]), 2))
    return EinsteinResidual(t, eq1(dwp.profile.rho, t, dwp.n, C), e2, 0.5 * target)


def einstein_residual_eps(dwp: DoublyWarpedProduct, eps: float, P) -> EinsteinResidual:
    return einstein_residual(dwp, C_from_eps(eps, dwp.n), P)


def einstein_defect(dwp: DoublyWarpedProduct, C: float, P) -> float:
    """``max |Ric - C g|`` in an orthonormal ambient frame (direct, no formula)."""
    ap = AmbientPoint(dwp, P)
    F = ambient_frame(ap)
    R = F.T @ ap.geo.curvature().ricci02 @ F
    return float(np.max(np.abs(R - C * np.eye(R.shape[0]))))


@dataclass
class ConservedC:
    ts: list
    values: list
    drift: float
    base_c: Optional[float]
    base_c_spread: Optional[float]
    mismatch: Optional[float]


def base_transverse_constant(base, points) -> tuple:
    """Mean and spread of half the transverse Ricci eigenvalues over ``points``."""
    vals = []
    for x in points:
        ev = np.linalg.eigvalsh(FlowGeometry(base, x).transverse_ricci())
        vals.extend((0.5 * ev).tolist())
    vals = np.array(vals)
    return float(vals.mean()), float(vals.max() - vals.min())


def conserved_c(
    dwp: DoublyWarpedProduct, C: float, ts: Sequence[float], base_points: Optional[np.ndarray] = None
) -> ConservedC:
    """``c(t) = (2 (rho rho'' + n rho'^2) + C rho^2) / 2`` along ``ts``."""
    vals = [0.5 * two_c(dwp.profile.rho, float(t), dwp.n, C) for t in ts]
    drift = float(max(vals) - min(vals))
    base_c = spread = mismatch = None
    if base_points is not None and len(base_points):
        base_c, spread = base_transverse_constant(dwp.base, base_points)
        mismatch = float(max(abs(v - base_c) for v in vals))
    return ConservedC(list(map(float, ts)), vals, drift, base_c, spread, mismatch)


def conserved_derivative_gap(rho: Profile, t: float, n: int, C: float) -> float:
    """``|d/dt [2c(t)] - 2 eq1|`` with the derivative taken by a jet in ``t``."""
    tj = J.variables([t], 1)[0]
    r, r1, r2 = rho(tj), rho.derivative(1)(tj), rho.derivative(2)(tj)
    expr = 2.0 * (r * r2 + n * r1 * r1) + C * r * r
    d = float(expr.g[0])
    return abs(d - 2.0 * eq1(rho, t, n, C))


def einstein_scan(dwp: DoublyWarpedProduct, C: float, ts: Sequence[float], x) -> list:
    """Rows ``(t, eq1, eq2, c)`` at a fixed base point."""
    rows = []
    for t in ts:
        r = einstein_residual(dwp, C, np.concatenate([[t], np.asarray(x, dtype=float)]))
        rows.append((r.t, r.eq1, r.eq2, r.c))
    return rows
