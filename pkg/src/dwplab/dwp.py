"""Doubly-warped products over a Riemannian flow.

The ambient manifold is ``I x M`` with coordinates ``(t, x)`` and metric

    dt^2 + rho(t)^2 (sigma(t)^2 eta (x) eta + k(t, x)^2 (g - eta (x) eta))

where ``eta`` is the metric dual of the Reeb field.  The ambient almost
complex structure sends ``d_t`` to ``-xi``, ``xi`` to ``d_t`` (with
``xi = reeb / (rho sigma)``) and acts as ``J`` on ``Q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import jets as J
from .flows import FlowGeometry, RiemannianFlow, projector, q_frame
from .jets import Jet
from .metric import DEFAULT_MARGIN, Chart, PointGeometry, as_jet, levi_civita, nabla
from .profiles import (
    Profile,
    constant_profile,
    cosh_profile,
    exp_profile,
    linear_profile,
    poly_exp_profile,
    sinh_profile,
)
from .report import VerificationReport

IDENTITY_NAMES = (
    "nabla_dt_dt",
    "nabla_dt_xi",
    "nabla_dt_Z",
    "nabla_xi_dt",
    "nabla_xi_xi",
    "nabla_xi_Z",
    "nabla_Z_dt",
    "nabla_Z_xi",
    "nabla_Z_Zp",
)


@dataclass(frozen=True)
class WarpProfile:
    """``rho``, ``sigma`` on an interval and an optional ``k(t, x)`` (default 1).

    ``sample_interval`` is a bounded sub-interval used for grids when the
    declared interval is unbounded.
    """

    rho: Profile
    sigma: Profile
    k: Optional[Callable] = field(default=None, repr=False)
    interval: tuple = (-np.inf, np.inf)
    sample_interval: Optional[tuple] = None
    label: str = ""

    def grid_interval(self) -> tuple:
        if self.sample_interval is not None:
            return tuple(self.sample_interval)
        lo, hi = self.interval
        return (lo if np.isfinite(lo) else -2.0, hi if np.isfinite(hi) else 2.0)

    def k_of(self, t, x):
        if self.k is None:
            return 1.0
        return self.k(t, x)


def preset(name: str, coeffs: Optional[Sequence[float]] = None) -> WarpProfile:
    """Named profiles; all use ``sigma = rho'`` and ``k = 1``."""
    if name == "sinh-cosh":
        rho = sinh_profile()
        return WarpProfile(rho, rho.derivative(), None, (0.0, np.inf), (0.1, 3.0), name)
    if name == "exp":
        rho = exp_profile()
        return WarpProfile(rho, rho.derivative(), None, (-np.inf, np.inf), (-2.0, 2.0), name)
    if name == "cosh":
        rho = cosh_profile()
        return WarpProfile(rho, rho.derivative(), None, (0.0, np.inf), (0.1, 3.0), name)
    if name == "linear":
        rho = linear_profile(1.0, 2.0)
        return WarpProfile(rho, rho.derivative(), None, (-2.0, np.inf), (-1.0, 3.0), name)
    if name == "custom-poly-exp":
        a, b, c, d = (1.0, 0.5, 0.8, 0.05) if coeffs is None else tuple(float(v) for v in coeffs)
        rho = poly_exp_profile(a, b, c, d)
        return WarpProfile(rho, rho.derivative(), None, (-1.0, 2.0), (-1.0, 2.0), name)
    if name == "const":
        one = constant_profile(1.0)
        return WarpProfile(one, one, None, (-2.0, 2.0), (-1.5, 1.5), name)
    raise KeyError(f"unknown profile preset {name!r}; known: {', '.join(PRESETS)}")


PRESETS = ("sinh-cosh", "exp", "cosh", "linear", "custom-poly-exp", "const")


def _embed(M, dim: int):
    """Block-diagonal ``[[1, 0], [0, M]]`` for a jet or array ``M``."""
    if not isinstance(M, Jet):
        out = np.zeros((dim, dim))
        out[0, 0] = 1.0
        out[1:, 1:] = np.asarray(M, dtype=float)
        return out
    v = np.zeros((dim, dim))
    v[0, 0] = 1.0
    v[1:, 1:] = M.v
    g = h = None
    if M.g is not None:
        g = np.zeros((dim, dim) + M.g.shape[2:])
        g[1:, 1:] = M.g
    if M.h is not None:
        h = np.zeros((dim, dim) + M.h.shape[2:])
        h[1:, 1:] = M.h
    return Jet(v, g, h)


@dataclass(frozen=True)
class DoublyWarpedProduct:
    base: RiemannianFlow
    profile: WarpProfile
    n: int
    ambient_chart: Chart = field(repr=False)

    @property
    def dim(self) -> int:
        return 2 * self.n

    def split(self, X):
        return X[0], X[1:]

    def reeb_ambient(self, X):
        """Unit ambient field ``xi = reeb / (rho sigma)`` in ambient coordinates."""
        t, x = self.split(X)
        rs = self.profile.rho(t) * self.profile.sigma(t)
        xi = J.array(self.base.reeb(x))
        return J.concatenate([0.0 * rs, xi / rs])

    def complex_structure(self, X):
        """Ambient ``J~`` as a coordinate ``(1,1)`` tensor (jet or array)."""
        t, x = self.split(X)
        rs = self.profile.rho(t) * self.profile.sigma(t)
        G = J.array(self.base.chart.metric(x))
        xi = J.array(self.base.reeb(x))
        eta = J.einsum("ij,j->i", G, xi)
        Jb = J.array(self.base.transverse_J(x))
        top = J.concatenate([0.0 * rs, rs * eta])
        rows = [top]
        col = -1.0 * xi / rs
        for i in range(self.base.dim):
            rows.append(J.concatenate([col[i], Jb[i]]))
        return J.stack(rows)

    def _t_range(self, margin: float) -> tuple:
        # keep grid points strictly inside the declared interval
        lo, hi = self.profile.grid_interval()
        ilo, ihi = self.profile.interval
        return max(lo, ilo + margin), min(hi, ihi - margin)

    def sample(self, t_count: int, x_count: int, rng: np.random.Generator, margin: float = DEFAULT_MARGIN) -> np.ndarray:
        lo, hi = self._t_range(margin)
        ts = np.linspace(lo, hi, t_count) if t_count > 1 else np.array([(lo + hi) / 2])
        xs = self.base.sample(x_count, rng, margin)
        return np.array([np.concatenate([[t], x]) for t in ts for x in xs])

    def random_points(self, count: int, rng: np.random.Generator, margin: float = DEFAULT_MARGIN) -> np.ndarray:
        lo, hi = self._t_range(margin)
        ts = rng.uniform(lo, hi, count)
        xs = self.base.sample(count, rng, margin)
        return np.column_stack([ts, xs])


def build(base: RiemannianFlow, profile: WarpProfile, n: Optional[int] = None, check_points: int = 10, seed: int = 0) -> DoublyWarpedProduct:
    """Assemble the ambient chart and check positivity of the profile samples."""
    if n is None:
        n = base.n
    if base.dim != 2 * n - 1:
        raise ValueError(f"base of dimension {base.dim} does not match complex dimension {n}")
    rho, sigma = profile.rho, profile.sigma
    dim = 2 * n

    def metric(X):
        t, x = X[0], X[1:]
        G = J.array(base.chart.metric(x))
        xi = J.array(base.reeb(x))
        eta = J.einsum("ij,j->i", G, xi)
        V = J.einsum("i,j->ij", eta, eta)
        r, s = rho(t), sigma(t)
        k = profile.k_of(t, x)
        M = (r * r) * ((s * s) * V + (k * k) * (G - V))
        return _embed(M, dim)

    lo, hi = profile.interval
    chart = Chart(dim, [(lo, hi)] + list(base.chart.bounds), metric, f"dwp[{profile.label or rho.name}|{base.label}]")
    dwp = DoublyWarpedProduct(base, profile, n, chart)
    rng = np.random.default_rng(seed)
    for P in dwp.random_points(check_points, rng):
        t, x = P[0], P[1:]
        vals = [rho.value(t), sigma.value(t), float(J.value(profile.k_of(t, x)))]
        if min(vals) <= 0 or not np.all(np.isfinite(vals)):
            raise ValueError(f"non-positive profile sample {vals} at t={t:.4g}")
    return dwp


# -- ambient complex structure ---------------------------------------------------


@dataclass
class AmbientComplexStructure:
    dwp: DoublyWarpedProduct

    def matrix(self, P) -> np.ndarray:
        return np.asarray(J.value(self.dwp.complex_structure(np.asarray(P, dtype=float))))

    def residuals(self, P, rng: Optional[np.random.Generator] = None) -> dict:
        P = self.dwp.ambient_chart.check_point(P)
        Jm = self.matrix(P)
        G = self.dwp.ambient_chart.metric_value(P)
        d = self.dwp.dim
        rng = rng or np.random.default_rng(0)
        X, Y = rng.normal(size=d), rng.normal(size=d)
        xi = np.asarray(J.value(self.dwp.reeb_ambient(P)))
        dt = np.eye(d)[0]
        base = FlowGeometry(self.dwp.base, P[1:])
        E = base.frame()
        Jb = base.j_matrix()
        return {
            "square": float(np.max(np.abs(Jm @ Jm + np.eye(d)))),
            "hermitian": abs(float((Jm @ X) @ G @ (Jm @ Y) - X @ G @ Y)) / max(1.0, float(np.abs(X @ G @ Y))),
            "dt_to_minus_xi": float(np.max(np.abs(Jm @ dt + xi))),
            "xi_to_dt": float(np.max(np.abs(Jm @ xi - dt))),
            "restriction": float(np.max(np.abs(Jm[1:, 1:] @ E - Jb @ E))) + float(np.max(np.abs(Jm[0, 1:] @ E))),
        }


def ambient_J(dwp: DoublyWarpedProduct) -> AmbientComplexStructure:
    if dwp.base.transverse_J is None:
        raise ValueError("base flow carries no transverse J")
    return AmbientComplexStructure(dwp)


# -- connection identities -----------------------------------------------------


class AmbientPoint:
    """Jets of the ambient geometry and base geometry at ``(t, x)``."""

    def __init__(self, dwp: DoublyWarpedProduct, P):
        self.dwp = dwp
        self.geo = PointGeometry(dwp.ambient_chart, P)
        self.P = self.geo.p
        self.X = self.geo.x
        self.t = self.P[0]
        self.x = self.P[1:]
        self.base = FlowGeometry(dwp.base, self.x)
        prof = dwp.profile
        tj, xj = self.X[0], self.X[1:]
        self.rho_j = prof.rho(tj)
        self.sigma_j = prof.sigma(tj)
        self.k_j = as_jet(prof.k_of(tj, xj), dwp.dim)
        self.rk = self.rho_j * self.k_j
        self.rs = self.rho_j * self.sigma_j

    @property
    def G(self) -> np.ndarray:
        return self.geo.G.v

    def norm(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(np.sqrt(max(v @ self.G @ v, 0.0)))

    def q_section(self, W) -> Jet:
        """Ambient jet of ``P^ W`` for a base-valued jet field ``W``."""
        xj = self.X[1:]
        Gb = as_jet(self.dwp.base.chart.metric(xj), self.dwp.dim)
        xi = as_jet(self.dwp.base.reeb(xj), self.dwp.dim)
        Pb = projector(Gb, xi)
        Zb = J.einsum("ij,j->i", Pb, W)
        return J.concatenate([0.0 * self.X[0], Zb])


def random_polynomial_field(rng: np.random.Generator, center, dim_out: int, scale: float = 1.0) -> Callable:
    """Quadratic polynomial map of ambient coordinates with random coefficients."""
    c = np.asarray(center, dtype=float)
    d = c.shape[0]
    A0 = rng.uniform(-1, 1, dim_out) * scale
    A1 = rng.uniform(-1, 1, (dim_out, d)) * scale
    A2 = rng.uniform(-1, 1, (dim_out, d, d)) * scale * 0.5

    def W(X):
        y = X - c
        return A0 + J.einsum("ij,j->i", A1, y) + J.einsum("ijk,j,k->i", A2, y, y)

    return W


def connection_residuals(dwp: DoublyWarpedProduct, P, rng: np.random.Generator) -> dict:
    """Relative residual of each of the nine connection identities at ``P``."""
    ap = AmbientPoint(dwp, P)
    D = dwp.dim
    gam = ap.geo.gamma
    X = ap.X
    e_t = np.eye(D)[0]
    dt = as_jet(e_t, D)
    xi = as_jet(dwp.reeb_ambient(X), D)
    Wa = random_polynomial_field(rng, ap.P, dwp.base.dim)
    Wb = random_polynomial_field(rng, ap.P, dwp.base.dim)
    Z = ap.q_section(Wa(X))
    Zp = ap.q_section(Wb(X))

    def L(A, B):
        return np.asarray(J.value(nabla(gam, A, B)))

    # scalar data
    rho, sigma = float(ap.rho_j.v), float(ap.sigma_j.v)
    k = float(ap.k_j.v)
    rk, rs = float(ap.rk.v), float(ap.rs.v)
    d_rk = float(ap.rk.g[0])
    d_rs = float(ap.rs.g[0])
    dk_x = ap.k_j.g[1:]
    base = ap.base
    Gb = base.metric
    xib = base.xi.v
    Pb = base.P.v
    hb = base.oneill()
    tg = base.tgamma.v

    def amb(vb, vt=0.0):
        return np.concatenate([[vt], vb])

    def base_part(Y: Jet):
        return Y.v[1:], Y.g[1:, 1:], Y.g[1:, 0]

    Zv, dZ, Zt = base_part(Z)
    Zpv, dZp, _ = base_part(Zp)
    xi_b = xib / rs  # base components of ambient xi

    def nabla_hat(A, Bv, dB):
        return A @ dB.T + np.einsum("kij,i,j->k", tg, A, Bv)

    xi_k = float(xi_b @ dk_x)  # xi(k)
    gradlnk = Pb @ np.linalg.solve(Gb, dk_x / k) / rk**2
    gZZp = rk**2 * float(Zv @ Gb @ Zpv)
    ghZZp = rk**2 * float((hb @ Zv) @ Gb @ Zpv)
    coef = sigma / (rho * k * k)
    zero = np.zeros(D)
    xi_amb = amb(xi_b)

    lhs_rhs = {
        "nabla_dt_dt": (L(dt, dt), zero),
        "nabla_dt_xi": (L(dt, xi), zero),
        "nabla_dt_Z": (L(dt, Z), amb(Zt + (d_rk / rk) * Zv)),
        "nabla_xi_dt": (L(xi, dt), (d_rs / rs) * xi_amb),
        "nabla_xi_xi": (L(xi, xi), -(d_rs / rs) * e_t),
        "nabla_xi_Z": (L(xi, Z), amb(nabla_hat(xi_b, Zv, dZ) + (xi_k / k) * Zv + coef * (hb @ Zv))),
        "nabla_Z_dt": (L(Z, dt), amb((d_rk / rk) * Zv)),
        "nabla_Z_xi": (L(Z, xi), amb((xi_k / k) * Zv + coef * (hb @ Zv))),
        "nabla_Z_Zp": (
            L(Z, Zp),
            amb(
                nabla_hat(Zv, Zpv, dZp)
                + float(Zv @ dk_x / k) * Zpv
                + float(Zpv @ dk_x / k) * Zv
                - gZZp * gradlnk
            )
            - (xi_k / k) * gZZp * xi_amb
            - coef * ghZZp * xi_amb
            - (d_rk / rk) * gZZp * e_t,
        ),
    }
    out = {}
    for name in IDENTITY_NAMES:
        lhs, rhs = lhs_rhs[name]
        out[name] = ap.norm(lhs - rhs) / max(1.0, ap.norm(lhs), ap.norm(rhs))
    return out


def verify_connection_identities(
    dwp: DoublyWarpedProduct,
    points: Optional[np.ndarray] = None,
    count: int = 100,
    seed: int = 0,
    tol: float = 1e-7,
) -> list:
    """One report per identity over ``points`` (random sample if not given)."""
    rng = np.random.Generator(np.random.Philox(seed))
    if points is None:
        points = dwp.random_points(count, rng)
    acc = {name: [] for name in IDENTITY_NAMES}
    for P in points:
        res = connection_residuals(dwp, P, rng)
        for name, r in res.items():
            acc[name].append(r)
    prov = f"connection identities on {dwp.ambient_chart.label}"
    return [VerificationReport.from_residuals(name, acc[name], tol, prov, seed) for name in IDENTITY_NAMES]


# -- Kaehler defect and conditions -----------------------------------------------


def ambient_frame(ap: AmbientPoint) -> np.ndarray:
    """Orthonormal ambient frame ``{d_t, xi, E_a / (rho k)}`` as columns."""
    D = ap.dwp.dim
    E = ap.base.frame() / float(ap.rk.v)
    xi = np.concatenate([[0.0], ap.base.xi.v / float(ap.rs.v)])
    cols = [np.eye(D)[0], xi] + [np.concatenate([[0.0], E[:, a]]) for a in range(E.shape[1])]
    return np.stack(cols, axis=1)


def nabla_J_tensor(ap: AmbientPoint) -> np.ndarray:
    """``T[k, j, i] = (nabla_i J~)^k_j`` in ambient coordinates."""
    Jj = as_jet(ap.dwp.complex_structure(ap.X), ap.dwp.dim)
    gam = ap.geo.gamma.v
    return Jj.g + np.einsum("kim,mj->kji", gam, Jj.v) - np.einsum("mij,km->kji", gam, Jj.v)


def kaehler_defect(dwp: DoublyWarpedProduct, P) -> float:
    """Largest ``|(nabla_X J~) Y|`` over an orthonormal ambient frame."""
    ap = AmbientPoint(dwp, P)
    T = nabla_J_tensor(ap)
    F = ambient_frame(ap)
    L = np.linalg.cholesky(ap.G)
    comp = np.einsum("ak,kji,jb,ic->abc", L.T, T, F, F)
    return float(np.max(np.linalg.norm(comp, axis=0)))


@dataclass
class KaehlerConditions:
    reeb_k: VerificationReport
    oneill_relation: VerificationReport
    transverse_grad_k: VerificationReport
    grad_required: bool
    C_values: list
    C_spread_t: float
    C_spread_x: float
    C_reeb_derivative: float
    verdict: bool

    def reports(self) -> list:
        return [self.reeb_k, self.oneill_relation, self.transverse_grad_k]


def kaehler_conditions(
    dwp: DoublyWarpedProduct,
    points: Optional[np.ndarray] = None,
    t_count: int = 5,
    x_count: int = 20,
    seed: int = 0,
    tol: float = 1e-7,
) -> KaehlerConditions:
    """Evaluate the three algebraic Kaehler conditions and the function ``C``.

    ``C = d_t (rho k)^2 / (2 rho sigma)`` is reported per point; its spread
    in ``t`` (per base point) and in ``x`` (overall) is reported so callers
    can check basicness and, for ``n > 2``, constancy.
    """
    if points is None:
        points = dwp.sample(t_count, x_count, np.random.Generator(np.random.Philox(seed)))
    r1, r2, r3, Cs, xiC = [], [], [], [], []
    for P in points:
        ap = AmbientPoint(dwp, P)
        base = ap.base
        k = float(ap.k_j.v)
        dk_x = ap.k_j.g[1:]
        r1.append(abs(float(base.xi.v @ dk_x)))
        sigma = float(ap.sigma_j.v)
        d_rk = float(ap.rk.g[0])
        H = base.in_frame(base.oneill()).matrix
        Jq = base.in_frame(base.j_matrix()).matrix
        r2.append(float(np.linalg.norm(H + (k / sigma) * d_rk * Jq, 2)))
        grad = base.P.v @ np.linalg.solve(base.metric, dk_x)
        r3.append(float(np.sqrt(max(grad @ base.metric @ grad, 0.0))))
        C = ap.rk * ap.rk
        rs = float(ap.rs.v)
        Cs.append(float(C.g[0]) / (2.0 * rs))
        # reeb derivative of C: mixed second partials of (rho k)^2
        xiC.append(abs(float(base.xi.v @ C.h[0, 1:])) / (2.0 * rs))
    Cs_arr = np.array(Cs)
    xs = np.array([tuple(np.round(P[1:], 12)) for P in points])
    spread_t = 0.0
    uniq = {tuple(x) for x in xs}
    for u in uniq:
        mask = np.all(xs == np.array(u), axis=1)
        vals = Cs_arr[mask]
        spread_t = max(spread_t, float(vals.max() - vals.min()))
    spread_x = float(Cs_arr.max() - Cs_arr.min())
    prov = f"Kaehler conditions on {dwp.ambient_chart.label}"
    rep1 = VerificationReport.from_residuals("reeb_derivative_of_k", r1, tol, prov, seed)
    rep2 = VerificationReport.from_residuals("oneill_relation", r2, tol, prov, seed)
    rep3 = VerificationReport.from_residuals("transverse_gradient_of_k", r3, tol, prov, seed)
    need_grad = dwp.n > 2
    verdict = rep1.verdict and rep2.verdict and (rep3.verdict or not need_grad)
    return KaehlerConditions(rep1, rep2, rep3, need_grad, Cs, spread_t, spread_x, float(max(xiC)), verdict)
