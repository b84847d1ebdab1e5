"""Hessian eigenstructure of potentials ``u`` on doubly-warped products.

For ``u`` with nonvanishing gradient put ``nu = grad u / |grad u|`` and
``xi = -J nu``.  An Obata-type potential has a Hessian equal to ``lambda`` on
``span{nu, xi}`` and ``mu`` on the orthogonal complement.  For ``u = rho^2`` on
a Kaehler product one expects ``lambda = (rho^2)''`` and
``mu = |grad u|^2 / (2u)``.

The flow of ``nu`` splits the metric as ``dt^2 + g_s`` on a level set, with

* ``f(s) = u(F_s(x))`` independent of ``x`` and ``f' = |grad u|``, ``f'' = lambda``;
* ``dF_s xi = f'(s)/f'(0) xi``;
* ``g_s = (f'(s)/f'(0))^2 g_xi + exp(2 int_0^s mu/f') g_{xi-perp}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as sint
from scipy import optimize as sopt

from . import jets as J
from .dwp import DoublyWarpedProduct
from .jets import Jet
from .metric import ChartDomainError, PointGeometry, as_jet
from .report import VerificationReport


class CriticalPointError(ValueError):
    """``|grad u|`` vanishes (to tolerance) at the requested point."""


class LevelSetEmpty(ValueError):
    """No seed of the requested level inside the chart."""


class FlowExitsChart(ChartDomainError):
    """The flow of ``nu`` left the chart before the end of the time span."""


CRITICAL_TOL = 1e-12


@dataclass(frozen=True)
class PotentialField:
    """Positive scalar field ``u`` on the ambient chart (jets or arrays)."""

    u: Callable
    label: str = "u"

    def __call__(self, X):
        return self.u(X)

    def value(self, P) -> float:
        return float(J.value(self.u(np.asarray(P, dtype=float))))


def rho_squared(dwp: DoublyWarpedProduct) -> PotentialField:
    rho = dwp.profile.rho
    return PotentialField(lambda X: rho(X[0]) * rho(X[0]), f"{rho.name}^2")


def rho_potential(dwp: DoublyWarpedProduct) -> PotentialField:
    rho = dwp.profile.rho
    return PotentialField(lambda X: rho(X[0]), rho.name)


def t_potential() -> PotentialField:
    return PotentialField(lambda X: X[0] + 0.0, "t")


# -- non-adapted charts -------------------------------------------------------------


@dataclass(frozen=True)
class ShearedProduct:
    """A doubly-warped product in coordinates ``(t, y)`` with ``x = y + b t^2``.

    The level sets of ``t`` are unchanged, but ``nu`` acquires base
    components, so flows and pushforwards are no longer coordinate shifts.
    """

    dwp: DoublyWarpedProduct
    b: tuple
    ambient_chart: object = field(repr=False)

    @property
    def dim(self) -> int:
        return self.dwp.dim

    @property
    def n(self) -> int:
        return self.dwp.n

    @property
    def base(self):
        return self.dwp.base

    @property
    def profile(self):
        return self.dwp.profile

    def _jac(self, Y):
        """``d Phi`` and its inverse as nested jet-compatible arrays."""
        b = np.asarray(self.b, dtype=float)
        t = Y[0]
        d = self.dim
        rows, irows = [], []
        for i in range(d):
            if i == 0:
                rows.append(J.concatenate([1.0 + 0.0 * t] + [0.0 * t] * (d - 1)))
                irows.append(rows[0])
                continue
            e = [0.0 * t] * d
            ie = [0.0 * t] * d
            e[0] = 2.0 * b[i - 1] * t
            ie[0] = -2.0 * b[i - 1] * t
            e[i] = 1.0 + 0.0 * t
            ie[i] = 1.0 + 0.0 * t
            rows.append(J.concatenate(e))
            irows.append(J.concatenate(ie))
        return J.stack(rows), J.stack(irows)

    def product_point(self, Y):
        b = np.asarray(self.b, dtype=float)
        t = Y[0]
        return J.concatenate([t + 0.0 * t] + [Y[i] + b[i - 1] * t * t for i in range(1, self.dim)])

    def chart_point(self, X) -> np.ndarray:
        """Inverse of :meth:`product_point` for a plain array point."""
        X = np.asarray(X, dtype=float)
        return np.concatenate([[X[0]], X[1:] - np.asarray(self.b) * X[0] ** 2])

    def complex_structure(self, Y):
        D, Dinv = self._jac(Y)
        Jm = self.dwp.complex_structure(self.product_point(Y))
        return J.einsum("ij,jk,kl->il", Dinv, Jm, D)


def sheared(dwp: DoublyWarpedProduct, b: Sequence[float]) -> ShearedProduct:
    b = tuple(float(v) for v in b)
    if len(b) != dwp.dim - 1:
        raise ValueError("one shear coefficient per base coordinate")
    holder = {}

    def metric(Y):
        sp = holder["sp"]
        D, _ = sp._jac(Y)
        G = dwp.ambient_chart.metric(sp.product_point(Y))
        return J.einsum("ji,jk,kl->il", D, G, D)

    from .metric import Chart

    # the sheared domain is the preimage of the product box; bound it by a box in y
    amb = dwp.ambient_chart.bounds
    tmax = max(abs(amb[0][0]), abs(amb[0][1]))
    tmax = tmax if np.isfinite(tmax) else 1e6
    bounds = [amb[0]] + [(lo - abs(bi) * tmax**2, hi + abs(bi) * tmax**2) for (lo, hi), bi in zip(amb[1:], b)]
    inside = lambda Y: dwp.ambient_chart.contains(J.value(holder["sp"].product_point(Y)))
    chart = Chart(dwp.dim, bounds, metric, dwp.ambient_chart.label + "[sheared]", inside)
    sp = ShearedProduct(dwp, b, chart)
    holder["sp"] = sp
    return sp


# -- pointwise spectrum ------------------------------------------------------------


def _gs_frame(G: np.ndarray, first: Sequence[np.ndarray]) -> np.ndarray:
    """``G``-orthonormal frame whose leading columns span ``first`` (in order)."""
    d = G.shape[0]
    cols = []
    for v in list(first) + list(np.eye(d)):
        w = np.array(v, dtype=float)
        for c in cols:
            w = w - (c @ G @ w) * c
        nrm = np.sqrt(max(w @ G @ w, 0.0))
        if nrm > 1e-8 * np.sqrt(max(v @ G @ v, 1e-300)):
            cols.append(w / nrm)
        if len(cols) == d:
            break
    return np.stack(cols, axis=1)


@dataclass
class HessianSpectrum:
    P: np.ndarray
    u: float
    grad_norm: float
    lam: float
    mu: float
    j_invariance_residual: float
    eigenvector_residual: float
    two_eigenvalue_residual: float
    transverse_spread: float
    geodesic_residual: float
    ratio: float
    frame_hessian: np.ndarray = field(repr=False)
    nu: np.ndarray = field(repr=False)
    xi: np.ndarray = field(repr=False)
    frame: np.ndarray = field(repr=False)

    def residuals(self) -> dict:
        return {
            "j_invariance": self.j_invariance_residual,
            "eigenvector": self.eigenvector_residual,
            "two_eigenvalue": self.two_eigenvalue_residual,
            "geodesic": self.geodesic_residual,
        }


def hessian_spectrum(dwp: DoublyWarpedProduct, u: PotentialField, P) -> HessianSpectrum:
    """Hessian of ``u`` in the orthonormal frame ``{nu, xi, complement}``."""
    geo = PointGeometry(dwp.ambient_chart, P)
    U = as_jet(u(geo.x), dwp.dim)
    G = geo.G.v
    du = U.g
    H = U.h - np.einsum("kij,k->ij", geo.gamma.v, du)
    H = 0.5 * (H + H.T)
    grad = np.linalg.solve(G, du)
    gn = float(np.sqrt(max(grad @ G @ grad, 0.0)))
    if gn < CRITICAL_TOL * max(1.0, abs(float(U.v))):
        raise CriticalPointError(f"|grad u| = {gn:.3e} at {geo.p.tolist()}")
    Jm = np.asarray(J.value(dwp.complex_structure(geo.p)))
    nu = grad / gn
    xi = -Jm @ nu
    F = _gs_frame(G, [nu, xi])
    Hf = F.T @ H @ F
    JF = np.linalg.solve(F, Jm @ F)  # J in the frame
    lam = float(Hf[0, 0])
    trans = Hf[2:, 2:]
    m = trans.shape[0]
    mu = float(np.trace(trans) / m) if m else 0.0
    jinv = float(np.max(np.abs(JF.T @ Hf @ JF - Hf)))
    eig = float(np.max(np.abs(Hf[:, 0] - lam * np.eye(len(Hf))[0])))
    target = np.diag([lam, lam] + [mu] * m)
    two = float(np.max(np.abs(Hf - target)))
    spread = float(np.max(np.abs(trans - mu * np.eye(m)))) if m else 0.0
    uval = float(U.v)
    ratio = mu * 2.0 * uval / gn**2 if gn > 0 else np.nan
    return HessianSpectrum(
        geo.p, uval, gn, lam, mu, jinv, eig, two, spread, eig / gn, ratio, Hf, nu, xi, F
    )


def obata_reports(
    dwp: DoublyWarpedProduct,
    u: PotentialField,
    points: np.ndarray,
    tol: float = 1e-7,
    expect_rho_squared: bool = True,
    seed: Optional[int] = None,
) -> list:
    """Residual reports over ``points``; optionally compares with ``u = rho^2`` closed forms."""
    rows = {k: [] for k in ("j_invariance", "eigenvector", "two_eigenvalue", "geodesic", "lambda_vs_u2", "mu_ratio")}
    rho = dwp.profile.rho
    for P in points:
        hs = hessian_spectrum(dwp, u, P)
        for k, v in hs.residuals().items():
            rows[k].append(v)
        if expect_rho_squared:
            r, r1, r2 = rho.values(P[0], 2)
            u2 = 2.0 * (r1 * r1 + r * r2)
            rows["lambda_vs_u2"].append(abs(hs.lam - u2) / max(1.0, abs(u2)))
            rows["mu_ratio"].append(abs(hs.mu * 2.0 * hs.u - hs.grad_norm**2) / max(1.0, hs.grad_norm**2))
    prov = f"Hessian structure of {u.label} on {dwp.ambient_chart.label}"
    return [VerificationReport.from_residuals(k, v, tol, prov, seed) for k, v in rows.items() if v]


# -- exponential case -----------------------------------------------------------------


@dataclass
class ExponentialCaseReport:
    grad_ratio_error: float
    lambda_error: float
    mu_error: float
    kernel_dim: int
    kernel_residual: float
    points: int

    def passed(self, tol: float = 1e-8) -> bool:
        return (
            self.grad_ratio_error < 1e-10
            and self.lambda_error < tol
            and self.mu_error < tol
            and self.kernel_dim == 2
            and self.kernel_residual < tol
        )


def exponential_case_check(dwp: DoublyWarpedProduct, points: np.ndarray) -> ExponentialCaseReport:
    """``rho = e^t``, ``u = e^{2t}``: ``|grad u| = 2u`` and eigenvalues ``(4u, 2u)``.

    Errors are relative to ``u``; the kernel of ``Hess u - 4u`` is compared to
    ``span{nu, xi}`` through the difference of orthogonal projectors.
    """
    u = rho_squared(dwp)
    g_err = lam_err = mu_err = k_res = 0.0
    kdim = 2
    for P in points:
        hs = hessian_spectrum(dwp, u, P)
        uv = hs.u
        g_err = max(g_err, abs(hs.grad_norm / uv - 2.0))
        w, V = np.linalg.eigh(hs.frame_hessian)
        lam_err = max(lam_err, float(np.max(np.abs(np.sort(w)[-2:] - 4.0 * uv))) / uv)
        mu_err = max(mu_err, float(np.max(np.abs(np.sort(w)[:-2] - 2.0 * uv))) / uv)
        ker = V[:, np.abs(w - 4.0 * uv) < 1e-6 * uv]
        if ker.shape[1] != 2:
            kdim = ker.shape[1]
            continue
        proj = ker @ ker.T
        span = np.zeros_like(proj)
        span[0, 0] = span[1, 1] = 1.0
        k_res = max(k_res, float(np.max(np.abs(proj - span))))
    return ExponentialCaseReport(g_err, lam_err, mu_err, kdim, k_res, len(points))


# -- normal flow ---------------------------------------------------------------------------


def nu_jet(dwp: DoublyWarpedProduct, u: PotentialField, P) -> tuple:
    """First-order jets of ``nu`` and ``|grad u|`` at ``P`` (plus the metric value)."""
    P = np.asarray(P, dtype=float)
    x = J.variables(P, 2)
    U = as_jet(u(x), dwp.dim)
    du = Jet(U.g, U.h)
    G = dwp.ambient_chart.metric_jet(P, 1)
    grad = J.einsum("ij,j->i", J.inv(G), du)
    norm = J.sqrt(J.einsum("i,i->", du, grad))
    return grad / norm, norm, G.v


def nu_field(dwp: DoublyWarpedProduct, u: PotentialField, P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    x = J.variables(P, 1)
    U = as_jet(u(x), dwp.dim, 1)
    G = dwp.ambient_chart.metric_value(P)
    grad = np.linalg.solve(G, U.g)
    return grad / np.sqrt(grad @ G @ grad)


def level_seed(dwp: DoublyWarpedProduct, u: PotentialField, u0: float, x) -> np.ndarray:
    """Solve ``u(t, x) = u0`` in ``t`` by bracketing on the profile's grid interval."""
    lo, hi = dwp.profile.grid_interval()
    ts = np.linspace(lo, hi, 201)
    vals = np.array([u.value(np.concatenate([[t], x])) - u0 for t in ts])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if idx.size == 0:
        raise LevelSetEmpty(f"level u = {u0} not met over t in [{lo}, {hi}] at x = {np.asarray(x).tolist()}")
    i = int(idx[0])
    g = lambda t: u.value(np.concatenate([[t], x])) - u0
    t = sopt.brentq(g, ts[i], ts[i + 1], xtol=1e-15, rtol=1e-15, maxiter=300)
    return np.concatenate([[t], np.asarray(x, dtype=float)])


@dataclass
class FlowSeed:
    seed: np.ndarray
    tangents: np.ndarray
    sol: object = field(repr=False)
    s_span: tuple = (0.0, 0.0)

    def state(self, s) -> tuple:
        y = self.sol(s)
        d = self.seed.size
        return y[:d], y[d:].reshape(d, -1)


def integrate_flow(dwp: DoublyWarpedProduct, u: PotentialField, seed, s_span, tangents, rtol: float = 1e-11, atol: float = 1e-12) -> FlowSeed:
    """Flow of ``nu`` from ``seed`` together with pushed-forward ``tangents``."""
    seed = np.asarray(seed, dtype=float)
    d = seed.size
    tangents = np.asarray(tangents, dtype=float).reshape(d, -1)
    chart = dwp.ambient_chart

    def rhs(s, y):
        X = y[:d]
        if not chart.contains(X):
            raise FlowExitsChart(f"flow left the chart at s = {s:.6g}, X = {X.tolist()}")
        nu, _, _ = nu_jet(dwp, u, X)
        V = y[d:].reshape(d, -1)
        return np.concatenate([nu.v, (nu.g @ V).ravel()])

    y0 = np.concatenate([seed, tangents.ravel()])
    out = {}
    for end in (s_span[0], s_span[1]):
        if end == 0.0:
            continue
        sol = sint.solve_ivp(rhs, (0.0, end), y0, method="RK45", rtol=rtol, atol=atol, dense_output=True)
        if sol.status != 0:
            raise FlowExitsChart(sol.message)
        out[end > 0] = sol.sol

    def dense(s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        res = np.empty((y0.size, s_arr.size))
        for j, sv in enumerate(s_arr):
            if sv == 0.0:
                res[:, j] = y0
            else:
                res[:, j] = out[sv > 0](sv) if (sv > 0) in out else np.nan
        return res[:, 0] if np.ndim(s) == 0 else res

    return FlowSeed(seed, tangents, dense, tuple(s_span))


def _level_tangent_frame(dwp: DoublyWarpedProduct, u: PotentialField, P) -> tuple:
    """``xi`` and a ``G``-orthonormal basis of ``{nu, xi}^perp`` at ``P``."""
    hs_nu = nu_field(dwp, u, P)
    G = dwp.ambient_chart.metric_value(P)
    Jm = np.asarray(J.value(dwp.complex_structure(np.asarray(P, dtype=float))))
    xi = -Jm @ hs_nu
    F = _gs_frame(G, [hs_nu, xi])
    return hs_nu, xi, F[:, 2:]


def _deriv5(fun, s, h):
    f = [fun(s + k * h) for k in (-2, -1, 1, 2)]
    f0 = fun(s)
    d1 = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
    d2 = (-f[0] + 16 * f[1] - 30 * f0 + 16 * f[2] - f[3]) / (12 * h * h)
    return d1, d2


@dataclass
class Reconstruction:
    level: float
    seeds: list
    s_values: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    grad_norm: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    spread: np.ndarray
    spread_max: float
    fp_error: float
    fpp_error: float
    orthogonality: float
    xi_scaling_error: float
    metric_error: float

    HEADER = ("t", "f", "f_prime", "f_second", "lambda", "mu", "spread")

    def rows(self) -> list:
        return [
            (s, f, fp, fpp, lam, mu, sp)
            for s, f, fp, fpp, lam, mu, sp in zip(self.s_values, self.f, self.fp, self.fpp, self.lam, self.mu, self.spread)
        ]

    def reports(self, tol_spread=1e-8, tol_fp=1e-7, tol_fpp=1e-6, tol_orth=1e-8, tol_xi=1e-6, tol_metric=1e-5) -> list:
        n = self.s_values.size * len(self.seeds)
        prov = "normal-flow reconstruction"
        return [
            VerificationReport("level_spread", self.spread_max, float(np.mean(self.spread)), tol_spread, n, prov),
            VerificationReport("f_prime_vs_grad", self.fp_error, self.fp_error, tol_fp, n, prov),
            VerificationReport("f_second_vs_lambda", self.fpp_error, self.fpp_error, tol_fpp, n, prov),
            VerificationReport("splitting_orthogonality", self.orthogonality, self.orthogonality, tol_orth, n, prov),
            VerificationReport("xi_scaling", self.xi_scaling_error, self.xi_scaling_error, tol_xi, n, prov),
            VerificationReport("rebuilt_metric", self.metric_error, self.metric_error, tol_metric, n, prov),
        ]


def flow_reconstruct(
    dwp: DoublyWarpedProduct,
    u: PotentialField,
    level: float,
    s_span: tuple = (-0.5, 0.5),
    seed_points: Optional[np.ndarray] = None,
    n_seeds: int = 4,
    n_samples: int = 11,
    rng_seed: int = 0,
    fd_step: float = 5e-3,
    quad_nodes: int = 8,
) -> Reconstruction:
    """Integrate the flow of ``nu`` from seeds on ``{u = level}`` and rebuild the metric."""
    if seed_points is None:
        rng = np.random.Generator(np.random.Philox(rng_seed))
        seed_points = dwp.base.sample(n_seeds, rng, margin=0.2)
    seeds = [level_seed(dwp, u, level, x) for x in seed_points]
    lo, hi = s_span
    # keep the finite-difference stencil inside the integrated span
    pad = 2.5 * fd_step
    s_values = np.linspace(lo + pad, hi - pad, n_samples)
    flows = []
    for Y in seeds:
        _, xi0, Z0 = _level_tangent_frame(dwp, u, Y)
        tang = np.column_stack([xi0, Z0])
        # tangents to the level set at the seed (ker du), for the orthogonality check
        flows.append(integrate_flow(dwp, u, Y, s_span, tang))
    m = len(seeds)
    fvals = np.zeros((m, n_samples))
    gnorm = np.zeros((m, n_samples))
    lam = np.zeros((m, n_samples))
    mu = np.zeros((m, n_samples))
    fp = np.zeros((m, n_samples))
    fpp = np.zeros((m, n_samples))
    orth = xi_err = met_err = 0.0
    for j, fl in enumerate(flows):
        fun = lambda s, fl=fl: u.value(fl.state(s)[0])
        f0p = None
        # cumulative int mu/f' on a composite Gauss-Legendre rule from 0
        gl_x, gl_w = np.polynomial.legendre.leggauss(quad_nodes)

        def mu_over_fp(s):
            X, _ = fl.state(s)
            hs = hessian_spectrum(dwp, u, X)
            return hs.mu / hs.grad_norm

        def integral(a, b):
            if a == b:
                return 0.0
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            return half * sum(w * mu_over_fp(mid + half * xg) for xg, w in zip(gl_x, gl_w))

        hs0 = hessian_spectrum(dwp, u, fl.seed)
        f0p = hs0.grad_norm
        for i, s in enumerate(s_values):
            X, V = fl.state(s)
            hs = hessian_spectrum(dwp, u, X)
            fvals[j, i] = hs.u
            gnorm[j, i] = hs.grad_norm
            lam[j, i], mu[j, i] = hs.lam, hs.mu
            fp[j, i], fpp[j, i] = _deriv5(fun, s, fd_step)
            G = dwp.ambient_chart.metric_value(X)
            nu = hs.nu
            Vn = np.sqrt(np.maximum(np.einsum("ia,ij,ja->a", V, G, V), 1e-300))
            orth = max(orth, float(np.max(np.abs(nu @ G @ V) / Vn)))
            ratio = hs.grad_norm / f0p
            xi_now = hs.xi
            xi_err = max(xi_err, float(np.sqrt(max((V[:, 0] - ratio * xi_now) @ G @ (V[:, 0] - ratio * xi_now), 0.0))) / ratio)
            conf = np.exp(2.0 * integral(0.0, s))
            Gd = V.T @ G @ V
            Gr = np.diag([ratio**2] + [conf] * (V.shape[1] - 1))
            met_err = max(met_err, float(np.linalg.norm(Gd - Gr) / np.linalg.norm(Gr)))
    spread = fvals.max(axis=0) - fvals.min(axis=0)
    fp_err = float(np.max(np.abs(fp - gnorm) / np.maximum(1.0, gnorm)))
    fpp_err = float(np.max(np.abs(fpp - lam) / np.maximum(1.0, np.abs(lam))))
    return Reconstruction(
        level, seeds, s_values, fvals.mean(axis=0), fp.mean(axis=0), fpp.mean(axis=0), gnorm.mean(axis=0),
        lam.mean(axis=0), mu.mean(axis=0), spread, float(spread.max()), fp_err, fpp_err, orth, xi_err, met_err,
    )


# -- O'Neill tensor of the level sets and L_nu J ---------------------------------------------


@dataclass
class LevelFlowCheck:
    oneill_residual: float
    oneill_norm: float
    lie_residual: float
    lie_transverse: float
    mu_over_grad: float
    lam_over_grad: float


def lie_derivative_J(dwp: DoublyWarpedProduct, u: PotentialField, P) -> np.ndarray:
    """``(L_nu J)^k_j = nu^i d_i J^k_j - (d_i nu^k) J^i_j + J^k_i d_j nu^i``."""
    P = np.asarray(P, dtype=float)
    nu, _, _ = nu_jet(dwp, u, P)
    Jj = as_jet(dwp.complex_structure(J.variables(P, 1)), dwp.dim, 1)
    return np.einsum("i,kji->kj", nu.v, Jj.g) - np.einsum("ki,ij->kj", nu.g, Jj.v) + np.einsum("ki,ij->kj", Jj.v, nu.g)


def oneill_from_mu(dwp: DoublyWarpedProduct, u: PotentialField, P) -> LevelFlowCheck:
    """Compare the level-set O'Neill tensor with ``-(mu/|grad u|) J`` and ``L_nu J``."""
    geo = PointGeometry(dwp.ambient_chart, P)
    hs = hessian_spectrum(dwp, u, geo.p)
    G = geo.G.v
    nu, norm, _ = nu_jet(dwp, u, geo.p)
    Jj = as_jet(dwp.complex_structure(J.variables(geo.p, 1)), dwp.dim, 1)
    xi_j = -1.0 * J.einsum("ij,j->i", Jj, nu)
    # nabla_X xi for each coordinate direction X = d_i: column i
    Dxi = xi_j.g + np.einsum("kij,j->ki", geo.gamma.v, xi_j.v)
    Q = hs.frame[:, 2:]
    Jm = Jj.v
    nu_v, xi_v = hs.nu, hs.xi
    coef = hs.mu / hs.grad_norm
    res = hnorm = 0.0
    for a in range(Q.shape[1]):
        X = Q[:, a]
        w = Dxi @ X
        h = w - (nu_v @ G @ w) * nu_v
        e = h + coef * (Jm @ X)
        res = max(res, float(np.sqrt(max(e @ G @ e, 0.0))))
        hnorm = max(hnorm, float(np.sqrt(max(h @ G @ h, 0.0))))
    L = lie_derivative_J(dwp, u, geo.p)
    lcoef = hs.lam / hs.grad_norm
    target = lcoef * (np.outer(xi_v, G @ nu_v) + np.outer(nu_v, G @ xi_v))
    F = hs.frame
    Lf = np.linalg.solve(F, (L - target) @ F)
    Lq = np.linalg.solve(F, L @ F)[2:, 2:]
    return LevelFlowCheck(res, hnorm, float(np.max(np.abs(Lf))), float(np.max(np.abs(Lq))) if Lq.size else 0.0, coef, lcoef)
