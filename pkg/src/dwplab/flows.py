"""Minimal Riemannian flows with a transverse complex structure.

A flow is a chart on ``M`` (dimension ``2n - 1``) together with a unit
Killing field ``xi`` and an endomorphism field ``J`` that vanishes on ``xi``
and is a complex structure on ``Q = xi^perp``.  Everything is evaluated
pointwise through jets.

The transverse connection is handled as a connection on all of ``TM``::

    nabla'_X Y = P nabla_X (P Y) - eta(X) h(P Y) + xi X(eta(Y))

with ``P`` the orthogonal projection onto ``Q``, ``eta`` the metric dual of
``xi`` and ``h = nabla xi``.  On sections of ``Q`` it agrees with the
transverse Levi-Civita connection (``[xi, Z]^Q`` along ``xi`` and the
projected ambient derivative along ``Q``), and it preserves both ``Q`` and
the line of ``xi``, so its ordinary curvature restricted to ``Q`` is the
transverse curvature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jets as J
from .jets import Jet
from .metric import (
    DEFAULT_MARGIN,
    Chart,
    ChartDomainError,
    as_jet,
    levi_civita,
    nabla,
    riemann_from_christoffel,
    ricci_from_riemann,
)

BASIC_TOL = 1e-9


class NonBasicFunction(ValueError):
    """A function expected to be constant along the Reeb flow is not."""


@dataclass(frozen=True)
class RiemannianFlow:
    """Chart on ``M`` with Reeb field and transverse endomorphism field.

    ``reeb(x)`` and ``transverse_J(x)`` take a jet (or array) point and
    return coordinate components; ``transverse_J`` is a ``(1,1)`` tensor
    with ``J xi = 0``.  ``region`` optionally narrows the sampling box.
    """

    chart: Chart
    reeb: Callable = field(repr=False)
    transverse_J: Optional[Callable] = field(default=None, repr=False)
    label: str = ""
    region: Optional[tuple] = None
    notes: str = ""

    @property
    def dim(self) -> int:
        return self.chart.dim

    @property
    def n(self) -> int:
        """Complex dimension of the cone-like product over this flow."""
        return (self.chart.dim + 1) // 2

    def sample(self, count: int, rng: np.random.Generator, margin: float = DEFAULT_MARGIN) -> np.ndarray:
        if self.region is None:
            return self.chart.sample(count, rng, margin)
        lo = np.array([b[0] for b in self.region]) + margin
        hi = np.array([b[1] for b in self.region]) - margin
        return lo + (hi - lo) * rng.random((count, self.dim))

    def geometry(self, p) -> "FlowGeometry":
        return FlowGeometry(self, p)


def _xi_dual(G, xi):
    return J.einsum("ij,j->i", G, xi)


def projector(G, xi):
    """``P = Id - xi (x) eta`` onto ``Q``; works on jets or arrays."""
    eta = _xi_dual(G, xi)
    d = J.value(xi).shape[0]
    return np.eye(d) - J.einsum("i,j->ij", xi, eta)


class FlowGeometry:
    """Jets of all flow data at one point of ``M``."""

    def __init__(self, flow: RiemannianFlow, p, x: Optional[Jet] = None):
        self.flow = flow
        chart = flow.chart
        self.p = chart.check_point(p)
        d = chart.dim
        self.x = J.variables(self.p, 2) if x is None else x
        self.G = chart.metric_jet(self.p, 2) if x is None else as_jet(chart.metric(self.x), d)
        self.gamma = levi_civita(self.G)
        self.xi = as_jet(flow.reeb(self.x), d)
        self.eta = _xi_dual(self.G, self.xi)
        self.P = projector(self.G, self.xi)
        # h^k_i = d_i xi^k + gamma^k_ij xi^j
        self.h = J.D(self.xi).truncate(1) + J.einsum("kij,j->ki", self.gamma, self.xi)
        self.Jm = None if flow.transverse_J is None else as_jet(flow.transverse_J(self.x), d)
        self.tgamma = self._transverse_symbols()
        self._frame = None

    def _transverse_symbols(self) -> Jet:
        P, eta, xi, h, gam = self.P, self.eta, self.xi, self.h, self.gamma
        dP = J.D(P)  # dP[k, j, i] = d_i P^k_j
        t1 = J.einsum("lk,kji->lij", P, dP)
        t2 = J.einsum("lk,kim,mj->lij", P, gam, P)
        t3 = J.einsum("i,lm,mj->lij", eta, h, P)
        t4 = J.einsum("l,ji->lij", xi, J.D(eta))
        return t1 + t2 - t3 + t4

    # -- pointwise values ------------------------------------------------
    @property
    def metric(self) -> np.ndarray:
        return self.G.v

    @property
    def n(self) -> int:
        return self.flow.n

    def frame(self) -> np.ndarray:
        """Orthonormal frame of ``Q`` as columns (deterministic order)."""
        if self._frame is None:
            self._frame = q_frame(self.G.v, self.xi.v)
        return self._frame

    def oneill(self) -> np.ndarray:
        """Coordinate matrix of ``h = nabla xi``."""
        return self.h.v

    def j_matrix(self) -> np.ndarray:
        if self.Jm is None:
            raise ValueError(f"{self.flow.label}: flow carries no transverse J")
        return self.Jm.v

    def in_frame(self, A: np.ndarray) -> "TransverseEndomorphism":
        E = self.frame()
        return TransverseEndomorphism(E.T @ self.G.v @ A @ E)

    def transverse_riemann(self) -> np.ndarray:
        return riemann_from_christoffel(self.tgamma)

    def transverse_ricci(self) -> np.ndarray:
        """Transverse Ricci form in the orthonormal ``Q`` frame."""
        ric = ricci_from_riemann(self.transverse_riemann())
        E = self.frame()
        R = E.T @ ric @ E
        return 0.5 * (R + R.T)

    def transverse_derivative(self, X, Z) -> np.ndarray:
        """``nabla^_X Z`` for jet fields ``X`` and ``Z`` (``Z`` projected first)."""
        Zq = J.einsum("kj,j->k", self.P, Z)
        return J.value(nabla(self.tgamma, X, Zq))

    def killing_residual(self) -> float:
        xi, G = self.xi, self.G
        L = (
            np.einsum("k,ijk->ij", xi.v, G.g)
            + np.einsum("kj,ki->ij", G.v, xi.g)
            + np.einsum("ik,kj->ij", G.v, xi.g)
        )
        return float(np.max(np.abs(L)))

    def j_parallel_residual(self) -> float:
        """Max entry of ``nabla' J`` on ``Q`` in the orthonormal frame."""
        Jm = self.Jm
        tg = self.tgamma.v
        dJ = Jm.g  # dJ[k, j, i] = d_i J^k_j
        T = dJ + np.einsum("kim,mj->kji", tg, Jm.v) - np.einsum("mij,km->kji", tg, Jm.v)
        E = self.frame()
        full = np.concatenate([E, self.xi.v[:, None]], axis=1)
        # outputs measured with the metric, inputs on Q, directions anywhere
        L = np.linalg.cholesky(self.G.v)
        comp = np.einsum("ak,kji,jb,ic->abc", L.T, T, E, full)
        return float(np.max(np.abs(comp)))


def q_frame(G: np.ndarray, xi: np.ndarray, rel_skip: float = 1e-2) -> np.ndarray:
    """Gram-Schmidt of projected coordinate fields into an orthonormal ``Q`` frame."""
    d = G.shape[0]
    eta = G @ xi
    P = np.eye(d) - np.outer(xi, eta)
    basis = []
    for i in range(d):
        v = P[:, i].copy()
        scale = np.sqrt(max(v @ G @ v, 0.0))
        for e in basis:
            v = v - (e @ G @ v) * e
        nv = np.sqrt(max(v @ G @ v, 0.0))
        col_norm = np.sqrt(G[i, i])
        if nv <= rel_skip * max(col_norm, scale, 1e-300):
            continue
        basis.append(v / nv)
        if len(basis) == d - 1:
            break
    if len(basis) != d - 1:
        raise ChartDomainError("could not build a transverse frame at this point")
    return np.stack(basis, axis=1)


@dataclass
class TransverseEndomorphism:
    """Endomorphism of ``Q`` as a matrix in an orthonormal frame."""

    matrix: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def skew_residual(self) -> float:
        return float(np.max(np.abs(self.matrix + self.matrix.T)))

    def commutator_norm(self, other: "TransverseEndomorphism") -> float:
        A, B = self.matrix, other.matrix
        return float(np.linalg.norm(A @ B - B @ A, 2))

    def __add__(self, other):
        return TransverseEndomorphism(self.matrix + other.matrix)

    def __sub__(self, other):
        return TransverseEndomorphism(self.matrix - other.matrix)

    def __mul__(self, s):
        return TransverseEndomorphism(self.matrix * s)

    __rmul__ = __mul__


# -- operations -----------------------------------------------------------------


def oneill_tensor(flow: RiemannianFlow, p) -> TransverseEndomorphism:
    geo = FlowGeometry(flow, p)
    return geo.in_frame(geo.oneill())


def transverse_J(flow: RiemannianFlow, p) -> TransverseEndomorphism:
    geo = FlowGeometry(flow, p)
    return geo.in_frame(geo.j_matrix())


def transverse_connection(flow: RiemannianFlow, p, X, Z) -> np.ndarray:
    geo = FlowGeometry(flow, p)
    d = flow.dim
    return geo.transverse_derivative(as_jet(X(geo.x), d), as_jet(Z(geo.x), d))


def basicness_residual(flow: RiemannianFlow, f, p) -> tuple:
    """``|xi(f)|`` and the allowed threshold at ``p``."""
    p = flow.chart.check_point(p)
    x = J.variables(p, 1)
    F = as_jet(f(x), flow.dim, 1)
    xi = J.value(flow.reeb(p))
    return abs(float(xi @ F.g)), BASIC_TOL * (1.0 + float(np.linalg.norm(F.g)))


def basic_conformal_change(
    flow: RiemannianFlow, f: Callable, check_points: int = 20, seed: int = 0, label: str = ""
) -> RiemannianFlow:
    """Flow with transverse metric scaled by ``exp(2 f)`` for a basic ``f``."""
    rng = np.random.default_rng(seed)
    for p in flow.sample(check_points, rng):
        r, tol = basicness_residual(flow, f, p)
        if r >= tol:
            raise NonBasicFunction(f"xi(f) = {r:.3e} at {p.tolist()}")
    base_metric = flow.chart.metric_eval
    reeb = flow.reeb

    def metric(x):
        G = J.array(base_metric(x))
        xi = J.array(reeb(x))
        eta = _xi_dual(G, xi)
        vert = J.einsum("i,j->ij", eta, eta)
        return vert + J.exp(2.0 * f(x)) * (G - vert)

    chart = Chart(flow.dim, flow.chart.bounds, metric, label or f"{flow.chart.label}-conf")
    return RiemannianFlow(chart, reeb, flow.transverse_J, label or f"{flow.label}-conf", flow.region, flow.notes)


def rescale_reeb(flow: RiemannianFlow, alpha: float, label: str = "") -> RiemannianFlow:
    """Stretch the Reeb direction by ``alpha``; the new Reeb field is ``xi / alpha``."""
    if not alpha > 0:
        raise ValueError("rescaling factor must be positive")
    base_metric = flow.chart.metric_eval
    reeb = flow.reeb

    def metric(x):
        G = J.array(base_metric(x))
        eta = _xi_dual(G, J.array(reeb(x)))
        return G + (alpha * alpha - 1.0) * J.einsum("i,j->ij", eta, eta)

    def new_reeb(x):
        return J.array(reeb(x)) / alpha

    chart = Chart(flow.dim, flow.chart.bounds, metric, label or f"{flow.chart.label}-x{alpha:g}")
    return RiemannianFlow(chart, new_reeb, flow.transverse_J, label or f"{flow.label}-x{alpha:g}", flow.region, flow.notes)


@dataclass
class SasakiVerdict:
    residual: float
    verdict: bool
    tolerance: float
    conformal_residual: float
    witness_basic_residual: float
    witness_min: float
    witness_max: float
    conformally_sasaki: bool
    witness: list = field(default_factory=list)
    points: int = 0


def conformal_witness(geo: FlowGeometry) -> Jet:
    """Function ``C`` with ``h = -C J`` when the flow is conformally Sasaki."""
    k = geo.flow.dim - 1
    return J.einsum("km,mk->", geo.Jm.truncate(1), geo.h) / k


def is_sasaki(
    flow: RiemannianFlow, points: Optional[np.ndarray] = None, count: int = 20, seed: int = 0, tol: float = 1e-8
) -> SasakiVerdict:
    """Largest ``|h + J|`` over sample points, plus a conformal witness."""
    if points is None:
        points = flow.sample(count, np.random.default_rng(seed))
    res, cres, bres, wit = [], [], [], []
    for p in points:
        geo = FlowGeometry(flow, p)
        H = geo.in_frame(geo.oneill())
        Jq = geo.in_frame(geo.j_matrix())
        res.append((H + Jq).norm())
        C = conformal_witness(geo)
        wit.append(float(C.v))
        cres.append((H + Jq * float(C.v)).norm())
        bres.append(abs(float(geo.xi.v @ C.g)))
    residual = float(max(res))
    conf = float(max(cres))
    basic = float(max(bres))
    wmin, wmax = float(min(wit)), float(max(wit))
    return SasakiVerdict(
        residual=residual,
        verdict=residual < tol,
        tolerance=tol,
        conformal_residual=conf,
        witness_basic_residual=basic,
        witness_min=wmin,
        witness_max=wmax,
        conformally_sasaki=conf < tol and basic < tol and wmin > 0,
        witness=wit,
        points=len(points),
    )


def flow_invariants(flow: RiemannianFlow, p) -> dict:
    """Residuals of the structural invariants of a flow at ``p``."""
    geo = FlowGeometry(flow, p)
    G, xi = geo.G.v, geo.xi.v
    out = {
        "unit_reeb": abs(float(xi @ G @ xi) - 1.0),
        "killing": geo.killing_residual(),
    }
    H = geo.in_frame(geo.oneill())
    out["oneill_skew"] = H.skew_residual()
    out["oneill_on_reeb"] = float(np.max(np.abs(geo.oneill() @ xi)))
    if geo.Jm is not None:
        Jv = geo.Jm.v
        Jq = geo.in_frame(Jv).matrix
        out["j_square"] = float(np.max(np.abs(Jq @ Jq + np.eye(Jq.shape[0]))))
        out["j_orthogonal"] = float(np.max(np.abs(Jq.T @ Jq - np.eye(Jq.shape[0]))))
        out["j_on_reeb"] = float(np.max(np.abs(Jv @ xi)))
        out["j_parallel"] = geo.j_parallel_residual()
    return out


# -- model flows -------------------------------------------------------------------

_TWO_PI = 2.0 * np.pi


def _sphere_amplitudes(theta, n):
    """Moduli ``a_k`` of the coordinates of ``S^{2n-1}`` and their partials."""
    if n == 2:
        (t,) = theta
        a = [J.cos(t), J.sin(t)]
        da = [[-J.sin(t)], [J.cos(t)]]
        return a, da
    if n == 3:
        t1, t2 = theta
        s1, c1, s2, c2 = J.sin(t1), J.cos(t1), J.sin(t2), J.cos(t2)
        a = [c1, s1 * c2, s1 * s2]
        da = [[-s1, 0.0], [c1 * c2, -s1 * s2], [c1 * s2, s1 * c2]]
        return a, da
    raise ValueError("Hopf models are provided for n = 2 and n = 3")


def hopf_embedding_jacobian(x, n: int):
    """Real ``2n x (2n-1)`` Jacobian of the Hopf-coordinate embedding."""
    theta = [x[i] for i in range(n - 1)]
    phi = [x[n - 1 + k] for k in range(n)]
    a, da = _sphere_amplitudes(theta, n)
    rows = []
    for k in range(n):
        c, s = J.cos(phi[k]), J.sin(phi[k])
        re_row, im_row = [], []
        for m in range(n - 1):
            re_row.append(da[k][m] * c)
            im_row.append(da[k][m] * s)
        for m in range(n):
            if m == k:
                re_row.append(-a[k] * s)
                im_row.append(a[k] * c)
            else:
                re_row.append(0.0)
                im_row.append(0.0)
        rows.append(re_row)
        rows.append(im_row)
    return J.array(rows)


def _complex_structure_matrix(n: int) -> np.ndarray:
    I = np.zeros((2 * n, 2 * n))
    for k in range(n):
        I[2 * k + 1, 2 * k] = 1.0
        I[2 * k, 2 * k + 1] = -1.0
    return I


def hopf_sphere(n: int = 2, orientation: int = 1) -> RiemannianFlow:
    """Unit Hopf flow on ``S^{2n-1}`` in Hopf coordinates.

    Coordinates are ``(theta_1..theta_{n-1}, phi_1..phi_n)``; the Reeb field
    is ``sum_k d/dphi_k`` (multiplication by ``i``) and ``J`` is
    ``-orientation * i`` restricted to ``Q``, so ``orientation=1`` gives
    ``h = -J``.
    """
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    d = 2 * n - 1
    Icx = _complex_structure_matrix(n)

    def metric(x):
        theta = [x[i] for i in range(n - 1)]
        a, _ = _sphere_amplitudes(theta, n)
        diag = [1.0] * (n - 1)
        if n == 3:
            diag[1] = J.sin(theta[0]) ** 2
        diag += [ak * ak for ak in a]
        return [[diag[i] if i == j else 0.0 for j in range(d)] for i in range(d)]

    def reeb(x):
        return np.array([0.0] * (n - 1) + [1.0] * n)

    def jmat(x):
        Dphi = hopf_embedding_jacobian(x, n)
        G = J.array(metric(x))
        xi = reeb(x)
        P = projector(G, xi)
        A = J.einsum("ai,ab,bj->ij", Dphi, Icx, Dphi)
        return -orientation * J.einsum("ik,kl,lj->ij", J.inv(G), A, P)

    bounds = [(0.0, np.pi / 2)] * (n - 1) + [(0.0, _TWO_PI)] * n
    if n == 3:
        bounds[1] = (0.0, np.pi / 2)
    chart = Chart(d, bounds, metric, f"hopf-s{d}")
    notes = "valid away from the coordinate poles theta in {0, pi/2}"
    return RiemannianFlow(chart, reeb, jmat, f"hopf-s{d}", None, notes)


def heisenberg(orientation: int = 1, half_width: float = 2.0) -> RiemannianFlow:
    """Heisenberg flow: ``g = eta^2 + dx^2 + dy^2`` with ``eta = dz + x dy - y dx``.

    The transverse frame ``X1 = d_x + y d_z``, ``X2 = d_y - x d_z`` satisfies
    ``[X1, X2] = -2 d_z``; with ``J X1 = -X2`` this gives ``h = -J``, i.e.
    ``d eta(Y, Z) = -2 g(J Y, Z)`` on ``Q``.
    """
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")

    def metric(x):
        e = J.stack([-x[1], x[0], 1.0])
        return np.diag([1.0, 1.0, 0.0]) + J.einsum("i,j->ij", e, e)

    def reeb(x):
        return np.array([0.0, 0.0, 1.0])

    def jmat(x):
        X1 = J.stack([1.0, 0.0, x[1]])
        X2 = J.stack([0.0, 1.0, -x[0]])
        dx = np.array([1.0, 0.0, 0.0])
        dy = np.array([0.0, 1.0, 0.0])
        return orientation * (J.einsum("i,j->ij", X1, dy) - J.einsum("i,j->ij", X2, dx))

    w = float(half_width)
    chart = Chart(3, [(-w, w)] * 3, metric, "heisenberg3")
    notes = "global coordinates; sampling box [-w, w]^3"
    return RiemannianFlow(chart, reeb, jmat, "heisenberg3", None, notes)


def flat_product(orientation: int = 1, half_width: float = 2.0) -> RiemannianFlow:
    """Product flow ``R_s x R^2`` with Reeb ``d_s`` and ``J d_x = d_y``."""

    def metric(x):
        return np.eye(3)

    def reeb(x):
        return np.array([1.0, 0.0, 0.0])

    Jm = orientation * np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])

    def jmat(x):
        return Jm

    w = float(half_width)
    chart = Chart(3, [(-w, w)] * 3, metric, "flat-product")
    return RiemannianFlow(chart, reeb, jmat, "flat-product", None, "Euclidean coordinates (s, x, y)")


MODEL_IDS = ("hopf-s3", "hopf-s5", "heisenberg3", "flat-product")


def get_model(model_id: str, orientation: int = 1) -> RiemannianFlow:
    if model_id == "hopf-s3":
        return hopf_sphere(2, orientation)
    if model_id == "hopf-s5":
        return hopf_sphere(3, orientation)
    if model_id == "heisenberg3":
        return heisenberg(orientation)
    if model_id == "flat-product":
        return flat_product(orientation)
    raise KeyError(f"unknown model id {model_id!r}; known: {', '.join(MODEL_IDS)}")


def model_catalog(orientation: int = 1) -> list:
    return [get_model(m, orientation) for m in MODEL_IDS]
