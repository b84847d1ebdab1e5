"""Coordinate tensor calculus on a single chart.

All derivative information comes from :mod:`dwplab.jets`: the metric is
evaluated on order-2 seed jets, Christoffel symbols come out as order-1 jets
and curvature as plain arrays.  A central finite-difference mode builds the
same jets from sampled metric values and serves as an independent oracle.

Index conventions (``d`` = chart dimension):

* ``gamma[k, i, j]`` is the Christoffel symbol with upper index ``k``.
* ``riemann[l, k, i, j]`` is the ``l`` component of ``R(d_i, d_j) d_k`` with
  ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]``.
* ``ricci[j, k] = sum_i riemann[i, k, i, j]``; the round sphere is positive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import jets as J
from .jets import Jet

DEFAULT_MARGIN = 1e-2
DEFAULT_TOL = 1e-8
FD_STEP = 1e-4

VectorField = Callable[[object], object]
ScalarField = Callable[[object], object]


class ChartDomainError(ValueError):
    """Point lies outside the open coordinate box of a chart."""


class DegenerateMetricError(ValueError):
    """Metric matrix failed the positive-definiteness test."""


@dataclass(frozen=True)
class Chart:
    """Coordinate box with a metric evaluator generic over jets and arrays.

    ``domain`` optionally narrows the box to a non-rectangular region.
    """

    dim: int
    bounds: tuple
    metric_eval: Callable = field(repr=False)
    label: str = ""
    domain: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(b) != self.dim:
            raise ValueError("bounds must have one interval per coordinate")
        if any(lo >= hi for lo, hi in b):
            raise ValueError("empty coordinate interval")
        object.__setattr__(self, "bounds", b)

    def contains(self, p, margin: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            return False
        if not all(lo + margin < x < hi - margin for x, (lo, hi) in zip(p, self.bounds)):
            return False
        return self.domain is None or bool(self.domain(p))

    def check_point(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            raise ChartDomainError(f"{self.label}: expected a point of dimension {self.dim}")
        if not self.contains(p):
            raise ChartDomainError(f"{self.label}: point {p.tolist()} outside chart bounds")
        return p

    def metric(self, x):
        """Evaluate the metric on ``x`` (jet or array) as a matrix-like."""
        return J.array(self.metric_eval(x))

    def metric_value(self, p) -> np.ndarray:
        p = self.check_point(p)
        G = np.asarray(J.value(self.metric(p)), dtype=float)
        _check_spd(G, self.label, p)
        return G

    def metric_jet(self, p, order: int = 2) -> Jet:
        p = self.check_point(p)
        G = self.metric(J.variables(p, order))
        if not isinstance(G, Jet):
            G = _constant_jet(G, self.dim, order)
        _check_spd(G.v, self.label, p)
        return G

    def sample(self, count: int, rng: np.random.Generator, margin: float = DEFAULT_MARGIN) -> np.ndarray:
        """Uniform points at least ``margin`` inside every bound."""
        lo = np.array([b[0] for b in self.bounds]) + margin
        hi = np.array([b[1] for b in self.bounds]) - margin
        lo = np.where(np.isfinite(lo), lo, -10.0)
        hi = np.where(np.isfinite(hi), hi, 10.0)
        return lo + (hi - lo) * rng.random((count, self.dim))


def _check_spd(G: np.ndarray, label: str, p) -> None:
    if not np.all(np.isfinite(G)):
        raise DegenerateMetricError(f"{label}: non-finite metric at {np.asarray(p).tolist()}")
    if np.max(np.abs(G - G.T)) > 1e-12 * max(1.0, np.max(np.abs(G))):
        raise DegenerateMetricError(f"{label}: metric not symmetric at {np.asarray(p).tolist()}")
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMetricError(f"{label}: metric not positive definite at {np.asarray(p).tolist()}") from exc
    if np.min(np.abs(np.diag(L))) < 1e-7 * np.sqrt(np.max(np.abs(G))):
        raise DegenerateMetricError(f"{label}: metric nearly singular at {np.asarray(p).tolist()}")


def _constant_jet(v, d: int, order: int) -> Jet:
    v = np.asarray(v, dtype=float)
    g = np.zeros(v.shape + (d,)) if order >= 1 else None
    h = np.zeros(v.shape + (d, d)) if order >= 2 else None
    return Jet(v, g, h)


def as_jet(x, d: int, order: int = 2) -> Jet:
    """Promote constants to jets with vanishing derivatives."""
    x = J.array(x)
    if isinstance(x, Jet):
        return x
    return _constant_jet(x, d, order)


# -- finite-difference oracle -------------------------------------------------


def metric_fd_jet(chart: Chart, p, h: float = FD_STEP) -> Jet:
    """Order-2 jet of the metric from Richardson-extrapolated central differences."""
    p = chart.check_point(p)
    d = chart.dim
    E = np.eye(d)

    def g(q):
        return np.asarray(J.value(chart.metric(q)), dtype=float)

    def first(step):
        return np.stack([(g(p + step * E[l]) - g(p - step * E[l])) / (2 * step) for l in range(d)], axis=-1)

    def second(step):
        out = np.zeros((d, d, d, d))
        g0 = g(p)
        for a in range(d):
            for b in range(a, d):
                if a == b:
                    val = (g(p + step * E[a]) - 2 * g0 + g(p - step * E[a])) / step**2
                else:
                    val = (
                        g(p + step * (E[a] + E[b]))
                        - g(p + step * (E[a] - E[b]))
                        - g(p - step * (E[a] - E[b]))
                        + g(p - step * (E[a] + E[b]))
                    ) / (4 * step**2)
                out[:, :, a, b] = val
                out[:, :, b, a] = val
        return out

    G0 = g(p)
    _check_spd(G0, chart.label, p)
    dG = (4 * first(h / 2) - first(h)) / 3
    ddG = (4 * second(h / 2) - second(h)) / 3
    return Jet(G0, dG, ddG)


# -- jet-level geometry ------------------------------------------------------


def levi_civita(G: Jet) -> Jet:
    """Christoffel symbols ``gamma[k, i, j]`` as a jet one order below ``G``."""
    dG = J.D(G)  # dG[i, j, l] = d_l g_ij
    Ginv = J.inv(G.truncate(dG.order))
    first = J.einsum("kl,jli->kij", Ginv, dG)
    second = J.einsum("kl,ilj->kij", Ginv, dG)
    third = J.einsum("kl,ijl->kij", Ginv, dG)
    return 0.5 * (first + second - third)


def riemann_from_christoffel(gamma: Jet) -> np.ndarray:
    """``riemann[l, k, i, j]`` for any connection given by coordinate symbols."""
    g0 = J.value(gamma)
    dg = J.value(J.D(gamma))  # dg[l, j, k, i] = d_i gamma^l_jk
    term = np.einsum("ljki->lkij", dg)
    quad = np.einsum("lim,mjk->lkij", g0, g0)
    return term - np.swapaxes(term, -1, -2) + quad - np.swapaxes(quad, -1, -2)


def ricci_from_riemann(riem: np.ndarray) -> np.ndarray:
    return np.einsum("ikij->jk", riem)


def nabla(gamma, X, Y):
    """Covariant derivative ``nabla_X Y`` of jet fields (order drops by one)."""
    return J.einsum("i,ki->k", X, J.D(Y)) + J.einsum("kij,i,j->k", gamma, X, Y)


def bracket(X, Y):
    """Lie bracket of jet vector fields."""
    return J.einsum("i,ki->k", X, J.D(Y)) - J.einsum("i,ki->k", Y, J.D(X))


def inner(G, X, Y):
    return J.einsum("ij,i,j->", G, X, Y)


def directional(X, f):
    """Derivative ``X(f)`` of a scalar jet."""
    return J.einsum("i,i->", X, J.D(f))


def field_jet(F: VectorField, x: Jet):
    """Evaluate a field callable on the seed ``x`` and promote constants."""
    return as_jet(F(x), x.nvars, x.order)


# -- point-level results -----------------------------------------------------


@dataclass
class ConnectionCoefficients:
    gamma: np.ndarray

    def symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.gamma - np.swapaxes(self.gamma, 1, 2))))


@dataclass
class CurvatureAtPoint:
    riemann: np.ndarray
    ricci02: np.ndarray
    ricci11: np.ndarray
    scalar: float

    def antisymmetry_residual(self) -> float:
        return float(np.max(np.abs(self.riemann + np.swapaxes(self.riemann, 2, 3))))

    def bianchi_residual(self) -> float:
        # R(X,Y)Z + R(Y,Z)X + R(Z,X)Y with riem[l,k,i,j] ~ R(i,j)k
        R = self.riemann
        cyc = R + R.transpose(0, 3, 1, 2) + R.transpose(0, 2, 3, 1)
        return float(np.max(np.abs(cyc)))


class PointGeometry:
    """Metric, inverse and connection jets of a chart at one point."""

    def __init__(self, chart: Chart, p, mode: str = "jet"):
        self.chart = chart
        self.p = chart.check_point(p)
        if mode == "jet":
            self.G = chart.metric_jet(self.p, 2)
        elif mode == "fd":
            self.G = metric_fd_jet(chart, self.p)
        else:
            raise ValueError(f"unknown differentiation mode {mode!r}")
        self.mode = mode
        self.x = J.variables(self.p, 2)
        self.gamma = levi_civita(self.G)
        self.Ginv = J.inv(self.G.truncate(1))

    @property
    def metric(self) -> np.ndarray:
        return self.G.v

    @property
    def scale(self) -> float:
        return float(max(1.0, np.max(np.abs(self.G.v))))

    def connection(self) -> ConnectionCoefficients:
        return ConnectionCoefficients(self.gamma.v.copy())

    def curvature(self) -> CurvatureAtPoint:
        riem = riemann_from_christoffel(self.gamma)
        ric = ricci_from_riemann(riem)
        ric11 = np.linalg.solve(self.G.v, ric)
        return CurvatureAtPoint(riem, ric, ric11, float(np.trace(ric11)))

    def field(self, F: VectorField) -> Jet:
        return field_jet(F, self.x)

    def compatibility_residual(self) -> float:
        dG = self.G.g
        g = self.gamma.v
        r = np.einsum("jki->ijk", dG) - np.einsum("lij,lk->ijk", g, self.G.v) - np.einsum("lik,jl->ijk", g, self.G.v)
        return float(np.max(np.abs(r)))


def christoffel(chart: Chart, p, mode: str = "jet") -> ConnectionCoefficients:
    return PointGeometry(chart, p, mode).connection()


def covariant_derivative(chart: Chart, p, X: VectorField, Y: VectorField) -> np.ndarray:
    geo = PointGeometry(chart, p)
    return J.value(nabla(geo.gamma, geo.field(X), geo.field(Y)))


def riemann_ricci(chart: Chart, p, mode: str = "jet") -> CurvatureAtPoint:
    return PointGeometry(chart, p, mode).curvature()


def gradient_hessian(chart: Chart, p, u: ScalarField):
    """Gradient vector and (0,2) Hessian of a scalar field at ``p``."""
    geo = PointGeometry(chart, p)
    U = as_jet(u(geo.x), chart.dim)
    du = U.g
    hess = U.h - np.einsum("kij,k->ij", geo.gamma.v, du)
    grad = np.linalg.solve(geo.G.v, du)
    return grad, 0.5 * (hess + hess.T)


def lie_bracket(chart: Chart, p, X: VectorField, Y: VectorField) -> np.ndarray:
    p = chart.check_point(p)
    x = J.variables(p, 2)
    return J.value(bracket(field_jet(X, x), field_jet(Y, x)))


def scaled_tolerance(G: np.ndarray, tol: float = DEFAULT_TOL) -> float:
    return tol * max(1.0, float(np.max(np.abs(G))))


def dump_tensors(chart: Chart, p, mode: str = "jet") -> str:
    """JSON debug dump of metric, connection and curvature at ``p``."""
    geo = PointGeometry(chart, p, mode)
    curv = geo.curvature()
    payload = {
        "chart": chart.label,
        "point": geo.p.tolist(),
        "mode": mode,
        "metric": geo.G.v.tolist(),
        "christoffel": geo.gamma.v.tolist(),
        "riemann": curv.riemann.tolist(),
        "ricci": curv.ricci02.tolist(),
        "scalar": curv.scalar,
    }
    return json.dumps(payload, indent=1)


def coordinate_field(i: int, dim: int) -> VectorField:
    e = np.eye(dim)[i]
    return lambda x: e


def polynomial_field(coeffs: np.ndarray, center: Sequence[float]) -> VectorField:
    """Vector field with quadratic polynomial components around ``center``.

    ``coeffs`` has shape ``(dim, 1 + dim + dim)``: constant, linear and
    pure quadratic coefficients per component.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    c = np.asarray(center, dtype=float)

    def F(x):
        y = x - c
        comps = []
        for row in coeffs:
            d = len(c)
            val = row[0] + J.einsum("i,i->", y, row[1 : 1 + d]) + J.einsum("i,i,i->", y, y, row[1 + d :])
            comps.append(val)
        return J.stack(comps)

    return F
