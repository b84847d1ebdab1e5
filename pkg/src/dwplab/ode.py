"""The first-order warping ODE ``rho' = sqrt(f(rho))`` with

    f(x) = -eps x^2 + D x^(-2n) + c/n,

its regime classification, closed-form solutions for ``D = 0`` and a
singularity-aware integrator.

Classification works on the sign structure of ``f``: ``f`` has at most one
critical point on ``(0, inf)``, hence at most two positive roots.  The
solution through ``rho(0)`` lives in the connected component of ``{f > 0}``
containing ``rho(0)``; a simple root bounding it is reached in finite time,
a double root only asymptotically, ``rho -> 0`` with ``D > 0`` happens in
finite time with ``rho' -> inf``, and ``rho -> inf`` always takes infinite
time because ``f`` grows at most quadratically.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate as sint
from scipy import optimize as sopt


class InfeasibleInitialCondition(ValueError):
    """``f(rho0) <= 0`` although the ODE has solutions for other ``rho0``."""


class NoSolution(ValueError):
    """``f <= 0`` on all of ``(0, inf)``: no solution with positive slope."""


class IntegrationError(RuntimeError):
    """Step-size collapse away from the roots of ``f``."""


class RegimeKind(str, enum.Enum):
    NO_SOLUTION = "no_solution"
    GLOBAL_ON_R = "global_on_r"
    MAXIMAL_INTERVAL = "maximal_interval"


class EndpointKind(str, enum.Enum):
    FINITE_TIME_ROOT = "finite_time_root"
    INFINITE_TIME = "infinite_time"
    BLOWUP = "blowup"


class ClosedForm(str, enum.Enum):
    COSH = "cosh"
    EXP = "exp"
    SINH = "sinh"
    LINEAR = "linear"
    SIN = "sin"
    NONE = "none"


@dataclass(frozen=True)
class OdeParams:
    n: int
    eps: int
    c: float
    D: float
    rho0: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        if self.eps not in (-1, 0, 1):
            raise ValueError("eps must be -1, 0 or 1")
        if not self.rho0 > 0:
            raise ValueError("rho0 must be positive")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "eps", int(self.eps))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "D", float(self.D))
        object.__setattr__(self, "rho0", float(self.rho0))

    @property
    def C(self) -> float:
        """Einstein constant in the normalization ``C = 2 (n + 1) eps``."""
        return 2.0 * (self.n + 1) * self.eps

    def with_rho0(self, rho0: float) -> "OdeParams":
        return OdeParams(self.n, self.eps, self.c, self.D, rho0)

    # -- the potential -----------------------------------------------------
    def f(self, x):
        x = np.asarray(x, dtype=float)
        base = -self.eps * x * x + self.c / self.n
        if self.D == 0:
            return base
        with np.errstate(over="ignore", divide="ignore"):
            return base + self.D * x ** (-2 * self.n)

    def df(self, x):
        x = np.asarray(x, dtype=float)
        n = self.n
        with np.errstate(over="ignore", divide="ignore"):
            return -2.0 * self.eps * x - 2.0 * n * self.D * x ** (-2 * n - 1)

    def d2f(self, x):
        x = np.asarray(x, dtype=float)
        n = self.n
        with np.errstate(over="ignore", divide="ignore"):
            return -2.0 * self.eps + 2.0 * n * (2 * n + 1) * self.D * x ** (-2 * n - 2)

    def d3f(self, x):
        x = np.asarray(x, dtype=float)
        n = self.n
        return -2.0 * n * (2 * n + 1) * (2 * n + 2) * self.D * x ** (-2 * n - 3)

    def scale(self, x) -> float:
        """Magnitude of the terms of ``f`` at ``x`` (for relative tests)."""
        x = float(x)
        return abs(self.eps) * x * x + abs(self.D) * x ** (-2 * self.n) + abs(self.c) / self.n

    def inv_sqrt_f(self, x):
        """``1 / sqrt(f)`` written as ``x^n / sqrt(x^2n f)`` to stay finite near 0."""
        x = np.asarray(x, dtype=float)
        n = self.n
        with np.errstate(divide="ignore", invalid="ignore"):
            x2n = x ** (2 * n)
            g = -self.eps * x2n * x * x + self.D + (self.c / self.n) * x2n
            return x**n / np.sqrt(g)

    def z(self, rho, rhop):
        return np.asarray(rhop) ** 2 + self.eps * np.asarray(rho) ** 2


def feasible_rho0(p: OdeParams) -> Optional[float]:
    """A starting radius inside a component of ``{f > 0}``, or ``None``.

    Prefers ``p.rho0`` when it is already feasible, then the middle of the
    bounded component, then a point past the largest root.
    """
    if float(p.f(p.rho0)) > 0:
        return p.rho0
    if not sup_f_positive(p):
        return None
    xs = [r.x for r in find_roots(p)]
    cands = []
    if len(xs) >= 2:
        cands.append(0.5 * (xs[0] + xs[1]))
    if xs:
        cands += [0.5 * xs[0], 2.0 * xs[-1], xs[-1] + 1.0]
    cands += [0.5, 2.0, 0.1, 10.0]
    for x in cands:
        if float(p.f(x)) > 0:
            return float(x)
    return None


def f_potential(params: OdeParams, x: float) -> float:
    if not x > 0:
        raise ValueError("f is defined for x > 0 only")
    return float(params.f(x))


# -- roots ---------------------------------------------------------------------


@dataclass(frozen=True)
class Root:
    x: float
    double: bool


def critical_point(p: OdeParams) -> Optional[float]:
    """Unique positive zero of ``f'`` if there is one."""
    if p.eps == 0 or p.D == 0:
        return None
    q = -p.n * p.D / p.eps
    if q <= 0:
        return None
    return q ** (1.0 / (2 * p.n + 2))


def _sign_near_zero(p: OdeParams) -> int:
    if p.D != 0:
        return int(np.sign(p.D))
    if p.c != 0:
        return int(np.sign(p.c))
    return -p.eps


def _sign_near_inf(p: OdeParams) -> int:
    if p.eps != 0:
        return -p.eps
    if p.c != 0:
        return int(np.sign(p.c))
    return int(np.sign(p.D))


def _bracket_toward(p: OdeParams, start: float, target_sign: int, factor: float) -> Optional[float]:
    x = start
    for _ in range(4000):
        x *= factor
        if x <= 1e-300 or x >= 1e300:
            return None
        v = float(p.f(x))
        if np.isfinite(v) and np.sign(v) == target_sign:
            return x
    return None


def _polish(p: OdeParams, x: float) -> float:
    for _ in range(3):
        d = float(p.df(x))
        if d == 0:
            break
        step = float(p.f(x)) / d
        if abs(step) > 1e-8 * x:
            break
        x = x - step
    return x


def find_roots(p: OdeParams) -> list:
    """Positive roots of ``f`` (sorted); a tangential zero is flagged ``double``."""
    xc = critical_point(p)
    if xc is not None:
        fc = float(p.f(xc))
        if abs(fc) <= 1e-13 * p.scale(xc):
            return [Root(xc, True)]
    if p.D == 0:
        # f = -eps x^2 + c/n
        if p.eps != 0 and p.c / (p.n * p.eps) > 0:
            return [Root(math.sqrt(p.c / (p.n * p.eps)), False)]
        return []
    pieces = [(0.0, xc), (xc, math.inf)] if xc is not None else [(0.0, math.inf)]
    roots = []
    for lo, hi in pieces:
        s_lo = _sign_near_zero(p) if lo == 0.0 else int(np.sign(p.f(lo)))
        s_hi = _sign_near_inf(p) if hi == math.inf else int(np.sign(p.f(hi)))
        if s_lo == 0 or s_hi == 0 or s_lo == s_hi:
            continue
        mid = xc if xc is not None else 1.0
        a = lo if lo > 0 else _bracket_toward(p, mid, s_lo, 0.5)
        b = hi if hi < math.inf else _bracket_toward(p, mid, s_hi, 2.0)
        if a is None or b is None:
            continue
        r = sopt.brentq(lambda x: float(p.f(x)), a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        roots.append(Root(_polish(p, r), False))
    return sorted(roots, key=lambda r: r.x)


def sup_f_positive(p: OdeParams) -> bool:
    """Whether ``f > 0`` somewhere on ``(0, inf)``."""
    if _sign_near_zero(p) > 0 or _sign_near_inf(p) > 0:
        return True
    xc = critical_point(p)
    if xc is not None:
        roots = find_roots(p)
        if roots and roots[0].double:
            return False
        return float(p.f(xc)) > 0
    if p.D == 0 and p.eps == 0:
        return p.c > 0
    return False


# -- travel times ----------------------------------------------------------------


def _near_root_inv_sqrt(p: OdeParams, r: float, u: np.ndarray, side: int) -> np.ndarray:
    """``1/sqrt(f(r + side*u))`` using a Taylor model when ``u`` is tiny."""
    x = r + side * u
    direct = p.inv_sqrt_f(x)
    small = u < 1e-6 * max(r, 1e-300)
    if np.any(small):
        us = side * u[small]
        fr = float(p.f(r))
        model = fr + float(p.df(r)) * us + 0.5 * float(p.d2f(r)) * us**2 + float(p.d3f(r)) * us**3 / 6.0
        direct = np.where(small, 0.0, direct)
        direct[small] = 1.0 / np.sqrt(np.abs(model))
    return direct


def travel_time(p: OdeParams, lo: float, hi: float, lo_root: bool = False, hi_root: bool = False) -> float:
    """``int_lo^hi dx / sqrt(f)`` with square-root substitutions at simple roots."""
    if hi <= lo:
        return 0.0
    if math.isinf(hi):
        return math.inf
    mid = 0.5 * (lo + hi)
    opts = dict(epsabs=1e-14, epsrel=1e-12, limit=200)
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        # quad reports roundoff once it hits the 1e-14 floor; the value is still good
        warnings.simplefilter("ignore", sint.IntegrationWarning)
        return _travel_pieces(p, lo, mid, hi, lo_root, hi_root, opts)


def _travel_pieces(p, lo, mid, hi, lo_root, hi_root, opts):

    def piece_lo():
        if lo_root and lo > 0:
            w = math.sqrt(mid - lo)
            fn = lambda s: 2.0 * s * float(_near_root_inv_sqrt(p, lo, np.array([s * s]), +1)[0])
            return sint.quad(fn, 0.0, w, **opts)[0]
        return sint.quad(lambda x: float(p.inv_sqrt_f(x)), lo, mid, **opts)[0]

    def piece_hi():
        if hi_root:
            w = math.sqrt(hi - mid)
            fn = lambda s: 2.0 * s * float(_near_root_inv_sqrt(p, hi, np.array([s * s]), -1)[0])
            return sint.quad(fn, 0.0, w, **opts)[0]
        return sint.quad(lambda x: float(p.inv_sqrt_f(x)), mid, hi, **opts)[0]

    return piece_lo() + piece_hi()


# -- classification ------------------------------------------------------------------


@dataclass(frozen=True)
class Endpoint:
    kind: EndpointKind
    rho_limit: float
    t: float


@dataclass(frozen=True)
class OdeRegime:
    kind: RegimeKind
    left: Optional[Endpoint]
    right: Optional[Endpoint]
    roots: tuple
    closed_form: ClosedForm
    interval: tuple
    source: str
    double_roots: tuple = ()


def closed_form_tag(p: OdeParams) -> ClosedForm:
    if p.D != 0:
        return ClosedForm.NONE
    if p.eps == -1:
        return ClosedForm.COSH if p.c < 0 else (ClosedForm.EXP if p.c == 0 else ClosedForm.SINH)
    if p.c > 0:
        return ClosedForm.LINEAR if p.eps == 0 else ClosedForm.SIN
    return ClosedForm.NONE


def decision_tree(p: OdeParams) -> tuple:
    """Regime kind and closed-form tag read directly off the case analysis.

    Covers ``D <= 0`` and the special global case with ``D > 0``; returns
    ``None`` as kind where the analysis is only sketched.
    """
    n, eps, c, D = p.n, p.eps, p.c, p.D
    if D == 0:
        if eps == -1:
            tag = closed_form_tag(p)
            return (RegimeKind.GLOBAL_ON_R if c == 0 else RegimeKind.MAXIMAL_INTERVAL), tag
        if c <= 0:
            return RegimeKind.NO_SOLUTION, ClosedForm.NONE
        return RegimeKind.MAXIMAL_INTERVAL, closed_form_tag(p)
    if D < 0:
        if eps == -1:
            return RegimeKind.MAXIMAL_INTERVAL, ClosedForm.NONE
        if eps == 0:
            return (RegimeKind.NO_SOLUTION if c <= 0 else RegimeKind.MAXIMAL_INTERVAL), ClosedForm.NONE
        threshold = (n + 1) * (-n * D) ** (1.0 / (n + 1))
        return (RegimeKind.NO_SOLUTION if c <= threshold else RegimeKind.MAXIMAL_INTERVAL), ClosedForm.NONE
    if eps == -1 and is_special_global(p):
        return RegimeKind.GLOBAL_ON_R, ClosedForm.NONE
    return None, ClosedForm.NONE


def is_special_global(p: OdeParams, rel: float = 1e-12) -> bool:
    """``D > 0``, ``eps = -1``, ``c = -(n+1)(nD)^(1/(n+1))`` and ``rho0`` past the tangency."""
    if not (p.D > 0 and p.eps == -1):
        return False
    target = -(p.n + 1) * (p.n * p.D) ** (1.0 / (p.n + 1))
    if abs(p.c - target) > rel * abs(target):
        return False
    return p.rho0 > (p.n * p.D) ** (1.0 / (2 * p.n + 2))


def closed_form_interval(p: OdeParams) -> tuple:
    tag = closed_form_tag(p)
    n, c, r0 = p.n, p.c, p.rho0
    if tag is ClosedForm.COSH:
        return (-math.acosh(r0 * math.sqrt(-n / c)), math.inf)
    if tag is ClosedForm.EXP:
        return (-math.inf, math.inf)
    if tag is ClosedForm.SINH:
        return (-math.asinh(r0 * math.sqrt(n / c)), math.inf)
    if tag is ClosedForm.LINEAR:
        return (-math.sqrt(n / c) * r0, math.inf)
    if tag is ClosedForm.SIN:
        ph = math.asin(r0 * math.sqrt(n / c))
        return (-ph, math.pi / 2 - ph)
    raise ValueError("no closed form for these parameters")


def closed_form_eval(p: OdeParams, t):
    """Closed-form ``rho(t)`` for ``D = 0``; ``t`` must lie in the maximal interval."""
    if p.D != 0:
        raise ValueError("closed forms exist only for D = 0")
    tag = closed_form_tag(p)
    if tag is ClosedForm.NONE:
        raise NoSolution("no solution with positive slope for these parameters")
    if float(p.f(p.rho0)) <= 0:
        raise InfeasibleInitialCondition(f"f(rho0) = {float(p.f(p.rho0)):.3e} <= 0")
    lo, hi = closed_form_interval(p)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= lo) or np.any(t_arr >= hi):
        raise ValueError(f"t outside the maximal interval ({lo}, {hi})")
    n, c, r0 = p.n, p.c, p.rho0
    if tag is ClosedForm.COSH:
        a = math.sqrt(-c / n)
        return a * np.cosh(t_arr + math.acosh(r0 / a))
    if tag is ClosedForm.EXP:
        return r0 * np.exp(t_arr)
    if tag is ClosedForm.SINH:
        a = math.sqrt(c / n)
        return a * np.sinh(t_arr + math.asinh(r0 / a))
    if tag is ClosedForm.LINEAR:
        return t_arr * math.sqrt(c / n) + r0
    a = math.sqrt(c / n)
    return a * np.sin(t_arr + math.asin(r0 / a))


def closed_form_derivatives(p: OdeParams, t, order: int = 3) -> np.ndarray:
    """Exact ``rho, rho', ..., rho^(order)`` of the closed form at ``t``."""
    tag = closed_form_tag(p)
    closed_form_eval(p, t)  # domain checks
    t = float(t)
    n, c, r0 = p.n, p.c, p.rho0
    out = []
    for k in range(order + 1):
        if tag is ClosedForm.COSH:
            a = math.sqrt(-c / n)
            s = t + math.acosh(r0 / a)
            out.append(a * (math.cosh(s) if k % 2 == 0 else math.sinh(s)))
        elif tag is ClosedForm.EXP:
            out.append(r0 * math.exp(t))
        elif tag is ClosedForm.SINH:
            a = math.sqrt(c / n)
            s = t + math.asinh(r0 / a)
            out.append(a * (math.sinh(s) if k % 2 == 0 else math.cosh(s)))
        elif tag is ClosedForm.LINEAR:
            out.append([t * math.sqrt(c / n) + r0, math.sqrt(c / n)][k] if k < 2 else 0.0)
        else:
            a = math.sqrt(c / n)
            s = t + math.asin(r0 / a)
            out.append(a * [math.sin(s), math.cos(s), -math.sin(s), -math.cos(s)][k % 4])
    return np.array(out)


def _component(p: OdeParams, roots: list) -> tuple:
    r0 = p.rho0
    left = [r for r in roots if r.x < r0]
    right = [r for r in roots if r.x > r0]
    a = left[-1] if left else None
    b = right[0] if right else None
    return a, b


def classify(p: OdeParams) -> OdeRegime:
    """Regime of the maximal solution through ``rho(0) = rho0``."""
    roots = find_roots(p)
    tag = closed_form_tag(p)
    tree_kind, _ = decision_tree(p)
    source = "decision_tree" if tree_kind is not None else "inferred"
    root_vals = tuple(r.x for r in roots)
    doubles = tuple(r.x for r in roots if r.double)
    if not sup_f_positive(p):
        return OdeRegime(RegimeKind.NO_SOLUTION, None, None, root_vals, ClosedForm.NONE, (), source, doubles)
    f0 = float(p.f(p.rho0))
    if not f0 > 0:
        raise InfeasibleInitialCondition(f"f(rho0) = {f0:.3e} <= 0 at rho0 = {p.rho0}")
    a, b = _component(p, roots)
    r0 = p.rho0
    # left end (backward in time)
    if a is not None:
        if a.double:
            left = Endpoint(EndpointKind.INFINITE_TIME, a.x, -math.inf)
        else:
            left = Endpoint(EndpointKind.FINITE_TIME_ROOT, a.x, -travel_time(p, a.x, r0, lo_root=True))
    elif p.D > 0:
        left = Endpoint(EndpointKind.BLOWUP, 0.0, -travel_time(p, 0.0, r0))
    elif p.D == 0 and p.c > 0:
        left = Endpoint(EndpointKind.FINITE_TIME_ROOT, 0.0, -travel_time(p, 0.0, r0))
    else:
        left = Endpoint(EndpointKind.INFINITE_TIME, 0.0, -math.inf)
    # right end (forward in time)
    if b is None:
        right = Endpoint(EndpointKind.INFINITE_TIME, math.inf, math.inf)
    elif b.double:
        right = Endpoint(EndpointKind.INFINITE_TIME, b.x, math.inf)
    else:
        right = Endpoint(EndpointKind.FINITE_TIME_ROOT, b.x, travel_time(p, r0, b.x, hi_root=True))
    if tag is not ClosedForm.NONE:
        lo, hi = closed_form_interval(p)
        left = Endpoint(left.kind, left.rho_limit, lo)
        right = Endpoint(right.kind, right.rho_limit, hi)
    kind = RegimeKind.GLOBAL_ON_R if math.isinf(left.t) and math.isinf(right.t) else RegimeKind.MAXIMAL_INTERVAL
    return OdeRegime(kind, left, right, root_vals, tag, (left.t, right.t), source, doubles)


# -- integration ---------------------------------------------------------------------


@dataclass
class Trajectory:
    params: OdeParams
    t: np.ndarray
    rho: np.ndarray
    rhop: np.ndarray
    events: list
    left: Endpoint
    right: Endpoint
    left_reason: str
    right_reason: str
    stats: dict = field(default_factory=dict)
    _dense: list = field(default_factory=list, repr=False)

    def z_drift(self) -> float:
        p = self.params
        with np.errstate(over="ignore"):
            zz = p.z(self.rho, self.rhop) - p.c / p.n - p.D * self.rho ** (-2 * p.n)
        return float(np.max(np.abs(zz))) if zz.size else 0.0

    def is_monotone(self) -> bool:
        return bool(np.all(self.rhop > 0) and np.all(np.diff(self.t) > 0) and np.all(np.diff(self.rho) > 0))

    def rho_at(self, t) -> np.ndarray:
        """Dense-output evaluation inside the integrated span."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.full(t.shape, np.nan)
        for lo, hi, sol in self._dense:
            m = (t >= lo) & (t <= hi)
            if np.any(m):
                out[m] = sol(t[m])[0]
        return out

    def resample(self, count: int) -> tuple:
        ts = np.linspace(self.t[0], self.t[-1], count)
        rho = self.rho_at(ts)
        rhop = np.sqrt(np.maximum(self.params.f(rho), 0.0))
        return ts, rho, rhop

    def quadrature_time_error(self, stride: int = 7) -> float:
        """Max ``|t_i - int_{rho0}^{rho_i} dx/sqrt(f)|`` over a subset of samples."""
        p = self.params
        err = 0.0
        for ti, ri in zip(self.t[::stride], self.rho[::stride]):
            q = travel_time(p, min(p.rho0, ri), max(p.rho0, ri))
            q = q if ri >= p.rho0 else -q
            err = max(err, abs(ti - q))
        return err


@dataclass(frozen=True)
class IntegratorConfig:
    t_span: tuple = (-5.0, 5.0)
    rtol: float = 1e-10
    atol: float = 1e-12
    rho_max: float = 1e8
    f_stop_rel: float = 1e-6
    slope_cap: float = 100.0
    rho_small_rel: float = 1e-6


def _rhs(p: OdeParams):
    def fun(t, y):
        x = max(y[0], 1e-300)
        return [math.sqrt(max(float(p.f(x)), 0.0))]

    return fun


def _limit_at_zero(p: OdeParams) -> str:
    if p.D > 0:
        return "infinite"
    if p.D == 0 and p.c > 0:
        return "positive"
    return "zero"


def _integrate_direction(p: OdeParams, t_end: float, cfg: IntegratorConfig):
    """Integrate from ``t = 0`` toward ``t_end``; returns samples and the endpoint."""
    direction = 1.0 if t_end > 0 else -1.0
    fscale = max(p.scale(p.rho0), float(p.f(p.rho0)), 1e-300)
    f_stop = cfg.f_stop_rel * fscale
    rho_small = cfg.rho_small_rel * p.rho0
    # stop sampling once rho'^2 is far above its initial scale; the rest is quadrature
    slope_cap2 = cfg.slope_cap**2 * max(1.0, fscale)
    fun = _rhs(p)
    t0, y0 = 0.0, p.rho0
    ts, ys, dense, events = [], [], [], []
    use_fstop = True
    nfev = 0
    for _ in range(20):
        def ev_f(t, y, fs=f_stop):
            return float(p.f(max(y[0], 1e-300))) - fs

        ev_f.terminal = True

        def ev_small(t, y):
            return y[0] - rho_small

        ev_small.terminal = True

        def ev_slope(t, y):
            return slope_cap2 - float(p.f(max(y[0], 1e-300)))

        ev_slope.terminal = True

        def ev_cap(t, y):
            return y[0] - cfg.rho_max

        ev_cap.terminal = True
        active = [e for e in (ev_f, ev_small, ev_slope, ev_cap) if e is not ev_f or use_fstop]
        if direction > 0:
            active = [e for e in active if e is not ev_small and e is not ev_slope]
        else:
            active = [e for e in active if e is not ev_cap]
        if _limit_at_zero(p) == "zero":
            active = [e for e in active if e is not ev_small]
        sol = sint.solve_ivp(
            fun, (t0, t_end), [y0], method="RK45", rtol=cfg.rtol, atol=cfg.atol, dense_output=True, events=active
        )
        nfev += sol.nfev
        if sol.status == -1:
            raise IntegrationError(sol.message)
        ts.append(sol.t)
        ys.append(sol.y[0])
        dense.append((min(t0, sol.t[-1]), max(t0, sol.t[-1]), sol.sol))
        if sol.status == 0:
            rho_end = float(sol.y[0, -1])
            events.append((float(sol.t[-1]), "horizon"))
            # the limit is unknown from a finite horizon; keep the observed value
            ep = Endpoint(EndpointKind.INFINITE_TIME, rho_end, direction * math.inf)
            return ts, ys, dense, events, ep, "horizon", nfev
        fired = [i for i, te in enumerate(sol.t_events) if len(te)]
        i = fired[0]
        ev = active[i]
        te = float(sol.t_events[i][0])
        ye = float(sol.y_events[i][0][0])
        if ev is ev_cap:
            events.append((te, "rho_cap"))
            return ts, ys, dense, events, Endpoint(EndpointKind.INFINITE_TIME, math.inf, direction * math.inf), "cap", nfev
        if ev is ev_small or ev is ev_slope:
            tail = travel_time(p, 0.0, ye)
            kind = EndpointKind.BLOWUP if _limit_at_zero(p) == "infinite" else EndpointKind.FINITE_TIME_ROOT
            events.append((te, "near_zero"))
            return ts, ys, dense, events, Endpoint(kind, 0.0, te - tail), "near_zero", nfev
        # f reached the stop level: find what lies ahead
        d1 = float(p.df(ye))
        ahead = direction  # rho moves in the direction of time
        span = 8.0 * abs(float(p.f(ye)) / d1) if d1 != 0 else 1e-3 * ye
        span = min(max(span, 1e-12 * ye), 0.5 * ye)
        far = ye + ahead * span
        if float(p.f(far)) < 0:
            lo, hi = sorted((ye, far))
            r = sopt.brentq(lambda x: float(p.f(x)), lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
            r = _polish(p, r)
            if ahead > 0:
                dt = travel_time(p, ye, r, hi_root=True)
            else:
                dt = travel_time(p, r, ye, lo_root=True)
            events.append((te, "root"))
            return ts, ys, dense, events, Endpoint(EndpointKind.FINITE_TIME_ROOT, r, te + direction * dt), "root", nfev
        # no sign change: tangency or a shallow positive minimum
        lo, hi = sorted((ye, far))
        if float(p.df(lo)) * float(p.df(hi)) < 0:
            xm = sopt.brentq(lambda x: float(p.df(x)), lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
        else:
            xm = far
        fm = float(p.f(xm))
        if fm <= 1e-13 * p.scale(xm):
            events.append((te, "tangency"))
            use_fstop = False
        else:
            f_stop = 0.5 * fm
        t0, y0 = te, ye
        # avoid re-triggering at the restart point
        if use_fstop and float(p.f(y0)) <= f_stop:
            use_fstop = False
    raise IntegrationError("too many event restarts")


def integrate(p: OdeParams, t_span: Sequence[float] = (-5.0, 5.0), cfg: Optional[IntegratorConfig] = None) -> Trajectory:
    """Integrate ``rho' = sqrt(f(rho))`` both ways from ``t = 0``.

    Endpoint detection does not consult :func:`classify`; it only looks at
    the local behavior of ``f`` where an event fires.
    """
    cfg = cfg or IntegratorConfig(t_span=tuple(t_span))
    if tuple(t_span) != tuple(cfg.t_span):
        cfg = IntegratorConfig(tuple(t_span), cfg.rtol, cfg.atol, cfg.rho_max, cfg.f_stop_rel, cfg.slope_cap, cfg.rho_small_rel)
    if not sup_f_positive(p):
        raise NoSolution("f <= 0 everywhere: no solution with positive slope")
    f0 = float(p.f(p.rho0))
    if not f0 > 0:
        raise InfeasibleInitialCondition(f"f(rho0) = {f0:.3e} <= 0 at rho0 = {p.rho0}")
    lo, hi = cfg.t_span
    if not (lo < 0 < hi):
        raise ValueError("t_span must contain 0 in its interior")
    bts, bys, bdense, bev, left, lreason, n1 = _integrate_direction(p, lo, cfg)
    fts, fys, fdense, fev, right, rreason, n2 = _integrate_direction(p, hi, cfg)
    t_back = np.concatenate(bts)[::-1]
    y_back = np.concatenate(bys)[::-1]
    t_fwd = np.concatenate(fts)
    y_fwd = np.concatenate(fys)
    t_all = np.concatenate([t_back, t_fwd])
    y_all = np.concatenate([y_back, y_fwd])
    order = np.argsort(t_all, kind="stable")
    t_all, y_all = t_all[order], y_all[order]
    keep = np.concatenate([[True], np.diff(t_all) > 0])
    t_all, y_all = t_all[keep], y_all[keep]
    rhop = np.sqrt(np.maximum(p.f(y_all), 0.0))
    ok = (rhop > 0) & (y_all > 0)
    # samples must be strictly increasing in rho as well
    t_all, y_all, rhop = t_all[ok], y_all[ok], rhop[ok]
    inc = np.concatenate([[True], np.diff(y_all) > 0])
    t_all, y_all, rhop = t_all[inc], y_all[inc], rhop[inc]
    stats = {"nfev": n1 + n2, "samples": int(t_all.size), "rtol": cfg.rtol, "atol": cfg.atol}
    return Trajectory(p, t_all, y_all, rhop, bev + fev, left, right, lreason, rreason, stats, bdense + fdense)


def third_order_residual(p: OdeParams, rho, rhop, rho2, rho3) -> np.ndarray:
    C = p.C
    return np.asarray(rho) * rho3 + (2 * p.n + 1) * np.asarray(rhop) * rho2 + C * np.asarray(rho) * rhop


def third_order_check(traj_or_params, ts: Optional[Sequence[float]] = None) -> float:
    """Largest third-order residual along a trajectory or a closed form.

    Trajectories use ``rho'' = f'(rho)/2`` and ``rho''' = f''(rho) rho'/2``;
    closed forms (pass :class:`OdeParams` and ``ts``) use exact derivatives.
    """
    if isinstance(traj_or_params, Trajectory):
        tr = traj_or_params
        p = tr.params
        r, r1 = tr.rho, tr.rhop
        r2 = 0.5 * p.df(r)
        r3 = 0.5 * p.d2f(r) * r1
        res = third_order_residual(p, r, r1, r2, r3)
        scale = np.maximum(1.0, np.abs(r * r3) + np.abs((2 * p.n + 1) * r1 * r2) + np.abs(p.C * r * r1))
        return float(np.max(np.abs(res) / scale))
    p = traj_or_params
    out = 0.0
    for t in ts:
        r, r1, r2, r3 = closed_form_derivatives(p, t)
        res = third_order_residual(p, r, r1, r2, r3)
        scale = max(1.0, abs(r * r3) + abs((2 * p.n + 1) * r1 * r2) + abs(p.C * r * r1))
        out = max(out, abs(float(res)) / scale)
    return out


@dataclass
class ClosedFormComparison:
    params: OdeParams
    window: tuple
    sup_error: float
    left_dt: float
    right_dt: float
    samples: int


def closed_form_comparison(p: OdeParams, t_span: Sequence[float] = (-5.0, 5.0), keep: float = 0.9, samples: int = 2001) -> ClosedFormComparison:
    """Integrator against the ``D = 0`` closed form on the central ``keep`` part of the interval.

    The interval is the maximal interval clipped to ``t_span``; endpoint
    errors are ``nan`` for endpoints outside the span.
    """
    tr = integrate(p, t_span)
    lo, hi = closed_form_interval(p)
    a, b = max(lo, t_span[0]), min(hi, t_span[1])
    trim = 0.5 * (1.0 - keep) * (b - a)
    ts = np.linspace(a + trim, b - trim, samples)
    err = float(np.max(np.abs(tr.rho_at(ts) - closed_form_eval(p, ts))))
    left_dt = abs(tr.left.t - lo) if lo > t_span[0] else math.nan
    right_dt = abs(tr.right.t - hi) if hi < t_span[1] else math.nan
    return ClosedFormComparison(p, (float(ts[0]), float(ts[-1])), err, left_dt, right_dt, samples)


def bisection_roots(p: OdeParams, lo: float = 1e-6, hi: float = 1e6, samples: int = 20000) -> list:
    """Independent root oracle: sign changes on a log grid refined by plain bisection."""
    xs = np.geomspace(lo, hi, samples)
    fs = p.f(xs)
    out = []
    sg = np.sign(fs)
    for i in range(samples - 1):
        if sg[i] == 0:
            # an exact zero counts only where f changes sign around it
            if 0 < i and sg[i - 1] * sg[i + 1] < 0:
                out.append(float(xs[i]))
            continue
        if sg[i] * sg[i + 1] < 0:
            a, b = xs[i], xs[i + 1]
            fa = fs[i]
            for _ in range(200):
                m = 0.5 * (a + b)
                fm = float(p.f(m))
                if m in (a, b):
                    break
                if np.sign(fm) == np.sign(fa):
                    a, fa = m, fm
                else:
                    b = m
            out.append(0.5 * (a + b))
    return out
