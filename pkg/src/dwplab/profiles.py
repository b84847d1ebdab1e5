"""Warping profiles of one variable with an explicit derivative chain.

Each :class:`Profile` stores callables for the function and several of its
derivatives.  The callables accept floats, arrays or jets, so the ambient
metric can be differentiated through them, and ``profile.derivative()``
gives an independent evaluator for ``rho'`` (and thus ``rho'''`` through the
second jet of ``rho'``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets as J


@dataclass(frozen=True)
class Profile:
    name: str
    chain: tuple = field(repr=False)
    params: dict = field(default_factory=dict)

    def __call__(self, t):
        return self.chain[0](t)

    def derivative(self, k: int = 1) -> "Profile":
        if k >= len(self.chain):
            raise ValueError(f"profile {self.name!r} exposes only {len(self.chain) - 1} derivatives")
        return Profile(f"{self.name}'" if k == 1 else f"{self.name}^({k})", self.chain[k:], self.params)

    def value(self, t, k: int = 0) -> float:
        if k >= len(self.chain):
            raise ValueError(f"profile {self.name!r} exposes only {len(self.chain) - 1} derivatives")
        return float(self.chain[k](float(t)))

    def values(self, t, upto: int = 3) -> np.ndarray:
        return np.array([self.value(t, k) for k in range(upto + 1)])

    def scaled(self, s: float) -> "Profile":
        return Profile(f"{s:g}*{self.name}", tuple((lambda t, f=f: s * f(t)) for f in self.chain), self.params)


def _const(c: float) -> Callable:
    return lambda t: 0.0 * t + c


def exp_profile(a: float = 1.0, c: float = 1.0) -> Profile:
    chain = tuple((lambda t, k=k: a * c**k * J.exp(c * t)) for k in range(6))
    return Profile("exp", chain, {"a": a, "c": c})


def sinh_profile(a: float = 1.0) -> Profile:
    fs = [J.sinh, J.cosh]
    chain = tuple((lambda t, k=k: a * fs[k % 2](t)) for k in range(6))
    return Profile("sinh", chain, {"a": a})


def cosh_profile(a: float = 1.0) -> Profile:
    fs = [J.cosh, J.sinh]
    chain = tuple((lambda t, k=k: a * fs[k % 2](t)) for k in range(6))
    return Profile("cosh", chain, {"a": a})


def sin_profile(a: float = 1.0) -> Profile:
    fs = [J.sin, J.cos, lambda t: -J.sin(t), lambda t: -J.cos(t)]
    chain = tuple((lambda t, k=k: a * fs[k % 4](t)) for k in range(6))
    return Profile("sin", chain, {"a": a})


def linear_profile(slope: float = 1.0, offset: float = 2.0) -> Profile:
    chain = (lambda t: slope * t + offset, _const(slope)) + tuple(_const(0.0) for _ in range(4))
    return Profile("linear", chain, {"slope": slope, "offset": offset})


def constant_profile(c: float = 1.0) -> Profile:
    return Profile("const", (_const(c),) + tuple(_const(0.0) for _ in range(5)), {"c": c})


def poly_exp_profile(a: float, b: float, c: float, d: float) -> Profile:
    """``a + b exp(c t) + d t^2``."""

    def term(k):
        if k == 0:
            return lambda t: a + b * J.exp(c * t) + d * t * t
        if k == 1:
            return lambda t: b * c * J.exp(c * t) + 2.0 * d * t
        if k == 2:
            return lambda t: b * c * c * J.exp(c * t) + 2.0 * d
        return lambda t, k=k: b * c**k * J.exp(c * t)

    return Profile("poly-exp", tuple(term(k) for k in range(6)), {"a": a, "b": b, "c": c, "d": d})


def random_poly_exp(rng: np.random.Generator, interval: Sequence[float], attempts: int = 1000) -> Profile:
    """Draw a poly-exp profile with positive value and slope on ``interval``.

    Positivity is enforced by rejection on a dense grid of the interval.
    """
    ts = np.linspace(interval[0], interval[1], 201)
    for _ in range(attempts):
        a = rng.uniform(0.5, 2.0)
        b = rng.uniform(0.2, 1.5)
        c = rng.uniform(0.3, 1.2)
        d = rng.uniform(-0.05, 0.2)
        prof = poly_exp_profile(a, b, c, d)
        vals = np.array([prof.value(t) for t in ts])
        slopes = np.array([prof.value(t, 1) for t in ts])
        if vals.min() > 0.1 and slopes.min() > 0.05:
            return prof
    raise RuntimeError("could not draw a positive profile")
