"""Second-order forward jets.

A :class:`Jet` carries an array value together with its gradient and Hessian
with respect to a fixed set of seed variables.  Arithmetic propagates all
three exactly (up to rounding), so metric components written against the
small math namespace below can be differentiated twice without any finite
differencing.

Jets may be truncated: an order-1 jet has no Hessian, an order-0 jet is a
plain value.  :func:`D` turns a jet of order ``k`` into the jet of its first
partials, of order ``k - 1``; this is how connection coefficients and
covariant derivatives of derived fields are formed.
"""

from __future__ import annotations

import string
from typing import Any, Sequence

import numpy as np

__all__ = [
    "Jet",
    "D",
    "variables",
    "value",
    "order",
    "array",
    "stack",
    "concatenate",
    "einsum",
    "inv",
    "outer",
    "transpose",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "tan",
    "sinh",
    "cosh",
    "tanh",
    "lift",
]


class Jet:
    """Array value with exact first and (optionally) second partials.

    ``v`` has shape ``S``; ``g`` has shape ``S + (d,)``; ``h`` has shape
    ``S + (d, d)``.  Missing ``h`` means order 1, missing ``g`` order 0.
    """

    __slots__ = ("v", "g", "h")
    __array_priority__ = 1000
    __array_ufunc__ = None

    def __init__(self, v, g=None, h=None):
        self.v = np.asarray(v, dtype=float)
        self.g = None if g is None else np.asarray(g, dtype=float)
        self.h = None if (h is None or g is None) else np.asarray(h, dtype=float)

    # -- bookkeeping -------------------------------------------------------
    @property
    def order(self) -> int:
        if self.g is None:
            return 0
        return 1 if self.h is None else 2

    @property
    def shape(self) -> tuple:
        return self.v.shape

    @property
    def ndim(self) -> int:
        return self.v.ndim

    @property
    def nvars(self) -> int:
        return self.g.shape[-1] if self.g is not None else 0

    def truncate(self, k: int) -> "Jet":
        if k >= self.order:
            return self
        if k <= 0:
            return Jet(self.v)
        return Jet(self.v, self.g)

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, shape={self.shape}, v={self.v!r})"

    def __len__(self) -> int:
        return len(self.v)

    def __iter__(self):
        for i in range(len(self.v)):
            yield self[i]

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        v = self.v[idx]
        g = None if self.g is None else self.g[idx]
        h = None if self.h is None else self.h[idx]
        return Jet(v, g, h)

    @property
    def T(self) -> "Jet":
        return transpose(self)

    # -- arithmetic --------------------------------------------------------
    def __neg__(self) -> "Jet":
        return Jet(-self.v, _neg(self.g), _neg(self.h))

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other) -> "Jet":
        if isinstance(other, Jet):
            k = min(self.order, other.order)
            a, b = self.truncate(k), other.truncate(k)
            return Jet(a.v + b.v, _add(a.g, b.g), _add(a.h, b.h))
        c = np.asarray(other, dtype=float)
        v = self.v + c
        return Jet(v, _bcast(self.g, v.shape, 1), _bcast(self.h, v.shape, 2))

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if isinstance(other, Jet):
            k = min(self.order, other.order)
            a, b = self.truncate(k), other.truncate(k)
            v = a.v * b.v
            g = h = None
            if k >= 1:
                g = a.v[..., None] * b.g + b.v[..., None] * a.g
            if k >= 2:
                cross = a.g[..., :, None] * b.g[..., None, :]
                h = (
                    a.v[..., None, None] * b.h
                    + b.v[..., None, None] * a.h
                    + cross
                    + np.swapaxes(cross, -1, -2)
                )
            return Jet(v, g, h)
        c = np.asarray(other, dtype=float)
        v = self.v * c
        g = None if self.g is None else _bcast(self.g * c[..., None], v.shape, 1)
        h = None if self.h is None else _bcast(self.h * c[..., None, None], v.shape, 2)
        return Jet(v, g, h)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * _reciprocal(other)
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other) -> "Jet":
        return _reciprocal(self) * other

    def __pow__(self, p) -> "Jet":
        if isinstance(p, Jet):
            return exp(p * log(self))
        p = float(p)
        x = self.v
        if p == 2.0:
            return self * self
        return lift(self, x**p, p * x ** (p - 1.0), p * (p - 1.0) * x ** (p - 2.0))

    def __rpow__(self, base) -> "Jet":
        return exp(self * np.log(base))

    def __matmul__(self, other) -> "Jet":
        return _matmul(self, other)

    def __rmatmul__(self, other) -> "Jet":
        return _matmul(other, self)


# -- small helpers -----------------------------------------------------------


def _neg(a):
    return None if a is None else -a


def _add(a, b):
    if a is None or b is None:
        return None
    return a + b


def _bcast(a, shape, extra):
    if a is None:
        return None
    target = tuple(shape) + a.shape[a.ndim - extra:]
    if a.shape == target:
        return a
    return np.broadcast_to(a, target).copy()


def _reciprocal(x: Jet) -> Jet:
    r = 1.0 / x.v
    return lift(x, r, -r * r, 2.0 * r * r * r)


def lift(x, f0, f1, f2=None):
    """Apply a univariate map with known derivatives ``f0, f1, f2`` to ``x``.

    The derivative arrays are evaluated at ``x.v`` by the caller.
    """
    if not isinstance(x, Jet):
        return np.asarray(f0, dtype=float)
    f0 = np.asarray(f0, dtype=float)
    g = h = None
    if x.order >= 1:
        f1 = np.asarray(f1, dtype=float)
        g = f1[..., None] * x.g
    if x.order >= 2:
        if f2 is None:
            raise ValueError("second derivative required for an order-2 jet")
        f2 = np.asarray(f2, dtype=float)
        h = f2[..., None, None] * (x.g[..., :, None] * x.g[..., None, :]) + f1[..., None, None] * x.h
    return Jet(f0, g, h)


# -- constructors ------------------------------------------------------------


def variables(point: Sequence[float], order: int = 2) -> Jet:
    """Seed jet for the coordinate functions at ``point``."""
    p = np.asarray(point, dtype=float)
    d = p.shape[0]
    if order <= 0:
        return Jet(p)
    g = np.eye(d)
    h = np.zeros((d, d, d)) if order >= 2 else None
    return Jet(p, g, h)


def value(x) -> np.ndarray:
    if isinstance(x, Jet):
        return x.v
    if isinstance(x, (list, tuple)):
        return np.array([value(e) for e in x])
    return np.asarray(x, dtype=float)


def order(x) -> int:
    """Jet order of ``x``; plain numbers count as exact constants."""
    if isinstance(x, Jet):
        return x.order
    if isinstance(x, (list, tuple)):
        return min((order(e) for e in x), default=99)
    return 99


def D(x) -> Jet:
    """First partials of ``x`` as a jet one order lower (last axis = variable)."""
    if not isinstance(x, Jet):
        raise TypeError("D() needs a Jet; constants have no seed variables")
    if x.g is None:
        raise ValueError("cannot differentiate an order-0 jet")
    return Jet(x.g, x.h)


def _template(items):
    d, k = None, 99
    for it in items:
        if isinstance(it, Jet):
            k = min(k, it.order)
            if it.g is not None:
                d = it.nvars
    return d, k


def _promote(x, d, k, shape=None):
    if isinstance(x, Jet):
        return x.truncate(k)
    v = np.asarray(x, dtype=float)
    if shape is not None:
        v = np.broadcast_to(v, shape)
    g = np.zeros(v.shape + (d,)) if k >= 1 else None
    h = np.zeros(v.shape + (d, d)) if k >= 2 else None
    return Jet(v, g, h)


def stack(items: Sequence[Any], axis: int = 0):
    """Stack jets and constants along a new leading axis."""
    items = list(items)
    d, k = _template(items)
    if d is None and k == 99:
        return np.stack([np.asarray(i, dtype=float) for i in items], axis=axis)
    if d is None:
        return Jet(np.stack([value(i) for i in items], axis=axis))
    if axis != 0:
        raise NotImplementedError("jet stacking only along axis 0")
    shape = np.broadcast_shapes(*[np.shape(value(i)) for i in items])
    js = [_promote(i, d, k, shape) for i in items]
    v = np.stack([np.broadcast_to(j.v, shape) for j in js])
    g = np.stack([np.broadcast_to(j.g, shape + (d,)) for j in js]) if k >= 1 else None
    h = np.stack([np.broadcast_to(j.h, shape + (d, d)) for j in js]) if k >= 2 else None
    return Jet(v, g, h)


def array(nested):
    """Turn a (nested) list of jets/numbers, a Jet or an ndarray into one array-like."""
    if isinstance(nested, Jet):
        return nested
    if isinstance(nested, np.ndarray):
        return nested.astype(float)
    if isinstance(nested, (list, tuple)):
        return stack([array(e) for e in nested])
    return np.asarray(nested, dtype=float)


def concatenate(items: Sequence[Any]):
    items = [i if isinstance(i, Jet) else np.atleast_1d(np.asarray(i, dtype=float)) for i in items]
    d, k = _template(items)
    if d is None:
        return np.concatenate([value(i) for i in items])
    js = [_promote(i, d, k) for i in items]
    js = [Jet(j.v[None], None if j.g is None else j.g[None], None if j.h is None else j.h[None]) if j.ndim == 0 else j for j in js]
    v = np.concatenate([j.v for j in js])
    g = np.concatenate([j.g for j in js]) if k >= 1 else None
    h = np.concatenate([j.h for j in js]) if k >= 2 else None
    return Jet(v, g, h)


def transpose(x):
    if not isinstance(x, Jet):
        return np.asarray(x).T
    if x.ndim != 2:
        raise ValueError("transpose expects a matrix jet")
    g = None if x.g is None else np.swapaxes(x.g, 0, 1)
    h = None if x.h is None else np.swapaxes(x.h, 0, 1)
    return Jet(x.v.T, g, h)


# -- multilinear algebra -----------------------------------------------------


def einsum(spec: str, *operands):
    """Product-rule aware ``np.einsum`` over jets and constant arrays."""
    ins, out = spec.replace(" ", "").split("->")
    subs = ins.split(",")
    if len(subs) != len(operands):
        raise ValueError("operand count does not match subscripts")
    jet_idx = [i for i, op in enumerate(operands) if isinstance(op, Jet)]
    vals = [value(op) for op in operands]
    v = np.einsum(spec, *vals, optimize=len(operands) > 2)
    if not jet_idx:
        return v
    k = min(operands[i].order for i in jet_idx)
    if k == 0:
        return Jet(v)
    free = [c for c in string.ascii_letters if c not in spec]
    a, b = free[0], free[1]
    g = np.zeros(v.shape + (operands[jet_idx[0]].nvars,))
    for i in jet_idx:
        s = list(subs)
        s[i] = s[i] + a
        ops = list(vals)
        ops[i] = operands[i].g
        g = g + np.einsum(",".join(s) + "->" + out + a, *ops, optimize=len(ops) > 2)
    h = None
    if k >= 2:
        d = g.shape[-1]
        h = np.zeros(v.shape + (d, d))
        for i in jet_idx:
            s = list(subs)
            s[i] = s[i] + a + b
            ops = list(vals)
            ops[i] = operands[i].h
            h = h + np.einsum(",".join(s) + "->" + out + a + b, *ops, optimize=len(ops) > 2)
        for i in jet_idx:
            for j in jet_idx:
                if i == j:
                    continue
                s = list(subs)
                s[i] = s[i] + a
                s[j] = s[j] + b
                ops = list(vals)
                ops[i] = operands[i].g
                ops[j] = operands[j].g
                h = h + np.einsum(",".join(s) + "->" + out + a + b, *ops, optimize=len(ops) > 2)
    return Jet(v, g, h)


def _matmul(a, b):
    va, vb = value(a), value(b)
    if va.ndim == 2 and vb.ndim == 2:
        return einsum("ij,jk->ik", a, b)
    if va.ndim == 2 and vb.ndim == 1:
        return einsum("ij,j->i", a, b)
    if va.ndim == 1 and vb.ndim == 2:
        return einsum("i,ij->j", a, b)
    if va.ndim == 1 and vb.ndim == 1:
        return einsum("i,i->", a, b)
    raise ValueError("matmul supports vectors and matrices only")


def outer(a, b):
    return einsum("i,j->ij", a, b)


def inv(a):
    """Matrix inverse with exact jet propagation."""
    if not isinstance(a, Jet):
        return np.linalg.inv(np.asarray(a, dtype=float))
    V = np.linalg.inv(a.v)
    if a.order == 0:
        return Jet(V)
    g = -np.einsum("ij,jkY,kl->ilY", V, a.g, V, optimize=True)
    h = None
    if a.order >= 2:
        t = np.einsum("ij,jkZ,kl,lmY,mn->inYZ", V, a.g, V, a.g, V, optimize=True)
        h = t + np.swapaxes(t, -1, -2) - np.einsum("ij,jkYZ,kl->ilYZ", V, a.h, V, optimize=True)
    return Jet(V, g, h)


# -- elementary functions ----------------------------------------------------


def sqrt(x):
    if isinstance(x, Jet):
        r = np.sqrt(x.v)
        return lift(x, r, 0.5 / r, -0.25 / (r * r * r))
    return np.sqrt(x)


def exp(x):
    if isinstance(x, Jet):
        e = np.exp(x.v)
        return lift(x, e, e, e)
    return np.exp(x)


def log(x):
    if isinstance(x, Jet):
        return lift(x, np.log(x.v), 1.0 / x.v, -1.0 / (x.v * x.v))
    return np.log(x)


def sin(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.v), np.cos(x.v)
        return lift(x, s, c, -s)
    return np.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.v), np.cos(x.v)
        return lift(x, c, -s, -c)
    return np.cos(x)


def tan(x):
    if isinstance(x, Jet):
        t = np.tan(x.v)
        sec2 = 1.0 + t * t
        return lift(x, t, sec2, 2.0 * t * sec2)
    return np.tan(x)


def sinh(x):
    if isinstance(x, Jet):
        s, c = np.sinh(x.v), np.cosh(x.v)
        return lift(x, s, c, s)
    return np.sinh(x)


def cosh(x):
    if isinstance(x, Jet):
        s, c = np.sinh(x.v), np.cosh(x.v)
        return lift(x, c, s, c)
    return np.cosh(x)


def tanh(x):
    if isinstance(x, Jet):
        t = np.tanh(x.v)
        s2 = 1.0 - t * t
        return lift(x, t, s2, -2.0 * t * s2)
    return np.tanh(x)
