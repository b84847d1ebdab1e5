"""Residual bookkeeping, sampling grids and serialization."""

from __future__ import annotations

import dataclasses
import enum
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

import numpy as np

TOL_JET = 1e-8
TOL_CLOSED_FORM = 1e-6
TOL_ROUND_TRIP = 1e-5


@dataclass
class VerificationReport:
    identity_name: str
    residual_max: float
    residual_mean: float
    tolerance: float
    sample_count: int
    provenance: str = ""
    seed: Optional[int] = None
    verdict: bool = field(init=False)

    def __post_init__(self):
        if self.sample_count <= 0:
            raise ValueError("a report needs at least one sample")
        self.residual_max = float(self.residual_max)
        self.residual_mean = float(self.residual_mean)
        self.verdict = bool(self.residual_max < self.tolerance)

    @classmethod
    def from_residuals(cls, name: str, residuals: Iterable[float], tolerance: float, provenance: str = "", seed=None):
        r = np.asarray(list(residuals), dtype=float)
        if r.size == 0:
            raise ValueError(f"{name}: no residuals")
        # a NaN residual must never pass
        worst = float(np.max(r)) if np.all(np.isfinite(r)) else math.inf
        return cls(name, worst, float(np.mean(r)), tolerance, int(r.size), provenance, seed)

    def line(self) -> str:
        tag = "PASS" if self.verdict else "FAIL"
        return f"{tag} {self.identity_name}: max={self.residual_max:.3e} mean={self.residual_mean:.3e} tol={self.tolerance:.1e} n={self.sample_count}"


@dataclass
class SuiteSummary:
    verdict: bool
    worst: str
    worst_ratio: float
    reports: list

    def lines(self) -> list:
        return [r.line() for r in self.reports]


def aggregate(reports: Sequence[VerificationReport]) -> SuiteSummary:
    """AND of verdicts; the worst offender is the largest residual/tolerance ratio."""
    reports = sorted(reports, key=lambda r: r.identity_name)
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    ratios = [r.residual_max / r.tolerance for r in reports]
    i = int(np.argmax(ratios))
    return SuiteSummary(all(r.verdict for r in reports), reports[i].identity_name, float(ratios[i]), list(reports))


@dataclass(frozen=True)
class SamplingGrid:
    """Per-dimension counts, a margin, and a seed for randomized directions."""

    counts: tuple
    margin: float = 1e-2
    seed: int = 0

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=[self.seed, stream]))

    def uniform(self, bounds: Sequence[Sequence[float]]) -> np.ndarray:
        """Tensor grid of cell midpoints, strictly inside bounds by the margin."""
        if len(bounds) != len(self.counts):
            raise ValueError("one count per dimension required")
        axes = []
        for (lo, hi), n in zip(bounds, self.counts):
            lo, hi = lo + self.margin, hi - self.margin
            if not hi > lo:
                raise ValueError("margin leaves an empty interval")
            axes.append(lo + (hi - lo) * (np.arange(n) + 0.5) / n)
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def random(self, bounds: Sequence[Sequence[float]], count: int, stream: int = 0) -> np.ndarray:
        lo = np.array([b[0] for b in bounds], dtype=float) + self.margin
        hi = np.array([b[1] for b in bounds], dtype=float) - self.margin
        return lo + (hi - lo) * self.rng(stream).random((count, len(bounds)))


# -- serialization -------------------------------------------------------------


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = "%.17g" % x
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def to_plain(obj: Any) -> Any:
    """Convert dataclasses, enums and numpy values to JSON-ready Python objects."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        # underscore fields hold live solver objects, not data
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj) if not f.name.startswith("_")}
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(obj: Any, indent: int = 2) -> str:
    """Deterministic JSON: insertion-ordered keys, floats with 17 significant digits."""
    return _encode(to_plain(obj), indent, 0) + "\n"


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        if len(row) != len(header):
            raise ValueError("row length does not match header")
        cells = []
        for v in row:
            if isinstance(v, enum.Enum):
                cells.append(str(v.value))
            elif isinstance(v, (int, np.integer)) and not isinstance(v, bool):
                cells.append(str(int(v)))
            elif isinstance(v, str):
                cells.append(v)
            else:
                cells.append(fmt_float(v))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
