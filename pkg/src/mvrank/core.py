"""Shared domain types: datasets, boxes, step curves and the random source.

Every MV curve handled by the package (empirical, smoothed, piecewise
approximant, closed-form oracle sampled on a grid) is a :class:`StepCurve`:
a right-continuous, piecewise-constant function on ``[0, alpha_K)``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class DataError(ValueError):
    """Input data is malformed or inconsistent with the model."""


class NumericalError(ArithmeticError):
    """A numerical routine failed to converge."""


@dataclass(frozen=True)
class Dataset:
    """``n`` observations in ``R^d`` stored as an ``(n, d)`` float array."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DataError(f"dataset must be a non-empty (n, d) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DataError("dataset contains NaN or infinite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned hyper-rectangle ``[lower, upper]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.array(self.lower, dtype=float))
        hi = np.atleast_1d(np.array(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DomainError("box bounds must be vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise DomainError("box bounds must be finite")
        if np.any(lo >= hi):
            raise DomainError("box needs lower < upper on every axis")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def __eq__(self, other):
        if not isinstance(other, Box):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.all((x >= self.lower) & (x <= self.upper), axis=1)

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "Box":
        return cls(obj["lower"], obj["upper"])


@dataclass(frozen=True, eq=False)
class StepCurve:
    """Right-continuous step function on ``[breakpoints[0], breakpoints[-1])``.

    ``values[k]`` is the value taken on ``[breakpoints[k], breakpoints[k+1])``.
    Breakpoints start at 0, increase strictly and stay inside ``[0, 1]``.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.array(self.breakpoints, dtype=float).ravel()
        v = np.array(self.values, dtype=float).ravel()
        if b.size < 2 or v.size != b.size - 1:
            raise DomainError("need K+1 breakpoints for K values")
        if b[0] != 0.0 or b[-1] > 1.0:
            raise DomainError("breakpoints must start at 0 and end at most at 1")
        if np.any(np.diff(b) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise DomainError("curve values must be finite and nonnegative")
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        if not isinstance(other, StepCurve):
            return NotImplemented
        return (np.array_equal(self.breakpoints, other.breakpoints)
                and np.array_equal(self.values, other.values))

    @property
    def end(self) -> float:
        return float(self.breakpoints[-1])

    def __call__(self, alpha):
        return step_eval(self, alpha)

    def is_nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    def integral(self, a: float = 0.0, b: float | None = None) -> float:
        b = self.end if b is None else b
        zero = StepCurve([0.0, self.end], [0.0])
        return l1_distance(self, zero, (a, b))

    # serialization -----------------------------------------------------
    def to_json(self) -> str:
        return json.dumps({"breakpoints": self.breakpoints.tolist(),
                           "values": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "StepCurve":
        obj = json.loads(text)
        return cls(obj["breakpoints"], obj["values"])

    def to_csv(self) -> str:
        # The last row repeats the final value so step-post plotting closes the curve.
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha", "value"])
        vals = list(self.values) + [self.values[-1]]
        for a, v in zip(self.breakpoints, vals):
            w.writerow([fmt(a), fmt(v)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "StepCurve":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["alpha", "value"]:
            raise DataError("curve CSV must start with header 'alpha,value'")
        body = [r for r in rows[1:] if r]
        alphas = [float(r[0]) for r in body]
        values = [float(r[1]) for r in body[:-1]]
        return cls(alphas, values)


def fmt(x: float) -> str:
    """Round-trip-exact decimal rendering used by every file writer."""
    return repr(float(x))


def step_eval(curve: StepCurve, alpha):
    """Evaluate a step curve at ``alpha`` (scalar or array).

    Raises
    ------
    DomainError
        If any ``alpha`` lies outside ``[0, curve.end)``.
    """
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0) or np.any(a >= curve.end) or np.any(np.isnan(a)):
        raise DomainError(f"alpha outside [0, {curve.end})")
    idx = np.searchsorted(curve.breakpoints, a, side="right") - 1
    out = curve.values[idx]
    return float(out) if out.ndim == 0 else out


def _segments(c1: StepCurve, c2: StepCurve, interval):
    a, b = float(interval[0]), float(interval[1])
    if not (0.0 <= a < b):
        raise DomainError("interval must satisfy 0 <= a < b")
    if b > c1.end or b > c2.end:
        raise DomainError("interval exceeds the domain of a curve")
    inner = np.union1d(c1.breakpoints, c2.breakpoints)
    inner = inner[(inner > a) & (inner < b)]
    starts = np.concatenate([[a], inner])
    lengths = np.diff(np.concatenate([starts, [b]]))
    diff = np.abs(step_eval(c1, starts) - step_eval(c2, starts))
    return diff, lengths, b


def sup_distance(c1: StepCurve, c2: StepCurve, interval) -> float:
    """Exact ``sup |c1 - c2|`` over ``[a, b]``, using merged breakpoints.

    When ``b`` equals a curve's end point it is excluded (the curve is not
    defined there), so the supremum is taken over ``[a, b)``.
    """
    diff, _, b = _segments(c1, c2, interval)
    best = float(np.max(diff))
    if b < c1.end and b < c2.end:
        best = max(best, abs(step_eval(c1, b) - step_eval(c2, b)))
    return best


def l1_distance(c1: StepCurve, c2: StepCurve, interval) -> float:
    """Exact ``int_a^b |c1 - c2|`` computed segment by segment."""
    diff, lengths, _ = _segments(c1, c2, interval)
    return float(np.sum(diff * lengths))


@dataclass
class RandomSource:
    """Seeded PCG64 stream with index-based child splitting.

    Child ``k`` is seeded from ``(seed, path + (k,))`` only, so parallel
    workers get reproducible, independent streams regardless of scheduling.
    """

    seed: int
    path: tuple = ()
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.seed = int(self.seed)
        self.path = tuple(int(k) for k in self.path)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def child(self, k: int) -> "RandomSource":
        return RandomSource(self.seed, self.path + (int(k),))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def random(self, size=None):
        return self._gen.random(size)

    def choice(self, a, size=None, p=None):
        return self._gen.choice(a, size=size, p=p)
