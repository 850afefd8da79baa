"""Scoring functions and Gaussian simulators.

A scorer maps points of ``R^d`` to nonnegative reals; larger scores mean
more "normal" points. The catalogue covers Gaussian and Gaussian-mixture
densities (the reference optimal scorers), piecewise-constant scorers on a
dyadic grid (A-Rank outputs, exact-volume test subjects) and strictly
increasing transforms of another scorer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Box, DataError, Dataset, DomainError, RandomSource


@dataclass(frozen=True)
class GaussianParams:
    """Mean and covariance of one Gaussian component.

    ``diag_cov`` gives a diagonal covariance. A full covariance matrix may be
    passed as ``cov`` instead; closed-form MV* oracles only accept the
    diagonal form.
    """

    mean: np.ndarray
    diag_cov: np.ndarray | None = None
    cov: np.ndarray | None = None

    def __post_init__(self):
        mean = np.atleast_1d(np.array(self.mean, dtype=float))
        object.__setattr__(self, "mean", mean)
        if (self.diag_cov is None) == (self.cov is None):
            raise DomainError("give exactly one of diag_cov or cov")
        if self.diag_cov is not None:
            dc = np.atleast_1d(np.array(self.diag_cov, dtype=float))
            if dc.shape != mean.shape or np.any(dc <= 0):
                raise DomainError("diag_cov must be positive and match the mean")
            object.__setattr__(self, "diag_cov", dc)
        else:
            cov = np.array(self.cov, dtype=float)
            if cov.shape != (mean.size, mean.size) or not np.allclose(cov, cov.T):
                raise DomainError("cov must be a symmetric d x d matrix")
            try:
                np.linalg.cholesky(cov)
            except np.linalg.LinAlgError as exc:
                raise DomainError("cov must be positive definite") from exc
            object.__setattr__(self, "cov", cov)

    @property
    def d(self) -> int:
        return self.mean.size

    @property
    def is_diagonal(self) -> bool:
        return self.diag_cov is not None

    @property
    def chol(self) -> np.ndarray:
        if self.is_diagonal:
            return np.diag(np.sqrt(self.diag_cov))
        return np.linalg.cholesky(self.cov)

    def pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        diff = x - self.mean
        if self.is_diagonal:
            maha = np.einsum("ij,ij->i", diff, diff / self.diag_cov)
            logdet = float(np.sum(np.log(self.diag_cov)))
        else:
            L = self.chol
            z = np.linalg.solve(L, diff.T).T  # d is tiny; row-wise result independent of threads
            maha = np.einsum("ij,ij->i", z, z)
            logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        return np.exp(-0.5 * maha - 0.5 * (self.d * math.log(2 * math.pi) + logdet))

    def to_dict(self) -> dict:
        out = {"mean": self.mean.tolist()}
        if self.is_diagonal:
            out["diag_cov"] = self.diag_cov.tolist()
        else:
            out["cov"] = self.cov.tolist()
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "GaussianParams":
        return cls(obj["mean"], obj.get("diag_cov"), obj.get("cov"))


@dataclass(frozen=True)
class MixtureParams:
    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        w = np.atleast_1d(np.array(self.weights, dtype=float))
        comps = tuple(self.components)
        if len(comps) < 1 or w.size != len(comps):
            raise DomainError("need one weight per component and at least one component")
        if np.any(w < 0) or abs(float(np.sum(w)) - 1.0) > 1e-12:
            raise DomainError("mixture weights must be nonnegative and sum to 1")
        if len({c.d for c in comps}) != 1:
            raise DomainError("all components must share the same dimension")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def d(self) -> int:
        return self.components[0].d

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(),
                "components": [c.to_dict() for c in self.components]}

    @classmethod
    def from_dict(cls, obj: dict) -> "MixtureParams":
        return cls(obj["weights"], [GaussianParams.from_dict(c) for c in obj["components"]])


def gm2d_params() -> MixtureParams:
    """Equal-weight 2-D mixture with a correlated and an isotropic component."""
    return MixtureParams(
        [0.5, 0.5],
        [GaussianParams([0.0, 0.0], cov=[[2.0, 2.0], [2.0, 4.0]]),
         GaussianParams([-1.0, -1.0], cov=[[2.0, 0.0], [0.0, 2.0]])],
    )


PRESETS = {"gm2d": gm2d_params}


# ---------------------------------------------------------------------------
# transforms

TRANSFORM_KINDS = ("arctan", "rational", "affine", "power")


@dataclass(frozen=True)
class MonotoneTransform:
    """Strictly increasing map of ``[0, inf)`` into itself.

    ``arctan``: ``(2/pi) atan(x)``; ``rational``: ``x / (1 + x)``;
    ``affine``: ``a x + b`` with ``a > 0, b >= 0``; ``power``: ``x ** p``.
    """

    kind: str
    a: float = 1.0
    b: float = 0.0
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise DomainError(f"unknown transform {self.kind!r}")
        if self.kind == "affine" and (self.a <= 0 or self.b < 0):
            raise DomainError("affine transform needs a > 0 and b >= 0")
        if self.kind == "power" and self.p <= 0:
            raise DomainError("power transform needs p > 0")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "arctan":
            return (2.0 / np.pi) * np.arctan(x)
        if self.kind == "rational":
            return x / (1.0 + x)
        if self.kind == "affine":
            return self.a * x + self.b
        return np.power(x, self.p)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "affine":
            out.update(a=self.a, b=self.b)
        elif self.kind == "power":
            out["p"] = self.p
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "MonotoneTransform":
        return cls(obj["kind"], float(obj.get("a", 1.0)), float(obj.get("b", 0.0)),
                   float(obj.get("p", 1.0)))


def transform_catalogue() -> list[MonotoneTransform]:
    """One representative of every transform family."""
    return [
        MonotoneTransform("arctan"),
        MonotoneTransform("rational"),
        MonotoneTransform("affine", a=2.5, b=0.1),
        MonotoneTransform("power", p=0.5),
        MonotoneTransform("power", p=3.0),
    ]


# ---------------------------------------------------------------------------
# scorers


class Scorer:
    """Base class: subclasses implement ``_score`` on an ``(m, d)`` array."""

    d: int

    def score(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None, :] if self.d > 1 or x.size == 1 else x[:, None]
        if x.ndim != 2 or x.shape[1] != self.d:
            raise DataError(f"scorer expects dimension {self.d}, got points of shape {x.shape}")
        return self._score(x)

    def _score(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise TypeError(f"{type(self).__name__} is not serializable")


@dataclass(frozen=True, eq=False)
class GaussianDensity(Scorer):
    """Gaussian pdf, optionally truncated to (and renormalized on) a box."""

    params: GaussianParams
    support: Box | None = None

    def __post_init__(self):
        if self.support is not None and self.support.d != self.params.d:
            raise DomainError("support box dimension mismatch")

    @property
    def d(self) -> int:
        return self.params.d

    def _score(self, x):
        out = self.params.pdf(x)
        if self.support is not None:
            out = np.where(self.support.contains(x), out / self._support_mass(), 0.0)
        return out

    def _support_mass(self) -> float:
        from scipy.special import ndtr

        p = self.params
        if not p.is_diagonal:
            raise DomainError("truncation is only supported for diagonal covariances")
        sd = np.sqrt(p.diag_cov)
        hi = ndtr((self.support.upper - p.mean) / sd)
        lo = ndtr((self.support.lower - p.mean) / sd)
        return float(np.prod(hi - lo))

    def to_dict(self):
        out = {"kind": "GaussianDensity", "params": self.params.to_dict()}
        if self.support is not None:
            out["params"]["support"] = self.support.to_dict()
        return out


@dataclass(frozen=True, eq=False)
class GaussianMixtureDensity(Scorer):
    params: MixtureParams

    @property
    def d(self) -> int:
        return self.params.d

    def _score(self, x):
        out = np.zeros(x.shape[0])
        for w, comp in zip(self.params.weights, self.params.components):
            out += w * comp.pdf(x)
        return out

    def to_dict(self):
        return {"kind": "GaussianMixtureDensity", "params": self.params.to_dict()}


@dataclass(frozen=True, eq=False)
class DyadicPiecewise(Scorer):
    """Constant level on each cell of the depth-``depth`` dyadic grid of ``box``.

    Cells missing from ``levels`` and points outside the box get ``default``.
    """

    box: Box
    depth: int
    levels: dict = field(default_factory=dict)
    default: float = 0.0

    def __post_init__(self):
        side = 2 ** self.depth
        clean = {}
        for idx, lev in self.levels.items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != self.box.d or min(idx) < 0 or max(idx) >= side:
                raise DomainError(f"cell index {idx} invalid at depth {self.depth}")
            if lev < 0:
                raise DomainError("levels must be nonnegative")
            clean[idx] = float(lev)
        if self.default < 0:
            raise DomainError("default level must be nonnegative")
        object.__setattr__(self, "levels", clean)

    @property
    def d(self) -> int:
        return self.box.d

    @property
    def cell_volume(self) -> float:
        return self.box.volume * 2.0 ** (-self.depth * self.d)

    def _score(self, x):
        from .minvol import cell_indices, flat_index

        out = np.full(x.shape[0], float(self.default))
        if not self.levels:
            return out
        inside = self.box.contains(x)
        idx = cell_indices(x[inside], self.box, self.depth)
        keys = np.array(list(self.levels.keys()), dtype=np.int64)
        vals = np.array(list(self.levels.values()))
        flat_keys = flat_index(keys, self.depth)
        order = np.argsort(flat_keys)
        flat_keys, vals = flat_keys[order], vals[order]
        flat = flat_index(idx, self.depth)
        pos = np.clip(np.searchsorted(flat_keys, flat), 0, len(flat_keys) - 1)
        hit = flat_keys[pos] == flat
        sub = out[inside]
        sub[hit] = vals[pos[hit]]
        out[inside] = sub
        return out

    def level_set_volume(self, t: float) -> float:
        """Exact Lebesgue volume of ``{x in box : s(x) >= t}``."""
        n_cells = 2 ** (self.depth * self.d)
        listed = sum(1 for v in self.levels.values() if v >= t)
        rest = n_cells - len(self.levels) if self.default >= t else 0
        return (listed + rest) * self.cell_volume

    def to_dict(self):
        return {"kind": "DyadicPiecewise",
                "params": {"box": self.box.to_dict(), "depth": self.depth,
                           "levels": [list(k) + [v] for k, v in sorted(self.levels.items())],
                           "default": self.default}}


@dataclass(frozen=True, eq=False)
class MonotoneTransformed(Scorer):
    transform: MonotoneTransform
    base: Scorer

    @property
    def d(self) -> int:
        return self.base.d

    def _score(self, x):
        return self.transform(self.base._score(x))

    def to_dict(self):
        return {"kind": "MonotoneTransformed",
                "params": {"transform": self.transform.to_dict(), "base": self.base.to_dict()}}


class FunctionScorer(Scorer):
    """Wrap a vectorized callable ``f(X) -> scores``. Not serializable."""

    def __init__(self, fn, d: int):
        self.fn = fn
        self.d = d

    def _score(self, x):
        out = np.asarray(self.fn(x), dtype=float)
        if np.any(out < 0):
            raise DomainError("scores must be nonnegative")
        return out


def score_point(scorer: Scorer, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (scorer.d,):
        raise DataError(f"point has dimension {x.size}, scorer expects {scorer.d}")
    return float(scorer.score(x[None, :])[0])


def score_batch(scorer: Scorer, data: Dataset) -> np.ndarray:
    if data.d != scorer.d:
        raise DataError(f"data dimension {data.d} does not match scorer dimension {scorer.d}")
    return scorer.score(data.points)


# ---------------------------------------------------------------------------
# parsing

_KIND_ALIASES = {
    "gaussiandensity": "GaussianDensity", "gaussian": "GaussianDensity",
    "gaussianmixturedensity": "GaussianMixtureDensity", "mixture": "GaussianMixtureDensity",
    "gaussianmixture": "GaussianMixtureDensity",
    "dyadicpiecewise": "DyadicPiecewise", "dyadic": "DyadicPiecewise",
    "monotonetransformed": "MonotoneTransformed", "transformed": "MonotoneTransformed",
}


def mixture_from_spec(spec) -> MixtureParams:
    """Mixture from a preset name, a dict, or a dict with a ``preset`` key."""
    if isinstance(spec, str):
        if spec in PRESETS:
            return PRESETS[spec]()
        raise DataError(f"unknown mixture preset {spec!r}")
    if "preset" in spec:
        return mixture_from_spec(spec["preset"])
    return MixtureParams.from_dict(spec)


def scorer_from_dict(obj: dict) -> Scorer:
    try:
        kind = _KIND_ALIASES[str(obj["kind"]).replace("_", "").replace("-", "").lower()]
        params = obj.get("params", {})
        if kind == "GaussianDensity":
            support = Box.from_dict(params["support"]) if "support" in params else None
            return GaussianDensity(GaussianParams.from_dict(params), support)
        if kind == "GaussianMixtureDensity":
            return GaussianMixtureDensity(mixture_from_spec(params))
        if kind == "DyadicPiecewise":
            levels = {tuple(row[:-1]): row[-1] for row in params.get("levels", [])}
            return DyadicPiecewise(Box.from_dict(params["box"]), int(params["depth"]),
                                   levels, float(params.get("default", 0.0)))
        return MonotoneTransformed(MonotoneTransform.from_dict(params["transform"]),
                                   scorer_from_dict(params["base"]))
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed scorer specification: {exc}") from exc


def load_json_arg(text: str):
    """Parse an inline JSON string, a path to a JSON file, or a bare name."""
    stripped = text.strip()
    if stripped.startswith("{") or stripped.startswith("["):
        return json.loads(stripped)
    path = Path(text)
    if path.is_file():
        return json.loads(path.read_text())
    return stripped


def parse_scorer(text: str) -> Scorer:
    try:
        obj = load_json_arg(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"scorer specification is not valid JSON: {exc}") from exc
    if isinstance(obj, str):
        raise DataError(f"scorer specification {text!r} is neither JSON nor a file")
    return scorer_from_dict(obj)


# ---------------------------------------------------------------------------
# simulation


def simulate_gaussian(params: GaussianParams, n: int, rng: RandomSource) -> np.ndarray:
    z = rng.normal((n, params.d))
    if params.is_diagonal:
        return params.mean + z * np.sqrt(params.diag_cov)
    return params.mean + np.einsum("ij,nj->ni", params.chol, z)


def simulate_mixture(params: MixtureParams, n: int, rng: RandomSource) -> Dataset:
    """Draw ``n`` i.i.d. points: component label by weight, then Gaussian noise."""
    if n < 1:
        raise DomainError("n must be at least 1")
    labels = rng.choice(len(params.components), size=n, p=params.weights)
    z = rng.normal((n, params.d))
    out = np.empty((n, params.d))
    for k, comp in enumerate(params.components):
        mask = labels == k
        if comp.is_diagonal:
            out[mask] = comp.mean + z[mask] * np.sqrt(comp.diag_cov)
        else:
            out[mask] = comp.mean + np.einsum("ij,nj->ni", comp.chol, z[mask])
    return Dataset(out)
