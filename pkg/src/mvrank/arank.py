"""Adaptive piecewise-constant estimation of the optimal MV curve and A-Rank.

The mass range ``[0, 1 - eps]`` is refined by a binary tree of dyadic
intervals. An interval is split while the volume increase of the estimated
minimum-volume sets across it exceeds the tolerance ``tau``; depth is capped
at ``j_max = floor(log2 n) + 1``. The estimated sets at the leaf
breakpoints are made nested by cumulative union and stacked into a
piecewise-constant scoring function.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import Box, DataError, Dataset, DomainError, StepCurve
from .minvol import (CellSet, DyadicHistogram, build_histogram, cell_indices, flat_index,
                     min_volume_set, phi_penalty, q_star_estimate)
from .mvcurve import exact_mv_for_partition
from .scoring import DyadicPiecewise
from .volume import bounding_box, exact_cellset_volume


def max_depth(n: int) -> int:
    """``floor(ln n / ln 2) + 1``, computed on integers."""
    if n < 1:
        raise DomainError("n must be at least 1")
    return int(n).bit_length()


def local_error_hat(vol_hi: float, vol_lo: float) -> float:
    """Volume increase of the estimated sets across an interval."""
    err = vol_hi - vol_lo
    if err < 0:
        raise AssertionError("estimated minimum-volume sets are not nested")
    return err


def _reduce(j: int, k: int) -> tuple[int, int]:
    while j > 0 and k % 2 == 0:
        j, k = j - 1, k // 2
    return j, k


class _SetCache:
    """Minimum-volume sets at dyadic levels, each solved once."""

    def __init__(self, hist: DyadicHistogram, phi: float, epsilon: float):
        self.hist = hist
        self.phi = phi
        self.top = 1.0 - epsilon
        self._sets: dict[tuple[int, int], CellSet] = {}

    def level(self, j: int, k: int) -> float:
        return k * self.top / 2 ** j

    def get(self, j: int, k: int) -> CellSet:
        key = _reduce(j, k)
        if key not in self._sets:
            self._sets[key] = min_volume_set(self.hist, self.level(*key), self.phi)
        return self._sets[key]

    def cells_in(self, j: int, k: int) -> int:
        return len(self.get(j, k))


@dataclass
class MVNode:
    j: int
    k: int
    lo: float
    hi: float
    error: float | None = None
    leaf: bool = True
    children: tuple = ()


@dataclass
class MVTree:
    epsilon: float
    j_max: int
    tau: float
    root: MVNode
    nodes: list = field(default_factory=list)

    def leaves(self) -> list[MVNode]:
        return sorted((nd for nd in self.nodes if nd.leaf), key=lambda nd: nd.lo)

    @property
    def n_leaves(self) -> int:
        return sum(1 for nd in self.nodes if nd.leaf)

    @property
    def depth(self) -> int:
        return max(nd.j for nd in self.nodes)


def adaptive_estimate(hist: DyadicHistogram, phi: float, tau: float,
                      epsilon: float = 0.05, cache: _SetCache | None = None):
    """Grow the dyadic tree breadth-first and return it with the estimated curve.

    Returns
    -------
    tree : MVTree
    curve : StepCurve
        Equal on each leaf ``[a, b)`` to the volume of the estimated set at ``b``.
    """
    if not tau > 0:
        raise DomainError("tau must be positive")
    if not 0 <= epsilon < 1:
        raise DomainError("epsilon must lie in [0, 1)")
    cache = cache or _SetCache(hist, phi, epsilon)
    j_max = max_depth(hist.n)
    root = MVNode(0, 0, 0.0, cache.top)
    tree = MVTree(epsilon, j_max, tau, root, [root])
    queue = deque([root])
    while queue:
        node = queue.popleft()
        if node.j >= j_max:
            continue
        hi_set = cache.get(node.j, node.k + 1)
        lo_set = cache.get(node.j, node.k)
        node.error = local_error_hat(hi_set.volume, lo_set.volume)
        if not hi_set.feasible:
            continue
        if node.error > tau:
            j = node.j + 1
            kids = tuple(MVNode(j, 2 * node.k + c, cache.level(j, 2 * node.k + c),
                                cache.level(j, 2 * node.k + c + 1)) for c in (0, 1))
            node.leaf = False
            node.children = kids
            tree.nodes.extend(kids)
            queue.extend(kids)
    leaves = tree.leaves()
    breaks = [0.0] + [nd.hi for nd in leaves]
    values = [cache.get(nd.j, nd.k + 1).volume for nd in leaves]
    return tree, StepCurve(breaks, values)


def monotonize(sets: list[CellSet], hist: DyadicHistogram | None = None) -> list[CellSet]:
    """Cumulative unions: ``out[0] = sets[0]``, ``out[k] = sets[k] | out[k-1]``.

    With ``hist`` given, the empirical mass of each union is recomputed from it.
    """
    if not sets:
        return []
    depth = sets[0].depth
    if any(s.depth != depth for s in sets):
        raise DomainError("cell sets mix different depths")
    out = [sets[0]]
    for s in sets[1:]:
        merged = s.union(out[-1])
        if hist is not None:
            merged = CellSet(merged.box, merged.depth, merged.cells,
                             _mass_of(hist, merged), merged.volume, merged.feasible)
        out.append(merged)
    return out


def _mass_of(hist: DyadicHistogram, cells: CellSet) -> float:
    if not len(cells):
        return 0.0
    hit = np.isin(flat_index(hist.cells, hist.depth), flat_index(cells.cells, cells.depth))
    return float(hist.counts[hit].sum()) / hist.n


@dataclass
class ARankModel:
    """Nested cell sets at the learnt mass breakpoints.

    ``layers[k]`` is the set for ``breakpoints[k]``; ``layers[0]`` belongs to
    mass 0 and is normally empty.
    """

    epsilon: float
    depth: int
    box: Box
    breakpoints: np.ndarray
    layers: list
    phi: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        if len(self.layers) != self.breakpoints.size:
            raise DomainError("need one layer per breakpoint")
        flats = [flat_index(layer.cells, self.depth) for layer in self.layers]
        self._first = {}
        for k, fl in enumerate(flats):
            for c in fl.tolist():
                self._first.setdefault(c, k)

    @property
    def n_levels(self) -> int:
        """``K``: the number of leaves, one less than the number of breakpoints."""
        return self.breakpoints.size - 1

    @property
    def d(self) -> int:
        return self.box.d

    def first_layer(self, points: np.ndarray) -> np.ndarray:
        """Smallest ``k`` whose set contains each point, ``-1`` if none."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.d:
            raise DataError(f"model expects dimension {self.d}, got {points.shape[1]}")
        out = np.full(points.shape[0], -1, dtype=np.int64)
        inside = self.box.contains(points)
        if not np.any(inside) or not self._first:
            return out
        flat = flat_index(cell_indices(points[inside], self.box, self.depth), self.depth)
        keys = np.array(sorted(self._first))
        vals = np.array([self._first[c] for c in keys.tolist()])
        pos = np.clip(np.searchsorted(keys, flat), 0, keys.size - 1)
        hit = keys[pos] == flat
        sub = np.full(flat.size, -1, dtype=np.int64)
        sub[hit] = vals[pos[hit]]
        out[inside] = sub
        return out

    def score(self, points) -> np.ndarray:
        """Level ``K - k* + 1`` for the first set ``k*`` holding the point, else 0."""
        k = self.first_layer(points)
        return np.where(k >= 0, self.n_levels - k + 1, 0).astype(np.int64)

    def density_cdf(self, points) -> np.ndarray:
        """Riemann-sum estimate ``sum_{k>=1} (a_k - a_{k-1}) 1{x in set_k}``."""
        k = self.first_layer(points)
        prev = self.breakpoints[np.clip(k - 1, 0, None)]
        val = self.breakpoints[-1] - np.where(k >= 1, prev, self.breakpoints[0])
        return np.where(k >= 0, val, 0.0)

    def to_scorer(self) -> DyadicPiecewise:
        levels = {}
        for c, k in self._first.items():
            idx = []
            side = 2 ** self.depth
            for _ in range(self.d):
                idx.append(c % side)
                c //= side
            levels[tuple(reversed(idx))] = self.n_levels - k + 1
        return DyadicPiecewise(self.box, self.depth, levels, 0.0)

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "depth": self.depth, "box": self.box.to_dict(),
                "breakpoints": self.breakpoints.tolist(),
                "layers": [layer.cells.tolist() for layer in self.layers],
                "masses": [layer.empirical_mass for layer in self.layers],
                "phi": self.phi, "tau": self.tau}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "ARankModel":
        box = Box.from_dict(obj["box"])
        depth = int(obj["depth"])
        masses = obj.get("masses") or [0.0] * len(obj["layers"])
        layers = []
        for cells, mass in zip(obj["layers"], masses):
            arr = np.asarray(cells, dtype=np.int64).reshape(-1, box.d)
            layers.append(CellSet(box, depth, arr, float(mass),
                                  exact_cellset_volume(arr, box, depth)))
        return cls(float(obj["epsilon"]), depth, box, obj["breakpoints"], layers,
                   float(obj.get("phi", 0.0)), float(obj.get("tau", 0.0)))

    @classmethod
    def from_json(cls, text: str) -> "ARankModel":
        try:
            return cls.from_dict(json.loads(text))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed model file: {exc}") from exc


@dataclass
class ARankConfig:
    depth: int = 5
    epsilon: float = 0.05
    phi: float | None = None
    delta: float = 0.05
    rademacher_c: float = 0.0
    tau: float | None = None
    box: Box | None = None
    padding: float = 0.05
    strict: bool = False


def resolve_tau(hist: DyadicHistogram, phi: float, epsilon: float) -> float:
    """Default tolerance ``5 phi / Q*(1 - eps)`` with a histogram plug-in for Q*."""
    q = q_star_estimate(hist, 1.0 - epsilon)
    if q <= 0:
        raise DomainError("density plug-in vanished; supply tau explicitly")
    return 5.0 * phi / q


def fit_arank(data: Dataset, config: ARankConfig | None = None, return_tree: bool = False):
    """Learn a nested piecewise-constant scoring function from ``data``."""
    cfg = config or ARankConfig()
    box = cfg.box or bounding_box(data, cfg.padding)
    hist = build_histogram(data, box, cfg.depth, strict=cfg.strict)
    phi = cfg.phi if cfg.phi is not None else phi_penalty(data.n, cfg.delta, cfg.rademacher_c)
    tau = cfg.tau if cfg.tau is not None else resolve_tau(hist, phi, cfg.epsilon)
    cache = _SetCache(hist, phi, cfg.epsilon)
    tree, _ = adaptive_estimate(hist, phi, tau, cfg.epsilon, cache)
    leaves = tree.leaves()
    breaks = [0.0] + [nd.hi for nd in leaves]
    raw = [cache.get(0, 0)] + [cache.get(nd.j, nd.k + 1) for nd in leaves]
    model = ARankModel(cfg.epsilon, cfg.depth, box, breaks, monotonize(raw, hist), phi, tau)
    return (model, tree) if return_tree else model


def score_arank(model: ARankModel, x) -> int:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (model.d,):
        raise DataError(f"point has dimension {x.size}, model expects {model.d}")
    return int(model.score(x[None, :])[0])


def density_cdf_approx(model: ARankModel, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (model.d,):
        raise DataError(f"point has dimension {x.size}, model expects {model.d}")
    return float(model.density_cdf(x[None, :])[0])


def layer_masses(model: ARankModel, points: np.ndarray | None = None,
                 probabilities=None) -> np.ndarray:
    """Mass of each layer: held-out empirical frequency or supplied probabilities."""
    if probabilities is not None:
        return np.asarray(probabilities, dtype=float)
    if points is None:
        return np.array([layer.empirical_mass for layer in model.layers])
    k = model.first_layer(points)
    counts = np.array([np.sum((k >= 0) & (k <= i)) for i in range(len(model.layers))])
    return counts / np.atleast_2d(points).shape[0]


def mv_curve_of_model(model: ARankModel, points: np.ndarray | None = None,
                      probabilities=None, include_remainder: bool = True) -> StepCurve:
    """MV curve of the A-Rank scorer with exact cell volumes.

    Layers whose mass does not strictly exceed the previous one are dropped.
    With ``include_remainder`` the zero-score region (the rest of the box,
    mass 1) closes the curve so it is defined on ``[0, 1)``.
    """
    masses = layer_masses(model, points, probabilities)
    vols = np.array([layer.volume for layer in model.layers])
    keep_m, keep_v = [], []
    for m, v in zip(masses, vols):
        if m > (keep_m[-1] if keep_m else 0.0) and m <= 1.0:
            keep_m.append(float(m))
            keep_v.append(float(v))
    if include_remainder:
        if not keep_m or keep_m[-1] < 1.0:
            keep_m.append(1.0)
            keep_v.append(max(model.box.volume, keep_v[-1] if keep_v else 0.0))
    return exact_mv_for_partition(keep_m, keep_v)
