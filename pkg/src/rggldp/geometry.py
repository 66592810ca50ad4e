"""Point sampling and radius-rule graph construction in the unit cube.

Graphs are built with a uniform cell grid whose side is at least the
connection radius, so each point only inspects its own and the adjacent
cells. The grid is fully vectorised with numpy; no Python loop runs per
point.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import (
    InvalidDimensionError,
    InvalidKernelError,
    InvalidParameterError,
    InvalidRadiusError,
)


class BoundaryMode(str, enum.Enum):
    CUBE = "cube"
    TORUS = "torus"


@dataclass(frozen=True)
class PointCloud:
    """``n`` points in ``[0, 1]^d`` stored as an ``(n, d)`` float64 array."""

    d: int
    points: np.ndarray

    def __post_init__(self):
        if self.d < 1:
            raise InvalidDimensionError(f"dimension must be >= 1, got {self.d}")
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, self.d)
        # closed interval so hand-built clouds may sit on the far face
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise InvalidParameterError("point coordinates must lie in [0, 1]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph in CSR form.

    ``indices[indptr[i]:indptr[i + 1]]`` is the strictly increasing
    neighbour list of vertex ``i``.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, n: int, edges: np.ndarray) -> "Graph":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        indptr.setflags(write=False)
        dst.setflags(write=False)
        return cls(n, indptr, dst)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(i).tolist() for i in range(self.n)]

    def edge_array(self) -> np.ndarray:
        """Edges as an ``(m, 2)`` array with ``i < j``, sorted lexicographically."""
        src = np.repeat(np.arange(self.n), self.degrees)
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.edge_array()}


@dataclass(frozen=True, eq=False)
class ColouredGraph:
    graph: Graph
    colours: np.ndarray
    num_colours: int

    def __post_init__(self):
        cols = np.asarray(self.colours, dtype=np.int64)
        if cols.shape != (self.graph.n,):
            raise InvalidParameterError("need exactly one colour per vertex")
        if cols.size and (cols.min() < 0 or cols.max() >= self.num_colours):
            raise InvalidParameterError("colour index out of range")
        cols.setflags(write=False)
        object.__setattr__(self, "colours", cols)

    @property
    def n(self) -> int:
        return self.graph.n


@dataclass(frozen=True)
class ModelParams:
    """Parameters of an uncoloured (``c``) or coloured (``C``, ``nu``) model.

    ``C`` is indexed by colour indices ``0..k-1``; ``colour_names`` is an
    optional display table.
    """

    d: int
    n: int
    c: Optional[float] = None
    C: Optional[np.ndarray] = None
    nu: Optional[np.ndarray] = None
    mode: BoundaryMode = BoundaryMode.CUBE
    seed: int = 0
    colour_names: Optional[tuple[str, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.d < 1:
            raise InvalidDimensionError(f"d must be >= 1, got {self.d}")
        if self.n < 0:
            raise InvalidParameterError(f"n must be >= 0, got {self.n}")
        object.__setattr__(self, "mode", BoundaryMode(self.mode))
        if (self.c is None) == (self.C is None):
            raise InvalidParameterError("give exactly one of c or C")
        if self.c is not None:
            if not self.c > 0:
                raise InvalidParameterError(f"c must be > 0, got {self.c}")
            return
        C = validate_kernel(self.C)
        if self.nu is None:
            raise InvalidParameterError("coloured model needs a colour law nu")
        nu = np.asarray(self.nu, dtype=np.float64)
        if nu.shape != (C.shape[0],) or (nu < 0).any() or abs(nu.sum() - 1.0) > 1e-12:
            raise InvalidParameterError("nu must be a probability vector matching C")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "nu", nu)

    @property
    def coloured(self) -> bool:
        return self.C is not None

    @property
    def num_colours(self) -> int:
        return 1 if self.C is None else self.C.shape[0]


def validate_kernel(C) -> np.ndarray:
    C = np.array(C, dtype=np.float64, ndmin=2)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise InvalidKernelError("kernel must be a square matrix")
    if not np.array_equal(C, C.T):
        raise InvalidKernelError("kernel must be symmetric")
    if (C < 0).any() or not (C > 0).any():
        raise InvalidKernelError("kernel must be nonnegative and not identically zero")
    C.setflags(write=False)
    return C


def sample_points(n: int, d: int, seed) -> PointCloud:
    """Draw ``n`` i.i.d. uniform points in ``[0, 1)^d``.

    ``seed`` is anything ``numpy.random.default_rng`` accepts.
    """
    if d < 1:
        raise InvalidDimensionError(f"dimension must be >= 1, got {d}")
    if n < 0:
        raise InvalidParameterError(f"n must be >= 0, got {n}")
    rng = np.random.default_rng(seed)
    return PointCloud(d, rng.random((n, d)))


def radius_from_c(n: int, d: int, c: float) -> float:
    """Radius with ``n r^d = c``, clamped to 1."""
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    if d < 1:
        raise InvalidDimensionError(f"dimension must be >= 1, got {d}")
    if not c > 0:
        raise InvalidParameterError(f"c must be > 0, got {c}")
    return min((c / n) ** (1.0 / d), 1.0)


def pair_distance_sq(a: np.ndarray, b: np.ndarray, mode: BoundaryMode) -> np.ndarray:
    """Squared distance between matching rows of ``a`` and ``b``."""
    diff = np.abs(a - b)
    if mode == BoundaryMode.TORUS:
        diff = np.minimum(diff, 1.0 - diff)
    return np.einsum("ij,ij->i", diff, diff)


def _neighbour_offsets(d: int, m: int, mode: BoundaryMode) -> list[tuple[int, ...]]:
    offsets = list(itertools.product((-1, 0, 1), repeat=d))
    if mode == BoundaryMode.TORUS:
        # with fewer than 3 cells per axis several offsets alias the same cell
        offsets = sorted({tuple(o % m for o in off) for off in offsets})
    return offsets


def _candidate_pairs(pts: np.ndarray, r: float, mode: BoundaryMode):
    """All pairs ``i < j`` lying in the same or adjacent grid cells."""
    n, d = pts.shape
    m = max(1, int(math.floor(1.0 / r)))
    cell = np.minimum((pts * m).astype(np.int64), m - 1)
    strides = m ** np.arange(d, dtype=np.int64)
    cid = cell @ strides
    order = np.argsort(cid, kind="stable")
    counts = np.bincount(cid, minlength=m ** d)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])

    all_i, all_j = [], []
    for off in _neighbour_offsets(d, m, mode):
        nb = cell + np.asarray(off, dtype=np.int64)
        if mode == BoundaryMode.TORUS:
            nb %= m
            src = np.arange(n)
        else:
            ok = ((nb >= 0) & (nb < m)).all(axis=1)
            nb = nb[ok]
            src = np.flatnonzero(ok)
        nbid = nb @ strides
        cnt = counts[nbid]
        total = int(cnt.sum())
        if total == 0:
            continue
        i = np.repeat(src, cnt)
        group_start = np.repeat(np.cumsum(cnt) - cnt, cnt)
        pos = np.repeat(starts[nbid], cnt) + (np.arange(total) - group_start)
        j = order[pos]
        keep = i < j
        all_i.append(i[keep])
        all_j.append(j[keep])
    if not all_i:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(all_i), np.concatenate(all_j)


def build_rgg(cloud: PointCloud, r: float, mode: BoundaryMode = BoundaryMode.CUBE) -> Graph:
    """Connect ``i != j`` whenever their distance is at most ``r``."""
    if not 0 < r <= 1:
        raise InvalidRadiusError(f"radius must lie in (0, 1], got {r}")
    mode = BoundaryMode(mode)
    pts = cloud.points
    i, j = _candidate_pairs(pts, r, mode)
    keep = pair_distance_sq(pts[i], pts[j], mode) <= r * r
    return Graph.from_edges(cloud.n, np.column_stack([i[keep], j[keep]]))


def colour_radii(C: np.ndarray, n: int, d: int) -> np.ndarray:
    """Matrix of connection radii ``(C/n)^(1/d)`` clamped to 1; zero where ``C`` is."""
    return np.minimum((np.asarray(C) / n) ** (1.0 / d), 1.0)


def sample_colours(n: int, nu: Sequence[float], seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.choice(len(nu), size=n, p=np.asarray(nu, dtype=np.float64))


def build_coloured_rgg(cloud: PointCloud, params: ModelParams, seed, colours=None) -> ColouredGraph:
    """Colour the points i.i.d. from ``params.nu`` and apply the colour-pair radius rule.

    ``colours`` overrides the sampled colouring, which is handy for tests.
    """
    if not params.coloured:
        raise InvalidParameterError("build_coloured_rgg needs coloured params (C, nu)")
    C = validate_kernel(params.C)
    k = C.shape[0]
    n = cloud.n
    if colours is None:
        colours = sample_colours(n, params.nu, seed)
    colours = np.asarray(colours, dtype=np.int64)
    if n == 0:
        return ColouredGraph(Graph.from_edges(0, np.empty((0, 2))), colours, k)
    radii = colour_radii(C, n, cloud.d)
    pts = cloud.points
    i, j = _candidate_pairs(pts, float(radii.max()), params.mode)
    rij = radii[colours[i], colours[j]]
    keep = (rij > 0) & (pair_distance_sq(pts[i], pts[j], params.mode) <= rij * rij)
    graph = Graph.from_edges(n, np.column_stack([i[keep], j[keep]]))
    return ColouredGraph(graph, colours, k)


def build_graph(params: ModelParams, points_seed, colour_seed=None):
    """Sample a cloud and build the model graph described by ``params``."""
    cloud = sample_points(params.n, params.d, points_seed)
    if params.coloured:
        return build_coloured_rgg(cloud, params, colour_seed)
    if params.n == 0:
        return Graph.from_edges(0, np.empty((0, 2)))
    return build_rgg(cloud, radius_from_c(params.n, params.d, params.c), params.mode)
