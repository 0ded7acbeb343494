"""Sparse transition-structure construction for the three network models.

nowc uses bare links (weight 1), wc replaces link weights by click counts
where available (falling back to 1 for unclicked links), and wcpv
additionally teleports proportionally to pageviews. The full damped
operator is never materialized: consumers apply sparse matvec, then the
dangling correction, then the teleport term, in that order.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse

from .graph import EdgeSet, NodeRegistry, RedirectMap
from .ingest import PageviewRecord

DEFAULT_ALPHA = 0.85

_MATRIX_MAGIC = b"WKSM"
_MATRIX_VERSION = 1


class Model(str, Enum):
    NOWC = "nowc"
    WC = "wc"
    WCPV = "wcpv"


@dataclass(frozen=True)
class WeightedAdjacency:
    """Column-major weighted links: mat[i, j] > 0 is the weight of edge
    j -> i. No self-entries; rows sorted within each column."""

    mat: sparse.csc_matrix

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """(row indices, weights) of column j."""
        start, end = self.mat.indptr[j], self.mat.indptr[j + 1]
        return self.mat.indices[start:end], self.mat.data[start:end]


@dataclass(frozen=True)
class StochasticMatrix:
    """Column-normalized transition structure. Dangling columns (zero
    out-weight) store nothing; their uniform 1/N contribution is applied
    during matvec."""

    mat: sparse.csc_matrix
    dangling: np.ndarray  # bool mask, True where the column is dangling

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Full stochastic action including the dangling correction."""
        y = self.mat.dot(x)
        dangling_mass = float(x[self.dangling].sum())
        if dangling_mass:
            y += dangling_mass / self.n
        return y


class TeleportKind(str, Enum):
    UNIFORM = "uniform"
    PAGEVIEW = "pageview"


@dataclass(frozen=True)
class TeleportVector:
    """Preferential jump distribution; uniform stores no values."""

    n: int
    kind: TeleportKind = TeleportKind.UNIFORM
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind is TeleportKind.UNIFORM:
            if self.values is not None:
                raise ValueError("uniform teleport stores no values")
        else:
            v = self.values
            if v is None or v.shape != (self.n,):
                raise ValueError("pageview teleport needs a length-N vector")
            if (v < 0).any():
                raise ValueError("teleport entries must be nonnegative")
            if abs(float(v.sum()) - 1.0) > 1e-12:
                raise ValueError("teleport vector must sum to 1")

    def dense(self) -> np.ndarray:
        if self.kind is TeleportKind.UNIFORM:
            return np.full(self.n, 1.0 / self.n)
        return self.values


@dataclass(frozen=True)
class GoogleMatrixSpec:
    """Damped operator alpha*S + (1-alpha)*v*1^T, held implicitly."""

    s: StochasticMatrix
    v: TeleportVector
    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.s.n != self.v.n:
            raise ValueError("stochastic matrix and teleport dimensions differ")

    @property
    def n(self) -> int:
        return self.s.n

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Exact linear action on any vector (teleport scaled by sum(x))."""
        y = self.alpha * self.s.matvec(x)
        y += (1.0 - self.alpha) * float(x.sum()) * self.v.dense()
        return y


def build_weighted_adjacency(edges: EdgeSet, model: Model | str) -> WeightedAdjacency:
    """Model-specific weights: nowc all 1; wc/wcpv click counts with a
    weight-1 fallback for structural links that received no clicks."""
    model = Model(model)
    n = edges.n_nodes
    if n == 0:
        raise ValueError("empty graph")
    if model is Model.NOWC:
        weights = np.ones(edges.n_edges, dtype=np.float64)
    else:
        weights = np.where(edges.clicks > 0, edges.clicks, 1).astype(np.float64)
    # rows are targets, columns are sources
    mat = sparse.csc_matrix(
        (weights, (edges.dst, edges.src)), shape=(n, n), dtype=np.float64
    )
    mat.sort_indices()
    return WeightedAdjacency(mat)


def column_normalize(adj: WeightedAdjacency) -> StochasticMatrix:
    """Divide each nonzero column by its sum; zero columns go into the
    dangling set and keep no stored entries."""
    mat = adj.mat.copy()
    col_sums = np.asarray(mat.sum(axis=0)).ravel()
    dangling = col_sums == 0.0
    inv = np.zeros_like(col_sums)
    nz = ~dangling
    inv[nz] = 1.0 / col_sums[nz]
    mat.data *= np.repeat(inv, np.diff(mat.indptr))
    return StochasticMatrix(mat=mat, dangling=dangling)


def reverse(adj: WeightedAdjacency) -> WeightedAdjacency:
    """Transpose the weighted structure (reverse every link)."""
    mat = adj.mat.transpose().tocsc()
    mat.sort_indices()
    return WeightedAdjacency(mat)


def aggregate_views(
    records: Iterable[PageviewRecord],
    registry: NodeRegistry,
    language: str,
    redirects: RedirectMap | None = None,
    counts=None,
) -> np.ndarray:
    """Sum per-title view records into a per-node array; titles resolve
    through redirects and unknown titles are dropped (and tallied when a
    GraphCounts is supplied)."""
    views = np.zeros(registry.n, dtype=np.int64)
    for rec in records:
        if counts is not None:
            counts.view_rows += 1
        title = rec.title if redirects is None else redirects.resolve(rec.title)
        node_id = registry.get(language, title)
        if node_id is None:
            if counts is not None:
                counts.views_unknown_titles += 1
            continue
        views[node_id] += rec.views
    return views


def teleport_from_pageviews(
    views: np.ndarray | Mapping[int, int],
    n: int,
    epsilon: float = 0.0,
) -> TeleportVector:
    """Normalize per-node view counts into a teleport vector.

    Zero-view nodes get zero mass (no smoothing); epsilon > 0 mixes in
    epsilon * uniform for callers needing strict positivity. An all-zero
    view vector falls back to uniform with a warning.
    """
    if isinstance(views, Mapping):
        arr = np.zeros(n, dtype=np.float64)
        for node_id, v in views.items():
            arr[node_id] = v
    else:
        arr = np.asarray(views, dtype=np.float64)
        if arr.shape != (n,):
            raise ValueError("views length does not match node count")
    total = float(arr.sum())
    if total <= 0.0:
        logging.getLogger(__name__).warning(
            "all view counts are zero; falling back to uniform teleport"
        )
        return TeleportVector(n=n)
    values = arr / total
    if epsilon > 0.0:
        values = epsilon / n + (1.0 - epsilon) * values
        values = values / values.sum()
    return TeleportVector(n=n, kind=TeleportKind.PAGEVIEW, values=values)


def assemble(
    model: Model | str,
    s: StochasticMatrix,
    v: TeleportVector | None = None,
    alpha: float = DEFAULT_ALPHA,
) -> GoogleMatrixSpec:
    """Pair the stochastic matrix with the model's teleport: uniform for
    nowc/wc, the pageview vector for wcpv."""
    model = Model(model)
    if model is Model.WCPV:
        if v is None:
            raise ValueError("wcpv requires a pageview teleport vector")
        teleport = v
    else:
        teleport = TeleportVector(n=s.n)
    return GoogleMatrixSpec(s=s, v=teleport, alpha=alpha)


# --- snapshot / export -------------------------------------------------------


def save_stochastic(path: str | Path, s: StochasticMatrix) -> None:
    """Binary snapshot: header, column offsets, row indices, weights,
    dangling bitmap."""
    from .fileio import atomic_write

    mat = s.mat
    with atomic_write(path, "wb") as fh:
        fh.write(_MATRIX_MAGIC)
        fh.write(struct.pack("<IQQ", _MATRIX_VERSION, mat.shape[0], mat.nnz))
        fh.write(mat.indptr.astype("<i8").tobytes())
        fh.write(mat.indices.astype("<i8").tobytes())
        fh.write(mat.data.astype("<f8").tobytes())
        fh.write(np.packbits(s.dangling).tobytes())


def load_stochastic(path: str | Path) -> StochasticMatrix:
    try:
        with open(path, "rb") as fh:
            if fh.read(4) != _MATRIX_MAGIC:
                raise ValueError(f"{path}: not a matrix snapshot")
            version, n, nnz = struct.unpack("<IQQ", fh.read(20))
            if version != _MATRIX_VERSION:
                raise ValueError(
                    f"{path}: unsupported matrix snapshot version {version}"
                )
            indptr = np.frombuffer(fh.read(8 * (n + 1)), dtype="<i8").astype(np.int64)
            indices = np.frombuffer(fh.read(8 * nnz), dtype="<i8").astype(np.int64)
            data = np.frombuffer(fh.read(8 * nnz), dtype="<f8").astype(np.float64)
            dangling = np.unpackbits(
                np.frombuffer(fh.read((n + 7) // 8), dtype=np.uint8), count=n
            ).astype(bool)
        if indptr.size != n + 1 or indices.size != nnz or data.size != nnz:
            raise ValueError(f"{path}: truncated matrix snapshot")
    except struct.error as exc:
        raise ValueError(f"{path}: truncated matrix snapshot") from exc
    mat = sparse.csc_matrix((data, indices, indptr), shape=(n, n))
    return StochasticMatrix(mat=mat, dangling=dangling)


def write_teleport_tsv(path: str | Path, v: TeleportVector) -> None:
    from .fileio import write_tsv, fmt_float

    dense = v.dense()
    write_tsv(path, ["id", "value"],
              ((i, fmt_float(dense[i])) for i in range(v.n)))
