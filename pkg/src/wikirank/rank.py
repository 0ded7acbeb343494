"""Power-iteration ranking and the derived orderings.

PageRank is the stationary vector of the damped operator; CheiRank is
PageRank on the reversed network; the two-dimensional rank folds both
orderings into one list by worst position. A non-converged iteration is
reported through flags, not exceptions, so long runs can still emit
partial output when the caller allows it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fileio import fmt_float, read_tsv, write_tsv
from .graph import EdgeSet, NodeRegistry
from .matrix import (
    DEFAULT_ALPHA,
    GoogleMatrixSpec,
    Model,
    TeleportVector,
    WeightedAdjacency,
    assemble,
    column_normalize,
    reverse,
)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 1000


class NonConvergenceError(RuntimeError):
    """Raised by callers that refuse to proceed on a non-converged result."""


@dataclass(frozen=True)
class RankVector:
    """Converged (or best-effort) probability vector with iteration info."""

    values: np.ndarray
    iterations: int
    residual: float
    converged: bool

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class RankingList:
    """A full ordering of the node set.

    order[k] is the node at rank k+1; position[i] is the 1-based rank of
    node i; scores[i] is the value that produced the ordering.
    """

    order: np.ndarray
    position: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        n = self.order.shape[0]
        if self.position.shape != (n,) or self.scores.shape != (n,):
            raise ValueError("order, position, scores must share one length")
        # order and position must be inverse permutations
        if not np.array_equal(self.position[self.order], np.arange(1, n + 1)):
            raise ValueError("position is not the inverse of order")

    @property
    def n(self) -> int:
        return self.order.shape[0]

    @classmethod
    def from_order(cls, order: np.ndarray, scores: np.ndarray) -> RankingList:
        position = np.empty(order.shape[0], dtype=np.int64)
        position[order] = np.arange(1, order.shape[0] + 1)
        return cls(order=order, position=position, scores=scores)


def pagerank(
    spec: GoogleMatrixSpec,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> RankVector:
    """Power iteration from the teleport vector, L1 stopping rule.

    Each step renormalizes to guard against drift; the loop stops when
    the L1 change falls below tol or max_iter is reached.
    """
    x = spec.v.dense().copy()
    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        y = spec.matvec(x)
        y /= y.sum()
        residual = float(np.abs(y - x).sum())
        x = y
        if residual < tol:
            return RankVector(values=x, iterations=iterations,
                              residual=residual, converged=True)
    return RankVector(values=x, iterations=iterations,
                      residual=residual, converged=False)


def cheirank(
    adj: WeightedAdjacency,
    model: Model | str,
    v: TeleportVector | None = None,
    alpha: float = DEFAULT_ALPHA,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    uniform_teleport: bool = False,
) -> RankVector:
    """PageRank of the link-reversed network.

    For wcpv the same pageview teleport applies by default;
    uniform_teleport=True restores the plain damping term instead.
    """
    model = Model(model)
    s_star = column_normalize(reverse(adj))
    if uniform_teleport and model is Model.WCPV:
        spec = GoogleMatrixSpec(s=s_star, v=TeleportVector(n=s_star.n), alpha=alpha)
    else:
        spec = assemble(model, s_star, v=v, alpha=alpha)
    return pagerank(spec, tol=tol, max_iter=max_iter)


def rank_from_scores(scores: np.ndarray) -> RankingList:
    """Descending-score ordering; ties broken by ascending node id."""
    scores = np.asarray(scores, dtype=np.float64)
    if np.isnan(scores).any():
        raise ValueError("scores contain NaN")
    ids = np.arange(scores.shape[0])
    order = np.lexsort((ids, -scores))
    return RankingList.from_order(order, scores)


def two_d_rank(k: RankingList, k_star: RankingList) -> RankingList:
    """Combined ordering by worst of the two positions.

    Sort key: max(K, K*) ascending, then K* ascending, then K ascending.
    Scores carry the max position so downstream tools can report it.
    """
    if k.n != k_star.n:
        raise ValueError("rankings cover different node sets")
    kmax = np.maximum(k.position, k_star.position)
    order = np.lexsort((k.position, k_star.position, kmax))
    return RankingList.from_order(order, kmax.astype(np.float64))


def incoming_click_totals(edges: EdgeSet) -> np.ndarray:
    """Per-node sum of clicks over incoming links."""
    return np.bincount(
        edges.dst, weights=edges.clicks.astype(np.float64), minlength=edges.n_nodes
    ).astype(np.int64)


def write_ranking(
    path: str | Path,
    ranking: RankingList,
    registry: NodeRegistry,
    limit: int | None = None,
) -> None:
    """Rank-ordered TSV: rank, id, language, title, score."""
    n = ranking.n if limit is None else min(limit, ranking.n)

    def rows():
        for r in range(n):
            i = int(ranking.order[r])
            yield (r + 1, i, registry.language_of(i), registry.title_of(i),
                   fmt_float(float(ranking.scores[i])))

    write_tsv(path, ["rank", "id", "language", "title", "score"], rows())


def load_ranking(path: str | Path) -> list[tuple[int, int, str, str, float]]:
    """Parse a ranking TSV back into (rank, id, language, title, score)."""
    out = []
    for fields in read_tsv(path):
        rank, node_id, language, title, score = fields
        out.append((int(rank), int(node_id), language, title, float(score)))
    return out
