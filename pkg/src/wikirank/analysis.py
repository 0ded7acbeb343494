"""Comparisons between rankings: overlap curves, density grids, top tables.

All products here are plain data (arrays and rows); figure rendering
lives in the plotting module and is driven from the CLI report path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .fileio import atomic_write, fmt_float, write_tsv
from .rank import RankingList


@dataclass(frozen=True)
class OverlapCurve:
    """Top-j agreement between two rankings.

    shared[k] is the fraction of the top-(j=k+1) lists' common members;
    exact[k] is the fraction of positions 1..j holding the same node in
    both. exact <= shared pointwise.
    """

    j: np.ndarray
    shared: np.ndarray
    exact: np.ndarray


def overlap(a: RankingList, b: RankingList, j_max: int) -> OverlapCurve:
    """Incremental top-j overlap for j = 1..j_max.

    Membership intersections grow monotonically, so a running count over
    two seen-sets costs O(j_max) set operations total.
    """
    if a.n != b.n:
        raise ValueError("rankings cover different node sets")
    if not (1 <= j_max <= a.n):
        raise ValueError(f"j_max must be in [1, {a.n}], got {j_max}")
    seen_a: set[int] = set()
    seen_b: set[int] = set()
    shared = np.empty(j_max, dtype=np.float64)
    exact = np.empty(j_max, dtype=np.float64)
    common = 0
    exact_hits = 0
    for j in range(1, j_max + 1):
        na = int(a.order[j - 1])
        nb = int(b.order[j - 1])
        if na == nb:
            exact_hits += 1
            common += 1
        else:
            if na in seen_b:
                common += 1
            if nb in seen_a:
                common += 1
        seen_a.add(na)
        seen_b.add(nb)
        shared[j - 1] = common / j
        exact[j - 1] = exact_hits / j
    return OverlapCurve(j=np.arange(1, j_max + 1), shared=shared, exact=exact)


@dataclass(frozen=True)
class DensityGrid:
    """Cell counts over the (log10 K, log10 K*) plane.

    boundaries has cells+1 edges spanning [0, log10 N]; counts[x, y] is
    the number of nodes whose log-positions fall in cell (x, y). Overlay
    entries are (m, 2) arrays of cell coordinates for marked node sets.
    """

    counts: np.ndarray
    boundaries: np.ndarray
    overlays: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def cells(self) -> int:
        return self.counts.shape[0]


def _log_cell(positions: np.ndarray, span: float, cells: int) -> np.ndarray:
    """Map 1-based positions to log-scale cell indices, clamped to range."""
    logs = np.log10(positions.astype(np.float64))
    idx = np.floor(logs / span * cells).astype(np.int64)
    return np.clip(idx, 0, cells - 1)


def density_grid(
    k: RankingList,
    k_star: RankingList,
    cells: int = 200,
    overlays: Mapping[str, np.ndarray] | None = None,
    overlay_top: int = 100,
) -> DensityGrid:
    """Bin every node by its (K, K*) pair on decimal-log axes.

    Every node lands in exactly one cell, so counts sum to N. overlays
    maps a name to a per-node score array; the overlay_top highest-scored
    nodes are translated to their cell coordinates.
    """
    if k.n != k_star.n:
        raise ValueError("rankings cover different node sets")
    n = k.n
    span = math.log10(n) if n > 1 else 1.0
    cx = _log_cell(k.position, span, cells)
    cy = _log_cell(k_star.position, span, cells)
    counts = np.zeros((cells, cells), dtype=np.int64)
    np.add.at(counts, (cx, cy), 1)
    boundaries = np.linspace(0.0, span, cells + 1)

    overlay_cells: dict[str, np.ndarray] = {}
    if overlays:
        for name, scores in overlays.items():
            scores = np.asarray(scores, dtype=np.float64)
            if scores.shape != (n,):
                raise ValueError(f"overlay {name!r} length does not match node count")
            m = min(overlay_top, n)
            ids = np.arange(n)
            top = np.lexsort((ids, -scores))[:m]
            overlay_cells[name] = np.column_stack((cx[top], cy[top]))
    return DensityGrid(counts=counts, boundaries=boundaries, overlays=overlay_cells)


@dataclass(frozen=True)
class TopTable:
    """Aligned top-k listing: per rank, the base list's node and where
    that node sits in every other ranking."""

    base: str
    names: tuple[str, ...]
    rows: tuple[tuple, ...]  # (rank, id, title, {name: position})


def top_table(
    lists: Mapping[str, RankingList],
    base: str,
    k: int,
    titles: Sequence[str],
) -> TopTable:
    """k rows in base order; titles is indexed by node id."""
    if base not in lists:
        raise ValueError(f"base ranking {base!r} not among {sorted(lists)}")
    base_list = lists[base]
    names = tuple(name for name in lists if name != base)
    k = min(k, base_list.n)
    rows = []
    for r in range(k):
        node = int(base_list.order[r])
        positions = {name: int(lists[name].position[node]) for name in names}
        rows.append((r + 1, node, titles[node], positions))
    return TopTable(base=base, names=names, rows=tuple(rows))


# --- serialization -----------------------------------------------------------


def write_overlap_tsv(path: str | Path, curve: OverlapCurve) -> None:
    write_tsv(
        path,
        ["j", "eta_N", "eta_O"],
        (
            (int(curve.j[i]), fmt_float(curve.shared[i]), fmt_float(curve.exact[i]))
            for i in range(curve.j.shape[0])
        ),
    )


def write_density_tsv(path: str | Path, grid: DensityGrid) -> None:
    """All cells, zeros included, row-major in cell_x then cell_y."""
    cells = grid.cells

    def rows():
        for x in range(cells):
            for y in range(cells):
                yield (x, y, int(grid.counts[x, y]))

    write_tsv(path, ["cell_x", "cell_y", "count"], rows())


def write_overlay_tsv(path: str | Path, cells: np.ndarray) -> None:
    write_tsv(
        path,
        ["cell_x", "cell_y"],
        ((int(cells[i, 0]), int(cells[i, 1])) for i in range(cells.shape[0])),
    )


def write_top_table_tsv(path: str | Path, table: TopTable) -> None:
    header = ["rank", "id", "title", f"{table.base}_rank"]
    header += [f"{name}_rank" for name in table.names]

    def rows():
        for rank, node, title, positions in table.rows:
            row = [rank, node, title, rank]
            row += [positions[name] for name in table.names]
            yield tuple(row)

    write_tsv(path, header, rows())


def write_top_table_json(path: str | Path, table: TopTable) -> None:
    payload = {
        "base": table.base,
        "rankings": [table.base, *table.names],
        "rows": [
            {
                "rank": rank,
                "id": node,
                "title": title,
                "positions": {table.base: rank, **positions},
            }
            for rank, node, title, positions in table.rows
        ],
    }
    with atomic_write(path, "w") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
