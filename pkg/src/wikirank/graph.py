"""Directed graph construction: node identity, redirect resolution,
deduplication, exclusion filters and multilingual aggregation.

The pipeline is resolve_redirects -> dedup_and_filter -> attach_clicks,
yielding an immutable EdgeSet over a frozen NodeRegistry. All drop events
(redlinks, duplicates, self-loops, redirect cycles, orphan clicks) are
tallied in GraphCounts and surfaced in the counts manifest.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .ingest import ClickRecord, LinkType, RawLinkRecord, RedirectRecord, normalize_title

logger = logging.getLogger(__name__)

REDIRECT_CHAIN_CAP = 16  # hops; longer chains are treated as cycles

_SNAPSHOT_MAGIC = b"WKGR"
_SNAPSHOT_VERSION = 1


class FrozenRegistryError(RuntimeError):
    pass


class NodeRegistry:
    """Bijection between (language, normalized title) pairs and dense
    0-based node ids. Single-writer during construction; freeze() before
    sharing."""

    def __init__(self) -> None:
        self._ids: dict[tuple[str, str], int] = {}
        self._keys: list[tuple[str, str]] = []
        self._frozen = False

    def __len__(self) -> int:
        return len(self._keys)

    @property
    def n(self) -> int:
        return len(self._keys)

    def add(self, language: str, title: str) -> int:
        if self._frozen:
            raise FrozenRegistryError("registry is frozen")
        key = (language, title)
        node_id = self._ids.get(key)
        if node_id is None:
            node_id = len(self._keys)
            self._ids[key] = node_id
            self._keys.append(key)
        return node_id

    def get(self, language: str, title: str) -> int | None:
        return self._ids.get((language, title))

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._ids

    def key_of(self, node_id: int) -> tuple[str, str]:
        return self._keys[node_id]

    def language_of(self, node_id: int) -> str:
        return self._keys[node_id][0]

    def title_of(self, node_id: int) -> str:
        return self._keys[node_id][1]

    def keys(self) -> Iterator[tuple[str, str]]:
        return iter(self._keys)

    def freeze(self) -> "NodeRegistry":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    @classmethod
    def from_titles(cls, language: str, titles: Iterable[str]) -> "NodeRegistry":
        reg = cls()
        for t in titles:
            reg.add(language, t)
        return reg


@dataclass
class GraphCounts:
    """Drop/keep tallies mirroring the all/unified manifest columns."""

    all_pairs: int = 0
    unified: int = 0
    redlinks: int = 0
    self_loops: int = 0
    redirect_cycles: int = 0
    click_rows: int = 0
    clicks_attached: int = 0
    orphan_clicks_dropped: int = 0
    orphan_clicks_added: int = 0
    click_unknown_titles: int = 0
    view_rows: int = 0
    views_unknown_titles: int = 0

    @property
    def duplicates(self) -> int:
        return self.all_pairs - self.unified - self.redlinks - self.self_loops

    def as_dict(self) -> dict:
        d = asdict(self)
        d["duplicates"] = self.duplicates
        return d


class RedirectMap:
    """Alias title -> canonical title map for one language edition.

    Chains are followed to a fixed point (capped at REDIRECT_CHAIN_CAP
    hops); every member of a cycle is treated as canonical. Resolution is
    memoized, so resolving twice is the identity.
    """

    def __init__(self, raw: Mapping[str, str] | None = None) -> None:
        self._raw: dict[str, str] = dict(raw) if raw else {}
        self._resolved: dict[str, str] = {}
        self.cycles = 0

    def __len__(self) -> int:
        return len(self._raw)

    @classmethod
    def from_records(cls, records: Iterable[RedirectRecord]) -> "RedirectMap":
        m = cls()
        for rec in records:
            m._raw[rec.from_title] = rec.to_title
        return m

    def update(self, records: Iterable[RedirectRecord]) -> None:
        for rec in records:
            self._raw[rec.from_title] = rec.to_title
        self._resolved.clear()

    def is_source(self, title: str) -> bool:
        """True when title itself redirects somewhere."""
        return title in self._raw

    def resolve(self, title: str) -> str:
        cached = self._resolved.get(title)
        if cached is not None:
            return cached
        seen = {title}
        cur = title
        result = None
        for _ in range(REDIRECT_CHAIN_CAP):
            nxt = self._raw.get(cur)
            if nxt is None:
                result = cur
                break
            if nxt in seen:
                # cycle: the member where the walk re-enters is canonical
                self.cycles += 1
                result = nxt
                break
            seen.add(nxt)
            cur = nxt
        if result is None:
            # chain longer than the cap: treat like a cycle
            self.cycles += 1
            result = title
        self._resolved[title] = result
        return result


def resolve_redirects(
    records: Iterable[RawLinkRecord],
    redirects: RedirectMap,
    counts: GraphCounts | None = None,
) -> Iterator[RawLinkRecord]:
    """Map both endpoints of each record to canonical titles; records whose
    endpoints collapse onto each other are dropped as self-loops."""
    counts = counts if counts is not None else GraphCounts()
    for rec in records:
        src = redirects.resolve(rec.source_title)
        dst = redirects.resolve(rec.target_title)
        if src == dst:
            counts.all_pairs += 1  # seen, but never reaches dedup
            counts.self_loops += 1
            continue
        if src == rec.source_title and dst == rec.target_title:
            yield rec
        else:
            yield RawLinkRecord(src, dst, rec.weight)


@dataclass
class EdgeSet:
    """Immutable deduplicated directed edges with per-edge click weights.

    Edges are sorted by (src, dst). clicks is 0 where no click data exists;
    augmented marks edges present only in the clickstream (kept orphans).
    """

    src: np.ndarray
    dst: np.ndarray
    clicks: np.ndarray
    augmented: np.ndarray
    n_nodes: int
    counts: GraphCounts = field(default_factory=GraphCounts)

    @property
    def n_edges(self) -> int:
        return int(self.src.size)

    def keys(self) -> np.ndarray:
        """Edge identity as src * n_nodes + dst (sorted ascending)."""
        return self.src * np.int64(self.n_nodes) + self.dst

    @classmethod
    def from_arrays(
        cls,
        src: np.ndarray,
        dst: np.ndarray,
        n_nodes: int,
        clicks: np.ndarray | None = None,
        augmented: np.ndarray | None = None,
        counts: GraphCounts | None = None,
    ) -> "EdgeSet":
        """Build from parallel arrays: drops self-loops, collapses duplicate
        pairs (clicks summed), sorts by (src, dst)."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        counts = counts if counts is not None else GraphCounts()
        counts.all_pairs += int(src.size)
        if clicks is None:
            clicks = np.zeros(src.size, dtype=np.int64)
        if augmented is None:
            augmented = np.zeros(src.size, dtype=bool)
        keep = src != dst
        counts.self_loops += int(src.size - keep.sum())
        src, dst = src[keep], dst[keep]
        clicks, augmented = clicks[keep], augmented[keep]
        key = src * np.int64(n_nodes) + dst
        uniq, inv = np.unique(key, return_inverse=True)
        out_clicks = np.zeros(uniq.size, dtype=np.int64)
        np.add.at(out_clicks, inv, clicks)
        out_aug = np.ones(uniq.size, dtype=bool)
        np.logical_and.at(out_aug, inv, augmented)
        counts.unified += int(uniq.size)
        return cls(
            src=uniq // n_nodes,
            dst=uniq % n_nodes,
            clicks=out_clicks,
            augmented=out_aug,
            n_nodes=n_nodes,
            counts=counts,
        )


def dedup_and_filter(
    records: Iterable[RawLinkRecord],
    registry: NodeRegistry,
    language: str,
    counts: GraphCounts | None = None,
    batch_size: int = 1_000_000,
) -> EdgeSet:
    """Collapse duplicate (src, dst) pairs to single edges and drop records
    with an endpoint missing from the registry (redlink removal).

    Streams with bounded memory: pending keys are compacted into a sorted
    unique array every batch_size records.
    """
    counts = counts if counts is not None else GraphCounts()
    n = registry.n
    uniq = np.empty(0, dtype=np.int64)
    pending: list[int] = []

    def compact() -> None:
        nonlocal uniq, pending
        if pending:
            uniq = np.union1d(uniq, np.asarray(pending, dtype=np.int64))
            pending = []

    for rec in records:
        counts.all_pairs += 1
        src_id = registry.get(language, rec.source_title)
        dst_id = registry.get(language, rec.target_title)
        if src_id is None or dst_id is None:
            counts.redlinks += 1
            continue
        if src_id == dst_id:
            counts.self_loops += 1
            continue
        pending.append(src_id * n + dst_id)
        if len(pending) >= batch_size:
            compact()
    compact()

    counts.unified += int(uniq.size)
    return EdgeSet(
        src=uniq // n if n else uniq,
        dst=uniq % n if n else uniq,
        clicks=np.zeros(uniq.size, dtype=np.int64),
        augmented=np.zeros(uniq.size, dtype=bool),
        n_nodes=n,
        counts=counts,
    )


def attach_clicks(
    edges: EdgeSet,
    clicks: Iterable[ClickRecord],
    registry: NodeRegistry,
    language: str,
    redirects: RedirectMap | None = None,
    keep_orphans: bool = False,
) -> EdgeSet:
    """Attach link-type click counts to matching edges.

    Pairs not present as structural edges are dropped (the dump and the
    clickstream cover different months) unless keep_orphans, in which case
    they become click-augmented edges. Pairs naming unknown titles are
    always dropped.
    """
    counts = edges.counts
    n = edges.n_nodes
    key_list: list[int] = []
    count_list: list[int] = []
    for rec in clicks:
        if rec.link_type is not LinkType.LINK:
            continue
        counts.click_rows += 1
        prev, curr = rec.prev_title, rec.curr_title
        if redirects is not None:
            prev, curr = redirects.resolve(prev), redirects.resolve(curr)
        src_id = registry.get(language, prev)
        dst_id = registry.get(language, curr)
        if src_id is None or dst_id is None:
            counts.click_unknown_titles += 1
            continue
        if src_id == dst_id:
            counts.orphan_clicks_dropped += 1
            continue
        key_list.append(src_id * n + dst_id)
        count_list.append(rec.count)

    new_clicks = edges.clicks.copy()
    if not key_list:
        return EdgeSet(edges.src, edges.dst, new_clicks, edges.augmented.copy(),
                       n, counts)

    keys = np.asarray(key_list, dtype=np.int64)
    amounts = np.asarray(count_list, dtype=np.int64)
    ukeys, inv = np.unique(keys, return_inverse=True)
    totals = np.zeros(ukeys.size, dtype=np.int64)
    np.add.at(totals, inv, amounts)

    edge_keys = edges.keys()
    if edge_keys.size:
        pos = np.minimum(np.searchsorted(edge_keys, ukeys), edge_keys.size - 1)
        found = edge_keys[pos] == ukeys
        new_clicks[pos[found]] += totals[found]
        counts.clicks_attached += int(found.sum())
    else:
        found = np.zeros(ukeys.size, dtype=bool)

    orphan_keys = ukeys[~found]
    orphan_totals = totals[~found]
    if not keep_orphans or orphan_keys.size == 0:
        counts.orphan_clicks_dropped += int(orphan_keys.size)
        return EdgeSet(edges.src, edges.dst, new_clicks, edges.augmented.copy(),
                       n, counts)

    counts.orphan_clicks_added += int(orphan_keys.size)
    src = np.concatenate([edges.src, orphan_keys // n])
    dst = np.concatenate([edges.dst, orphan_keys % n])
    clk = np.concatenate([new_clicks, orphan_totals])
    aug = np.concatenate([edges.augmented, np.ones(orphan_keys.size, dtype=bool)])
    order = np.argsort(src * np.int64(n) + dst, kind="stable")
    counts.unified += int(orphan_keys.size)
    return EdgeSet(src[order], dst[order], clk[order], aug[order], n, counts)


def exclude_nodes(
    edges: EdgeSet,
    registry: NodeRegistry,
    titles: Sequence[str],
) -> tuple[EdgeSet, NodeRegistry, np.ndarray]:
    """Remove the named nodes (matched by title in every language) and all
    incident edges; re-densify ids.

    Returns the reduced graph plus an old->new id map (-1 for removed).
    Absent titles log a warning and are otherwise ignored.
    """
    wanted = set(titles)
    removed = np.zeros(registry.n, dtype=bool)
    found_titles = set()
    for node_id, (_, title) in enumerate(registry.keys()):
        if title in wanted:
            removed[node_id] = True
            found_titles.add(title)
    for title in wanted - found_titles:
        logger.warning("exclude: title not in graph: %s", title)

    old_to_new = np.full(registry.n, -1, dtype=np.int64)
    keep_ids = np.flatnonzero(~removed)
    old_to_new[keep_ids] = np.arange(keep_ids.size, dtype=np.int64)

    new_reg = NodeRegistry()
    for old_id in keep_ids:
        lang, title = registry.key_of(int(old_id))
        new_reg.add(lang, title)
    new_reg.freeze()

    mask = ~(removed[edges.src] | removed[edges.dst])
    new_counts = GraphCounts(all_pairs=int(mask.sum()), unified=int(mask.sum()))
    reduced = EdgeSet(
        src=old_to_new[edges.src[mask]],
        dst=old_to_new[edges.dst[mask]],
        clicks=edges.clicks[mask].copy(),
        augmented=edges.augmented[mask].copy(),
        n_nodes=new_reg.n,
        counts=new_counts,
    )
    return reduced, new_reg, old_to_new


class ConceptMapError(ValueError):
    """A title is mapped to more than one concept id."""


def load_concept_map(rows: Iterable[Sequence[str]]) -> dict[tuple[str, str], str]:
    """Build a (language, title) -> concept id map from TSV rows; a title
    mapped to two different concepts rejects the whole file."""
    mapping: dict[tuple[str, str], str] = {}
    for row in rows:
        if len(row) != 3:
            raise ConceptMapError(f"concept map row needs 3 fields, got {row!r}")
        lang, title, concept = row
        key = (lang, normalize_title(title))
        if key in mapping and mapping[key] != concept:
            raise ConceptMapError(
                f"conflicting concepts for {key[0]}:{key[1]}: "
                f"{mapping[key]} vs {concept}"
            )
        mapping[key] = concept
    return mapping


def merge_multilingual(
    editions: Sequence[tuple[EdgeSet, NodeRegistry]],
    concept_map: Mapping[tuple[str, str], str] | None = None,
) -> tuple[EdgeSet, NodeRegistry, list[np.ndarray]]:
    """Aggregate per-language graphs into one network.

    Without a concept map the union is disjoint, keyed by (language, title).
    With one, nodes sharing a concept id merge into a single node (named by
    the first edition that carries it), structural edges union and click
    weights sum across editions; unmapped nodes stay singletons.

    Returns (edges, registry, per-edition old->new id maps).
    """
    merged = NodeRegistry()
    concept_ids: dict[str, int] = {}
    mappings: list[np.ndarray] = []

    for _, reg in editions:
        remap = np.empty(reg.n, dtype=np.int64)
        for old_id, (node_lang, title) in enumerate(reg.keys()):
            concept = None if concept_map is None else concept_map.get((node_lang, title))
            if concept is None:
                remap[old_id] = merged.add(node_lang, title)
            else:
                new_id = concept_ids.get(concept)
                if new_id is None:
                    new_id = merged.add(node_lang, title)
                    concept_ids[concept] = new_id
                remap[old_id] = new_id
        mappings.append(remap)
    merged.freeze()

    srcs, dsts, clks, augs = [], [], [], []
    for (edges, _), remap in zip(editions, mappings):
        srcs.append(remap[edges.src])
        dsts.append(remap[edges.dst])
        clks.append(edges.clicks)
        augs.append(edges.augmented)

    counts = GraphCounts()
    merged_edges = EdgeSet.from_arrays(
        np.concatenate(srcs) if srcs else np.empty(0, dtype=np.int64),
        np.concatenate(dsts) if dsts else np.empty(0, dtype=np.int64),
        merged.n,
        clicks=np.concatenate(clks) if clks else None,
        augmented=np.concatenate(augs) if augs else None,
        counts=counts,
    )
    return merged_edges, merged, mappings


# --- binary snapshot -------------------------------------------------------


def save_graph(path: str | Path, edges: EdgeSet, registry: NodeRegistry) -> None:
    """Write the graph snapshot: header (magic, version, N, E, flags),
    length-prefixed (language, title) node table, id-sorted edge arrays."""
    from .fileio import atomic_write

    flags = 1 if edges.clicks.any() else 0
    with atomic_write(path, "wb") as fh:
        fh.write(_SNAPSHOT_MAGIC)
        fh.write(struct.pack("<IQQI", _SNAPSHOT_VERSION, registry.n,
                             edges.n_edges, flags))
        for lang, title in registry.keys():
            lb = lang.encode("utf-8")
            tb = title.encode("utf-8")
            fh.write(struct.pack("<HH", len(lb), len(tb)))
            fh.write(lb)
            fh.write(tb)
        fh.write(edges.src.astype("<i8").tobytes())
        fh.write(edges.dst.astype("<i8").tobytes())
        fh.write(edges.clicks.astype("<i8").tobytes())
        fh.write(np.packbits(edges.augmented).tobytes())


class SnapshotError(ValueError):
    pass


def load_graph(path: str | Path) -> tuple[EdgeSet, NodeRegistry]:
    try:
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != _SNAPSHOT_MAGIC:
                raise SnapshotError(f"{path}: not a graph snapshot")
            version, n, e, _flags = struct.unpack("<IQQI", fh.read(24))
            if version != _SNAPSHOT_VERSION:
                raise SnapshotError(f"{path}: unsupported snapshot version {version}")
            registry = NodeRegistry()
            for _ in range(n):
                ll, tl = struct.unpack("<HH", fh.read(4))
                lang = fh.read(ll).decode("utf-8")
                title = fh.read(tl).decode("utf-8")
                registry.add(lang, title)
            registry.freeze()
            src = np.frombuffer(fh.read(8 * e), dtype="<i8").astype(np.int64)
            dst = np.frombuffer(fh.read(8 * e), dtype="<i8").astype(np.int64)
            clicks = np.frombuffer(fh.read(8 * e), dtype="<i8").astype(np.int64)
            packed = fh.read((e + 7) // 8)
            augmented = np.unpackbits(
                np.frombuffer(packed, dtype=np.uint8), count=e
            ).astype(bool)
            if src.size != e or dst.size != e or clicks.size != e:
                raise SnapshotError(f"{path}: truncated snapshot")
    except (struct.error, ValueError) as exc:
        if isinstance(exc, SnapshotError):
            raise
        raise SnapshotError(f"{path}: truncated or corrupt snapshot") from exc
    edges = EdgeSet(src=src, dst=dst, clicks=clicks, augmented=augmented,
                    n_nodes=n, counts=GraphCounts(unified=e))
    return edges, registry
