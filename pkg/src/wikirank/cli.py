"""Command-line pipeline: ingest -> (merge) -> rank -> compare/density/top.

Exit codes: 0 success, 1 configuration error, 2 input error,
3 non-convergence. Report commands (compare, density) render figures
next to the TSV output unless --no-figures is given.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .analysis import (
    density_grid,
    overlap,
    top_table,
    write_density_tsv,
    write_overlap_tsv,
    write_overlay_tsv,
    write_top_table_json,
    write_top_table_tsv,
)
from .config import (
    ConfigError,
    LanguageInputs,
    RunConfig,
    load_config,
    parse_set_override,
)
from .fileio import atomic_write, open_stream, read_tsv, write_tsv
from .graph import (
    ConceptMapError,
    GraphCounts,
    NodeRegistry,
    RedirectMap,
    SnapshotError,
    attach_clicks,
    dedup_and_filter,
    exclude_nodes,
    load_concept_map,
    load_graph,
    merge_multilingual,
    resolve_redirects,
    save_graph,
)
from .ingest import (
    ParseCounters,
    RawLinkRecord,
    RedirectRecord,
    normalize_title,
    parse_clickstream,
    parse_pageviews,
    parse_pairs,
    parse_redirects,
    parse_wikicode_links,
    parse_wikicode_pages,
    sql_page_rows,
    sql_pagelinks_rows,
    sql_redirect_rows,
)
from .matrix import (
    aggregate_views,
    assemble,
    build_weighted_adjacency,
    column_normalize,
    teleport_from_pageviews,
)
from .rank import (
    NonConvergenceError,
    RankingList,
    cheirank,
    incoming_click_totals,
    load_ranking,
    pagerank,
    rank_from_scores,
    two_d_rank,
    write_ranking,
)

logger = logging.getLogger(__name__)


class InputError(RuntimeError):
    """Input files are missing, malformed, or mutually inconsistent."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; 2 is reserved for input errors
    # here, so usage problems are routed through the config-error path.
    def error(self, message):
        raise ConfigError(message)


# --- shared helpers ----------------------------------------------------------


def _text_lines(stream):
    return io.TextIOWrapper(stream, encoding="utf-8", errors="replace")


def _overrides_from_args(args) -> dict[tuple[str, str], str]:
    """Collect --set and typed flags into config overrides (flags win)."""
    overrides: dict[tuple[str, str], str] = {}
    for expr in getattr(args, "set", None) or []:
        section, key, value = parse_set_override(expr)
        overrides[(section, key)] = value
    mapping = (
        ("alpha", "alpha", str),
        ("tol", "tol", str),
        ("max_iter", "max_iter", str),
        ("models", "models", str),
        ("out", "output_dir", str),
        ("keep_orphan_clicks", "keep_orphan_clicks", lambda v: "true" if v else "false"),
        ("teleport_epsilon", "teleport_epsilon", str),
        (
            "cheirank_uniform_teleport",
            "cheirank_uniform_teleport",
            lambda v: "true" if v else "false",
        ),
        ("concept_map", "concept_map", str),
    )
    for attr, key, conv in mapping:
        value = getattr(args, attr, None)
        if value is not None:
            overrides[("run", key)] = conv(value)
    exclude = getattr(args, "exclude", None)
    if exclude:
        overrides[("run", "exclude")] = "|".join(exclude)
    return overrides


def _load_run_config(args, require_inputs: bool) -> RunConfig:
    cfg = load_config(getattr(args, "config", None), _overrides_from_args(args))
    cfg.validate(require_inputs=require_inputs)
    return cfg


def _parse_named(values: list[str], what: str) -> list[tuple[str, Path]]:
    """NAME=PATH arguments; a bare PATH takes its stem as the name."""
    out: list[tuple[str, Path]] = []
    seen: set[str] = set()
    for value in values:
        name, sep, path = value.partition("=")
        if not sep:
            path = value
            name = Path(value).stem
        if not name or not path:
            raise ConfigError(f"{what} needs NAME=PATH, got {value!r}")
        if name in seen:
            raise ConfigError(f"duplicate {what} name {name!r}")
        seen.add(name)
        out.append((name, Path(path)))
    return out


def _load_rank_list(path: Path) -> tuple[RankingList, list[str], list[str]]:
    """Rank TSV -> (RankingList, titles by id, languages by id)."""
    try:
        rows = load_ranking(path)
    except OSError as exc:
        raise InputError(str(exc)) from exc
    except ValueError as exc:
        raise InputError(f"{path}: malformed rank list: {exc}") from exc
    n = len(rows)
    if n == 0:
        raise InputError(f"{path}: empty rank list")
    if sorted(r[0] for r in rows) != list(range(1, n + 1)):
        raise InputError(f"{path}: ranks are not a 1..{n} permutation")
    if sorted(r[1] for r in rows) != list(range(n)):
        raise InputError(f"{path}: node ids are not dense 0..{n - 1}")
    order = np.empty(n, dtype=np.int64)
    scores = np.empty(n, dtype=np.float64)
    titles: list[str] = [""] * n
    languages: list[str] = [""] * n
    for rank, node_id, language, title, score in rows:
        order[rank - 1] = node_id
        scores[node_id] = score
        titles[node_id] = title
        languages[node_id] = language
    return RankingList.from_order(order, scores), titles, languages


def _load_views(path: Path, n: int) -> np.ndarray:
    views = np.zeros(n, dtype=np.int64)
    try:
        for fields in read_tsv(path):
            if len(fields) != 2:
                raise InputError(f"{path}: views rows need 2 fields")
            node_id, value = int(fields[0]), int(fields[1])
            if not (0 <= node_id < n):
                raise InputError(f"{path}: node id {node_id} out of range")
            views[node_id] += value
    except OSError as exc:
        raise InputError(str(exc)) from exc
    except ValueError as exc:
        raise InputError(f"{path}: malformed views file: {exc}") from exc
    return views


def _write_views(path: Path, views: np.ndarray) -> None:
    write_tsv(path, ["id", "views"], ((i, int(views[i])) for i in range(views.shape[0])))


def _write_json(path: Path, payload: dict) -> None:
    with atomic_write(path, "w") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def _versions() -> dict[str, str]:
    return {
        "wikirank": __version__,
        "python": ".".join(str(p) for p in sys.version_info[:3]),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


# --- ingest ------------------------------------------------------------------


def _ingest_language(lang: LanguageInputs, cfg: RunConfig, out_dir: Path,
                     emit_pairs: bool) -> dict:
    """Full single-language ingest; returns the manifest count mapping."""
    counters = ParseCounters()
    counts = GraphCounts()
    redirects = RedirectMap()
    registry = NodeRegistry()
    page_titles: dict[int, str] = {}  # SQL page id -> normalized title

    if lang.redirects:
        with open_stream(lang.redirects) as fh:
            redirects.update(parse_redirects(fh, counters))

    # registry pass: nodes are ns-0 non-redirect articles
    if lang.articles:
        with open_stream(lang.articles) as fh:
            for line in _text_lines(fh):
                title = normalize_title(line.rstrip("\n"))
                if title and not title.startswith("#"):
                    registry.add(lang.language, title)
    if lang.wikicode:
        with open_stream(lang.wikicode) as fh:
            for page in parse_wikicode_pages(fh):
                if page.namespace != 0:
                    continue
                title = normalize_title(page.title)
                if page.redirect_target is not None:
                    target = normalize_title(page.redirect_target)
                    if target == title:
                        counters.redirect_self += 1
                    else:
                        redirects.update([RedirectRecord(title, target)])
                else:
                    registry.add(lang.language, title)
    if lang.sql_page:
        with open_stream(lang.sql_page) as fh:
            for pid, ns, title, is_red in sql_page_rows(fh, counters):
                if ns != 0:
                    continue
                page_titles[pid] = title
                if not is_red:
                    registry.add(lang.language, title)
    if lang.sql_redirect:
        with open_stream(lang.sql_redirect) as fh:
            for frm, ns, to_title in sql_redirect_rows(fh, counters):
                if ns != 0:
                    continue
                from_title = page_titles.get(frm)
                if from_title is None:
                    continue
                if from_title == to_title:
                    counters.redirect_self += 1
                else:
                    redirects.update([RedirectRecord(from_title, to_title)])
    if lang.pairs and not (lang.articles or lang.wikicode or lang.sql_page):
        # no page metadata: endpoints stand in for the article set
        with open_stream(lang.pairs) as fh:
            for rec in parse_pairs(fh, counters):
                for title in (rec.source_title, rec.target_title):
                    resolved = redirects.resolve(title)
                    if not redirects.is_source(resolved):
                        registry.add(lang.language, resolved)
    registry.freeze()

    def link_records():
        if lang.pairs:
            with open_stream(lang.pairs) as fh:
                yield from parse_pairs(fh, counters)
        if lang.wikicode:
            with open_stream(lang.wikicode) as fh:
                for page in parse_wikicode_pages(fh):
                    if page.namespace != 0 or page.redirect_target is not None:
                        continue
                    yield from parse_wikicode_links(
                        normalize_title(page.title), page.text, counters
                    )
        if lang.sql_pagelinks:
            with open_stream(lang.sql_pagelinks) as fh:
                for frm, ns, title, from_ns in sql_pagelinks_rows(fh, counters):
                    if ns != 0 or from_ns != 0:
                        continue
                    source = page_titles.get(frm)
                    if source is None:
                        continue
                    yield RawLinkRecord(source, title)

    edges = dedup_and_filter(
        resolve_redirects(link_records(), redirects, counts),
        registry,
        lang.language,
        counts,
    )

    if lang.clickstream:
        with open_stream(lang.clickstream) as fh:
            edges = attach_clicks(
                edges,
                parse_clickstream(fh, counters),
                registry,
                lang.language,
                redirects,
                keep_orphans=cfg.keep_orphan_clicks,
            )

    views = None
    if lang.pageviews:
        with open_stream(lang.pageviews) as fh:
            views = aggregate_views(
                parse_pageviews(fh, counters),
                registry,
                lang.language,
                redirects,
                counts,
            )
    counts.redirect_cycles = redirects.cycles

    out_dir.mkdir(parents=True, exist_ok=True)
    save_graph(out_dir / "graph.bin", edges, registry)
    if views is not None:
        _write_views(out_dir / "views.tsv", views)
    if emit_pairs:
        write_tsv(
            out_dir / "pairs.tsv",
            ["source", "target"],
            (
                (registry.title_of(int(s)), registry.title_of(int(d)))
                for s, d in zip(edges.src, edges.dst)
            ),
        )

    manifest = {"nodes": registry.n, "edges": edges.n_edges}
    manifest.update(counts.as_dict())
    manifest.update(
        (k, v) for k, v in counters.as_dict().items() if v is not None
    )
    write_tsv(out_dir / "manifest.tsv", ["metric", "value"], manifest.items())
    return manifest


def cmd_ingest(args) -> int:
    cfg = _load_run_config(args, require_inputs=True)
    out_root = cfg.output_dir
    per_language = {}
    for name, lang in cfg.languages.items():
        if not lang.has_link_source:
            logger.warning("[%s] has no link source; skipped", name)
            continue
        per_language[name] = _ingest_language(
            lang, cfg, out_root / name, emit_pairs=args.emit_pairs
        )
    _write_json(
        out_root / "run.json",
        {
            "command": "ingest",
            "versions": _versions(),
            "settings": {
                "keep_orphan_clicks": cfg.keep_orphan_clicks,
            },
            "languages": per_language,
        },
    )
    return 0


# --- rank --------------------------------------------------------------------


def cmd_rank(args) -> int:
    cfg = _load_run_config(args, require_inputs=False)
    try:
        edges, registry = load_graph(args.graph)
    except OSError as exc:
        raise InputError(str(exc)) from exc

    views = _load_views(Path(args.views), registry.n) if args.views else None
    if cfg.exclude:
        edges, registry, old_to_new = exclude_nodes(edges, registry, cfg.exclude)
        if views is not None:
            views = views[old_to_new >= 0]
    if "wcpv" in cfg.models and views is None:
        raise ConfigError("model wcpv needs pageview data; pass --views")

    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    teleport = (
        teleport_from_pageviews(views, registry.n, cfg.teleport_epsilon)
        if views is not None
        else None
    )

    convergence: dict[str, dict] = {}
    failed: list[str] = []
    for model in cfg.models:
        adj = build_weighted_adjacency(edges, model)
        spec = assemble(model, column_normalize(adj), teleport, cfg.alpha)
        pr = pagerank(spec, tol=cfg.tol, max_iter=cfg.max_iter)
        cr = cheirank(
            adj,
            model,
            v=teleport,
            alpha=cfg.alpha,
            tol=cfg.tol,
            max_iter=cfg.max_iter,
            uniform_teleport=cfg.cheirank_uniform_teleport,
        )
        k = rank_from_scores(pr.values)
        k_star = rank_from_scores(cr.values)
        two_d = two_d_rank(k, k_star)
        write_ranking(out / f"{model}_pagerank.tsv", k, registry)
        write_ranking(out / f"{model}_cheirank.tsv", k_star, registry)
        write_ranking(out / f"{model}_2drank.tsv", two_d, registry)
        convergence[model] = {
            "pagerank": {
                "iterations": pr.iterations,
                "residual": pr.residual,
                "converged": pr.converged,
            },
            "cheirank": {
                "iterations": cr.iterations,
                "residual": cr.residual,
                "converged": cr.converged,
            },
        }
        for label, result in (("pagerank", pr), ("cheirank", cr)):
            if not result.converged:
                failed.append(f"{model} {label}")

    write_ranking(
        out / "cr.tsv",
        rank_from_scores(incoming_click_totals(edges).astype(np.float64)),
        registry,
    )
    if views is not None:
        write_ranking(out / "vr.tsv", rank_from_scores(views.astype(np.float64)),
                      registry)

    _write_json(
        out / "run.json",
        {
            "command": "rank",
            "versions": _versions(),
            "settings": {
                "alpha": cfg.alpha,
                "tol": cfg.tol,
                "max_iter": cfg.max_iter,
                "models": list(cfg.models),
                "teleport_epsilon": cfg.teleport_epsilon,
                "cheirank_uniform_teleport": cfg.cheirank_uniform_teleport,
                "exclude": list(cfg.exclude),
            },
            "graph": {"nodes": registry.n, "edges": edges.n_edges},
            "convergence": convergence,
        },
    )
    if failed and not args.allow_nonconverged:
        raise NonConvergenceError(
            "power iteration did not converge for: " + ", ".join(failed)
        )
    return 0


# --- merge -------------------------------------------------------------------


def cmd_merge(args) -> int:
    if args.views and len(args.views) != len(args.graphs):
        raise ConfigError("--views must be given once per input graph")
    editions = []
    for path in args.graphs:
        try:
            editions.append(load_graph(path))
        except OSError as exc:
            raise InputError(str(exc)) from exc
    concept_map = None
    if args.concept_map:
        try:
            concept_map = load_concept_map(read_tsv(args.concept_map))
        except OSError as exc:
            raise InputError(str(exc)) from exc
    merged, registry, id_maps = merge_multilingual(editions, concept_map)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_graph(out / "graph.bin", merged, registry)
    if args.views:
        total = np.zeros(registry.n, dtype=np.int64)
        for views_path, (_, edition_registry), id_map in zip(
            args.views, editions, id_maps
        ):
            arr = _load_views(Path(views_path), edition_registry.n)
            keep = id_map >= 0
            np.add.at(total, id_map[keep], arr[keep])
        _write_views(out / "views.tsv", total)
    write_tsv(
        out / "manifest.tsv",
        ["metric", "value"],
        [("nodes", registry.n), ("edges", merged.n_edges),
         ("editions", len(editions))],
    )
    return 0


# --- analysis commands -------------------------------------------------------


def _named_rank_lists(values: list[str], what: str):
    named = _parse_named(values, what)
    loaded = []
    n = None
    for name, path in named:
        ranking, titles, languages = _load_rank_list(path)
        if n is None:
            n = ranking.n
        elif ranking.n != n:
            raise InputError(
                f"{path}: rank list covers {ranking.n} nodes, expected {n}"
            )
        loaded.append((name, ranking, titles, languages))
    return loaded


def cmd_compare(args) -> int:
    if len(args.lists) < 2:
        raise ConfigError("compare needs at least two rank lists")
    loaded = _named_rank_lists(args.lists, "list")
    n = loaded[0][1].n
    j_max = args.j_max if args.j_max is not None else n
    if not (1 <= j_max <= n):
        raise ConfigError(f"--j-max must be in [1, {n}], got {j_max}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    curves = {}
    for i in range(len(loaded)):
        for j in range(i + 1, len(loaded)):
            name_a, list_a = loaded[i][0], loaded[i][1]
            name_b, list_b = loaded[j][0], loaded[j][1]
            curve = overlap(list_a, list_b, j_max)
            write_overlap_tsv(out / f"overlap_{name_a}_vs_{name_b}.tsv", curve)
            curves[f"{name_a} vs {name_b}"] = curve
    if not args.no_figures:
        from .plots import plot_overlap_curves

        plot_overlap_curves(out / "overlap.png", curves)
    return 0


def cmd_density(args) -> int:
    k_list, _, _ = _load_rank_list(Path(args.k))
    k_star_list, _, _ = _load_rank_list(Path(args.kstar))
    if k_list.n != k_star_list.n:
        raise InputError("the two rank lists cover different node counts")
    overlays = {}
    for name, path in _parse_named(args.overlay or [], "overlay"):
        ranking, _, _ = _load_rank_list(path)
        if ranking.n != k_list.n:
            raise InputError(f"{path}: overlay covers a different node count")
        overlays[name] = ranking.scores
    grid = density_grid(
        k_list,
        k_star_list,
        cells=args.cells,
        overlays=overlays or None,
        overlay_top=args.overlay_top,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_density_tsv(out / "density.tsv", grid)
    for name, cells in grid.overlays.items():
        write_overlay_tsv(out / f"overlay_{name}.tsv", cells)
    if not args.no_figures:
        from .plots import plot_density_grid

        plot_density_grid(out / "density.png", grid)
    return 0


def cmd_top(args) -> int:
    loaded = _named_rank_lists(args.lists, "list")
    names = [name for name, *_ in loaded]
    if args.base not in names:
        raise ConfigError(f"--base {args.base!r} not among {', '.join(names)}")
    lists = {name: ranking for name, ranking, _, _ in loaded}
    titles = next(t for name, _, t, _ in loaded if name == args.base)
    table = top_table(lists, args.base, args.k, titles)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_top_table_tsv(out / "top.tsv", table)
    if args.json:
        write_top_table_json(out / "top.json", table)
    return 0


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wikirank", description=__doc__)
    parser.add_argument("--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("--config", help="INI run configuration")
        p.add_argument(
            "--set",
            action="append",
            metavar="SECTION.KEY=VALUE",
            help="override any config key (repeatable)",
        )
        p.add_argument("--out", help="output directory (run.output_dir)")

    p = sub.add_parser("ingest", help="parse inputs into a graph snapshot")
    add_config_flags(p)
    p.add_argument(
        "--keep-orphan-clicks",
        action="store_const",
        const=True,
        help="add clickstream pairs missing from the link network as edges",
    )
    p.add_argument(
        "--emit-pairs",
        action="store_true",
        help="also write the unified edges as a normalized pairs TSV",
    )
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("rank", help="compute rankings from a graph snapshot")
    add_config_flags(p)
    p.add_argument("--graph", required=True, help="binary graph snapshot")
    p.add_argument("--views", help="per-node views TSV (required for wcpv)")
    p.add_argument("--models", help="comma-separated subset of nowc,wc,wcpv")
    p.add_argument("--alpha", type=float, help="damping factor")
    p.add_argument("--tol", type=float, help="L1 convergence tolerance")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument(
        "--exclude",
        action="append",
        metavar="TITLE",
        help="drop this article before ranking (repeatable)",
    )
    p.add_argument("--teleport-epsilon", type=float, dest="teleport_epsilon")
    p.add_argument(
        "--cheirank-uniform-teleport",
        action="store_const",
        const=True,
        help="use uniform teleportation for wcpv CheiRank",
    )
    p.add_argument(
        "--allow-nonconverged",
        action="store_true",
        help="exit 0 even when power iteration hits max_iter",
    )
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("merge", help="merge edition snapshots into one graph")
    p.add_argument("graphs", nargs="+", help="input graph snapshots")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--concept-map", dest="concept_map",
                   help="language<TAB>title<TAB>concept_id TSV")
    p.add_argument(
        "--views",
        action="append",
        help="views TSV per input graph, in the same order (repeatable)",
    )
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("compare", help="overlap curves between rank lists")
    p.add_argument("lists", nargs="+", metavar="NAME=PATH",
                   help="rank TSVs to compare pairwise")
    p.add_argument("--out", required=True)
    p.add_argument("--j-max", type=int, dest="j_max")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("density", help="rank-plane density grid")
    p.add_argument("--k", required=True, help="PageRank-style rank TSV")
    p.add_argument("--kstar", required=True, help="CheiRank-style rank TSV")
    p.add_argument("--cells", type=int, default=200)
    p.add_argument(
        "--overlay",
        action="append",
        metavar="NAME=PATH",
        help="mark the top nodes of this rank list on the grid (repeatable)",
    )
    p.add_argument("--overlay-top", type=int, default=100, dest="overlay_top")
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("top", help="aligned top-k table across rank lists")
    p.add_argument("lists", nargs="+", metavar="NAME=PATH")
    p.add_argument("--base", required=True, help="list that fixes the order")
    p.add_argument("-k", type=int, default=20)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true", help="also write top.json")
    p.set_defaults(func=cmd_top)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"wikirank: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"wikirank: error: {exc}", file=sys.stderr)
        return 1
    except (InputError, SnapshotError, ConceptMapError, OSError) as exc:
        print(f"wikirank: error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"wikirank: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
