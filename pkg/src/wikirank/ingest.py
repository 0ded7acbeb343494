"""Streaming parsers for raw wiki inputs.

Converts wikicode page text, MediaWiki SQL dumps, clickstream TSVs,
pageview counts, redirect lists and plain pair files into typed record
streams. Every parser is a generator over a file-like stream: peak memory
does not grow with input size. Malformed input is never fatal; skipped or
truncated data is tallied in a ParseCounters instance for the run manifest.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, asdict
from enum import Enum
from typing import IO, Iterable, Iterator, Sequence

__all__ = [
    "RawLinkRecord",
    "ClickRecord",
    "LinkType",
    "PageviewRecord",
    "RedirectRecord",
    "WikiPage",
    "ParseCounters",
    "normalize_title",
    "parse_wikicode_links",
    "parse_wikicode_pages",
    "parse_sql_insert_tuples",
    "sql_page_rows",
    "sql_pagelinks_rows",
    "sql_redirect_rows",
    "parse_clickstream",
    "parse_pageviews",
    "parse_redirects",
    "parse_pairs",
    "write_pairs",
]


def normalize_title(raw: str) -> str:
    """Canonical article title: underscores to spaces, collapsed whitespace,
    first character uppercased, remaining case preserved."""
    title = " ".join(raw.replace("_", " ").split())
    return title[:1].upper() + title[1:]


@dataclass(frozen=True)
class RawLinkRecord:
    """One source -> target link occurrence; weight 1 for unweighted sources."""

    source_title: str
    target_title: str
    weight: int = 1


class LinkType(str, Enum):
    LINK = "link"
    EXTERNAL = "external"
    OTHER = "other"


@dataclass(frozen=True)
class ClickRecord:
    """One clickstream row: monthly click count between two page titles."""

    prev_title: str
    curr_title: str
    link_type: LinkType
    count: int


@dataclass(frozen=True)
class PageviewRecord:
    title: str
    views: int


@dataclass(frozen=True)
class RedirectRecord:
    from_title: str
    to_title: str


@dataclass(frozen=True)
class WikiPage:
    """One page extracted from an XML container: title, namespace, raw
    wikicode and, for redirect pages, the redirect target."""

    title: str
    namespace: int
    text: str
    redirect_target: str | None = None


@dataclass
class ParseCounters:
    """Skip tallies accumulated across parsers, reported in the run manifest."""

    wikicode_malformed: int = 0
    wikicode_namespace_skipped: int = 0
    wikicode_empty_target: int = 0
    sql_truncation_offset: int | None = None
    clickstream_malformed: int = 0
    pageview_malformed: int = 0
    redirect_self: int = 0
    redirect_malformed: int = 0
    pair_malformed: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


# --- wikicode -----------------------------------------------------------

_STRIP_RE = re.compile(r"<!--.*?-->|<nowiki>.*?</nowiki>", re.DOTALL | re.IGNORECASE)


def _has_namespace_prefix(title: str) -> bool:
    # Namespace heuristic: a colon before the first slash marks a
    # non-article namespace (File:, Category:, fr:, ...).
    colon = title.find(":")
    if colon < 0:
        return False
    slash = title.find("/")
    return slash < 0 or colon < slash


def parse_wikicode_links(
    page_title: str,
    wikicode: str,
    counters: ParseCounters | None = None,
) -> Iterator[RawLinkRecord]:
    """Yield one RawLinkRecord per ``[[target]]`` / ``[[target|label]]``
    occurrence in the page source.

    Fragment suffixes (``#...``) are stripped; targets with a namespace
    prefix are excluded; links inside HTML comments and <nowiki> spans are
    ignored. Each occurrence has weight 1 (dedup happens downstream).
    Unbalanced brackets skip the malformed fragment and bump a counter.
    """
    counters = counters if counters is not None else ParseCounters()
    source = normalize_title(page_title)
    text = _STRIP_RE.sub("", wikicode)
    stack = [text]
    while stack:
        chunk = stack.pop()
        pos = 0
        while True:
            start = chunk.find("[[", pos)
            if start < 0:
                break
            depth = 1
            j = start + 2
            end = -1
            while j < len(chunk):
                if chunk.startswith("[[", j):
                    depth += 1
                    j += 2
                elif chunk.startswith("]]", j):
                    depth -= 1
                    j += 2
                    if depth == 0:
                        end = j
                        break
                else:
                    j += 1
            if end < 0:
                counters.wikicode_malformed += 1
                pos = start + 2
                continue
            inner = chunk[start + 2 : end - 2]
            target_part, _, label_part = inner.partition("|")
            if label_part:
                stack.append(label_part)  # nested links inside the label
            if "[[" in target_part or "]]" in target_part:
                counters.wikicode_malformed += 1
                pos = end
                continue
            target = normalize_title(target_part.split("#", 1)[0])
            if not target:
                counters.wikicode_empty_target += 1
            elif _has_namespace_prefix(target):
                counters.wikicode_namespace_skipped += 1
            else:
                yield RawLinkRecord(source, target, 1)
            pos = end


def parse_wikicode_pages(stream: IO[bytes]) -> Iterator[WikiPage]:
    """Stream (title, wikicode) pages out of a MediaWiki XML export.

    Handles any export namespace, clears elements as it goes (constant
    memory), and surfaces <ns> and <redirect title=.../> when present.
    """
    import xml.etree.ElementTree as ET

    def local(tag: str) -> str:
        return tag.rsplit("}", 1)[-1]

    for _, elem in ET.iterparse(stream, events=("end",)):
        if local(elem.tag) != "page":
            continue
        title = None
        ns = 0
        text = ""
        redirect = None
        for child in elem.iter():
            tag = local(child.tag)
            if tag == "title" and title is None:
                title = child.text or ""
            elif tag == "ns" and child.text:
                try:
                    ns = int(child.text)
                except ValueError:
                    pass
            elif tag == "redirect":
                redirect = child.get("title")
            elif tag == "text" and child.text:
                text = child.text
        if title is not None:
            yield WikiPage(title=title, namespace=ns, text=text, redirect_target=redirect)
        elem.clear()


# --- MediaWiki SQL dumps --------------------------------------------------

_MYSQL_ESCAPES = {
    b"0": b"\x00",
    b"n": b"\n",
    b"r": b"\r",
    b"t": b"\t",
    b"Z": b"\x1a",
    b"b": b"\x08",
}

# Classic MediaWiki dump column layouts (0-based tuple positions).
PAGE_COLUMNS = (0, 1, 2, 4)  # page_id, namespace, title, is_redirect
PAGELINKS_COLUMNS = (0, 1, 2, 3)  # pl_from, pl_namespace, pl_title, pl_from_namespace
REDIRECT_COLUMNS = (0, 1, 2)  # rd_from, rd_namespace, rd_title


def parse_sql_insert_tuples(
    dump_stream: IO[bytes],
    column_spec: Sequence[int],
    counters: ParseCounters | None = None,
    chunk_size: int = 1 << 16,
) -> Iterator[tuple[str, ...]]:
    """Stream the selected columns of every value tuple in a MediaWiki
    ``INSERT INTO ... VALUES (...),(...);`` dump.

    Works directly on bytes so multibyte text never confuses the scanner
    (the structural characters are all ASCII, and UTF-8 continuation bytes
    cannot collide with them). Quoted strings honor backslash escapes and
    doubled quotes. A truncated final statement emits its complete tuples
    and records the byte offset of the last complete tuple in counters.
    """
    counters = counters if counters is not None else ParseCounters()
    wanted = tuple(column_spec)

    OUTSIDE, BETWEEN, FIELD, STRING, ESCAPE, QUOTE = range(6)
    state = OUTSIDE
    window = b""  # rolling tail while scanning for the VALUES keyword
    fields: list[str] = []
    buf = bytearray()
    offset = 0  # bytes consumed so far
    last_tuple_end = 0

    def finish_field(quoted: bool) -> None:
        raw = bytes(buf)
        if not quoted:
            raw = raw.strip()
        fields.append(raw.decode("utf-8", errors="replace"))
        buf.clear()

    while True:
        chunk = dump_stream.read(chunk_size)
        if not chunk:
            break
        i = 0
        n = len(chunk)
        while i < n:
            b = chunk[i : i + 1]
            i += 1
            if state == OUTSIDE:
                window = (window + b)[-6:]
                if window.upper() == b"VALUES":
                    state = BETWEEN
                    window = b""
            elif state == BETWEEN:
                if b == b"(":
                    fields = []
                    buf.clear()
                    state = FIELD
                elif b == b";":
                    state = OUTSIDE
            elif state == FIELD:
                if b == b"'":
                    state = STRING
                elif b == b",":
                    finish_field(quoted=False)
                elif b == b")":
                    finish_field(quoted=False)
                    last_tuple_end = offset + i
                    state = BETWEEN
                    if max(wanted, default=-1) < len(fields):
                        yield tuple(fields[c] for c in wanted)
                else:
                    buf += b
            elif state == STRING:
                if b == b"\\":
                    state = ESCAPE
                elif b == b"'":
                    state = QUOTE
                else:
                    buf += b
            elif state == ESCAPE:
                buf += _MYSQL_ESCAPES.get(b, b)
                state = STRING
            else:  # QUOTE: just closed a quoted field, or a doubled ''
                if b == b"'":
                    buf += b"'"
                    state = STRING
                elif b == b",":
                    finish_field(quoted=True)
                    state = FIELD
                elif b == b")":
                    finish_field(quoted=True)
                    last_tuple_end = offset + i
                    state = BETWEEN
                    if max(wanted, default=-1) < len(fields):
                        yield tuple(fields[c] for c in wanted)
                # anything else (whitespace) stays in QUOTE
        offset += n

    if state not in (OUTSIDE, BETWEEN):
        counters.sql_truncation_offset = last_tuple_end


def sql_page_rows(
    stream: IO[bytes], counters: ParseCounters | None = None
) -> Iterator[tuple[int, int, str, bool]]:
    """(page_id, namespace, normalized title, is_redirect) rows from page.sql."""
    for pid, ns, title, is_red in parse_sql_insert_tuples(stream, PAGE_COLUMNS, counters):
        try:
            yield int(pid), int(ns), normalize_title(title), is_red.strip() == "1"
        except ValueError:
            continue


def sql_pagelinks_rows(
    stream: IO[bytes], counters: ParseCounters | None = None
) -> Iterator[tuple[int, int, str, int]]:
    """(pl_from, target namespace, normalized target title, source namespace)."""
    for frm, ns, title, from_ns in parse_sql_insert_tuples(stream, PAGELINKS_COLUMNS, counters):
        try:
            yield int(frm), int(ns), normalize_title(title), int(from_ns)
        except ValueError:
            continue


def sql_redirect_rows(
    stream: IO[bytes], counters: ParseCounters | None = None
) -> Iterator[tuple[int, int, str]]:
    """(rd_from page id, target namespace, normalized target title)."""
    for frm, ns, title in parse_sql_insert_tuples(stream, REDIRECT_COLUMNS, counters):
        try:
            yield int(frm), int(ns), normalize_title(title)
        except ValueError:
            continue


# --- clickstream, pageviews, redirects, pairs -----------------------------


def _text_lines(stream: IO) -> Iterator[str]:
    if isinstance(stream, io.TextIOBase):
        yield from stream
    else:
        yield from io.TextIOWrapper(stream, encoding="utf-8", errors="replace")


def _classify_link_type(raw: str) -> LinkType:
    if raw == "link":
        return LinkType.LINK
    if raw == "external":
        return LinkType.EXTERNAL
    return LinkType.OTHER


def parse_clickstream(
    tsv_stream: IO[bytes], counters: ParseCounters | None = None
) -> Iterator[ClickRecord]:
    """Parse ``prev<TAB>curr<TAB>type<TAB>n`` clickstream rows.

    The type field is classified: exactly "link" marks article-to-article
    navigation; "external" and anything else (including the other-* family)
    never enters the click matrix. Lines with the wrong field count or a
    non-positive count are skipped and tallied.
    """
    counters = counters if counters is not None else ParseCounters()
    for line in _text_lines(tsv_stream):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            counters.clickstream_malformed += 1
            continue
        prev, curr, raw_type, count_s = parts
        try:
            count = int(count_s)
        except ValueError:
            counters.clickstream_malformed += 1
            continue
        if count < 1:
            counters.clickstream_malformed += 1
            continue
        yield ClickRecord(
            prev_title=normalize_title(prev),
            curr_title=normalize_title(curr),
            link_type=_classify_link_type(raw_type),
            count=count,
        )


def parse_pageviews(
    stream: IO[bytes],
    counters: ParseCounters | None = None,
    sep: str | None = None,
) -> Iterator[PageviewRecord]:
    """Parse ``title<SEP>views`` lines (tab or space; None splits on any
    whitespace). The count is taken from the right so separators inside a
    title are harmless. Duplicate titles are NOT summed here."""
    counters = counters if counters is not None else ParseCounters()
    for line in _text_lines(stream):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.rsplit(sep, 1)
        if len(parts) != 2:
            counters.pageview_malformed += 1
            continue
        title, views_s = parts
        try:
            views = int(views_s)
        except ValueError:
            counters.pageview_malformed += 1
            continue
        if views < 0:
            counters.pageview_malformed += 1
            continue
        title = normalize_title(title)
        if not title:
            counters.pageview_malformed += 1
            continue
        yield PageviewRecord(title=title, views=views)


def parse_redirects(
    stream: IO[bytes], counters: ParseCounters | None = None
) -> Iterator[RedirectRecord]:
    """Parse ``from<TAB>to`` redirect rows; self-redirects after
    normalization are dropped and tallied."""
    counters = counters if counters is not None else ParseCounters()
    for line in _text_lines(stream):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            counters.redirect_malformed += 1
            continue
        src, dst = normalize_title(parts[0]), normalize_title(parts[1])
        if not src or not dst:
            counters.redirect_malformed += 1
            continue
        if src == dst:
            counters.redirect_self += 1
            continue
        yield RedirectRecord(from_title=src, to_title=dst)


def parse_pairs(
    stream: IO[bytes], counters: ParseCounters | None = None
) -> Iterator[RawLinkRecord]:
    """Parse ``source<TAB>target[<TAB>weight]`` pair rows (weight defaults
    to 1, must be a positive integer)."""
    counters = counters if counters is not None else ParseCounters()
    for line in _text_lines(stream):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            counters.pair_malformed += 1
            continue
        weight = 1
        if len(parts) == 3:
            try:
                weight = int(parts[2])
            except ValueError:
                counters.pair_malformed += 1
                continue
            if weight < 1:
                counters.pair_malformed += 1
                continue
        src, dst = normalize_title(parts[0]), normalize_title(parts[1])
        if not src or not dst:
            counters.pair_malformed += 1
            continue
        yield RawLinkRecord(source_title=src, target_title=dst, weight=weight)


def write_pairs(records: Iterable[RawLinkRecord], stream: IO[str]) -> int:
    """Serialize records as normalized-pairs TSV; returns the row count.

    parse_pairs() on the output reproduces the records exactly.
    """
    count = 0
    for rec in records:
        stream.write(f"{rec.source_title}\t{rec.target_title}\t{rec.weight}\n")
        count += 1
    return count
