"""Shared file helpers: transparent decompression, atomic writes, TSV output."""

from __future__ import annotations

import gzip
import bz2
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterable


def open_stream(path: str | Path, mode: str = "rb") -> IO:
    """Open a file, decompressing .gz/.bz2 transparently by extension."""
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, mode)
    if path.suffix == ".bz2":
        return bz2.open(path, mode)
    return open(path, mode)


@contextmanager
def atomic_write(path: str | Path, mode: str = "w"):
    """Write to a temp file in the target directory, then rename into place.

    The target never exists half-written; concurrent readers see either the
    old or the new content.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    encoding = None if "b" in mode else "utf-8"
    newline = None if "b" in mode else "\n"
    try:
        with os.fdopen(fd, mode, encoding=encoding, newline=newline) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_tsv(path: str | Path, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    """Write a UTF-8 TSV with a '#'-prefixed header line."""
    with atomic_write(path) as fh:
        fh.write("# " + "\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(str(field) for field in row) + "\n")


def read_tsv(path: str | Path) -> Iterable[list[str]]:
    """Yield field lists from a TSV, skipping '#'-prefixed header lines."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            yield line.split("\t")


def fmt_float(x: float) -> str:
    """Deterministic full-precision float formatting for TSV output."""
    return f"{x:.17g}"
