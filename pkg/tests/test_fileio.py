"""Low-level I/O: compressed streams, atomic writes, TSV framing, float
formatting."""

from __future__ import annotations

import bz2
import gzip
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wikirank.fileio import atomic_write, fmt_float, open_stream, read_tsv, write_tsv


def test_open_stream_plain(tmp_path):
    path = tmp_path / "data.txt"
    path.write_bytes(b"hello\n")
    with open_stream(path) as fh:
        assert fh.read() == b"hello\n"


def test_open_stream_gzip(tmp_path):
    path = tmp_path / "data.txt.gz"
    path.write_bytes(gzip.compress(b"zipped\n"))
    with open_stream(path) as fh:
        assert fh.read() == b"zipped\n"


def test_open_stream_bzip2(tmp_path):
    path = tmp_path / "data.txt.bz2"
    path.write_bytes(bz2.compress(b"squeezed\n"))
    with open_stream(path) as fh:
        assert fh.read() == b"squeezed\n"


def test_atomic_write_replaces_whole_file(tmp_path):
    path = tmp_path / "out.txt"
    path.write_text("old", encoding="utf-8")
    with atomic_write(path, "w") as fh:
        fh.write("new contents")
    assert path.read_text(encoding="utf-8") == "new contents"
    assert list(tmp_path.iterdir()) == [path]  # no temp files left behind


def test_atomic_write_keeps_old_file_on_error(tmp_path):
    path = tmp_path / "out.txt"
    path.write_text("old", encoding="utf-8")
    with pytest.raises(RuntimeError):
        with atomic_write(path, "w") as fh:
            fh.write("half")
            raise RuntimeError("boom")
    assert path.read_text(encoding="utf-8") == "old"
    assert list(tmp_path.iterdir()) == [path]


def test_tsv_roundtrip(tmp_path):
    path = tmp_path / "t.tsv"
    write_tsv(path, ["a", "b"], [(1, "x"), (2, "y z")])
    text = path.read_text(encoding="utf-8")
    assert text == "# a\tb\n1\tx\n2\ty z\n"
    assert [tuple(r) for r in read_tsv(path)] == [("1", "x"), ("2", "y z")]


def test_read_tsv_skips_comments_and_blanks(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("# header\n1\t2\n\n# note\n3\t4\n", encoding="utf-8")
    assert [tuple(r) for r in read_tsv(path)] == [("1", "2"), ("3", "4")]


def test_fmt_float_full_precision():
    assert fmt_float(0.5) == "0.5"
    assert fmt_float(1 / 3) == "0.33333333333333331"
    assert float(fmt_float(1 / 3)) == 1 / 3


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_float_roundtrips(x):
    assert float(fmt_float(x)) == x


def test_fmt_float_is_deterministic_text():
    assert fmt_float(1e-12) == "9.9999999999999998e-13"
    assert fmt_float(0.0) == "0"
    assert not math.copysign(1, float(fmt_float(0.0))) < 0
