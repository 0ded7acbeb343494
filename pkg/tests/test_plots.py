"""Figure rendering: files exist, are valid PNGs, and render identically
across repeated calls."""

from __future__ import annotations

import numpy as np

from wikirank.analysis import density_grid, overlap
from wikirank.plots import plot_density_grid, plot_overlap_curves
from wikirank.rank import RankingList


def ranking_from_positions(pos) -> RankingList:
    pos = np.asarray(pos, dtype=np.int64)
    order = np.empty(pos.size, dtype=np.int64)
    order[pos - 1] = np.arange(pos.size)
    return RankingList.from_order(order, (pos.size - pos + 1).astype(np.float64))


def sample_curves():
    rng = np.random.default_rng(7)
    a = ranking_from_positions(rng.permutation(200) + 1)
    b = ranking_from_positions(rng.permutation(200) + 1)
    c = ranking_from_positions(rng.permutation(200) + 1)
    return {
        "a vs b": overlap(a, b, 200),
        "a vs c": overlap(a, c, 200),
    }


def sample_grid(with_overlay: bool):
    rng = np.random.default_rng(13)
    k = ranking_from_positions(rng.permutation(300) + 1)
    ks = ranking_from_positions(rng.permutation(300) + 1)
    overlays = {"pr": rng.random(300)} if with_overlay else None
    return density_grid(k, ks, cells=40, overlays=overlays, overlay_top=20)


def assert_png(path):
    data = path.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(data) > 1000


def test_overlap_figure(tmp_path):
    path = tmp_path / "overlap.png"
    plot_overlap_curves(path, sample_curves(), title="demo")
    assert_png(path)


def test_density_figure_with_overlays(tmp_path):
    path = tmp_path / "density.png"
    plot_density_grid(path, sample_grid(True), title="demo")
    assert_png(path)


def test_density_figure_without_overlays(tmp_path):
    path = tmp_path / "density.png"
    plot_density_grid(path, sample_grid(False))
    assert_png(path)


def test_figures_render_deterministically(tmp_path):
    for render, arg in (
        (plot_overlap_curves, sample_curves()),
        (plot_density_grid, sample_grid(True)),
    ):
        one = tmp_path / "one.png"
        two = tmp_path / "two.png"
        render(one, arg)
        render(two, arg)
        assert one.read_bytes() == two.read_bytes()
