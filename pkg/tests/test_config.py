"""Configuration loading: INI sections, type conversion, overrides,
validation errors."""

from __future__ import annotations

import pytest

from wikirank.config import (
    ConfigError,
    RunConfig,
    load_config,
    parse_set_override,
)

from conftest import write_run_ini


def test_defaults():
    cfg = load_config()
    assert cfg.alpha == 0.85
    assert cfg.models == ("nowc", "wc", "wcpv")
    assert cfg.tol == 1e-12
    assert cfg.max_iter == 1000
    assert cfg.keep_orphan_clicks is False
    assert cfg.teleport_epsilon == 0.0
    assert cfg.exclude == ()


def test_full_file(tmp_path):
    pairs = tmp_path / "pairs.tsv"
    pairs.write_text("A\tB\n", encoding="utf-8")
    ini = write_run_ini(
        tmp_path,
        "[run]\n"
        "alpha = 0.9\n"
        "models = wc, wcpv\n"
        "tol = 1e-10\n"
        "max_iter = 500\n"
        "keep_orphan_clicks = yes\n"
        "teleport_epsilon = 0.05\n"
        "cheirank_uniform_teleport = true\n"
        "exclude = Main Page|Sandbox\n"
        f"output_dir = {tmp_path / 'out'}\n"
        "[en]\n"
        f"pairs = {pairs}\n",
    )
    cfg = load_config(ini)
    assert cfg.alpha == 0.9
    assert cfg.models == ("wc", "wcpv")
    assert cfg.tol == 1e-10
    assert cfg.max_iter == 500
    assert cfg.keep_orphan_clicks is True
    assert cfg.teleport_epsilon == 0.05
    assert cfg.cheirank_uniform_teleport is True
    assert cfg.exclude == ("Main Page", "Sandbox")
    assert cfg.languages["en"].pairs == pairs
    assert cfg.languages["en"].has_link_source
    cfg.validate()


def test_exclude_newline_separated(tmp_path):
    ini = write_run_ini(tmp_path, "[run]\nexclude = Main Page\n\tSandbox\n")
    assert load_config(ini).exclude == ("Main Page", "Sandbox")


def test_overrides_beat_file(tmp_path):
    ini = write_run_ini(tmp_path, "[run]\nalpha = 0.5\n")
    cfg = load_config(ini,{("run", "alpha"): "0.7"})
    assert cfg.alpha == 0.7


def test_override_creates_language_section(tmp_path):
    pairs = tmp_path / "p.tsv"
    pairs.write_text("A\tB\n", encoding="utf-8")
    cfg = load_config(None, {("fr", "pairs"): str(pairs)})
    assert cfg.languages["fr"].language == "fr"
    assert cfg.languages["fr"].pairs == pairs


def test_unknown_run_key_rejected(tmp_path):
    ini = write_run_ini(tmp_path, "[run]\nalfa = 0.9\n")
    with pytest.raises(ConfigError, match="alfa"):
        load_config(ini)


def test_unknown_language_key_rejected(tmp_path):
    ini = write_run_ini(tmp_path, "[en]\nwikicde = x.xml\n")
    with pytest.raises(ConfigError, match="wikicde"):
        load_config(ini)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.ini")


def test_bad_ini_rejected(tmp_path):
    ini = write_run_ini(tmp_path, "alpha = 0.5\n")  # key before any section
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(ini)


@pytest.mark.parametrize(
    "body,fragment",
    [
        ("[run]\nalpha = fast\n", "number"),
        ("[run]\nmax_iter = many\n", "integer"),
        ("[run]\nkeep_orphan_clicks = maybe\n", "boolean"),
    ],
)
def test_type_errors(tmp_path, body, fragment):
    ini = write_run_ini(tmp_path, body)
    with pytest.raises(ConfigError, match=fragment):
        load_config(ini)


@pytest.mark.parametrize(
    "patch,fragment",
    [
        ({"alpha": 0.0}, "alpha"),
        ({"alpha": 1.0}, "alpha"),
        ({"models": ()}, "model"),
        ({"models": ("pagerank",)}, "unknown model"),
        ({"tol": 0.0}, "tol"),
        ({"max_iter": 0}, "max_iter"),
        ({"teleport_epsilon": 1.5}, "teleport_epsilon"),
    ],
)
def test_validate_rejects(patch, fragment):
    cfg = RunConfig(**patch)
    with pytest.raises(ConfigError, match=fragment):
        cfg.validate(require_inputs=False)


def test_validate_requires_inputs():
    with pytest.raises(ConfigError, match="no inputs"):
        RunConfig().validate(require_inputs=True)


def test_validate_checks_paths_exist(tmp_path):
    cfg = load_config(None, {("en", "wikicode"): str(tmp_path / "gone.xml")})
    with pytest.raises(ConfigError, match="not found"):
        cfg.validate(require_inputs=False)


def test_parse_set_override():
    assert parse_set_override("run.alpha=0.9") == ("run", "alpha", "0.9")
    assert parse_set_override("en.pairs=a=b.tsv") == ("en", "pairs", "a=b.tsv")
    for bad in ("runalpha=0.9", "run.alpha", ".alpha=1", "run.=1"):
        with pytest.raises(ConfigError):
            parse_set_override(bad)
