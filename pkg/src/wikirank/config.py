"""Run configuration: an INI file with a [run] section plus one section
per language edition, every key overridable from the command line
(flags win over file values).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

VALID_MODELS = ("nowc", "wc", "wcpv")

_RUN_KEYS = frozenset(
    {
        "alpha",
        "models",
        "tol",
        "max_iter",
        "output_dir",
        "keep_orphan_clicks",
        "teleport_epsilon",
        "cheirank_uniform_teleport",
        "exclude",
        "concept_map",
    }
)

_LANGUAGE_KEYS = frozenset(
    {
        "pairs",
        "wikicode",
        "sql_page",
        "sql_pagelinks",
        "sql_redirect",
        "redirects",
        "clickstream",
        "pageviews",
        "articles",
    }
)

_BOOL_STATES = {
    "1": True, "yes": True, "true": True, "on": True,
    "0": False, "no": False, "false": False, "off": False,
}


class ConfigError(ValueError):
    """Invalid or missing configuration."""


@dataclass
class LanguageInputs:
    """Input files for one language edition; every field optional."""

    language: str
    pairs: Path | None = None
    wikicode: Path | None = None
    sql_page: Path | None = None
    sql_pagelinks: Path | None = None
    sql_redirect: Path | None = None
    redirects: Path | None = None
    clickstream: Path | None = None
    pageviews: Path | None = None
    articles: Path | None = None

    @property
    def has_link_source(self) -> bool:
        return any((self.pairs, self.wikicode, self.sql_pagelinks))

    def paths(self):
        """(field name, path) for every path that was set."""
        for f in dc_fields(self):
            if f.name == "language":
                continue
            value = getattr(self, f.name)
            if value is not None:
                yield f.name, value


@dataclass
class RunConfig:
    alpha: float = 0.85
    models: tuple[str, ...] = VALID_MODELS
    tol: float = 1e-12
    max_iter: int = 1000
    output_dir: Path = Path("out")
    keep_orphan_clicks: bool = False
    teleport_epsilon: float = 0.0
    cheirank_uniform_teleport: bool = False
    exclude: tuple[str, ...] = ()
    concept_map: Path | None = None
    languages: dict[str, LanguageInputs] = field(default_factory=dict)

    def validate(self, require_inputs: bool = True) -> None:
        """Reject a bad configuration before any input is opened."""
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must be in (0,1), got {self.alpha}")
        if not self.models:
            raise ConfigError("at least one model must be selected")
        for m in self.models:
            if m not in VALID_MODELS:
                raise ConfigError(
                    f"unknown model {m!r}; choose from {', '.join(VALID_MODELS)}"
                )
        if self.tol <= 0.0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if not (0.0 <= self.teleport_epsilon <= 1.0):
            raise ConfigError(
                f"teleport_epsilon must be in [0,1], got {self.teleport_epsilon}"
            )
        if self.concept_map is not None and not self.concept_map.exists():
            raise ConfigError(f"concept map not found: {self.concept_map}")
        for lang in self.languages.values():
            for name, path in lang.paths():
                if not path.exists():
                    raise ConfigError(f"[{lang.language}] {name} not found: {path}")
        if require_inputs:
            if not any(l.has_link_source for l in self.languages.values()):
                raise ConfigError(
                    "no inputs: every language section lacks a link source "
                    "(pairs, wikicode, or sql_pagelinks)"
                )


def _to_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be a number, got {raw!r}") from None


def _to_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be an integer, got {raw!r}") from None


def _to_bool(section: str, key: str, raw: str) -> bool:
    state = _BOOL_STATES.get(raw.strip().lower())
    if state is None:
        raise ConfigError(f"[{section}] {key} must be a boolean, got {raw!r}")
    return state


def _split_list(raw: str) -> tuple[str, ...]:
    # pipe or newline separated; normalized titles can never contain '|'
    parts: list[str] = []
    for chunk in raw.replace("\n", "|").split("|"):
        chunk = chunk.strip()
        if chunk:
            parts.append(chunk)
    return tuple(parts)


def parse_set_override(expr: str) -> tuple[str, str, str]:
    """Split a generic SECTION.KEY=VALUE override expression."""
    head, sep, value = expr.partition("=")
    if not sep:
        raise ConfigError(f"--set needs SECTION.KEY=VALUE, got {expr!r}")
    section, dot, key = head.partition(".")
    if not dot or not section or not key:
        raise ConfigError(f"--set needs SECTION.KEY=VALUE, got {expr!r}")
    return section.strip(), key.strip(), value


def load_config(
    path: str | Path | None = None,
    overrides: dict[tuple[str, str], str] | None = None,
) -> RunConfig:
    """Read the INI file, apply overrides, convert and type-check.

    overrides maps (section, key) to a raw string value and always wins
    over the file. Unknown keys are rejected rather than ignored so that
    typos fail loudly.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep keys case-sensitive
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    for (section, key), value in (overrides or {}).items():
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value)

    cfg = RunConfig()
    if parser.has_section("run"):
        run = parser["run"]
        unknown = set(run) - _RUN_KEYS
        if unknown:
            raise ConfigError(f"unknown [run] keys: {', '.join(sorted(unknown))}")
        if "alpha" in run:
            cfg.alpha = _to_float("run", "alpha", run["alpha"])
        if "models" in run:
            cfg.models = tuple(
                m.strip() for m in run["models"].replace("|", ",").split(",")
                if m.strip()
            )
        if "tol" in run:
            cfg.tol = _to_float("run", "tol", run["tol"])
        if "max_iter" in run:
            cfg.max_iter = _to_int("run", "max_iter", run["max_iter"])
        if "output_dir" in run:
            cfg.output_dir = Path(run["output_dir"])
        if "keep_orphan_clicks" in run:
            cfg.keep_orphan_clicks = _to_bool(
                "run", "keep_orphan_clicks", run["keep_orphan_clicks"]
            )
        if "teleport_epsilon" in run:
            cfg.teleport_epsilon = _to_float(
                "run", "teleport_epsilon", run["teleport_epsilon"]
            )
        if "cheirank_uniform_teleport" in run:
            cfg.cheirank_uniform_teleport = _to_bool(
                "run", "cheirank_uniform_teleport", run["cheirank_uniform_teleport"]
            )
        if "exclude" in run:
            cfg.exclude = _split_list(run["exclude"])
        if "concept_map" in run:
            cfg.concept_map = Path(run["concept_map"])

    for section in parser.sections():
        if section == "run":
            continue
        body = parser[section]
        unknown = set(body) - _LANGUAGE_KEYS
        if unknown:
            raise ConfigError(
                f"unknown [{section}] keys: {', '.join(sorted(unknown))}"
            )
        lang = LanguageInputs(language=section)
        for key in _LANGUAGE_KEYS:
            if key in body:
                setattr(lang, key, Path(body[key]))
        cfg.languages[section] = lang
    return cfg
