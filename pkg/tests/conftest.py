"""Shared fixture corpora.

The wikicode and SQL corpora below are hand-counted; the expected
manifest numbers next to each builder are the goldens the ingestion
tests assert against. Changing a corpus means recounting by hand.
"""

from __future__ import annotations

import io
import sys
from pathlib import Path

import pytest


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo one line per acceptance criterion at the end of the run."""
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in results:
        terminalreporter.write_line(f"[{status}] {name}")

# Expected wikicode-corpus manifest:
#   nodes=5 (France, Germany, Paris, Europe, Berlin)
#   all=9 unified=7 redlinks=1 self_loops=0 duplicates=1 redirect_cycles=1
# Link records per page:
#   France: Paris (via fragment+label), Germany (via Deutschland); File: skipped
#   Germany: Berlin, France
#   Paris: Germany (BRD->Deutschland->Germany), France (via FR), France (dup)
#   Europe: Loop1 (redirect cycle -> redlink), Germany
#   Berlin: none
WIKICODE_XML = """\
<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/" version="0.10">
  <siteinfo><sitename>Testwiki</sitename></siteinfo>
  <page>
    <title>France</title>
    <ns>0</ns>
    <revision><text>[[Paris#History|capital]] and [[Deutschland]] [[File:Map.png]]</text></revision>
  </page>
  <page>
    <title>Germany</title>
    <ns>0</ns>
    <revision><text>[[Berlin]], [[France]]</text></revision>
  </page>
  <page>
    <title>Paris</title>
    <ns>0</ns>
    <revision><text>[[BRD]] [[FR]] [[France]]</text></revision>
  </page>
  <page>
    <title>Europe</title>
    <ns>0</ns>
    <revision><text>[[Loop1]] [[Germany]]</text></revision>
  </page>
  <page>
    <title>Berlin</title>
    <ns>0</ns>
    <revision><text>No links here.</text></revision>
  </page>
  <page>
    <title>FR</title>
    <ns>0</ns>
    <redirect title="France" />
    <revision><text>#REDIRECT [[France]]</text></revision>
  </page>
  <page>
    <title>Deutschland</title>
    <ns>0</ns>
    <redirect title="Germany" />
    <revision><text>#REDIRECT [[Germany]]</text></revision>
  </page>
  <page>
    <title>BRD</title>
    <ns>0</ns>
    <redirect title="Deutschland" />
    <revision><text>#REDIRECT [[Deutschland]]</text></revision>
  </page>
  <page>
    <title>Loop1</title>
    <ns>0</ns>
    <redirect title="Loop2" />
    <revision><text>#REDIRECT [[Loop2]]</text></revision>
  </page>
  <page>
    <title>Loop2</title>
    <ns>0</ns>
    <redirect title="Loop1" />
    <revision><text>#REDIRECT [[Loop1]]</text></revision>
  </page>
  <page>
    <title>Talk:France</title>
    <ns>1</ns>
    <revision><text>[[Paris]] talk page chatter</text></revision>
  </page>
</mediawiki>
"""

# Expected click handling (link rows only):
#   France->Paris 40 attach; Paris->France 15 attach
#   Europe->Paris 12 orphan (dropped by default, added with keep_orphans)
#   France->Atlantis unknown title
#   plus 1 external row, 1 other row, 2 malformed rows
CLICKSTREAM_TSV = (
    "France\tParis\tlink\t40\n"
    "other-search\tFrance\texternal\t9000\n"
    "Paris\tFrance\tlink\t15\n"
    "Europe\tParis\tlink\t12\n"
    "France\tAtlantis\tlink\t12\n"
    "Germany\tFrance\tother\t33\n"
    "France\tParis\tlink\tabc\n"
    "France\tParis\n"
)

# Expected per-node views: France 120 (incl. FR 20), Paris 75, Germany 30,
# Berlin 10, Europe 5; Atlantis unknown; one malformed row.
PAGEVIEWS_TXT = (
    "France 100\n"
    "Paris 50\n"
    "Paris 25\n"
    "Germany 30\n"
    "FR 20\n"
    "Atlantis 7\n"
    "Europe abc\n"
    "Berlin 10\n"
    "Europe 5\n"
)

# Expected SQL-corpus manifest:
#   nodes=3 (France, Germany, O'Brien (page))
#   all=7 unified=4 redlinks=1 self_loops=1 duplicates=1
# Pagelinks rows: France->Germany, France->O'Brien (page),
#   Germany->France (x2, dup), Germany->Missing page (redlink),
#   target-ns filter row (never counted), O'Brien (page)->FR (resolves
#   to France), FR->France (source resolves to France -> self loop),
#   source-ns filter row (never counted).
PAGE_SQL = """\
-- MySQL dump of table `page`
DROP TABLE IF EXISTS `page`;
/*!40101 SET character_set_client = utf8 */;
INSERT INTO `page` VALUES (1,0,'France','',0,0,0.5,'20191001000000',NULL,10,100,'wikitext',NULL),(2,0,'Germany','',0,0,0.25,'20191001000000',NULL,11,101,'wikitext',NULL),(3,0,'O\\'Brien_(page)','',0,0,0.125,'20191001000000',NULL,12,102,'wikitext',NULL);
INSERT INTO `page` VALUES (4,0,'FR','',1,0,0.0625,'20191001000000',NULL,13,103,'wikitext',NULL),(5,1,'Talk_page','',0,0,0.03125,'20191001000000',NULL,14,104,'wikitext',NULL);
"""

PAGELINKS_SQL = """\
-- MySQL dump of table `pagelinks`
INSERT INTO `pagelinks` VALUES (1,0,'Germany',0),(1,0,'O\\'Brien_(page)',0),(2,0,'France',0),(2,0,'France',0),(2,0,'Missing_page',0),(2,1,'Talk_page',0),(3,0,'FR',0),(4,0,'France',0),(5,0,'France',1);
"""

REDIRECT_SQL = """\
-- MySQL dump of table `redirect`
INSERT INTO `redirect` VALUES (4,0,'France','','');
"""

CONCEPT_MAP_TSV = (
    "# language\ttitle\tconcept_id\n"
    "en\tFrance\tQ142\n"
    "de\tFrankreich\tQ142\n"
    "en\tGermany\tQ183\n"
    "de\tDeutschland\tQ183\n"
)


@pytest.fixture
def wikicode_corpus(tmp_path: Path) -> dict[str, Path]:
    paths = {
        "wikicode": tmp_path / "dump.xml",
        "clickstream": tmp_path / "clicks.tsv",
        "pageviews": tmp_path / "views.txt",
    }
    paths["wikicode"].write_text(WIKICODE_XML, encoding="utf-8")
    paths["clickstream"].write_text(CLICKSTREAM_TSV, encoding="utf-8")
    paths["pageviews"].write_text(PAGEVIEWS_TXT, encoding="utf-8")
    return paths


@pytest.fixture
def sql_corpus(tmp_path: Path) -> dict[str, Path]:
    paths = {
        "sql_page": tmp_path / "page.sql",
        "sql_pagelinks": tmp_path / "pagelinks.sql",
        "sql_redirect": tmp_path / "redirect.sql",
    }
    paths["sql_page"].write_text(PAGE_SQL, encoding="utf-8")
    paths["sql_pagelinks"].write_text(PAGELINKS_SQL, encoding="utf-8")
    paths["sql_redirect"].write_text(REDIRECT_SQL, encoding="utf-8")
    return paths


def write_run_ini(tmp_path: Path, body: str) -> Path:
    path = tmp_path / "run.ini"
    path.write_text(body, encoding="utf-8")
    return path


def as_stream(text: str) -> io.BytesIO:
    return io.BytesIO(text.encode("utf-8"))
