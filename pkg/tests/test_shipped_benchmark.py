"""The committed benchmark/ directory must stay in lockstep with the builder."""
from pathlib import Path

import pytest

from pkgraph.bench.corpus import write_corpus, write_items

SHIPPED = Path(__file__).resolve().parent.parent / "benchmark"


@pytest.mark.skipif(not SHIPPED.exists(), reason="repo checkout only")
def test_shipped_corpus_matches_builder(tmp_path):
    rebuilt = write_corpus(tmp_path / "corpus")
    shipped_files = sorted(p.name for p in (SHIPPED / "corpus").iterdir())
    rebuilt_files = sorted(p.name for p in rebuilt.iterdir())
    assert shipped_files == rebuilt_files
    for name in shipped_files:
        assert (SHIPPED / "corpus" / name).read_bytes() == \
            (rebuilt / name).read_bytes(), f"{name} drifted; re-materialize"


@pytest.mark.skipif(not SHIPPED.exists(), reason="repo checkout only")
def test_shipped_items_match_builder(tmp_path):
    rebuilt_corpus = write_corpus(tmp_path / "corpus")
    rebuilt_items = write_items(rebuilt_corpus, tmp_path / "items.ndjson")
    assert (SHIPPED / "items.ndjson").read_bytes() == rebuilt_items.read_bytes()
