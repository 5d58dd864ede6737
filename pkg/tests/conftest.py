import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from xlforge import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # timed assertions must see steady-state, not JIT compilation
    kernels.warmup()


def make_corpus_json(entries):
    return json.dumps(entries, ensure_ascii=False).encode("utf-8")


@pytest.fixture
def tiny_corpus_bytes():
    return make_corpus_json(
        [
            {"id": "a1", "document": "the cat sat on the mat today", "summary": "a cat sat down"},
            {"id": "a2", "document": "rain fell over the hills all night", "summary": "it rained at night"},
            {"id": "a3", "document": "markets rose after the announcement", "summary": "markets went up"},
        ]
    )
