from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from narevents.corpus import parse_conllu
from narevents.extraction import extract_candidates

DATA_DIR = Path(__file__).parent / "data"

SAMPLE_METADATA = {
    "n1": {"split": "train"},
    "n2": {"split": "valid"},
    "n3": {"split": "test"},
}


@pytest.fixture(scope="session")
def sample_conllu_text() -> str:
    return (DATA_DIR / "sample.conllu").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def sample_corpus(sample_conllu_text):
    return parse_conllu(sample_conllu_text, SAMPLE_METADATA)


@pytest.fixture(scope="session")
def sample_candidates(sample_corpus):
    return {
        sentence.key: extract_candidates(sentence)
        for narrative in sample_corpus
        for sentence in narrative.sentences
    }
