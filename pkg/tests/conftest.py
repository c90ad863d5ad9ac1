import json

import pytest

from vocadapt import load_corpus, load_dictionary, toy_dictionary_path


@pytest.fixture(scope="session")
def toy_dict():
    return load_dictionary(toy_dictionary_path())


@pytest.fixture
def write_jsonl(tmp_path):
    def _write(records, name="corpus.jsonl"):
        path = tmp_path / name
        with path.open("w", encoding="utf-8") as handle:
            for record in records:
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
        return path

    return _write


@pytest.fixture
def make_corpus(write_jsonl):
    def _make(records, name="corpus.jsonl", **kwargs):
        return load_corpus(write_jsonl(records, name), **kwargs)

    return _make
