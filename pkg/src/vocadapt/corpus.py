"""Corpus ingestion, fragmentation statistics, and training-data hygiene.

Documents are (id, source, summary) triples loaded from JSONL with a
configurable field mapping and normalized once at load time; every
downstream statistic shares the word definition in :mod:`vocadapt.text`.
"""

from __future__ import annotations

import json
import statistics
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

from .concepts import ConceptDictionary, extract_concepts
from .text import normalize_text, words
from .tokenizers import UnrepresentableCharacterError, Vocabulary, tokenize_word


class CorpusFormatError(ValueError):
    """Raised for malformed corpus files; the message carries the location."""


@dataclass(frozen=True)
class Document:
    id: str
    source: str
    summary: str


class Corpus:
    """An immutable list of documents with cached word-frequency tables."""

    def __init__(self, documents: Sequence[Document], name: str = ""):
        docs = tuple(documents)
        seen: set = set()
        for doc in docs:
            if doc.id in seen:
                raise ValueError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)
            if not doc.source or not doc.summary:
                raise ValueError(f"document {doc.id!r} has an empty source or summary")
        self.documents = docs
        self.name = name

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    @cached_property
    def word_freq_source(self) -> Counter:
        counts: Counter = Counter()
        for doc in self.documents:
            counts.update(words(doc.source))
        return counts

    @cached_property
    def word_freq_summary(self) -> Counter:
        counts: Counter = Counter()
        for doc in self.documents:
            counts.update(words(doc.summary))
        return counts

    def without(self, ids: set) -> "Corpus":
        return Corpus(
            [doc for doc in self.documents if doc.id not in ids], name=self.name
        )


def load_corpus(
    path: str | Path,
    field_source: str = "source",
    field_summary: str = "summary",
    field_id: str | None = "id",
    name: str | None = None,
    lowercase: bool = True,
) -> Corpus:
    """Load a JSONL corpus, normalizing text at ingest.

    ``field_id=None`` auto-numbers documents.  Malformed JSON, a missing
    mapped field, or an empty text after normalization raise
    :class:`CorpusFormatError` naming the line.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no corpus file at {path}")
    docs: list[Document] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: malformed JSON ({exc.msg})")
            if not isinstance(record, dict):
                raise CorpusFormatError(f"{path}:{lineno}: expected a JSON object")
            fields = [field_source, field_summary] + ([field_id] if field_id else [])
            for field in fields:
                if field not in record:
                    raise CorpusFormatError(
                        f"{path}:{lineno}: missing field {field!r}"
                    )
            source = normalize_text(str(record[field_source]), lowercase=lowercase)
            summary = normalize_text(str(record[field_summary]), lowercase=lowercase)
            if not source.strip() or not summary.strip():
                raise CorpusFormatError(
                    f"{path}:{lineno}: empty source or summary after normalization"
                )
            doc_id = str(record[field_id]) if field_id else f"doc-{lineno:06d}"
            docs.append(Document(id=doc_id, source=source, summary=summary))
    if not docs:
        raise CorpusFormatError(f"{path}: corpus is empty")
    try:
        return Corpus(docs, name=name if name is not None else path.stem)
    except ValueError as exc:
        raise CorpusFormatError(f"{path}: {exc}")


def write_corpus(corpus: Corpus, path: str | Path) -> Path:
    """Write documents as canonical JSONL (id, source, summary)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for doc in corpus.documents:
            handle.write(
                json.dumps(
                    {"id": doc.id, "source": doc.source, "summary": doc.summary},
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )
    return path


def write_frequency_table(counts: Mapping[str, int], path: str | Path) -> Path:
    """Write ``word<TAB>count`` rows, descending count then lexicographic."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    path.write_text(
        "".join(f"{word}\t{count}\n" for word, count in rows), encoding="utf-8"
    )
    return path


def load_frequency_table(path: str | Path) -> Counter:
    path = Path(path)
    counts: Counter = Counter()
    for lineno, line in enumerate(
        path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise CorpusFormatError(f"{path}:{lineno}: expected 'word<TAB>count'")
        try:
            counts[parts[0]] = int(parts[1])
        except ValueError:
            raise CorpusFormatError(f"{path}:{lineno}: count {parts[1]!r} is not an integer")
    return counts


@dataclass(frozen=True)
class OovReport:
    """Fragmentation statistics of a corpus side under a vocabulary."""

    side: str
    distinct: bool
    per_doc_oov_fraction: tuple[float, ...]
    median_oov_pct: float
    split_histogram: Mapping[int, int]
    words_split_ge4: tuple[tuple[str, int], ...]


def oov_stats(
    corpus: Corpus,
    vocab: Vocabulary,
    side: str = "summary",
    distinct: bool = True,
) -> OovReport:
    """Per-document fraction of words split into more than one piece.

    The default counts each distinct word once per document; pass
    ``distinct=False`` to weight by occurrences instead.  The histogram
    maps piece count to the number of analyzed word occurrences, and its
    counts sum to the total analyzed.  Words the vocabulary cannot
    represent at all count as out-of-vocabulary and land in histogram
    bucket 0; they are left out of the heavily-split word list because
    they have no piece count to rank by.
    """
    if side not in ("source", "summary"):
        raise ValueError(f"side must be 'source' or 'summary', got {side!r}")
    if not len(corpus):
        raise ValueError("empty corpus")
    piece_counts: dict[str, int] = {}

    def pieces_of(word: str) -> int:
        cached = piece_counts.get(word)
        if cached is None:
            try:
                cached = tokenize_word(word, vocab).piece_count
            except UnrepresentableCharacterError:
                cached = 0
            piece_counts[word] = cached
        return cached

    fractions: list[float] = []
    histogram: Counter = Counter()
    for doc in corpus.documents:
        text = doc.source if side == "source" else doc.summary
        doc_words = words(text)
        if not doc_words:
            fractions.append(0.0)
            continue
        weighted = Counter(doc_words) if not distinct else {w: 1 for w in set(doc_words)}
        total = sum(weighted.values())
        split = 0
        for word, weight in weighted.items():
            count = pieces_of(word)
            histogram[count] += weight
            if count > 1 or count == 0:
                split += weight
        fractions.append(split / total)

    heavy = sorted(
        ((w, c) for w, c in piece_counts.items() if c >= 4),
        key=lambda kv: (-kv[1], kv[0]),
    )
    return OovReport(
        side=side,
        distinct=distinct,
        per_doc_oov_fraction=tuple(fractions),
        median_oov_pct=statistics.median(fractions) * 100.0,
        split_histogram=dict(sorted(histogram.items())),
        words_split_ge4=tuple(heavy),
    )


def domain_similarity(
    freq_a: Mapping[str, int], freq_b: Mapping[str, int], top_n: int = 10000
) -> float:
    """Overlap fraction of the two most-frequent-word lists.

    Both lists are cut at ``min(top_n, len(a), len(b))`` entries (ranked by
    descending count, ties lexicographic) so the measure stays symmetric
    when a table is shorter than ``top_n``.
    """
    if not freq_a or not freq_b:
        raise ValueError("frequency tables must be non-empty")
    effective_n = min(top_n, len(freq_a), len(freq_b))

    def top(freq: Mapping[str, int]) -> set:
        ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
        return {word for word, _ in ranked[:effective_n]}

    return len(top(freq_a) & top(freq_b)) / effective_n


def _shingles(text: str, size: int) -> set:
    toks = words(text)
    if len(toks) < size:
        return set()
    return {tuple(toks[i : i + size]) for i in range(len(toks) - size + 1)}


def decontaminate(
    pool: Corpus,
    downstream: Sequence[Corpus],
    shingle_size: int = 8,
    jaccard_threshold: float = 0.8,
) -> tuple[Corpus, list[dict]]:
    """Drop pool documents that leak into any downstream corpus.

    A pool document is removed when its normalized source text exactly
    matches a downstream source, or when the Jaccard similarity of their
    word shingle sets reaches ``jaccard_threshold``.  Returns the cleaned
    pool and one log record per removal (pool id, matched id, criterion).
    """
    exact: dict[str, str] = {}
    shingle_index: dict[tuple, set] = {}
    down_shingles: dict[str, set] = {}
    for corpus in downstream:
        for doc in corpus.documents:
            exact.setdefault(doc.source, doc.id)
            sh = _shingles(doc.source, shingle_size)
            down_shingles[doc.id] = sh
            for shingle in sh:
                shingle_index.setdefault(shingle, set()).add(doc.id)

    removed: set = set()
    log: list[dict] = []
    for doc in pool.documents:
        match_id = exact.get(doc.source)
        if match_id is not None:
            removed.add(doc.id)
            log.append({"id": doc.id, "matched_id": match_id, "criterion": "exact"})
            continue
        sh = _shingles(doc.source, shingle_size)
        if not sh:
            continue
        candidates: set = set()
        for shingle in sh:
            candidates |= shingle_index.get(shingle, set())
        best: tuple[float, str] | None = None
        for cand_id in sorted(candidates):
            other = down_shingles[cand_id]
            union = len(sh | other)
            if union == 0:
                continue
            jac = len(sh & other) / union
            if jac >= jaccard_threshold and (best is None or jac > best[0]):
                best = (jac, cand_id)
        if best is not None:
            removed.add(doc.id)
            log.append(
                {
                    "id": doc.id,
                    "matched_id": best[1],
                    "criterion": "jaccard",
                    "jaccard": round(best[0], 6),
                }
            )
    return pool.without(removed), log


def clean_training_split(
    corpus: Corpus,
    dictionary: ConceptDictionary,
    threshold: float = 0.95,
) -> tuple[Corpus, dict]:
    """Drop documents useless for adaptation training.

    Rule (a) removes documents whose summary and source share no concept;
    rule (b) then removes documents whose summary is longer than the
    source (in words).  Returns the cleaned corpus and per-rule counts.
    """
    removed: set = set()
    counts = {"no_concept_overlap": 0, "summary_longer_than_source": 0}
    for doc in corpus.documents:
        summary_concepts = extract_concepts(doc.summary, dictionary, threshold)
        source_concepts = extract_concepts(doc.source, dictionary, threshold)
        if not (summary_concepts & source_concepts):
            removed.add(doc.id)
            counts["no_concept_overlap"] += 1
    for doc in corpus.documents:
        if doc.id in removed:
            continue
        if len(words(doc.summary)) > len(words(doc.source)):
            removed.add(doc.id)
            counts["summary_longer_than_source"] += 1
    return corpus.without(removed), counts
