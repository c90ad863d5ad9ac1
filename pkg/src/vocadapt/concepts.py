"""Dictionary-backed approximate concept matching.

A lightweight stand-in for a full UMLS matcher: dictionary terms are
normalized strings mapped to concept identifiers, candidate lookups go
through a character 3-gram inverted index, and similarity is the cosine
of binary 3-gram incidence vectors (no padding).  Spans up to five words
are scanned and overlaps are resolved greedily by descending similarity,
then span length, then start position; with that priority ordering,
raising the threshold can only ever shrink the match set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from .text import normalize_text, words


class DictionaryFormatError(ValueError):
    """Raised for malformed dictionary files; the message carries the line."""


@dataclass(frozen=True)
class ConceptMatch:
    """One matched span; ``start``/``end`` are word indices, end exclusive."""

    start: int
    end: int
    matched_term: str
    concept_id: str
    similarity: float


def _char_ngrams(text: str, n: int = 3) -> frozenset:
    if len(text) < n:
        return frozenset()
    return frozenset(text[i : i + n] for i in range(len(text) - n + 1))


def char_ngram_cosine(a: str, b: str, n: int = 3) -> float:
    """Cosine of binary character n-gram incidence vectors.

    Strings shorter than ``n`` have no n-grams; for those the measure
    degrades to exact string equality (1.0 or 0.0).
    """
    if len(a) < n or len(b) < n:
        return 1.0 if a == b else 0.0
    grams_a = _char_ngrams(a, n)
    grams_b = _char_ngrams(b, n)
    shared = len(grams_a & grams_b)
    if not shared:
        return 0.0
    return shared / math.sqrt(len(grams_a) * len(grams_b))


class ConceptDictionary:
    """Normalized term -> concept ids, with a character 3-gram index."""

    def __init__(self, entries: dict):
        if not entries:
            raise ValueError("concept dictionary is empty")
        self.entries: dict[str, tuple[str, ...]] = {
            term: tuple(ids) for term, ids in entries.items()
        }
        self.ngram_index: dict[str, set] = {}
        for term in self.entries:
            for gram in _char_ngrams(term):
                self.ngram_index.setdefault(gram, set()).add(term)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, term: str) -> bool:
        return term in self.entries

    def ids_for(self, term: str) -> tuple[str, ...]:
        return self.entries.get(term, ())

    def candidate_terms(self, text: str) -> set:
        """Terms sharing at least one 3-gram with ``text`` (plus exact hits)."""
        candidates: set = set()
        for gram in _char_ngrams(text):
            candidates |= self.ngram_index.get(gram, set())
        if text in self.entries:
            candidates.add(text)
        return candidates


def load_dictionary(path: str | Path) -> ConceptDictionary:
    """Load a TSV dictionary of ``term<TAB>concept_id`` lines.

    Terms are normalized like corpus text (lowercase, NFC, single spaces).
    A term appearing on several lines maps to all of its ids.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no dictionary file at {path}")
    entries: dict[str, list] = {}
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise DictionaryFormatError(
                    f"{path}:{lineno}: expected 'term<TAB>concept_id'"
                )
            term = " ".join(words(normalize_text(parts[0])))
            if not term:
                raise DictionaryFormatError(
                    f"{path}:{lineno}: term is empty after normalization"
                )
            concept_id = parts[1].strip()
            ids = entries.setdefault(term, [])
            if concept_id not in ids:
                ids.append(concept_id)
    if not entries:
        raise DictionaryFormatError(f"{path}: dictionary is empty")
    return ConceptDictionary(entries)


def match_spans(
    text: str | Sequence[str],
    dictionary: ConceptDictionary,
    threshold: float = 0.95,
    max_window: int = 5,
) -> list[ConceptMatch]:
    """Find dictionary spans in ``text`` at or above ``threshold``.

    Windows of one to ``max_window`` words are compared against candidate
    terms from the 3-gram index.  Overlaps resolve greedily by (higher
    similarity, longer span, earlier start, term); a term with several ids
    yields one match per id on its single winning span.  Matches come
    back sorted by position.
    """
    word_list = list(text) if not isinstance(text, str) else words(text)
    if not word_list:
        return []
    candidates: list[tuple[float, int, int, str]] = []
    for size in range(1, max_window + 1):
        for start in range(0, len(word_list) - size + 1):
            span_text = " ".join(word_list[start : start + size])
            best_term: tuple[float, str] | None = None
            for term in dictionary.candidate_terms(span_text):
                sim = char_ngram_cosine(span_text, term)
                if sim < threshold:
                    continue
                # equal similarity: keep the lexicographically smaller term
                if best_term is None or (-sim, term) < (-best_term[0], best_term[1]):
                    best_term = (sim, term)
            if best_term is not None:
                candidates.append((best_term[0], size, start, best_term[1]))

    taken = [False] * len(word_list)
    matches: list[ConceptMatch] = []
    for sim, size, start, term in sorted(
        candidates, key=lambda c: (-c[0], -c[1], c[2], c[3])
    ):
        if any(taken[start : start + size]):
            continue
        for i in range(start, start + size):
            taken[i] = True
        for concept_id in dictionary.ids_for(term):
            matches.append(
                ConceptMatch(
                    start=start,
                    end=start + size,
                    matched_term=term,
                    concept_id=concept_id,
                    similarity=sim,
                )
            )
    matches.sort(key=lambda m: (m.start, m.end, m.concept_id))
    return matches


def extract_concepts(
    text: str | Sequence[str],
    dictionary: ConceptDictionary,
    threshold: float = 0.95,
) -> set:
    """Set of concept ids matched anywhere in ``text``."""
    return {m.concept_id for m in match_spans(text, dictionary, threshold)}


def is_medical_word(
    word: str, dictionary: ConceptDictionary, threshold: float = 0.95
) -> bool:
    """True when a single word matches any dictionary term at ``threshold``."""
    if not word:
        return False
    for term in dictionary.candidate_terms(word):
        if char_ngram_cosine(word, term) >= threshold:
            return True
    return False


def toy_dictionary_path() -> Path:
    """Path of the bundled 200-term toy medical dictionary."""
    return Path(resources.files("vocadapt").joinpath("data/toy_medical_dictionary.tsv"))
