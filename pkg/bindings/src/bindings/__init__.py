"""In-process bindings over the vocadapt core.

A :class:`BoundSession` holds loaded handles (vocabulary, optional concept
dictionary, adaptation settings); :func:`tokenize`, :func:`adapt`, and
:func:`score` run the same pipeline the CLI runs and return the same
payloads the CLI writes, so serializing a result with
:func:`canonical_json` reproduces the CLI's JSON files byte for byte.

Nothing is reimplemented here: every computation is a call into the core,
and core errors propagate unchanged.  Sessions are read-only after
construction but are not designed for sharing across threads; give each
thread its own session.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from vocadapt import (
    AdaptationConfig,
    ConceptDictionary,
    ScorePair,
    Vocabulary,
    aggregate_payload,
    build_candidate_vocabs,
    candidate_words,
    emit_vocabulary,
    grid_search,
    load_corpus,
    load_dictionary,
    load_vocabulary,
    normalize_text,
    provenance_payload,
    score_pairs,
    tokenize_word,
    words,
)

__version__ = "0.1.0"

__all__ = [
    "BoundSession",
    "adapt",
    "canonical_json",
    "load_session",
    "score",
    "tokenize",
]


def canonical_json(payload: dict) -> bytes:
    """Serialize a payload exactly as the CLI writes its JSON files."""
    return (
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    ).encode("utf-8")


def _parse_grid(value, cast) -> tuple:
    if isinstance(value, str):
        return tuple(cast(part) for part in value.split(",") if part.strip())
    return tuple(cast(part) for part in value)


@dataclass(frozen=True)
class BoundSession:
    """Read-only handles shared by the binding operations."""

    vocab: Vocabulary
    dictionary: ConceptDictionary | None
    config: AdaptationConfig
    explicit_grids: bool
    field_source: str = "source"
    field_summary: str = "summary"
    field_id: str = "id"
    cased: bool = False

    def tokenize(self, word: str) -> tuple:
        return tokenize(self, word)

    def adapt(self, target, pool, out_dir=None, jobs: int = 1) -> dict:
        return adapt(self, target, pool, out_dir=out_dir, jobs=jobs)

    def score(self, pairs, seed: int, samples: int = 1000,
              confidence: float = 95.0) -> dict:
        return score(self, pairs, seed, samples=samples, confidence=confidence)


def load_session(
    vocab: str | Path | Vocabulary,
    dictionary: str | Path | ConceptDictionary | None = None,
    config: Mapping | None = None,
) -> BoundSession:
    """Load a vocabulary, an optional concept dictionary, and settings.

    ``vocab`` is a vocabulary directory (or ``<stem>.txt`` path) as the CLI
    accepts, or an already-built :class:`~vocadapt.Vocabulary`.  ``config``
    mirrors the CLI's JSON config: ``a_grid``/``k_grid`` (comma-separated
    strings or sequences, given together or not at all), ``margin``,
    ``pool_vocab_size``, ``split_threshold``, ``concept_threshold``, and
    the corpus field mappings ``field_source``/``field_summary``/
    ``field_id``/``cased``.
    """
    if not isinstance(vocab, Vocabulary):
        path = Path(vocab)
        if path.is_dir():
            directory, stem = path, "vocab"
        else:
            directory, stem = path.parent, path.name.removesuffix(".txt")
        vocab = load_vocabulary(directory, stem)
    if dictionary is not None and not isinstance(dictionary, ConceptDictionary):
        dictionary = load_dictionary(dictionary)

    config = dict(config or {})
    a_grid = config.pop("a_grid", None)
    k_grid = config.pop("k_grid", None)
    if (a_grid is None) != (k_grid is None):
        raise ValueError("a_grid and k_grid must be given together")
    explicit = a_grid is not None
    settings = AdaptationConfig(
        a_grid=_parse_grid(a_grid, float) if explicit else (1.0,),
        k_grid=_parse_grid(k_grid, int) if explicit else (1,),
        margin=float(config.pop("margin", 0.04)),
        pool_vocab_size=(
            int(config["pool_vocab_size"])
            if config.pop("pool_vocab_size", None) is not None
            else None
        ),
        split_threshold=int(config.pop("split_threshold", 3)),
        concept_threshold=float(config.pop("concept_threshold", 0.95)),
    )
    session = BoundSession(
        vocab=vocab,
        dictionary=dictionary,
        config=settings,
        explicit_grids=explicit,
        field_source=str(config.pop("field_source", "source")),
        field_summary=str(config.pop("field_summary", "summary")),
        field_id=str(config.pop("field_id", "id")),
        cased=bool(config.pop("cased", False)),
    )
    if config:
        raise ValueError(f"unknown config keys: {sorted(config)}")
    return session


def _corpus(session: BoundSession, source):
    if not isinstance(source, (str, Path)):
        return source
    return load_corpus(
        source,
        field_source=session.field_source,
        field_summary=session.field_summary,
        field_id=session.field_id,
        lowercase=not session.cased,
    )


def tokenize(session: BoundSession, word: str) -> tuple:
    """Segment one word with the session vocabulary; returns the pieces."""
    return tokenize_word(word, session.vocab).pieces


def adapt(session: BoundSession, target, pool, out_dir=None, jobs: int = 1) -> dict:
    """Run the adaptation pipeline; returns the provenance payload.

    ``target`` and ``pool`` are corpus paths or loaded corpora.  With
    ``out_dir`` the same files the CLI's ``adapt`` emits are written there.
    """
    target = _corpus(session, target)
    pool = _corpus(session, pool)
    candidates = candidate_words(
        target, session.vocab, session.dictionary, session.config
    )
    target_vocab, pool_vocab = build_candidate_vocabs(
        candidates, pool, session.vocab, session.config
    )
    cfg = session.config
    if not session.explicit_grids:
        defaults = AdaptationConfig.default_grids(
            len(session.vocab), len(pool_vocab.tokens)
        )
        cfg = dataclasses.replace(cfg, a_grid=defaults.a_grid, k_grid=defaults.k_grid)
    result = grid_search(
        target, target_vocab, pool_vocab, session.vocab, cfg, jobs=jobs
    )
    if out_dir is not None:
        emit_vocabulary(result, out_dir)
    return provenance_payload(result)


def _normalize(session: BoundSession, text: str) -> tuple:
    return tuple(words(normalize_text(str(text), lowercase=not session.cased)))


def score(
    session: BoundSession,
    pairs: str | Path | Iterable[Mapping] | Sequence[ScorePair],
    seed: int,
    samples: int = 1000,
    confidence: float = 95.0,
) -> dict:
    """Score candidate/reference pairs; returns the aggregate payload.

    ``pairs`` is a JSONL path as the CLI reads, an iterable of
    ``{"id", "candidate", "reference"}`` records, or prepared
    :class:`~vocadapt.ScorePair` objects.
    """
    if isinstance(pairs, (str, Path)):
        records = [
            json.loads(line)
            for line in Path(pairs).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    else:
        records = list(pairs)
    prepared = [
        pair
        if isinstance(pair, ScorePair)
        else ScorePair(
            id=str(pair["id"]),
            candidate=_normalize(session, pair["candidate"]),
            reference=_normalize(session, pair["reference"]),
        )
        for pair in records
    ]
    report = score_pairs(
        prepared,
        seed=seed,
        dictionary=session.dictionary,
        samples=samples,
        confidence=confidence,
    )
    return aggregate_payload(report)
