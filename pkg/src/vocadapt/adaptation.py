"""Task-aware vocabulary extension via fragment-score grid search.

The pipeline picks poorly segmented and domain-relevant words from the
target summaries, learns candidate subword inventories from those words
and from a large in-domain pool corpus, then searches two hyperparameters:
K, a frequency-rank cutoff into the pool inventory, and A, a size factor on
the retained target inventory.  For each cell the extension set is the
retained target tokens plus the top-P pool tokens (P = min(base size,
round(A * retained))); the winner is the smallest extended vocabulary whose
fragment score on the target summaries lands within a small margin of the
best score anywhere on the grid, with ties broken toward smaller K, then
smaller A.

The fragment score of a token set over a word multiset is the mean number
of pieces per word occurrence under fewest-pieces segmentation
(:func:`vocadapt.tokenizers.minimal_piece_count`); whole-word coverage
gives the floor of 1.0, and growing the token set can never raise the
score.  The extension set is capped at the base vocabulary size, truncating
by pool rank in the rare scaled-down configurations where the retained
target tokens would push past the cap.
"""

from __future__ import annotations

import csv
import json
import math
import random
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .concepts import ConceptDictionary, is_medical_word
from .corpus import Corpus
from .tokenizers import (
    UnrepresentableCharacterError,
    Vocabulary,
    _greedy_pieces,
    _min_piece_count,
    save_vocabulary,
    tokenize_word,
)
from .trainer import train_subword_vocab

ORIGIN_TARGET = "TGT"
ORIGIN_POOL = "PAC"


@dataclass(frozen=True)
class AdaptationConfig:
    """Grid-search hyperparameters and candidate-selection thresholds."""

    a_grid: tuple[float, ...]
    k_grid: tuple[int, ...]
    margin: float = 0.04
    pool_vocab_size: int | None = None
    split_threshold: int = 3
    concept_threshold: float = 0.95

    def __post_init__(self):
        object.__setattr__(self, "a_grid", tuple(self.a_grid))
        object.__setattr__(self, "k_grid", tuple(self.k_grid))
        if not self.a_grid or not self.k_grid:
            raise ValueError("grid is empty: both a_grid and k_grid need values")
        if any(a <= 0 for a in self.a_grid):
            raise ValueError("size factors must be positive")
        if any(k <= 0 for k in self.k_grid):
            raise ValueError("rank cutoffs must be positive")
        if self.margin < 0:
            raise ValueError("margin must be non-negative")

    @classmethod
    def default_grids(
        cls, base_size: int, pool_size: int, **overrides
    ) -> "AdaptationConfig":
        """Standard grids: A from 0.25 to 10.00 in steps of 0.25, K from
        5000 to min(base, pool) in steps of 5000."""
        a_grid = tuple(i * 0.25 for i in range(1, 41))
        upper = min(base_size, pool_size)
        k_grid = tuple(range(5000, upper + 1, 5000))
        if not k_grid:
            raise ValueError(
                f"no rank cutoffs possible for min(base, pool) = {upper}; "
                "pass explicit grids for small vocabularies"
            )
        return cls(a_grid=a_grid, k_grid=k_grid, **overrides)


@dataclass(frozen=True)
class GridCell:
    """One evaluated (A, K) setting."""

    a: float
    k: int
    target_size: int
    pool_take: int
    vocab_size: int
    fragment_score: float


@dataclass(frozen=True)
class AddedToken:
    token: str
    origin: str
    base_pieces: tuple[str, ...]


@dataclass(frozen=True)
class AdaptationResult:
    chosen: GridCell
    min_fragment_score: float
    grid: tuple[GridCell, ...]
    adapted_vocab: Vocabulary
    added_tokens: tuple[AddedToken, ...]


def _as_counts(word_counts: Mapping[str, int] | Iterable[str]) -> Counter:
    counts = (
        Counter(dict(word_counts))
        if isinstance(word_counts, Mapping)
        else Counter(word_counts)
    )
    if not counts:
        raise ValueError("fragment score over an empty word multiset")
    if any(c <= 0 for c in counts.values()):
        raise ValueError("word counts must be positive")
    return counts


def fragment_score(
    word_counts: Mapping[str, int] | Iterable[str],
    token_set: Iterable[str],
    continuation_marker: str = "",
    boundary_marker: str = "",
) -> float:
    """Mean pieces per word occurrence under fewest-pieces segmentation.

    ``word_counts`` is either a word -> occurrence-count mapping or a plain
    iterable of occurrences.  1.0 means every occurrence is a whole token.
    """
    counts = _as_counts(word_counts)
    tokens = (
        token_set if isinstance(token_set, (set, frozenset)) else frozenset(token_set)
    )
    max_len = max((len(t) for t in tokens), default=0)
    pieces = 0
    occurrences = 0
    for word, count in counts.items():
        pieces += count * _min_piece_count(
            word, tokens, frozenset(), continuation_marker, boundary_marker, max_len
        )
        occurrences += count
    return pieces / occurrences


def candidate_words(
    target: Corpus,
    base_vocab: Vocabulary,
    dictionary: ConceptDictionary | None,
    cfg: AdaptationConfig,
) -> dict:
    """Target-summary words worth learning subwords from.

    A word qualifies when the base vocabulary splits it into more than
    ``cfg.split_threshold`` pieces, or into more than one piece while
    matching the concept dictionary at ``cfg.concept_threshold``.  Returns
    word -> occurrence count.
    """
    out: dict[str, int] = {}
    for word in sorted(target.word_freq_summary):
        count = target.word_freq_summary[word]
        pieces = tokenize_word(word, base_vocab).piece_count
        if pieces > cfg.split_threshold:
            out[word] = count
        elif (
            pieces > 1
            and dictionary is not None
            and is_medical_word(word, dictionary, cfg.concept_threshold)
        ):
            out[word] = count
    return out


def _inventory(tokens: Sequence[str], base_vocab: Vocabulary) -> Vocabulary:
    return Vocabulary(
        tokens=tuple(tokens),
        family=base_vocab.family,
        continuation_marker=base_vocab.continuation_marker,
        boundary_marker=base_vocab.boundary_marker,
    )


def build_candidate_vocabs(
    candidates: Mapping[str, int],
    pool: Corpus,
    base_vocab: Vocabulary,
    cfg: AdaptationConfig,
) -> tuple[Vocabulary, Vocabulary]:
    """Learn the target and pool token inventories feeding the grid search.

    The target inventory is trained to merge exhaustion on the candidate
    words; the pool inventory is trained on pool source words at
    ``cfg.pool_vocab_size`` (default three times the base size) and
    re-ranked by each token's occurrence frequency when the trained
    vocabulary segments the pool, ties lexicographic.  Both inventories
    exclude tokens the base vocabulary already has.
    """
    family = base_vocab.family
    cont, bound = base_vocab.continuation_marker, base_vocab.boundary_marker

    if candidates:
        target_full = train_subword_vocab(
            candidates, None, family, continuation_marker=cont, boundary_marker=bound
        )
        target_tokens = [t for t in target_full.tokens if t not in base_vocab.token_set]
    else:
        target_tokens = []

    pool_size = cfg.pool_vocab_size or 3 * len(base_vocab)
    pool_full = train_subword_vocab(
        pool.word_freq_source, pool_size, family,
        continuation_marker=cont, boundary_marker=bound,
    )
    occurrence: Counter = Counter()
    for word, count in pool.word_freq_source.items():
        for piece in tokenize_word(word, pool_full).pieces:
            occurrence[piece] += count
    ranked = sorted(pool_full.tokens, key=lambda t: (-occurrence[t], t))
    pool_tokens = [t for t in ranked if t not in base_vocab.token_set]
    return _inventory(target_tokens, base_vocab), _inventory(pool_tokens, base_vocab)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _extension_for(
    pool_list: Sequence[str], kept_set: set, k: int, p: int, cap: int
) -> list[str]:
    """Top-P pool tokens plus retained target tokens, pool-rank order,
    truncated at ``cap`` entries."""
    out = []
    upper = max(p, k if kept_set else 0)
    for i in range(min(upper, len(pool_list))):
        token = pool_list[i]
        if i < p or token in kept_set:
            out.append(token)
            if len(out) == cap:
                break
    return out


def _base_piece_counts(
    words: Iterable[str], base_vocab: Vocabulary
) -> dict[str, int]:
    cont, bound = base_vocab.continuation_marker, base_vocab.boundary_marker
    base_set = base_vocab.token_set
    max_len = base_vocab.max_token_len
    return {
        w: _min_piece_count(w, base_set, frozenset(), cont, bound, max_len)
        for w in words
    }


def grid_search(
    target: Corpus,
    target_vocab: Vocabulary,
    pool_vocab: Vocabulary,
    base_vocab: Vocabulary,
    cfg: AdaptationConfig,
    jobs: int = 1,
) -> AdaptationResult:
    """Evaluate every (A, K) cell and pick the margin-optimal extension.

    Cells sharing an identical extension set are scored once.  With
    ``jobs > 1`` distinct extensions are scored in a thread pool; results
    are reduced by cell, so parallel runs match serial ones exactly.
    """
    word_counts = dict(target.word_freq_summary)
    if not word_counts:
        raise ValueError("target corpus has no summary words")
    base_size = len(base_vocab)
    cont, bound = base_vocab.continuation_marker, base_vocab.boundary_marker
    base_set = base_vocab.token_set
    pool_list = list(pool_vocab.tokens)
    target_set = set(target_vocab.tokens)

    base_counts = _base_piece_counts(word_counts, base_vocab)
    whole_pieces = sum(
        count for word, count in word_counts.items() if base_counts[word] == 1
    )
    multi = {w: c for w, c in word_counts.items() if base_counts[w] > 1}
    occurrences = sum(word_counts.values())

    def score_extension(extension: Sequence[str]) -> float:
        added = frozenset(extension)
        max_len = max(
            base_vocab.max_token_len, max((len(t) for t in added), default=0)
        )
        pieces = whole_pieces
        for word, count in multi.items():
            pieces += count * _min_piece_count(
                word, added, base_set, cont, bound, max_len
            )
        return pieces / occurrences

    # layout of every cell first, deduplicating by extension identity
    per_k: dict[int, tuple[list[str], set]] = {}
    for k in cfg.k_grid:
        kept = [t for t in pool_list[:k] if t in target_set]
        per_k[k] = (kept, set(kept))

    cell_specs: list[tuple[float, int, int, int, tuple]] = []
    ext_keys: dict[tuple, list[str]] = {}
    for k in cfg.k_grid:
        kept, kept_set = per_k[k]
        for a in cfg.a_grid:
            p = min(base_size, _round_half_up(a * len(kept)))
            key = ("pool", p) if (p >= k or not kept) else ("mix", k, p)
            if key not in ext_keys:
                ext_keys[key] = _extension_for(pool_list, kept_set, k, p, base_size)
            cell_specs.append((a, k, len(kept), p, key))

    if jobs > 1:
        keys = list(ext_keys)
        with ThreadPoolExecutor(max_workers=jobs) as pool_exec:
            scored = pool_exec.map(lambda key: score_extension(ext_keys[key]), keys)
        scores = dict(zip(keys, scored))
    else:
        scores = {key: score_extension(ext) for key, ext in ext_keys.items()}

    cells = [
        GridCell(
            a=a,
            k=k,
            target_size=kept_size,
            pool_take=p,
            vocab_size=base_size + len(ext_keys[key]),
            fragment_score=scores[key],
        )
        for a, k, kept_size, p, key in cell_specs
    ]
    cells.sort(key=lambda c: (c.a, c.k))

    min_score = min(c.fragment_score for c in cells)
    eligible = [c for c in cells if c.fragment_score <= min_score + cfg.margin]
    chosen = min(eligible, key=lambda c: (c.vocab_size, c.k, c.a))

    kept, kept_set = per_k[chosen.k]
    extension = _extension_for(
        pool_list, kept_set, chosen.k, chosen.pool_take, base_size
    )
    adapted = Vocabulary(
        tokens=base_vocab.tokens + tuple(extension),
        family=base_vocab.family,
        continuation_marker=cont,
        boundary_marker=bound,
        merges=base_vocab.merges,
        scores=base_vocab.scores,
        added_tokens=frozenset(extension),
    )
    added = tuple(
        AddedToken(
            token=token,
            origin=ORIGIN_TARGET if token in kept_set else ORIGIN_POOL,
            base_pieces=_pieces_under_base(token, base_vocab),
        )
        for token in extension
    )
    return AdaptationResult(
        chosen=chosen,
        min_fragment_score=min_score,
        grid=tuple(cells),
        adapted_vocab=adapted,
        added_tokens=added,
    )


def _pieces_under_base(token: str, base_vocab: Vocabulary) -> tuple[str, ...]:
    """Greedy base-vocabulary segmentation of an added token's surface form.

    Continuation-marked tokens are segmented in continuation mode so the
    pieces stay marker-consistent.  Tokens the base alphabet cannot cover
    get an empty piece list rather than failing the emission.
    """
    cont = base_vocab.continuation_marker
    text = token
    start_continuation = False
    if cont and token.startswith(cont) and len(token) > len(cont):
        text = token[len(cont):]
        start_continuation = True
    try:
        return tuple(
            _greedy_pieces(
                text,
                base_vocab.token_set,
                frozenset(),
                cont,
                "",
                base_vocab.max_token_len,
                start_continuation=start_continuation,
            )
        )
    except UnrepresentableCharacterError:
        return ()


def avocado_vocab(
    target: Corpus,
    base_vocab: Vocabulary,
    candidate_stream: Iterable[str],
    threshold: float = 3.0,
    batch_size: int = 100,
) -> Vocabulary:
    """Greedy baseline: append ranked candidates in fixed-size batches.

    Batches keep being added while the running fragment score on the
    target summaries stays above ``threshold``; the batch that drives the
    score to the threshold or below is the last one kept.  A base
    vocabulary already at or below the threshold is returned unchanged.
    """
    if batch_size <= 0:
        raise ValueError("batch_size must be positive")
    word_counts = dict(target.word_freq_summary)
    if not word_counts:
        raise ValueError("target corpus has no summary words")
    cont, bound = base_vocab.continuation_marker, base_vocab.boundary_marker

    def score(extra: Sequence[str]) -> float:
        return fragment_score(
            word_counts,
            base_vocab.token_set | set(extra),
            continuation_marker=cont,
            boundary_marker=bound,
        )

    if score(()) <= threshold:
        return base_vocab
    stream = [
        t
        for t in dict.fromkeys(candidate_stream)
        if t and t not in base_vocab.token_set
    ]
    added: list[str] = []
    for i in range(0, len(stream), batch_size):
        added.extend(stream[i : i + batch_size])
        if score(added) <= threshold:
            break
    if not added:
        return base_vocab
    return Vocabulary(
        tokens=base_vocab.tokens + tuple(added),
        family=base_vocab.family,
        continuation_marker=cont,
        boundary_marker=bound,
        merges=base_vocab.merges,
        scores=base_vocab.scores,
        added_tokens=frozenset(added),
    )


def compare_vocabularies(
    vocab_a: Vocabulary,
    vocab_b: Vocabulary,
    target: Corpus,
    seed: int,
) -> dict:
    """Fragment-score comparison of two extensions of one base vocabulary.

    Reports the scores of the full vocabularies, then removes the common
    part and equalizes the two distinct added-token sets to the same size
    two ways (truncation by rank; seeded random sampling), scoring each
    reduced set on top of the shared base.
    """
    base_a = tuple(t for t in vocab_a.tokens if t not in vocab_a.added_tokens)
    base_b = tuple(t for t in vocab_b.tokens if t not in vocab_b.added_tokens)
    if base_a != base_b:
        raise ValueError("vocabularies do not share a base vocabulary")
    word_counts = dict(target.word_freq_summary)
    if not word_counts:
        raise ValueError("target corpus has no summary words")
    cont, bound = vocab_a.continuation_marker, vocab_a.boundary_marker
    base_set = frozenset(base_a)

    def score(extra: Sequence[str]) -> float:
        return fragment_score(
            word_counts, base_set | set(extra),
            continuation_marker=cont, boundary_marker=bound,
        )

    added_a = [t for t in vocab_a.tokens if t in vocab_a.added_tokens]
    added_b = [t for t in vocab_b.tokens if t in vocab_b.added_tokens]
    common = set(added_a) & set(added_b)
    distinct_a = [t for t in added_a if t not in common]
    distinct_b = [t for t in added_b if t not in common]
    size = min(len(distinct_a), len(distinct_b))

    def top_rank(tokens: list) -> list:
        return tokens[:size]

    def sampled(tokens: list) -> list:
        if len(tokens) == size:
            return list(tokens)
        rng = random.Random(seed)
        picked = sorted(rng.sample(range(len(tokens)), size))
        return [tokens[i] for i in picked]

    return {
        "seed": seed,
        "original": {
            "a": {"vocab_size": len(vocab_a), "fragment_score": score(added_a)},
            "b": {"vocab_size": len(vocab_b), "fragment_score": score(added_b)},
        },
        "overlap_removed": {
            "common_added": len(common),
            "distinct_a": len(distinct_a),
            "distinct_b": len(distinct_b),
            "equalized_size": size,
            "top_rank": {
                "a": score(top_rank(distinct_a)),
                "b": score(top_rank(distinct_b)),
            },
            "random_sample": {
                "a": score(sampled(distinct_a)),
                "b": score(sampled(distinct_b)),
                "seed": seed,
            },
        },
    }


def _round6(x: float) -> float:
    return round(x + 0.0, 6)


def _cell_dict(cell: GridCell) -> dict:
    return {
        "a": _round6(cell.a),
        "k": cell.k,
        "target_size": cell.target_size,
        "pool_take": cell.pool_take,
        "vocab_size": cell.vocab_size,
        "fragment_score": _round6(cell.fragment_score),
    }


def provenance_payload(result: AdaptationResult) -> dict:
    """The ``provenance.json`` payload for an adaptation result.

    Floats are rounded to six decimals; the dict serializes identically
    wherever it is emitted.
    """
    return {
        "base_vocab_size": len(result.adapted_vocab) - len(result.added_tokens),
        "chosen": _cell_dict(result.chosen),
        "min_fragment_score": _round6(result.min_fragment_score),
        "added_tokens": [
            {
                "token": t.token,
                "origin": t.origin,
                "base_pieces": list(t.base_pieces),
            }
            for t in result.added_tokens
        ],
        "grid": [_cell_dict(c) for c in result.grid],
    }


def emit_vocabulary(result: AdaptationResult, out_dir: str | Path) -> dict:
    """Write the adapted vocabulary and its provenance to ``out_dir``.

    Files: ``vocab.txt`` (one token per line, rank order) with its
    ``vocab.meta.json`` sidecar, ``added_tokens.txt``, ``provenance.json``
    (per-token origin and base segmentation plus the full grid), and
    ``grid.csv``.  Output is byte-identical across runs for equal inputs;
    floats are fixed at six decimal places.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = save_vocabulary(result.adapted_vocab, out, stem="vocab")

    added_path = out / "added_tokens.txt"
    added_path.write_text(
        "".join(t.token + "\n" for t in result.added_tokens), encoding="utf-8"
    )
    paths["added_tokens"] = added_path

    provenance = provenance_payload(result)
    prov_path = out / "provenance.json"
    prov_path.write_text(
        json.dumps(provenance, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    paths["provenance"] = prov_path

    grid_path = out / "grid.csv"
    with grid_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["A", "K", "target_size", "P", "vocab_size", "fragment_score"]
        )
        for cell in result.grid:
            writer.writerow(
                [
                    f"{cell.a:.6f}",
                    cell.k,
                    cell.target_size,
                    cell.pool_take,
                    cell.vocab_size,
                    f"{cell.fragment_score:.6f}",
                ]
            )
    paths["grid"] = grid_path
    return paths
