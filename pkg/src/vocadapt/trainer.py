"""Pair-merge subword vocabulary trainer.

One trainer drives all three families; only the surface conventions
differ.  Words are split into per-character symbols (continuation-marked
after the first character for wordpiece, optionally led by a boundary
marker for bpe/unigram), then the most frequent adjacent symbol pair is
merged repeatedly until the requested size is reached or no pairs remain.
Ties on pair frequency break lexicographically, so training is
deterministic for identical inputs regardless of mapping order.

The unigram family reuses the same merge procedure and afterwards assigns
each token an add-one-smoothed log frequency over the final segmentation
of the training words, which is what its Viterbi segmenter consumes.
"""

from __future__ import annotations

import heapq
import math
from collections import Counter, defaultdict
from typing import Mapping

from .tokenizers import DEFAULT_CONTINUATION, FAMILIES, Vocabulary


def _symbolize(word: str, family: str, cont: str, boundary: str) -> list[str]:
    if family == "wordpiece":
        return [word[0]] + [cont + c for c in word[1:]]
    prefix = [boundary] if boundary else []
    return prefix + list(word)


def _merge_surface(left: str, right: str, cont: str) -> str:
    if cont and right.startswith(cont):
        return left + right[len(cont):]
    return left + right


def _replace_pair(seq: list[str], left: str, right: str, merged: str) -> list[str]:
    out: list[str] = []
    i = 0
    n = len(seq)
    while i < n:
        if i + 1 < n and seq[i] == left and seq[i + 1] == right:
            out.append(merged)
            i += 2
        else:
            out.append(seq[i])
            i += 1
    return out


def train_subword_vocab(
    word_freqs: Mapping[str, int],
    target_size: int | None,
    family: str,
    continuation_marker: str | None = None,
    boundary_marker: str = "",
) -> Vocabulary:
    """Learn a subword vocabulary of ``target_size`` tokens from word counts.

    The alphabet (all observed symbols, sorted) comes first, then merge
    products in learning order; token rank is therefore learning order.
    ``target_size=None`` runs until no adjacent pair remains.  When the
    training words exhaust their merges early the vocabulary is returned
    at its achievable size, which is how production trainers behave.

    Raises ``ValueError`` for an empty corpus, non-positive counts, or a
    target below the alphabet size (the message states the minimum).
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    cont = DEFAULT_CONTINUATION[family] if continuation_marker is None else continuation_marker
    if not word_freqs:
        raise ValueError("cannot train a vocabulary from an empty word-frequency map")

    seqs: list[list[str]] = []
    freqs: list[int] = []
    for word in sorted(word_freqs):
        count = word_freqs[word]
        if not word:
            raise ValueError("empty word in training frequencies")
        if count <= 0:
            raise ValueError(f"non-positive count {count} for word {word!r}")
        seqs.append(_symbolize(word, family, cont, boundary_marker))
        freqs.append(count)

    alphabet = sorted({sym for seq in seqs for sym in seq})
    if target_size is not None and target_size < len(alphabet):
        raise ValueError(
            f"target_size {target_size} is below the alphabet size; "
            f"minimum feasible size is {len(alphabet)}"
        )

    tokens = list(alphabet)
    token_set = set(tokens)
    merges: list[tuple[str, str]] = []

    pair_counts: Counter = Counter()
    pair_words: defaultdict = defaultdict(set)
    for idx, (seq, freq) in enumerate(zip(seqs, freqs)):
        for pair in zip(seq, seq[1:]):
            pair_counts[pair] += freq
            pair_words[pair].add(idx)
    heap = [(-count, pair) for pair, count in pair_counts.items()]
    heapq.heapify(heap)

    while heap and (target_size is None or len(tokens) < target_size):
        neg_count, pair = heapq.heappop(heap)
        live = pair_counts.get(pair, 0)
        if live <= 0:
            continue
        if -neg_count != live:
            heapq.heappush(heap, (-live, pair))
            continue

        left, right = pair
        merged = _merge_surface(left, right, cont)
        merges.append(pair)
        if merged not in token_set:
            tokens.append(merged)
            token_set.add(merged)

        touched: set = set()
        for idx in sorted(pair_words.pop(pair, ())):
            seq = seqs[idx]
            new_seq = _replace_pair(seq, left, right, merged)
            if len(new_seq) == len(seq):
                continue
            freq = freqs[idx]
            old_pairs = Counter(zip(seq, seq[1:]))
            new_pairs = Counter(zip(new_seq, new_seq[1:]))
            for pr in old_pairs.keys() | new_pairs.keys():
                delta = new_pairs.get(pr, 0) - old_pairs.get(pr, 0)
                if delta:
                    pair_counts[pr] += delta * freq
                    touched.add(pr)
                if new_pairs.get(pr):
                    pair_words[pr].add(idx)
            seqs[idx] = new_seq
        pair_counts.pop(pair, None)
        for pr in touched:
            count = pair_counts.get(pr, 0)
            if count > 0:
                heapq.heappush(heap, (-count, pr))

    scores = None
    if family == "unigram":
        occurrence: Counter = Counter()
        for seq, freq in zip(seqs, freqs):
            for sym in seq:
                occurrence[sym] += freq
        total = sum(occurrence.values()) + len(tokens)
        scores = {
            tok: math.log((occurrence.get(tok, 0) + 1) / total) for tok in tokens
        }

    return Vocabulary(
        tokens=tuple(tokens),
        family=family,
        continuation_marker=cont,
        boundary_marker=boundary_marker,
        merges=tuple(merges) if family == "bpe" else None,
        scores=scores,
    )
