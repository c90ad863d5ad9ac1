"""Subword vocabularies and the three tokenizer families.

A :class:`Vocabulary` is an ordered token inventory (line order is rank)
plus the surface conventions of its family:

* ``wordpiece``: continuation pieces carry a marker prefix (``##`` by
  default); the word-initial piece is bare.
* ``bpe``: pieces are produced by replaying an ordered merge list over the
  word's characters; an optional word-initial boundary marker may be
  prepended.
* ``unigram``: tokens carry log-probability scores; words are segmented by
  a Viterbi search for the highest-scoring piece sequence.

Two family-agnostic segmenters over bare token sets also live here.
:func:`longest_match_segment` is greedy maximal-prefix matching: it is
exactly the wordpiece algorithm and is what drives whole-token pre-matching
for vocabularies extended with added tokens.  Greedy matching is not
piece-minimal, and adding a token can occasionally *increase* its piece
count, so every statistic that must respond monotonically to vocabulary
growth (fragment scoring in particular) instead counts pieces with
:func:`minimal_piece_count`, the fewest-pieces segmentation of the same
token set under the same marker conventions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

FAMILIES = ("wordpiece", "bpe", "unigram")

DEFAULT_CONTINUATION = {"wordpiece": "##", "bpe": "", "unigram": ""}

_EMPTY: frozenset = frozenset()


class UnrepresentableCharacterError(ValueError):
    """A word contains a character with no fallback entry in the vocabulary."""

    def __init__(self, char: str, position: int, word: str):
        self.char = char
        self.position = position
        self.word = word
        super().__init__(
            f"character {char!r} at position {position} of word {word!r} "
            "has no vocabulary entry"
        )


@dataclass(frozen=True)
class Tokenization:
    """One word segmented into marked pieces."""

    word: str
    pieces: tuple[str, ...]

    @property
    def piece_count(self) -> int:
        return len(self.pieces)


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token inventory with family surface conventions.

    ``tokens`` is rank order: position in the tuple is the token's rank.
    ``merges`` is only meaningful for the bpe family, ``scores`` for the
    unigram family.  ``added_tokens`` marks whole-token entries appended to
    a base inventory; a vocabulary carrying added tokens is segmented by
    greedy longest match over the full token set regardless of family.
    """

    tokens: tuple[str, ...]
    family: str
    continuation_marker: str = ""
    boundary_marker: str = ""
    merges: tuple[tuple[str, str], ...] | None = None
    scores: Mapping[str, float] | None = None
    added_tokens: frozenset = _EMPTY
    token_set: frozenset = field(init=False, repr=False, compare=False)
    rank: Mapping[str, int] = field(init=False, repr=False, compare=False)
    max_token_len: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        tokens = tuple(self.tokens)
        object.__setattr__(self, "tokens", tokens)
        token_set = frozenset(tokens)
        if len(token_set) != len(tokens):
            raise ValueError("duplicate tokens in vocabulary")
        if any(not t for t in tokens):
            raise ValueError("empty string is not a valid token")
        if self.merges is not None:
            for left, right in self.merges:
                if left + right not in token_set:
                    raise ValueError(
                        f"merge result {left + right!r} missing from tokens"
                    )
        added = frozenset(self.added_tokens)
        if not added <= token_set:
            raise ValueError("added_tokens must be a subset of tokens")
        object.__setattr__(self, "added_tokens", added)
        object.__setattr__(self, "token_set", token_set)
        object.__setattr__(self, "rank", {t: i for i, t in enumerate(tokens)})
        object.__setattr__(
            self, "max_token_len", max((len(t) for t in tokens), default=0)
        )

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.token_set

    @classmethod
    def build(
        cls,
        tokens: Iterable[str],
        family: str,
        continuation_marker: str | None = None,
        boundary_marker: str = "",
        **kwargs,
    ) -> "Vocabulary":
        """Construct a vocabulary, appending any missing character fallbacks.

        Every character of every (marker-stripped) token gets a single-char
        entry, in the positional forms the family needs, so segmentation of
        words over the inventory's alphabet never fails.  Fallback entries
        are appended after the given tokens in sorted order.
        """
        if continuation_marker is None:
            continuation_marker = DEFAULT_CONTINUATION[family]
        given = list(dict.fromkeys(tokens))
        have = set(given)
        cont, bound = continuation_marker, boundary_marker
        chars: set = set()
        for tok in given:
            stripped = tok
            if cont and stripped.startswith(cont) and len(stripped) > len(cont):
                stripped = stripped[len(cont):]
            if bound and stripped.startswith(bound) and len(stripped) > len(bound):
                stripped = stripped[len(bound):]
            chars.update(stripped)
        extras = []
        for c in sorted(chars):
            if c not in have:
                extras.append(c)
                have.add(c)
            if cont and cont + c not in have:
                extras.append(cont + c)
                have.add(cont + c)
        if bound and bound not in have:
            extras.append(bound)
            have.add(bound)
        return cls(
            tokens=tuple(given + extras),
            family=family,
            continuation_marker=cont,
            boundary_marker=bound,
            **kwargs,
        )

    def detokenize(self, pieces: Sequence[str]) -> str:
        return detokenize(
            pieces,
            self.family,
            continuation_marker=self.continuation_marker,
            boundary_marker=self.boundary_marker,
        )


def _greedy_pieces(
    word: str,
    primary: frozenset | set,
    secondary: frozenset | set,
    cont: str,
    boundary: str,
    max_len: int,
    start_continuation: bool = False,
) -> list[str]:
    """Greedy maximal-prefix pieces of ``word`` over the union of two sets.

    The continuation marker is an emission annotation: at a non-initial
    position a substring matches if either its marked or its bare form is
    an entry, and the emitted piece always carries the marker.  Bare-form
    matching keeps a plain token set (an extension inventory, say) usable
    at any position, while marked-form matching honours inventories whose
    continuation pieces exist only in marked form.
    """
    if not word:
        raise ValueError("cannot segment an empty word")
    eff = boundary + word if boundary else word
    n = len(eff)
    pieces: list[str] = []
    pos = 0
    while pos < n:
        limit = min(n - pos, max_len) if max_len else n - pos
        use_cont = bool(cont) and (start_continuation or bool(pieces))
        match = None
        step = 0
        for length in range(limit, 0, -1):
            sub = eff[pos : pos + length]
            if use_cont:
                marked = cont + sub
                if (
                    marked in primary or marked in secondary
                    or sub in primary or sub in secondary
                ):
                    match, step = marked, length
                    break
            elif sub in primary or sub in secondary:
                match, step = sub, length
                break
        if match is None:
            offset = max(pos - len(boundary), 0)
            raise UnrepresentableCharacterError(eff[pos], offset, word)
        pieces.append(match)
        pos += step
    return pieces


def _min_piece_count(
    word: str,
    primary: frozenset | set,
    secondary: frozenset | set,
    cont: str,
    boundary: str,
    max_len: int,
) -> int:
    """Fewest-pieces segmentation count of ``word`` over the union of two sets."""
    if not word:
        raise ValueError("cannot segment an empty word")
    eff = boundary + word if boundary else word
    n = len(eff)
    inf = n + 1
    dp = [inf] * (n + 1)
    dp[0] = 0
    cap = max_len if max_len else n
    for i in range(1, n + 1):
        best = inf
        lo = max(0, i - cap)
        for j in range(lo, i):
            prev = dp[j]
            if prev + 1 >= best:
                continue
            sub = eff[j:i]
            if cont and j > 0:
                marked = cont + sub
                hit = (
                    marked in primary or marked in secondary
                    or sub in primary or sub in secondary
                )
            else:
                hit = sub in primary or sub in secondary
            if hit:
                best = prev + 1
        dp[i] = best
    if dp[n] >= inf:
        reachable = max(i for i in range(n + 1) if dp[i] < inf)
        offset = max(reachable - len(boundary), 0)
        raise UnrepresentableCharacterError(eff[min(reachable, n - 1)], offset, word)
    return dp[n]


def longest_match_segment(
    word: str,
    token_set: Iterable[str],
    continuation_marker: str = "",
    boundary_marker: str = "",
) -> Tokenization:
    """Greedy maximal-prefix segmentation over a bare token set.

    At each position the longest prefix present in ``token_set`` is
    consumed; after the first piece, a prefix matches in its marked or
    bare form and is emitted marked when a marker is given.  Greedy
    matching is deliberately not piece-minimal: see
    :func:`minimal_piece_count` for the monotone counter used by fragment
    scoring.
    """
    tokens = token_set if isinstance(token_set, (set, frozenset)) else frozenset(token_set)
    max_len = max((len(t) for t in tokens), default=0)
    pieces = _greedy_pieces(
        word, tokens, _EMPTY, continuation_marker, boundary_marker, max_len
    )
    return Tokenization(word=word, pieces=tuple(pieces))


def minimal_piece_count(
    word: str,
    token_set: Iterable[str],
    continuation_marker: str = "",
    boundary_marker: str = "",
) -> int:
    """Fewest pieces needed to cover ``word`` with entries of ``token_set``.

    Unlike greedy matching this count is superset-monotone: growing the
    token set can never increase it, because any segmentation under the
    smaller set remains valid under the larger one.
    """
    tokens = token_set if isinstance(token_set, (set, frozenset)) else frozenset(token_set)
    max_len = max((len(t) for t in tokens), default=0)
    return _min_piece_count(
        word, tokens, _EMPTY, continuation_marker, boundary_marker, max_len
    )


def _merge_once(symbols: list[str], left: str, right: str, merged: str) -> list[str]:
    out: list[str] = []
    i = 0
    n = len(symbols)
    while i < n:
        if i + 1 < n and symbols[i] == left and symbols[i + 1] == right:
            out.append(merged)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def _bpe_pieces(word: str, vocab: Vocabulary) -> list[str]:
    symbols = ([vocab.boundary_marker] if vocab.boundary_marker else []) + list(word)
    shift = 1 if vocab.boundary_marker else 0
    for i, sym in enumerate(symbols):
        if sym not in vocab.token_set:
            raise UnrepresentableCharacterError(sym, max(i - shift, 0), word)
    for left, right in vocab.merges or ():
        if len(symbols) == 1:
            break
        symbols = _merge_once(symbols, left, right, left + right)
    return symbols


def _viterbi_pieces(word: str, vocab: Vocabulary) -> list[str]:
    scores = vocab.scores
    if scores is None:
        raise ValueError("unigram segmentation requires token scores")
    eff = (vocab.boundary_marker + word) if vocab.boundary_marker else word
    n = len(eff)
    max_len = vocab.max_token_len or n
    # best[i]: (total score, piece count, backpointer j) for eff[:i];
    # ascending j with strict improvement prefers the longest trailing piece
    best: list[tuple[float, int, int] | None] = [None] * (n + 1)
    best[0] = (0.0, 0, -1)
    for i in range(1, n + 1):
        lo = max(0, i - max_len)
        for j in range(lo, i):
            prev = best[j]
            if prev is None:
                continue
            sc = scores.get(eff[j:i])
            if sc is None:
                continue
            cand = (prev[0] + sc, prev[1] + 1)
            cur = best[i]
            if cur is None or (cand[0], -cand[1]) > (cur[0], -cur[1]):
                best[i] = (cand[0], cand[1], j)
    if best[n] is None:
        reachable = max(i for i in range(n + 1) if best[i] is not None)
        shift = len(vocab.boundary_marker)
        raise UnrepresentableCharacterError(
            eff[min(reachable, n - 1)], max(reachable - shift, 0), word
        )
    pieces: list[str] = []
    i = n
    while i > 0:
        j = best[i][2]
        pieces.append(eff[j:i])
        i = j
    pieces.reverse()
    return pieces


def tokenize_word(word: str, vocab: Vocabulary) -> Tokenization:
    """Segment one normalized, non-empty word with the vocabulary's family.

    Vocabularies carrying added tokens are segmented by greedy longest
    match over the full token set so that added whole-token entries win
    before the base algorithm would split them.
    """
    if not word:
        raise ValueError("cannot tokenize an empty word")
    if vocab.added_tokens or vocab.family == "wordpiece":
        pieces = _greedy_pieces(
            word,
            vocab.token_set,
            _EMPTY,
            vocab.continuation_marker,
            vocab.boundary_marker,
            vocab.max_token_len,
        )
    elif vocab.family == "bpe":
        pieces = _bpe_pieces(word, vocab)
    else:
        pieces = _viterbi_pieces(word, vocab)
    return Tokenization(word=word, pieces=tuple(pieces))


def detokenize(
    pieces: Sequence[str],
    family: str = "wordpiece",
    continuation_marker: str | None = None,
    boundary_marker: str = "",
) -> str:
    """Concatenate pieces back into the word, stripping surface markers.

    Raises ``ValueError`` on an empty piece list or a marker in an illegal
    position (continuation marker on the first piece, boundary marker or a
    missing continuation marker on a later one).
    """
    if not pieces:
        raise ValueError("cannot detokenize an empty piece list")
    cont = (
        continuation_marker
        if continuation_marker is not None
        else DEFAULT_CONTINUATION.get(family, "")
    )
    first = pieces[0]
    if cont and first.startswith(cont):
        raise ValueError(f"continuation marker on word-initial piece {first!r}")
    if boundary_marker and first.startswith(boundary_marker):
        first = first[len(boundary_marker):]
    parts = [first]
    for piece in pieces[1:]:
        if boundary_marker and piece.startswith(boundary_marker):
            raise ValueError(f"boundary marker on non-initial piece {piece!r}")
        if cont:
            if not piece.startswith(cont):
                raise ValueError(f"missing continuation marker on piece {piece!r}")
            piece = piece[len(cont):]
        parts.append(piece)
    word = "".join(parts)
    if not word:
        raise ValueError("pieces concatenate to an empty word")
    return word


def save_vocabulary(vocab: Vocabulary, directory: str | Path, stem: str = "vocab") -> dict:
    """Write a vocabulary to ``directory`` as flat, diff-friendly files.

    ``<stem>.txt`` holds one token per line (line number = rank),
    ``<stem>.meta.json`` the family, markers, added tokens, and unigram
    scores, ``<stem>.merges.txt`` the ordered merge list for bpe.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {"tokens": directory / f"{stem}.txt", "meta": directory / f"{stem}.meta.json"}
    paths["tokens"].write_text(
        "".join(t + "\n" for t in vocab.tokens), encoding="utf-8"
    )
    meta = {
        "family": vocab.family,
        "continuation_marker": vocab.continuation_marker,
        "boundary_marker": vocab.boundary_marker,
        "added_tokens": sorted(vocab.added_tokens),
    }
    if vocab.scores is not None:
        meta["scores"] = {t: round(s, 12) for t, s in sorted(vocab.scores.items())}
    paths["meta"].write_text(
        json.dumps(meta, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    if vocab.merges is not None:
        paths["merges"] = directory / f"{stem}.merges.txt"
        paths["merges"].write_text(
            "".join(f"{left} {right}\n" for left, right in vocab.merges),
            encoding="utf-8",
        )
    return paths


def load_vocabulary(directory: str | Path, stem: str = "vocab") -> Vocabulary:
    """Load a vocabulary previously written by :func:`save_vocabulary`."""
    directory = Path(directory)
    tokens_path = directory / f"{stem}.txt"
    meta_path = directory / f"{stem}.meta.json"
    if not tokens_path.is_file():
        raise FileNotFoundError(f"no vocabulary file at {tokens_path}")
    tokens = tuple(
        line for line in tokens_path.read_text(encoding="utf-8").splitlines() if line
    )
    meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.is_file() else {}
    family = meta.get("family", "wordpiece")
    merges = None
    merges_path = directory / f"{stem}.merges.txt"
    if merges_path.is_file():
        pairs = []
        for lineno, line in enumerate(
            merges_path.read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise ValueError(f"{merges_path}:{lineno}: expected 'left right'")
            pairs.append((parts[0], parts[1]))
        merges = tuple(pairs)
    scores = meta.get("scores")
    return Vocabulary(
        tokens=tokens,
        family=family,
        continuation_marker=meta.get(
            "continuation_marker", DEFAULT_CONTINUATION.get(family, "")
        ),
        boundary_marker=meta.get("boundary_marker", ""),
        merges=merges,
        scores=dict(scores) if scores else None,
        added_tokens=frozenset(meta.get("added_tokens", ())),
    )
