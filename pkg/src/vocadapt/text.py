"""Shared text normalization and word splitting.

A single word definition feeds every statistic in the package: a word is a
maximal run of Unicode letters and digits (underscore excluded), extracted
after NFC normalization and, for uncased vocabularies, lowercasing.
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from typing import Iterable

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


def normalize_text(text: str, lowercase: bool = True) -> str:
    text = unicodedata.normalize("NFC", text)
    return text.lower() if lowercase else text


def words(text: str) -> list[str]:
    """Split already-normalized text into maximal letter/digit runs."""
    return _WORD_RE.findall(text)


def word_counts(texts: Iterable[str]) -> Counter:
    """Occurrence counts of every word across the given texts."""
    counts: Counter = Counter()
    for text in texts:
        counts.update(words(text))
    return counts
