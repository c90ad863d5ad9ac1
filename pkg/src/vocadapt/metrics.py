"""Summarization overlap metrics with seeded bootstrap aggregation.

All scorers take pre-tokenized word lists (the corpus word definition) and
return (precision, recall, f1) triples.  Parameter conventions follow the
classic evaluation setup: n-grams up to 4, weighted LCS with weight 1.2,
skip-bigrams with unlimited gap plus unigram counts, and 1000 bootstrap
resamples reported as the median with a 95 percent confidence interval.
The longest-common-subsequence score is computed over whole summaries
rather than per sentence, which is the one deliberate simplification; the
emitted parameter block records it.

The concept-aware n-gram score runs in two stages: exact n-gram overlap
first, then candidate n-grams without a surface match are flagged when
they map to a concept found in the reference, each reference concept
being consumable once.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .concepts import ConceptDictionary, extract_concepts

logger = logging.getLogger(__name__)


class Score(NamedTuple):
    precision: float
    recall: float
    f1: float


class Aggregate(NamedTuple):
    median: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class ScorePair:
    """One evaluation item: candidate and reference token lists."""

    id: str
    candidate: tuple[str, ...]
    reference: tuple[str, ...]


@dataclass(frozen=True)
class ScoreReport:
    per_pair: Mapping[str, list]
    aggregate: Mapping[str, Aggregate]
    params: Mapping[str, object]
    seed: int
    empty_reference_ids: tuple[str, ...] = field(default_factory=tuple)


def _f_measure(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _ngrams(tokens: Sequence[str], n: int) -> list[tuple]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def _check_reference(reference: Sequence[str]) -> bool:
    if not reference:
        logger.warning("empty reference: scores defined as zero")
        return False
    return True


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int = 1) -> Score:
    """Clipped n-gram overlap precision/recall/F1."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not _check_reference(reference):
        return Score(0.0, 0.0, 0.0)
    cand = Counter(_ngrams(candidate, n))
    ref = Counter(_ngrams(reference, n))
    total_cand = sum(cand.values())
    total_ref = sum(ref.values())
    if not total_cand or not total_ref:
        return Score(0.0, 0.0, 0.0)
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    precision = overlap / total_cand
    recall = overlap / total_ref
    return Score(precision, recall, _f_measure(precision, recall))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for item in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            if item == other:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[len(b)]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> Score:
    """Longest-common-subsequence score over the whole summaries."""
    if not _check_reference(reference):
        return Score(0.0, 0.0, 0.0)
    if not candidate:
        return Score(0.0, 0.0, 0.0)
    length = _lcs_length(candidate, reference)
    precision = length / len(candidate)
    recall = length / len(reference)
    return Score(precision, recall, _f_measure(precision, recall))


def rouge_w(
    candidate: Sequence[str], reference: Sequence[str], weight: float = 1.2
) -> Score:
    """Weighted LCS favoring consecutive matches, f(k) = k**weight.

    Scores are normalized back through the inverse weighting so identical
    texts reach exactly 1.0; ``weight=1.0`` reduces to the plain LCS score.
    """
    if weight < 1.0:
        raise ValueError("weight must be at least 1.0")
    if not _check_reference(reference):
        return Score(0.0, 0.0, 0.0)
    if not candidate:
        return Score(0.0, 0.0, 0.0)
    m, n = len(reference), len(candidate)
    wlcs = [[0.0] * (n + 1) for _ in range(m + 1)]
    runs = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            if reference[i - 1] == candidate[j - 1]:
                k = runs[i - 1][j - 1]
                wlcs[i][j] = wlcs[i - 1][j - 1] + (k + 1) ** weight - k**weight
                runs[i][j] = k + 1
            else:
                wlcs[i][j] = max(wlcs[i - 1][j], wlcs[i][j - 1])
                runs[i][j] = 0
    score = wlcs[m][n]
    inverse = 1.0 / weight
    recall = (score / m**weight) ** inverse
    precision = (score / n**weight) ** inverse
    return Score(precision, recall, _f_measure(precision, recall))


def rouge_su(
    candidate: Sequence[str], reference: Sequence[str], include_unigram: bool = True
) -> Score:
    """Skip-bigram overlap with unlimited gap, optionally adding unigrams."""
    if not _check_reference(reference):
        return Score(0.0, 0.0, 0.0)

    def units(tokens: Sequence[str]) -> Counter:
        counts: Counter = Counter()
        for i in range(len(tokens)):
            for j in range(i + 1, len(tokens)):
                counts[(tokens[i], tokens[j])] += 1
        if include_unigram:
            for tok in tokens:
                counts[(tok,)] += 1
        return counts

    cand = units(candidate)
    ref = units(reference)
    total_cand = sum(cand.values())
    total_ref = sum(ref.values())
    if not total_cand or not total_ref:
        return Score(0.0, 0.0, 0.0)
    overlap = sum(min(count, ref[unit]) for unit, count in cand.items())
    precision = overlap / total_cand
    recall = overlap / total_ref
    return Score(precision, recall, _f_measure(precision, recall))


def med_rouge(
    candidate: Sequence[str],
    reference: Sequence[str],
    dictionary: ConceptDictionary,
    n: int = 1,
    threshold: float = 0.95,
) -> Score:
    """Concept-aware n-gram overlap (n in {1, 2}).

    Stage one is the clipped surface overlap of :func:`rouge_n`.  Stage two
    walks the candidate n-grams left without a surface match, in order, and
    flags each one whose span maps to a concept present in the reference;
    every reference concept can absorb one flag.  The result dominates the
    plain n-gram score componentwise.
    """
    if n not in (1, 2):
        raise ValueError("concept-aware scoring is defined for n in {1, 2}")
    if not _check_reference(reference):
        return Score(0.0, 0.0, 0.0)
    cand_grams = _ngrams(candidate, n)
    ref_grams = _ngrams(reference, n)
    if not cand_grams or not ref_grams:
        return Score(0.0, 0.0, 0.0)
    ref_counts = Counter(ref_grams)
    used: Counter = Counter()
    surface = 0
    unmatched: list[tuple] = []
    for gram in cand_grams:
        if used[gram] < ref_counts[gram]:
            used[gram] += 1
            surface += 1
        else:
            unmatched.append(gram)

    remaining = set(extract_concepts(list(reference), dictionary, threshold))
    flagged = 0
    for gram in unmatched:
        if not remaining:
            break
        concepts = extract_concepts(list(gram), dictionary, threshold)
        hits = sorted(concepts & remaining)
        if hits:
            remaining.remove(hits[0])
            flagged += 1

    matched = surface + flagged
    precision = min(1.0, matched / len(cand_grams))
    recall = min(1.0, matched / len(ref_grams))
    return Score(precision, recall, _f_measure(precision, recall))


def concept_f1(
    candidate_text: str | Sequence[str],
    reference_text: str | Sequence[str],
    dictionary: ConceptDictionary,
    threshold: float = 0.95,
) -> Score:
    """Set overlap of extracted concept ids.

    Two empty concept sets count as perfect agreement; one empty side
    scores zero.
    """
    cand = extract_concepts(candidate_text, dictionary, threshold)
    ref = extract_concepts(reference_text, dictionary, threshold)
    if not cand and not ref:
        return Score(1.0, 1.0, 1.0)
    if not cand or not ref:
        return Score(0.0, 0.0, 0.0)
    shared = len(cand & ref)
    precision = shared / len(cand)
    recall = shared / len(ref)
    return Score(precision, recall, _f_measure(precision, recall))


def bootstrap_aggregate(
    values: Sequence[float],
    samples: int = 1000,
    confidence: float = 95.0,
    seed: int = 0,
) -> Aggregate:
    """Median and percentile interval of bootstrap resample means.

    Resampling draws ``samples`` index matrices with replacement from a
    generator seeded with ``seed``; a single-value input therefore yields a
    zero-width interval.  The index protocol is fixed: one
    ``integers(0, n, size=(samples, n))`` draw from
    ``numpy.random.default_rng(seed)``.
    """
    if not len(values):
        raise ValueError("cannot aggregate an empty score list")
    if not 0 < confidence < 100:
        raise ValueError("confidence must be in (0, 100)")
    data = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(data), size=(samples, len(data)))
    means = data[idx].mean(axis=1)
    alpha = (100.0 - confidence) / 2.0
    low, high = np.percentile(means, [alpha, 100.0 - alpha])
    return Aggregate(float(np.median(means)), float(low), float(high))


METRIC_PARAMS = {
    "n_max": 4,
    "bootstrap_samples": 1000,
    "confidence": 95.0,
    "lcs_weight": 1.2,
    "skip_gap": "unlimited",
    "include_unigram_in_skip": True,
    "lcs_mode": "whole_summary",
    "stemming": False,
    "stopword_removal": False,
    "concept_threshold": 0.95,
}


def metric_names(with_dictionary: bool) -> list[str]:
    names = [f"rouge-{n}" for n in range(1, METRIC_PARAMS["n_max"] + 1)]
    names += ["rouge-l", "rouge-w", "rouge-su"]
    if with_dictionary:
        names += ["med-rouge-1", "med-rouge-2", "concept-f1"]
    return names


def score_pairs(
    pairs: Sequence[ScorePair],
    seed: int,
    dictionary: ConceptDictionary | None = None,
    samples: int = 1000,
    confidence: float = 95.0,
) -> ScoreReport:
    """Score every pair on the full metric family and bootstrap-aggregate F1.

    Every metric's bootstrap uses the same seed, so the resampling indices
    are shared across metrics and paired comparisons stay aligned.
    """
    if not pairs:
        raise ValueError("no pairs to score")

    def scorers(pair: ScorePair) -> dict:
        cand, ref = pair.candidate, pair.reference
        out = {
            f"rouge-{n}": rouge_n(cand, ref, n)
            for n in range(1, METRIC_PARAMS["n_max"] + 1)
        }
        out["rouge-l"] = rouge_l(cand, ref)
        out["rouge-w"] = rouge_w(cand, ref, METRIC_PARAMS["lcs_weight"])
        out["rouge-su"] = rouge_su(cand, ref)
        if dictionary is not None:
            out["med-rouge-1"] = med_rouge(cand, ref, dictionary, n=1)
            out["med-rouge-2"] = med_rouge(cand, ref, dictionary, n=2)
            out["concept-f1"] = concept_f1(cand, ref, dictionary)
        return out

    names = metric_names(dictionary is not None)
    per_pair: dict[str, list] = {name: [] for name in names}
    empty_refs: list[str] = []
    for pair in pairs:
        if not pair.reference:
            empty_refs.append(pair.id)
        scored = scorers(pair)
        for name in names:
            per_pair[name].append(scored[name])

    aggregate = {
        name: bootstrap_aggregate(
            [s.f1 for s in scores], samples=samples, confidence=confidence, seed=seed
        )
        for name, scores in per_pair.items()
    }
    params = dict(METRIC_PARAMS)
    params["bootstrap_samples"] = samples
    params["confidence"] = confidence
    return ScoreReport(
        per_pair=per_pair,
        aggregate=aggregate,
        params=params,
        seed=seed,
        empty_reference_ids=tuple(empty_refs),
    )


def aggregate_payload(report: ScoreReport) -> dict:
    """The ``aggregate.json`` payload for a score report.

    Floats are rounded to six decimals; the dict serializes identically
    wherever it is emitted.
    """
    return {
        "seed": report.seed,
        "params": report.params,
        "metrics": {
            name: {
                "median": round(agg.median, 6),
                "ci_low": round(agg.ci_low, 6),
                "ci_high": round(agg.ci_high, 6),
            }
            for name, agg in report.aggregate.items()
        },
        "empty_reference_ids": list(report.empty_reference_ids),
    }
