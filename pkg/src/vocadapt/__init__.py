"""Task-aware subword vocabulary adaptation, analytics, and evaluation."""

__version__ = "0.1.0"

from .adaptation import (
    AdaptationConfig,
    AdaptationResult,
    AddedToken,
    GridCell,
    avocado_vocab,
    build_candidate_vocabs,
    candidate_words,
    compare_vocabularies,
    emit_vocabulary,
    fragment_score,
    grid_search,
    provenance_payload,
)
from .concepts import (
    ConceptDictionary,
    ConceptMatch,
    DictionaryFormatError,
    char_ngram_cosine,
    extract_concepts,
    is_medical_word,
    load_dictionary,
    match_spans,
    toy_dictionary_path,
)
from .corpus import (
    Corpus,
    CorpusFormatError,
    Document,
    OovReport,
    clean_training_split,
    decontaminate,
    domain_similarity,
    load_corpus,
    load_frequency_table,
    oov_stats,
    write_corpus,
    write_frequency_table,
)
from .metrics import (
    Aggregate,
    Score,
    ScorePair,
    ScoreReport,
    aggregate_payload,
    bootstrap_aggregate,
    concept_f1,
    med_rouge,
    metric_names,
    rouge_l,
    rouge_n,
    rouge_su,
    rouge_w,
    score_pairs,
)
from .text import normalize_text, word_counts, words
from .tokenizers import (
    Tokenization,
    UnrepresentableCharacterError,
    Vocabulary,
    detokenize,
    load_vocabulary,
    longest_match_segment,
    minimal_piece_count,
    save_vocabulary,
    tokenize_word,
)
from .trainer import train_subword_vocab

__all__ = [
    "__version__",
    "AdaptationConfig",
    "AdaptationResult",
    "AddedToken",
    "Aggregate",
    "ConceptDictionary",
    "ConceptMatch",
    "Corpus",
    "CorpusFormatError",
    "DictionaryFormatError",
    "Document",
    "GridCell",
    "OovReport",
    "Score",
    "ScorePair",
    "ScoreReport",
    "Tokenization",
    "UnrepresentableCharacterError",
    "Vocabulary",
    "aggregate_payload",
    "avocado_vocab",
    "bootstrap_aggregate",
    "build_candidate_vocabs",
    "candidate_words",
    "char_ngram_cosine",
    "clean_training_split",
    "compare_vocabularies",
    "concept_f1",
    "decontaminate",
    "detokenize",
    "domain_similarity",
    "emit_vocabulary",
    "extract_concepts",
    "fragment_score",
    "grid_search",
    "is_medical_word",
    "load_corpus",
    "load_dictionary",
    "load_frequency_table",
    "load_vocabulary",
    "longest_match_segment",
    "match_spans",
    "med_rouge",
    "metric_names",
    "minimal_piece_count",
    "normalize_text",
    "oov_stats",
    "provenance_payload",
    "rouge_l",
    "rouge_n",
    "rouge_su",
    "rouge_w",
    "save_vocabulary",
    "score_pairs",
    "tokenize_word",
    "toy_dictionary_path",
    "train_subword_vocab",
    "word_counts",
    "words",
    "write_corpus",
    "write_frequency_table",
]
