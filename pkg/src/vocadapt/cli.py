"""Command-line interface.

Subcommands: analyze, adapt, evaluate, prepare, compare, train-vocab.
Every run is deterministic given (inputs, flags, seed) and writes exactly
one ``manifest.json`` into its output directory recording the command, the
effective configuration, input digests, the seed, the tool version, and
wall time.  Exit codes: 0 success, 1 internal invariant violation, 2
usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .adaptation import (
    AdaptationConfig,
    build_candidate_vocabs,
    candidate_words,
    compare_vocabularies,
    emit_vocabulary,
    grid_search,
)
from .concepts import DictionaryFormatError, load_dictionary
from .corpus import (
    CorpusFormatError,
    clean_training_split,
    decontaminate,
    domain_similarity,
    load_corpus,
    oov_stats,
    write_corpus,
    write_frequency_table,
)
from .metrics import ScorePair, aggregate_payload, score_pairs
from .text import normalize_text, words
from .tokenizers import load_vocabulary, save_vocabulary
from .trainer import train_subword_vocab

logger = logging.getLogger(__name__)


class UsageError(Exception):
    pass


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def _round6(value: float) -> float:
    return round(value + 0.0, 6)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    config_path = Path(path)
    if not config_path.is_file():
        raise UsageError(f"no config file at {config_path}")
    try:
        config = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{config_path}: malformed JSON ({exc.msg})")
    if not isinstance(config, dict):
        raise UsageError(f"{config_path}: config must be a JSON object")
    return config


class Run:
    """Resolves flag/config/default precedence and writes the manifest."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = _load_config(args.config)
        self.effective: dict = {}
        self.inputs: dict = {}
        self.started = time.monotonic()

    def opt(self, name: str, default=None):
        value = getattr(self.args, name, None)
        if value is None:
            value = self.config.get(name, default)
        self.effective[name] = value
        return value

    def track(self, path: str | Path) -> Path:
        path = Path(path)
        if not path.is_file():
            raise UsageError(f"no input file at {path}")
        self.inputs[str(path)] = _sha256(path)
        return path

    def out_dir(self) -> Path:
        out = self.opt("out")
        if not out:
            raise UsageError("--out is required")
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        return out

    def finish(self, command: str, out: Path) -> None:
        manifest = {
            "command": command,
            "config": self.effective,
            "inputs": self.inputs,
            "seed": self.effective.get("seed"),
            "version": __version__,
            "wall_time_s": round(time.monotonic() - self.started, 3),
        }
        _write_json(out / "manifest.json", manifest)


def _load_vocab_arg(run: Run, name: str):
    value = run.opt(name)
    if not value:
        raise UsageError(f"--{name.replace('_', '-')} is required")
    path = Path(value)
    if path.is_dir():
        directory, stem = path, "vocab"
    else:
        directory, stem = path.parent, path.name.removesuffix(".txt")
    vocab = load_vocabulary(directory, stem)
    run.track(directory / f"{stem}.txt")
    meta = directory / f"{stem}.meta.json"
    if meta.is_file():
        run.track(meta)
    return vocab


def _load_corpus_arg(run: Run, name: str, required: bool = True):
    value = run.opt(name)
    if not value:
        if required:
            raise UsageError(f"--{name.replace('_', '-')} is required")
        return None
    path = run.track(value)
    return load_corpus(
        path,
        field_source=run.opt("field_source", "source"),
        field_summary=run.opt("field_summary", "summary"),
        field_id=run.opt("field_id", "id"),
        lowercase=not run.opt("cased", False),
    )


def _load_dict_arg(run: Run, required: bool = False):
    value = run.opt("dict")
    if not value:
        if required:
            raise UsageError("--dict is required")
        return None
    return load_dictionary(run.track(value))


def _parse_grid(text: str, cast):
    try:
        values = tuple(cast(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise UsageError(f"malformed grid {text!r}: expected comma-separated numbers")
    if not values:
        raise UsageError(f"malformed grid {text!r}: no values")
    return values


def cmd_analyze(run: Run) -> int:
    corpus = _load_corpus_arg(run, "corpus")
    vocab = _load_vocab_arg(run, "vocab")
    side = run.opt("side", "summary")
    distinct = not run.opt("occurrences", False)
    out = run.out_dir()

    report = oov_stats(corpus, vocab, side=side, distinct=distinct)
    payload = {
        "corpus": corpus.name,
        "side": report.side,
        "distinct": report.distinct,
        "median_oov_pct": _round6(report.median_oov_pct),
        "per_doc_oov_fraction": [_round6(f) for f in report.per_doc_oov_fraction],
        "documents": len(corpus),
    }

    other = _load_corpus_arg(run, "other", required=False)
    if other is not None:
        top_n = int(run.opt("top_n", 10000))
        freq_a = getattr(corpus, f"word_freq_{side}")
        freq_b = getattr(other, f"word_freq_{side}")
        payload["domain_similarity"] = {
            "other": other.name,
            "value": _round6(domain_similarity(freq_a, freq_b, top_n)),
            "top_n": top_n,
            "effective_n": min(top_n, len(freq_a), len(freq_b)),
        }

    _write_json(out / "oov_report.json", payload)
    with (out / "split_histogram.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["piece_count", "words"])
        for pieces, count in report.split_histogram.items():
            writer.writerow([pieces, count])
    (out / "words_split_ge4.tsv").write_text(
        "".join(f"{w}\t{c}\n" for w, c in report.words_split_ge4), encoding="utf-8"
    )
    write_frequency_table(
        getattr(corpus, f"word_freq_{side}"), out / f"word_freq_{side}.tsv"
    )
    run.finish("analyze", out)
    logger.info("analyze: median OOV %.2f%% over %d documents", report.median_oov_pct, len(corpus))
    return 0


def cmd_adapt(run: Run) -> int:
    target = _load_corpus_arg(run, "target")
    pool = _load_corpus_arg(run, "pool")
    base_vocab = _load_vocab_arg(run, "vocab")
    dictionary = _load_dict_arg(run)
    out = run.out_dir()

    placeholder = AdaptationConfig(
        a_grid=(1.0,),
        k_grid=(1,),
        margin=float(run.opt("margin", 0.04)),
        pool_vocab_size=(
            int(run.opt("pool_vocab_size")) if run.opt("pool_vocab_size") else None
        ),
        split_threshold=int(run.opt("split_threshold", 3)),
        concept_threshold=float(run.opt("concept_threshold", 0.95)),
    )
    candidates = candidate_words(target, base_vocab, dictionary, placeholder)
    target_vocab, pool_vocab = build_candidate_vocabs(
        candidates, pool, base_vocab, placeholder
    )

    a_grid = run.opt("a_grid")
    k_grid = run.opt("k_grid")
    if a_grid or k_grid:
        if not (a_grid and k_grid):
            raise UsageError("--a-grid and --k-grid must be given together")
        cfg = dataclasses.replace(
            placeholder,
            a_grid=_parse_grid(str(a_grid), float),
            k_grid=_parse_grid(str(k_grid), int),
        )
    else:
        defaults = AdaptationConfig.default_grids(
            len(base_vocab), len(pool_vocab.tokens)
        )
        cfg = dataclasses.replace(
            placeholder, a_grid=defaults.a_grid, k_grid=defaults.k_grid
        )

    result = grid_search(
        target, target_vocab, pool_vocab, base_vocab, cfg,
        jobs=int(run.opt("jobs", 1)),
    )
    emit_vocabulary(result, out)
    run.finish("adapt", out)
    logger.info(
        "adapt: chose A=%.2f K=%d (%d added tokens, fragment score %.4f)",
        result.chosen.a, result.chosen.k,
        len(result.added_tokens), result.chosen.fragment_score,
    )
    return 0


def cmd_evaluate(run: Run) -> int:
    seed = run.opt("seed")
    if seed is None:
        raise UsageError("--seed is required for evaluate")
    seed = int(seed)
    pairs_path = run.track(run.opt("pairs") or _missing("--pairs"))
    dictionary = _load_dict_arg(run)
    lowercase = not run.opt("cased", False)
    samples = int(run.opt("samples", 1000))
    confidence = float(run.opt("confidence", 95.0))
    out = run.out_dir()

    pairs = []
    with Path(pairs_path).open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{pairs_path}:{lineno}: malformed JSON ({exc.msg})")
            for field in ("id", "candidate", "reference"):
                if field not in record:
                    raise CorpusFormatError(f"{pairs_path}:{lineno}: missing field {field!r}")
            pairs.append(
                ScorePair(
                    id=str(record["id"]),
                    candidate=tuple(words(normalize_text(str(record["candidate"]), lowercase))),
                    reference=tuple(words(normalize_text(str(record["reference"]), lowercase))),
                )
            )
    if not pairs:
        raise CorpusFormatError(f"{pairs_path}: no pairs")

    report = score_pairs(
        pairs, seed=seed, dictionary=dictionary, samples=samples, confidence=confidence
    )

    with (out / "per_pair.csv").open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "metric", "precision", "recall", "f1"])
        for metric, scores in report.per_pair.items():
            for pair, score in zip(pairs, scores):
                writer.writerow(
                    [pair.id, metric]
                    + [f"{v:.6f}" for v in (score.precision, score.recall, score.f1)]
                )
    _write_json(out / "aggregate.json", aggregate_payload(report))
    run.finish("evaluate", out)
    logger.info("evaluate: %d pairs, %d metrics", len(pairs), len(report.aggregate))
    return 0


def _missing(flag: str):
    raise UsageError(f"{flag} is required")


def cmd_prepare(run: Run) -> int:
    pool = _load_corpus_arg(run, "pool")
    dictionary = _load_dict_arg(run, required=True)
    down_paths = run.opt("downstream") or []
    if not down_paths:
        raise UsageError("at least one --downstream corpus is required")
    out = run.out_dir()

    downstream = []
    for path in down_paths:
        downstream.append(
            load_corpus(
                run.track(path),
                field_source=run.opt("field_source", "source"),
                field_summary=run.opt("field_summary", "summary"),
                field_id=run.opt("field_id", "id"),
                lowercase=not run.opt("cased", False),
            )
        )

    cleaned_pool, log = decontaminate(
        pool,
        downstream,
        shingle_size=int(run.opt("shingle_size", 8)),
        jaccard_threshold=float(run.opt("jaccard_threshold", 0.8)),
    )
    write_corpus(cleaned_pool, out / "pool.cleaned.jsonl")
    with (out / "removal_log.jsonl").open("w", encoding="utf-8") as handle:
        for record in log:
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")

    counts_payload = {
        "pool": {
            "before": len(pool),
            "after": len(cleaned_pool),
            "removed": len(log),
        }
    }
    for corpus in downstream:
        cleaned, counts = clean_training_split(
            corpus, dictionary, threshold=float(run.opt("concept_threshold", 0.95))
        )
        write_corpus(cleaned, out / f"{corpus.name}.cleaned.jsonl")
        counts_payload[corpus.name] = {
            "before": len(corpus),
            "after": len(cleaned),
            **counts,
        }
    _write_json(out / "cleaning_counts.json", counts_payload)
    run.finish("prepare", out)
    logger.info("prepare: pool %d -> %d documents", len(pool), len(cleaned_pool))
    return 0


def cmd_compare(run: Run) -> int:
    seed = run.opt("seed")
    if seed is None:
        raise UsageError("--seed is required for compare")
    vocab_a = _load_vocab_arg(run, "vocab_a")
    vocab_b = _load_vocab_arg(run, "vocab_b")
    target = _load_corpus_arg(run, "target")
    out = run.out_dir()

    report = compare_vocabularies(vocab_a, vocab_b, target, seed=int(seed))

    def rounded(node):
        if isinstance(node, float):
            return _round6(node)
        if isinstance(node, dict):
            return {key: rounded(value) for key, value in node.items()}
        return node

    _write_json(out / "comparison.json", rounded(report))
    run.finish("compare", out)
    return 0


def cmd_train_vocab(run: Run) -> int:
    corpus = _load_corpus_arg(run, "corpus")
    side = run.opt("side", "source")
    family = run.opt("family", "wordpiece")
    size = run.opt("size")
    if size is None:
        raise UsageError("--size is required")
    out = run.out_dir()
    freq = getattr(corpus, f"word_freq_{side}")
    vocab = train_subword_vocab(
        freq,
        int(size),
        family,
        boundary_marker=run.opt("boundary_marker", ""),
    )
    save_vocabulary(vocab, out, stem="vocab")
    run.finish("train-vocab", out)
    logger.info("train-vocab: %d tokens (%s)", len(vocab), family)
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config mirroring the flags")
    parser.add_argument("--seed", type=int, default=None, help="random seed")
    parser.add_argument("--jobs", type=int, default=None, help="worker count")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--field-source", dest="field_source")
    parser.add_argument("--field-summary", dest="field_summary")
    parser.add_argument("--field-id", dest="field_id")
    parser.add_argument(
        "--cased", action="store_true", default=None,
        help="keep case (default lowercases)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vocadapt",
        description="Task-aware subword vocabulary adaptation and evaluation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("analyze", help="fragmentation and similarity statistics")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--vocab")
    p.add_argument("--side", choices=("source", "summary"))
    p.add_argument("--occurrences", action="store_true", default=None,
                   help="weight by occurrences instead of distinct words")
    p.add_argument("--other", help="second corpus for domain similarity")
    p.add_argument("--top-n", dest="top_n", type=int)
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("adapt", help="grid-search a vocabulary extension")
    _add_common(p)
    p.add_argument("--target")
    p.add_argument("--pool")
    p.add_argument("--vocab")
    p.add_argument("--dict")
    p.add_argument("--a-grid", dest="a_grid", help="comma-separated size factors")
    p.add_argument("--k-grid", dest="k_grid", help="comma-separated rank cutoffs")
    p.add_argument("--margin", type=float)
    p.add_argument("--pool-vocab-size", dest="pool_vocab_size", type=int)
    p.add_argument("--split-threshold", dest="split_threshold", type=int)
    p.add_argument("--concept-threshold", dest="concept_threshold", type=float)
    p.set_defaults(handler=cmd_adapt)

    p = sub.add_parser("evaluate", help="score candidate/reference pairs")
    _add_common(p)
    p.add_argument("--pairs")
    p.add_argument("--dict")
    p.add_argument("--samples", type=int)
    p.add_argument("--confidence", type=float)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("prepare", help="decontaminate and clean training data")
    _add_common(p)
    p.add_argument("--pool")
    p.add_argument("--downstream", action="append")
    p.add_argument("--dict")
    p.add_argument("--shingle-size", dest="shingle_size", type=int)
    p.add_argument("--jaccard-threshold", dest="jaccard_threshold", type=float)
    p.add_argument("--concept-threshold", dest="concept_threshold", type=float)
    p.set_defaults(handler=cmd_prepare)

    p = sub.add_parser("compare", help="fragment-score two vocabularies")
    _add_common(p)
    p.add_argument("--vocab-a", dest="vocab_a")
    p.add_argument("--vocab-b", dest="vocab_b")
    p.add_argument("--target")
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("train-vocab", help="train a subword vocabulary")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--side", choices=("source", "summary"))
    p.add_argument("--family", choices=("wordpiece", "bpe", "unigram"))
    p.add_argument("--size", type=int)
    p.add_argument("--boundary-marker", dest="boundary_marker")
    p.set_defaults(handler=cmd_train_vocab)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "handler", None):
        parser.print_help(sys.stderr)
        return 2
    try:
        run = Run(args)
        return args.handler(run)
    except (
        UsageError,
        FileNotFoundError,
        CorpusFormatError,
        DictionaryFormatError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal invariant violation
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
