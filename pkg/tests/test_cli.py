import csv
import json

import pytest

from vocadapt import Vocabulary, load_vocabulary, save_vocabulary
from vocadapt.cli import build_parser, main


def run_cli(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def base_vocab_dir(tmp_path):
    tokens = tuple("abcdehrstz") + ("ab", "rst")
    vocab = Vocabulary(tokens=tokens, family="wordpiece", continuation_marker="")
    directory = tmp_path / "base_vocab"
    directory.mkdir()
    save_vocabulary(vocab, directory, stem="vocab")
    return directory


def read_manifest(out_dir):
    return json.loads((out_dir / "manifest.json").read_text())


class TestAnalyze:
    def test_median_and_outputs(self, tmp_path, write_jsonl, base_vocab_dir):
        # per-document distinct OOV fractions: 0/2, 1/2, 2/2 -> median 50%
        corpus = write_jsonl(
            [
                {"id": "1", "source": "s", "summary": "ab rst"},
                {"id": "2", "source": "s", "summary": "ab zzz"},
                {"id": "3", "source": "s", "summary": "qqqq zzz"},
            ]
        )
        out = tmp_path / "analysis"
        code = run_cli(
            "analyze", "--corpus", corpus, "--vocab", base_vocab_dir, "--out", out
        )
        assert code == 0

        report = json.loads((out / "oov_report.json").read_text())
        assert report["median_oov_pct"] == 50.0
        assert report["per_doc_oov_fraction"] == [0.0, 0.5, 1.0]
        assert report["documents"] == 3
        assert report["side"] == "summary"

        with (out / "split_histogram.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["piece_count", "words"]
        histogram = {int(r[0]): int(r[1]) for r in rows[1:]}
        # per-doc distinct words: ab+rst, ab+zzz, qqqq+zzz; qqqq has no
        # vocabulary entry for q and lands in the unrepresentable bucket
        assert histogram == {0: 1, 1: 3, 3: 2}

        ge4 = (out / "words_split_ge4.tsv").read_text()
        assert ge4 == ""  # zzz splits into 3, qqqq has no piece count

        freq = (out / "word_freq_summary.tsv").read_text().splitlines()
        assert freq[0] in ("ab\t2", "zzz\t2")  # ties broken alphabetically: ab first
        assert freq[0] == "ab\t2"

        manifest = read_manifest(out)
        assert manifest["command"] == "analyze"
        assert manifest["seed"] is None
        assert len(manifest["inputs"]) >= 2  # corpus + vocab files

    def test_domain_similarity_block(self, tmp_path, write_jsonl, base_vocab_dir):
        corpus = write_jsonl(
            [{"id": "1", "source": "s", "summary": "ab ab cd"}], name="a.jsonl"
        )
        other = write_jsonl(
            [{"id": "1", "source": "s", "summary": "ab cd"}], name="b.jsonl"
        )
        out = tmp_path / "sim"
        code = run_cli(
            "analyze", "--corpus", corpus, "--vocab", base_vocab_dir,
            "--other", other, "--top-n", 10, "--out", out,
        )
        assert code == 0
        block = json.loads((out / "oov_report.json").read_text())["domain_similarity"]
        assert block["value"] == 1.0
        assert block["top_n"] == 10
        assert block["effective_n"] == 2

    def test_missing_corpus_file_exits_2(self, tmp_path, base_vocab_dir, capsys):
        code = run_cli(
            "analyze", "--corpus", tmp_path / "nope.jsonl",
            "--vocab", base_vocab_dir, "--out", tmp_path / "o",
        )
        assert code == 2
        assert "nope.jsonl" in capsys.readouterr().err


class TestAdapt:
    def _inputs(self, write_jsonl):
        target = write_jsonl(
            [{"id": "t1", "source": "s", "summary": "zebra zebra hazard"}],
            name="target.jsonl",
        )
        pool = write_jsonl(
            [{"id": "p1", "source": "zebra hazard zebra hazard zest", "summary": "x"}],
            name="pool.jsonl",
        )
        return target, pool

    def test_grid_rows_and_provenance(self, tmp_path, write_jsonl, base_vocab_dir):
        target, pool = self._inputs(write_jsonl)
        out = tmp_path / "adapted"
        code = run_cli(
            "adapt", "--target", target, "--pool", pool, "--vocab", base_vocab_dir,
            "--a-grid", "0.5,1.0,2.0", "--k-grid", "2,4", "--out", out,
        )
        assert code == 0

        grid_lines = (out / "grid.csv").read_text().splitlines()
        assert grid_lines[0] == "A,K,target_size,P,vocab_size,fragment_score"
        assert len(grid_lines) == 1 + 3 * 2

        provenance = json.loads((out / "provenance.json").read_text())
        assert provenance["base_vocab_size"] == 12
        assert {c["a"] for c in provenance["grid"]} == {0.5, 1.0, 2.0}
        for token in provenance["added_tokens"]:
            assert token["origin"] in ("TGT", "PAC")

        adapted = load_vocabulary(out, "vocab")
        assert adapted.tokens[:12] == load_vocabulary(base_vocab_dir, "vocab").tokens
        added = (out / "added_tokens.txt").read_text().splitlines()
        assert len(added) == len(provenance["added_tokens"])
        assert set(added) == adapted.added_tokens

    def test_no_candidates_returns_base(self, tmp_path, write_jsonl, base_vocab_dir):
        target = write_jsonl(
            [{"id": "t1", "source": "s", "summary": "ab ab"}], name="t.jsonl"
        )
        pool = write_jsonl(
            [{"id": "p1", "source": "ab ab ab", "summary": "x"}], name="p.jsonl"
        )
        out = tmp_path / "noop"
        code = run_cli(
            "adapt", "--target", target, "--pool", pool, "--vocab", base_vocab_dir,
            "--a-grid", "1.0", "--k-grid", "1", "--out", out,
        )
        assert code == 0
        adapted = load_vocabulary(out, "vocab")
        base = load_vocabulary(base_vocab_dir, "vocab")
        assert adapted.tokens == base.tokens
        assert (out / "added_tokens.txt").read_text() == ""

    def test_half_grid_rejected(self, tmp_path, write_jsonl, base_vocab_dir, capsys):
        target, pool = self._inputs(write_jsonl)
        code = run_cli(
            "adapt", "--target", target, "--pool", pool, "--vocab", base_vocab_dir,
            "--a-grid", "1.0", "--out", tmp_path / "x",
        )
        assert code == 2
        assert "together" in capsys.readouterr().err

    def test_default_grids_too_small_exits_2(
        self, tmp_path, write_jsonl, base_vocab_dir, capsys
    ):
        target, pool = self._inputs(write_jsonl)
        code = run_cli(
            "adapt", "--target", target, "--pool", pool,
            "--vocab", base_vocab_dir, "--out", tmp_path / "x",
        )
        assert code == 2
        assert "grid" in capsys.readouterr().err.lower()


class TestEvaluate:
    def _pairs_file(self, write_jsonl):
        return write_jsonl(
            [
                {"id": "p1", "candidate": "the cat sat on mat",
                 "reference": "the cat on mat"},
                {"id": "p2", "candidate": "aspirin helps", "reference": "aspirin helps"},
            ],
            name="pairs.jsonl",
        )

    def test_hand_values_in_per_pair(self, tmp_path, write_jsonl):
        out = tmp_path / "eval"
        code = run_cli(
            "evaluate", "--pairs", self._pairs_file(write_jsonl),
            "--seed", 13, "--out", out,
        )
        assert code == 0
        with (out / "per_pair.csv").open() as fh:
            rows = {(r["id"], r["metric"]): r for r in csv.DictReader(fh)}
        assert rows[("p1", "rouge-1")]["precision"] == "0.800000"
        assert rows[("p1", "rouge-1")]["recall"] == "1.000000"
        assert rows[("p1", "rouge-2")]["f1"] == f"{4 / 7:.6f}"
        assert rows[("p2", "rouge-l")]["f1"] == "1.000000"

        aggregate = json.loads((out / "aggregate.json").read_text())
        assert aggregate["seed"] == 13
        assert set(aggregate["metrics"]) == {
            "rouge-1", "rouge-2", "rouge-3", "rouge-4",
            "rouge-l", "rouge-w", "rouge-su",
        }
        for stats in aggregate["metrics"].values():
            assert stats["ci_low"] <= stats["median"] <= stats["ci_high"]
        assert aggregate["empty_reference_ids"] == []

    def test_dictionary_adds_concept_metrics(self, tmp_path, write_jsonl, toy_dict):
        from vocadapt import toy_dictionary_path

        out = tmp_path / "eval"
        code = run_cli(
            "evaluate", "--pairs", self._pairs_file(write_jsonl),
            "--dict", toy_dictionary_path(), "--seed", 13, "--out", out,
        )
        assert code == 0
        aggregate = json.loads((out / "aggregate.json").read_text())
        assert {"med-rouge-1", "med-rouge-2", "concept-f1"} <= set(aggregate["metrics"])

    def test_seed_required(self, tmp_path, write_jsonl, capsys):
        code = run_cli(
            "evaluate", "--pairs", self._pairs_file(write_jsonl),
            "--out", tmp_path / "eval",
        )
        assert code == 2
        assert "--seed" in capsys.readouterr().err

    def test_malformed_pairs_line_reported(self, tmp_path, capsys):
        path = tmp_path / "pairs.jsonl"
        path.write_text('{"id": "a", "candidate": "x", "reference": "y"}\n{broken\n')
        code = run_cli("evaluate", "--pairs", path, "--seed", 1, "--out", tmp_path / "e")
        assert code == 2
        assert ":2:" in capsys.readouterr().err


class TestPrepare:
    def test_exact_duplicate_removed_and_idempotent(
        self, tmp_path, write_jsonl
    ):
        from vocadapt import toy_dictionary_path

        shared = "aspirin reduces fever and pain in adults"
        pool = write_jsonl(
            [
                {"id": "p1", "source": shared, "summary": "aspirin summary"},
                {"id": "p2", "source": "completely unrelated text here", "summary": "other"},
            ],
            name="pool.jsonl",
        )
        downstream = write_jsonl(
            [
                {"id": "d1", "source": shared, "summary": "aspirin"},
                {"id": "d2", "source": "heart disease treatment works", "summary": "treatment heart"},
            ],
            name="down.jsonl",
        )
        out = tmp_path / "prep"
        code = run_cli(
            "prepare", "--pool", pool, "--downstream", downstream,
            "--dict", toy_dictionary_path(), "--out", out,
        )
        assert code == 0

        counts = json.loads((out / "cleaning_counts.json").read_text())
        assert counts["pool"] == {"before": 2, "after": 1, "removed": 1}

        log = [
            json.loads(line)
            for line in (out / "removal_log.jsonl").read_text().splitlines()
        ]
        assert log[0]["id"] == "p1"
        assert log[0]["criterion"] == "exact"

        # cleaning the cleaned pool again removes nothing
        out2 = tmp_path / "prep2"
        code = run_cli(
            "prepare", "--pool", out / "pool.cleaned.jsonl",
            "--downstream", downstream,
            "--dict", toy_dictionary_path(), "--out", out2,
        )
        assert code == 0
        counts2 = json.loads((out2 / "cleaning_counts.json").read_text())
        assert counts2["pool"]["removed"] == 0

    def test_downstream_cleaning_counts(self, tmp_path, write_jsonl):
        from vocadapt import toy_dictionary_path

        pool = write_jsonl(
            [{"id": "p", "source": "nothing shared at all", "summary": "x"}],
            name="pool.jsonl",
        )
        downstream = write_jsonl(
            [
                # no concept overlap between source and summary
                {"id": "d1", "source": "aspirin study", "summary": "plain words only"},
                # summary longer than source
                {"id": "d2", "source": "aspirin", "summary": "aspirin aspirin aspirin"},
                # kept
                {"id": "d3", "source": "aspirin helps people", "summary": "aspirin helps"},
            ],
            name="down.jsonl",
        )
        out = tmp_path / "prep"
        code = run_cli(
            "prepare", "--pool", pool, "--downstream", downstream,
            "--dict", toy_dictionary_path(), "--out", out,
        )
        assert code == 0
        counts = json.loads((out / "cleaning_counts.json").read_text())["down"]
        assert counts["before"] == 3 and counts["after"] == 1
        assert counts["no_concept_overlap"] == 1
        assert counts["summary_longer_than_source"] == 1
        cleaned = (out / "down.cleaned.jsonl").read_text().splitlines()
        assert json.loads(cleaned[0])["id"] == "d3"


class TestCompare:
    def test_identical_vocabularies(self, tmp_path, write_jsonl, base_vocab_dir):
        target = write_jsonl(
            [{"id": "t", "source": "s", "summary": "ab rst zebra"}], name="t.jsonl"
        )
        out = tmp_path / "cmp"
        code = run_cli(
            "compare", "--vocab-a", base_vocab_dir, "--vocab-b", base_vocab_dir,
            "--target", target, "--seed", 3, "--out", out,
        )
        assert code == 0
        report = json.loads((out / "comparison.json").read_text())
        assert report["seed"] == 3
        assert report["original"]["a"] == report["original"]["b"]

    def test_seed_required(self, tmp_path, base_vocab_dir, write_jsonl, capsys):
        target = write_jsonl(
            [{"id": "t", "source": "s", "summary": "ab"}], name="t.jsonl"
        )
        code = run_cli(
            "compare", "--vocab-a", base_vocab_dir, "--vocab-b", base_vocab_dir,
            "--target", target, "--out", tmp_path / "x",
        )
        assert code == 2
        assert "--seed" in capsys.readouterr().err


class TestTrainVocab:
    def test_trains_and_saves(self, tmp_path, write_jsonl):
        corpus = write_jsonl(
            [{"id": "1", "source": "banana bandana banana", "summary": "x"}],
            name="c.jsonl",
        )
        out = tmp_path / "trained"
        code = run_cli(
            "train-vocab", "--corpus", corpus, "--size", 8,
            "--family", "bpe", "--out", out,
        )
        assert code == 0
        vocab = load_vocabulary(out, "vocab")
        assert vocab.family == "bpe"
        assert len(vocab) == 8
        assert vocab.merges is not None

    def test_size_required(self, tmp_path, write_jsonl, capsys):
        corpus = write_jsonl(
            [{"id": "1", "source": "abc", "summary": "x"}], name="c.jsonl"
        )
        code = run_cli("train-vocab", "--corpus", corpus, "--out", tmp_path / "t")
        assert code == 2
        assert "--size" in capsys.readouterr().err


class TestConfigPrecedence:
    def test_flag_beats_config_beats_default(self, tmp_path, write_jsonl):
        corpus = write_jsonl(
            [{"id": "1", "source": "banana bandana banana", "summary": "x"}],
            name="c.jsonl",
        )
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"size": 6, "family": "bpe"}))

        out1 = tmp_path / "from_config"
        assert run_cli(
            "train-vocab", "--corpus", corpus, "--config", config, "--out", out1
        ) == 0
        assert len(load_vocabulary(out1, "vocab")) == 6

        out2 = tmp_path / "flag_wins"
        assert run_cli(
            "train-vocab", "--corpus", corpus, "--config", config,
            "--size", 5, "--out", out2,
        ) == 0
        assert len(load_vocabulary(out2, "vocab")) == 5

        manifest = read_manifest(out2)
        assert manifest["config"]["size"] == 5
        assert manifest["config"]["family"] == "bpe"

    def test_malformed_config_exits_2(self, tmp_path, write_jsonl, capsys):
        corpus = write_jsonl(
            [{"id": "1", "source": "aa", "summary": "x"}], name="c.jsonl"
        )
        config = tmp_path / "config.json"
        config.write_text("[1, 2]")
        code = run_cli(
            "train-vocab", "--corpus", corpus, "--config", config,
            "--size", 4, "--out", tmp_path / "t",
        )
        assert code == 2
        assert "JSON object" in capsys.readouterr().err


class TestHarness:
    def test_no_subcommand_exits_2(self, capsys):
        assert main([]) == 2
        assert "usage" in capsys.readouterr().err.lower()

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0

    def test_parser_lists_all_subcommands(self):
        parser = build_parser()
        text = parser.format_help()
        for name in ("analyze", "adapt", "evaluate", "prepare", "compare", "train-vocab"):
            assert name in text

    def test_manifest_written_once_with_fields(
        self, tmp_path, write_jsonl, base_vocab_dir
    ):
        corpus = write_jsonl(
            [{"id": "1", "source": "s", "summary": "ab"}], name="c.jsonl"
        )
        out = tmp_path / "m"
        assert run_cli(
            "analyze", "--corpus", corpus, "--vocab", base_vocab_dir, "--out", out
        ) == 0
        manifest = read_manifest(out)
        assert set(manifest) == {
            "command", "config", "inputs", "seed", "version", "wall_time_s",
        }
        assert manifest["version"]
        assert manifest["wall_time_s"] >= 0
        for digest in manifest["inputs"].values():
            assert len(digest) == 64

    def test_internal_errors_exit_1(self, monkeypatch, tmp_path, write_jsonl, base_vocab_dir):
        import vocadapt.cli as cli_mod

        corpus = write_jsonl(
            [{"id": "1", "source": "s", "summary": "ab"}], name="c.jsonl"
        )

        def boom(*args, **kwargs):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(cli_mod, "oov_stats", boom)
        code = run_cli(
            "analyze", "--corpus", corpus, "--vocab", base_vocab_dir,
            "--out", tmp_path / "x",
        )
        assert code == 1
