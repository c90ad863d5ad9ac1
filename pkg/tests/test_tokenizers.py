import random

import pytest

from vocadapt import (
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

import oracles
from util import bare_vocab, wordpiece_vocab


class TestVocabularyConstruction:
    def test_duplicate_tokens_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            Vocabulary(tokens=("a", "a"), family="wordpiece")

    def test_empty_token_rejected(self):
        with pytest.raises(ValueError, match="empty string"):
            Vocabulary(tokens=("a", ""), family="wordpiece")

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError, match="family"):
            Vocabulary(tokens=("a",), family="sentencepiece")

    def test_merge_closure_enforced(self):
        with pytest.raises(ValueError, match="merge result"):
            Vocabulary(tokens=("a", "b"), family="bpe", merges=(("a", "b"),))

    def test_added_tokens_must_be_tokens(self):
        with pytest.raises(ValueError, match="added_tokens"):
            Vocabulary(tokens=("a",), family="wordpiece", added_tokens=frozenset({"b"}))

    def test_build_appends_character_fallbacks(self):
        vocab = Vocabulary.build(["abc"], family="wordpiece")
        assert vocab.tokens[0] == "abc"
        for c in "abc":
            assert c in vocab.token_set
            assert "##" + c in vocab.token_set

    def test_build_is_idempotent_on_complete_inventories(self):
        first = Vocabulary.build(["ab"], family="wordpiece")
        second = Vocabulary.build(first.tokens, family="wordpiece")
        assert second.tokens == first.tokens

    def test_rank_is_position(self):
        vocab = bare_vocab(["x", "y", "z"])
        assert vocab.rank == {"x": 0, "y": 1, "z": 2}


class TestWordpiece:
    def test_whole_word_single_piece(self):
        vocab = Vocabulary.build(["hello"], family="wordpiece")
        assert tokenize_word("hello", vocab).pieces == ("hello",)

    def test_greedy_prefers_longest_prefix_over_fewest_pieces(self):
        # bare inventory; the 2-piece split ab + cde exists but greedy
        # commits to abc first
        vocab = Vocabulary.build(
            ["a", "b", "c", "d", "e", "ab", "abc", "cde"], family="wordpiece"
        )
        result = tokenize_word("abcde", vocab)
        assert result.pieces == ("abc", "##d", "##e")
        assert result.piece_count == 3
        assert (
            minimal_piece_count(
                "abcde",
                {"a", "b", "c", "d", "e", "ab", "abc", "cde"},
                continuation_marker="##",
            )
            == 2
        )

    def test_marked_only_continuations_match(self):
        vocab = wordpiece_vocab(["a", "##b"])
        assert tokenize_word("ab", vocab).pieces == ("a", "##b")

    def test_marked_entries_do_not_match_word_initially(self):
        vocab = wordpiece_vocab(["##a", "b"])
        with pytest.raises(UnrepresentableCharacterError):
            tokenize_word("ab", vocab)

    def test_unrepresentable_character_names_char_and_position(self):
        vocab = Vocabulary.build(["ab"], family="wordpiece")
        with pytest.raises(UnrepresentableCharacterError) as err:
            tokenize_word("axb", vocab)
        assert err.value.char == "x"
        assert err.value.position == 1
        assert "'x'" in str(err.value)


class TestBpe:
    def test_merge_replay(self):
        vocab = Vocabulary(
            tokens=("a", "b", "c", "d", "ab", "cd"),
            family="bpe",
            merges=(("a", "b"), ("c", "d")),
        )
        assert tokenize_word("abcd", vocab).pieces == ("ab", "cd")

    def test_merge_order_matters(self):
        # (b, c) first consumes the middle; (a, b) then never applies
        vocab = Vocabulary(
            tokens=("a", "b", "c", "bc", "ab"),
            family="bpe",
            merges=(("b", "c"), ("a", "b")),
        )
        assert tokenize_word("abc", vocab).pieces == ("a", "bc")

    def test_boundary_marker(self):
        vocab = Vocabulary(
            tokens=("_", "a", "b", "_a", "ab"),
            family="bpe",
            boundary_marker="_",
            merges=(("_", "a"),),
        )
        assert tokenize_word("ab", vocab).pieces == ("_a", "b")
        assert detokenize(("_a", "b"), "bpe", boundary_marker="_") == "ab"

    def test_added_tokens_win_before_merges(self):
        vocab = Vocabulary(
            tokens=("a", "b", "c", "abc"),
            family="bpe",
            merges=(),
            added_tokens=frozenset({"abc"}),
        )
        assert tokenize_word("abc", vocab).pieces == ("abc",)


class TestUnigram:
    def test_viterbi_picks_max_score(self):
        vocab = Vocabulary(
            tokens=("a", "b", "ab"),
            family="unigram",
            scores={"a": -3.0, "b": -3.0, "ab": -1.0},
        )
        assert tokenize_word("ab", vocab).pieces == ("ab",)

    def test_score_can_beat_length(self):
        vocab = Vocabulary(
            tokens=("a", "b", "ab"),
            family="unigram",
            scores={"a": -0.1, "b": -0.1, "ab": -5.0},
        )
        assert tokenize_word("ab", vocab).pieces == ("a", "b")

    def test_tie_prefers_fewer_pieces(self):
        vocab = Vocabulary(
            tokens=("a", "b", "ab"),
            family="unigram",
            scores={"a": -1.0, "b": -1.0, "ab": -2.0},
        )
        assert tokenize_word("ab", vocab).pieces == ("ab",)

    def test_missing_scores_is_an_error(self):
        vocab = Vocabulary(tokens=("a",), family="unigram")
        with pytest.raises(ValueError, match="scores"):
            tokenize_word("a", vocab)


class TestLongestMatchSegment:
    def test_single_token(self):
        assert longest_match_segment("x", {"x"}).pieces == ("x",)

    def test_greedy_prefix_trace(self):
        result = longest_match_segment("abcd", {"abc", "ab", "cd", "a", "b", "c", "d"})
        assert result.pieces == ("abc", "d")

    def test_repeated_characters(self):
        assert longest_match_segment("aaaa", {"aaa", "aa", "a"}).pieces == ("aaa", "a")

    def test_whole_word_identity(self):
        rng = random.Random(11)
        for _ in range(200):
            word = "".join(rng.choice("abc") for _ in range(rng.randint(1, 8)))
            tokens = {word} | {c for c in word}
            assert longest_match_segment(word, tokens).pieces == (word,)

    def test_matches_reference_greedy(self):
        rng = random.Random(23)
        for _ in range(500):
            word = "".join(rng.choice("abcd") for _ in range(rng.randint(1, 10)))
            tokens = set(word)
            for _ in range(rng.randint(0, 8)):
                i = rng.randrange(len(word))
                j = rng.randint(i + 1, len(word))
                tokens.add(word[i:j])
            cont = rng.choice(["", "##"])
            expected = oracles.greedy_pieces(word, tokens, cont)
            got = longest_match_segment(word, tokens, continuation_marker=cont)
            assert list(got.pieces) == expected


class TestMinimalPieceCount:
    def test_matches_recursive_oracle(self):
        rng = random.Random(37)
        for _ in range(500):
            word = "".join(rng.choice("abcd") for _ in range(rng.randint(1, 10)))
            tokens = set(word)
            for _ in range(rng.randint(0, 8)):
                i = rng.randrange(len(word))
                j = rng.randint(i + 1, len(word))
                tokens.add(word[i:j])
            cont = rng.choice(["", "##"])
            expected = oracles.min_pieces(word, tokens, cont)
            got = minimal_piece_count(word, tokens, continuation_marker=cont)
            assert got == expected

    def test_never_exceeds_greedy(self):
        rng = random.Random(41)
        for _ in range(500):
            word = "".join(rng.choice("abc") for _ in range(rng.randint(1, 10)))
            tokens = set(word)
            for _ in range(rng.randint(0, 6)):
                i = rng.randrange(len(word))
                j = rng.randint(i + 1, len(word))
                tokens.add(word[i:j])
            greedy = len(longest_match_segment(word, tokens).pieces)
            assert minimal_piece_count(word, tokens) <= greedy

    def test_superset_never_increases(self):
        rng = random.Random(43)
        for _ in range(500):
            word = "".join(rng.choice("abc") for _ in range(rng.randint(2, 10)))
            tokens = set(word)
            for _ in range(rng.randint(0, 5)):
                i = rng.randrange(len(word))
                j = rng.randint(i + 1, len(word))
                tokens.add(word[i:j])
            extra = set(tokens)
            for _ in range(rng.randint(1, 5)):
                i = rng.randrange(len(word))
                j = rng.randint(i + 1, len(word))
                extra.add(word[i:j])
            assert minimal_piece_count(word, extra) <= minimal_piece_count(word, tokens)

    def test_error_when_not_coverable(self):
        with pytest.raises(UnrepresentableCharacterError):
            minimal_piece_count("abx", {"a", "b"})


class TestDetokenize:
    def test_round_trip_all_families(self):
        rng = random.Random(53)
        wp = Vocabulary.build(["ab", "cd", "abc"], family="wordpiece")
        bpe = Vocabulary(
            tokens=("a", "b", "c", "d", "ab"), family="bpe", merges=(("a", "b"),)
        )
        uni = Vocabulary(
            tokens=("a", "b", "c", "d", "ab"),
            family="unigram",
            scores={"a": -2.0, "b": -2.0, "c": -2.0, "d": -2.0, "ab": -1.0},
        )
        for _ in range(1000):
            word = "".join(rng.choice("abcd") for _ in range(rng.randint(1, 12)))
            for vocab in (wp, bpe, uni):
                result = tokenize_word(word, vocab)
                assert vocab.detokenize(result.pieces) == word

    def test_continuation_marker_on_first_piece_rejected(self):
        with pytest.raises(ValueError, match="word-initial"):
            detokenize(("##a", "##b"), "wordpiece")

    def test_missing_continuation_marker_rejected(self):
        with pytest.raises(ValueError, match="missing continuation"):
            detokenize(("a", "b"), "wordpiece")

    def test_boundary_marker_on_later_piece_rejected(self):
        with pytest.raises(ValueError, match="boundary"):
            detokenize(("_a", "_b"), "bpe", boundary_marker="_")

    def test_empty_pieces_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            detokenize((), "wordpiece")


class TestSaveLoad:
    def test_round_trip_with_merges_scores_and_added(self, tmp_path):
        vocab = Vocabulary(
            tokens=("a", "b", "ab", "xyz"),
            family="bpe",
            merges=(("a", "b"),),
            added_tokens=frozenset({"xyz"}),
        )
        save_vocabulary(vocab, tmp_path)
        loaded = load_vocabulary(tmp_path)
        assert loaded.tokens == vocab.tokens
        assert loaded.family == "bpe"
        assert loaded.merges == vocab.merges
        assert loaded.added_tokens == vocab.added_tokens

        uni = Vocabulary(
            tokens=("a", "b"), family="unigram", scores={"a": -1.5, "b": -2.5}
        )
        save_vocabulary(uni, tmp_path / "uni")
        loaded = load_vocabulary(tmp_path / "uni")
        assert loaded.scores == {"a": -1.5, "b": -2.5}

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="vocab.txt"):
            load_vocabulary(tmp_path / "nothing")

    def test_tokenization_value_type(self):
        t = Tokenization(word="ab", pieces=("a", "##b"))
        assert t.piece_count == 2
