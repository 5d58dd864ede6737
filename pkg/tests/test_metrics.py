"""Worked-example tests for every metric; values are hand-derived and frozen."""

import math

import pytest

from xlforge.metrics import (
    BleuConfig,
    ChrfConfig,
    ScoreTriple,
    TerConfig,
    bleu,
    chrf,
    chrfpp,
    rouge_l,
    rouge_n,
    ter,
    tokenize_words,
)

FRAC = 1e-9  # fraction-scale tolerance
PCT = 1e-4  # percent-scale tolerance


class TestTokenize:
    def test_punctuation_split(self):
        assert tokenize_words("The cat.") == ["the", "cat", "."]

    def test_empty(self):
        assert tokenize_words("") == []

    def test_devanagari_with_punctuation(self):
        assert tokenize_words("राम, श्याम") == ["राम", ",", "श्याम"]

    def test_case_sensitive_keeps_case(self):
        assert tokenize_words("The Cat", case_sensitive=True) == ["The", "Cat"]


class TestRougeN:
    def test_unigram_overlap(self):
        # overlap {the, cat} out of 3 tokens each side
        got = rouge_n("the cat sat".split(), "the cat ran".split(), 1)
        assert got.precision == pytest.approx(2 / 3, abs=FRAC)
        assert got.recall == pytest.approx(2 / 3, abs=FRAC)
        assert got.f1 == pytest.approx(2 / 3, abs=FRAC)

    def test_bigram_overlap(self):
        # only "the cat" is shared
        got = rouge_n("the cat sat".split(), "the cat ran".split(), 2)
        assert got == ScoreTriple(0.5, 0.5, 0.5)

    def test_identity(self):
        for n in (1, 2, 3):
            got = rouge_n("a b c".split(), "a b c".split(), n)
            assert got == ScoreTriple(1.0, 1.0, 1.0)

    def test_too_short_side_scores_zero(self):
        got = rouge_n(["a"], "a b".split(), 2)
        assert got == ScoreTriple(0.0, 0.0, 0.0)

    def test_order_zero_rejected(self):
        with pytest.raises(ValueError):
            rouge_n(["a"], ["a"], 0)


class TestRougeL:
    def test_lcs_example(self):
        # LCS "the cat on mat" has length 4
        got = rouge_l("the cat sat on mat".split(), "the cat on mat".split())
        assert got.recall == pytest.approx(1.0, abs=FRAC)
        assert got.precision == pytest.approx(0.8, abs=FRAC)
        assert got.f1 == pytest.approx(8 / 9, abs=FRAC)

    def test_identity(self):
        assert rouge_l("x y z".split(), "x y z".split()) == ScoreTriple(1.0, 1.0, 1.0)

    def test_disjoint(self):
        assert rouge_l("a b".split(), "c d".split()) == ScoreTriple(0.0, 0.0, 0.0)

    def test_empty_side(self):
        assert rouge_l([], "a".split()) == ScoreTriple(0.0, 0.0, 0.0)


class TestBleu:
    def test_identity_is_100(self):
        tokens = "the quick brown fox jumps".split()
        assert bleu(tokens, [tokens]) == pytest.approx(100.0, abs=PCT)

    def test_no_overlap_unsmoothed_is_0(self):
        got = bleu("a b c".split(), ["x y z".split()], BleuConfig(smoothing="none"))
        assert got == 0.0

    def test_clipped_precision(self):
        # "the" appears once in the reference: clipped count 1 of 4, BP=1
        got = bleu(
            "the the the the".split(),
            ["the cat sat down".split()],
            BleuConfig(max_n=1, smoothing="none"),
        )
        assert got == pytest.approx(25.0, abs=PCT)

    def test_reference_order_invariance(self):
        cand = "the cat sat".split()
        refs = ["the cat ran".split(), "a dog sat".split(), "the bird sat".split()]
        a = bleu(cand, refs)
        b = bleu(cand, list(reversed(refs)))
        assert a == b

    def test_brevity_penalty(self):
        cand = "the cat".split()
        ref = "the cat sat down".split()
        got = bleu(cand, [ref], BleuConfig(max_n=1, smoothing="none"))
        assert got == pytest.approx(100.0 * math.exp(1 - 4 / 2), abs=PCT)

    def test_empty_candidate(self):
        assert bleu([], [["a"]], BleuConfig(smoothing="none")) == 0.0

    def test_requires_reference(self):
        with pytest.raises(ValueError):
            bleu(["a"], [])

    def test_exp_decay_smoothing(self):
        # unigram precision 1.0; bigram..4gram all zero -> 1/2, 1/4, 1/8
        cand = "a b".split()
        ref = "b a".split()
        got = bleu(cand, [ref], BleuConfig(max_n=2, smoothing="exp_decay"))
        expected = 100.0 * math.exp((math.log(1.0) + math.log(0.5)) / 2)
        assert got == pytest.approx(expected, abs=PCT)

    def test_add_k_smoothing_applies_beyond_unigrams(self):
        cand = "a b".split()
        ref = "b a".split()
        # p1 = 1 untouched; p2 = (0 + 1) / (1 + 1) with add-1
        got = bleu(cand, [ref], BleuConfig(max_n=2, smoothing=("add_k", 1.0)))
        expected = 100.0 * math.exp((math.log(1.0) + math.log(0.5)) / 2)
        assert got == pytest.approx(expected, abs=PCT)

    def test_unknown_smoothing_rejected(self):
        with pytest.raises(ValueError):
            bleu(["a"], [["a"]], BleuConfig(smoothing="magic"))


class TestChrf:
    def test_identity_is_100(self):
        assert chrf("परीक्षा एक", "परीक्षा एक") == pytest.approx(100.0, abs=PCT)

    def test_hand_case(self):
        # character unigrams {a,b,c} vs {a,b,d}: P = R = 2/3
        got = chrf("abc", "abd", ChrfConfig(char_n=1))
        assert got == pytest.approx(200.0 / 3, abs=PCT)

    def test_disjoint_is_0(self):
        assert chrf("aaa", "bbb") == 0.0

    def test_both_empty_is_100(self):
        assert chrf("", "") == 100.0

    def test_one_empty_is_0(self):
        assert chrf("", "abc") == 0.0
        assert chrf("abc", "") == 0.0

    def test_whitespace_removed_before_ngrams(self):
        # identical character streams once whitespace is gone
        assert chrf("ab cd", "abc d") == pytest.approx(100.0, abs=PCT)

    def test_chrfpp_adds_word_orders(self):
        plain = chrf("the cat sat", "the cat ran")
        plus = chrfpp("the cat sat", "the cat ran")
        assert plain != plus

    def test_chrfpp_identity(self):
        assert chrfpp("the cat sat", "the cat sat") == pytest.approx(100.0, abs=PCT)


class TestTer:
    def test_identity_is_0(self):
        assert ter("a b c".split(), "a b c".split()) == 0.0

    def test_one_substitution(self):
        assert ter("a x c d".split(), "a b c d".split()) == pytest.approx(25.0, abs=PCT)

    def test_shift_beats_substitutions(self):
        cand = "b a c d".split()
        ref = "a b c d".split()
        assert ter(cand, ref) == pytest.approx(25.0, abs=PCT)
        assert ter(cand, ref, TerConfig(shifts_enabled=False)) == pytest.approx(50.0, abs=PCT)

    def test_unclamped_above_100(self):
        ref = "a b c d e".split()
        cand = ["q"] * (10 * len(ref))
        assert ter(cand, ref) > 100.0

    def test_empty_reference_rejected(self):
        with pytest.raises(ValueError):
            ter(["a"], [])

    def test_empty_candidate_deletes_reference(self):
        assert ter([], "a b c d".split()) == pytest.approx(100.0, abs=PCT)

    def test_case_insensitive_default(self):
        assert ter(["The", "cat"], ["the", "cat"]) == 0.0
        assert ter(["The", "cat"], ["the", "cat"], TerConfig(case_sensitive=True)) == pytest.approx(50.0, abs=PCT)

    def test_max_shift_distance_zero_blocks_shifting(self):
        cand = "d a b c".split()
        ref = "a b c d".split()
        with_shifts = ter(cand, ref, TerConfig(max_shift_distance=50))
        without_reach = ter(cand, ref, TerConfig(max_shift_distance=0))
        assert with_shifts < without_reach
