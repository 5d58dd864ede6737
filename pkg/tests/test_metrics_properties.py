"""Property and oracle-equivalence tests for the metric implementations."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_edit_distance, brute_force_rouge_l_f1
from xlforge.metrics import (
    TerConfig,
    bleu,
    chrf,
    chrfpp,
    rouge_l,
    rouge_n,
    ter,
    tokenize_words,
)

ALPHABET = "abcde"

token_lists = st.lists(st.sampled_from(list(ALPHABET)), min_size=0, max_size=10)
nonempty_token_lists = st.lists(st.sampled_from(list(ALPHABET)), min_size=1, max_size=10)

# mixed Latin/Devanagari text with at least one word character
word_chars = st.sampled_from(list("abcxyz") + list("कखगघञ"))
texts = st.text(alphabet=st.sampled_from(list("abcxyz कखगघञ.,")), max_size=30)
nonempty_texts = st.builds(lambda head, tail: head + tail, word_chars, texts)


@given(token_lists, token_lists)
@settings(max_examples=200, deadline=None)
def test_rouge_l_matches_brute_force(cand, ref):
    got = rouge_l(cand, ref).f1
    assert got == pytest.approx(brute_force_rouge_l_f1(cand, ref), abs=1e-9)


@given(token_lists, nonempty_token_lists)
@settings(max_examples=200, deadline=None)
def test_ter_no_shifts_matches_brute_force(cand, ref):
    got = ter(cand, ref, TerConfig(shifts_enabled=False))
    expected = 100.0 * brute_force_edit_distance(cand, ref) / len(ref)
    assert got == pytest.approx(expected, abs=1e-9)


@given(nonempty_token_lists, nonempty_token_lists)
@settings(max_examples=200, deadline=None)
def test_ter_shifts_never_hurt(cand, ref):
    with_shifts = ter(cand, ref, TerConfig(shifts_enabled=True))
    without = ter(cand, ref, TerConfig(shifts_enabled=False))
    assert with_shifts <= without + 1e-9


@given(nonempty_texts)
@settings(max_examples=100, deadline=None)
def test_identity_properties(text):
    assert chrf(text, text) == pytest.approx(100.0, abs=1e-9)
    assert chrfpp(text, text) == pytest.approx(100.0, abs=1e-9)
    tokens = tokenize_words(text)
    assert tokens, f"generator produced token-free text {text!r}"
    assert ter(tokens, tokens) == 0.0
    assert bleu(tokens, [tokens]) == pytest.approx(100.0, abs=1e-9)
    assert rouge_n(tokens, tokens, 1).f1 == pytest.approx(1.0, abs=1e-9)


@given(nonempty_token_lists, nonempty_token_lists)
@settings(max_examples=100, deadline=None)
def test_rouge_swap_symmetry(a, b):
    ab = rouge_n(a, b, 1)
    ba = rouge_n(b, a, 1)
    assert ab.precision == pytest.approx(ba.recall, abs=1e-12)
    assert ab.recall == pytest.approx(ba.precision, abs=1e-12)
    lab = rouge_l(a, b)
    lba = rouge_l(b, a)
    assert lab.precision == pytest.approx(lba.recall, abs=1e-12)
    assert lab.f1 == pytest.approx(lba.f1, abs=1e-12)


@given(
    nonempty_token_lists,
    st.lists(nonempty_token_lists, min_size=1, max_size=4),
    st.randoms(use_true_random=False),
)
@settings(max_examples=100, deadline=None)
def test_bleu_reference_order_invariance(cand, refs, rng):
    shuffled = list(refs)
    rng.shuffle(shuffled)
    assert bleu(cand, refs) == bleu(cand, shuffled)


def test_score_ranges_randomized():
    rng = random.Random(7)
    for _ in range(200):
        cand = [rng.choice(ALPHABET) for _ in range(rng.randint(0, 12))]
        ref = [rng.choice(ALPHABET) for _ in range(rng.randint(1, 12))]
        triple = rouge_n(cand, ref, 1)
        assert 0.0 <= triple.precision <= 1.0
        assert 0.0 <= triple.recall <= 1.0
        assert 0.0 <= triple.f1 <= 1.0
        b = bleu(cand, [ref])
        assert 0.0 <= b <= 100.0 + 1e-9
        c = chrf(" ".join(cand), " ".join(ref))
        assert 0.0 <= c <= 100.0 + 1e-9
        t = ter(cand, ref)
        assert t >= 0.0


def test_determinism_repeated_calls():
    cand = "the cat sat on the mat and then ran away".split()
    ref = "a cat was sitting on the mat before running".split()
    runs = {
        (
            rouge_l(cand, ref).f1,
            bleu(cand, [ref]),
            chrf(" ".join(cand), " ".join(ref)),
            chrfpp(" ".join(cand), " ".join(ref)),
            ter(cand, ref),
        )
        for _ in range(5)
    }
    assert len(runs) == 1
