"""Lexical translation and summarization metrics.

Implements ROUGE-1/2/L, BLEU, chrF/chrF++, and TER with explicit, documented
conventions so scores are reproducible:

* ROUGE precision/recall/F1 are fractions in [0, 1].
* BLEU, chrF, chrF++ are percents in [0, 100]; TER is a percent >= 0 and is
  deliberately not clamped at 100.
* chrF character n-grams are taken over the text with all whitespace removed.
* TER uses a greedy block-shift search (each shift costs one edit).

All functions are pure and thread-safe.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import kernels

METRIC_IDS = ("rouge1", "rouge2", "rougeL", "bleu", "chrf", "chrfpp", "ter")

# TERCOM convention: shifted blocks are at most this many tokens long.
MAX_SHIFT_BLOCK = 10
MAX_SHIFT_ITERATIONS = 1000


@dataclass(frozen=True)
class ScoreTriple:
    """Precision/recall/F1 bundle; f1 is 2PR/(P+R), 0 when P+R is 0."""

    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "ScoreTriple":
        if precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        else:
            f1 = 0.0
        return cls(precision, recall, f1)


@dataclass(frozen=True)
class ChrfConfig:
    beta: float = 2.0
    char_n: int = 6
    word_n: int = 0  # 0 = plain chrF, 2 = chrF++

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.char_n < 1:
            raise ValueError("char_n must be >= 1")
        if self.word_n < 0:
            raise ValueError("word_n must be >= 0")


CHRF_DEFAULT = ChrfConfig()
CHRFPP_DEFAULT = ChrfConfig(word_n=2)


@dataclass(frozen=True)
class TerConfig:
    shifts_enabled: bool = True
    case_sensitive: bool = False
    max_shift_distance: int = 50

    def __post_init__(self):
        if self.max_shift_distance < 0:
            raise ValueError("max_shift_distance must be >= 0")


@dataclass(frozen=True)
class BleuConfig:
    """``smoothing``: "none", "exp_decay", or ("add_k", k)."""

    max_n: int = 4
    smoothing: object = "exp_decay"

    def __post_init__(self):
        if self.max_n < 1:
            raise ValueError("max_n must be >= 1")


def tokenize_words(text: str, case_sensitive: bool = False) -> List[str]:
    """Split on unicode whitespace, then peel punctuation into own tokens.

    Lowercases unless ``case_sensitive``; scripts without case (Devanagari)
    pass through unchanged.
    """
    if not case_sensitive:
        text = text.lower()
    tokens: List[str] = []
    for chunk in text.split():
        buf = []
        for ch in chunk:
            if unicodedata.category(ch).startswith("P"):
                if buf:
                    tokens.append("".join(buf))
                    buf = []
                tokens.append(ch)
            else:
                buf.append(ch)
        if buf:
            tokens.append("".join(buf))
    return tokens


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> ScoreTriple:
    """ROUGE-N over token lists via clipped multiset n-gram overlap."""
    if n < 1:
        raise ValueError("n-gram order must be >= 1")
    cand = _ngram_counts(candidate, n)
    ref = _ngram_counts(reference, n)
    overlap = sum((cand & ref).values())
    cand_total = sum(cand.values())
    ref_total = sum(ref.values())
    precision = overlap / cand_total if cand_total else 0.0
    recall = overlap / ref_total if ref_total else 0.0
    return ScoreTriple.from_pr(precision, recall)


def _encode_tokens(
    candidate: Sequence[str], reference: Sequence[str]
) -> Tuple[np.ndarray, np.ndarray]:
    ids: Dict[str, int] = {}
    enc_c = np.fromiter(
        (ids.setdefault(t, len(ids)) for t in candidate), dtype=np.int64, count=len(candidate)
    )
    enc_r = np.fromiter(
        (ids.setdefault(t, len(ids)) for t in reference), dtype=np.int64, count=len(reference)
    )
    return enc_c, enc_r


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> ScoreTriple:
    """ROUGE-L: LCS length over |candidate| (P) and |reference| (R)."""
    if not candidate or not reference:
        return ScoreTriple(0.0, 0.0, 0.0)
    enc_c, enc_r = _encode_tokens(candidate, reference)
    lcs = kernels.lcs_length(enc_c, enc_r)
    return ScoreTriple.from_pr(lcs / len(candidate), lcs / len(reference))


def bleu(
    candidate: Sequence[str],
    references: Sequence[Sequence[str]],
    cfg: BleuConfig = BleuConfig(),
) -> float:
    """Corpus-style BLEU for one segment, scaled to [0, 100].

    Geometric mean of clipped modified n-gram precisions times the brevity
    penalty. Orders where the candidate has no n-grams are skipped, so a
    candidate identical to a reference scores 100 at any length.
    """
    if not references:
        raise ValueError("bleu requires at least one reference")
    if not candidate:
        return 0.0

    smoothing = cfg.smoothing
    add_k = 0.0
    if isinstance(smoothing, tuple):
        name, add_k = smoothing
        if name != "add_k":
            raise ValueError(f"unknown smoothing {smoothing!r}")
        smoothing = "add_k"
    elif smoothing not in ("none", "exp_decay", "add_k"):
        raise ValueError(f"unknown smoothing {smoothing!r}")
    elif smoothing == "add_k":
        add_k = 1.0

    log_sum = 0.0
    active = 0
    zeros_seen = 0
    for n in range(1, cfg.max_n + 1):
        cand = _ngram_counts(candidate, n)
        total = sum(cand.values())
        if total == 0:
            break
        clipped: Counter = Counter()
        for ref in references:
            clipped |= _ngram_counts(ref, n)
        matches = sum((cand & clipped).values())
        if smoothing == "add_k" and n > 1:
            p = (matches + add_k) / (total + add_k)
        else:
            p = matches / total
        if p == 0.0:
            if smoothing == "exp_decay":
                zeros_seen += 1
                p = 1.0 / (2.0**zeros_seen)
            else:
                return 0.0
        log_sum += math.log(p)
        active += 1
    if active == 0:
        return 0.0

    c = len(candidate)
    # closest reference length; ties resolved toward the shorter reference
    r = min((abs(len(ref) - c), len(ref)) for ref in references)[1]
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    return 100.0 * bp * math.exp(log_sum / active)


def _char_stream(text: str) -> str:
    return "".join(text.split())


def chrf(candidate: str, reference: str, cfg: ChrfConfig = CHRF_DEFAULT) -> float:
    """chrF / chrF++ in [0, 100].

    Character n-grams (orders 1..char_n) are counted on the whitespace-free
    stream; with word_n > 0, word n-grams (punctuation split, case kept) are
    added. P and R are averaged uniformly over orders where either side has
    n-grams, then combined with F-beta.
    """
    cand_stream = _char_stream(candidate)
    ref_stream = _char_stream(reference)
    layers: List[Tuple[Sequence, Sequence, int]] = [
        (cand_stream, ref_stream, cfg.char_n)
    ]
    if cfg.word_n > 0:
        layers.append(
            (
                tokenize_words(candidate, case_sensitive=True),
                tokenize_words(reference, case_sensitive=True),
                cfg.word_n,
            )
        )

    precisions: List[float] = []
    recalls: List[float] = []
    for cand_seq, ref_seq, max_order in layers:
        for n in range(1, max_order + 1):
            cand = _ngram_counts(cand_seq, n)
            ref = _ngram_counts(ref_seq, n)
            cand_total = sum(cand.values())
            ref_total = sum(ref.values())
            if cand_total == 0 and ref_total == 0:
                continue
            overlap = sum((cand & ref).values())
            precisions.append(overlap / cand_total if cand_total else 0.0)
            recalls.append(overlap / ref_total if ref_total else 0.0)

    if not precisions:
        # nothing to compare at any order: both sides empty after stripping
        return 100.0 if cand_stream == ref_stream else 0.0
    p = sum(precisions) / len(precisions)
    r = sum(recalls) / len(recalls)
    if p + r == 0.0:
        return 0.0
    beta_sq = cfg.beta**2
    return 100.0 * (1 + beta_sq) * p * r / (beta_sq * p + r)


def chrfpp(candidate: str, reference: str, beta: float = 2.0) -> float:
    """chrF++ (chrF with word unigrams and bigrams added)."""
    return chrf(candidate, reference, ChrfConfig(beta=beta, word_n=2))


def _apply_case(tokens: Sequence[str], case_sensitive: bool) -> List[str]:
    return list(tokens) if case_sensitive else [t.lower() for t in tokens]


def _edit_distance_tokens(candidate: List[str], reference: List[str]) -> int:
    enc_c, enc_r = _encode_tokens(candidate, reference)
    return kernels.edit_distance(enc_c, enc_r)


def _shift_candidates(
    candidate: List[str], reference: List[str], max_distance: int
) -> List[List[str]]:
    """Enumerate TERCOM-style block shifts of ``candidate``.

    Only blocks that occur verbatim in the reference are moved, and only to
    the positions where they match, within ``max_distance`` of their origin.
    """
    ref_starts: Dict[str, List[int]] = {}
    for idx, tok in enumerate(reference):
        ref_starts.setdefault(tok, []).append(idx)

    results = []
    n = len(candidate)
    for start in range(n):
        limit = min(MAX_SHIFT_BLOCK, n - start)
        for length in range(1, limit + 1):
            block = candidate[start : start + length]
            positions = [
                p
                for p in ref_starts.get(block[0], [])
                if reference[p : p + length] == block
            ]
            if not positions:
                break  # longer blocks starting here cannot match either
            for pos in positions:
                if abs(start - pos) > max_distance:
                    continue
                removed = candidate[:start] + candidate[start + length :]
                insert_at = min(pos, len(removed))
                shifted = removed[:insert_at] + block + removed[insert_at:]
                if shifted != candidate:
                    results.append(shifted)
    return results


def ter(
    candidate: Sequence[str],
    reference: Sequence[str],
    cfg: TerConfig = TerConfig(),
) -> float:
    """Translation edit rate as a percent of reference length (unclamped).

    Edits = insertions + deletions + substitutions + block shifts; the shift
    search is greedy, repeatedly taking the single shift that most reduces
    the remaining edit distance, and stops when no shift strictly helps.
    """
    if not reference:
        raise ValueError("ter is undefined for an empty reference")
    cand = _apply_case(candidate, cfg.case_sensitive)
    ref = _apply_case(reference, cfg.case_sensitive)

    shifts = 0
    distance = _edit_distance_tokens(cand, ref)
    if cfg.shifts_enabled:
        for _ in range(MAX_SHIFT_ITERATIONS):
            if distance == 0:
                break
            best_cand: Optional[List[str]] = None
            best_distance = distance
            for shifted in _shift_candidates(cand, ref, cfg.max_shift_distance):
                d = _edit_distance_tokens(shifted, ref)
                if d < best_distance:
                    best_distance = d
                    best_cand = shifted
            if best_cand is None:
                break
            cand = best_cand
            distance = best_distance
            shifts += 1

    return 100.0 * (distance + shifts) / len(ref)
