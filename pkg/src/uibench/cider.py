"""Consensus-based caption metric over TF-IDF-weighted n-grams.

Pinned to the classic public scorer variant: candidate n-gram counts are
clipped to the reference counts, IDF is log(N) - log(max(1, df)) with df
counted once per item over the union of its references, cosine similarity
is taken per n-gram order with a gaussian length penalty
exp(-(lc - lr)^2 / (2 sigma^2)) on bigram-length difference, scores are
averaged over n = 1..4 and over references, scaled by 10 per item, and the
corpus score is the mean over items.  Reports multiply the corpus score by
100 (the conventional presentation scale).

Tokenization here is lowercasing plus punctuation stripping on whitespace
tokens; the same tokenizer must be applied to candidates and references.
"""

from __future__ import annotations

import math
import re
from collections import Counter, defaultdict
from typing import Sequence

CIDER_VARIANT = "classic-cider-n4-sigma6"

_NON_ALNUM_RE = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation to spaces, split on whitespace."""
    return [t for t in _NON_ALNUM_RE.sub(" ", text.lower()).split() if t]


def _precook(tokens: Sequence[str], n_max: int) -> Counter:
    """Counts of all 1..n_max-grams, keyed by token tuple."""
    counts: Counter = Counter()
    for n in range(1, n_max + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i : i + n])] += 1
    return counts


def cider_scores(
    candidates: Sequence[str],
    references: Sequence[Sequence[str]],
    n_max: int = 4,
    sigma: float = 6.0,
) -> tuple[float, list[float]]:
    """Corpus score and per-item scores.

    Args:
        candidates: one candidate string per item.
        references: one non-empty list of reference strings per item.

    Raises:
        ValueError: length mismatch or an item without references.
    """
    if len(candidates) != len(references):
        raise ValueError(
            f"{len(candidates)} candidates vs {len(references)} reference lists"
        )
    if not candidates:
        raise ValueError("empty corpus")
    for i, refs in enumerate(references):
        if not refs:
            raise ValueError(f"item {i} has no references")

    ctests = [_precook(tokenize(c), n_max) for c in candidates]
    crefs = [[_precook(tokenize(r), n_max) for r in refs] for refs in references]

    # Document frequency: one count per item whose reference set contains
    # the n-gram, regardless of multiplicity.
    df: dict[tuple, float] = defaultdict(float)
    for refs in crefs:
        seen = set(ng for ref in refs for ng in ref)
        for ng in seen:
            df[ng] += 1.0
    ref_len = math.log(float(len(crefs)))

    def counts2vec(cnts: Counter):
        vec = [defaultdict(float) for _ in range(n_max)]
        norm = [0.0] * n_max
        length = 0
        for ng, term_freq in cnts.items():
            idf = ref_len - math.log(max(1.0, df[ng]))
            k = len(ng) - 1
            vec[k][ng] = float(term_freq) * idf
            norm[k] += vec[k][ng] ** 2
            if len(ng) == 2:
                length += term_freq
        return vec, [math.sqrt(v) for v in norm], length

    def sim(vec_h, vec_r, norm_h, norm_r, len_h, len_r):
        delta = float(len_h - len_r)
        val = [0.0] * n_max
        for k in range(n_max):
            for ng, h in vec_h[k].items():
                val[k] += min(h, vec_r[k][ng]) * vec_r[k][ng]
            if norm_h[k] != 0 and norm_r[k] != 0:
                val[k] /= norm_h[k] * norm_r[k]
            val[k] *= math.e ** (-(delta**2) / (2 * sigma**2))
        return val

    scores: list[float] = []
    for ctest, refs in zip(ctests, crefs):
        vec_h, norm_h, len_h = counts2vec(ctest)
        total = [0.0] * n_max
        for ref in refs:
            vec_r, norm_r, len_r = counts2vec(ref)
            part = sim(vec_h, vec_r, norm_h, norm_r, len_h, len_r)
            for k in range(n_max):
                total[k] += part[k]
        score_avg = sum(total) / n_max / len(refs) * 10.0
        scores.append(score_avg)
    return sum(scores) / len(scores), scores


def cider(
    candidates: Sequence[str],
    references: Sequence[Sequence[str]],
    n_max: int = 4,
    sigma: float = 6.0,
) -> float:
    """Corpus-level score (0..10 scale; multiply by 100 for report style)."""
    corpus, _ = cider_scores(candidates, references, n_max=n_max, sigma=sigma)
    return corpus
