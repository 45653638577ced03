"""Functional similarity between APIs and roulette-wheel candidate selection.

Similarity is the mean of two halves: cosine similarity of the definition
embeddings, and the word-correctness rate of the two parameter lists under a
minimal-edit alignment where parameters match iff their dtypes agree.
"""

from __future__ import annotations

import re
from typing import Callable, Sequence

import numpy as np

from .errors import SelectionError
from .kb import ApiSpec, KnowledgeBase, ParameterSpec

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# A pluggable embedder maps definition text to a vector; the default is a
# deterministic bag-of-words over the KB definition corpus.
Embedder = Callable[[str], np.ndarray]


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def build_vocabulary(definitions: Sequence[str]) -> tuple[str, ...]:
    """Sorted token set over the whole definition corpus."""
    vocab = set()
    for text in definitions:
        vocab.update(tokenize(text))
    return tuple(sorted(vocab))


def kb_vocabulary(kb: KnowledgeBase) -> tuple[str, ...]:
    return build_vocabulary([spec.definition for spec in kb.values()])


def embed_definition(text: str, vocabulary: Sequence[str]) -> np.ndarray:
    """Token-count bag-of-words vector over the given vocabulary order."""
    index = {tok: i for i, tok in enumerate(vocabulary)}
    vec = np.zeros(len(vocabulary), dtype=float)
    for tok in tokenize(text):
        i = index.get(tok)
        if i is not None:
            vec[i] += 1.0
    return vec


def cosine_similarity(v1: np.ndarray, v2: np.ndarray) -> float:
    if v1.shape != v2.shape:
        raise ValueError("embedding dimensions differ")
    n1 = float(np.linalg.norm(v1))
    n2 = float(np.linalg.norm(v2))
    if n1 == 0.0 or n2 == 0.0:
        return 0.0
    return float(np.dot(v1, v2) / (n1 * n2))


def parameter_list_wcr(
    reference: Sequence[ParameterSpec], hypothesis: Sequence[ParameterSpec]
) -> float:
    """C / N1 under a minimal-edit alignment matching parameters by dtype.

    Among minimal-cost alignments the one maximizing the match count C is
    chosen, so C (and with it S and D, since N1 = S + D + C) is well defined.
    """
    if not reference:
        raise ValueError("reference parameter list must be non-empty")
    ref = [p.dtype for p in reference]
    hyp = [p.dtype for p in hypothesis]
    n, m = len(ref), len(hyp)
    # DP over (cost, -matches); lexicographic minimum maximizes matches among
    # minimal-cost alignments.
    INF = (n + m + 1, 0)
    best = [[INF] * (m + 1) for _ in range(n + 1)]
    best[0][0] = (0, 0)
    for i in range(n + 1):
        for j in range(m + 1):
            cur = best[i][j]
            if cur == INF:
                continue
            cost, neg_c = cur
            if i < n and j < m:
                if ref[i] == hyp[j]:
                    cand = (cost, neg_c - 1)  # match
                else:
                    cand = (cost + 1, neg_c)  # substitution
                if cand < best[i + 1][j + 1]:
                    best[i + 1][j + 1] = cand
            if i < n:  # deletion from reference
                cand = (cost + 1, neg_c)
                if cand < best[i + 1][j]:
                    best[i + 1][j] = cand
            if j < m:  # insertion
                cand = (cost + 1, neg_c)
                if cand < best[i][j + 1]:
                    best[i][j + 1] = cand
    matches = -best[n][m][1]
    return matches / n


def functional_similarity(
    a1: ApiSpec, a2: ApiSpec, vocabulary: Sequence[str]
) -> float:
    sim_def = cosine_similarity(
        embed_definition(a1.definition, vocabulary),
        embed_definition(a2.definition, vocabulary),
    )
    sim_para = parameter_list_wcr(a1.parameters, a2.parameters)
    return (sim_def + sim_para) / 2.0


def roulette_select(candidates: Sequence[tuple[str, float]], rng) -> str:
    """Fitness-proportionate draw over (name, score) pairs.

    Interval order is shuffled first, then a single uniform draw over
    [0, sum of scores) picks the owning interval.
    """
    usable = [(name, score) for name, score in candidates if score > 0.0]
    if not usable:
        raise SelectionError("no candidates with positive score")
    order = list(usable)
    rng.shuffle(order)
    total = sum(score for _, score in order)
    u = rng.random() * total
    acc = 0.0
    for name, score in order:
        acc += score
        if u < acc:
            return name
    return order[-1][0]


def ranked_similarity(kb: KnowledgeBase, api_name: str) -> list[tuple[str, float]]:
    """Similarity list for one API, preferring precomputed KB entries.

    Falls back to computing functional similarity against every other KB API
    with the default embedder when the spec carries no Similarity section.
    """
    spec = kb[api_name]
    if spec.similarity:
        return sorted(spec.similarity, key=lambda e: (-e[1], e[0]))
    vocab = kb_vocabulary(kb)
    scores = [
        (other.name, functional_similarity(spec, other, vocab))
        for other in kb.values()
        if other.name != api_name
    ]
    return sorted(scores, key=lambda e: (-e[1], e[0]))
