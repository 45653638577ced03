import math
import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from blockforge.errors import SelectionError
from blockforge.kb import ApiSpec, ParameterSpec
from blockforge.similarity import (
    build_vocabulary,
    cosine_similarity,
    embed_definition,
    functional_similarity,
    parameter_list_wcr,
    roulette_select,
)


def params(*dtypes):
    return tuple(
        ParameterSpec(name=f"p{i}", dtype=d) for i, d in enumerate(dtypes)
    )


def brute_force_wcr(ref_dtypes, hyp_dtypes):
    """Independent oracle: enumerate every monotone alignment explicitly."""
    outcomes = []

    def walk(i, j, cost, matches):
        if i == len(ref_dtypes) and j == len(hyp_dtypes):
            outcomes.append((cost, matches))
            return
        if i < len(ref_dtypes) and j < len(hyp_dtypes):
            if ref_dtypes[i] == hyp_dtypes[j]:
                walk(i + 1, j + 1, cost, matches + 1)
            else:
                walk(i + 1, j + 1, cost + 1, matches)
        if i < len(ref_dtypes):
            walk(i + 1, j, cost + 1, matches)
        if j < len(hyp_dtypes):
            walk(i, j + 1, cost + 1, matches)

    walk(0, 0, 0, 0)
    min_cost = min(c for c, _ in outcomes)
    best_matches = max(m for c, m in outcomes if c == min_cost)
    return best_matches / len(ref_dtypes)


# --- embedding -------------------------------------------------------------

def test_embed_counts_tokens():
    vec = embed_definition("max pooling layer", ("layer", "max", "pooling"))
    assert vec.tolist() == [1.0, 1.0, 1.0]


def test_embed_empty_text_is_zero_vector():
    vec = embed_definition("", ("layer", "max", "pooling"))
    assert not vec.any()


def test_embed_repeated_tokens():
    vec = embed_definition("pooling pooling layer", ("layer", "max", "pooling"))
    assert vec.tolist() == [1.0, 0.0, 2.0]


def test_vocabulary_is_sorted_union():
    vocab = build_vocabulary(["max pooling", "Pooling layer"])
    assert vocab == ("layer", "max", "pooling")


# --- cosine ----------------------------------------------------------------

def test_cosine_identical_direction():
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0


def test_cosine_orthogonal():
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_cosine_45_degrees():
    got = cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
    assert got == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-12)


def test_cosine_zero_vector_defined_as_zero():
    assert cosine_similarity(np.zeros(3), np.ones(3)) == 0.0


def test_cosine_symmetric_and_scale_invariant():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.random(5)
        b = rng.random(5)
        assert cosine_similarity(a, b) == pytest.approx(cosine_similarity(b, a))
        assert cosine_similarity(a, 3.7 * b) == pytest.approx(
            cosine_similarity(a, b)
        )


# --- WCR -------------------------------------------------------------------

def test_wcr_identity():
    p = params("int", "int", "string")
    assert parameter_list_wcr(p, p) == 1.0


def test_wcr_total_deletion():
    assert parameter_list_wcr(params("int", "int", "string"), ()) == 0.0


def test_wcr_single_substitution():
    got = parameter_list_wcr(
        params("int", "int", "string"), params("int", "float", "string")
    )
    assert got == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_wcr_empty_reference_is_error():
    with pytest.raises(ValueError):
        parameter_list_wcr((), params("int"))


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.sampled_from(["int", "float", "boolean", "string"]), min_size=1, max_size=6),
    st.lists(st.sampled_from(["int", "float", "boolean", "string"]), max_size=6),
)
def test_wcr_matches_brute_force_oracle(ref, hyp):
    got = parameter_list_wcr(params(*ref), params(*hyp))
    assert got == pytest.approx(brute_force_wcr(ref, hyp), abs=1e-9)


# --- functional similarity --------------------------------------------------

def _api(name, definition, *dtypes):
    return ApiSpec(
        name=name,
        definition=definition,
        init_snippet=f"{name}()",
        parameters=params(*dtypes),
    )


def test_functional_similarity_self_is_one():
    a = _api("lib.A", "max pooling layer", "int", "float")
    vocab = build_vocabulary([a.definition])
    assert functional_similarity(a, a, vocab) == pytest.approx(1.0)


def test_functional_similarity_fully_disjoint_is_zero():
    a = _api("lib.A", "max pooling", "int", "int")
    b = _api("lib.B", "recurrent cell", "string", "string")
    vocab = build_vocabulary([a.definition, b.definition])
    assert functional_similarity(a, b, vocab) == 0.0


def test_functional_similarity_mixed_components():
    # Definitions at 45 degrees (cos = 1/sqrt(2)), parameter WCR = 2/3.
    a = _api("lib.A", "pooling", "int", "int", "string")
    b = _api("lib.B", "pooling layer", "int", "float", "string")
    vocab = build_vocabulary([a.definition, b.definition])
    expected = (1.0 / math.sqrt(2.0) + 2.0 / 3.0) / 2.0
    assert functional_similarity(a, b, vocab) == pytest.approx(expected, abs=1e-9)


def test_functional_similarity_bounded():
    rng = random.Random(11)
    dtypes = ["int", "float", "boolean", "string"]
    corpus = ["max pooling", "dense layer", "dropout regularization"]
    apis = [
        _api(f"lib.X{i}", rng.choice(corpus), *rng.choices(dtypes, k=rng.randint(1, 4)))
        for i in range(6)
    ]
    vocab = build_vocabulary([a.definition for a in apis])
    for a in apis:
        for b in apis:
            assert 0.0 <= functional_similarity(a, b, vocab) <= 1.0 + 1e-12


# --- roulette ----------------------------------------------------------------

def test_roulette_single_candidate():
    assert roulette_select([("A", 0.7)], random.Random(0)) == "A"


def test_roulette_empty_candidates_error():
    with pytest.raises(SelectionError):
        roulette_select([], random.Random(0))


def test_roulette_all_zero_scores_error():
    with pytest.raises(SelectionError):
        roulette_select([("A", 0.0), ("B", 0.0)], random.Random(0))


def test_roulette_deterministic_with_fixed_seed():
    cands = [("A", 0.6), ("B", 0.4), ("C", 0.2)]
    first = [roulette_select(cands, random.Random(42)) for _ in range(10)]
    assert len(set(first)) == 1


def test_roulette_empirical_frequency():
    cands = [("A", 0.6), ("B", 0.4)]
    rng = random.Random(1234)
    hits = sum(roulette_select(cands, rng) == "A" for _ in range(10_000))
    assert abs(hits / 10_000 - 0.6) <= 0.015


def test_roulette_chi_square_goodness_of_fit():
    scores = {"A": 0.5, "B": 0.3, "C": 0.1, "D": 0.07, "E": 0.03}
    cands = list(scores.items())
    rng = random.Random(99)
    draws = Counter(roulette_select(cands, rng) for _ in range(10_000))
    total_score = sum(scores.values())
    observed = [draws[name] for name in scores]
    expected = [10_000 * s / total_score for s in scores.values()]
    _, p = stats.chisquare(observed, expected)
    assert p > 0.01
