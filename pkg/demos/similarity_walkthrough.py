"""Walk through the functional-similarity pipeline step by step.

Shows how two API descriptions become a score: tokenized definitions are
embedded as bag-of-words count vectors, parameter lists are aligned by dtype,
and the two halves average into the final similarity that drives replacement
selection.
"""

import random

from blockforge import (
    ApiSpec,
    ParameterSpec,
    cosine_similarity,
    embed_definition,
    functional_similarity,
    parameter_list_wcr,
    roulette_select,
)
from blockforge.similarity import build_vocabulary


def make_api(name, definition, *dtypes):
    return ApiSpec(
        name=name,
        definition=definition,
        init_snippet=f"{name}()",
        parameters=tuple(
            ParameterSpec(name=f"p{i}", dtype=d) for i, d in enumerate(dtypes)
        ),
    )


def main():
    max_pool = make_api(
        "lib.MaxPool", "max pooling over spatial windows", "int", "int", "string"
    )
    avg_pool = make_api(
        "lib.AvgPool", "average pooling over spatial windows", "int", "int", "string"
    )
    dense = make_api(
        "lib.Dense", "fully connected linear transform", "int", "string", "boolean"
    )

    vocabulary = build_vocabulary(
        [api.definition for api in (max_pool, avg_pool, dense)]
    )
    print("shared vocabulary:", vocabulary)

    v_max = embed_definition(max_pool.definition, vocabulary)
    v_avg = embed_definition(avg_pool.definition, vocabulary)
    v_dense = embed_definition(dense.definition, vocabulary)
    print("\ncount vectors:")
    print("  MaxPool ", v_max)
    print("  AvgPool ", v_avg)
    print("  Dense   ", v_dense)

    print("\ndefinition cosine:")
    print("  MaxPool vs AvgPool", round(cosine_similarity(v_max, v_avg), 4))
    print("  MaxPool vs Dense  ", round(cosine_similarity(v_max, v_dense), 4))

    print("\nparameter alignment (correct / reference length):")
    print(
        "  MaxPool vs AvgPool",
        parameter_list_wcr(max_pool.parameters, avg_pool.parameters),
    )
    print(
        "  MaxPool vs Dense  ",
        parameter_list_wcr(max_pool.parameters, dense.parameters),
    )

    print("\ncombined functional similarity:")
    for other in (avg_pool, dense):
        score = functional_similarity(max_pool, other, vocabulary)
        print(f"  MaxPool vs {other.name}: {score:.4f}")

    candidates = [
        ("lib.AvgPool", functional_similarity(max_pool, avg_pool, vocabulary)),
        ("lib.Dense", functional_similarity(max_pool, dense, vocabulary)),
    ]
    rng = random.Random(0)
    draws = [roulette_select(candidates, rng) for _ in range(1000)]
    print("\nroulette over those scores (1000 draws):")
    for name, _ in candidates:
        print(f"  {name}: {draws.count(name)}")


if __name__ == "__main__":
    main()
