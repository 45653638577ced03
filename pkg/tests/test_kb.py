import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockforge.errors import ConstraintError, KnowledgeBaseError, NotSampleable
from blockforge.kb import (
    ApiSpec,
    ConstraintSpec,
    ParameterSpec,
    ValueRange,
    dump_api_spec,
    evaluate_constraint,
    load_api_file,
    load_knowledge_base,
    parse_range,
    sample_illegal_boundary_value,
    sample_legal_value,
)

FIXTURES = Path(__file__).parent / "fixtures"


def test_load_lstm_fixture():
    kb = load_knowledge_base(FIXTURES / "kb_lstm")
    spec = kb["tf.keras.layers.LSTM"]
    assert spec.similarity[0] == ("tf.keras.layers.LSTMCell", 0.7150709480047226)
    activation = spec.parameter("activation")
    assert activation.dtype == "enum"
    assert set(activation.enum_values) == {"tanh", "None"}
    assert len(spec.constraints) == 1


def test_empty_directory_gives_empty_map(tmp_path):
    assert load_knowledge_base(tmp_path) == {}


def test_similarity_score_out_of_bounds(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text(
        "name: lib.A\ndefinition: a layer\ninit: lib.A()\n"
        "Similarity:\n  lib.B: 1.3\n"
    )
    with pytest.raises(KnowledgeBaseError) as exc:
        load_knowledge_base(tmp_path)
    assert "score ∈ [0,1]" in str(exc.value)
    assert exc.value.line == 5


def test_duplicate_api_name(tmp_path):
    for fname in ("a.yaml", "b.yaml"):
        (tmp_path / fname).write_text("name: lib.A\ndefinition: x\ninit: lib.A()\n")
    with pytest.raises(KnowledgeBaseError, match="duplicate API name"):
        load_knowledge_base(tmp_path)


def test_malformed_yaml_reports_file_and_line(tmp_path):
    bad = tmp_path / "broken.yaml"
    bad.write_text("name: lib.A\n  bogus indent: [\n")
    with pytest.raises(KnowledgeBaseError) as exc:
        load_knowledge_base(tmp_path)
    assert "broken.yaml" in str(exc.value)


def test_constraint_referencing_unknown_parameter(tmp_path):
    (tmp_path / "a.yaml").write_text(
        "name: lib.A\ndefinition: x\ninit: lib.A()\n"
        "Parameters:\n  p:\n    dtype: int\n"
        "Constrains:\n"
        "  - Parameter 1: p\n"
        "    Parameter 2: ghost\n"
        "    Constrain: \"p == 1\"\n"
    )
    with pytest.raises(KnowledgeBaseError, match="unknown parameter"):
        load_knowledge_base(tmp_path)


def test_roundtrip_serialization(tmp_path):
    kb = load_knowledge_base(FIXTURES / "kb_lstm")
    spec = kb["tf.keras.layers.LSTM"]
    out = tmp_path / "dump.yaml"
    out.write_text(dump_api_spec(spec))
    assert load_api_file(out) == spec


# --- constraint mini-language --------------------------------------------

UNIT_FORGET = ConstraintSpec(
    param_a="unit_forget_bias",
    param_b="bias_initializer",
    predicate="if unit_forget_bias == true then bias_initializer == 'zeros'",
)


def test_constraint_satisfied():
    ok = {"unit_forget_bias": True, "bias_initializer": "zeros"}
    assert evaluate_constraint(UNIT_FORGET, ok) is True


def test_constraint_vacuous_antecedent():
    vac = {"unit_forget_bias": False, "bias_initializer": "ones"}
    assert evaluate_constraint(UNIT_FORGET, vac) is True


def test_constraint_violated():
    bad = {"unit_forget_bias": True, "bias_initializer": "ones"}
    assert evaluate_constraint(UNIT_FORGET, bad) is False


def test_constraint_unbound_parameter():
    with pytest.raises(ConstraintError, match="unbound"):
        evaluate_constraint(UNIT_FORGET, {"unit_forget_bias": True})


def test_constraint_type_mismatch():
    spec = ConstraintSpec(param_a="a", param_b="b", predicate="a == b")
    with pytest.raises(ConstraintError, match="mismatch"):
        evaluate_constraint(spec, {"a": True, "b": 3})


def test_constraint_boolean_operators():
    spec = ConstraintSpec(param_a="a", param_b="b", predicate="a < 2 and not b > 5")
    assert evaluate_constraint(spec, {"a": 1, "b": 3}) is True
    assert evaluate_constraint(spec, {"a": 1, "b": 9}) is False


def test_constraint_is_deterministic():
    b = {"unit_forget_bias": True, "bias_initializer": "zeros"}
    assert all(evaluate_constraint(UNIT_FORGET, b) for _ in range(5))


# --- range parsing ---------------------------------------------------------

def test_parse_interval_range():
    r = parse_range("[0, 1]")
    assert r.contains(0) and r.contains(1) and not r.contains(1.01)


def test_parse_open_range():
    r = parse_range("(0, inf)")
    assert not r.contains(0) and r.contains(1e9)


def test_parse_comparison_range():
    r = parse_range(">= 1")
    assert r.contains(1) and not r.contains(0)


def test_no_mention_range_is_none():
    assert parse_range("No mention") is None


def test_inverted_range_rejected():
    with pytest.raises(ValueError):
        ValueRange(low=2, high=1)


# --- sampling ---------------------------------------------------------------

def _float_param(lo, hi, **kw):
    return ParameterSpec(name="p", dtype="float", range=ValueRange(lo, hi, **kw))


def test_sample_legal_float_in_unit_interval():
    param = _float_param(0.0, 1.0)
    rng = random.Random(7)
    for _ in range(50):
        v = sample_legal_value(param, rng)
        assert 0.0 <= v <= 1.0


def test_sample_legal_boolean():
    param = ParameterSpec(name="p", dtype="boolean")
    rng = random.Random(7)
    assert {sample_legal_value(param, rng) for _ in range(20)} == {True, False}


def test_sample_legal_enum_member():
    param = ParameterSpec(name="p", dtype="enum", enum_values=("tanh", "None"))
    rng = random.Random(7)
    for _ in range(10):
        assert sample_legal_value(param, rng) in ("tanh", "None")


def test_unsampleable_parameter_signals():
    param = ParameterSpec(name="p", dtype="string")
    with pytest.raises(NotSampleable):
        sample_legal_value(param, random.Random(0))


def test_boundary_float_lower_side_is_negative():
    param = _float_param(0.0, 1.0)
    rng = random.Random(3)
    seen = {sample_illegal_boundary_value(param, rng) for _ in range(40)}
    assert any(v < 0 for v in seen)
    assert all(not param.value_is_legal(v) for v in seen)


def test_boundary_int_one_below_inclusive_low():
    param = ParameterSpec(name="k", dtype="int", range=ValueRange(low=1))
    assert sample_illegal_boundary_value(param, random.Random(0)) == 0


def test_boundary_enum_probe_absent_from_enum():
    param = ParameterSpec(name="p", dtype="enum", enum_values=("tanh", "None"))
    probe = sample_illegal_boundary_value(param, random.Random(0))
    assert probe not in param.enum_values


def test_boundary_unbounded_param_signals():
    param = ParameterSpec(name="p", dtype="int")
    with pytest.raises(NotSampleable):
        sample_illegal_boundary_value(param, random.Random(0))


@st.composite
def ranged_params(draw):
    dtype = draw(st.sampled_from(["int", "float"]))
    lo = draw(st.integers(min_value=-50, max_value=50))
    width = draw(st.integers(min_value=2, max_value=60))
    return ParameterSpec(
        name="p",
        dtype=dtype,
        range=ValueRange(low=lo, high=lo + width),
    )


@settings(max_examples=100, deadline=None)
@given(ranged_params(), st.integers(min_value=0, max_value=2**32 - 1))
def test_sampling_property_legal_vs_boundary(param, seed):
    rng = random.Random(seed)
    legal = sample_legal_value(param, rng)
    illegal = sample_illegal_boundary_value(param, rng)
    assert param.value_is_legal(legal)
    assert not param.value_is_legal(illegal)


def test_apispec_rejects_duplicate_parameter_names():
    p = ParameterSpec(name="x", dtype="int")
    with pytest.raises(ValueError, match="duplicate"):
        ApiSpec(
            name="lib.A",
            definition="",
            init_snippet="",
            parameters=(p, p),
        )
