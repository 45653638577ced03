"""API knowledge base: per-API metadata files that drive the mutation operators.

Each API is described by one YAML document holding its prose definition, a
canonical invocation snippet, a similarity list over other APIs, a parameter
table (dtype / default / range / enum / structure / shape), and cross-parameter
constraints written in a small predicate language.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

import yaml

from .errors import ConstraintError, KnowledgeBaseError, NotSampleable

NO_MENTION = "No mention"

DTYPES = ("int", "float", "boolean", "string", "enum", "tensor-shape")
STRUCTURES = ("scalar", "list", "tuple", "ndarray", "unspecified")

Literal = Union[int, float, bool, str, None]

# Probe emitted for enum parameters by boundary sampling; guaranteed absent
# from any documented enum by suffixing if needed.
BC_ENUM_PROBE = "___bc_probe"

_INT_BC_DELTA = 1


# ---------------------------------------------------------------------------
# Value ranges
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValueRange:
    """Numeric legal range with per-bound inclusivity; missing bound = None."""

    low: Optional[float] = None
    high: Optional[float] = None
    low_inclusive: bool = True
    high_inclusive: bool = True

    def __post_init__(self):
        if self.low is None and self.high is None:
            raise ValueError("range needs at least one bound")
        if self.low is not None and self.high is not None and self.low > self.high:
            raise ValueError("range.low must not exceed range.high")

    def contains(self, value) -> bool:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            return False
        if self.low is not None:
            if value < self.low or (value == self.low and not self.low_inclusive):
                return False
        if self.high is not None:
            if value > self.high or (value == self.high and not self.high_inclusive):
                return False
        return True

    def finite_bounds(self) -> list[tuple[str, float, bool]]:
        """(side, bound, inclusive) for every finite bound."""
        out = []
        if self.low is not None and math.isfinite(self.low):
            out.append(("low", self.low, self.low_inclusive))
        if self.high is not None and math.isfinite(self.high):
            out.append(("high", self.high, self.high_inclusive))
        return out

    def render(self) -> str:
        lo = "-inf" if self.low is None else _render_number(self.low)
        hi = "inf" if self.high is None else _render_number(self.high)
        lb = "[" if self.low_inclusive and self.low is not None else "("
        rb = "]" if self.high_inclusive and self.high is not None else ")"
        return f"{lb}{lo}, {hi}{rb}"


def _render_number(x) -> str:
    if isinstance(x, float) and x.is_integer():
        return str(int(x))
    return str(x)


_RANGE_INTERVAL = re.compile(
    r"^\s*([\[(])\s*([^,\s]+)\s*,\s*([^,\s\])]+)\s*([\])])\s*$"
)
_RANGE_COMPARISON = re.compile(r"^\s*(<=|>=|<|>)\s*([^\s]+)\s*$")


def _parse_bound(text: str) -> Optional[float]:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return None
    if t in ("-inf", "-infinity"):
        return None
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            raise ValueError(f"bad range bound {text!r}")


def parse_range(text: str) -> Optional[ValueRange]:
    """Parse a range string; returns None for the "No mention" marker.

    Accepted forms: interval notation "[0, 1]", "(0, inf)", "[1, inf)" and
    single comparisons ">= 1", "> 0", "<= 5", "< 1".
    """
    if text.strip() == NO_MENTION:
        return None
    m = _RANGE_INTERVAL.match(text)
    if m:
        lb, lo_s, hi_s, rb = m.groups()
        lo = _parse_bound(lo_s)
        hi = _parse_bound(hi_s)
        return ValueRange(
            low=lo,
            high=hi,
            low_inclusive=(lb == "[") if lo is not None else True,
            high_inclusive=(rb == "]") if hi is not None else True,
        )
    m = _RANGE_COMPARISON.match(text)
    if m:
        op, bound_s = m.groups()
        bound = _parse_bound(bound_s)
        if bound is None:
            raise ValueError(f"comparison range needs a finite bound: {text!r}")
        if op in (">", ">="):
            return ValueRange(low=bound, low_inclusive=(op == ">="))
        return ValueRange(high=bound, high_inclusive=(op == "<="))
    raise ValueError(f"unrecognized range syntax: {text!r}")


# ---------------------------------------------------------------------------
# Constraint mini-language
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>-?\d+\.\d*|-?\.\d+|-?\d+)"
    r"|(?P<str>'[^']*'|\"[^\"]*\")"
    r"|(?P<op>==|!=|<=|>=|≤|≥|<|>|\(|\))"
    r"|(?P<word>[A-Za-z_][A-Za-z0-9_]*))"
)

_KEYWORDS = {"if", "then", "and", "or", "not", "true", "false"}


def _tokenize(src: str) -> list[tuple[str, Any]]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            if src[pos:].strip() == "":
                break
            raise ConstraintError(f"bad token at {src[pos:pos + 12]!r}")
        pos = m.end()
        if m.lastgroup == "num":
            text = m.group("num")
            tokens.append(("lit", float(text) if ("." in text) else int(text)))
        elif m.lastgroup == "str":
            tokens.append(("lit", m.group("str")[1:-1]))
        elif m.lastgroup == "op":
            op = m.group("op").replace("≤", "<=").replace("≥", ">=")
            tokens.append(("op", op))
        else:
            word = m.group("word")
            low = word.lower()
            if low in ("true", "false"):
                tokens.append(("lit", low == "true"))
            elif low in _KEYWORDS:
                tokens.append(("kw", low))
            else:
                tokens.append(("ident", word))
    return tokens


class _Predicate:
    """Parsed predicate AST; nodes are nested tuples."""

    def __init__(self, ast, identifiers: frozenset[str], source: str):
        self.ast = ast
        self.identifiers = identifiers
        self.source = source

    def evaluate(self, bindings: Mapping[str, Literal]) -> bool:
        value = _eval_node(self.ast, bindings)
        if not isinstance(value, bool):
            raise ConstraintError(
                f"predicate does not evaluate to a boolean: {self.source!r}"
            )
        return value


def parse_predicate(source: str) -> _Predicate:
    tokens = _tokenize(source)
    parser = _Parser(tokens, source)
    ast = parser.parse_expr()
    if parser.pos != len(tokens):
        raise ConstraintError(f"trailing tokens in predicate: {source!r}")
    idents = set()
    _collect_idents(ast, idents)
    return _Predicate(ast, frozenset(idents), source)


class _Parser:
    def __init__(self, tokens, source):
        self.tokens = tokens
        self.source = source
        self.pos = 0

    def _peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def _take(self, kind, value=None):
        k, v = self._peek()
        if k != kind or (value is not None and v != value):
            raise ConstraintError(
                f"expected {value or kind} in predicate: {self.source!r}"
            )
        self.pos += 1
        return v

    def parse_expr(self):
        k, v = self._peek()
        if k == "kw" and v == "if":
            self._take("kw", "if")
            antecedent = self.parse_or()
            self._take("kw", "then")
            consequent = self.parse_expr()
            return ("implies", antecedent, consequent)
        return self.parse_or()

    def parse_or(self):
        node = self.parse_and()
        while self._peek() == ("kw", "or"):
            self._take("kw", "or")
            node = ("or", node, self.parse_and())
        return node

    def parse_and(self):
        node = self.parse_not()
        while self._peek() == ("kw", "and"):
            self._take("kw", "and")
            node = ("and", node, self.parse_not())
        return node

    def parse_not(self):
        if self._peek() == ("kw", "not"):
            self._take("kw", "not")
            return ("not", self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self):
        left = self.parse_atom()
        k, v = self._peek()
        if k == "op" and v in ("==", "!=", "<", "<=", ">", ">="):
            self._take("op")
            right = self.parse_atom()
            return ("cmp", v, left, right)
        return left

    def parse_atom(self):
        k, v = self._peek()
        if k == "lit":
            self.pos += 1
            return ("lit", v)
        if k == "ident":
            self.pos += 1
            return ("ident", v)
        if k == "op" and v == "(":
            self._take("op", "(")
            node = self.parse_expr()
            self._take("op", ")")
            return node
        raise ConstraintError(f"expected value in predicate: {self.source!r}")


def _collect_idents(node, out: set):
    if node[0] == "ident":
        out.add(node[1])
    elif node[0] == "lit":
        pass
    else:
        for child in node[1:]:
            if isinstance(child, tuple):
                _collect_idents(child, out)


def _type_class(value):
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, str):
        return "string"
    return "none"


def _eval_node(node, bindings):
    tag = node[0]
    if tag == "lit":
        return node[1]
    if tag == "ident":
        name = node[1]
        if name not in bindings:
            raise ConstraintError(f"unbound parameter {name!r}")
        return bindings[name]
    if tag == "implies":
        if not _as_bool(_eval_node(node[1], bindings)):
            return True
        return _as_bool(_eval_node(node[2], bindings))
    if tag == "or":
        return _as_bool(_eval_node(node[1], bindings)) or _as_bool(
            _eval_node(node[2], bindings)
        )
    if tag == "and":
        return _as_bool(_eval_node(node[1], bindings)) and _as_bool(
            _eval_node(node[2], bindings)
        )
    if tag == "not":
        return not _as_bool(_eval_node(node[1], bindings))
    if tag == "cmp":
        op = node[1]
        left = _eval_node(node[2], bindings)
        right = _eval_node(node[3], bindings)
        lt, rt = _type_class(left), _type_class(right)
        if lt != rt:
            raise ConstraintError(f"type mismatch: cannot compare {lt} with {rt}")
        if op in ("<", "<=", ">", ">=") and lt not in ("number",):
            raise ConstraintError(f"ordering comparison needs numbers, got {lt}")
        return {
            "==": lambda a, b: a == b,
            "!=": lambda a, b: a != b,
            "<": lambda a, b: a < b,
            "<=": lambda a, b: a <= b,
            ">": lambda a, b: a > b,
            ">=": lambda a, b: a >= b,
        }[op](left, right)
    raise ConstraintError(f"bad predicate node {tag!r}")


def _as_bool(value):
    if not isinstance(value, bool):
        raise ConstraintError("boolean operator applied to a non-boolean value")
    return value


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParameterSpec:
    name: str
    dtype: str
    default: Literal = None
    has_default: bool = False
    range: Optional[ValueRange] = None
    enum_values: tuple[str, ...] = ()
    structure: str = "unspecified"
    shape: Optional[int] = None

    def __post_init__(self):
        if self.dtype not in DTYPES:
            raise ValueError(f"unknown dtype {self.dtype!r}")
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}")
        if self.dtype == "enum" and not self.enum_values:
            raise ValueError("enum dtype requires non-empty enum_values")

    def is_numeric(self) -> bool:
        return self.dtype in ("int", "float")

    def value_is_legal(self, value) -> bool:
        """In-range / in-enum check for a concrete value."""
        if self.enum_values:
            return value in self.enum_values
        if self.dtype == "boolean":
            return isinstance(value, bool)
        if self.is_numeric() and self.range is not None:
            return self.range.contains(value)
        # No documented restriction: anything type-compatible passes.
        return True


@dataclass(frozen=True)
class ConstraintSpec:
    param_a: str
    param_b: str
    predicate: str
    _parsed: _Predicate = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        parsed = parse_predicate(self.predicate)
        extra = parsed.identifiers - {self.param_a, self.param_b}
        if extra:
            raise ValueError(
                f"constraint references unknown parameter(s) {sorted(extra)}"
            )
        object.__setattr__(self, "_parsed", parsed)


def evaluate_constraint(spec: ConstraintSpec, bindings: Mapping[str, Literal]) -> bool:
    """True iff the bindings satisfy the constraint predicate."""
    for name in (spec.param_a, spec.param_b):
        if name not in bindings:
            raise ConstraintError(f"unbound parameter {name!r}")
    parsed = spec._parsed or parse_predicate(spec.predicate)
    return parsed.evaluate(bindings)


@dataclass(frozen=True)
class ApiSpec:
    name: str
    definition: str
    init_snippet: str
    parameters: tuple[ParameterSpec, ...]
    constraints: tuple[ConstraintSpec, ...] = ()
    similarity: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        names = [p.name for p in self.parameters]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ValueError(f"duplicate parameter name(s) {sorted(dupes)}")
        for other, score in self.similarity:
            if not (0.0 <= score <= 1.0):
                raise ValueError(
                    f"similarity {other!r}: score ∈ [0,1] violated by {score}"
                )
            if other == self.name:
                raise ValueError("similarity list must not contain a self-pair")
        known = set(names)
        for c in self.constraints:
            for ref in (c.param_a, c.param_b):
                if ref not in known:
                    raise ValueError(
                        f"constraint references unknown parameter {ref!r}"
                    )

    def parameter(self, name: str) -> Optional[ParameterSpec]:
        for p in self.parameters:
            if p.name == name:
                return p
        return None


KnowledgeBase = dict[str, ApiSpec]


# ---------------------------------------------------------------------------
# File loading / serialization
# ---------------------------------------------------------------------------

_KB_SUFFIXES = (".yaml", ".yml")


def load_knowledge_base(dir_path) -> KnowledgeBase:
    """Load every KB YAML file under dir_path into a name -> ApiSpec map."""
    root = Path(dir_path)
    kb: KnowledgeBase = {}
    for path in sorted(p for p in root.iterdir() if p.suffix in _KB_SUFFIXES):
        spec = load_api_file(path)
        if spec.name in kb:
            raise KnowledgeBaseError(
                f"duplicate API name {spec.name!r}", path=path, rule="unique api name"
            )
        kb[spec.name] = spec
    return kb


def load_api_file(path) -> ApiSpec:
    path = Path(path)
    text = path.read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        line = None
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            line = mark.line + 1
        raise KnowledgeBaseError(
            f"invalid YAML: {exc}", path=path, line=line, rule="yaml syntax"
        ) from exc
    if not isinstance(doc, dict):
        raise KnowledgeBaseError(
            "document must be a mapping", path=path, line=1, rule="document shape"
        )

    def fail(message, rule, needle=None):
        raise KnowledgeBaseError(
            message, path=path, line=_find_line(text, needle), rule=rule
        )

    name = doc.get("name")
    if not isinstance(name, str) or not name:
        fail("missing or empty 'name'", "name required", "name")
    definition = str(doc.get("definition") or "")
    init_snippet = str(doc.get("init") or "")

    similarity = []
    for other, score in (doc.get("Similarity") or {}).items():
        if not isinstance(score, (int, float)) or not (0.0 <= float(score) <= 1.0):
            fail(
                f"similarity {other!r}: score ∈ [0,1] violated by {score!r}",
                "score ∈ [0,1]",
                str(other),
            )
        similarity.append((str(other), float(score)))

    parameters = []
    for pname, body in (doc.get("Parameters") or {}).items():
        parameters.append(_parse_parameter(str(pname), body or {}, fail))

    constraints = []
    for entry in doc.get("Constrains") or []:
        if not isinstance(entry, dict):
            fail("constraint entries must be mappings", "constraint shape", "Constrains")
        try:
            constraints.append(
                ConstraintSpec(
                    param_a=str(entry["Parameter 1"]),
                    param_b=str(entry["Parameter 2"]),
                    predicate=str(entry["Constrain"]),
                )
            )
        except KeyError as exc:
            fail(f"constraint missing key {exc}", "constraint keys", "Constrains")
        except (ValueError, ConstraintError) as exc:
            fail(str(exc), "constraint predicate", str(entry.get("Constrain", "")))

    try:
        return ApiSpec(
            name=name,
            definition=definition,
            init_snippet=init_snippet,
            parameters=tuple(parameters),
            constraints=tuple(constraints),
            similarity=tuple(similarity),
        )
    except ValueError as exc:
        fail(str(exc), "api spec invariant", name)


def _parse_parameter(name, body, fail) -> ParameterSpec:
    if not isinstance(body, dict):
        fail(f"parameter {name!r} must map to a table", "parameter shape", name)
    dtype = str(body.get("dtype", "string"))
    # Tolerate library-prefixed dtypes such as "tf.string".
    dtype = dtype.rsplit(".", 1)[-1]
    aliases = {"bool": "boolean", "str": "string"}
    dtype = aliases.get(dtype, dtype)
    enum = body.get("enum")
    enum_values = tuple(str(v) for v in enum) if enum else ()
    if enum_values and dtype in ("string",):
        dtype = "enum"
    if dtype not in DTYPES:
        fail(f"parameter {name!r}: unknown dtype {dtype!r}", "dtype", name)
    range_text = body.get("range")
    rng = None
    if range_text is not None and str(range_text).strip() != NO_MENTION:
        try:
            rng = parse_range(str(range_text))
        except ValueError as exc:
            fail(f"parameter {name!r}: {exc}", "range syntax", name)
    structure = str(body.get("structure", "unspecified"))
    if structure == NO_MENTION:
        structure = "unspecified"
    if structure not in STRUCTURES:
        fail(f"parameter {name!r}: unknown structure {structure!r}", "structure", name)
    shape = body.get("shape")
    if shape is None or str(shape).strip() == NO_MENTION:
        shape_val = None
    else:
        try:
            shape_val = int(shape)
        except (TypeError, ValueError):
            fail(f"parameter {name!r}: bad shape {shape!r}", "shape", name)
    has_default = "default" in body
    default = body.get("default")
    if isinstance(default, str) and default == "None":
        default = None
    try:
        return ParameterSpec(
            name=name,
            dtype=dtype,
            default=default,
            has_default=has_default,
            range=rng,
            enum_values=enum_values,
            structure=structure,
            shape=shape_val,
        )
    except ValueError as exc:
        fail(f"parameter {name!r}: {exc}", "parameter invariant", name)


def _find_line(text: str, needle: Optional[str]) -> int:
    if needle:
        for i, line in enumerate(text.splitlines(), start=1):
            if needle in line:
                return i
    return 1


def dump_api_spec(spec: ApiSpec) -> str:
    """Serialize an ApiSpec back to the KB YAML layout."""
    doc: dict[str, Any] = {
        "name": spec.name,
        "definition": spec.definition,
        "init": spec.init_snippet,
    }
    if spec.similarity:
        doc["Similarity"] = {n: s for n, s in spec.similarity}
    params: dict[str, Any] = {}
    for p in spec.parameters:
        body: dict[str, Any] = {"dtype": p.dtype}
        if p.has_default:
            body["default"] = "None" if p.default is None else p.default
        if p.enum_values:
            body["enum"] = list(p.enum_values)
        if p.range is not None:
            body["range"] = p.range.render()
        if p.structure != "unspecified":
            body["structure"] = p.structure
        if p.shape is not None:
            body["shape"] = p.shape
        params[p.name] = body
    if params:
        doc["Parameters"] = params
    if spec.constraints:
        doc["Constrains"] = [
            {
                "Parameter 1": c.param_a,
                "Parameter 2": c.param_b,
                "Constrain": c.predicate,
            }
            for c in spec.constraints
        ]
    return yaml.safe_dump(doc, sort_keys=False, allow_unicode=True)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_legal_value(param: ParameterSpec, rng) -> Literal:
    """Draw a literal satisfying the parameter's documented dtype and range."""
    if param.enum_values:
        return rng.choice(list(param.enum_values))
    if param.dtype == "boolean":
        return rng.choice([False, True])
    if param.is_numeric() and param.range is not None:
        return _sample_in_range(param, rng)
    if param.has_default:
        return param.default
    raise NotSampleable(
        f"parameter {param.name!r} has no usable range, enum, or default"
    )


def _sample_in_range(param: ParameterSpec, rng):
    r = param.range
    lo, hi = r.low, r.high
    span = 10 if param.dtype == "float" else 100
    if param.dtype == "int":
        lo_i = None if lo is None else math.ceil(lo) + (
            1 if (lo == math.ceil(lo) and not r.low_inclusive) else 0
        )
        hi_i = None if hi is None else math.floor(hi) - (
            1 if (hi == math.floor(hi) and not r.high_inclusive) else 0
        )
        if lo_i is None:
            lo_i = hi_i - span
        if hi_i is None:
            hi_i = lo_i + span
        if lo_i > hi_i:
            raise NotSampleable(f"parameter {param.name!r}: empty integer range")
        return rng.randint(lo_i, hi_i)
    # float
    lo_f = lo if lo is not None else hi - span
    hi_f = hi if hi is not None else lo + span
    for _ in range(32):
        v = rng.uniform(lo_f, hi_f)
        if r.contains(v):
            return v
    mid = (lo_f + hi_f) / 2.0
    if r.contains(mid):
        return mid
    raise NotSampleable(f"parameter {param.name!r}: degenerate float range")


def sample_illegal_boundary_value(
    param: ParameterSpec, rng, float_delta_factor: float = 0.1
) -> Literal:
    """Draw a literal just outside the legal range (or off-enum)."""
    if param.enum_values:
        probe = BC_ENUM_PROBE
        while probe in param.enum_values:
            probe += "_"
        return probe
    if param.is_numeric() and param.range is not None:
        bounds = param.range.finite_bounds()
        if bounds:
            side, bound, inclusive = rng.choice(bounds)
            if param.dtype == "int":
                bound = int(bound)
                if not inclusive:
                    return bound
                return bound - _INT_BC_DELTA if side == "low" else bound + _INT_BC_DELTA
            delta = float_delta_factor * max(1.0, abs(bound))
            if not inclusive:
                return float(bound)
            return float(bound - delta) if side == "low" else float(bound + delta)
    raise NotSampleable(
        f"parameter {param.name!r} has no finite bound and is not an enum"
    )
