"""Block mutation operators: API replacement (AR), random legal-value
generation (RG), and boundary-violating value generation (BC).

Each emitted variant differs from its source block at exactly one argument or
at the callee name, so an oracle violation pins down a single trigger.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Any, Optional

from .code_model import ArgValue, CodeBlock
from .errors import NotApplicable, NotSampleable, RemapError, SelectionError
from .kb import (
    ApiSpec,
    KnowledgeBase,
    ParameterSpec,
    evaluate_constraint,
    sample_illegal_boundary_value,
    sample_legal_value,
)
from .code_model import unresolve_alias
from .similarity import roulette_select

log = logging.getLogger(__name__)

OPERATORS = ("AR", "RG", "BC", "IDENTITY")

DEFAULT_BC_CAP = 3
DEFAULT_CONSTRAINT_RETRIES = 16


@dataclass(frozen=True)
class MutationRecord:
    operator: str
    api: str
    parameter: Optional[str] = None
    old_value: Any = None
    new_value: Any = None
    expected_state: str = "positive"

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise ValueError(f"unknown operator {self.operator!r}")
        expected = "negative" if self.operator == "BC" else "positive"
        if self.expected_state != expected:
            raise ValueError(
                f"{self.operator} records must have expected_state {expected!r}"
            )

    def to_dict(self):
        return {
            "operator": self.operator,
            "api": self.api,
            "parameter": self.parameter,
            "old_value": self.old_value,
            "new_value": self.new_value,
            "expected_state": self.expected_state,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(**doc)

    @classmethod
    def identity(cls, api):
        return cls(operator="IDENTITY", api=api)


def _current_bindings(block: CodeBlock, spec: ApiSpec) -> dict[str, Any]:
    """Literal argument values by parameter name, with KB defaults filled in."""
    bindings: dict[str, Any] = {}
    for p in spec.parameters:
        if p.has_default:
            bindings[p.name] = p.default
    for i, arg in enumerate(block.call.args):
        if i < len(spec.parameters) and arg.is_literal:
            bindings[spec.parameters[i].name] = arg.value
    for name, arg in block.call.kwargs:
        if arg.is_literal:
            bindings[name] = arg.value
    return bindings


def _set_parameter(block: CodeBlock, spec: ApiSpec, name: str,
                   value: Any) -> CodeBlock:
    """New block whose call binds `name` to `value`; all else byte-identical."""
    call = block.call
    new_arg = ArgValue.literal(value)
    pos = next(
        (i for i, p in enumerate(spec.parameters) if p.name == name), None
    )
    if pos is not None and pos < len(call.args):
        args = tuple(
            new_arg if i == pos else a for i, a in enumerate(call.args)
        )
        new_call = replace(call, args=args)
    elif call.kwarg(name) is not None:
        kwargs = tuple(
            (k, new_arg if k == name else v) for k, v in call.kwargs
        )
        new_call = replace(call, kwargs=kwargs)
    else:
        new_call = replace(call, kwargs=call.kwargs + ((name, new_arg),))
    return replace(
        block, call=new_call, source_lines=(new_call.render(),)
    )


def _old_value(block: CodeBlock, spec: ApiSpec, name: str):
    pos = next(
        (i for i, p in enumerate(spec.parameters) if p.name == name), None
    )
    if pos is not None and pos < len(block.call.args):
        arg = block.call.args[pos]
    else:
        arg = block.call.kwarg(name)
    if arg is None:
        return None
    return arg.value if arg.is_literal else arg.text


# ---------------------------------------------------------------------------
# AR
# ---------------------------------------------------------------------------

def mutate_api_replacement(
    block: CodeBlock, kb: KnowledgeBase, rng
) -> tuple[CodeBlock, MutationRecord]:
    """Replace the callee by a roulette draw over its similarity list and
    remap the arguments by parameter name."""
    old_name = block.call.callee_fqn
    spec = kb.get(old_name)
    if spec is None or not spec.similarity:
        raise NotApplicable(f"{old_name} has no similarity list")
    candidates = [(n, s) for n, s in spec.similarity if n in kb and s > 0.0]
    if not candidates:
        raise NotApplicable(f"{old_name}: no similar API present in the KB")
    try:
        new_name = roulette_select(candidates, rng)
    except SelectionError as exc:
        raise NotApplicable(str(exc)) from exc
    new_spec = kb[new_name]

    old_args: dict[str, ArgValue] = {}
    for i, arg in enumerate(block.call.args):
        if i < len(spec.parameters):
            old_args[spec.parameters[i].name] = arg
    for name, arg in block.call.kwargs:
        old_args[name] = arg

    kwargs = []
    for p in new_spec.parameters:
        if p.name in old_args:
            kwargs.append((p.name, old_args[p.name]))
        elif p.has_default:
            kwargs.append((p.name, ArgValue.literal(p.default)))
        else:
            raise RemapError(
                f"{new_name}: required parameter {p.name!r} has no default "
                f"and no counterpart in {old_name}"
            )
    new_call = replace(
        block.call,
        callee_source=unresolve_alias(new_name, block.aliases),
        callee_fqn=new_name,
        args=(),
        kwargs=tuple(kwargs),
    )
    new_block = replace(
        block, call=new_call, source_lines=(new_call.render(),)
    )
    record = MutationRecord(
        operator="AR", api=old_name, old_value=old_name, new_value=new_name
    )
    return new_block, record


# ---------------------------------------------------------------------------
# RG
# ---------------------------------------------------------------------------

def _rg_sampleable(p: ParameterSpec) -> bool:
    if p.enum_values or p.dtype == "boolean":
        return True
    return p.is_numeric() and p.range is not None


def mutate_random_generation(
    block: CodeBlock,
    kb: KnowledgeBase,
    rng,
    retries: int = DEFAULT_CONSTRAINT_RETRIES,
) -> tuple[CodeBlock, MutationRecord]:
    """Reassign one uniformly chosen parameter to a fresh legal value that
    satisfies every KB constraint of the API."""
    api_name = block.call.callee_fqn
    spec = kb.get(api_name)
    if spec is None:
        raise NotApplicable(f"unknown API {api_name}")
    sampleable = [p for p in spec.parameters if _rg_sampleable(p)]
    if not sampleable:
        raise NotApplicable(f"{api_name} has no sampleable parameter")
    param = sampleable[rng.randrange(len(sampleable))]
    base = _current_bindings(block, spec)
    for _ in range(retries):
        try:
            value = sample_legal_value(param, rng)
        except NotSampleable as exc:
            raise NotApplicable(str(exc)) from exc
        bindings = dict(base)
        bindings[param.name] = value
        if _constraints_hold(spec, bindings):
            new_block = _set_parameter(block, spec, param.name, value)
            record = MutationRecord(
                operator="RG",
                api=api_name,
                parameter=param.name,
                old_value=_old_value(block, spec, param.name),
                new_value=value,
            )
            return new_block, record
    raise NotApplicable(
        f"{api_name}.{param.name}: no constraint-satisfying value in "
        f"{retries} tries"
    )


def _constraints_hold(spec: ApiSpec, bindings) -> bool:
    for c in spec.constraints:
        if c.param_a in bindings and c.param_b in bindings:
            if not evaluate_constraint(c, bindings):
                return False
    return True


# ---------------------------------------------------------------------------
# BC
# ---------------------------------------------------------------------------

def _bc_boundable(p: ParameterSpec) -> bool:
    if p.enum_values:
        return True
    return (
        p.is_numeric()
        and p.range is not None
        and bool(p.range.finite_bounds())
    )


def mutate_boundary_checking(
    block: CodeBlock, kb: KnowledgeBase, rng, cap: int = DEFAULT_BC_CAP
) -> list[tuple[CodeBlock, MutationRecord]]:
    """One negative variant per boundable parameter, in declaration order,
    capped at `cap` parameters."""
    api_name = block.call.callee_fqn
    spec = kb.get(api_name)
    if spec is None:
        return []
    out = []
    boundable = [p for p in spec.parameters if _bc_boundable(p)][:cap]
    for param in boundable:
        value = sample_illegal_boundary_value(param, rng)
        new_block = _set_parameter(block, spec, param.name, value)
        record = MutationRecord(
            operator="BC",
            api=api_name,
            parameter=param.name,
            old_value=_old_value(block, spec, param.name),
            new_value=value,
            expected_state="negative",
        )
        out.append((new_block, record))
    return out


# ---------------------------------------------------------------------------
# Combined variant generation
# ---------------------------------------------------------------------------

def generate_block_variants(
    block: CodeBlock,
    times_mt: int,
    kb: KnowledgeBase,
    rng,
    ar_weight: float = 0.5,
    bc_cap: int = DEFAULT_BC_CAP,
    retries: int = DEFAULT_CONSTRAINT_RETRIES,
) -> list[tuple[CodeBlock, MutationRecord]]:
    """Identity variant + times_mt AR/RG variants + their BC negatives.

    Each positive slot flips a coin between AR and RG and falls back to the
    other operator when the first is not applicable.
    """
    if times_mt < 1:
        raise ValueError("times_mt must be >= 1")
    variants: list[tuple[CodeBlock, MutationRecord]] = [
        (block, MutationRecord.identity(block.call.callee_fqn))
    ]
    positives = 0
    for k in range(1, times_mt + 1):
        first = "AR" if rng.random() < ar_weight else "RG"
        order = (first, "RG" if first == "AR" else "AR")
        produced = None
        for op in order:
            try:
                if op == "AR":
                    produced = mutate_api_replacement(block, kb, rng)
                else:
                    produced = mutate_random_generation(block, kb, rng, retries)
                break
            except (NotApplicable, RemapError) as exc:
                log.debug("%s not applicable for %s: %s", op, block.id, exc)
        if produced is None:
            continue
        new_block, record = produced
        new_block = replace(new_block, id=f"{block.id}.m{k}")
        variants.append((new_block, record))
        positives += 1
        for j, (neg_block, neg_record) in enumerate(
            mutate_boundary_checking(new_block, kb, rng, cap=bc_cap), start=1
        ):
            neg_block = replace(neg_block, id=f"{new_block.id}.bc{j}")
            variants.append((neg_block, neg_record))
    if positives == 0:
        log.warning(
            "no mutation operator applicable for block %s (%s); "
            "identity-only output",
            block.id,
            block.call.callee_fqn,
        )
    return variants
