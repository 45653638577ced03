"""Seed disassembly into template + code blocks, and block re-assembly.

Seeds are Python-syntax source files that build, train, and evaluate a model.
Only a micro-grammar is interpreted: imports, single-target assignments, and
call expressions. Everything else is carried as opaque lines. A template keeps
the input/output layer construction, training, and evaluation code verbatim,
with one ordered slot per hidden-layer block.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional, Sequence

from .errors import AssemblyError, DisassemblyError, LayerMappingError

MARKER_PREFIX = "# blockforge:"
MARKER_BLOCK_BEGIN = "# blockforge: block-begin"
MARKER_BLOCK_END = "# blockforge: block-end"
MARKER_SLOT = "# blockforge: slot"


# ---------------------------------------------------------------------------
# Call expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArgValue:
    """One argument: either a parsed literal or an opaque expression text."""

    is_literal: bool
    value: Any = None
    text: str = ""

    @classmethod
    def literal(cls, value):
        return cls(is_literal=True, value=value)

    @classmethod
    def opaque(cls, text):
        return cls(is_literal=False, text=text)

    def render(self) -> str:
        if self.is_literal:
            return repr(self.value)
        return self.text


@dataclass(frozen=True)
class CallExpression:
    """A single API construction call, possibly assigned and applied.

    ``x = ml.layers.Dense(units=4, activation='relu')(x)`` parses into
    target ``x``, callee ``ml.layers.Dense``, one keyword argument, and the
    trailing application ``(x)`` carried verbatim.
    """

    callee_source: str
    callee_fqn: str
    args: tuple[ArgValue, ...] = ()
    kwargs: tuple[tuple[str, ArgValue], ...] = ()
    target: Optional[str] = None
    application: str = ""
    indent: str = ""
    line_no: int = 0

    def kwarg(self, name: str) -> Optional[ArgValue]:
        for k, v in self.kwargs:
            if k == name:
                return v
        return None

    def render(self) -> str:
        parts = [a.render() for a in self.args]
        parts += [f"{k}={v.render()}" for k, v in self.kwargs]
        call = f"{self.callee_source}({', '.join(parts)}){self.application}"
        if self.target is not None:
            return f"{self.indent}{self.target} = {call}"
        return f"{self.indent}{call}"


def _dotted_name(node) -> Optional[str]:
    if isinstance(node, ast.Name):
        return node.id
    if isinstance(node, ast.Attribute):
        base = _dotted_name(node.value)
        return None if base is None else f"{base}.{node.attr}"
    return None


def _arg_value(node) -> ArgValue:
    try:
        return ArgValue.literal(ast.literal_eval(node))
    except (ValueError, TypeError, SyntaxError):
        return ArgValue.opaque(ast.unparse(node))


def resolve_alias(name: str, aliases: dict[str, str]) -> str:
    """Expand the leading import alias of a dotted name, if any."""
    parts = name.split(".")
    for cut in range(len(parts), 0, -1):
        prefix = ".".join(parts[:cut])
        if prefix in aliases:
            rest = parts[cut:]
            return ".".join([aliases[prefix]] + rest)
    return name


def unresolve_alias(fqn: str, aliases: dict[str, str]) -> str:
    """Render a fully-qualified name using the seed's import aliases."""
    best = None
    for alias, target in aliases.items():
        if fqn == target or fqn.startswith(target + "."):
            if best is None or len(target) > len(aliases[best]):
                best = alias
    if best is None:
        return fqn
    target = aliases[best]
    return best + fqn[len(target):]


def parse_call_line(
    line: str, aliases: Optional[dict[str, str]] = None, line_no: int = 0
) -> Optional[CallExpression]:
    """Parse one source line under the micro-grammar; None if not a call line."""
    aliases = aliases or {}
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    indent = line[: len(line) - len(line.lstrip())]
    try:
        tree = ast.parse(stripped)
    except SyntaxError:
        return None
    if len(tree.body) != 1:
        return None
    stmt = tree.body[0]
    target = None
    if isinstance(stmt, ast.Assign):
        if len(stmt.targets) != 1:
            return None
        target = _dotted_name(stmt.targets[0])
        if target is None:
            return None
        value = stmt.value
    elif isinstance(stmt, ast.Expr):
        value = stmt.value
    else:
        return None
    if not isinstance(value, ast.Call):
        return None
    application = ""
    call = value
    if isinstance(call.func, ast.Call):
        # Construction call immediately applied, e.g. Dense(4)(x).
        application = "(" + ", ".join(ast.unparse(a) for a in call.args) + ")"
        call = call.func
    callee = _dotted_name(call.func)
    if callee is None:
        return None
    args = tuple(_arg_value(a) for a in call.args)
    kwargs = tuple(
        (kw.arg, _arg_value(kw.value)) for kw in call.keywords if kw.arg is not None
    )
    return CallExpression(
        callee_source=callee,
        callee_fqn=resolve_alias(callee, aliases),
        args=args,
        kwargs=kwargs,
        target=target,
        application=application,
        indent=indent,
        line_no=line_no,
    )


def parse_imports(lines: Sequence[str]) -> dict[str, str]:
    """Alias map (local name -> fully-qualified prefix) from import lines."""
    aliases: dict[str, str] = {}
    for line in lines:
        stripped = line.strip()
        if not (stripped.startswith("import ") or stripped.startswith("from ")):
            continue
        try:
            tree = ast.parse(stripped)
        except SyntaxError:
            continue
        for stmt in tree.body:
            if isinstance(stmt, ast.Import):
                for a in stmt.names:
                    aliases[a.asname or a.name] = a.name
            elif isinstance(stmt, ast.ImportFrom) and stmt.module:
                for a in stmt.names:
                    aliases[a.asname or a.name] = f"{stmt.module}.{a.name}"
    return aliases


# ---------------------------------------------------------------------------
# Seed files and manifests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeedFile:
    path: Optional[str]
    lines: tuple[str, ...]
    style: str  # "sequential" | "class-based"

    @classmethod
    def from_text(cls, text: str, path=None, style: Optional[str] = None):
        lines = tuple(text.splitlines())
        if not any(line.strip() for line in lines):
            raise DisassemblyError("seed file is empty")
        if style is None:
            style = (
                "class-based"
                if any(line.lstrip().startswith("class ") for line in lines)
                else "sequential"
            )
        return cls(path=str(path) if path else None, lines=lines, style=style)

    @classmethod
    def from_path(cls, path, style: Optional[str] = None):
        return cls.from_text(Path(path).read_text(), path=path, style=style)

    @property
    def aliases(self) -> dict[str, str]:
        return parse_imports(self.lines)


@dataclass(frozen=True)
class SeedManifest:
    """Per-seed run settings consumed by the runner shim."""

    dataset_path: str = ""
    input_shape: tuple[int, ...] = ()
    train_samples: int = 100
    epochs: int = 1

    @classmethod
    def from_path(cls, path):
        doc = json.loads(Path(path).read_text())
        return cls(
            dataset_path=doc.get("dataset_path", ""),
            input_shape=tuple(doc.get("input_shape", ())),
            train_samples=int(doc.get("train_samples", 100)),
            epochs=int(doc.get("epochs", 1)),
        )

    def to_dict(self):
        return {
            "dataset_path": self.dataset_path,
            "input_shape": list(self.input_shape),
            "train_samples": self.train_samples,
            "epochs": self.epochs,
        }


# ---------------------------------------------------------------------------
# Code blocks and templates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CodeBlock:
    id: str
    call: CallExpression
    source_lines: tuple[str, ...]
    use_line: Optional[str] = None  # class style: verbatim use-site line
    bound_variable: Optional[str] = None
    alias_map: tuple[tuple[str, str], ...] = ()

    @property
    def aliases(self) -> dict[str, str]:
        return dict(self.alias_map)

    def definition_lines(self) -> tuple[str, ...]:
        return self.source_lines

    def rendered_mutation_line(self) -> str:
        """The construction line as the call expression currently renders."""
        return self.call.render()


# Template elements: ("line", text) | ("slot", index) | ("slot_use", index).
# For sequential seeds a slot occupies one position; for class-based seeds the
# definition slot sits in the constructor and the matching use slot in the
# structure-building method.

@dataclass(frozen=True)
class Template:
    id: str
    elements: tuple[tuple, ...]
    open_slots: tuple[int, ...]

    @property
    def slot_count(self) -> int:
        return len(self.open_slots)

    def next_slot(self) -> Optional[int]:
        return self.open_slots[0] if self.open_slots else None

    def render(self) -> str:
        out = []
        for el in self.elements:
            if el[0] == "line":
                out.append(el[1].rstrip())
            elif el[0] == "filled":
                out.extend(line.rstrip() for line in el[2])
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class AssembledTest:
    source: str
    template_id: str
    block_id: str
    mutation_id: Optional[str] = None


def assemble(template: Template, block: CodeBlock) -> tuple[AssembledTest, Template]:
    """Insert the block into the next open slot; return the rendered program
    plus the successor template with that slot fixed."""
    slot = template.next_slot()
    if slot is None:
        raise AssemblyError(f"template {template.id} has no open slot")
    new_elements = []
    for el in template.elements:
        if el[0] == "slot" and el[1] == slot:
            new_elements.append(("filled", slot, tuple(block.source_lines)))
        elif el[0] == "slot_use" and el[1] == slot:
            use = (block.use_line,) if block.use_line is not None else ()
            new_elements.append(("filled", slot, use))
        else:
            new_elements.append(el)
    successor = Template(
        id=f"{template.id}+{block.id}",
        elements=tuple(new_elements),
        open_slots=template.open_slots[1:],
    )
    assembled = AssembledTest(
        source=successor.render(),
        template_id=template.id,
        block_id=block.id,
    )
    return assembled, successor


# ---------------------------------------------------------------------------
# Disassembly
# ---------------------------------------------------------------------------

def _kb_namespaces(kb) -> set[str]:
    return {name.rsplit(".", 1)[0] for name in kb}


def _is_candidate(call: Optional[CallExpression], namespaces: set[str]) -> bool:
    if call is None or "." not in call.callee_fqn:
        return False
    return call.callee_fqn.rsplit(".", 1)[0] in namespaces


def disassemble_seed(seed: SeedFile, kb) -> tuple[Template, list[CodeBlock]]:
    """Split a seed into a slotted template and its hidden-layer code blocks."""
    if seed.style == "class-based":
        return _disassemble_class_based(seed, kb)
    if any(line.strip().startswith(MARKER_PREFIX) for line in seed.lines):
        return _disassemble_marked(seed, kb)
    return _disassemble_sequential(seed, kb)


def _candidate_lines(seed: SeedFile, kb) -> list[tuple[int, CallExpression]]:
    aliases = seed.aliases
    namespaces = _kb_namespaces(kb)
    found = []
    for i, line in enumerate(seed.lines):
        call = parse_call_line(line, aliases, line_no=i + 1)
        if _is_candidate(call, namespaces):
            if call.callee_fqn not in kb:
                raise DisassemblyError(
                    f"line {i + 1}: unknown API {call.callee_fqn!r}"
                )
            found.append((i, call))
    return found


def _block_from_line(idx: int, line: str, call: CallExpression, seed: SeedFile,
                     block_no: int) -> CodeBlock:
    return CodeBlock(
        id=f"b{block_no}",
        call=call,
        source_lines=(line,),
        bound_variable=call.target,
        alias_map=tuple(sorted(seed.aliases.items())),
    )


def _disassemble_sequential(seed: SeedFile, kb) -> tuple[Template, list[CodeBlock]]:
    candidates = _candidate_lines(seed, kb)
    if len(candidates) < 3:
        raise DisassemblyError(
            "seed needs an input layer, an output layer, and at least one "
            f"hidden layer; found {len(candidates)} layer construction line(s)"
        )
    hidden = candidates[1:-1]  # input and output layers stay in the template
    hidden_idx = {i for i, _ in hidden}
    elements = []
    blocks = []
    slot = 0
    for i, line in enumerate(seed.lines):
        if i in hidden_idx:
            call = next(c for j, c in hidden if j == i)
            blocks.append(_block_from_line(i, line, call, seed, slot + 1))
            elements.append(("slot", slot))
            slot += 1
        else:
            elements.append(("line", line))
    return (
        Template(id="t0", elements=tuple(elements), open_slots=tuple(range(slot))),
        blocks,
    )


def _disassemble_marked(seed: SeedFile, kb) -> tuple[Template, list[CodeBlock]]:
    """Marker-comment override: blocks are the explicitly delimited regions."""
    aliases = seed.aliases
    elements = []
    blocks = []
    slot = 0
    i = 0
    lines = seed.lines
    while i < len(lines):
        stripped = lines[i].strip()
        if stripped == MARKER_BLOCK_BEGIN:
            j = i + 1
            region = []
            while j < len(lines) and lines[j].strip() != MARKER_BLOCK_END:
                region.append((j, lines[j]))
                j += 1
            if j == len(lines):
                raise DisassemblyError(f"line {i + 1}: unterminated block marker")
            calls = [
                (k, parse_call_line(line, aliases, line_no=k + 1))
                for k, line in region
            ]
            known = [(k, c) for k, c in calls if c is not None and c.callee_fqn in kb]
            if len(known) != 1:
                raise DisassemblyError(
                    f"line {i + 1}: marked block must contain exactly one "
                    f"knowledge-base API call, found {len(known)}"
                )
            _, call = known[0]
            blocks.append(
                CodeBlock(
                    id=f"b{slot + 1}",
                    call=call,
                    source_lines=tuple(line for _, line in region),
                    bound_variable=call.target,
                    alias_map=tuple(sorted(aliases.items())),
                )
            )
            elements.append(("slot", slot))
            slot += 1
            i = j + 1
        elif stripped == MARKER_SLOT:
            elements.append(("slot", slot))
            slot += 1
            i += 1
        else:
            elements.append(("line", lines[i]))
            i += 1
    if not blocks:
        raise DisassemblyError("no marked blocks found")
    return (
        Template(id="t0", elements=tuple(elements), open_slots=tuple(range(slot))),
        blocks,
    )


def map_class_style_layers(seed: SeedFile) -> dict[str, tuple[int, int]]:
    """Pair each constructor-assigned layer identifier with its single use
    site in the structure-building method; values are line indices."""
    if seed.style != "class-based":
        raise LayerMappingError("seed is not class-based")
    ctor_range, builder_range = _class_method_ranges(seed)
    aliases = seed.aliases
    definitions: dict[str, int] = {}
    for i in range(*ctor_range):
        call = parse_call_line(seed.lines[i], aliases, line_no=i + 1)
        if call is not None and call.target and call.target.startswith("self."):
            definitions[call.target[len("self."):]] = i
    uses: dict[str, list[int]] = {name: [] for name in definitions}
    for i in range(*builder_range):
        line = seed.lines[i]
        for name in definitions:
            if f"self.{name}(" in line:
                uses[name].append(i)
    mapping = {}
    for name, def_line in definitions.items():
        sites = uses[name]
        if not sites:
            raise LayerMappingError(
                f"layer {name!r} defined on line {def_line + 1} but never used"
            )
        if len(sites) > 1:
            listed = ", ".join(str(s + 1) for s in sites)
            raise LayerMappingError(
                f"layer {name!r} used more than once (lines {listed}); "
                "weight sharing is unsupported"
            )
        mapping[name] = (def_line, sites[0])
    return mapping


def _class_method_ranges(seed: SeedFile) -> tuple[tuple[int, int], tuple[int, int]]:
    """Line ranges of the constructor and the structure-building method."""
    defs = []
    for i, line in enumerate(seed.lines):
        stripped = line.lstrip()
        if stripped.startswith("def "):
            name = stripped[4:].split("(", 1)[0].strip()
            defs.append((name, i))
    spans = {}
    for idx, (name, start) in enumerate(defs):
        end = defs[idx + 1][1] if idx + 1 < len(defs) else len(seed.lines)
        spans[name] = (start + 1, end)
    if "__init__" not in spans:
        raise LayerMappingError("class-based seed has no __init__")
    builder = next((n for n, _ in defs if n != "__init__"), None)
    if builder is None:
        raise LayerMappingError("class-based seed has no structure-building method")
    return spans["__init__"], spans[builder]


def _disassemble_class_based(seed: SeedFile, kb) -> tuple[Template, list[CodeBlock]]:
    mapping = map_class_style_layers(seed)
    aliases = seed.aliases
    namespaces = _kb_namespaces(kb)
    # Order layers by their use site: that is the model structure order.
    ordered = sorted(mapping.items(), key=lambda kv: kv[1][1])
    layer_entries = []
    for name, (def_idx, use_idx) in ordered:
        call = parse_call_line(seed.lines[def_idx], aliases, line_no=def_idx + 1)
        if _is_candidate(call, namespaces):
            if call.callee_fqn not in kb:
                raise DisassemblyError(
                    f"line {def_idx + 1}: unknown API {call.callee_fqn!r}"
                )
            layer_entries.append((name, def_idx, use_idx, call))
    if len(layer_entries) < 3:
        raise DisassemblyError(
            "class-based seed needs an input layer, an output layer, and at "
            f"least one hidden layer; found {len(layer_entries)}"
        )
    hidden = layer_entries[1:-1]
    slot_by_def = {def_idx: s for s, (_, def_idx, _, _) in enumerate(hidden)}
    slot_by_use = {use_idx: s for s, (_, _, use_idx, _) in enumerate(hidden)}
    blocks = [
        CodeBlock(
            id=f"b{s + 1}",
            call=call,
            source_lines=(seed.lines[def_idx],),
            use_line=seed.lines[use_idx],
            bound_variable=name,
            alias_map=tuple(sorted(aliases.items())),
        )
        for s, (name, def_idx, use_idx, call) in enumerate(hidden)
    ]
    elements = []
    for i, line in enumerate(seed.lines):
        if i in slot_by_def:
            elements.append(("slot", slot_by_def[i]))
        elif i in slot_by_use:
            elements.append(("slot_use", slot_by_use[i]))
        else:
            elements.append(("line", line))
    return (
        Template(
            id="t0", elements=tuple(elements), open_slots=tuple(range(len(hidden)))
        ),
        blocks,
    )


# ---------------------------------------------------------------------------
# Incremental verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerificationStep:
    step: int
    block_id: str
    state: Any  # ExecutionState


@dataclass(frozen=True)
class VerificationReport:
    steps: tuple[VerificationStep, ...]
    accepted: bool

    @property
    def failed_step(self) -> Optional[VerificationStep]:
        for s in self.steps:
            if not s.state.is_success():
                return s
        return None


def verify_incremental_assembly(
    template: Template, blocks: Sequence[CodeBlock], runner
) -> VerificationReport:
    """Re-assemble the seed block by block, running each partial program.

    The runner is called exactly once per block; the disassembly is accepted
    only if every step executes successfully.
    """
    steps = []
    current = template
    for i, block in enumerate(blocks, start=1):
        assembled, current = assemble(current, block)
        state = runner(assembled)
        steps.append(VerificationStep(step=i, block_id=block.id, state=state))
        if not state.is_success():
            return VerificationReport(steps=tuple(steps), accepted=False)
    return VerificationReport(steps=tuple(steps), accepted=True)
