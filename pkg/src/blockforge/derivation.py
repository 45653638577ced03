"""Level-by-level derivation tree: variant generation, execution, and
equivalence-class pruning.

Level i of the tree inserts a variant of the i-th seed block into every
surviving positive node of level i-1. Negative (boundary-probe) nodes never
derive children. Identity variants form a guaranteed-valid backbone: an
identity node only continues the backbone with its own identity child and
does not fan out mutated children, which keeps the positive-node count of the
unpruned tree at 1 + n + n^2 + ... + n^m.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .code_model import AssembledTest, CodeBlock, Template, assemble
from .errors import InfrastructureError
from .executor import ExecutionState, source_hash
from .kb import KnowledgeBase
from .mutation import (
    DEFAULT_BC_CAP,
    MutationRecord,
    generate_block_variants,
)

IDENTITY_CLASS = ("identity",)


@dataclass
class DerivationNode:
    id: str
    level: int
    parent_id: Optional[str]
    template: Template
    inserted_block: Optional[CodeBlock]
    mutation: Optional[MutationRecord]
    assembled: AssembledTest
    expected_state: str  # "positive" | "negative"
    observed: Optional[ExecutionState] = None

    @property
    def is_root(self) -> bool:
        return self.mutation is None

    @property
    def is_identity(self) -> bool:
        return self.mutation is not None and self.mutation.operator == "IDENTITY"

    @property
    def is_mutated_positive(self) -> bool:
        return self.mutation is not None and self.mutation.operator in ("AR", "RG")

    def executed_ok(self) -> bool:
        return self.observed is not None and self.observed.is_success()

    def to_json_dict(self) -> dict:
        observed = None
        if self.observed is not None:
            observed = {
                "kind": self.observed.kind.value,
                "exception_type": self.observed.exception_type,
                "message": self.observed.message,
            }
        return {
            "id": self.id,
            "parent": self.parent_id,
            "level": self.level,
            "mutation": self.mutation.to_dict() if self.mutation else None,
            "expected_state": self.expected_state,
            "observed": observed,
            "source_sha": source_hash(self.assembled.source),
        }


@dataclass
class DerivationTree:
    root_id: str
    nodes: dict[str, DerivationNode] = field(default_factory=dict)
    children: dict[str, list[str]] = field(default_factory=dict)
    survivors: dict[int, set[str]] = field(default_factory=dict)
    _counter: int = 0

    @property
    def root(self) -> DerivationNode:
        return self.nodes[self.root_id]

    @property
    def levels(self) -> int:
        return 1 + max(n.level for n in self.nodes.values())

    def next_id(self) -> str:
        nid = f"n{self._counter:05d}"
        self._counter += 1
        return nid

    def add(self, node: DerivationNode) -> None:
        if node.parent_id is not None:
            parent = self.nodes[node.parent_id]
            if parent.level != node.level - 1:
                raise ValueError("parent must sit one level above the child")
            if parent.expected_state == "negative":
                raise ValueError("negative nodes must not have children")
            self.children.setdefault(node.parent_id, []).append(node.id)
        self.nodes[node.id] = node

    def at_level(self, level: int) -> list[DerivationNode]:
        return sorted(
            (n for n in self.nodes.values() if n.level == level),
            key=lambda n: n.id,
        )

    def positive_node_count(self, include_identity: bool = False) -> int:
        count = 0
        for node in self.nodes.values():
            if node.expected_state != "positive":
                continue
            if node.is_identity and not include_identity:
                continue
            count += 1
        return count

    def executed_nodes(self) -> list[DerivationNode]:
        return sorted(
            (n for n in self.nodes.values() if n.observed is not None),
            key=lambda n: n.id,
        )


def make_root(tree_template: Template) -> tuple[DerivationTree, DerivationNode]:
    """Root node: the bare template with every slot still open."""
    assembled = AssembledTest(
        source=tree_template.render(),
        template_id=tree_template.id,
        block_id="",
    )
    tree = DerivationTree(root_id="n00000")
    root = DerivationNode(
        id=tree.next_id(),
        level=0,
        parent_id=None,
        template=tree_template,
        inserted_block=None,
        mutation=None,
        assembled=assembled,
        expected_state="positive",
    )
    tree.add(root)
    tree.survivors[0] = {root.id}
    return tree, root


def derive_level(
    tree: DerivationTree,
    level: int,
    next_block: CodeBlock,
    times_mt: int,
    kb: KnowledgeBase,
    rng_seed,
    executor,
    ar_weight: float = 0.5,
    bc_cap: int = DEFAULT_BC_CAP,
) -> DerivationTree:
    """Append one level of variants under every surviving positive parent,
    then execute the new nodes.

    Identity parents only extend the backbone with another identity child;
    root and mutated-positive parents receive the full variant bundle.
    """
    if executor is None:
        raise InfrastructureError("no executor available")
    parents = [
        tree.nodes[nid]
        for nid in sorted(tree.survivors.get(level - 1, ()))
        if tree.nodes[nid].executed_ok()
        and tree.nodes[nid].expected_state == "positive"
    ]
    new_nodes: list[DerivationNode] = []
    for parent in parents:
        # Deterministic per-parent substream so execution order never matters.
        rng = random.Random(f"{rng_seed}/{level}/{parent.id}")
        if parent.is_identity:
            variants = [
                (next_block, MutationRecord.identity(next_block.call.callee_fqn))
            ]
        else:
            variants = generate_block_variants(
                next_block, times_mt, kb, rng, ar_weight=ar_weight, bc_cap=bc_cap
            )
        for vblock, record in variants:
            assembled, successor = assemble(parent.template, vblock)
            node = DerivationNode(
                id=tree.next_id(),
                level=level,
                parent_id=parent.id,
                template=successor,
                inserted_block=vblock,
                mutation=record,
                assembled=assembled,
                expected_state=record.expected_state,
            )
            tree.add(node)
            new_nodes.append(node)
    for node in new_nodes:
        node.observed = executor(node.assembled)
    return tree


# ---------------------------------------------------------------------------
# Equivalence classes and pruning
# ---------------------------------------------------------------------------

def equivalence_key(record: MutationRecord, kb: KnowledgeBase) -> tuple:
    """Pruning discriminant of one mutation record."""
    if record.operator == "IDENTITY":
        return IDENTITY_CLASS
    if record.operator == "AR":
        return ("ar", record.new_value)
    param = None
    spec = kb.get(record.api)
    if spec is not None and record.parameter is not None:
        param = spec.parameter(record.parameter)
    if param is None:
        return ("param", record.api, record.parameter, "unknown")
    value = record.new_value
    if param.dtype == "boolean":
        return ("param", record.api, record.parameter, "bool", bool(value))
    if param.enum_values:
        return ("param", record.api, record.parameter, "enum", value)
    category = "legal"
    if param.range is not None:
        if value in (param.range.low, param.range.high):
            category = "boundary"
        elif not param.range.contains(value):
            category = "illegal"
    return ("param", record.api, record.parameter, category)


def classify_equivalence(
    nodes: list[DerivationNode], kb: KnowledgeBase
) -> dict[tuple, list[str]]:
    """Partition successful positive nodes of one level by their mutation
    discriminant; identity variants sit in a reserved class."""
    classes: dict[tuple, list[str]] = {}
    for node in sorted(nodes, key=lambda n: n.id):
        key = (
            IDENTITY_CLASS
            if node.mutation is None
            else equivalence_key(node.mutation, kb)
        )
        classes.setdefault(key, []).append(node.id)
    return classes


def prune_level(
    classes: dict[tuple, list[str]], ratio: float, rng
) -> set[str]:
    """Retain ceil(ratio * |class|) members of each class, at least one, and
    the identity class in full."""
    if not (0.0 < ratio <= 1.0):
        raise ValueError("ratio must be in (0, 1]")
    survivors: set[str] = set()
    for key in sorted(classes):
        members = sorted(classes[key])
        if key == IDENTITY_CLASS:
            survivors.update(members)
            continue
        keep = max(1, math.ceil(ratio * len(members)))
        survivors.update(rng.sample(members, keep))
    return survivors


def grow_tree(
    tree_template: Template,
    blocks: list[CodeBlock],
    times_mt: int,
    kb: KnowledgeBase,
    rng_seed,
    executor,
    prune_ratio: float = 0.5,
    ar_weight: float = 0.5,
    bc_cap: int = DEFAULT_BC_CAP,
) -> DerivationTree:
    """Execute the root, then derive, execute, and prune one level per block."""
    tree, root = make_root(tree_template)
    root.observed = executor(root.assembled)
    for level, block in enumerate(blocks, start=1):
        derive_level(
            tree,
            level,
            block,
            times_mt,
            kb,
            rng_seed,
            executor,
            ar_weight=ar_weight,
            bc_cap=bc_cap,
        )
        candidates = [
            n
            for n in tree.at_level(level)
            if n.expected_state == "positive" and n.executed_ok()
        ]
        classes = classify_equivalence(candidates, kb)
        prune_rng = random.Random(f"{rng_seed}/prune/{level}")
        tree.survivors[level] = prune_level(classes, prune_ratio, prune_rng)
    return tree


def expected_node_count(times_mt: int, blocks: int) -> int:
    """Positive-node count of the unpruned all-success tree (identity and
    negative nodes excluded, root included): sum of n^i for i = 0..m."""
    if times_mt < 1 or blocks < 0:
        raise ValueError("need times_mt >= 1 and blocks >= 0")
    return sum(times_mt**i for i in range(blocks + 1))
