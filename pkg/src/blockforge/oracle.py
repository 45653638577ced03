"""Execution-state-consistency oracle, candidate bug typing, report
deduplication, and campaign statistics.

A node that executes successfully should keep executing successfully after a
legal mutation, and an illegal boundary probe should fail; any other outcome
is a candidate bug. Candidate types are suggestions only: the final label
lives in a human-maintained triage sidecar and is never auto-finalized.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .derivation import DerivationNode, DerivationTree
from .errors import OracleError
from .executor import ExecutionState, StateKind
from .mutation import MutationRecord

CANDIDATE_TYPES = ("ICBug", "PerBug", "BouBug", "ImpBug", "Unclassified")

TRIAGE_LABELS = (
    "training-configuration",
    "syntax-error",
    "semantic-error",
    "lack-of-resources",
    "confirmed-bug",
)

DEDUP_PREFIX_LENGTH = 80

_DIGITS = re.compile(r"\d+")
_PATHS = re.compile(r"(?:[A-Za-z]:)?(?:/[^\s'\"]+)+|\S+\.py\b")
_SPACES = re.compile(r"\s+")


def normalize_message(message: Optional[str]) -> str:
    """Dedup canonical form: lowercase, digits and file paths stripped,
    whitespace collapsed, truncated to a fixed prefix."""
    text = (message or "").lower()
    text = _PATHS.sub(" ", text)
    text = _DIGITS.sub("", text)
    text = _SPACES.sub(" ", text).strip()
    return text[:DEDUP_PREFIX_LENGTH]


@dataclass(frozen=True)
class BugReport:
    node_id: str
    seed: str
    api: str
    mutation: MutationRecord
    expected_state: str
    observed: ExecutionState
    trigger: str
    candidate_type: str = "Unclassified"
    triage: Optional[str] = None
    count: int = 1
    members: tuple[str, ...] = ()

    def __post_init__(self):
        if self.candidate_type not in CANDIDATE_TYPES:
            raise ValueError(f"unknown candidate type {self.candidate_type!r}")
        if self.triage is not None and self.triage not in TRIAGE_LABELS:
            raise ValueError(f"unknown triage label {self.triage!r}")

    @property
    def dedup_key(self) -> tuple[str, str, str]:
        observed_type = self.observed.exception_type or self.observed.kind.value
        return (self.api, observed_type, normalize_message(self.observed.message))

    def to_json_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "seed": self.seed,
            "api": self.api,
            "mutation": self.mutation.to_dict(),
            "expected_state": self.expected_state,
            "observed": {
                "kind": self.observed.kind.value,
                "exception_type": self.observed.exception_type,
                "message": self.observed.message,
            },
            "trigger": self.trigger,
            "candidate_type": self.candidate_type,
            "triage": self.triage,
            "count": self.count,
            "members": list(self.members),
        }


def _suspect_api(record: MutationRecord) -> str:
    # After an API replacement the inserted API is the suspect, not the seed's.
    if record.operator == "AR":
        return str(record.new_value)
    return record.api


def _trigger(node: DerivationNode) -> str:
    line = ""
    if node.inserted_block is not None:
        line = node.inserted_block.rendered_mutation_line()
    record = node.mutation
    if record is not None and record.parameter is not None:
        return f"{line}  [{record.parameter}={record.new_value!r}]"
    return line


def check_state_consistency(
    node: DerivationNode, parent: DerivationNode, seed: str = ""
) -> Optional[BugReport]:
    """Report iff the node's outcome contradicts its expected state.

    Precondition: the parent executed successfully, so the oracle premise
    S(t) = true holds for the template the node was assembled from.
    """
    if node.observed is None:
        raise OracleError(f"{node.id}: node was never executed")
    if parent is None or not parent.executed_ok():
        raise OracleError(f"{node.id}: oracle premise unmet, parent did not succeed")
    if node.mutation is None:
        raise OracleError(f"{node.id}: root nodes are outside the oracle relation")
    violated = (
        node.observed.is_success()
        if node.expected_state == "negative"
        else not node.observed.is_success()
    )
    if not violated:
        return None
    report = BugReport(
        node_id=node.id,
        seed=seed,
        api=_suspect_api(node.mutation),
        mutation=node.mutation,
        expected_state=node.expected_state,
        observed=node.observed,
        trigger=_trigger(node),
    )
    return replace(report, candidate_type=classify_candidate(report))


def classify_candidate(report: BugReport) -> str:
    """Rule-based candidate type; a suggestion for human triage, not a verdict.

    BC probes that slip through are missing boundary checks; resource
    exhaustion is a performance candidate; a crash on legal input points at
    the implementation; an exception on a documented-legal value contradicts
    the documentation. Everything else stays unclassified.
    """
    if report.expected_state == "negative" and report.observed.is_success():
        return "BouBug"
    if report.observed.kind == StateKind.RESOURCE_EXHAUSTED:
        return "PerBug"
    if report.expected_state == "positive":
        if report.observed.kind == StateKind.CRASH:
            return "ImpBug"
        if report.observed.kind == StateKind.EXCEPTION:
            # AR, RG, and identity variants only ever use documented-legal
            # values, so the exception contradicts the documentation.
            if report.mutation.operator in ("AR", "RG", "IDENTITY"):
                return "ICBug"
    return "Unclassified"


def deduplicate_reports(reports: list[BugReport]) -> list[BugReport]:
    """One representative per (api, exception type, normalized message
    prefix); occurrence counts accumulate so the operation is idempotent."""
    groups: dict[tuple, list[BugReport]] = {}
    for report in sorted(reports, key=lambda r: r.node_id):
        groups.setdefault(report.dedup_key, []).append(report)
    out = []
    for key in sorted(groups):
        members = groups[key]
        representative = members[0]
        all_ids = []
        for m in members:
            all_ids.extend(m.members or (m.node_id,))
        out.append(
            replace(
                representative,
                count=sum(m.count for m in members),
                members=tuple(sorted(set(all_ids))),
            )
        )
    return out


def collect_reports(tree: DerivationTree, seed: str = "") -> list[BugReport]:
    """Oracle sweep over every derived node whose parent succeeded."""
    reports = []
    for node in tree.executed_nodes():
        if node.mutation is None:
            continue
        parent = tree.nodes[node.parent_id]
        if not parent.executed_ok():
            continue
        report = check_state_consistency(node, parent, seed=seed)
        if report is not None:
            reports.append(report)
    return reports


# ---------------------------------------------------------------------------
# Triage sidecar and statistics
# ---------------------------------------------------------------------------

def load_triage(path) -> dict[str, dict]:
    """Read `{node_id, triage_label, note}` JSON lines; later lines win."""
    labels: dict[str, dict] = {}
    path = Path(path)
    if not path.exists():
        return labels
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        if doc.get("triage_label") not in TRIAGE_LABELS:
            raise OracleError(f"unknown triage label {doc.get('triage_label')!r}")
        labels[doc["node_id"]] = doc
    return labels


def apply_triage(reports: list[BugReport], labels: dict[str, dict]) -> list[BugReport]:
    return [
        replace(r, triage=labels[r.node_id]["triage_label"])
        if r.node_id in labels
        else r
        for r in reports
    ]


@dataclass(frozen=True)
class CampaignStats:
    num_tests: int
    avg_wall_time: float
    num_reports: int
    per_type: tuple[tuple[str, int], ...] = ()
    precision: Optional[float] = None

    def to_json_dict(self) -> dict:
        return {
            "num_tests": self.num_tests,
            "avg_wall_time": self.avg_wall_time,
            "num_reports": self.num_reports,
            "per_type": dict(self.per_type),
            "precision": self.precision,
        }


def campaign_stats(
    tree: DerivationTree,
    reports: list[BugReport],
    triage: Optional[dict[str, dict]] = None,
) -> CampaignStats:
    executed = tree.executed_nodes()
    walls = [n.observed.wall_time for n in executed]
    per_type: dict[str, int] = {}
    for r in reports:
        per_type[r.candidate_type] = per_type.get(r.candidate_type, 0) + 1
    precision = None
    if triage:
        labeled = [r for r in reports if r.node_id in triage]
        if labeled:
            confirmed = sum(
                1
                for r in labeled
                if triage[r.node_id]["triage_label"] == "confirmed-bug"
            )
            precision = confirmed / len(labeled)
    return CampaignStats(
        num_tests=len(executed),
        avg_wall_time=sum(walls) / len(walls) if walls else 0.0,
        num_reports=len(reports),
        per_type=tuple(sorted(per_type.items())),
        precision=precision,
    )
