"""Campaign orchestration: disassemble a seed, verify it, grow the derivation
tree, sweep the oracle, and write the artifact set.

Artifacts under the output directory:
  tree.jsonl      one line per derivation node (stable key order, no timings)
  reports.jsonl   deduplicated bug reports
  stats.json      campaign statistics
  tests/          generated test program per node, keyed by node id
  triage.jsonl    human-maintained sidecar; read, never written
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .code_model import (
    SeedFile,
    VerificationReport,
    disassemble_seed,
    verify_incremental_assembly,
)
from .config import CampaignConfig
from .derivation import DerivationTree, grow_tree
from .errors import ConfigError, VerificationError
from .executor import RunnerConfig, SubprocessRunner
from .kb import KnowledgeBase, load_knowledge_base
from .oracle import (
    BugReport,
    CampaignStats,
    apply_triage,
    campaign_stats,
    collect_reports,
    deduplicate_reports,
    load_triage,
)


@dataclass
class CampaignResult:
    tree: DerivationTree
    reports: list[BugReport]
    stats: CampaignStats
    verification: VerificationReport
    out_dir: Path


def _make_runner(config: CampaignConfig, out: Path):
    if not config.runner_cmd:
        raise ConfigError("no runner command configured and no runner supplied")
    runner_cfg = RunnerConfig(
        command=tuple(config.runner_cmd),
        timeout=config.timeout_secs,
        shared_session=config.shared_session,
    )
    return SubprocessRunner(runner_cfg, out_dir=str(out / "runs"))


def run_campaign(
    config: CampaignConfig,
    runner=None,
    kb: Optional[KnowledgeBase] = None,
    write_artifacts: bool = True,
) -> CampaignResult:
    """One full fuzzing campaign over one seed.

    A failing verification step aborts before any derivation; found bugs are
    ordinary output, never a failure.
    """
    if kb is None:
        kb = load_knowledge_base(config.kb_dir)
    seed = SeedFile.from_text(
        Path(config.seed_path).read_text(), path=config.seed_path
    )
    template, blocks = disassemble_seed(seed, kb)
    out = Path(config.out_dir)
    if write_artifacts:
        out.mkdir(parents=True, exist_ok=True)
    if runner is None:
        runner = _make_runner(config, out)
    verification = verify_incremental_assembly(template, blocks, runner)
    if not verification.accepted:
        failed = verification.failed_step
        raise VerificationError(
            f"seed verification failed at step {failed.step} "
            f"(block {failed.block_id})",
            step=failed.step,
            state=failed.state,
        )
    tree = grow_tree(
        template,
        blocks,
        config.times_mt,
        kb,
        config.rng_seed,
        runner,
        prune_ratio=config.prune_ratio,
        ar_weight=config.ar_weight,
        bc_cap=config.bc_cap,
    )
    raw = collect_reports(tree, seed=str(config.seed_path))
    triage = load_triage(out / "triage.jsonl")
    reports = deduplicate_reports(apply_triage(raw, triage))
    stats = campaign_stats(tree, reports, triage)
    result = CampaignResult(
        tree=tree,
        reports=reports,
        stats=stats,
        verification=verification,
        out_dir=out,
    )
    if write_artifacts:
        write_campaign_artifacts(result)
    return result


def write_campaign_artifacts(result: CampaignResult) -> None:
    out = result.out_dir
    out.mkdir(parents=True, exist_ok=True)
    tree_lines = [
        json.dumps(result.tree.nodes[nid].to_json_dict(), sort_keys=True)
        for nid in sorted(result.tree.nodes)
    ]
    (out / "tree.jsonl").write_text("\n".join(tree_lines) + "\n")
    report_lines = [
        json.dumps(r.to_json_dict(), sort_keys=True) for r in result.reports
    ]
    (out / "reports.jsonl").write_text(
        "\n".join(report_lines) + ("\n" if report_lines else "")
    )
    (out / "stats.json").write_text(
        json.dumps(result.stats.to_json_dict(), sort_keys=True, indent=2) + "\n"
    )
    tests_dir = out / "tests"
    tests_dir.mkdir(exist_ok=True)
    for nid in sorted(result.tree.nodes):
        node = result.tree.nodes[nid]
        (tests_dir / f"{nid}.py").write_text(node.assembled.source)
