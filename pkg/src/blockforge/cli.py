"""Command-line front end: fuzz campaigns, seed inspection, similarity
queries, and report digests."""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

from .campaign import run_campaign
from .code_model import SeedFile, disassemble_seed
from .config import (
    DEFAULT_PRUNE_RATIO,
    DEFAULT_TIMES_MT,
    CampaignConfig,
    apply_overrides,
    parse_config,
)
from .errors import BlockforgeError, ConfigError
from .kb import load_knowledge_base
from .similarity import ranked_similarity


def _add_campaign_flags(parser):
    parser.add_argument("--config", help="TOML campaign config file")
    parser.add_argument("--seed", help="seed program path")
    parser.add_argument("--manifest", help="seed manifest path")
    parser.add_argument("--kb-dir", help="knowledge base directory")
    parser.add_argument("--times-mt", type=int, default=None,
                        help=f"mutations per block (default {DEFAULT_TIMES_MT})")
    parser.add_argument("--prune-ratio", type=float, default=None,
                        help=f"per-class retention ratio "
                             f"(default {DEFAULT_PRUNE_RATIO})")
    parser.add_argument("--runner-cmd",
                        help="runner command line; '{test}' expands to the "
                             "test path")
    parser.add_argument("--timeout-secs", type=float, default=None,
                        help="per-test timeout (default 60)")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--rng-seed", type=int, default=None)
    parser.add_argument("--out-dir", help="artifact output directory")
    parser.add_argument("--shared-session", action="store_true", default=None,
                        help="run nodes in one long-lived runner session")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockforge",
        description="Code-assembly fuzzer for API libraries: disassembles a "
        "seed program into a template and blocks, mutates the blocks, and "
        "checks execution-state consistency.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fuzz = sub.add_parser("fuzz", help="run one fuzzing campaign")
    _add_campaign_flags(fuzz)

    dis = sub.add_parser("disassemble", help="show a seed's template and blocks")
    dis.add_argument("--seed", required=True)
    dis.add_argument("--kb-dir", required=True)

    sim = sub.add_parser("similarity", help="print an API's ranked similarity list")
    sim.add_argument("--kb-dir", required=True)
    sim.add_argument("--api", required=True)

    rep = sub.add_parser("report", help="digest a campaign's reports by type")
    rep.add_argument("--out-dir", required=True)
    return parser


def config_from_args(args) -> CampaignConfig:
    runner_cmd = (
        tuple(shlex.split(args.runner_cmd)) if args.runner_cmd else None
    )
    if args.config:
        base = parse_config(args.config)
    else:
        if not args.seed or not args.kb_dir:
            raise ConfigError("--seed and --kb-dir are required without --config")
        base = CampaignConfig(seed_path=args.seed, kb_dir=args.kb_dir)
    return apply_overrides(
        base,
        seed_path=args.seed,
        manifest_path=args.manifest,
        kb_dir=args.kb_dir,
        times_mt=args.times_mt,
        prune_ratio=args.prune_ratio,
        runner_cmd=runner_cmd,
        timeout_secs=args.timeout_secs,
        workers=args.workers,
        rng_seed=args.rng_seed,
        out_dir=args.out_dir,
        shared_session=args.shared_session,
    )


def cmd_fuzz(config: CampaignConfig, runner=None, out=None) -> int:
    out = out or sys.stdout
    result = run_campaign(config, runner=runner)
    stats = result.stats
    print(
        f"executed {stats.num_tests} tests, "
        f"{stats.num_reports} deduplicated reports "
        f"-> {result.out_dir}",
        file=out,
    )
    return 0


def cmd_disassemble(seed_path, kb_dir, out=None) -> int:
    out = out or sys.stdout
    kb = load_knowledge_base(kb_dir)
    seed = SeedFile.from_path(seed_path)
    template, blocks = disassemble_seed(seed, kb)
    print(f"template ({template.slot_count} slots):", file=out)
    for element in template.elements:
        kind = element[0]
        if kind == "line":
            print(f"  {element[1]}", file=out)
        elif kind == "slot":
            print(f"  <slot {element[1]}>", file=out)
        elif kind == "slot_use":
            print(f"  <slot {element[1]} use>", file=out)
    for i, block in enumerate(blocks):
        print(f"block {i}: {block.call.callee_fqn}", file=out)
        for line in block.source_lines:
            print(f"  {line}", file=out)
        if block.use_line:
            print(f"  use: {block.use_line.strip()}", file=out)
    return 0


def cmd_similarity(kb_dir, api_name, out=None) -> int:
    out = out or sys.stdout
    kb = load_knowledge_base(kb_dir)
    if api_name not in kb:
        print(f"unknown API {api_name}", file=sys.stderr)
        return 1
    print("Similarity:", file=out)
    for name, score in ranked_similarity(kb, api_name):
        print(f"  {name}: {score}", file=out)
    return 0


def cmd_report(out_dir, out=None) -> int:
    out = out or sys.stdout
    path = Path(out_dir) / "reports.jsonl"
    if not path.exists():
        print(f"no reports at {path}", file=sys.stderr)
        return 1
    by_type: dict[str, list[dict]] = {}
    for line in path.read_text().splitlines():
        if line.strip():
            doc = json.loads(line)
            by_type.setdefault(doc["candidate_type"], []).append(doc)
    for candidate_type in sorted(by_type):
        docs = by_type[candidate_type]
        print(f"{candidate_type} ({len(docs)}):", file=out)
        for doc in docs:
            observed = doc["observed"]
            outcome = observed["exception_type"] or observed["kind"]
            triage = f" [{doc['triage']}]" if doc.get("triage") else ""
            print(
                f"  {doc['node_id']} x{doc['count']} {doc['api']} "
                f"-> {outcome}{triage}",
                file=out,
            )
            print(f"    {doc['trigger']}", file=out)
    if not by_type:
        print("no reports", file=out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fuzz":
            return cmd_fuzz(config_from_args(args))
        if args.command == "disassemble":
            return cmd_disassemble(args.seed, args.kb_dir)
        if args.command == "similarity":
            return cmd_similarity(args.kb_dir, args.api)
        return cmd_report(args.out_dir)
    except BlockforgeError as exc:
        print(f"blockforge: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
