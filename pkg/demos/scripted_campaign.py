"""Run a complete fuzzing campaign against a scripted in-process target.

No subprocesses and no real library: the "target" is a small function that
validates generated programs line by line and carries one planted fault, a
missing range check on Dropout's rate. The campaign finds it as a boundary
escape (a probe that was expected to fail but succeeded).
"""

import re
import tempfile
from pathlib import Path

from blockforge import CampaignConfig, ExecutionState, run_campaign

# Sibling demo module; resolvable because scripts run with demos/ on sys.path.
from disassemble_and_mutate import SEED, knowledge_base


def scripted_target(test):
    """Validate every constructor call; rate is deliberately unchecked."""
    for line in test.source.splitlines():
        dense = re.search(r"Dense\((?:units=)?(-?\d+)", line)
        if dense and int(dense.group(1)) < 1:
            return ExecutionState.exception(
                "ValueError", "units must be a positive int"
            )
        activation = re.search(r"activation='([^']*)'", line)
        if activation and activation.group(1) not in ("relu", "tanh", "None"):
            return ExecutionState.exception(
                "ValueError", f"unknown activation {activation.group(1)!r}"
            )
        alpha = re.search(r"alpha=(-?[\d.]+)", line)
        if alpha and float(alpha.group(1)) < 0:
            return ExecutionState.exception(
                "ValueError", "alpha must be non-negative"
            )
    return ExecutionState.success()


def main():
    workdir = Path(tempfile.mkdtemp(prefix="blockforge_demo_"))
    seed_path = workdir / "seed.py"
    seed_path.write_text(SEED)
    config = CampaignConfig(
        seed_path=str(seed_path),
        kb_dir="unused-kb-is-passed-in-memory",
        times_mt=3,
        prune_ratio=0.5,
        rng_seed=11,
        out_dir=str(workdir / "out"),
    )
    result = run_campaign(config, runner=scripted_target, kb=knowledge_base())

    stats = result.stats
    print(f"executed {stats.num_tests} generated tests")
    print(f"average wall time {stats.avg_wall_time:.3f} s (scripted target)")
    print(f"deduplicated reports: {stats.num_reports}")
    for report in result.reports:
        print()
        print(f"  [{report.candidate_type}] {report.api}")
        print(f"    expected {report.expected_state}, "
              f"observed {report.observed.kind.value}")
        print(f"    trigger: {report.trigger}")
        print(f"    occurrences: {report.count} "
              f"(nodes {', '.join(report.members)})")
    print()
    print(f"artifacts written under {result.out_dir}")


if __name__ == "__main__":
    main()
