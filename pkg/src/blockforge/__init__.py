"""Code-assembly fuzzing engine for API libraries.

Disassembles seed programs into a template plus code blocks, mutates the
blocks against a parameter knowledge base, grows a derivation tree level by
level, and flags execution-state inconsistencies as candidate bugs.
"""

from .campaign import CampaignResult, run_campaign
from .code_model import (
    AssembledTest,
    CodeBlock,
    SeedFile,
    Template,
    assemble,
    disassemble_seed,
    verify_incremental_assembly,
)
from .config import CampaignConfig, dump_config, parse_config
from .derivation import (
    DerivationNode,
    DerivationTree,
    classify_equivalence,
    derive_level,
    expected_node_count,
    grow_tree,
    prune_level,
)
from .executor import (
    ExecutionState,
    FakeRunner,
    RunnerConfig,
    StateKind,
    SubprocessRunner,
    execute_node,
    parse_runner_output,
)
from .kb import (
    ApiSpec,
    ConstraintSpec,
    ParameterSpec,
    ValueRange,
    evaluate_constraint,
    load_knowledge_base,
    sample_illegal_boundary_value,
    sample_legal_value,
)
from .mutation import (
    MutationRecord,
    generate_block_variants,
    mutate_api_replacement,
    mutate_boundary_checking,
    mutate_random_generation,
)
from .oracle import (
    BugReport,
    CampaignStats,
    campaign_stats,
    check_state_consistency,
    classify_candidate,
    collect_reports,
    deduplicate_reports,
)
from .similarity import (
    cosine_similarity,
    embed_definition,
    functional_similarity,
    parameter_list_wcr,
    roulette_select,
)

__version__ = "0.1.0"

__all__ = [
    "ApiSpec",
    "AssembledTest",
    "BugReport",
    "CampaignConfig",
    "CampaignResult",
    "CampaignStats",
    "CodeBlock",
    "ConstraintSpec",
    "DerivationNode",
    "DerivationTree",
    "ExecutionState",
    "FakeRunner",
    "MutationRecord",
    "ParameterSpec",
    "RunnerConfig",
    "SeedFile",
    "StateKind",
    "SubprocessRunner",
    "Template",
    "ValueRange",
    "assemble",
    "campaign_stats",
    "check_state_consistency",
    "classify_candidate",
    "classify_equivalence",
    "collect_reports",
    "cosine_similarity",
    "deduplicate_reports",
    "derive_level",
    "disassemble_seed",
    "dump_config",
    "embed_definition",
    "evaluate_constraint",
    "execute_node",
    "expected_node_count",
    "functional_similarity",
    "generate_block_variants",
    "grow_tree",
    "load_knowledge_base",
    "mutate_api_replacement",
    "mutate_boundary_checking",
    "mutate_random_generation",
    "parameter_list_wcr",
    "parse_config",
    "parse_runner_output",
    "prune_level",
    "roulette_select",
    "run_campaign",
    "sample_illegal_boundary_value",
    "sample_legal_value",
    "verify_incremental_assembly",
]
