"""Exception hierarchy shared across the engine."""


class BlockforgeError(Exception):
    """Base class for all engine errors."""


class KnowledgeBaseError(BlockforgeError):
    """A knowledge-base file failed to load or violated the schema."""

    def __init__(self, message, *, path=None, line=None, rule=None):
        self.path = path
        self.line = line
        self.rule = rule
        parts = []
        if path is not None:
            parts.append(str(path))
        if line is not None:
            parts.append(f"line {line}")
        prefix = ": ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ConstraintError(BlockforgeError):
    """A constraint predicate failed to parse or evaluate."""


class NotSampleable(BlockforgeError):
    """The parameter carries too little information to sample a value."""


class NotApplicable(BlockforgeError):
    """A mutation operator cannot be applied to this block."""


class RemapError(BlockforgeError):
    """Argument remapping after API replacement left a required parameter unbound."""


class SelectionError(BlockforgeError):
    """Roulette selection received no usable candidates."""


class DisassemblyError(BlockforgeError):
    """The seed file could not be split into a template and code blocks."""


class LayerMappingError(BlockforgeError):
    """Class-style layer definitions could not be paired with their use sites."""


class AssemblyError(BlockforgeError):
    """Block insertion was attempted on a template with no open slot."""


class VerificationError(BlockforgeError):
    """Incremental re-assembly of the seed failed at some step."""

    def __init__(self, message, *, step=None, state=None):
        self.step = step
        self.state = state
        super().__init__(message)


class OracleError(BlockforgeError):
    """Oracle preconditions were not met (e.g. parent state missing)."""


class InfrastructureError(BlockforgeError):
    """The campaign cannot continue (runner missing, executor unavailable)."""


class ConfigError(BlockforgeError):
    """Campaign configuration is invalid."""
