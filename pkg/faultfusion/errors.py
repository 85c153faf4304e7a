"""
Exception hierarchy shared by every subpackage.

Two branches decide the CLI exit code: :class:`UserError` (bad input or config,
exit 1) and :class:`InvariantError` (an internal contract was broken, exit 2).
"""


class FaultFusionError(Exception):
    """Root of all errors raised deliberately by this package."""


class UserError(FaultFusionError):
    """Raised for problems the user can fix: config, input files, missing artifacts."""


class ConfigError(UserError):
    """Raised when a run config is invalid or names an unknown key or preset."""


class DataError(UserError):
    """Raised when an input signal file or dataset manifest cannot be used."""


class EmptyResultError(UserError):
    """Raised when an operation would produce nothing, e.g. segmenting a too-short signal."""


class CheckpointError(UserError):
    """Raised when a checkpoint is missing, truncated or carries the wrong magic string."""


class ArtifactError(UserError):
    """Raised when a command needs run artifacts that are not there."""


class InvariantError(FaultFusionError):
    """Raised when an internal invariant is violated."""


class ContractError(InvariantError):
    """Raised when an operation is called outside its preconditions."""


class DimensionError(InvariantError):
    """Raised when tensor shapes are incompatible; the message names both shapes."""


class DomainError(InvariantError):
    """Raised when an elementwise op is applied outside its mathematical domain."""


class NonFiniteError(InvariantError):
    """Raised when an op produces NaN or Inf from finite inputs."""

    def __init__(self, op: str) -> None:
        super().__init__(f"Non-finite values produced by op {op!r}")
        self.op = op


class DivergenceError(InvariantError):
    """Raised when training is aborted because the loss stopped being finite."""


class DegenerateSimilarityError(InvariantError):
    """Raised when cosine similarity is requested for a zero vector."""
