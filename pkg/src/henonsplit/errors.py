"""Exception hierarchy.

Every error carries a short machine-readable ``reason`` string; the CLI
writes it to the run log and maps the class onto an exit code.
"""


class HenonSplitError(Exception):
    reason = "error"

    def __init__(self, message="", **detail):
        super().__init__(message or self.reason)
        self.detail = detail


class ComputationError(HenonSplitError):
    """Numerical failure. Maps to exit code 1."""

    reason = "computation"


class UsageError(HenonSplitError):
    """Bad input or configuration. Maps to exit code 2."""

    reason = "usage"


class DomainError(ComputationError):
    reason = "domain"


class NonConvergence(ComputationError):
    reason = "non_convergence"


class SingularJacobian(ComputationError):
    reason = "singular_jacobian"


class IllConditioned(ComputationError):
    reason = "ill_conditioned"


class PoleProximity(ComputationError):
    reason = "pole_proximity"


class GridMismatch(ComputationError):
    reason = "grid_mismatch"


class ResonanceError(ComputationError):
    reason = "resonance"


class TruncationTooSmall(ComputationError):
    reason = "truncation_too_small"


class NoIntersection(ComputationError):
    reason = "no_intersection"


class NewtonFailure(NonConvergence):
    reason = "newton_failure"


class DegenerateTangent(ComputationError):
    reason = "degenerate_tangent"


class SeedInsufficient(ComputationError):
    reason = "seed_insufficient"


class TrajectoryOverflow(ComputationError):
    reason = "overflow"


class DepthInsufficient(ComputationError):
    reason = "depth_insufficient"


class BranchError(ComputationError):
    reason = "branch"


class DegenerateWronskian(ComputationError):
    reason = "degenerate_wronskian"


class TailDivergence(ComputationError):
    reason = "tail_divergence"


class InsufficientSamples(ComputationError):
    reason = "insufficient_samples"


class DegenerateDesignMatrix(ComputationError):
    reason = "degenerate_design_matrix"


class SweepFailure(ComputationError):
    reason = "sweep_failure"


class ConfigError(UsageError):
    reason = "config"
