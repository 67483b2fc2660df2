"""Exception hierarchy shared by every stage of the pipeline.

Each class carries the machine-readable ``category`` used in CLI error lines
and the process exit code that the CLI maps it to.
"""


class EntowerError(Exception):
    category = "error"
    exit_code = 1


class ConfigError(EntowerError, ValueError):
    category = "config"
    exit_code = 2


class ConvergenceError(EntowerError, RuntimeError):
    category = "convergence"
    exit_code = 3

    def __init__(self, message, best_residual=None, iterations=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.iterations = iterations


class NumericalError(EntowerError, RuntimeError):
    category = "numerical"
    exit_code = 4


class LabelingError(NumericalError):
    category = "labeling"


class AnalysisError(NumericalError):
    """Tower extraction or fitting cannot proceed on the data given."""

    category = "analysis"


class TowerTruncationError(AnalysisError):
    category = "tower-truncation"


class InsufficientDataError(AnalysisError):
    category = "insufficient-data"
