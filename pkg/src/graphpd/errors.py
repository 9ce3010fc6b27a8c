"""Error taxonomy shared across the package.

Every error carries a short machine-parsable ``code`` so the CLI can emit
one-line diagnostics and map errors to exit codes.
"""


class GraphPdError(Exception):
    """Base class; ``code`` is a short kebab-case identifier."""

    exit_code = 1

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class DataError(GraphPdError):
    """Malformed or inconsistent input data (files, shapes, preconditions)."""

    exit_code = 3


class TrainingError(GraphPdError):
    """Optimization failed (divergence, degenerate masks)."""

    exit_code = 4
