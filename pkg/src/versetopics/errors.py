"""Exception hierarchy shared across the pipeline.

Each error class carries the exit code the command-line driver reports when
the error escapes: 2 for bad input, 3 for empty results, 4 for numerical
failures.
"""


class VersetopicsError(Exception):
    exit_code = 1


class InputDataError(VersetopicsError, ValueError):
    """Missing, malformed or inconsistent input data (exit code 2)."""

    exit_code = 2


class EmptyResultError(VersetopicsError, ValueError):
    """An operation produced an empty result, e.g. no lemma survives filtering (exit code 3)."""

    exit_code = 3


class ComputationError(VersetopicsError, RuntimeError):
    """Numerical failure, e.g. every chain rejected by the stability gates (exit code 4)."""

    exit_code = 4
