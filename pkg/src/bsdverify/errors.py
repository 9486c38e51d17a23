"""Exception hierarchy shared by every layer of the pipeline.

The CLI maps these onto exit codes, so each class carries the code it
should surface with.
"""


class BSDError(Exception):
    exit_code = 1


class ArgumentError(BSDError, ValueError):
    exit_code = 2


class UnsupportedError(BSDError):
    exit_code = 2


class LookupMiss(BSDError, KeyError):
    exit_code = 3

    def __str__(self):
        return Exception.__str__(self)


class ParityError(BSDError):
    """Wrong root number or indeterminate analytic rank."""

    exit_code = 4


class SearchExhausted(BSDError):
    exit_code = 5


class PrecisionExhausted(BSDError):
    exit_code = 1


class InconsistencyError(BSDError):
    exit_code = 1


class HeegnerHypothesisError(BSDError):
    exit_code = 2


class DegenerateError(BSDError):
    exit_code = 1
