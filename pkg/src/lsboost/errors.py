"""Exception taxonomy shared by the library and the CLI.

Exit codes: 2 usage, 3 data, 4 broken oracle/contract guarantees.
"""


class LSBoostError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class UsageError(LSBoostError):
    """Invalid configuration or malformed invocation."""

    exit_code = 2


class DataError(LSBoostError):
    """Input data violates a precondition (shape, range, parse failure)."""

    exit_code = 3


class ContractError(LSBoostError):
    """An internal guarantee failed, e.g. an oracle returned a worse fit
    than a constant or training exceeded its provable round bound."""

    exit_code = 4
