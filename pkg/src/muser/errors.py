"""Exception taxonomy shared across the library and the CLI.

The CLI maps these onto exit codes: UsageError -> 1, DataError -> 2,
NumericFault -> 3. Anything else is a bug and escapes as a traceback.
"""


class MuserError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(MuserError):
    """Bad invocation: unknown flags, missing arguments, invalid combinations."""


class DataError(MuserError):
    """Malformed or out-of-contract input data (MIDI, event streams, configs)."""


class ShapeError(MuserError):
    """Array shape or dtype mismatch in the numerics layer."""


class NumericFault(MuserError):
    """Non-finite values, failed numeric invariants, or a corrupt tape."""
