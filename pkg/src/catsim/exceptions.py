"""Exception hierarchy.

Input problems derive from ``ValueError`` so callers that only care about bad
arguments can catch that; numerical failures (truncation, missing heralds,
degenerate eigenproblems) derive from ``NumericalError``.
"""


class CatSimError(Exception):
    pass


class InputError(CatSimError, ValueError):
    pass


class InvalidDimensionError(InputError):
    pass


class InvalidLossError(InputError):
    pass


class GridMismatchError(InputError):
    pass


class InsufficientPhasesError(InputError):
    pass


class ConfigError(InputError):
    """Invalid experiment configuration.

    ``errors`` holds ``(json_pointer, message)`` pairs.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [("", errors)]
        self.errors = list(errors)
        lines = [f"{ptr or '/'}: {msg}" for ptr, msg in self.errors]
        super().__init__("invalid config:\n  " + "\n  ".join(lines))


class NumericalError(CatSimError):
    pass


class CutoffTooSmallError(NumericalError):
    pass


class DegenerateCatError(NumericalError):
    pass


class NoHeraldError(NumericalError):
    pass


class TruncatedModeError(NumericalError):
    pass


class AmbiguousModeError(NumericalError):
    pass
