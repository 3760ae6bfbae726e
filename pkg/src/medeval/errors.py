"""Exception hierarchy shared across the harness."""


class MedEvalError(Exception):
    """Base class for every error raised by medeval."""


class CorpusError(MedEvalError, OSError):
    """A note or annotation file could not be read or decoded."""


class ParseError(MedEvalError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RangeError(MedEvalError, IndexError):
    pass


class AlignmentError(MedEvalError, ValueError):
    pass


class UnsplittableError(MedEvalError, ValueError):
    pass


class PreconditionError(MedEvalError, ValueError):
    pass


class ServiceError(MedEvalError, RuntimeError):
    def __init__(self, message, attempts):
        self.attempts = attempts
        super().__init__(f"{message} (after {attempts} attempt(s))")


class DecodeError(MedEvalError, ValueError):
    pass


class ContractError(MedEvalError, ValueError):
    pass


class InfeasibleScenarioError(MedEvalError, ValueError):
    pass


class UnsupportedProfileError(MedEvalError, ValueError):
    pass


class ConfigError(MedEvalError, ValueError):
    pass
