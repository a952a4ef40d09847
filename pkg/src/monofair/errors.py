"""Exception hierarchy. Each class maps to one CLI exit-code category."""


class MonofairError(Exception):
    exit_code = 1


class InputError(MonofairError):
    """Missing/empty files and other I/O level problems."""
    exit_code = 3


class SchemaError(MonofairError):
    """Schema, config, or file-format mismatch."""
    exit_code = 4


class ParseError(SchemaError):
    def __init__(self, message, row=None, offset=None):
        super().__init__(message)
        self.row = row
        self.offset = offset


class VersionError(SchemaError):
    pass


class NumericError(MonofairError):
    """Invalid numeric input: NaN, degenerate features, bad probabilities."""
    exit_code = 5


class DegenerateFeatureError(NumericError):
    pass


class SplitError(NumericError):
    pass


class MetricError(NumericError):
    pass


class PreconditionError(NumericError):
    """A lemma's hypothesis does not hold for the given case."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class AbsoluteContinuityError(PreconditionError):
    pass


class TheoremCheckFailure(MonofairError):
    """A bound that must hold was observed to fail. Always a defect."""
    exit_code = 6
