"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`MolrelError`.
The three intermediate classes map onto the CLI exit codes (config 2, data 3,
runtime/numeric 4).
"""


class MolrelError(Exception):
    exit_code = 4


class ConfigurationError(MolrelError):
    exit_code = 2


class DataError(MolrelError):
    exit_code = 3


class RuntimeFailure(MolrelError):
    exit_code = 4


# parsing / featurization
class ParseError(DataError):
    def __init__(self, message, position=None, text=None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class EmptyPocket(DataError):
    pass


class EmptySequence(DataError):
    pass


class SequenceTooShort(DataError):
    pass


class VocabularyMissing(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class AdapterUnavailable(ConfigurationError):
    pass


# model construction
class ShapeError(ConfigurationError):
    pass


class KindError(ConfigurationError):
    pass


class ArityError(ConfigurationError):
    pass


class UnknownEncoder(ConfigurationError):
    pass


class CycleError(ConfigurationError):
    pass


class ConfigError(ConfigurationError):
    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


# metrics
class DegenerateInput(DataError):
    pass


class SingleClass(DataError):
    pass


# training / data
class NonFiniteLoss(RuntimeFailure):
    pass


class EmptyDataset(DataError):
    pass


class SchemaError(DataError):
    pass


class InsufficientUniverse(DataError):
    pass
