"""Exception types. Input problems subclass ``InputError`` (CLI exit code 2);
broken internal guarantees raise ``InvariantError`` (exit code 3)."""


class KincoachError(Exception):
    pass


class InputError(KincoachError, ValueError):
    pass


class InvariantError(KincoachError):
    pass


class SchemaError(InputError):
    pass


class UnknownJoint(InputError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InvertedBound(InputError):
    pass


class EmptySeries(InputError):
    pass


class OutOfBand(InputError):
    pass


class DimMismatch(InputError):
    pass


class BadK(InputError):
    pass


class EmptyDataset(InputError):
    pass


class TooShort(InputError):
    pass


class DegenerateCycle(InputError):
    pass


class BadNRef(InputError):
    pass


class EmptyCycle(InputError):
    pass


class NoKeyFrame(InputError):
    pass


class BadTarget(InputError):
    pass


class BadSpec(InputError):
    pass


class StreamFormatError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoActiveCycle(InputError):
    pass
