"""
# errors.py

Exception hierarchy shared by the library and the command line tool.
"""


class SageError(Exception):
    """ Base class for every error raised by sagepy. """
    pass


class InvalidInputError(SageError, ValueError):
    """ Arguments violate an operation's preconditions. """
    pass


class ConfigError(SageError, ValueError):
    """ A run configuration fails schema validation. """
    pass


class TrainingDivergedError(SageError, RuntimeError):
    """ Training produced a non-finite loss.

    Args:
        iteration (int): zero-based iteration at which the loss became non-finite
    """

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        if message is None:
            message = "Training diverged at iteration %i (non-finite loss)" % iteration
        super(TrainingDivergedError, self).__init__(message)


class FormatError(SageError, IOError):
    """ Base class for binary file format errors. """
    pass


class CorruptHeaderError(FormatError):
    pass


class VersionUnsupportedError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    """ File ended before the declared payload.

    Args:
        offset (int): byte offset at which more data was expected
    """

    def __init__(self, offset, message=None):
        self.offset = offset
        if message is None:
            message = "Truncated payload at byte offset %i" % offset
        super(TruncatedPayloadError, self).__init__(message)
