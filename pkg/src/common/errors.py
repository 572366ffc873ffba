"""
Exception hierarchy shared by every neuralreg package.

Each exception keeps the offending value(s) as attributes and renders its
diagnostic in __str__, so that the command line entry points can print it
verbatim.
"""


class NeuralRegError(Exception):
    """
    Base class for all runtime failures raised by neuralreg
    """

    def __init__(self, message):
        self.message = message

    def __str__(self):
        return self.message


class UsageError(NeuralRegError):
    """
    The command line could not be parsed
    """


class ShapeError(NeuralRegError):
    """
    A tensor reached a layer or primitive with a shape it can't accept
    """

    def __init__(self, where, expected, actual):
        self.where = where
        self.expected = expected
        self.actual = actual

    def __str__(self):
        return "{}: expected shape {}, got {}".format(
            self.where,
            self.expected,
            self.actual
        )


class TapeError(NeuralRegError):
    """
    Misuse of the computation tape (e.g. backward from a non-scalar)
    """


class NonFiniteError(NeuralRegError):
    """
    A loss, gradient or input contained NaN or infinity
    """

    def __init__(self, what, where=None):
        self.what = what
        self.where = where

    def __str__(self):
        if self.where is None:
            return "non-finite {}".format(self.what)

        return "non-finite {} at {}".format(self.what, self.where)


class DegenerateError(NeuralRegError):
    """
    Not enough usable data to compute a statistic
    """


class DatasetError(NeuralRegError):
    """
    A dataset or manifest is inconsistent with what an operation requires
    """


class FormatError(NeuralRegError):
    """
    An on-disk file doesn't follow the expected format
    """

    def __init__(self, path, reason):
        self.path = path
        self.reason = reason

    def __str__(self):
        return "{}: {}".format(self.path, self.reason)


class AttackError(NeuralRegError):
    """
    An adversarial attack was started from an invalid state
    """
