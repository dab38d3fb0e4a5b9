# -*- coding: utf-8 -*-


class TTAADError(Exception):
    """
    Base Exception for all ttaad toolkit Exceptions
    """
    pass


class InvalidInputError(TTAADError):
    """
    Raised when an input file or argument is malformed.

    :param message: description of the problem
    :type message: str
    :param offset: byte offset in the offending file, if known
    :type offset: int
    :param row: 1-based data row in the offending CSV file, if known
    :type row: int
    """
    def __init__(self, message, offset=None, row=None):
        super(InvalidInputError, self).__init__(message)
        self.offset = offset
        self.row = row


class DimensionMismatchError(TTAADError):
    """
    Raised when two vectors or arrays do not have compatible shapes
    """
    pass


class UndefinedMetricError(TTAADError):
    """
    Raised when a metric is requested on records missing
    one of the two membership labels
    """
    pass


class FitInfeasibleError(TTAADError):
    """
    Raised when the method-of-moments Beta fit has no solution
    """
    pass


class NumericalError(TTAADError):
    """
    Raised on internal numerical failure such as quadrature
    non-convergence or a diverging training loss.

    :param message: description of the failure
    :type message: str
    :param error_estimate: achieved error estimate (quadrature)
    :type error_estimate: float
    :param epoch: epoch index at which training diverged
    :type epoch: int
    """
    def __init__(self, message, error_estimate=None, epoch=None):
        super(NumericalError, self).__init__(message)
        self.error_estimate = error_estimate
        self.epoch = epoch
