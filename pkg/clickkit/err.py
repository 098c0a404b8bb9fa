"""
Error classes

Everything that clickkit raises on purpose derives from ClickkitError.
The three branches correspond to the exit codes of the command line front-end:
bad parameters (2), bad or degenerate data (3), numerics that did not work out (4).
"""

import logging
logger = logging.getLogger(__name__)


class ClickkitError(Exception):
	pass


# Parameters

class ValidationError(ClickkitError, ValueError):
	pass

class InvalidMean(ValidationError):
	pass

class TailMassTooLarge(ValidationError):
	pass

class IndexOutOfRange(ValidationError):
	pass

class InvalidDistribution(ValidationError):
	pass

class InvalidConfig(ValidationError):
	pass

class NonUniformWeightsUnsupported(ValidationError):
	pass

class TooFewDetectors(ValidationError):
	pass

class OrderOutOfRange(ValidationError):
	pass

class DimensionMismatch(ValidationError):
	pass

class UnwritableOutput(ValidationError):
	pass


# Data

class DataError(ClickkitError):
	pass

class EmptyHistogram(DataError):
	pass

class DegenerateMean(DataError):
	pass

class NoTriggers(DataError):
	pass

class TagBeyondTotalTime(DataError):
	pass

class UnreadableInput(DataError):
	pass


class LineError(DataError):
	"""
	Base for problems tied to a line of a tag file. The line number (1-based) is kept
	and prefixed to the message.
	"""
	def __init__(self, lineno, msg):
		self.lineno = lineno
		self.msg = msg
		DataError.__init__(self, "line {}: {}".format(lineno, msg))

	def __reduce__(self):
		return (type(self), (self.lineno, self.msg))

class MalformedLine(LineError):
	pass

class NonMonotonicTimestamp(LineError):
	pass

class UnknownChannel(LineError):
	pass


# Numerics

class NumericalError(ClickkitError, ArithmeticError):
	pass

class NumericalInstability(NumericalError):
	"""
	:param magnitude: the estimated absolute error that triggered the complaint
	"""
	def __init__(self, msg, magnitude):
		self.msg = msg
		self.magnitude = magnitude
		NumericalError.__init__(self, "{} (estimated error {:.3e})".format(msg, magnitude))

	def __reduce__(self):
		return (type(self), (self.msg, self.magnitude))

class EigenNoConvergence(NumericalError):
	def __init__(self, sweeps, residual):
		self.sweeps = sweeps
		self.residual = residual
		NumericalError.__init__(self, "Jacobi did not converge after {} sweeps, off-diagonal norm {:.3e}".format(sweeps, residual))

	def __reduce__(self):
		return (type(self), (self.sweeps, self.residual))


def exitcode(exc):
	"""
	The process exit code to use for an exception caught by the front-end.
	"""
	if isinstance(exc, ValidationError):
		return 2
	elif isinstance(exc, DataError):
		return 3
	elif isinstance(exc, NumericalError):
		return 4
	else:
		logger.warning("Unexpected exception type {}".format(type(exc).__name__))
		return 1
