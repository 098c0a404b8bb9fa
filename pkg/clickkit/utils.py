"""
General helpers: exact combinatorics, guarded alternating sums, time units, seeds.
"""

import math
import numpy as np

import logging
logger = logging.getLogger(__name__)

from . import err


# Largest array size for which we promise exact integer binomials before conversion to float.
MAXEXACTN = 64


def falling(k, q):
	"""
	The falling factorial k (k-1) ... (k-q+1), as an exact python int.
	Zero as soon as q > k, one for q = 0.
	"""
	if q > k:
		return 0
	return math.perm(k, q)


def binom(n, k):
	"""
	Exact binomial coefficient (python int), zero outside 0 <= k <= n.
	"""
	if k < 0 or k > n:
		return 0
	return math.comb(n, k)


def monitoredsum(terms, tol=1e-9, what="alternating sum"):
	"""
	Sums terms with an extended precision pairwise accumulator and watches the cancellation.

	The rounding error of the result is bounded by roughly sum(|terms|) * eps of the accumulator.
	If that bound exceeds tol, the digits left are not trustworthy and I raise NumericalInstability.

	:param terms: 1D array, converted to np.longdouble
	:returns: the sum, as np.longdouble
	"""
	terms = np.asarray(terms, dtype=np.longdouble)
	eps = np.finfo(np.longdouble).eps
	bound = float(np.sum(np.fabs(terms)) * 8 * eps)
	if bound > tol:
		raise err.NumericalInstability("Cancellation in {} exceeds tolerance {:.1e}".format(what, tol), bound)
	return np.sum(terms)


def nstops(ns, what="time"):
	"""
	Converts nanoseconds to integer picoseconds, refusing values that are not whole picoseconds.
	"""
	ps = int(round(float(ns) * 1000.0))
	if abs(ps - float(ns) * 1000.0) > 1e-6:
		raise err.ValidationError("{} of {} ns is not a whole number of picoseconds".format(what, ns))
	return ps


def checkseed(seed):
	"""
	Seeds are non-negative python ints below 2**64.
	"""
	if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
		raise err.ValidationError("Seed must be an integer, got {!r}".format(seed))
	seed = int(seed)
	if seed < 0 or seed >= 2**64:
		raise err.ValidationError("Seed must be within [0, 2**64), got {}".format(seed))
	return seed


def deriveseed(seed, *indices):
	"""
	Derives an independent seed for a sub-task (a scan point, a bootstrap, ...) from a parent seed.
	The result only depends on (seed, indices).
	"""
	words = np.random.SeedSequence([checkseed(seed)] + [int(i) for i in indices]).generate_state(1, dtype=np.uint64)
	return int(words[0])
