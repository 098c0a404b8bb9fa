"""
Input light, described by its photon-number distribution.

All click formulas only need the normally ordered exponential moments <:exp(-x n):> = sum_n P(n) (1-x)^n,
which this module provides. Optical phases of the split output modes are not represented:
click counting does not see them.
"""

import math
import numpy as np
import scipy.stats

import logging
logger = logging.getLogger(__name__)

from . import err


NORMTOL = 1e-12 # Allowed deviation of sum(probs) from 1
POISSONTAIL = 1e-12 # Max discarded mass for coherent states
GEOMTAIL = 1e-9 # idem for thermal and fluctuating states


class PhotonNumberDistribution():
	"""
	A dense probability vector over the photon numbers n = 0 ... n_max.
	Instances are not meant to be modified: the probs array is read-only.
	"""

	def __init__(self, probs, label="custom"):
		"""
		:param probs: 1D array-like of probabilities, index is the photon number
		:param label: free text tag, "coherent", "fock", "thermal", ...
		"""
		probs = np.array(probs, dtype=np.float64)
		if probs.ndim != 1 or probs.size == 0:
			raise err.InvalidDistribution("Need a non-empty 1D probability vector, got shape {}".format(probs.shape))
		if not np.all(np.isfinite(probs)):
			raise err.InvalidDistribution("Probabilities must be finite")
		if np.any(probs < 0.0):
			raise err.InvalidDistribution("Negative probability at n = {}".format(int(np.argmin(probs))))
		total = math.fsum(probs)
		if abs(total - 1.0) > NORMTOL:
			raise err.InvalidDistribution("Probabilities sum to {!r}, not 1".format(total))

		probs.flags.writeable = False
		self.probs = probs
		self.label = label

	@property
	def n_max(self):
		return self.probs.size - 1

	def mean(self):
		return math.fsum(self.probs * np.arange(self.probs.size))

	def __str__(self):
		return "PhotonNumberDistribution '{}' (n_max {}, mean {:.6g})".format(self.label, self.n_max, self.mean())



def _truncate(dist, n_max, bound, what):
	"""
	Picks n_max for a scipy.stats frozen discrete distribution, or checks the one given,
	so that the mass above n_max does not exceed bound.
	"""
	if n_max is None:
		n_max = max(int(dist.isf(bound / 10.0)), 0)
		while dist.sf(n_max) > bound:
			n_max += 1
	else:
		n_max = int(n_max)
		if n_max < 0:
			raise err.IndexOutOfRange("n_max must be >= 0, got {}".format(n_max))
	tail = float(dist.sf(n_max))
	if tail > bound:
		raise err.TailMassTooLarge("Truncation of the {} distribution at n_max = {} discards {:.3e} > {:.0e}".format(what, n_max, tail, bound))
	return n_max


def _checkmean(mean_photons):
	mean_photons = float(mean_photons)
	if not np.isfinite(mean_photons) or mean_photons < 0.0:
		raise err.InvalidMean("Mean photon number must be finite and >= 0, got {}".format(mean_photons))
	return mean_photons


def _renormed(pmf, label):
	return PhotonNumberDistribution(pmf / math.fsum(pmf), label=label)


def coherent_distribution(mean_photons, n_max=None):
	"""
	Poissonian photon numbers of a coherent state |alpha> with |alpha|^2 = mean_photons,
	truncated at n_max and renormalized.

	:param n_max: if None, the smallest bound with a discarded tail below 1e-12 is used.
	"""
	mean_photons = _checkmean(mean_photons)
	if mean_photons == 0.0:
		return fock_distribution(0, 0 if n_max is None else n_max, label="coherent")
	dist = scipy.stats.poisson(mean_photons)
	n_max = _truncate(dist, n_max, POISSONTAIL, "coherent")
	return _renormed(dist.pmf(np.arange(n_max + 1)), "coherent")


def fock_distribution(n, n_max=None, label="fock"):
	"""
	Point mass at n photons.
	"""
	n = int(n)
	n_max = n if n_max is None else int(n_max)
	if n < 0 or n > n_max:
		raise err.IndexOutOfRange("Fock state n = {} outside 0 ... n_max = {}".format(n, n_max))
	probs = np.zeros(n_max + 1)
	probs[n] = 1.0
	return PhotonNumberDistribution(probs, label=label)


def thermal_distribution(mean_photons, n_max=None):
	"""
	Geometric (Bose-Einstein) photon numbers, P(n) = mu^n / (1+mu)^(n+1).
	The discarded tail has to stay below 1e-9.
	"""
	mean_photons = _checkmean(mean_photons)
	if mean_photons == 0.0:
		return fock_distribution(0, 0 if n_max is None else n_max, label="thermal")
	dist = scipy.stats.nbinom(1, 1.0 / (1.0 + mean_photons))
	n_max = _truncate(dist, n_max, GEOMTAIL, "thermal")
	return _renormed(dist.pmf(np.arange(n_max + 1)), "thermal")


def fluctuating_coherent_distribution(mean_photons, noise, n_max=None):
	"""
	Coherent light whose intensity fluctuates between windows, Gamma-distributed with
	relative standard deviation noise. The photon numbers are then negative binomial.
	noise = 0 gives back the coherent state, noise = 1 the thermal one.
	"""
	mean_photons = _checkmean(mean_photons)
	noise = float(noise)
	if not np.isfinite(noise) or noise < 0.0:
		raise err.ValidationError("Intensity noise must be finite and >= 0, got {}".format(noise))
	if noise == 0.0:
		return coherent_distribution(mean_photons, n_max)
	if mean_photons == 0.0:
		return fock_distribution(0, 0 if n_max is None else n_max, label="fluctuating")
	r2 = noise * noise
	dist = scipy.stats.nbinom(1.0 / r2, 1.0 / (1.0 + mean_photons * r2))
	n_max = _truncate(dist, n_max, GEOMTAIL, "fluctuating")
	return _renormed(dist.pmf(np.arange(n_max + 1)), "fluctuating")


def mixture_distribution(components, weights):
	"""
	Convex combination of distributions, padded to the largest n_max.
	"""
	weights = np.asarray(weights, dtype=np.float64)
	if len(components) == 0 or len(components) != weights.size:
		raise err.InvalidDistribution("Need as many weights ({}) as components ({})".format(weights.size, len(components)))
	if np.any(weights < 0.0) or abs(math.fsum(weights) - 1.0) > NORMTOL:
		raise err.InvalidDistribution("Mixture weights must be >= 0 and sum to 1, got {}".format(weights))
	n_max = max(c.n_max for c in components)
	probs = np.zeros(n_max + 1)
	for (c, w) in zip(components, weights):
		probs[:c.n_max + 1] += w * c.probs
	return _renormed(probs, "mixture")


def expmoments(pnd, xs):
	"""
	<:exp(-x n):> for several x at once, in extended precision.

	:returns: np.longdouble array with the same length as xs
	"""
	ns = np.arange(pnd.probs.size)
	probs = pnd.probs.astype(np.longdouble)
	bases = 1.0 - np.asarray(xs, dtype=np.longdouble)
	return np.array([np.sum(probs * np.power(b, ns)) for b in bases], dtype=np.longdouble)


def normally_ordered_exp_moment(pnd, x):
	"""
	<:exp(-x n):> = sum_n P(n) (1-x)^n.
	Any real x is accepted, for x > 1 the terms alternate in sign.
	"""
	return float(expmoments(pnd, [x])[0])
