"""
Exact click-counting statistics of an array of N on-off detectors.

The single-detector click operator is pi = :1 - exp(-(eta n + nu)/N): and the probability of k clicks is
C_k = <: binom(N,k) pi^k (1-pi)^(N-k) :>. Everything is evaluated by expanding into normally ordered
exponentials, see state.expmoments.

Dark counts: nu is the total dark-count parameter per window, each channel gets nu/N.
"""

import math
import numpy as np
import scipy.optimize

import logging
logger = logging.getLogger(__name__)

from . import err
from . import utils
from . import state


WEIGHTSTOL = 1e-12
UNIFORMTOL = 1e-15
SUMTOL = 1e-9 # Normalization and cancellation tolerance for analytic C_k
NEGTOL = 1e-10 # Roundoff below zero tolerated in C_k


class DetectorArrayConfig():
	"""
	N on-off detectors with efficiency eta and total dark-count parameter nu, fed with the fractions
	weights[i] of the input intensity.
	"""

	def __init__(self, N, eta=1.0, nu=0.0, weights=None):
		"""
		:param weights: per-channel intensity fractions, summing to one. None means uniform.
		"""
		if isinstance(N, bool) or int(N) != N or N < 1:
			raise err.InvalidConfig("Number of detectors must be an integer >= 1, got {}".format(N))
		self.N = int(N)
		self.eta = float(eta)
		self.nu = float(nu)
		if not (0.0 <= self.eta <= 1.0):
			raise err.InvalidConfig("Efficiency must be within [0, 1], got {}".format(eta))
		if not (np.isfinite(self.nu) and self.nu >= 0.0):
			raise err.InvalidConfig("Dark-count parameter must be >= 0, got {}".format(nu))

		if weights is None:
			weights = np.full(self.N, 1.0 / self.N)
		weights = np.array(weights, dtype=np.float64)
		if weights.shape != (self.N,):
			raise err.InvalidConfig("Need {} weights, got shape {}".format(self.N, weights.shape))
		if np.any(weights < 0.0) or abs(math.fsum(weights) - 1.0) > WEIGHTSTOL:
			raise err.InvalidConfig("Weights must be >= 0 and sum to 1, got {}".format(weights))
		weights.flags.writeable = False
		self.weights = weights

	@classmethod
	def fromstages(cls, m, eta=1.0, nu=0.0):
		"""
		Uniform array behind a cascade of m 50/50 splitters, N = 2^m.
		"""
		if isinstance(m, bool) or int(m) != m or m < 0:
			raise err.InvalidConfig("Number of stages must be an integer >= 0, got {}".format(m))
		return cls(2**int(m), eta=eta, nu=nu)

	def isuniform(self):
		return bool(np.all(np.fabs(self.weights - 1.0 / self.N) <= UNIFORMTOL))

	def __str__(self):
		shape = "uniform" if self.isuniform() else "weights {}".format(np.array2string(self.weights, precision=4))
		return "DetectorArrayConfig N={self.N}, eta={self.eta}, nu={self.nu}, {shape}".format(self=self, shape=shape)



class ClickDistribution():
	"""
	Probabilities C_k of k clicks, k = 0 ... N.
	"""

	def __init__(self, c, config=None):
		"""
		:param c: the N+1 values C_k
		:param config: the DetectorArrayConfig it was computed for (None for empirical distributions)
		"""
		c = np.array(c, dtype=np.float64)
		if c.ndim != 1 or c.size < 2:
			raise err.InvalidDistribution("Need at least C_0 and C_1, got shape {}".format(c.shape))
		if np.any(c < -NEGTOL):
			raise err.InvalidDistribution("C_{} = {} is negative".format(int(np.argmin(c)), np.min(c)))
		total = math.fsum(c)
		if abs(total - 1.0) > SUMTOL:
			raise err.InvalidDistribution("C_k sum to {!r}, not 1".format(total))
		if config is not None and config.N != c.size - 1:
			raise err.DimensionMismatch("{} values do not fit N = {}".format(c.size, config.N))
		c.flags.writeable = False
		self.c = c
		self.config = config

	@property
	def N(self):
		return self.c.size - 1

	def mean(self):
		return math.fsum(self.c * np.arange(self.c.size))

	def variance(self):
		ks = np.arange(self.c.size)
		mean = self.mean()
		return math.fsum(self.c * (ks - mean)**2)

	def qb(self):
		return qb_of(self)

	def __str__(self):
		return "ClickDistribution N={} [{}]".format(self.N, ", ".join("{:.4g}".format(v) for v in self.c))



def _checkanalytic(cfg):
	if not cfg.isuniform():
		raise err.NonUniformWeightsUnsupported("The analytic C_k need uniform splitting, use coherent_click_distribution or the simulator")
	if cfg.N > utils.MAXEXACTN:
		raise err.InvalidConfig("Analytic C_k are limited to N <= {}, got {}".format(utils.MAXEXACTN, cfg.N))


def _vacuumterms(pnd, cfg, js):
	"""
	a_j = <: exp(-j (eta n + nu)/N) :> for the integers js, in extended precision.
	"""
	js = np.asarray(js).astype(np.longdouble)
	darks = np.exp(-js * cfg.nu / cfg.N)
	return darks * state.expmoments(pnd, js * cfg.eta / cfg.N)


def pi_moment(pnd, cfg, m):
	"""
	<:pi^m:> = sum_l binom(m,l) (-1)^l exp(-l nu/N) <:exp(-l eta n/N):>
	"""
	_checkanalytic(cfg)
	if isinstance(m, bool) or int(m) != m or m < 0 or m > cfg.N:
		raise err.OrderOutOfRange("Moment order must be within 0 ... {}, got {}".format(cfg.N, m))
	m = int(m)
	ls = np.arange(m + 1)
	signed = np.array([float((-1)**l * utils.binom(m, l)) for l in ls], dtype=np.longdouble)
	return float(utils.monitoredsum(signed * _vacuumterms(pnd, cfg, ls), tol=SUMTOL, what="<:pi^{}:>".format(m)))


def click_distribution(pnd, cfg):
	"""
	Exact C_k for uniform splitting and any photon-number distribution.

	We use pi^k (1-pi)^(N-k) = sum_l binom(k,l) (-1)^l :exp(-(N-k+l)(eta n+nu)/N):, which gives the same
	values as binom(N,k) sum_j binom(N-k,j) (-1)^j <:pi^(k+j):> with a single alternating sum per k.
	"""
	_checkanalytic(cfg)
	N = cfg.N
	a = _vacuumterms(pnd, cfg, np.arange(N + 1)) # a[j] = <:exp(-j(eta n+nu)/N):>
	c = np.empty(N + 1)
	worst = 0.0
	for k in range(N + 1):
		ls = np.arange(k + 1)
		terms = np.array([float((-1)**l * utils.binom(N, k) * utils.binom(k, l)) for l in ls], dtype=np.longdouble) * a[N - k + ls]
		c[k] = float(utils.monitoredsum(terms, tol=SUMTOL, what="C_{}".format(k)))
		worst = max(worst, float(np.sum(np.fabs(terms))))
	logger.debug("Computed C_k for {} with {}, largest alternating magnitude {:.3e}".format(pnd, cfg, worst))

	total = math.fsum(c)
	if abs(total - 1.0) > SUMTOL or np.any(c < -NEGTOL):
		raise err.NumericalInstability("C_k are not a probability distribution (sum {!r}, min {!r})".format(total, np.min(c)), abs(total - 1.0))
	return ClickDistribution(c, config=cfg)


def _poissonbinomial(ps):
	"""
	Distribution of the number of successes of independent trials with probabilities ps,
	by exact convolution one channel at a time.
	"""
	dist = np.zeros(len(ps) + 1)
	dist[0] = 1.0
	for (i, p) in enumerate(ps):
		dist[1:i + 2] = dist[1:i + 2] * (1.0 - p) + dist[0:i + 1] * p
		dist[0] *= (1.0 - p)
	return dist


def clickprobability(cfg, mean_photons):
	"""
	The per-channel click probability p = 1 - exp(-(eta mean + nu)/N) of a uniform array under coherent light.
	"""
	return -math.expm1(-(cfg.eta * mean_photons + cfg.nu) / cfg.N)


def coherent_click_distribution(cfg, mean_photons):
	"""
	C_k for a coherent input: binomial for uniform weights, Poisson-binomial otherwise, as the
	channels receive independent coherent states.
	"""
	mean_photons = float(mean_photons)
	if not np.isfinite(mean_photons) or mean_photons < 0.0:
		raise err.InvalidMean("Mean photon number must be finite and >= 0, got {}".format(mean_photons))
	N = cfg.N
	if cfg.isuniform():
		p = clickprobability(cfg, mean_photons)
		c = np.array([utils.binom(N, k) * p**k * (1.0 - p)**(N - k) for k in range(N + 1)])
	else:
		ps = -np.expm1(-(cfg.eta * mean_photons * cfg.weights + cfg.nu / N))
		c = _poissonbinomial(ps)
	return ClickDistribution(c, config=cfg)


def qb_of(distribution):
	"""
	Q_B = N <(dk)^2> / (<k> (N - <k>)) - 1.
	Zero for binomial, negative for sub-binomial, positive for super-binomial click statistics.
	"""
	N = distribution.N
	if N < 2:
		raise err.TooFewDetectors("Q_B needs N >= 2 detectors, got {}".format(N))
	mean = distribution.mean()
	if mean <= 1e-15 or N - mean <= 1e-15:
		raise err.DegenerateMean("Mean click number {!r} leaves Q_B undefined for N = {}".format(mean, N))
	return N * distribution.variance() / (mean * (N - mean)) - 1.0


def analytic_qb(pnd, cfg):
	"""
	Q_B straight from the first two factorial moments,
	Q_B = (N-1) (<:pi^2:> - <:pi:>^2) / (<:pi:> (1 - <:pi:>)),
	which avoids the long alternating sums behind the full C_k.
	"""
	if cfg.N < 2:
		raise err.TooFewDetectors("Q_B needs N >= 2 detectors, got {}".format(cfg.N))
	_checkanalytic(cfg)
	ls = np.arange(3)
	a = _vacuumterms(pnd, cfg, ls)
	pi1 = a[0] - a[1]
	pi2 = a[0] - 2 * a[1] + a[2]
	if pi1 <= 1e-15 or 1 - pi1 <= 1e-15:
		raise err.DegenerateMean("Click probability {!r} leaves Q_B undefined".format(float(pi1)))
	return float((cfg.N - 1) * (pi2 - pi1 * pi1) / (pi1 * (1 - pi1)))


def fock_qb(N, eta):
	"""
	Q_B of a single photon with efficiency eta and no dark counts: -eta (N-1) / (N-eta).
	"""
	return -eta * (N - 1.0) / (N - eta)


def mean_clicks(cfg, pnd):
	"""
	<k> = N <:pi:> for a uniform array.
	"""
	return cfg.N * pi_moment(pnd, cfg, 1)


def mean_photons_for_clicks(cfg, target, noise=0.0, xtol=1e-10):
	"""
	Inverts <k> = N (1 - <:exp(-(eta n + nu)/N):>) for (fluctuating) coherent light by bisection.
	For noise = 0 the vacuum term is exp(-mu x), otherwise (1 + mu noise^2 x)^(-1/noise^2).

	:returns: the mean photon number
	"""
	N = cfg.N
	x = cfg.eta / N
	dark = math.exp(-cfg.nu / N)
	lowest = N * (1.0 - dark)
	if not (lowest <= target < N) or cfg.eta == 0.0:
		raise err.ValidationError("Cannot reach <k> = {} with {} (dark counts alone give {:.4g})".format(target, cfg, lowest))
	if target == lowest:
		return 0.0

	def vacuum(mu):
		if noise == 0.0:
			return math.exp(-mu * x)
		r2 = noise * noise
		return (1.0 + mu * r2 * x)**(-1.0 / r2)

	def f(mu):
		return N * (1.0 - dark * vacuum(mu)) - target

	hi = 1.0
	while f(hi) < 0.0:
		hi *= 2.0
		if hi > 1e12:
			raise err.NumericalInstability("No bracket found for <k> = {}".format(target), hi)
	return scipy.optimize.bisect(f, 0.0, hi, xtol=xtol)


def efficiency_for_clicks(cfg, n, target):
	"""
	The efficiency eta at which Fock state n gives <k> = target on this array (cfg.eta is ignored):
	<k> = N (1 - exp(-nu/N) (1 - eta/N)^n).
	"""
	N = cfg.N
	if n < 1:
		raise err.ValidationError("Need at least one photon to scale the efficiency")
	inner = (1.0 - target / N) * math.exp(cfg.nu / N)
	if inner > 1.0 or inner < 0.0:
		raise err.ValidationError("<k> = {} is out of reach of Fock {} on {}".format(target, n, cfg))
	eta = N * (1.0 - inner**(1.0 / n))
	if eta > 1.0 + 1e-12:
		raise err.ValidationError("<k> = {} would need efficiency {:.4f} > 1 for Fock {}".format(target, eta, n))
	return min(eta, 1.0)
