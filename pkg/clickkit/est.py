"""
Estimators working on click histograms: empirical C_k, Q_B with its standard error, factorial moments
<:pi^q:>, the matrix of moments and the significance of its negative directions.

Every quantity used here is either a smooth function of the empirical C_k (Q_B) or linear in them
(moments and quadratic forms of the matrix of moments). Uncertainties are propagated over the multinomial
covariance (C - C C^T) / M, and cross-checked by bootstrapping the windows, which amounts to
redrawing the histogram from a multinomial with the observed frequencies.
"""

import math
import numpy as np

import logging
logger = logging.getLogger(__name__)

from . import err
from . import utils
from . import theory


JACOBITOL = 1e-14 # Relative off-diagonal norm at which Jacobi stops
MAXSWEEPS = 100
MINBOOT = 1000
ZEROTOL = 1e-12 # Quadratic forms below this fraction of the largest |eigenvalue| are numerically zero

NONCLASSICAL = "NONCLASSICAL"
CLASSICAL = "CLASSICAL-CONSISTENT"


class QBResult():
	"""
	Q_B estimated from M windows, with its standard error.
	"""
	def __init__(self, value, sigma, n_windows, mean_clicks, method="delta"):
		assert sigma >= 0.0
		self.value = value
		self.sigma = sigma
		self.n_windows = n_windows
		self.mean_clicks = mean_clicks
		self.method = method

	def __str__(self):
		return "Q_B = {:.5g} +/- {:.2g} ({}, {} windows, <k> = {:.5g})".format(self.value, self.sigma, self.method, self.n_windows, self.mean_clicks)


class MomentMatrix():
	"""
	The Hankel matrix entries[m][n] = <:pi^(m+n):>, m, n = 0 ... floor(N/2), and its eigen-decomposition.
	Eigenvalues are ascending, eigenvectors are the matching columns.
	"""
	def __init__(self, entries, eigenvalues, eigenvectors, sweeps=0):
		self.entries = entries
		self.eigenvalues = eigenvalues
		self.eigenvectors = eigenvectors
		self.sweeps = sweeps

	@property
	def dimension(self):
		return self.entries.shape[0]

	def quadratic_form(self, direction):
		direction = _checkdirection(direction, self.dimension)
		return float(direction @ self.entries @ direction)

	def __str__(self):
		return "MomentMatrix {0}x{0}, eigenvalues {1}".format(self.dimension, np.array2string(self.eigenvalues, precision=6))


class FormEstimate():
	"""
	A quadratic form <:f^dagger f:> of the matrix of moments estimated from data.

	:param sigma: bootstrap standard error
	:param sem: analytic (multinomial) standard error of the same quantity
	"""
	def __init__(self, value, sigma, sem):
		self.value = value
		self.sigma = sigma
		self.sem = sem

	@property
	def significance(self):
		"""
		|value| / sigma. NaN if both vanish, inf if only sigma does.
		"""
		if self.sigma == 0.0:
			return float("nan") if self.value == 0.0 else float("inf")
		return abs(self.value) / self.sigma



def jacobi(A, tol=JACOBITOL, maxsweeps=MAXSWEEPS):
	"""
	Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

	Each rotation zeroes one off-diagonal pair, with the small-angle choice of the rotation
	(t = sign(tau) / (|tau| + sqrt(1 + tau^2))). Sweeps go over all pairs p < q in row order until the
	off-diagonal Frobenius norm drops below tol times the Frobenius norm of A.

	:returns: (eigenvalues ascending, eigenvectors as columns, number of sweeps)
	"""
	A = np.array(A, dtype=np.float64)
	if A.ndim != 2 or A.shape[0] != A.shape[1]:
		raise err.DimensionMismatch("Jacobi needs a square matrix, got shape {}".format(A.shape))
	if np.any(A != A.T):
		raise err.ValidationError("Jacobi needs a symmetric matrix")
	n = A.shape[0]
	V = np.eye(n)
	target = tol * np.linalg.norm(A)

	def offnorm(A):
		off = A - np.diag(np.diag(A))
		return math.sqrt(np.sum(off * off))

	sweeps = 0
	while offnorm(A) > target:
		if sweeps >= maxsweeps:
			raise err.EigenNoConvergence(sweeps, offnorm(A))
		for p in range(n - 1):
			for q in range(p + 1, n):
				if A[p, q] == 0.0:
					continue
				tau = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
				t = (1.0 if tau >= 0.0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
				c = 1.0 / math.sqrt(1.0 + t * t)
				s = t * c
				(colp, colq) = (A[:, p].copy(), A[:, q].copy())
				A[:, p] = c * colp - s * colq
				A[:, q] = s * colp + c * colq
				(rowp, rowq) = (A[p, :].copy(), A[q, :].copy())
				A[p, :] = c * rowp - s * rowq
				A[q, :] = s * rowp + c * rowq
				A[p, q] = A[q, p] = 0.0
				(colp, colq) = (V[:, p].copy(), V[:, q].copy())
				V[:, p] = c * colp - s * colq
				V[:, q] = s * colp + c * colq
		sweeps += 1

	eigenvalues = np.diag(A).copy()
	order = np.argsort(eigenvalues, kind="stable")
	V = V[:, order]
	# Deterministic signs: largest component of each eigenvector positive
	signs = np.sign(V[np.argmax(np.fabs(V), axis=0), np.arange(n)])
	V = V * np.where(signs == 0.0, 1.0, signs)
	logger.debug("Jacobi converged in {} sweeps".format(sweeps))
	return (eigenvalues[order], V, sweeps)



def empirical_click_distribution(hist):
	"""
	C_k = M_k / M
	"""
	if hist.total < 1:
		raise err.EmptyHistogram("The histogram contains no window")
	return theory.ClickDistribution(hist.m_k / float(hist.total))


def _qbgradient(c):
	"""
	Partial derivatives of Q_B = N V / D - 1 with respect to the C_k, with V the variance and D = mu (N - mu).
	"""
	N = c.N
	ks = np.arange(N + 1, dtype=np.float64)
	mu = c.mean()
	var = c.variance()
	D = mu * (N - mu)
	dV = ks * ks - 2.0 * mu * ks
	dD = (N - 2.0 * mu) * ks
	return N * (dV * D - var * dD) / (D * D)


def _linearsem(c, h, M):
	"""
	Standard error of sum_k h_k C_k^exp under multinomial sampling of M windows.
	"""
	cv = c.c
	var = math.fsum(cv * h * h) - math.fsum(cv * h)**2
	return math.sqrt(max(var, 0.0) / M)


def _checknboot(nboot):
	if isinstance(nboot, bool) or int(nboot) != nboot or nboot < MINBOOT:
		raise err.ValidationError("Need at least {} bootstrap replicates, got {}".format(MINBOOT, nboot))
	return int(nboot)


def _bootstrap(hist, nboot, seed):
	"""
	Bootstrap replicates of the empirical C_k, as an (nboot, N+1) array.
	Resampling M windows with replacement is the same as a multinomial draw of the whole histogram.
	"""
	rng = np.random.default_rng(utils.checkseed(seed))
	return rng.multinomial(hist.total, hist.m_k / float(hist.total), size=_checknboot(nboot)) / float(hist.total)


def qb_estimate(hist, method="delta", nboot=MINBOOT, seed=0):
	"""
	Q_B of the empirical click distribution with its standard error.

	:param method: "delta" propagates the multinomial covariance through the gradient of Q_B,
		"bootstrap" uses the spread of Q_B over nboot resampled histograms.
	"""
	c = empirical_click_distribution(hist)
	value = theory.qb_of(c)
	N = c.N
	M = hist.total

	if method == "delta":
		sigma = _linearsem(c, _qbgradient(c), M)
	elif method == "bootstrap":
		reps = _bootstrap(hist, nboot, seed)
		ks = np.arange(N + 1, dtype=np.float64)
		mus = reps @ ks
		variances = reps @ (ks * ks) - mus * mus
		denoms = mus * (N - mus)
		ok = denoms > 0.0
		if not np.all(ok):
			logger.warning("{} of {} bootstrap replicates have a degenerate mean and are skipped".format(int(np.sum(~ok)), ok.size))
		qbs = N * variances[ok] / denoms[ok] - 1.0
		if qbs.size < 2:
			raise err.DegenerateMean("Almost every bootstrap replicate has a degenerate mean")
		sigma = float(np.std(qbs, ddof=1))
	else:
		raise err.ValidationError("Unknown uncertainty method '{}'".format(method))

	return QBResult(value, sigma, M, c.mean(), method=method)



def _momentweights(N, order):
	"""
	The coefficients w_k = k (k-1) ... (k-order+1) / (N (N-1) ... (N-order+1)), k = 0 ... N.
	Ratios of exact integers, rounded once.
	"""
	denom = utils.falling(N, order)
	return np.array([utils.falling(k, order) / denom for k in range(N + 1)])


def factorial_pi_moment(c_exp, order):
	"""
	<:pi^order:> = (N-order)!/N! sum_k k (k-1) ... (k-order+1) C_k
	"""
	N = c_exp.N
	if isinstance(order, bool) or int(order) != order or order < 0 or order > N:
		raise err.OrderOutOfRange("Moment order must be within 0 ... {}, got {}".format(N, order))
	return math.fsum(_momentweights(N, int(order)) * c_exp.c)


def moment_matrix(c_exp):
	"""
	Fills the matrix of moments from a click distribution and diagonalizes it.
	"""
	N = c_exp.N
	if N < 2:
		raise err.TooFewDetectors("The matrix of moments needs N >= 2, got {}".format(N))
	d = N // 2 + 1
	moments = np.array([factorial_pi_moment(c_exp, q) for q in range(2 * d - 1)])
	idx = np.arange(d)
	entries = moments[idx[:, None] + idx[None, :]]
	(eigenvalues, eigenvectors, sweeps) = jacobi(entries)
	return MomentMatrix(entries, eigenvalues, eigenvectors, sweeps)


def _checkdirection(direction, d):
	direction = np.asarray(direction, dtype=np.float64).reshape(-1)
	if direction.size != d:
		raise err.DimensionMismatch("Direction has {} components, the matrix of moments has dimension {}".format(direction.size, d))
	return direction


def _formweights(direction, N):
	"""
	h_k such that <:f^dagger f:> = sum_k h_k C_k.
	"""
	coeffs = np.convolve(direction, direction) # coefficient of <:pi^q:>, q = m + n
	return sum(a * _momentweights(N, q) for (q, a) in enumerate(coeffs))


def quadratic_form_estimate(hist, direction, nboot=MINBOOT, seed=0):
	"""
	<:f^dagger f:> = sum_{m,n} f_m f_n <:pi^(m+n):> from a histogram, with bootstrap and analytic errors.
	"""
	N = hist.N
	direction = _checkdirection(direction, N // 2 + 1)
	c = empirical_click_distribution(hist)
	h = _formweights(direction, N)
	value = math.fsum(h * c.c)
	reps = _bootstrap(hist, nboot, seed)
	sigma = float(np.std(reps @ h, ddof=1))
	return FormEstimate(value, sigma, _linearsem(c, h, hist.total))


def significance(hist, direction, nboot=MINBOOT, seed=0):
	"""
	Sigma = |<:f^dagger f:>| / sigma(<:f^dagger f:>), sigma from nboot bootstrap replicates.
	"""
	return quadratic_form_estimate(hist, direction, nboot=nboot, seed=seed).significance



class Report():
	"""
	Everything the nonclassicality test found, renderable as key: value lines.
	"""

	def __init__(self, hist, c_exp, qb, mom, forms, zeros, threshold, verdict):
		self.hist = hist
		self.c_exp = c_exp
		self.qb = qb
		self.mom = mom
		self.forms = forms
		self.zeros = zeros
		self.threshold = threshold
		self.verdict = verdict

	@property
	def max_k_observed(self):
		return self.hist.maxk()

	@property
	def truncated(self):
		return self.max_k_observed < self.hist.N

	@property
	def qb_witness(self):
		if self.qb is None:
			return False
		return self.qb.value + self.threshold * self.qb.sigma < 0.0

	def negative_directions(self):
		"""
		Indices of the directions with a significantly negative quadratic form.
		"""
		return [i for (i, (f, zero)) in enumerate(zip(self.forms, self.zeros))
			if not zero and f.value < 0.0 and f.significance > self.threshold]

	def asdict(self):
		d = {
			"verdict": self.verdict,
			"threshold": self.threshold,
			"n_windows": self.hist.total,
			"N": self.hist.N,
			"mode": self.hist.mode,
			"window_ns": self.hist.window_ns,
			"c_exp": self.c_exp.c.tolist(),
			"mean_clicks": self.c_exp.mean(),
			"qb": None if self.qb is None else self.qb.value,
			"qb_sigma": None if self.qb is None else self.qb.sigma,
			"qb_witness": self.qb_witness,
			"eigenvalues": self.mom.eigenvalues.tolist(),
			"forms": [f.value for f in self.forms],
			"form_sigmas": [f.sigma for f in self.forms],
			"form_sems": [f.sem for f in self.forms],
			"significances": [f.significance for f in self.forms],
			"numerically_zero": list(self.zeros),
			"negative_directions": self.negative_directions(),
			"max_k_observed": self.max_k_observed,
			"truncated": self.truncated,
		}
		for (i, v) in enumerate(self.mom.eigenvectors.T):
			d["eigenvector_{}".format(i)] = v.tolist()
		return d

	def lines(self):
		def fmt(v):
			if isinstance(v, list):
				return ", ".join(fmt(x) for x in v)
			if isinstance(v, float):
				return repr(v)
			return str(v)
		return ["{}: {}".format(key, fmt(value)) for (key, value) in self.asdict().items()]

	def summary(self):
		return "\n".join(self.lines())

	def __str__(self):
		return "Report: {} ({}, {})".format(self.verdict, self.qb, self.mom)


def nonclassicality_verdict(hist, threshold=5.0, nboot=MINBOOT, seed=0):
	"""
	Runs both witnesses on a histogram.

	NONCLASSICAL if Q_B + threshold sigma_QB < 0, or if some eigen-direction of the matrix of moments has a
	negative quadratic form with significance above threshold. Directions whose form is numerically zero
	never count.
	"""
	threshold = float(threshold)
	if not threshold > 0.0:
		raise err.ValidationError("Significance threshold must be > 0, got {}".format(threshold))
	c_exp = empirical_click_distribution(hist)
	mom = moment_matrix(c_exp)
	try:
		qb = qb_estimate(hist)
	except err.DegenerateMean as e:
		# No click at all, or every detector always clicked: only the moments can tell
		logger.warning("Q_B undefined, using the matrix of moments only: {}".format(e))
		qb = None
	scale = float(np.max(np.fabs(mom.eigenvalues)))
	forms = []
	zeros = []
	for (i, direction) in enumerate(mom.eigenvectors.T):
		form = quadratic_form_estimate(hist, direction, nboot=nboot, seed=utils.deriveseed(seed, i))
		forms.append(form)
		zeros.append(abs(form.value) <= ZEROTOL * scale)

	verdict = CLASSICAL
	report = Report(hist, c_exp, qb, mom, forms, zeros, threshold, verdict)
	if report.qb_witness or len(report.negative_directions()) > 0:
		report.verdict = NONCLASSICAL
	if report.truncated:
		logger.warning("Largest observed click number is {} < N = {}: finite statistics truncate the distribution".format(report.max_k_observed, hist.N))
	logger.info("{}".format(report))
	return report
