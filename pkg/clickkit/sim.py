"""
Monte Carlo emulation of the multiplexed detector.

Per window: draw a photon number, route every photon to a leaf of the splitter tree, keep it with
probability eta, add Poisson(nu/N) dark counts per channel, and count the channels with at least one
count. Photons are routed with the leaf probabilities (no amplitude-level interference).

Random numbers: windows are grouped into fixed blocks of BLOCKSIZE, and each block draws from its own
counter-based Philox stream keyed by the seed, with the block index in the counter.
The block partition does not depend on the number of CPUs, so neither do the results.
"""

import math
import numpy as np

import logging
logger = logging.getLogger(__name__)

from . import err
from . import utils
from . import theory
from . import parmap


BLOCKSIZE = 65536

CW = "continuous_wave"
TRIGGERED = "triggered"
MODES = (CW, TRIGGERED)

TAGMAGIC = "#clickkit-tags v1"


class SplitterTree():
	"""
	Complete binary tree of m stages of two-port splitters, N = 2^m leaves.

	Transmittances are given per internal node in breadth-first order (root first, then left to right
	within each stage); t is the probability to continue into the first (left) output.
	"""

	def __init__(self, stages, transmittances=None):
		if isinstance(stages, bool) or int(stages) != stages or stages < 0:
			raise err.InvalidConfig("Number of stages must be an integer >= 0, got {}".format(stages))
		self.stages = int(stages)
		nnodes = 2**self.stages - 1
		if transmittances is None:
			transmittances = np.full(nnodes, 0.5)
		transmittances = np.array(transmittances, dtype=np.float64).reshape(-1)
		if transmittances.size != nnodes:
			raise err.InvalidConfig("A tree of {} stages has {} splitters, got {} transmittances".format(self.stages, nnodes, transmittances.size))
		if np.any(transmittances < 0.0) or np.any(transmittances > 1.0):
			raise err.InvalidConfig("Transmittances must be within [0, 1], got {}".format(transmittances))
		transmittances.flags.writeable = False
		self.transmittances = transmittances

	@property
	def N(self):
		return 2**self.stages

	def channel_probabilities(self):
		return channel_probabilities(self)

	def __str__(self):
		if np.all(self.transmittances == 0.5):
			return "SplitterTree of {} balanced stages".format(self.stages)
		return "SplitterTree of {} stages, t = {}".format(self.stages, np.array2string(self.transmittances, precision=4))


def channel_probabilities(tree):
	"""
	Probability for a photon to reach each leaf: the product of t or 1-t along its path.
	"""
	probs = np.ones(1)
	for stage in range(tree.stages):
		ts = tree.transmittances[2**stage - 1:2**(stage + 1) - 1]
		nextprobs = np.empty(2 * probs.size)
		nextprobs[0::2] = probs * ts
		nextprobs[1::2] = probs * (1.0 - ts)
		probs = nextprobs
	return probs



class ClickHistogram():
	"""
	Absolute counts M_k of windows with k clicks, k = 0 ... N.
	"""

	def __init__(self, m_k, window_ns=10.0, mode=CW, channel_clicks=None, overlaps=0):
		"""
		:param channel_clicks: optional number of windows in which each channel clicked
		:param overlaps: number of trigger windows that overlapped with the previous one (triggered mode)
		"""
		m_k = np.array(m_k)
		if m_k.ndim != 1 or m_k.size < 2:
			raise err.DimensionMismatch("Need counts for k = 0 ... N with N >= 1, got shape {}".format(m_k.shape))
		if not np.all(m_k == np.round(m_k)) or np.any(m_k < 0):
			raise err.InvalidDistribution("Click counts must be non-negative integers")
		m_k = m_k.astype(np.int64)
		if np.sum(m_k) < 1:
			raise err.EmptyHistogram("The histogram contains no window")
		if mode not in MODES:
			raise err.InvalidConfig("Unknown mode '{}'".format(mode))
		self.m_k = m_k
		self.window_ns = float(window_ns)
		self.mode = mode
		self.channel_clicks = None if channel_clicks is None else np.asarray(channel_clicks, dtype=np.int64)
		self.overlaps = int(overlaps)

	@property
	def N(self):
		return self.m_k.size - 1

	@property
	def total(self):
		return int(np.sum(self.m_k))

	def maxk(self):
		"""
		Largest k that was observed at least once.
		"""
		return int(np.nonzero(self.m_k)[0][-1])

	def channel_shares(self):
		"""
		Fraction of all clicks recorded by each channel.
		"""
		if self.channel_clicks is None:
			raise err.DataError("This histogram does not carry per-channel counts")
		total = np.sum(self.channel_clicks)
		if total == 0:
			raise err.EmptyHistogram("No channel ever clicked")
		return self.channel_clicks / float(total)

	def __str__(self):
		return "ClickHistogram ({}, {} windows of {} ns) M_k = {}".format(self.mode, self.total, self.window_ns, self.m_k.tolist())



def _blockrng(seed, block):
	return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, block, 0]))


def _clickblock(probs, q, eta, nu, seed, block, size):
	"""
	The (size, N) boolean click patterns of one block of windows.
	"""
	rng = _blockrng(seed, block)
	ns = rng.choice(probs.size, size=size, p=probs)
	counts = rng.multinomial(ns, q)
	if eta < 1.0:
		counts = rng.binomial(counts, eta)
	if nu > 0.0:
		counts = counts + rng.poisson(nu / q.size, size=counts.shape)
	return counts > 0


def _blocks(windows):
	"""
	The list of (block index, number of windows) covering the given number of windows.
	"""
	nblocks = int(math.ceil(windows / float(BLOCKSIZE)))
	return [(b, min(BLOCKSIZE, windows - b * BLOCKSIZE)) for b in range(nblocks)]


def _simulatejob(job):
	"""
	Worker: accumulates the histogram and channel counts of a list of blocks.
	"""
	(probs, q, eta, nu, seed, blocks) = job
	hist = np.zeros(q.size + 1, dtype=np.int64)
	channels = np.zeros(q.size, dtype=np.int64)
	for (block, size) in blocks:
		clicks = _clickblock(probs, q, eta, nu, seed, block, size)
		hist += np.bincount(np.sum(clicks, axis=1), minlength=q.size + 1)
		channels += np.sum(clicks, axis=0)
		logger.debug("Block {} done ({} windows)".format(block, size))
	return (hist, channels)


def _prepare(pnd, tree, eta, nu, windows, seed):
	"""
	Validates the run parameters, returns the detector config and the seed.
	"""
	cfg = theory.DetectorArrayConfig(tree.N, eta=eta, nu=nu, weights=tree.channel_probabilities())
	if isinstance(windows, bool) or int(windows) != windows or windows < 1:
		raise err.ValidationError("Need at least one window, got {}".format(windows))
	return (cfg, utils.checkseed(seed))


def _simulate(pnd, tree, eta, nu, windows, seed, window_ns, mode, ncpu):
	(cfg, seed) = _prepare(pnd, tree, eta, nu, windows, seed)
	windows = int(windows)
	logger.info("Simulating {} {} windows of {} through {} onto {}, seed {}".format(windows, mode, pnd, tree, cfg, seed))
	blocks = _blocks(windows)
	ncpu = min(parmap.getncpu(ncpu), len(blocks))
	jobs = [(pnd.probs, cfg.weights, cfg.eta, cfg.nu, seed, [blocks[i] for i in chunk]) for chunk in np.array_split(np.arange(len(blocks)), ncpu)]
	results = parmap.parmap(_simulatejob, jobs, ncpu)
	hist = np.sum([r[0] for r in results], axis=0)
	channels = np.sum([r[1] for r in results], axis=0)
	out = ClickHistogram(hist, window_ns=window_ns, mode=mode, channel_clicks=channels)
	logger.info("Done: {}".format(out))
	return out


def simulate_windows(pnd, tree, eta, nu, windows, seed, window_ns=10.0, ncpu=1):
	"""
	Continuous-wave emulation over a given number of coincidence windows.

	:param pnd: state.PhotonNumberDistribution of the light in one window
	:param tree: SplitterTree routing the photons
	:param eta: detector efficiency
	:param nu: total dark-count parameter per window (nu/N per channel)
	:param ncpu: processes to use (0 for all cores); does not affect the result
	"""
	return _simulate(pnd, tree, eta, nu, windows, seed, window_ns, CW, ncpu)


def simulate_triggered(pnd_heralded, tree, eta, nu, triggers, seed, window_ns=10.0, ncpu=1):
	"""
	Heralded emulation: one window per trigger. Set nu = 0 to model the dark-count suppression of heralding.
	"""
	return _simulate(pnd_heralded, tree, eta, nu, triggers, seed, window_ns, TRIGGERED, ncpu)


def write_tag_file(filepath, pnd, tree, eta, nu, windows, seed, window_ns=10.0, mode=CW):
	"""
	Runs the same simulation as simulate_windows / simulate_triggered (identical random streams) and writes
	the click patterns as a time-tag file, window w starting at w * window_ns.

	In continuous mode the file declares N channels. In triggered mode it declares N+1 channels, the last one
	being the trigger, which fires at the start of every window.

	:returns: the ClickHistogram of the simulated windows
	"""
	if mode not in MODES:
		raise err.InvalidConfig("Unknown mode '{}'".format(mode))
	(cfg, seed) = _prepare(pnd, tree, eta, nu, windows, seed)
	windows = int(windows)
	dtps = utils.nstops(window_ns, what="Window length")
	if dtps <= 0:
		raise err.ValidationError("Window length must be positive, got {} ns".format(window_ns))
	N = cfg.N

	if mode == CW:
		header = "{} channels={}".format(TAGMAGIC, N)
	else:
		header = "{} channels={} trigger={}".format(TAGMAGIC, N + 1, N)
	logger.info("Writing {} tags of {} windows to {}".format(mode, windows, filepath))

	hist = np.zeros(N + 1, dtype=np.int64)
	channels = np.zeros(N, dtype=np.int64)
	try:
		f = open(filepath, "w", encoding="utf-8", newline="\n")
	except OSError as e:
		raise err.UnwritableOutput("Cannot write tags to {}: {}".format(filepath, e.strerror or e))
	with f:
		f.write(header + "\n")
		f.write("# simulated: {}, {}, seed {}\n".format(pnd, cfg, seed))
		for (block, size) in _blocks(windows):
			clicks = _clickblock(pnd.probs, cfg.weights, cfg.eta, cfg.nu, seed, block, size)
			hist += np.bincount(np.sum(clicks, axis=1), minlength=N + 1)
			channels += np.sum(clicks, axis=0)

			first = block * BLOCKSIZE
			(wi, ch) = np.nonzero(clicks)
			ts = (first + wi).astype(np.int64) * dtps
			kind = np.ones(ts.size, dtype=np.int64)
			if mode == TRIGGERED:
				ts = np.concatenate([(first + np.arange(size, dtype=np.int64)) * dtps, ts])
				ch = np.concatenate([np.full(size, N), ch])
				kind = np.concatenate([np.zeros(size, dtype=np.int64), kind])
			order = np.lexsort((ch, kind, ts)) # time, then trigger before signals
			np.savetxt(f, np.column_stack((ts[order], ch[order])), fmt="%d", delimiter=",")

	return ClickHistogram(hist, window_ns=window_ns, mode=mode, channel_clicks=channels)
