"""
The config-driven entry point to clickkit: the ClickKit class reads an INI config (built-in defaults,
then an optional config file, then a list of overrides), builds the state, detector and splitter objects
it describes, and runs the theory, simulate, analyze and scan tasks, writing csv or json-lines tables.

ClickKit is not meant to be kept between tasks: all the info is in the config.
"""

import configparser
import os
import math
import numpy as np

import logging
logger = logging.getLogger(__name__)

from . import __version__
from . import err
from . import utils
from . import state
from . import theory
from . import sim
from . import est
from . import ingest
from . import table
from . import parmap


DEFAULTCONFIG = """
[setup]
name:
ncpu: 1
logtofile: False
format: csv
out:

[detector]
stages: 3
detectors:
eta: 1.0
nu: 0.0
transmittances:

[state]
type: coherent
mean: 1.0
n: 1
noise: 0.0
nmax:
probs:

[simulate]
mode: continuous_wave
windows: 1000000
window_ns: 10.0
seed: 0
tags:

[analyze]
mode: continuous_wave
delta_tau_ns: 10.0
total_time_ns:
trigger:
channels:
threshold: 5.0
nboot: 1000
seed: 0

[scan]
family: coherent
kmin: 0.05
kmax: 2.0
points: 12
spacing: log
windows: 1000000
seed: 0
noise: 0.5
fockn:
"""

STATETYPES = ("coherent", "fock", "thermal", "fluctuating", "custom")
FAMILIES = ("coherent", "fock", "thermal")


class ClickKit():

	def __init__(self, configpath=None, configlist=None):
		"""
		:param configpath: optional path to a config file, read on top of the built-in defaults
		:param configlist: optional list of (section, option, value) tuples, with precedence over the file
		"""
		self.configpath = configpath
		self.config = configparser.ConfigParser(allow_no_value=True)
		self.config.read_string(DEFAULTCONFIG)

		if configpath is not None:
			if not os.path.isfile(configpath):
				raise err.InvalidConfig("Config file {} does not exist".format(configpath))
			logger.info("Reading in config from {}...".format(configpath))
			try:
				self.config.read(configpath)
			except configparser.Error as e:
				raise err.InvalidConfig("Could not parse {}: {}".format(configpath, e))

		if configlist:
			logger.info("Using additional options: {}".format(configlist))
			for (section, option, value) in configlist:
				if not self.config.has_section(section):
					raise err.InvalidConfig("Unknown config section [{}]".format(section))
				self.config.set(section, option, None if value is None else str(value))

		self.name = self._get("setup", "name")
		if self.name is None:
			self.name = "clickkit" if configpath is None else os.path.splitext(os.path.basename(configpath))[0]
		self.out = self._get("setup", "out")
		self.format = self._get("setup", "format")
		if self.format not in table.FORMATS:
			raise err.InvalidConfig("Unknown output format '{}', use one of {}".format(self.format, table.FORMATS))
		self.ncpu = self._getint("setup", "ncpu")
		if self.ncpu < 0:
			raise err.InvalidConfig("ncpu must be >= 0, got {}".format(self.ncpu))

		logger.info("Constructed {}".format(self))

		# File logging is only set up here, the tasks switch it on and off.
		if self._getboolean("setup", "logtofile"):
			self.logger = logging.getLogger("clickkit")
			logpath = (self.out if self.out is not None else self.name) + ".log"
			logger.info("ClickKit is set to log to {}".format(logpath))
			self.logfilehandler = logging.FileHandler(logpath, delay=True)
			self.logfilehandler.setLevel(logging.DEBUG)
			self.logfilehandler.setFormatter(logging.Formatter("PID %(process)d: %(levelname)s: %(name)s(%(funcName)s): %(message)s"))
			logdir = os.path.dirname(logpath)
			if logdir and not os.path.exists(logdir):
				os.makedirs(logdir)

	def _activatefilelog(self):
		if self._getboolean("setup", "logtofile"):
			self.logger.addHandler(self.logfilehandler)
			self.logger.propagate = False

	def _deactivatefilelog(self):
		if self._getboolean("setup", "logtofile"):
			self.logger.removeHandler(self.logfilehandler)
			self.logfilehandler.close()
			self.logger.propagate = True

	def __str__(self):
		return "ClickKit '{}'".format(self.name)


	# Config access. A blank value or a missing ":" means None.

	def _get(self, section, option):
		try:
			value = self.config.get(section, option)
		except configparser.Error as e:
			raise err.InvalidConfig(str(e))
		if value is None or value.strip() == "":
			return None
		return value.strip()

	def _convert(self, section, option, conv, what):
		value = self._get(section, option)
		if value is None:
			return None
		try:
			return conv(value)
		except ValueError:
			raise err.InvalidConfig("[{}] {} = '{}' is not {}".format(section, option, value, what))

	def _getint(self, section, option):
		return self._convert(section, option, int, "an integer")

	def _getfloat(self, section, option):
		return self._convert(section, option, float, "a number")

	def _getfloats(self, section, option):
		return self._convert(section, option, lambda v: [float(x) for x in v.replace(",", " ").split()], "a list of numbers")

	def _getboolean(self, section, option):
		try:
			return self.config.getboolean(section, option)
		except ValueError as e:
			raise err.InvalidConfig("[{}] {}: {}".format(section, option, e))

	def _require(self, value, section, option):
		if value is None:
			raise err.InvalidConfig("[{}] {} must be set".format(section, option))
		return value

	def _getseed(self, section):
		return utils.checkseed(self._require(self._getint(section, "seed"), section, "seed"))


	# Builders of the domain objects

	def tree(self):
		"""
		The SplitterTree. With [detector] detectors set, N has to be a power of two.
		"""
		detectors = self._getint("detector", "detectors")
		if detectors is not None:
			stages = int(round(math.log2(detectors))) if detectors >= 1 else -1
			if stages < 0 or 2**stages != detectors:
				raise err.InvalidConfig("A splitter tree needs a power of two detectors, got {}".format(detectors))
		else:
			stages = self._require(self._getint("detector", "stages"), "detector", "stages")
		return sim.SplitterTree(stages, self._getfloats("detector", "transmittances"))

	def detector(self):
		"""
		The DetectorArrayConfig. Without transmittances the splitting is uniform and N may be any integer.
		"""
		eta = self._require(self._getfloat("detector", "eta"), "detector", "eta")
		nu = self._require(self._getfloat("detector", "nu"), "detector", "nu")
		if self._get("detector", "transmittances") is not None:
			tree = self.tree()
			return theory.DetectorArrayConfig(tree.N, eta=eta, nu=nu, weights=tree.channel_probabilities())
		detectors = self._getint("detector", "detectors")
		if detectors is not None:
			return theory.DetectorArrayConfig(detectors, eta=eta, nu=nu)
		return theory.DetectorArrayConfig.fromstages(self._require(self._getint("detector", "stages"), "detector", "stages"), eta=eta, nu=nu)

	def state(self):
		"""
		The PhotonNumberDistribution described in [state].
		"""
		statetype = self._get("state", "type")
		nmax = self._getint("state", "nmax")
		if statetype == "coherent":
			return state.coherent_distribution(self._require(self._getfloat("state", "mean"), "state", "mean"), nmax)
		elif statetype == "fock":
			return state.fock_distribution(self._require(self._getint("state", "n"), "state", "n"), nmax)
		elif statetype == "thermal":
			return state.thermal_distribution(self._require(self._getfloat("state", "mean"), "state", "mean"), nmax)
		elif statetype == "fluctuating":
			return state.fluctuating_coherent_distribution(self._require(self._getfloat("state", "mean"), "state", "mean"),
				self._require(self._getfloat("state", "noise"), "state", "noise"), nmax)
		elif statetype == "custom":
			return state.PhotonNumberDistribution(self._require(self._getfloats("state", "probs"), "state", "probs"))
		else:
			raise err.InvalidConfig("Unknown state type '{}', use one of {}".format(statetype, STATETYPES))

	def provenance(self, command):
		return {
			"tool": "clickkit",
			"version": __version__,
			"command": command,
			"config": {section: dict(self.config.items(section)) for section in self.config.sections()},
		}

	def _write(self, command, columns, rows, summary):
		if self.out is not None:
			table.write_table(self.out, columns, rows, self.provenance(command), summary=summary, fmt=self.format)


	# Tasks. Each returns (columns, rows, summary), the content of the table it writes if [setup] out is set.

	def theory(self):
		"""
		Analytic C_k and Q_B of the configured state on the configured detector.
		"""
		cfg = self.detector()
		pnd = self.state()
		self._activatefilelog()
		try:
			if cfg.isuniform():
				dist = theory.click_distribution(pnd, cfg)
			elif pnd.label == "coherent":
				dist = theory.coherent_click_distribution(cfg, pnd.mean())
			else:
				raise err.NonUniformWeightsUnsupported("Analytic C_k for non-uniform splitting are only available for coherent states")
			summary = {
				"state": str(pnd),
				"detector": str(cfg),
				"mean_photons": pnd.mean(),
				"c_k": dist.c.tolist(),
				"mean_clicks": dist.mean(),
				"variance": dist.variance(),
				"qb": _qbornone(dist),
			}
			rows = [[k, float(c)] for (k, c) in enumerate(dist.c)]
			self._write("theory", ["k", "c_k"], rows, summary)
		finally:
			self._deactivatefilelog()
		return (["k", "c_k"], rows, summary)


	def simulate(self):
		"""
		Monte Carlo run of the configured state through the splitter tree, optionally emitting a tag file.
		"""
		tree = self.tree()
		pnd = self.state()
		eta = self._require(self._getfloat("detector", "eta"), "detector", "eta")
		nu = self._require(self._getfloat("detector", "nu"), "detector", "nu")
		windows = self._require(self._getint("simulate", "windows"), "simulate", "windows")
		window_ns = self._require(self._getfloat("simulate", "window_ns"), "simulate", "window_ns")
		seed = self._getseed("simulate")
		mode = self._get("simulate", "mode")
		if mode not in sim.MODES:
			raise err.InvalidConfig("Unknown mode '{}', use one of {}".format(mode, sim.MODES))
		tagpath = self._get("simulate", "tags")

		self._activatefilelog()
		try:
			if tagpath is not None:
				hist = sim.write_tag_file(tagpath, pnd, tree, eta, nu, windows, seed, window_ns=window_ns, mode=mode)
			elif mode == sim.CW:
				hist = sim.simulate_windows(pnd, tree, eta, nu, windows, seed, window_ns=window_ns, ncpu=self.ncpu)
			else:
				hist = sim.simulate_triggered(pnd, tree, eta, nu, windows, seed, window_ns=window_ns, ncpu=self.ncpu)

			c_exp = est.empirical_click_distribution(hist)
			summary = {
				"mode": hist.mode,
				"n_windows": hist.total,
				"window_ns": hist.window_ns,
				"seed": seed,
				"m_k": hist.m_k.tolist(),
				"c_exp": c_exp.c.tolist(),
				"mean_clicks": c_exp.mean(),
				"channel_shares": hist.channel_shares().tolist() if np.sum(hist.channel_clicks) > 0 else None,
				"max_k_observed": hist.maxk(),
			}
			try:
				qb = est.qb_estimate(hist)
				summary["qb"] = qb.value
				summary["qb_sigma"] = qb.sigma
			except (err.TooFewDetectors, err.DegenerateMean) as e:
				logger.warning("No Q_B for this histogram: {}".format(e))
				summary["qb"] = None
				summary["qb_sigma"] = None
			if tagpath is not None:
				summary["tags"] = tagpath

			columns = ["k", "m_k", "c_k"]
			rows = [[k, int(m), float(c)] for (k, (m, c)) in enumerate(zip(hist.m_k, c_exp.c))]
			self._write("simulate", columns, rows, summary)
		finally:
			self._deactivatefilelog()
		return (columns, rows, summary)


	def analyze(self, tagpath):
		"""
		Windows a tag file and runs the nonclassicality tests on the histogram.
		"""
		mode = self._get("analyze", "mode")
		if mode not in sim.MODES:
			raise err.InvalidConfig("Unknown mode '{}', use one of {}".format(mode, sim.MODES))
		delta_tau_ns = self._require(self._getfloat("analyze", "delta_tau_ns"), "analyze", "delta_tau_ns")
		total_time_ns = self._getfloat("analyze", "total_time_ns")
		trigger = self._getint("analyze", "trigger")
		channels = self._getint("analyze", "channels")
		threshold = self._require(self._getfloat("analyze", "threshold"), "analyze", "threshold")
		nboot = self._require(self._getint("analyze", "nboot"), "analyze", "nboot")
		seed = self._getseed("analyze")
		if mode == sim.CW and trigger is not None:
			raise err.InvalidConfig("[analyze] trigger {} is only used in triggered mode, set the mode or drop it".format(trigger))

		self._activatefilelog()
		try:
			tags = ingest.parse_tag_stream(tagpath)
			if mode == sim.CW:
				if total_time_ns is None:
					if len(tags) == 0:
						raise err.InvalidConfig("Set [analyze] total_time_ns to window a file without tags")
					# Smallest whole number of windows covering the last tag
					dt = utils.nstops(delta_tau_ns, what="Window length")
					total_time_ns = (int(tags.timestamps[-1]) // dt + 1) * dt / 1000.0
					logger.info("Total time not given, using {} ns".format(total_time_ns))
				hist = ingest.window_continuous(tags, delta_tau_ns, total_time_ns, n_channels=channels)
			else:
				hist = ingest.window_triggered(tags, trigger_channel=trigger, delta_tau_ns=delta_tau_ns, n_channels=channels)

			report = est.nonclassicality_verdict(hist, threshold=threshold, nboot=nboot, seed=seed)
			summary = report.asdict()
			summary["overlaps"] = hist.overlaps
			columns = ["k", "m_k", "c_k"]
			rows = [[k, int(m), float(c)] for (k, (m, c)) in enumerate(zip(hist.m_k, report.c_exp.c))]
			self._write("analyze", columns, rows, summary)
		finally:
			self._deactivatefilelog()
		return (columns, rows, summary)


	def scangrid(self):
		"""
		The <k> targets of the scan.
		"""
		kmin = self._require(self._getfloat("scan", "kmin"), "scan", "kmin")
		kmax = self._require(self._getfloat("scan", "kmax"), "scan", "kmax")
		points = self._require(self._getint("scan", "points"), "scan", "points")
		spacing = self._get("scan", "spacing")
		if not (0.0 < kmin <= kmax) or points < 1:
			raise err.InvalidConfig("Need 0 < kmin <= kmax and points >= 1, got {}, {}, {}".format(kmin, kmax, points))
		if spacing == "log":
			return np.geomspace(kmin, kmax, points)
		elif spacing == "linear":
			return np.linspace(kmin, kmax, points)
		raise err.InvalidConfig("Unknown spacing '{}', use log or linear".format(spacing))

	def scanpoints(self):
		"""
		The (target, state, detector config) of each scan point.

		Coherent and thermal points are tuned through the mean photon number (the coherent family carries
		the [scan] noise), Fock points through the efficiency, starting from the configured detector.
		"""
		family = self._get("scan", "family")
		tree = self.tree()
		base = self.detector()
		targets = self.scangrid()
		points = []
		if family in ("coherent", "thermal"):
			noise = self._require(self._getfloat("scan", "noise"), "scan", "noise") if family == "coherent" else 1.0
			for target in targets:
				mu = theory.mean_photons_for_clicks(base, target, noise=noise)
				points.append((target, state.fluctuating_coherent_distribution(mu, noise), base))
		elif family == "fock":
			n = self._getint("scan", "fockn")
			if n is None:
				# Smallest photon number reaching the top of the grid at unit efficiency
				n = 1
				while theory.mean_clicks(theory.DetectorArrayConfig(base.N, 1.0, base.nu), state.fock_distribution(n)) < targets[-1]:
					n += 1
					if n > 1000:
						raise err.InvalidConfig("No Fock state reaches <k> = {} on N = {}".format(targets[-1], base.N))
			pnd = state.fock_distribution(n)
			for target in targets:
				eta = theory.efficiency_for_clicks(base, n, target)
				points.append((target, pnd, theory.DetectorArrayConfig(base.N, eta, base.nu, weights=base.weights)))
		else:
			raise err.InvalidConfig("Unknown scan family '{}', use one of {}".format(family, FAMILIES))
		logger.info("Scan of {} points over the {} family on {}".format(len(points), family, tree))
		return (family, tree, points)

	def scan(self):
		"""
		Q_B versus <k>: one simulation per grid point, run in parallel over the points.
		Fock points are simulated in triggered mode, the others as continuous light.
		"""
		(family, tree, points) = self.scanpoints()
		windows = self._require(self._getint("scan", "windows"), "scan", "windows")
		seed = self._getseed("scan")
		mode = sim.TRIGGERED if family == "fock" else sim.CW
		jobs = [(i, target, pnd, cfg, tree, windows, utils.deriveseed(seed, i), mode) for (i, (target, pnd, cfg)) in enumerate(points)]

		self._activatefilelog()
		try:
			rows = parmap.parmap(_scanworker, jobs, self.ncpu)
			columns = ["index", "target_k", "mean_photons", "eta", "mean_clicks", "qb", "qb_sigma", "qb_theory"]
			summary = {"family": family, "mode": mode, "seed": seed, "windows": windows}
			for (j, column) in enumerate(columns):
				summary[column] = [row[j] for row in rows]
			self._write("scan", columns, rows, summary)
		finally:
			self._deactivatefilelog()
		return (columns, rows, summary)



def _qbornone(dist):
	try:
		return theory.qb_of(dist)
	except (err.TooFewDetectors, err.DegenerateMean) as e:
		logger.warning("Q_B undefined: {}".format(e))
		return None


def _scanworker(job):
	"""
	Simulates and analyses one scan point.
	"""
	(i, target, pnd, cfg, tree, windows, seed, mode) = job
	if mode == sim.CW:
		hist = sim.simulate_windows(pnd, tree, cfg.eta, cfg.nu, windows, seed)
	else:
		hist = sim.simulate_triggered(pnd, tree, cfg.eta, cfg.nu, windows, seed)
	qbtheory = _qbornone(theory.click_distribution(pnd, cfg)) if cfg.isuniform() else float("nan")
	try:
		qb = est.qb_estimate(hist)
	except err.DegenerateMean as e:
		# Sign indeterminate, typically no click at all at the lowest fluxes
		logger.warning("Point {}: <k> target {:.4g}, no Q_B: {}".format(i, target, e))
		meanclicks = est.empirical_click_distribution(hist).mean()
		return [i, float(target), pnd.mean(), cfg.eta, meanclicks, float("nan"), float("nan"), qbtheory]
	logger.info("Point {}: <k> target {:.4g}, {}".format(i, target, qb))
	return [i, float(target), pnd.mean(), cfg.eta, qb.mean_clicks, qb.value, qb.sigma, qbtheory]
