"""
Command line front-end: clickkit {theory,simulate,analyze,scan} [options]

Every option is turned into a (section, option, value) override of the ClickKit config, so that a config
file given with --config can hold the defaults. The summary of each command goes to stdout as
key: value lines, diagnostics go to stderr. Exit codes: 0 success, 2 bad parameters, 3 bad data,
4 numerical failure.
"""

import argparse
import logging
import sys

from . import __version__
from . import err
from . import com
from . import sim

logger = logging.getLogger(__name__)

LOGFORMAT = "PID %(process)d: %(levelname)s: %(name)s(%(funcName)s): %(message)s"


def _parents():
	"""
	Options shared by all commands.
	"""
	common = argparse.ArgumentParser(add_help=False)
	common.add_argument("--config", type=str, default=None, help="INI config file with the defaults")
	common.add_argument("--format", choices=["csv", "jsonl"], default=None, help="Output table format")
	common.add_argument("--out", type=str, default=None, help="Output table path")
	common.add_argument("--ncpu", type=int, default=None, help="Processes to use, 0 for all cores")
	verbosity = common.add_mutually_exclusive_group()
	verbosity.add_argument("-v", "--verbose", action="store_true", help="Log debug messages")
	verbosity.add_argument("-q", "--quiet", action="store_true", help="Only log warnings and errors")

	detector = argparse.ArgumentParser(add_help=False)
	size = detector.add_mutually_exclusive_group()
	size.add_argument("--detectors", type=int, default=None, help="Number of detectors N")
	size.add_argument("--stages", type=int, default=None, help="Number of splitter stages m, N = 2^m")
	detector.add_argument("--eta", type=float, default=None, help="Detector efficiency")
	detector.add_argument("--nu", type=float, default=None, help="Total dark-count parameter per window")
	detector.add_argument("--transmittances", type=str, default=None, help="Comma-separated splitter transmittances, breadth-first")

	light = argparse.ArgumentParser(add_help=False)
	light.add_argument("--state", choices=list(com.STATETYPES), default=None, help="Photon-number distribution")
	light.add_argument("--mean", type=float, default=None, help="Mean photon number")
	light.add_argument("--n", type=int, default=None, help="Photon number of the Fock state")
	light.add_argument("--noise", type=float, default=None, help="Relative intensity noise of fluctuating light")
	light.add_argument("--nmax", type=int, default=None, help="Truncation of the photon numbers")
	light.add_argument("--probs", type=str, default=None, help="Comma-separated probabilities of a custom state")
	return (common, detector, light)


def makeparser():
	(common, detector, light) = _parents()
	parser = argparse.ArgumentParser(prog="clickkit", description="Click-counting statistics of multiplexed on-off detectors")
	parser.add_argument("--version", action="version", version="clickkit {}".format(__version__))
	sub = parser.add_subparsers(dest="cmd", required=True)

	p = sub.add_parser("theory", parents=[common, detector, light], help="Analytic C_k and Q_B")
	p.set_defaults(func=cmd_theory)

	p = sub.add_parser("simulate", parents=[common, detector, light], help="Monte Carlo simulation of the multiplexed detector")
	count = p.add_mutually_exclusive_group()
	count.add_argument("--windows", type=int, default=None, help="Number of continuous-wave windows")
	count.add_argument("--triggers", type=int, default=None, help="Number of heralded windows (triggered mode)")
	p.add_argument("--delta-tau-ns", type=float, default=None, help="Window length in ns")
	p.add_argument("--tags", type=str, default=None, help="Also write the clicks as a tag file to this path")
	p.add_argument("--seed", type=int, default=None)
	p.set_defaults(func=cmd_simulate)

	p = sub.add_parser("analyze", parents=[common], help="Window a tag file and test for nonclassicality")
	p.add_argument("tagfile", type=str)
	p.add_argument("--mode", choices=list(sim.MODES), default=None)
	p.add_argument("--delta-tau-ns", type=float, default=None, help="Window length in ns")
	p.add_argument("--total-time-ns", type=float, default=None, help="Measurement time T (continuous mode)")
	p.add_argument("--trigger", type=int, default=None, help="Trigger channel (triggered mode)")
	p.add_argument("--detectors", type=int, default=None, help="Number of signal detectors N")
	p.add_argument("--threshold", type=float, default=None, help="Significance threshold")
	p.add_argument("--nboot", type=int, default=None, help="Bootstrap replicates")
	p.add_argument("--seed", type=int, default=None, help="Seed of the bootstrap")
	p.set_defaults(func=cmd_analyze)

	p = sub.add_parser("scan", parents=[common, detector], help="Simulated Q_B versus <k>")
	p.add_argument("--family", choices=list(com.FAMILIES), default=None)
	p.add_argument("--kmin", type=float, default=None)
	p.add_argument("--kmax", type=float, default=None)
	p.add_argument("--points", type=int, default=None)
	p.add_argument("--spacing", choices=["log", "linear"], default=None)
	p.add_argument("--windows", type=int, default=None, help="Windows per point")
	p.add_argument("--noise", type=float, default=None, help="Intensity noise of the coherent family")
	p.add_argument("--fockn", type=int, default=None, help="Photon number of the Fock family")
	p.add_argument("--seed", type=int, default=None)
	p.set_defaults(func=cmd_scan)
	return parser


def _overrides(args, mapping):
	"""
	(section, option, value) tuples for the arguments that were given.
	"""
	configlist = []
	for (attr, section, option) in mapping:
		value = getattr(args, attr, None)
		if value is not None:
			configlist.append((section, option, str(value)))
	return configlist


COMMON = [("format", "setup", "format"), ("out", "setup", "out"), ("ncpu", "setup", "ncpu")]
DETECTOR = [("detectors", "detector", "detectors"), ("stages", "detector", "stages"), ("eta", "detector", "eta"),
	("nu", "detector", "nu"), ("transmittances", "detector", "transmittances")]
LIGHT = [("state", "state", "type"), ("mean", "state", "mean"), ("n", "state", "n"), ("noise", "state", "noise"),
	("nmax", "state", "nmax"), ("probs", "state", "probs")]


def _kit(args, mapping):
	configlist = _overrides(args, COMMON + mapping)
	# [detector] detectors wins over stages, so --stages has to clear it
	if getattr(args, "stages", None) is not None:
		configlist.append(("detector", "detectors", None))
	return com.ClickKit(args.config, configlist)


def _print(summary):
	for (key, value) in summary.items():
		if isinstance(value, list):
			value = ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
		elif isinstance(value, float):
			value = repr(value)
		print("{}: {}".format(key, value))


def cmd_theory(args):
	(columns, rows, summary) = _kit(args, DETECTOR + LIGHT).theory()
	_print(summary)


def cmd_simulate(args):
	mapping = DETECTOR + LIGHT + [("seed", "simulate", "seed"), ("windows", "simulate", "windows"),
		("delta_tau_ns", "simulate", "window_ns"), ("tags", "simulate", "tags")]
	if args.triggers is not None:
		args.windows = args.triggers
		mapping = mapping + [("mode", "simulate", "mode")]
		args.mode = sim.TRIGGERED
	(columns, rows, summary) = _kit(args, mapping).simulate()
	_print(summary)


def cmd_analyze(args):
	mapping = [("seed", "analyze", "seed"), ("mode", "analyze", "mode"), ("delta_tau_ns", "analyze", "delta_tau_ns"),
		("total_time_ns", "analyze", "total_time_ns"), ("trigger", "analyze", "trigger"), ("detectors", "analyze", "channels"),
		("threshold", "analyze", "threshold"), ("nboot", "analyze", "nboot")]
	(columns, rows, summary) = _kit(args, mapping).analyze(args.tagfile)
	_print(summary)


def cmd_scan(args):
	mapping = DETECTOR + [("seed", "scan", "seed"), ("family", "scan", "family"), ("kmin", "scan", "kmin"),
		("kmax", "scan", "kmax"), ("points", "scan", "points"), ("spacing", "scan", "spacing"),
		("windows", "scan", "windows"), ("noise", "scan", "noise"), ("fockn", "scan", "fockn")]
	(columns, rows, summary) = _kit(args, mapping).scan()
	_print(summary)


def main(argv=None):
	"""
	:returns: the exit code
	"""
	args = makeparser().parse_args(argv)
	level = logging.DEBUG if args.verbose else (logging.WARNING if args.quiet else logging.INFO)
	logging.basicConfig(level=level, format=LOGFORMAT, stream=sys.stderr)
	logging.getLogger("clickkit").setLevel(level)
	try:
		args.func(args)
	except err.ClickkitError as e:
		logger.error("{}: {}".format(type(e).__name__, e))
		print("clickkit {}: error: {}".format(args.cmd, e), file=sys.stderr)
		return err.exitcode(e)
	except OSError as e:
		# Files the library does not open itself, e.g. the log file
		logger.error("{}: {}".format(type(e).__name__, e))
		print("clickkit {}: error: {}: {}".format(args.cmd, e.filename, e.strerror or e), file=sys.stderr)
		return err.exitcode(err.UnreadableInput(str(e)))
	return 0


if __name__ == "__main__":
	sys.exit(main())
