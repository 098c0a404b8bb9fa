"""
Reading time-tagged clicks and binning them into coincidence windows.

Tag files are UTF-8 text:

	#clickkit-tags v1 channels=<C> [trigger=<id>]
	<timestamp_ps>,<channel>
	...

with LF line ends, non-decreasing integer picosecond timestamps and channels 0 ... C-1.
Further lines starting with # are comments.
"""

import os
import collections
import numpy as np

import logging
logger = logging.getLogger(__name__)

from . import err
from . import utils
from . import sim


TagRecord = collections.namedtuple("TagRecord", ["timestamp_ps", "channel"])


class TagStream():
	"""
	Parsed tags, held as two int64 arrays.
	"""

	def __init__(self, timestamps, channels, nchannels, trigger=None):
		self.timestamps = np.asarray(timestamps, dtype=np.int64)
		self.channels = np.asarray(channels, dtype=np.int64)
		assert self.timestamps.shape == self.channels.shape
		self.nchannels = nchannels
		self.trigger = trigger

	def __len__(self):
		return self.timestamps.size

	def __iter__(self):
		for (t, c) in zip(self.timestamps.tolist(), self.channels.tolist()):
			yield TagRecord(t, c)

	def signalchannels(self, trigger=None):
		"""
		The channel ids that are not the trigger, in increasing order.
		"""
		return [c for c in range(self.nchannels) if c != trigger]

	def __str__(self):
		return "TagStream of {} tags on {} channels (trigger {})".format(len(self), self.nchannels, self.trigger)


def _parseheader(line):
	if not line.startswith(sim.TAGMAGIC):
		raise err.MalformedLine(1, "expected header '{} channels=<C>', got '{}'".format(sim.TAGMAGIC, line[:40]))
	fields = {}
	for token in line[len(sim.TAGMAGIC):].split():
		(key, sep, value) = token.partition("=")
		if not sep or key not in ("channels", "trigger"):
			raise err.MalformedLine(1, "unknown header field '{}'".format(token))
		try:
			fields[key] = int(value)
		except ValueError:
			raise err.MalformedLine(1, "header field '{}' is not an integer".format(token))
	if "channels" not in fields or fields["channels"] < 1:
		raise err.MalformedLine(1, "header must declare channels >= 1")
	trigger = fields.get("trigger")
	if trigger is not None and not (0 <= trigger < fields["channels"]):
		raise err.MalformedLine(1, "trigger channel {} is not among the {} channels".format(trigger, fields["channels"]))
	return (fields["channels"], trigger)


def parse_tag_stream(source, nchannels=None):
	"""
	Reads a tag file.

	:param source: a path, or an open binary stream
	:param nchannels: if given, the channel count the header has to declare
	:returns: a TagStream
	"""
	if isinstance(source, (str, os.PathLike)):
		try:
			with open(source, "rb") as f:
				data = f.read()
		except OSError as e:
			raise err.UnreadableInput("Cannot read tag file {}: {}".format(source, e.strerror or e))
	else:
		data = source.read()
	if isinstance(data, str):
		data = data.encode("utf-8")

	lines = data.split(b"\n")
	if lines[-1] == b"":
		lines = lines[:-1]
	if len(lines) == 0:
		raise err.MalformedLine(1, "missing header")

	def decoded(lineno, raw):
		try:
			return raw.decode("utf-8")
		except UnicodeDecodeError:
			raise err.MalformedLine(lineno, "not valid UTF-8")

	(declared, trigger) = _parseheader(decoded(1, lines[0]))
	if nchannels is not None and nchannels != declared:
		raise err.MalformedLine(1, "header declares {} channels, expected {}".format(declared, nchannels))

	timestamps = []
	channels = []
	last = -1
	for (i, raw) in enumerate(lines[1:]):
		lineno = i + 2
		line = decoded(lineno, raw).strip()
		if line == "" or line.startswith("#"):
			continue
		fields = line.split(",")
		if len(fields) != 2:
			raise err.MalformedLine(lineno, "expected '<timestamp_ps>,<channel>', got '{}'".format(line[:40]))
		try:
			t = int(fields[0])
			c = int(fields[1])
		except ValueError:
			raise err.MalformedLine(lineno, "expected two integers, got '{}'".format(line[:40]))
		if t < 0 or t >= 2**63:
			raise err.MalformedLine(lineno, "timestamp {} outside the 64-bit range".format(t))
		if t < last:
			raise err.NonMonotonicTimestamp(lineno, "timestamp {} ps is before the previous one, {} ps".format(t, last))
		if c < 0 or c >= declared:
			raise err.UnknownChannel(lineno, "channel {} is not among the {} declared channels".format(c, declared))
		timestamps.append(t)
		channels.append(c)
		last = t

	tags = TagStream(timestamps, channels, declared, trigger)
	logger.info("Read {}".format(tags))
	return tags


def _signals(tags, trigger, n_channels):
	"""
	Timestamps and signal-channel indices (0 ... N-1) of the non-trigger tags, and N.
	"""
	signal = tags.signalchannels(trigger)
	N = len(signal) if n_channels is None else int(n_channels)
	if N < 1:
		raise err.InvalidConfig("Need at least one signal channel, got {}".format(N))
	index = np.full(tags.nchannels, -1, dtype=np.int64)
	index[signal] = np.arange(len(signal))
	mask = tags.channels != trigger if trigger is not None else np.ones(len(tags), dtype=bool)
	idx = index[tags.channels[mask]]
	if idx.size > 0 and np.max(idx) >= N:
		raise err.DimensionMismatch("Tags on signal channel {} do not fit n_channels = {}".format(int(np.max(idx)), N))
	return (tags.timestamps[mask], idx, N)


def _histogram(windows, idx, nwindows, N):
	"""
	Histogram of distinct channels per window, given the window index and channel index of every tag.
	"""
	pairs = np.unique(windows * N + idx)
	(occupied, ks) = np.unique(pairs // N, return_counts=True)
	m_k = np.bincount(ks, minlength=N + 1)
	m_k[0] += nwindows - occupied.size
	channel_clicks = np.bincount(pairs % N, minlength=N)
	return (m_k, channel_clicks)


def window_continuous(tags, delta_tau_ns, total_time_ns, n_channels=None):
	"""
	Cuts [0, T) into floor(T / delta_tau) windows [w delta_tau, (w+1) delta_tau) and counts, per window,
	the distinct channels with at least one tag. A trigger channel declared in the header is ignored.

	:param n_channels: number of detectors N, defaults to the declared signal channels
	"""
	dt = utils.nstops(delta_tau_ns, what="Window length")
	T = utils.nstops(total_time_ns, what="Total time")
	if dt <= 0:
		raise err.ValidationError("Window length must be positive, got {} ns".format(delta_tau_ns))
	if T < dt:
		raise err.ValidationError("Total time {} ns is shorter than one window of {} ns".format(total_time_ns, delta_tau_ns))
	nwindows = T // dt
	(ts, idx, N) = _signals(tags, tags.trigger, n_channels)

	if ts.size > 0 and ts[-1] >= T:
		raise err.TagBeyondTotalTime("Tag at {} ps is beyond the total time of {} ps".format(int(ts[-1]), T))
	inside = ts < nwindows * dt
	if not np.all(inside):
		logger.warning("Dropping {} tags of the incomplete last window".format(int(np.sum(~inside))))
	(m_k, channel_clicks) = _histogram(ts[inside] // dt, idx[inside], nwindows, N)
	hist = sim.ClickHistogram(m_k, window_ns=delta_tau_ns, mode=sim.CW, channel_clicks=channel_clicks)
	logger.info("Windowed into {}".format(hist))
	return hist


def window_triggered(tags, trigger_channel=None, delta_tau_ns=10.0, n_channels=None):
	"""
	One window [t, t + delta_tau) per trigger tag at t, counting distinct non-trigger channels.
	Overlapping windows are processed independently, and counted.

	:param trigger_channel: defaults to the trigger declared in the header
	"""
	trigger = tags.trigger if trigger_channel is None else int(trigger_channel)
	if trigger is None or not (0 <= trigger < tags.nchannels):
		raise err.InvalidConfig("Need a trigger channel among the {} channels, got {}".format(tags.nchannels, trigger))
	dt = utils.nstops(delta_tau_ns, what="Window length")
	if dt <= 0:
		raise err.ValidationError("Window length must be positive, got {} ns".format(delta_tau_ns))

	triggers = tags.timestamps[tags.channels == trigger]
	if triggers.size == 0:
		raise err.NoTriggers("No tag on trigger channel {}".format(trigger))
	(ts, idx, N) = _signals(tags, trigger, n_channels)
	overlaps = int(np.sum(np.diff(triggers) < dt))

	if overlaps == 0:
		# Each signal tag falls into at most one window: the one of the last trigger at or before it
		windows = np.searchsorted(triggers, ts, side="right") - 1
		inside = (windows >= 0)
		inside[inside] = ts[inside] - triggers[windows[inside]] < dt
		(m_k, channel_clicks) = _histogram(windows[inside], idx[inside], triggers.size, N)
	else:
		logger.warning("{} of {} trigger windows overlap with the previous one".format(overlaps, triggers.size))
		los = np.searchsorted(ts, triggers, side="left")
		his = np.searchsorted(ts, triggers + dt, side="left")
		m_k = np.zeros(N + 1, dtype=np.int64)
		channel_clicks = np.zeros(N, dtype=np.int64)
		for (lo, hi) in zip(los, his):
			seen = np.unique(idx[lo:hi])
			m_k[seen.size] += 1
			channel_clicks[seen] += 1

	hist = sim.ClickHistogram(m_k, window_ns=delta_tau_ns, mode=sim.TRIGGERED, channel_clicks=channel_clicks, overlaps=overlaps)
	logger.info("Windowed into {}".format(hist))
	return hist
