import io

import pytest
import numpy as np

from clickkit import state, sim, est, ingest, err

import logging
logging.basicConfig(level=logging.INFO)


def stream(text):
	return io.BytesIO(text.encode("utf-8"))


def test_parse_empty_body():
	tags = ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=8\n"))
	assert len(tags) == 0
	assert tags.nchannels == 8
	assert tags.trigger is None
	assert list(tags) == []


def test_parse_records():
	tags = ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=8\n# a comment\n1000,3\n1000,5\n\n2500,0\n"))
	assert list(tags) == [ingest.TagRecord(1000, 3), ingest.TagRecord(1000, 5), ingest.TagRecord(2500, 0)]
	assert tags.timestamps.dtype == np.int64


def test_parse_text_stream_and_trigger():
	tags = ingest.parse_tag_stream(io.StringIO("#clickkit-tags v1 channels=9 trigger=8\n0,8\n3000,2"), nchannels=9)
	assert tags.trigger == 8
	assert len(tags) == 2
	assert tags.signalchannels(8) == list(range(8))


@pytest.mark.parametrize("text,lineno,exception", [
	("", 1, err.MalformedLine),
	("channels=8\n", 1, err.MalformedLine),
	("#clickkit-tags v2 channels=8\n", 1, err.MalformedLine),
	("#clickkit-tags v1 channels=eight\n", 1, err.MalformedLine),
	("#clickkit-tags v1\n", 1, err.MalformedLine),
	("#clickkit-tags v1 channels=4 trigger=4\n", 1, err.MalformedLine),
	("#clickkit-tags v1 channels=4\n10,1\n20;2\n", 3, err.MalformedLine),
	("#clickkit-tags v1 channels=4\n10,1\n20,2,3\n", 3, err.MalformedLine),
	("#clickkit-tags v1 channels=4\n10,1\n# fine\n1.5e3,2\n", 4, err.MalformedLine),
	("#clickkit-tags v1 channels=4\n-10,1\n", 2, err.MalformedLine),
	("#clickkit-tags v1 channels=4\n10,1\n20,2\n15,3\n", 4, err.NonMonotonicTimestamp),
	("#clickkit-tags v1 channels=4\n10,1\n20,4\n", 3, err.UnknownChannel),
	("#clickkit-tags v1 channels=4\n10,-1\n", 2, err.UnknownChannel),
])
def test_parse_errors(text, lineno, exception):
	with pytest.raises(exception) as excinfo:
		ingest.parse_tag_stream(stream(text))
	assert excinfo.value.lineno == lineno
	assert "line {}".format(lineno) in str(excinfo.value)


def test_parse_invalid_utf8():
	with pytest.raises(err.MalformedLine) as excinfo:
		ingest.parse_tag_stream(io.BytesIO(b"#clickkit-tags v1 channels=4\n10,1\n\xff\xfe\n"))
	assert excinfo.value.lineno == 3


def test_parse_channel_count():
	with pytest.raises(err.MalformedLine):
		ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=4\n"), nchannels=8)


def test_continuous_empty():
	tags = ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=8\n"))
	hist = ingest.window_continuous(tags, 10.0, 100.0)
	assert hist.total == 10
	assert hist.m_k[0] == 10
	assert hist.N == 8
	assert hist.mode == sim.CW


def test_continuous_distinct_channels():
	tags = ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=8\n1000,0\n2000,0\n15000,1\n"))
	hist = ingest.window_continuous(tags, 10.0, 20.0, n_channels=8)
	assert hist.total == 2
	assert hist.m_k[1] == 2
	assert np.all(hist.channel_clicks == [1, 1, 0, 0, 0, 0, 0, 0])


def test_continuous_duplicates():
	once = ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=4\n1000,0\n3000,2\n12000,3\n"))
	twice = ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=4\n1000,0\n1000,0\n3000,2\n4000,2\n12000,3\n19999,3\n"))
	a = ingest.window_continuous(once, 10.0, 30.0)
	b = ingest.window_continuous(twice, 10.0, 30.0)
	assert np.all(a.m_k == b.m_k)
	assert np.all(a.m_k == [1, 1, 1, 0, 0])


def test_continuous_boundaries():
	tags = ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=2\n9999,0\n10000,1\n"))
	hist = ingest.window_continuous(tags, 10.0, 20.0)
	assert np.all(hist.m_k == [0, 2, 0])

	# Tags of the incomplete last window are dropped, M = floor(T / delta_tau)
	tags = ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=2\n5000,0\n21000,1\n"))
	hist = ingest.window_continuous(tags, 10.0, 25.0)
	assert hist.total == 2
	assert np.all(hist.m_k == [1, 1, 0])

	with pytest.raises(err.TagBeyondTotalTime):
		ingest.window_continuous(tags, 10.0, 20.0)
	with pytest.raises(err.ValidationError):
		ingest.window_continuous(tags, 10.0, 5.0)
	with pytest.raises(err.ValidationError):
		ingest.window_continuous(tags, 0.0, 50.0)
	with pytest.raises(err.ValidationError):
		ingest.window_continuous(tags, 10.0001, 50.0)


def test_continuous_ignores_trigger():
	tags = ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=3 trigger=0\n0,0\n1000,1\n2000,2\n"))
	hist = ingest.window_continuous(tags, 10.0, 10.0)
	assert hist.N == 2
	assert np.all(hist.m_k == [0, 0, 1])


def test_continuous_channel_mismatch():
	tags = ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=8\n1000,7\n"))
	with pytest.raises(err.DimensionMismatch):
		ingest.window_continuous(tags, 10.0, 10.0, n_channels=4)


def test_triggered():
	tags = ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=9\n0,8\n3000,2\n4000,7\n"))
	hist = ingest.window_triggered(tags, trigger_channel=8, delta_tau_ns=10.0)
	assert hist.mode == sim.TRIGGERED
	assert hist.N == 8
	assert hist.total == 1
	assert hist.m_k[2] == 1


def test_triggered_only():
	tags = ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=3 trigger=2\n0,2\n50000,2\n90000,2\n"))
	hist = ingest.window_triggered(tags)
	assert np.all(hist.m_k == [3, 0, 0])
	assert hist.overlaps == 0


def test_triggered_outside_windows():
	text = "#clickkit-tags v1 channels=3 trigger=2\n500,0\n1000,2\n1000,1\n10999,0\n11000,1\n30000,2\n40000,0\n"
	hist = ingest.window_triggered(ingest.parse_tag_stream(stream(text)))
	assert np.all(hist.m_k == [1, 0, 1])
	assert np.all(hist.channel_clicks == [1, 1])


def test_triggered_overlaps():
	text = "#clickkit-tags v1 channels=3 trigger=2\n0,2\n5000,2\n7000,0\n12000,1\n"
	hist = ingest.window_triggered(ingest.parse_tag_stream(stream(text)), delta_tau_ns=10.0)
	assert hist.overlaps == 1
	# [0, 10 ns) sees channel 0, [5, 15 ns) sees channels 0 and 1
	assert np.all(hist.m_k == [0, 1, 1])
	assert np.all(hist.channel_clicks == [2, 1])


def test_triggered_errors():
	tags = ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=3 trigger=2\n1000,0\n"))
	with pytest.raises(err.NoTriggers):
		ingest.window_triggered(tags)
	with pytest.raises(err.InvalidConfig):
		ingest.window_triggered(ingest.parse_tag_stream(stream("#clickkit-tags v1 channels=3\n")))
	with pytest.raises(err.InvalidConfig):
		ingest.window_triggered(tags, trigger_channel=3)


@pytest.mark.parametrize("mode,pnd,nu", [
	(sim.CW, state.coherent_distribution(1.2), 0.02),
	(sim.TRIGGERED, state.fock_distribution(1), 0.0),
	(sim.TRIGGERED, state.mixture_distribution([state.fock_distribution(1), state.fock_distribution(2)], [0.8, 0.2]), 0.01),
])
def test_round_trip(tmp_path, mode, pnd, nu):
	path = tmp_path / "tags.txt"
	windows = sim.BLOCKSIZE + 5000
	written = sim.write_tag_file(path, pnd, sim.SplitterTree(3), 0.7, nu, windows, seed=12, mode=mode)
	tags = ingest.parse_tag_stream(str(path))
	if mode == sim.CW:
		hist = ingest.window_continuous(tags, 10.0, windows * 10.0)
		reference = sim.simulate_windows(pnd, sim.SplitterTree(3), 0.7, nu, windows, seed=12)
	else:
		hist = ingest.window_triggered(tags, delta_tau_ns=10.0)
		reference = sim.simulate_triggered(pnd, sim.SplitterTree(3), 0.7, nu, windows, seed=12)
	assert hist.mode == mode
	assert np.all(hist.m_k == written.m_k)
	assert np.all(hist.m_k == reference.m_k)
	assert np.all(hist.channel_clicks == reference.channel_clicks)


def test_round_trip_heralded_single_photons(tmp_path):
	path = tmp_path / "heralded.txt"
	sim.write_tag_file(path, state.fock_distribution(1), sim.SplitterTree(3), 0.5, 0.0, 100000, seed=13, mode=sim.TRIGGERED)
	hist = ingest.window_triggered(ingest.parse_tag_stream(path))
	qb = est.qb_estimate(hist)
	assert qb.value < 0.0
	assert abs(qb.value + 7.0 / 15.0) <= 4.0 * qb.sigma
