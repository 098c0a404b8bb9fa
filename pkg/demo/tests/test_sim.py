import math

import pytest
import numpy as np

from clickkit import state, theory, sim, err

import logging
logging.basicConfig(level=logging.INFO)


def tvbound(c, M):
	return 5.0 * math.sqrt(np.sum(c * (1.0 - c)) / M)


def tvdistance(hist, c):
	return 0.5 * np.sum(np.fabs(hist.m_k / float(hist.total) - c))


@pytest.mark.parametrize("stages,transmittances,expected", [
	(3, None, [0.125] * 8),
	(1, [0.7], [0.7, 0.3]),
	(2, [0.5, 0.6, 0.4], [0.30, 0.20, 0.20, 0.30]),
	(0, None, [1.0]),
])
def test_channel_probabilities(stages, transmittances, expected):
	tree = sim.SplitterTree(stages, transmittances)
	probs = sim.channel_probabilities(tree)
	assert tree.N == len(expected)
	assert np.allclose(probs, expected, rtol=0.0, atol=1e-15)
	assert abs(math.fsum(probs) - 1.0) <= 1e-15
	assert np.all(tree.channel_probabilities() == probs)


@pytest.mark.parametrize("stages,transmittances", [(-1, None), (1.5, None), (2, [0.5, 0.5]), (1, [1.2]), (1, [-0.1])])
def test_tree_invalid(stages, transmittances):
	with pytest.raises(err.InvalidConfig):
		sim.SplitterTree(stages, transmittances)


def test_histogram():
	hist = sim.ClickHistogram([5, 0, 3], window_ns=10.0)
	assert hist.N == 2
	assert hist.total == 8
	assert hist.maxk() == 2
	assert hist.mode == sim.CW
	with pytest.raises(err.DataError):
		hist.channel_shares()

	with pytest.raises(err.EmptyHistogram):
		sim.ClickHistogram([0, 0, 0])
	with pytest.raises(err.InvalidDistribution):
		sim.ClickHistogram([3, -1, 0])
	with pytest.raises(err.DimensionMismatch):
		sim.ClickHistogram([3])
	with pytest.raises(err.InvalidConfig):
		sim.ClickHistogram([3, 1], mode="pulsed")


@pytest.mark.parametrize("windows", [1, 1000, sim.BLOCKSIZE, sim.BLOCKSIZE + 1, 150000])
def test_vacuum(windows):
	hist = sim.simulate_windows(state.fock_distribution(0, 3), sim.SplitterTree(3), 0.7, 0.0, windows, seed=3)
	assert hist.m_k[0] == windows
	assert hist.total == windows


def test_single_photons_uniform():
	windows = 10**6
	hist = sim.simulate_windows(state.fock_distribution(1), sim.SplitterTree(3), 1.0, 0.0, windows, seed=42)
	assert hist.m_k[1] == windows
	shares = hist.channel_shares()
	sigma = math.sqrt(0.125 * 0.875 / windows)
	assert np.all(np.fabs(shares - 0.125) <= 4.0 * sigma)


def test_two_photons_distinct():
	windows = 200000
	N = 8
	hist = sim.simulate_windows(state.fock_distribution(2), sim.SplitterTree(3), 1.0, 0.0, windows, seed=7)
	freq = hist.m_k[2] / float(windows)
	p = 1.0 - 1.0 / N
	assert hist.m_k[1] + hist.m_k[2] == windows
	assert abs(freq - p) <= 4.0 * math.sqrt(p * (1.0 - p) / windows)


def test_triggered():
	hist = sim.simulate_triggered(state.fock_distribution(1), sim.SplitterTree(3), 1.0, 0.0, 1000, seed=1)
	assert hist.mode == sim.TRIGGERED
	assert hist.m_k[1] == 1000


def test_seed_determinism():
	pnd = state.coherent_distribution(2.0)
	tree = sim.SplitterTree(3)
	a = sim.simulate_windows(pnd, tree, 0.6, 0.01, 200000, seed=11)
	b = sim.simulate_windows(pnd, tree, 0.6, 0.01, 200000, seed=11)
	c = sim.simulate_windows(pnd, tree, 0.6, 0.01, 200000, seed=11, ncpu=3)
	d = sim.simulate_windows(pnd, tree, 0.6, 0.01, 200000, seed=12)
	assert np.all(a.m_k == b.m_k) and np.all(a.channel_clicks == b.channel_clicks)
	assert np.all(a.m_k == c.m_k) and np.all(a.channel_clicks == c.channel_clicks)
	assert not np.all(a.m_k == d.m_k)


def test_prefix_consistency():
	# The first windows of a longer run are the windows of a shorter run
	pnd = state.thermal_distribution(0.5)
	tree = sim.SplitterTree(2)
	short = sim.simulate_windows(pnd, tree, 0.9, 0.0, sim.BLOCKSIZE, seed=5)
	full = sim.simulate_windows(pnd, tree, 0.9, 0.0, 2 * sim.BLOCKSIZE, seed=5)
	assert np.all(full.m_k >= short.m_k)


@pytest.mark.parametrize("pnd,eta,nu", [
	(state.coherent_distribution(2.0), 0.6, 0.01),
	(state.mixture_distribution([state.fock_distribution(1), state.fock_distribution(2)], [0.9, 0.1]), 0.8, 0.0),
	(state.thermal_distribution(1.0), 0.5, 0.05),
])
def test_oracle(pnd, eta, nu):
	M = 10**6
	cfg = theory.DetectorArrayConfig(8, eta, nu)
	hist = sim.simulate_windows(pnd, sim.SplitterTree(3), eta, nu, M, seed=2024)
	c = theory.click_distribution(pnd, cfg).c
	assert tvdistance(hist, c) <= tvbound(c, M)


def test_oracle_nonuniform():
	M = 10**6
	tree = sim.SplitterTree(2, [0.5, 0.6, 0.4])
	cfg = theory.DetectorArrayConfig(4, 0.7, 0.02, weights=tree.channel_probabilities())
	hist = sim.simulate_windows(state.coherent_distribution(1.5), tree, 0.7, 0.02, M, seed=99)
	c = theory.coherent_click_distribution(cfg, 1.5).c
	assert tvdistance(hist, c) <= tvbound(c, M)


def test_invalid_parameters():
	pnd = state.fock_distribution(1)
	tree = sim.SplitterTree(2)
	with pytest.raises(err.InvalidConfig):
		sim.simulate_windows(pnd, tree, 1.5, 0.0, 10, seed=0)
	with pytest.raises(err.InvalidConfig):
		sim.simulate_windows(pnd, tree, 0.5, -1.0, 10, seed=0)
	with pytest.raises(err.ValidationError):
		sim.simulate_windows(pnd, tree, 0.5, 0.0, 0, seed=0)
	with pytest.raises(err.ValidationError):
		sim.simulate_windows(pnd, tree, 0.5, 0.0, 10, seed=-3)
	with pytest.raises(err.ValidationError):
		sim.simulate_triggered(pnd, tree, 0.5, 0.0, 10, seed=1.5)


def test_tag_file(tmp_path):
	pnd = state.coherent_distribution(1.0)
	tree = sim.SplitterTree(2)
	path = tmp_path / "tags.txt"
	hist = sim.write_tag_file(path, pnd, tree, 0.8, 0.01, 1000, seed=3)
	reference = sim.simulate_windows(pnd, tree, 0.8, 0.01, 1000, seed=3)
	assert np.all(hist.m_k == reference.m_k)

	with open(path, "rb") as f:
		content = f.read()
	assert b"\r" not in content
	lines = content.decode("utf-8").split("\n")
	assert lines[0] == "#clickkit-tags v1 channels=4"
	body = [line for line in lines[1:] if line and not line.startswith("#")]
	assert len(body) == int(np.sum(hist.channel_clicks))
	timestamps = [int(line.split(",")[0]) for line in body]
	assert timestamps == sorted(timestamps)
	assert all(t % 10000 == 0 for t in timestamps)


def test_tag_file_triggered(tmp_path):
	path = tmp_path / "heralded.txt"
	hist = sim.write_tag_file(path, state.fock_distribution(1), sim.SplitterTree(3), 0.5, 0.0, 500, seed=8, window_ns=12.5, mode=sim.TRIGGERED)
	with open(path, "r", encoding="utf-8") as f:
		lines = f.read().split("\n")
	assert lines[0] == "#clickkit-tags v1 channels=9 trigger=8"
	body = [line.split(",") for line in lines[1:] if line and not line.startswith("#")]
	triggers = [int(t) for (t, c) in body if c == "8"]
	assert triggers == [w * 12500 for w in range(500)]
	assert len(body) == 500 + hist.m_k[1]
	with pytest.raises(err.ValidationError):
		sim.write_tag_file(path, state.fock_distribution(1), sim.SplitterTree(3), 0.5, 0.0, 5, seed=8, window_ns=1e-4)
