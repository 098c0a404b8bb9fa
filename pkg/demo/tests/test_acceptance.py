"""
End-to-end checks of the main properties of click-counting statistics, on exact distributions and on
long Monte Carlo runs. The long runs are marked slow, deselect them with -m "not slow".
"""

import math

import pytest
import numpy as np

from clickkit import state, theory, sim, est, ingest, com

import logging
logging.basicConfig(level=logging.INFO)


ETAS = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
NS = [2, 4, 8, 16]


@pytest.mark.parametrize("N", NS)
@pytest.mark.parametrize("nu", [0.0, 0.01, 0.1])
def test_coherent_nullity(N, nu):
	for eta in ETAS:
		cfg = theory.DetectorArrayConfig(N, eta, nu)
		for mean_photons in [0.1, 0.3, 1.0, 2.0, 5.0, 10.0]:
			qb = theory.qb_of(theory.coherent_click_distribution(cfg, mean_photons))
			assert abs(qb) <= 1e-10


@pytest.mark.parametrize("N", NS)
def test_single_photon_closed_form(N):
	for eta in ETAS:
		cfg = theory.DetectorArrayConfig(N, eta, 0.0)
		assert theory.analytic_qb(state.fock_distribution(1), cfg) == pytest.approx(theory.fock_qb(N, eta), abs=1e-12)
		assert theory.fock_qb(N, eta) == pytest.approx(-eta * (N - 1) / (N - eta), abs=1e-15)
	assert theory.analytic_qb(state.fock_distribution(1), theory.DetectorArrayConfig(8, 1.0, 0.0)) == -1.0


@pytest.mark.slow
@pytest.mark.parametrize("eta", [0.3, 0.7, 1.0])
def test_single_photon_simulated(eta):
	hist = sim.simulate_triggered(state.fock_distribution(1), sim.SplitterTree(3), eta, 0.0, 10**6, seed=31)
	qb = est.qb_estimate(hist)
	assert abs(qb.value - theory.fock_qb(8, eta)) <= 4.0 * qb.sigma


ORACLEFIXTURES = [
	(state.coherent_distribution(0.5), 1.0, 0.0, 1),
	(state.coherent_distribution(2.0), 0.6, 0.01, 3),
	(state.coherent_distribution(8.0), 0.3, 0.1, 4),
	(state.fock_distribution(1), 0.9, 0.0, 3),
	(state.fock_distribution(2), 1.0, 0.0, 2),
	(state.fock_distribution(3), 0.5, 0.02, 4),
	(state.thermal_distribution(0.5), 1.0, 0.0, 3),
	(state.thermal_distribution(2.0), 0.4, 0.05, 2),
	(state.fluctuating_coherent_distribution(1.0, 0.5), 0.8, 0.01, 3),
	(state.mixture_distribution([state.fock_distribution(1), state.fock_distribution(2)], [0.9, 0.1]), 0.7, 0.0, 3),
	(state.PhotonNumberDistribution([0.75, 0.25]), 1.0, 0.0, 3),
	(state.PhotonNumberDistribution([0.2, 0.3, 0.3, 0.2]), 0.6, 0.1, 1),
]


@pytest.mark.slow
@pytest.mark.parametrize("i", range(len(ORACLEFIXTURES)))
def test_oracle_equivalence(i):
	(pnd, eta, nu, stages) = ORACLEFIXTURES[i]
	M = 10**6
	tree = sim.SplitterTree(stages)
	c = theory.click_distribution(pnd, theory.DetectorArrayConfig(tree.N, eta, nu)).c
	hist = sim.simulate_windows(pnd, tree, eta, nu, M, seed=1000 + i)
	tv = 0.5 * np.sum(np.fabs(hist.m_k / float(M) - c))
	assert tv <= 5.0 * math.sqrt(np.sum(c * (1.0 - c)) / M)


def scan(family):
	kit = com.ClickKit(configlist=[
		("setup", "ncpu", 0), ("detector", "eta", 0.6), ("scan", "family", family),
		("scan", "kmin", 0.05), ("scan", "kmax", 2.0), ("scan", "points", 12), ("scan", "windows", 10**6),
	])
	(columns, rows, summary) = kit.scan()
	return summary


@pytest.mark.slow
def test_sign_separation():
	coherent = scan("coherent")
	fock = scan("fock")
	for (target, qb, sigma) in zip(coherent["target_k"], coherent["qb"], coherent["qb_sigma"]):
		assert qb > 0.0 or target < 0.2
		if target >= 0.2:
			assert qb >= 4.0 * sigma
	for (target, qb, sigma) in zip(fock["target_k"], fock["qb"], fock["qb_sigma"]):
		assert qb < 0.0
		if target >= 0.2:
			assert qb <= -4.0 * sigma
	assert all(qb > 0.0 for qb in coherent["qb_theory"])
	assert all(qb < 0.0 for qb in fock["qb_theory"])


@pytest.mark.slow
def test_uniform_splitting():
	M = 10**6
	hist = sim.simulate_triggered(state.fock_distribution(1), sim.SplitterTree(3), 1.0, 0.0, M, seed=33)
	sigma = math.sqrt(0.125 * 0.875 / M)
	assert np.all(np.fabs(hist.channel_shares() - 0.125) <= 4.0 * sigma)


@pytest.mark.parametrize("N", NS)
@pytest.mark.parametrize("eta,nu,mean_photons", [(1.0, 0.0, 0.5), (0.6, 0.01, 2.0), (0.2, 0.1, 10.0)])
def test_coherent_moment_matrix(N, eta, nu, mean_photons):
	cfg = theory.DetectorArrayConfig(N, eta, nu)
	p = theory.clickprobability(cfg, mean_photons)
	mom = est.moment_matrix(theory.coherent_click_distribution(cfg, mean_photons))
	assert mom.eigenvalues[0] >= -1e-10
	assert np.sum(mom.eigenvalues > 1e-8) == 1
	assert mom.eigenvalues[-1] == pytest.approx(sum(p**(2 * m) for m in range(N // 2 + 1)), abs=1e-10)


@pytest.mark.slow
def test_single_photon_negativity():
	hist = sim.simulate_triggered(state.fock_distribution(1), sim.SplitterTree(3), 0.5, 0.0, 10**7, seed=34, ncpu=0)
	report = est.nonclassicality_verdict(hist)
	assert report.verdict == est.NONCLASSICAL
	assert report.forms[0].value < 0.0
	assert report.forms[0].significance > 5.0


def test_minor_sign_matches_qb():
	rng = np.random.default_rng(35)
	for i in range(50):
		N = int(rng.integers(2, 17))
		c = theory.ClickDistribution(rng.dirichlet(np.full(N + 1, 0.7)))
		entries = est.moment_matrix(c).entries
		minor = entries[0][0] * entries[1][1] - entries[0][1] * entries[1][0]
		qb = theory.qb_of(c)
		if abs(minor) <= 1e-12 or abs(qb) <= 1e-12:
			continue
		assert np.sign(minor) == np.sign(qb)


@pytest.mark.parametrize("mode,stages", [(sim.CW, 3), (sim.TRIGGERED, 3), (sim.CW, 4), (sim.TRIGGERED, 2)])
def test_round_trip(tmp_path, mode, stages):
	path = tmp_path / "tags.txt"
	pnd = state.coherent_distribution(1.0) if mode == sim.CW else state.fock_distribution(1)
	tree = sim.SplitterTree(stages)
	written = sim.write_tag_file(path, pnd, tree, 0.8, 0.01, 100000, seed=36, window_ns=10.0, mode=mode)
	tags = ingest.parse_tag_stream(path)
	if mode == sim.CW:
		hist = ingest.window_continuous(tags, 10.0, 100000 * 10.0)
		reference = sim.simulate_windows(pnd, tree, 0.8, 0.01, 100000, seed=36)
	else:
		hist = ingest.window_triggered(tags, delta_tau_ns=10.0)
		reference = sim.simulate_triggered(pnd, tree, 0.8, 0.01, 100000, seed=36)
	assert np.all(hist.m_k == written.m_k)
	assert np.all(hist.m_k == reference.m_k)


@pytest.mark.parametrize("p", [0.1, 0.5])
def test_sigma_methods_agree(p):
	rng = np.random.default_rng(37)
	c = theory.coherent_click_distribution(theory.DetectorArrayConfig(8), -8.0 * math.log1p(-p)).c
	hist = sim.ClickHistogram(rng.multinomial(10**6, c))
	delta = est.qb_estimate(hist)
	boot = est.qb_estimate(hist, method="bootstrap", seed=38)
	assert boot.sigma == pytest.approx(delta.sigma, rel=0.15)


def test_sigma_coverage():
	pnd = state.coherent_distribution(1.5)
	tree = sim.SplitterTree(3)
	covered = 0
	for seed in range(200):
		qb = est.qb_estimate(sim.simulate_windows(pnd, tree, 0.6, 0.01, 20000, seed=seed))
		covered += abs(qb.value) <= 4.0 * qb.sigma
	assert covered >= 198
