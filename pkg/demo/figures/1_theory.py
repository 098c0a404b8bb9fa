"""
Theoretical click-counting statistics of three kinds of light, all giving <k> = 0.25 clicks on N = 8 ideal
detectors: binomial (coherent), sub-binomial (a single photon in 1 window out of 4) and super-binomial (thermal).
Writes theory.csv, one column of C_k per state, to be plotted with any tool.
"""

import clickkit

import logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


cfg = clickkit.theory.DetectorArrayConfig(8, eta=1.0, nu=0.0)
target = 0.25

states = {
	"coherent": clickkit.state.coherent_distribution(clickkit.theory.mean_photons_for_clicks(cfg, target)),
	"sub": clickkit.state.PhotonNumberDistribution([1.0 - target, target], label="single photon"),
	"thermal": clickkit.state.thermal_distribution(clickkit.theory.mean_photons_for_clicks(cfg, target, noise=1.0)),
}

dists = {name: clickkit.theory.click_distribution(pnd, cfg) for (name, pnd) in states.items()}
for (name, dist) in dists.items():
	logger.info("{}: <k> = {:.4f}, Q_B = {:+.3f}".format(name, dist.mean(), dist.qb()))

columns = ["k"] + list(dists.keys())
rows = [[k] + [float(d.c[k]) for d in dists.values()] for k in range(cfg.N + 1)]
summary = {"qb_" + name: d.qb() for (name, d) in dists.items()}
provenance = {"tool": "clickkit", "version": clickkit.__version__, "command": "demo/figures/1_theory.py", "detector": str(cfg)}
clickkit.table.write_table("theory.csv", columns, rows, provenance, summary=summary)
