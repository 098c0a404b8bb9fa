"""
Single photons sent through a balanced tree of 3 stages: share of the clicks recorded by each of the 8 channels,
with its binomial standard error. Writes uniform.csv.
"""

import numpy as np
import clickkit

import logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


windows = 1000000
tree = clickkit.sim.SplitterTree(3)
hist = clickkit.sim.simulate_triggered(clickkit.state.fock_distribution(1), tree, eta=1.0, nu=0.0, triggers=windows, seed=1, ncpu=0)

shares = hist.channel_shares()
total = np.sum(hist.channel_clicks)
errors = np.sqrt(shares * (1.0 - shares) / total)
for (i, (s, e)) in enumerate(zip(shares, errors)):
	logger.info("Channel {}: {:.3f} +/- {:.3f} %".format(i, 100.0 * s, 100.0 * e))

rows = [[i, float(s), float(e)] for (i, (s, e)) in enumerate(zip(shares, errors))]
provenance = {"tool": "clickkit", "version": clickkit.__version__, "command": "demo/figures/2_uniform.py", "tree": str(tree), "windows": windows, "seed": 1}
clickkit.table.write_table("uniform.csv", ["channel", "share", "share_sigma"], rows, provenance, summary={"qb": clickkit.est.qb_estimate(hist).value})
