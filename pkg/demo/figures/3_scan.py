"""
Q_B versus <k> for fluctuating laser light and for heralded Fock states, from simulations of 10^6 windows
per point. Writes scan_coherent.csv and scan_fock.csv.
"""

import clickkit

import logging
logging.basicConfig(level=logging.INFO)


for family in ["coherent", "fock"]:
	kit = clickkit.com.ClickKit("../clickkit_example.cfg", [
		("setup", "ncpu", "0"),
		("setup", "out", "scan_{}.csv".format(family)),
		("detector", "eta", "0.6"),
		("scan", "family", family),
		("scan", "kmin", "0.05"),
		("scan", "kmax", "2.0"),
		("scan", "points", "12"),
	])
	kit.scan()
