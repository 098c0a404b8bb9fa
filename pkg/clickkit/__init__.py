"""
clickkit: click-counting statistics of multiplexed on-off detectors.

Analytic click distributions for any photon-number input, a Monte Carlo emulation of a splitter tree
feeding imperfect detectors, time-tag ingestion, and the nonclassicality tests (Q_B parameter and
matrix of moments) on measured or simulated click histograms.
"""

__version__ = "1.0dev"

from . import err
from . import utils
from . import parmap
from . import state
from . import theory
from . import sim
from . import est
from . import ingest
from . import table
from . import com
from . import cli
