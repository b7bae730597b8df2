"""Two-species ballistic coagulation on a ring.

Subpackages:

* :mod:`coagring.core` - shared domain types (spectra, moments, seeds)
* :mod:`coagring.ring_sim` - exact event-driven stochastic simulation
* :mod:`coagring.kinetic` - truncated mean-field (Smoluchowski-type) solver
* :mod:`coagring.genfun` - power-series oracles for the random kernel
* :mod:`coagring.majority_ss` - majority-kernel self-similar dynamics
* :mod:`coagring.ensemble` - parallel ensembles and empirical statistics
* :mod:`coagring.cli` - command-line front end
"""

__version__ = "0.1.0"

from .core import ClusterSpectrum, KernelKind, Moments, SeedSpec, gap_index, moments

__all__ = [
    "__version__",
    "ClusterSpectrum",
    "KernelKind",
    "Moments",
    "SeedSpec",
    "gap_index",
    "moments",
]
