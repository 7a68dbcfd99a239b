"""Displaced-Fock simulation of no-disturbance-without-measurement tests.

Modules
-------
fock
    Displaced-core two-mode states, displacement kernel, loss and passive optics.
optics
    Memory, detector and wave-plate models of the optical chain.
ndc
    The NDC pipeline and the disturbance ``d``.
hom
    HOM visibility model, dip fit and mode-match ratio.
size
    Effective size and disconnectivity of the macroscopic superposition.
runner
    Plans, Monte Carlo simulation, noise fit, reports and the ``dispfock`` CLI.
"""

from . import conventions, errors, fock, hom, ndc, optics, size

__version__ = "0.1.0"

__all__ = ["conventions", "errors", "fock", "hom", "ndc", "optics", "size"]
