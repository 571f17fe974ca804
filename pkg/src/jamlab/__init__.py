"""Jamiton laboratory for the inhomogeneous ARZ second-order traffic model.

Subpackages cover the model closures (`model`), exact traveling-wave
construction (`jamiton`), finite-volume simulation (`solver`), solution
diagnostics (`analysis`) and the wave-collision experiment harness
(`collision`).
"""

from jamlab.model import ModelParams

__all__ = ["ModelParams"]
__version__ = "0.1.0"
