"""
mhdlab: a pseudo-spectral laboratory for the 2D ideal MHD equations in
vorticity-current form, with vortex-patch initial data, frozen-in
Hamiltonian magnetic fields, free-space potential theory for stationary
patches, and empirical benches for the Riesz/Calderon commutator
estimates that control the analysis.
"""

__version__ = "0.1.0"

from .spectral import Grid, ScalarField, VectorField
from .fields import MHDState

__all__ = ["Grid", "ScalarField", "VectorField", "MHDState", "__version__"]
