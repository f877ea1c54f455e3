"""Pseudo-spectral decay laboratory for compressible Navier-Stokes perturbations."""

__version__ = "0.1.0"

from .models import MODEL_FCNS, MODEL_ICNS, ModelParams, State
from .oracle import SpectrumProfile
from .spectral import Field, SpectralGrid, VecField, make_grid

__all__ = [
    "__version__",
    "MODEL_FCNS",
    "MODEL_ICNS",
    "ModelParams",
    "State",
    "SpectrumProfile",
    "Field",
    "SpectralGrid",
    "VecField",
    "make_grid",
]
