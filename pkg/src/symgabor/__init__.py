"""Symplectic generalized Fourier transforms, Gabor systems and Balian-Low probes."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .field import GridSpec, SampledField, gaussian, hermite, load_sgf, save_sgf  # noqa: F401
from .symplectic import (  # noqa: F401
    complete_symplectic_basis,
    make_basis,
    omega,
    regularize_basis,
)
