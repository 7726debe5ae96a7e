"""Ground states of the Lane-Emden equation on the square and Euler stability experiments."""
from .spectral import (
    Grid,
    ScalarField,
    SpectralField,
    make_grid,
    transform,
    green,
    velocity,
    energy,
    energy_norm,
    lp_norm,
    dealias,
)

__version__ = "0.1.0"
