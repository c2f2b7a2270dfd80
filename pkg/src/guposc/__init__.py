"""Numerical laboratory for the minimal-length (GUP) deformed harmonic oscillator."""

from .errors import DomainExceeded
from .momentum_map import (
    OscillatorParams,
    PowerSeries,
    momentum_forward,
    momentum_inverse,
    series_P,
    series_P_squared,
)

__version__ = "0.1.0"

__all__ = [
    "DomainExceeded",
    "OscillatorParams",
    "PowerSeries",
    "momentum_forward",
    "momentum_inverse",
    "series_P",
    "series_P_squared",
    "__version__",
]
