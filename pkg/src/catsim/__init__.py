"""Numerical twin of heralded cat-state generation from broadband squeezed light."""

from .exceptions import *  # noqa: F401,F403
from .herald import ExperimentConfig, ModeFunction, heralded_state
from .modeest import TemporalModePCA
from .tomo import MLETomography

__all__ = ["ExperimentConfig", "ModeFunction", "heralded_state", "TemporalModePCA", "MLETomography"]
__version__ = "0.1.0"
