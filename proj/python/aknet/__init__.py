"""Adaptive KalmanNet: learned Kalman gains modulated by a SoW hypernetwork."""

from ._aknet import *  # noqa: F401,F403
from ._aknet import __doc__  # noqa: F401

__version__ = "0.1.0"
