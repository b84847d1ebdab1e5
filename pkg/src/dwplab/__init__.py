"""Numerical laboratory for Kaehler doubly-warped products over Riemannian flows."""

from .dwp import DoublyWarpedProduct, WarpProfile, build, preset
from .flows import MODEL_IDS, RiemannianFlow, get_model
from .ode import OdeParams, classify, integrate
from .report import VerificationReport

__version__ = "0.1.0"

__all__ = [
    "DoublyWarpedProduct",
    "MODEL_IDS",
    "OdeParams",
    "RiemannianFlow",
    "VerificationReport",
    "WarpProfile",
    "build",
    "classify",
    "get_model",
    "integrate",
    "preset",
]
