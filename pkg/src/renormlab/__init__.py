"""Renormalization towers of multimodal interval maps with their real and
complex a priori bounds, measured numerically."""

from .errors import RenormLabError
from .families import feigenbaum_parameter, superstable_parameters
from .intervals import Interval
from .maps import AnalyticMap, load_map
from .polylike import PolyLikeExtension, construct_extension
from .renormalization import NotRenormalizable, RenormLevel, build_tower

__version__ = "0.1.0"

__all__ = [
    "AnalyticMap",
    "Interval",
    "NotRenormalizable",
    "PolyLikeExtension",
    "RenormLabError",
    "RenormLevel",
    "build_tower",
    "construct_extension",
    "feigenbaum_parameter",
    "load_map",
    "superstable_parameters",
]
