"""Closed-form parametrised maps: parsing, evaluation, differentiation."""

from .dual import Dual
from .maps import (CallableMap, DomainFactor, ParamMap, SmoothMap, eval_map, jacobian,
                   min_image_distance, parse_map, parse_maps, wrap_point)
from .parser import parse_expression, to_text

__all__ = [
    "CallableMap", "DomainFactor", "Dual", "ParamMap", "SmoothMap", "eval_map",
    "jacobian", "min_image_distance", "parse_expression", "parse_map", "parse_maps",
    "to_text", "wrap_point",
]
