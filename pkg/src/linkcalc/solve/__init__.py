"""Zero sets of smooth systems on products of circles and intervals."""

from .curves import oriented_tangent, trace_zeros_1d
from .problem import SolverConfig, TracedCurve, TransversePoint, ZeroProblem
from .zeros import (classify, deduplicate, find_zeros_0d, newton_batch, orientation_sign,
                    polish, signed_count)

__all__ = [
    "SolverConfig", "TracedCurve", "TransversePoint", "ZeroProblem", "classify",
    "deduplicate", "find_zeros_0d", "newton_batch", "orientation_sign", "oriented_tangent",
    "polish", "signed_count", "trace_zeros_1d",
]
