"""Cubic-stage obstruction: Whitney circles and disks, the X and W pieces
over a one-parameter family, and the Borromean rings."""

from .borromean import BorromeanDemo, borromean_demo, lift_path
from .pieces import (ObstructionPiece, ObstructionReport, assemble_obstruction,
                     circle_circle_intersections, disk_component_intersections, witness_errors,
                     witness_paths)
from .t2 import PAIRS, TRIPLES, T2Path, T2Point, dimension_audit, swap_halves
from .whitney import WhitneyData, rulings_parallel_to, whitney_circle, whitney_disk

__all__ = [
    "BorromeanDemo", "borromean_demo", "lift_path", "ObstructionPiece", "ObstructionReport",
    "assemble_obstruction", "circle_circle_intersections", "disk_component_intersections",
    "witness_errors", "witness_paths", "PAIRS", "TRIPLES", "T2Path", "T2Point",
    "dimension_audit", "swap_halves", "WhitneyData", "rulings_parallel_to", "whitney_circle",
    "whitney_disk",
]
