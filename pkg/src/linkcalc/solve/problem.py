"""Problem, configuration and result types for the zero-set solver."""

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..expr import dual


@dataclass(frozen=True)
class SolverConfig:
    grid: int = 64                # seeding cells per factor (isolated zeros)
    newton_tol: float = 1e-10     # residual norm accepted as a zero
    dedup_radius: float = 1e-6
    sigma_min: float = 1e-8       # relative to the Jacobian 2-norm
    max_depth: int = 3            # grid doublings before ResolutionUnstable
    seed: int = 0
    boundary_tol: float = 1e-4
    min_root_radius: float = 1e-6  # sigma_min / |D^2 F| below this is a tangency
    max_newton_iter: int = 60
    curve_grid: int = 0           # seeding cells per factor for curves; 0 -> grid // 3
    step_max: float = 0.02        # continuation step cap in parameter units
    step_min: float = 1e-7

    def with_(self, **changes):
        return replace(self, **changes)

    def refined(self, factor=2):
        """Same settings at ``factor`` times the resolution."""
        return replace(self, grid=self.grid * factor,
                       curve_grid=self.curve_grid * factor if self.curve_grid else 0,
                       step_max=self.step_max / factor)

    @property
    def curve_cells(self):
        return self.curve_grid or max(8, self.grid // 3)

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class ZeroProblem:
    """Zeros of ``func`` over a product of circles and intervals.

    ``func(args)`` takes k scalars, arrays or duals and returns m values.
    ``strata`` maps a label to a vectorised distance function ``d(U)`` for
    boundary pieces other than the interval ends (e.g. the diagonal s = t).
    """

    func: Callable
    factors: Tuple
    m: int
    config: SolverConfig = field(default_factory=SolverConfig)
    labels: Tuple[str, ...] = ()
    strata: Dict[str, Callable] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        self.factors = tuple(self.factors)
        if not self.labels:
            self.labels = tuple(f.name for f in self.factors)

    @property
    def k(self):
        return len(self.factors)

    @property
    def periods(self):
        return np.array([f.upper if f.is_circle else 0.0 for f in self.factors])

    def values(self, U):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        out = self.func([U[:, i] for i in range(self.k)])
        return np.stack([np.broadcast_to(np.asarray(v, dtype=float), (len(U),)) for v in out], axis=-1)

    def values_and_jacobians(self, U):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        n = len(U)
        out = self.func(dual.seed([U[:, i] for i in range(self.k)]))
        F = np.empty((n, self.m))
        J = np.zeros((n, self.m, self.k))
        for r, v in enumerate(out):
            if isinstance(v, dual.Dual):
                F[:, r] = np.broadcast_to(v.val, (n,))
                J[:, r, :] = np.broadcast_to(v.grad, (self.k, n)).T
            else:
                F[:, r] = v
        return F, J

    def jacobian(self, u):
        return self.values_and_jacobians(np.asarray(u, dtype=float)[None, :])[1][0]

    def wrap(self, U):
        U = np.array(U, dtype=float)
        for i, f in enumerate(self.factors):
            if f.is_circle:
                U[..., i] = np.mod(U[..., i], f.upper)
        return U

    def delta(self, A, B):
        """Wrap-aware difference A - B (circle coordinates in [-P/2, P/2))."""
        D = np.asarray(A, dtype=float) - np.asarray(B, dtype=float)
        for i, f in enumerate(self.factors):
            if f.is_circle:
                P = f.upper
                D[..., i] = np.mod(D[..., i] + P / 2, P) - P / 2
        return D

    def boundary_flags(self, u):
        flags = []
        tol = self.config.boundary_tol
        for i, f in enumerate(self.factors):
            if f.is_circle:
                continue
            if abs(u[i] - f.lower) < tol:
                flags.append(f"{f.name}={f.lower:g}")
            if abs(f.upper - u[i]) < tol:
                flags.append(f"{f.name}={f.upper:g}")
        for label, dist in self.strata.items():
            if float(np.asarray(dist(np.asarray(u)[None, :]))[0]) < tol:
                flags.append(label)
        return tuple(flags)


@dataclass(frozen=True)
class TransversePoint:
    coords: Tuple[float, ...]
    residual: float
    jacobian: np.ndarray = field(compare=False, repr=False)
    sign: int
    sigma_min: float
    root_radius: float = float("inf")
    flags: Tuple[str, ...] = ()

    @property
    def u(self):
        return np.array(self.coords)

    def to_dict(self, labels=None):
        d = {
            "coords": [float(c) for c in self.coords],
            "residual": float(self.residual),
            "sign": int(self.sign),
            "sigma_min": float(self.sigma_min),
            "flags": list(self.flags),
        }
        if labels:
            d["labels"] = list(labels)
        return d


@dataclass(frozen=True)
class TracedCurve:
    points: np.ndarray = field(repr=False)   # (N, k), circle coordinates wrapped
    closed: bool
    end_tags: Optional[Tuple[Tuple[str, str], Tuple[str, str]]]
    arc_length: float
    factors: Tuple = field(repr=False, default=())

    def __len__(self):
        return len(self.points)

    def unwrapped(self):
        """Continuous lift of the polyline (no jumps across circle seams)."""
        P = np.array([f.upper if f.is_circle else 0.0 for f in self.factors])
        pts = np.array(self.points, dtype=float)
        out = pts.copy()
        for i in np.nonzero(P)[0]:
            d = np.diff(pts[:, i])
            d = np.mod(d + P[i] / 2, P[i]) - P[i] / 2
            out[1:, i] = pts[0, i] + np.cumsum(d)
        return out

    def column(self, name):
        names = [f.name for f in self.factors]
        return self.points[:, names.index(name)]

    def to_dict(self, labels=None):
        d = {
            "closed": bool(self.closed),
            "n_samples": int(len(self.points)),
            "arc_length": float(self.arc_length),
            "end_tags": [list(t) for t in self.end_tags] if self.end_tags else None,
            "first": [float(c) for c in self.points[0]],
            "last": [float(c) for c in self.points[-1]],
        }
        if labels:
            d["labels"] = list(labels)
        return d
