"""Whitney circles (preimages of the diagonal under a pair homotopy) and the
ruled disks they bound."""

from dataclasses import dataclass, field
from typing import List

import numpy as np

from ..errors import DimensionError
from ..solve import SolverConfig, TracedCurve, ZeroProblem, trace_zeros_1d


def _s_index(h):
    names = list(h.names)
    return names.index("s") if "s" in names else 2


def diagonal_problem(h, config=None, name=None):
    """Zero problem p1 H - p2 H = 0 on the domain of ``h``."""
    if h.dim % 2:
        raise DimensionError(f"{h.name} must map into R^n x R^n")
    n = h.dim // 2

    def F(args):
        v = h.evaluate(args)
        return [v[i] - v[n + i] for i in range(n)]

    return ZeroProblem(F, h.domain, n, config or SolverConfig(),
                       name=name or f"Whitney circle of {h.name}")


def whitney_circle(h, config=None) -> List[TracedCurve]:
    """Trace the one-dimensional zero set of p1 H - p2 H."""
    n = h.dim // 2
    if h.k != n + 1:
        raise DimensionError(
            f"a Whitney circle needs dim(domain) = n + 1; {h.name} has {h.k} factors and n = {n}")
    return trace_zeros_1d(diagonal_problem(h, config))


def witness_ruling(h, point, sigma, s_index=None):
    """gamma(sigma): p1 H at homotopy time 2 sigma s for sigma <= 1/2, then
    p2 H at time (2 - 2 sigma) s; joins p1 H(s=0) to p2 H(s=0)."""
    n = h.dim // 2
    si = _s_index(h) if s_index is None else s_index
    point = np.asarray(point, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    s = point[si]
    U = np.tile(point, (len(sigma), 1))
    first = sigma <= 0.5
    U[:, si] = np.where(first, 2 * sigma * s, (2 - 2 * sigma) * s)
    V = h.eval_batch(U)
    return np.where(first[:, None], V[:, :n], V[:, n:])


@dataclass
class WhitneyData:
    curves: List[TracedCurve]
    rulings: List[np.ndarray] = field(repr=False)      # per curve: (N, S, n)
    sigma: np.ndarray = field(repr=False)
    checks: dict = field(default_factory=dict)

    @property
    def is_empty(self):
        return not self.curves

    def boundary(self):
        """Boundary polylines: the sigma = 0 and sigma = 1 edges per curve."""
        out = []
        for R in self.rulings:
            out.append(R[:, 0, :])
            out.append(R[:, -1, :])
        return out

    def mesh(self):
        """Vertices and quad faces (0-based) of the ruled surface."""
        verts = []
        faces = []
        base = 0
        for R in self.rulings:
            N, S, n = R.shape
            verts.append(R.reshape(-1, n))
            for a in range(N - 1):
                for b in range(S - 1):
                    v0 = base + a * S + b
                    faces.append((v0, v0 + 1, v0 + S + 1, v0 + S))
            base += N * S
        V = np.vstack(verts) if verts else np.empty((0, 3))
        return V, faces

    def to_dict(self):
        return {
            "n_curves": len(self.curves),
            "curves": [c.to_dict() for c in self.curves],
            "n_rulings": int(sum(len(R) for R in self.rulings)),
            "sigma_samples": int(len(self.sigma)),
            "checks": self.checks,
        }


def _image_distance(points, image):
    best = np.inf
    for chunk in np.array_split(points, max(1, len(points) // 256)):
        d = np.linalg.norm(chunk[:, None, :] - image[None, :, :], axis=-1)
        best = min(best, float(d.min()))
    return best


def whitney_disk(h, curves, fi=None, fj=None, sigma_samples=33, image_samples=720):
    """Ruled disk swept by the witness paths over the Whitney circle.

    ``fi`` and ``fj`` are the component maps at the ends of the homotopy.
    They take the circle parameter of their component, followed by any
    family parameters of ``h`` beyond s.  When given, the boundary is
    checked against them and the interior distance to their images is
    measured.
    """
    n = h.dim // 2
    sigma = np.linspace(0.0, 1.0, sigma_samples)
    si = _s_index(h)
    rulings = [np.stack([witness_ruling(h, p, sigma, si) for p in c.points]) for c in curves]
    data = WhitneyData(list(curves), rulings, sigma)
    if not curves:
        data.checks = {"empty": True}
        return data
    checks = {"empty": False}
    if fi is not None and fj is not None:
        extra = list(range(si + 1, h.k))
        bi = bj = 0.0
        interior = np.inf
        for c, R in zip(curves, rulings):
            P = c.points
            Ui = np.column_stack([P[:, 0]] + [P[:, e] for e in extra])
            Uj = np.column_stack([P[:, 1]] + [P[:, e] for e in extra])
            bi = max(bi, float(np.max(np.linalg.norm(R[:, 0, :] - fi.eval_batch(Ui[:, :fi.k]), axis=1))))
            bj = max(bj, float(np.max(np.linalg.norm(R[:, -1, :] - fj.eval_batch(Uj[:, :fj.k]), axis=1))))
            # interior: chord samples away from both ends of each ruling
            for row in range(1, len(P) - 1):
                pts = R[row]
                away = (np.linalg.norm(pts - pts[0], axis=1) > 1e-9) & \
                       (np.linalg.norm(pts - pts[-1], axis=1) > 1e-9)
                if not np.any(away):
                    continue
                params = P[row, extra] if extra else []
                ti = np.linspace(0, fi.domain[0].upper, image_samples, endpoint=False)
                imi = fi.eval_batch(np.column_stack([ti] + [np.full_like(ti, q) for q in params])[:, :fi.k])
                imj = fj.eval_batch(np.column_stack([ti] + [np.full_like(ti, q) for q in params])[:, :fj.k])
                interior = min(interior, _image_distance(pts[away], np.vstack([imi, imj])))
        checks["boundary_error_i"] = bi
        checks["boundary_error_j"] = bj
        checks["interior_min_distance"] = interior if np.isfinite(interior) else None
    steps = np.concatenate([np.diff(R, axis=1).reshape(-1, n) for R in rulings])
    lengths = np.linalg.norm(steps, axis=1)
    moving = lengths > 1e-12
    if np.any(moving):
        dirs = steps[moving] / lengths[moving, None]
        checks["max_abs_ruling_direction"] = [
            float(np.max(np.abs(dirs[:, a]))) for a in range(n)]
    data.checks = checks
    return data


def rulings_parallel_to(data, axis, tol=1e-8):
    """True when every non-degenerate ruling step points along ``axis``."""
    n = data.rulings[0].shape[-1] if data.rulings else 0
    worst = 0.0
    for R in data.rulings:
        steps = np.diff(R, axis=1).reshape(-1, n)
        others = np.delete(steps, axis, axis=1)
        worst = max(worst, float(np.max(np.abs(others))) if len(others) else 0.0)
    return worst <= tol, worst


__all__ = ["whitney_circle", "whitney_disk", "witness_ruling", "WhitneyData",
           "rulings_parallel_to", "diagonal_problem"]
