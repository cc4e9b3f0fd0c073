"""Tracing one-dimensional zero sets by predictor-corrector continuation."""

import numpy as np

from ..errors import NonTransverse, StepCollapse, ValidationError
from .problem import TracedCurve
from .zeros import cell_centers, newton_batch, scan_candidates

MAX_STEPS = 200_000


def oriented_tangent(J):
    """Unit kernel vector t of an m x (m+1) matrix with det([J; t]) > 0."""
    _, sv, vt = np.linalg.svd(J)
    t = vt[-1]
    if np.linalg.det(np.vstack([J, t])) < 0:
        t = -t
    return t, sv


def _eval(problem, u):
    F, J = problem.values_and_jacobians(u[None, :])
    return F[0], J[0]


class _Tracer:
    def __init__(self, problem):
        self.p = problem
        cfg = problem.config
        self.tol = cfg.newton_tol
        self.hmax = cfg.step_max
        self.hmin = cfg.step_min
        self.lo = np.array([f.lower for f in problem.factors])
        self.hi = np.array([f.upper for f in problem.factors])
        self.interval = np.array([not f.is_circle for f in problem.factors])

    def check_rank(self, u, sv):
        if sv[-1] < self.p.config.sigma_min * max(sv[0], 1e-300):
            raise NonTransverse(
                f"{self.p.name or 'system'}: rank drop along the zero curve at "
                f"{tuple(float(c) for c in u)}", location=tuple(float(c) for c in u))

    def correct(self, v, h):
        for it in range(8):
            F, J = _eval(self.p, v)
            r = np.linalg.norm(F)
            if not np.isfinite(r):
                return None, it
            if r <= self.tol:
                return v, it
            d = -np.linalg.pinv(J) @ F
            if np.linalg.norm(d) > 0.5 * h + 10 * self.tol:
                return None, it
            v = v + d
        F, _ = _eval(self.p, v)
        return (v, 8) if np.linalg.norm(F) <= self.tol else (None, 8)

    def outside(self, v):
        return bool(np.any(self.interval & ((v < self.lo) | (v > self.hi))))

    def boundary_point(self, u, v):
        """Zero on the first interval face crossed by the segment u -> v."""
        best = None
        for a in np.nonzero(self.interval)[0]:
            for bound, tag in ((self.lo[a], "lower"), (self.hi[a], "upper")):
                if (v[a] - bound) * (u[a] - bound) < 0 or (v[a] == bound != u[a]):
                    frac = (bound - u[a]) / (v[a] - u[a])
                    if best is None or frac < best[0]:
                        best = (frac, a, bound, tag)
        if best is None:
            return None
        frac, a, bound, tag = best
        w = u + frac * (v - u)
        w[a] = bound
        keep = [i for i in range(self.p.k) if i != a]
        for _ in range(12):
            F, J = _eval(self.p, w)
            if np.linalg.norm(F) <= self.tol:
                break
            try:
                d = np.linalg.solve(J[:, keep], -F)
            except np.linalg.LinAlgError:
                return None
            w[keep] += d
        F, _ = _eval(self.p, w)
        if np.linalg.norm(F) > self.tol or self.outside(w):
            return None
        return w, (self.p.factors[a].name, tag)

    def lift_near(self, target, ref):
        out = np.array(target, dtype=float)
        for i, f in enumerate(self.p.factors):
            if f.is_circle:
                P = f.upper
                out[i] = ref[i] + (np.mod(out[i] - ref[i] + P / 2, P) - P / 2)
        return out

    def march(self, start, tangent, allow_close):
        """Walk from ``start`` along ``tangent`` until a boundary face or,
        when ``allow_close``, until the curve returns to ``start``."""
        u = start.copy()
        t = tangent
        h = 0.5 * self.hmax
        pts = []
        length = 0.0
        for _ in range(MAX_STEPS):
            pred = u + h * t
            v, its = self.correct(pred, h)
            if v is None:
                if self.outside(pred):
                    hit = self.boundary_point(u, pred)
                    if hit is not None and np.linalg.norm(hit[0] - u) <= self.hmax:
                        pts.append(hit[0])
                        return pts, hit[1], False
                h *= 0.5
                if h < self.hmin:
                    raise StepCollapse(
                        f"{self.p.name or 'system'}: continuation step below {self.hmin:g}",
                        location=tuple(float(c) for c in u))
                continue
            if self.outside(v):
                hit = self.boundary_point(u, v)
                if hit is not None and np.linalg.norm(hit[0] - u) <= self.hmax:
                    pts.append(hit[0])
                    return pts, hit[1], False
                h *= 0.5
                if h < self.hmin:
                    raise StepCollapse(
                        f"{self.p.name or 'system'}: cannot locate boundary crossing",
                        location=tuple(float(c) for c in u))
                continue
            _, J = _eval(self.p, v)
            t_new, sv = oriented_tangent(J)
            if np.dot(t_new, t) < 0:
                t_new = -t_new
            if np.dot(t_new, t) < 0.9 or np.linalg.norm(v - u) > self.hmax:
                h *= 0.5
                if h < self.hmin:
                    raise StepCollapse(
                        f"{self.p.name or 'system'}: tangent turns too fast",
                        location=tuple(float(c) for c in u))
                continue
            self.check_rank(v, sv)
            if allow_close and length > 2 * self.hmax:
                s = self.lift_near(start, u)
                seg = v - u
                lam = np.clip(np.dot(s - u, seg) / max(np.dot(seg, seg), 1e-300), 0.0, 1.0)
                if lam > 0.0 and np.linalg.norm(u + lam * seg - s) < 0.25 * max(h, 1e-3 * self.hmax):
                    pts.append(s)
                    return pts, None, True
            pts.append(v)
            length += float(np.linalg.norm(v - u))
            u, t = v, t_new
            if its <= 2:
                h = min(1.5 * h, self.hmax)
        raise StepCollapse(f"{self.p.name or 'system'}: continuation did not terminate",
                           location=tuple(float(c) for c in u))

    def trace(self, seed):
        _, J = _eval(self.p, seed)
        t0, sv = oriented_tangent(J)
        self.check_rank(seed, sv)
        fwd, fwd_tag, closed = self.march(seed, t0, allow_close=True)
        if closed:
            pts = np.vstack([seed[None, :], np.array(fwd)])
            tags = None
        else:
            bwd, bwd_tag, _ = self.march(seed, -t0, allow_close=False)
            pts = np.vstack([np.array(bwd[::-1]).reshape(-1, self.p.k), seed[None, :],
                             np.array(fwd)])
            tags = (bwd_tag, fwd_tag)
        length = float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
        return TracedCurve(points=self.p.wrap(pts), closed=closed, end_tags=tags,
                           arc_length=length, factors=self.p.factors)


def seed_curve_points(problem):
    res = problem.config.curve_cells
    axes, cells, spacing = scan_candidates(problem, res)
    seeds = cell_centers(axes, cells, problem.factors)
    if len(seeds) == 0:
        return seeds
    X, _, ok = newton_batch(problem, seeds, step_cap=float(np.max(spacing)))
    return X[ok]


def trace_zeros_1d(problem):
    """All components of a one-dimensional zero set reachable from the
    seeding grid, each traced exactly once."""
    if problem.k != problem.m + 1:
        raise ValidationError(
            f"curve mode needs k = m + 1, got {problem.m} equations in {problem.k} unknowns")
    seeds = seed_curve_points(problem)
    tracer = _Tracer(problem)
    curves = []
    samples = np.empty((0, problem.k))
    radius = problem.config.step_max
    for s in seeds:
        if len(samples):
            d = np.linalg.norm(problem.delta(samples, s), axis=1)
            if np.min(d) < radius:
                continue
        c = tracer.trace(np.array(s, dtype=float))
        curves.append(c)
        samples = np.vstack([samples, _densify(problem, c)])
    return _canonical(curves)


def _densify(problem, curve):
    pts = curve.unwrapped()
    if len(pts) < 2:
        return problem.wrap(pts)
    mids = 0.5 * (pts[1:] + pts[:-1])
    return problem.wrap(np.vstack([pts, mids]))


def _canonical(curves):
    def key(c):
        p = c.points[np.lexsort(tuple(np.round(c.points[:, ::-1].T, 6)))[0]]
        return tuple(np.round(p, 6))
    return sorted(curves, key=key)
