"""Isolated zeros of square systems: grid seeding, batched Newton,
deduplication and transversality classification."""

from itertools import combinations

import numpy as np

from ..errors import NonTransverse, ResolutionUnstable, ValidationError
from .problem import TransversePoint

MAX_GRID_POINTS = 40_000_000
SLAB_POINTS = 1_000_000     # grid nodes evaluated at once during seeding


def grid_axes(factors, res):
    """Sample axes: circles get ``res`` points on [0, P), intervals ``res + 1``."""
    axes = []
    for f in factors:
        if f.is_circle:
            axes.append(f.upper * np.arange(res) / res)
        else:
            axes.append(np.linspace(f.lower, f.upper, res + 1))
    return axes


def grid_values(problem, axes):
    shape = tuple(len(a) for a in axes)
    if int(np.prod(shape)) > MAX_GRID_POINTS:
        raise ValidationError(f"seeding grid {shape} is too large; lower the resolution")
    mesh = np.meshgrid(*axes, indexing="ij")
    cols = [m.ravel() for m in mesh]
    out = problem.func(cols)
    n = cols[0].size
    vals = np.stack([np.broadcast_to(np.asarray(v, dtype=float), (n,)) for v in out], axis=-1)
    return vals.reshape(shape + (problem.m,))


def candidate_cells(values, periodic, spacing):
    """Indices of grid cells that may contain a zero.

    ``values`` has shape ``grid_shape + (m,)``.  A cell qualifies when, for
    every component, the range of corner values widened by half its width
    plus a second-order interpolation bound contains 0.  The widening keeps
    tangential zeros (no sign change) in the candidate set.
    """
    k = values.ndim - 1
    v = values
    for a in range(k):
        if periodic[a]:
            first = np.take(v, [0], axis=a)
            v = np.concatenate([v, first], axis=a)
    # local curvature at each node from axis second differences
    curv = np.zeros(v.shape)
    for a in range(k):
        n = v.shape[a]
        if n < 3:
            continue
        d2 = np.abs(np.take(v, range(2, n), axis=a) - 2 * np.take(v, range(1, n - 1), axis=a)
                    + np.take(v, range(0, n - 2), axis=a)) / spacing[a] ** 2
        edge_lo = np.take(d2, [0], axis=a)
        edge_hi = np.take(d2, [n - 3], axis=a)
        curv = np.maximum(curv, np.concatenate([edge_lo, d2, edge_hi], axis=a))
    lo = v
    hi = v
    c = curv
    for a in range(k):
        n = lo.shape[a]
        lo = np.minimum(np.take(lo, range(n - 1), axis=a), np.take(lo, range(1, n), axis=a))
        hi = np.maximum(np.take(hi, range(n - 1), axis=a), np.take(hi, range(1, n), axis=a))
        c = np.maximum(np.take(c, range(n - 1), axis=a), np.take(c, range(1, n), axis=a))
    slack = 0.5 * (hi - lo) + c * (float(np.sum(spacing)) ** 2) / 8.0
    ok = np.all((lo - slack <= 0.0) & (hi + slack >= 0.0), axis=-1)
    return np.argwhere(ok)


def grid_spacing(factors, res):
    return np.array([(f.upper / res) if f.is_circle else (f.upper - f.lower) / res
                     for f in factors])


def slab_candidates(values_at, n0, periodic, spacing, rest_points):
    """``candidate_cells`` over a grid whose first axis has ``n0`` nodes,
    evaluated in slabs: ``values_at(idx)`` returns the node values for the
    first-axis indices ``idx`` (all other axes complete).

    Each slab carries one extra node on either side, so the curvature
    estimate at every kept corner matches a whole-grid evaluation.
    """
    ncell0 = n0 if periodic[0] else n0 - 1
    step = max(1, SLAB_POINTS // max(rest_points, 1) - 3)
    found = []
    for a in range(0, ncell0, step):
        b = min(a + step, ncell0)
        if periodic[0]:
            g0 = a - 1
            idx = np.arange(a - 1, b + 2) % n0
        else:
            g0 = max(a - 1, 0)
            idx = np.arange(g0, min(b + 1, n0 - 1) + 1)
        cells = candidate_cells(values_at(idx), [False] + list(periodic[1:]), spacing)
        g = cells[:, 0] + g0
        keep = (g >= a) & (g < b)
        cells = cells[keep]
        cells[:, 0] = g[keep] % n0
        found.append(cells)
    return np.concatenate(found) if found else np.empty((0, len(periodic)), dtype=int)


def scan_candidates(problem, res):
    """Candidate cells of the seeding grid, evaluated slab by slab so memory
    stays bounded at high resolution.  Returns ``(axes, cells, spacing)``."""
    factors = problem.factors
    axes = grid_axes(factors, res)
    spacing = grid_spacing(factors, res)
    shape = tuple(len(a) for a in axes)
    if int(np.prod(shape)) > MAX_GRID_POINTS:
        raise ValidationError(f"seeding grid {shape} is too large; lower the resolution")
    rest = int(np.prod(shape[1:])) if len(shape) > 1 else 1
    cells = slab_candidates(lambda idx: grid_values(problem, [axes[0][idx]] + list(axes[1:])),
                            shape[0], [f.is_circle for f in factors], spacing, rest)
    return axes, cells, spacing


def cell_centers(axes, cells, factors):
    centers = np.empty(cells.shape, dtype=float)
    for a, f in enumerate(factors):
        ax = axes[a]
        h = (f.upper / len(ax)) if f.is_circle else (ax[1] - ax[0])
        centers[:, a] = ax[cells[:, a]] + 0.5 * h
    return centers


def newton_batch(problem, X0, tol=None, max_iter=None, step_cap=1.0):
    """Damped Newton from many starts at once.

    Square systems use the inverse, underdetermined ones the minimum-norm
    (Moore-Penrose) step, so the same routine projects onto curves.
    Returns ``(X, residual, ok)``.
    """
    cfg = problem.config
    tol = cfg.newton_tol if tol is None else tol
    max_iter = cfg.max_newton_iter if max_iter is None else max_iter
    X = problem.wrap(np.array(X0, dtype=float).reshape(-1, problem.k))
    n = len(X)
    active = np.ones(n, dtype=bool)
    failed = np.zeros(n, dtype=bool)
    lo = np.array([f.lower for f in problem.factors])
    hi = np.array([f.upper for f in problem.factors])
    span = hi - lo
    interval = np.array([not f.is_circle for f in problem.factors])
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        F, J = problem.values_and_jacobians(X[idx])
        bad = ~np.all(np.isfinite(F), axis=1) | ~np.all(np.isfinite(J), axis=(1, 2))
        if problem.m == problem.k:
            step = np.empty_like(F)
            good = ~bad
            try:
                step[good] = -np.linalg.solve(J[good], F[good][..., None])[..., 0]
            except np.linalg.LinAlgError:
                step[good] = -(np.linalg.pinv(J[good]) @ F[good][..., None])[..., 0]
        else:
            step = -(np.linalg.pinv(J) @ F[..., None])[..., 0]
        step[bad] = 0.0
        norms = np.linalg.norm(step, axis=1)
        scale = np.where(norms > step_cap, step_cap / np.maximum(norms, 1e-300), 1.0)
        step *= scale[:, None]
        X[idx] = problem.wrap(X[idx] + step)
        out = np.any(interval & ((X[idx] < lo - 0.5 * span) | (X[idx] > hi + 0.5 * span)), axis=1)
        done = (norms <= 1e-13 * (1.0 + np.linalg.norm(X[idx], axis=1))) | bad | out
        failed[idx[bad | out]] = True
        active[idx[done]] = False
    F = problem.values(X)
    res = np.linalg.norm(F, axis=1)
    inside = np.all(~interval | ((X >= lo - 1e-12) & (X <= hi + 1e-12)), axis=1)
    X[:, interval] = np.clip(X[:, interval], lo[interval], hi[interval])
    ok = (res <= tol) & inside & ~failed & np.all(np.isfinite(X), axis=1)
    return X, res, ok


def deduplicate(problem, X, res):
    """Greedy merge of points closer than the dedup radius (smallest
    residual wins; ties broken by coordinates)."""
    if len(X) == 0:
        return X, res
    order = np.lexsort(tuple(np.round(X[:, ::-1].T, 9)) + (res,))
    kept = []
    for i in order:
        if kept:
            d = np.linalg.norm(problem.delta(X[kept], X[i]), axis=1)
            if np.min(d) < problem.config.dedup_radius:
                continue
        kept.append(i)
    kept = np.array(kept, dtype=int)
    return X[kept], res[kept]


def second_derivative_bound(problem, u, h=1e-4):
    J0 = problem.jacobian(u)
    K = 0.0
    for a in range(problem.k):
        e = np.zeros(problem.k)
        e[a] = h
        Jp = problem.jacobian(u + e)
        Jm = problem.jacobian(u - e)
        K = max(K, np.linalg.norm(Jp - Jm, 2) / (2 * h))
    return K, J0


def square_part(J):
    """Rows of J carrying its orientation.

    Square matrices are returned unchanged.  For an overdetermined J (more
    equations than unknowns, e.g. a circle cut out by redundant equations)
    the k x k minor of largest |det| is used; ties go to the first subset.
    """
    m, k = J.shape
    if m <= k:
        return J
    best, best_det = None, -1.0
    for rows in combinations(range(m), k):
        d = abs(np.linalg.det(J[list(rows)]))
        if d > best_det * (1 + 1e-12):
            best, best_det = rows, d
    return J[list(best)]


def classify(problem, u, residual):
    """Build a TransversePoint, raising NonTransverse for degenerate zeros."""
    K, J = second_derivative_bound(problem, u)
    sv = np.linalg.svd(J, compute_uv=False)
    smin = float(sv[-1])
    norm = float(sv[0]) if sv[0] > 0 else 1.0
    radius = smin / K if K > 0 else float("inf")
    coords = tuple(float(c) for c in u)
    if smin / norm < problem.config.sigma_min or radius < problem.config.min_root_radius:
        raise NonTransverse(
            f"{problem.name or 'system'}: degenerate zero at {coords} "
            f"(sigma_min={smin:.3g}, uniqueness radius={radius:.3g})", location=coords)
    return TransversePoint(
        coords=coords,
        residual=float(residual),
        jacobian=J,
        sign=1 if np.linalg.det(square_part(J)) > 0 else -1,
        sigma_min=smin,
        root_radius=float(radius),
        flags=problem.boundary_flags(u),
    )


def canonical_order(points):
    return sorted(points, key=lambda p: tuple(round(c, 9) for c in p.coords))


def polish(problem, seeds):
    """Newton from the given seeds, then dedup and classify."""
    if len(seeds) == 0:
        return []
    X, res, ok = newton_batch(problem, seeds)
    X, res = deduplicate(problem, X[ok], res[ok])
    return canonical_order(classify(problem, x, r) for x, r in zip(X, res))


def _solve_at(problem, res):
    axes, cells, _ = scan_candidates(problem, res)
    seeds = cell_centers(axes, cells, problem.factors)
    return polish(problem, seeds)


def find_zeros_0d(problem):
    """All transverse zeros of a square system, stable under grid doubling."""
    if problem.m < problem.k:
        raise ValidationError(
            f"isolated-zero mode needs at least as many equations as unknowns, got "
            f"{problem.m} equations in {problem.k} unknowns")
    res = problem.config.grid
    prev = _solve_at(problem, res)
    for _ in range(problem.config.max_depth):
        res *= 2
        cur = _solve_at(problem, res)
        if len(cur) == len(prev):
            return cur
        prev = cur
    raise ResolutionUnstable(
        f"{problem.name or 'system'}: zero count still changing at grid {res}")


def orientation_sign(point, ordering):
    """Sign of det(J) after permuting the Jacobian columns into ``ordering``."""
    J = square_part(np.asarray(point.jacobian))
    ordering = list(ordering)
    if sorted(ordering) != list(range(J.shape[1])):
        raise ValidationError("ordering must be a permutation of the factor indices")
    return 1 if np.linalg.det(J[:, ordering]) > 0 else -1


def signed_count(points):
    return int(sum(p.sign for p in points))
