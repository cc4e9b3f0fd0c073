"""Obstruction pieces X and W over a one-parameter family and their assembly.

Unknowns are ordered (x_1, x_2, x_3, s, t, u).  For a triple (h, i, j):

* X1: f_j(x_j) = p1 H_hi(s) and H_hi(t) on the diagonal, with s <= t;
* X2: H_hi(s) on the diagonal and p2 H_hi(t) = f_j(x_j), with t <= s;
* W:  H_hi(s) and H_ij(t) both on the diagonal, (s, t) in the square.

Seeding never grids the full six-dimensional domain.  The diagonal
condition on one homotopy cuts out a curve (traced by continuation), and
the remaining three equations are scanned on (curve sample, fraction,
x_j).  W seeds come from near-crossings of two such curves in the shared
(x_i, u) coordinates.  Every seed is then polished by Newton on the full
square system.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..errors import (BoundaryProximity, LinkCalcError, ResolutionUnstable, ValidationError)
from ..expr import DomainFactor
from ..solve import SolverConfig, ZeroProblem, trace_zeros_1d
from ..solve.zeros import classify, deduplicate, newton_batch, slab_candidates
from .t2 import PAIRS, TRIPLES
from .whitney import diagonal_problem

S_IDX, T_IDX, U_IDX = 3, 4, 5
MAX_W_SEEDS = 20000
VERDICT_OBSTRUCTED = "not link-homotopic to the unlink along this path's endpoints"
VERDICT_CLEAR = "unobstructed"


def _eval_component(fj, xj, u):
    return fj.evaluate([xj, u] if fj.k == 2 else [xj])


@dataclass
class ObstructionPiece:
    kind: str                     # "X1", "X2" or "W"
    triple: Tuple[int, int, int]  # 1-based (h, i, j)
    domain: str
    labels: Tuple[str, ...]
    points: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    maps: tuple = field(default=(), repr=False, compare=False)

    @property
    def tag(self):
        h, i, j = self.triple
        if self.kind == "W":
            return f"W_{h}{i}{j}"
        return f"X_{self.kind[1]},({h}{i}){j}"

    @property
    def count(self):
        return len(self.points)

    @property
    def signed(self):
        return int(sum(p.sign for p in self.points))

    def to_dict(self):
        return {
            "tag": self.tag,
            "kind": self.kind,
            "triple": list(self.triple),
            "domain": self.domain,
            "labels": list(self.labels),
            "count": self.count,
            "signed": self.signed,
            "points": [p.to_dict() for p in self.points],
            "diagnostics": self.diagnostics,
        }


@dataclass
class ObstructionReport:
    pieces: List[ObstructionPiece]
    ring: str
    diagnostics: dict = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def total(self):
        return sum(p.count for p in self.pieces)

    @property
    def mod2_total(self):
        return self.total % 2

    @property
    def signed_total(self):
        if self.ring != "Z":
            return None
        return sum(p.signed for p in self.pieces)

    @property
    def verdict(self):
        return VERDICT_OBSTRUCTED if self.mod2_total else VERDICT_CLEAR

    def piece(self, tag):
        for p in self.pieces:
            if p.tag == tag:
                return p
        raise KeyError(tag)

    def to_dict(self):
        return {
            "ring": self.ring,
            "total_points": self.total,
            "mod2_total": self.mod2_total,
            "signed_total": self.signed_total,
            "verdict": self.verdict,
            "pieces": [p.to_dict() for p in self.pieces],
            "diagnostics": self.diagnostics,
            "notes": list(self.notes),
        }


# -- systems -------------------------------------------------------------------

def x_system(H, fj, a, pos):
    """Residual function of the X_a piece; ``pos`` gives the slots of
    (x_h, x_i, x_j) in the unknown vector."""
    n = H.dim // 2
    ph, pi, pj = pos

    def F(z):
        xh, xi, xj, s, t, u = z[ph], z[pi], z[pj], z[S_IDX], z[T_IDX], z[U_IDX]
        A = H.evaluate([xh, xi, s, u])
        B = H.evaluate([xh, xi, t, u])
        c = _eval_component(fj, xj, u)
        if a == 1:
            return [c[k] - A[k] for k in range(n)] + [B[k] - B[n + k] for k in range(n)]
        return [A[k] - A[n + k] for k in range(n)] + [B[n + k] - c[k] for k in range(n)]
    return F


def w_system(Hhi, Hij, pos):
    n = Hhi.dim // 2
    ph, pi, pj = pos

    def F(z):
        A = Hhi.evaluate([z[ph], z[pi], z[S_IDX], z[U_IDX]])
        B = Hij.evaluate([z[pi], z[pj], z[T_IDX], z[U_IDX]])
        return [A[k] - A[n + k] for k in range(n)] + [B[k] - B[n + k] for k in range(n)]
    return F


def _strata(kind):
    if kind == "W":
        return {}
    return {"s=t": lambda U: np.abs(U[:, S_IDX] - U[:, T_IDX]) / np.sqrt(2.0)}


def _curve_rows(curve):
    P = curve.points
    if curve.closed and len(P) > 1:
        P = P[:-1]
    return P


def _x_seeds(H, fj, a, curve, res, xj_factor):
    """Seeds from a scan over (curve sample, fraction lambda, x_j)."""
    n = H.dim // 2
    P = _curve_rows(curve)
    N = len(P)
    lam = np.linspace(0.0, 1.0, res + 1)
    xj = xj_factor.upper * np.arange(res) / res

    def values_at(rows):
        C, L, X = np.meshgrid(rows, lam, xj, indexing="ij")
        C, L, X = C.ravel(), L.ravel(), X.ravel()
        xh, xi, tau, u = P[C, 0], P[C, 1], P[C, 2], P[C, 3]
        V = H.eval_batch(np.column_stack([xh, xi, L * tau, u]))
        comp = np.stack(_eval_component(fj, X, u), axis=-1)
        vals = comp - V[:, :n] if a == 1 else V[:, n:] - comp
        return vals.reshape(len(rows), res + 1, res, n)

    steps = np.linalg.norm(np.diff(curve.unwrapped(), axis=0), axis=1)
    h_c = float(np.mean(steps)) if len(steps) else 1.0
    cells = slab_candidates(values_at, N, [curve.closed, False, True],
                            np.array([h_c, 1.0 / res, xj_factor.upper / res]),
                            (res + 1) * res)
    if len(cells) == 0:
        return np.empty((0, 6)), np.empty((0, 3))
    # cell centres: midpoint of the two curve samples, lambda and x_j
    c0 = cells[:, 0]
    c1 = (c0 + 1) % N if curve.closed else np.minimum(c0 + 1, N - 1)
    U = curve.unwrapped()
    U = U[:-1] if curve.closed and len(U) > 1 else U
    mid = 0.5 * (U[c0] + U[c1])
    lam_c = (cells[:, 1] + 0.5) / res
    xj_c = (cells[:, 2] + 0.5) * xj_factor.upper / res
    return mid, np.column_stack([lam_c, xj_c, np.zeros(len(cells))])


def _assemble_x_seed(mid, extra, a, pos):
    ph, pi, pj = pos
    Z = np.zeros((len(mid), 6))
    Z[:, ph] = mid[:, 0]
    Z[:, pi] = mid[:, 1]
    Z[:, pj] = extra[:, 1]
    Z[:, U_IDX] = mid[:, 3]
    if a == 1:
        Z[:, T_IDX] = mid[:, 2]
        Z[:, S_IDX] = extra[:, 0] * mid[:, 2]
    else:
        Z[:, S_IDX] = mid[:, 2]
        Z[:, T_IDX] = extra[:, 0] * mid[:, 2]
    return Z


def _in_region(kind, Z, tol):
    if kind == "X1":
        return Z[:, S_IDX] <= Z[:, T_IDX] + tol
    if kind == "X2":
        return Z[:, T_IDX] <= Z[:, S_IDX] + tol
    return np.ones(len(Z), dtype=bool)


def _finish(problem, kind, seeds, name):
    """Newton, region filter, dedup, classification and boundary check."""
    if len(seeds) == 0:
        return [], {"seeds": 0}
    X, res, ok = newton_batch(problem, seeds)
    keep = ok & _in_region(kind, X, problem.config.boundary_tol)
    X, res = deduplicate(problem, X[keep], res[keep])
    points = [classify(problem, x, r) for x, r in zip(X, res)]
    points.sort(key=lambda p: tuple(round(c, 9) for c in p.coords))
    for p in points:
        if p.flags:
            raise BoundaryProximity(
                f"{name}: zero at {p.coords} lies within {problem.config.boundary_tol:g} of "
                f"the stratum {', '.join(p.flags)}; the family is not generic there",
                location=p.coords)
    return points, {"seeds": int(len(seeds)), "converged": int(np.sum(ok))}


def _stable(solve_at, config, name):
    """Run ``solve_at(res)`` at the configured grid and at doubled grids
    until two consecutive counts agree."""
    res = config.grid
    prev, diag = solve_at(res)
    for _ in range(config.max_depth):
        res *= 2
        cur, diag2 = solve_at(res)
        if len(cur) == len(prev):
            diag2["resolutions"] = [res // 2, res]
            return cur, diag2
        prev = cur
    raise ResolutionUnstable(f"{name}: point count still changing at grid {res}")


def solve_x_piece(H, fj, a, factors, pos, config, name, curves=None):
    """Zeros of the X_a system for homotopy ``H`` and component ``fj``."""
    kind = f"X{a}"
    problem = ZeroProblem(x_system(H, fj, a, pos), factors, H.dim, config,
                          strata=_strata(kind), name=name)
    if curves is None:
        curves = trace_zeros_1d(diagonal_problem(H, config))
    if not curves:
        return [], {"whitney_curves": 0, "seeds": 0}
    xj_factor = factors[pos[2]]

    def solve_at(res):
        seeds = []
        for c in curves:
            mid, extra = _x_seeds(H, fj, a, c, res, xj_factor)
            if len(mid):
                seeds.append(_assemble_x_seed(mid, extra, a, pos))
        seeds = np.vstack(seeds) if seeds else np.empty((0, 6))
        return _finish(problem, kind, seeds, name)

    points, diag = _stable(solve_at, config, name)
    diag["whitney_curves"] = len(curves)
    return points, diag


def _w_seeds(c1, c2, pos, radius, xi_period):
    P1 = c1.points   # (x_h, x_i, s, u)
    P2 = c2.points   # (x_i, x_j, t, u)
    dxi = P1[:, None, 1] - P2[None, :, 0]
    if xi_period:
        dxi = np.mod(dxi + xi_period / 2, xi_period) - xi_period / 2
    du = P1[:, None, 3] - P2[None, :, 3]
    close = np.argwhere(np.hypot(dxi, du) < radius)
    if len(close) > MAX_W_SEEDS:
        d = np.hypot(dxi, du)[close[:, 0], close[:, 1]]
        close = close[np.argsort(d, kind="stable")[:MAX_W_SEEDS]]
    ph, pi, pj = pos
    Z = np.zeros((len(close), 6))
    a, b = P1[close[:, 0]], P2[close[:, 1]]
    Z[:, ph] = a[:, 0]
    Z[:, pi] = a[:, 1]
    Z[:, pj] = b[:, 1]
    Z[:, S_IDX] = a[:, 2]
    Z[:, T_IDX] = b[:, 2]
    Z[:, U_IDX] = 0.5 * (a[:, 3] + b[:, 3])
    return Z


def solve_w_piece(Hhi, Hij, factors, pos, config, name, curves_hi=None, curves_ij=None):
    problem = ZeroProblem(w_system(Hhi, Hij, pos), factors, Hhi.dim, config,
                          strata=_strata("W"), name=name)
    if curves_hi is None:
        curves_hi = trace_zeros_1d(diagonal_problem(Hhi, config))
    if curves_ij is None:
        curves_ij = trace_zeros_1d(diagonal_problem(Hij, config))
    if not curves_hi or not curves_ij:
        return [], {"whitney_curves": [len(curves_hi), len(curves_ij)], "seeds": 0}
    xi = factors[pos[1]]
    period = xi.upper if xi.is_circle else 0.0

    def solve_at(res):
        radius = 4.0 * config.step_max * max(1.0, 64.0 / res)
        seeds = [_w_seeds(a, b, pos, radius, period) for a in curves_hi for b in curves_ij]
        seeds = np.vstack(seeds) if seeds else np.empty((0, 6))
        return _finish(problem, "W", seeds, name)

    points, diag = _stable(solve_at, config, name)
    diag["whitney_curves"] = [len(curves_hi), len(curves_ij)]
    return points, diag


# -- pieces over a T2 path ------------------------------------------------------

def path_factors(path):
    comps = path.components
    for c in comps:
        if c.k != 2 or not c.domain[0].is_circle:
            raise ValidationError("obstruction pieces are implemented for three circles "
                                  "(each component parametrised by one circle and u)")
    s_f = path.H[0].domain[-2]
    u_f = path.u_factor()
    return (comps[0].domain[0].renamed("x1"), comps[1].domain[0].renamed("x2"),
            comps[2].domain[0].renamed("x3"), s_f.renamed("s"),
            DomainFactor.interval("t", s_f.lower, s_f.upper), u_f.renamed("u"))


def _labels(factors):
    return tuple(f.name for f in factors)


def _domain_text(kind):
    base = "P1 x P2 x P3 x "
    if kind == "X1":
        return base + "T1{0<=s<=t<=1} x [0,1]_u"
    if kind == "X2":
        return base + "T2{0<=t<=s<=1} x [0,1]_u"
    return base + "[0,1]_s x [0,1]_t x [0,1]_u"


class _CurveCache:
    def __init__(self, path, config):
        self.path = path
        self.config = config
        self.store = {}

    def __call__(self, h, i):
        key = (h, i)
        if key not in self.store:
            self.store[key] = trace_zeros_1d(
                diagonal_problem(self.path.pair_map(h, i), self.config,
                                 name=f"Whitney circle ({h + 1}{i + 1})"))
        return self.store[key]


def disk_component_intersections(path, a, triple, config=None, cache=None):
    """The piece X_{a,(hi)j} (``triple`` is 0-based)."""
    config = config or SolverConfig()
    cache = cache or _CurveCache(path, config)
    h, i, j = triple
    factors = path_factors(path)
    H = path.pair_map(h, i)
    piece = ObstructionPiece(f"X{a}", (h + 1, i + 1, j + 1), _domain_text(f"X{a}"),
                             _labels(factors))
    name = f"{path.name} {piece.tag}".strip()
    piece.points, piece.diagnostics = solve_x_piece(
        H, path.components[j], a, factors, (h, i, j), config, name, curves=cache(h, i))
    piece.maps = (H, None, path.components, (h, i, j))
    return piece


def circle_circle_intersections(path, triple, config=None, cache=None):
    """The piece W_hij (``triple`` is 0-based)."""
    config = config or SolverConfig()
    cache = cache or _CurveCache(path, config)
    h, i, j = triple
    factors = path_factors(path)
    Hhi = path.pair_map(h, i)
    Hij = path.pair_map(i, j)
    piece = ObstructionPiece("W", (h + 1, i + 1, j + 1), _domain_text("W"), _labels(factors))
    name = f"{path.name} {piece.tag}".strip()
    piece.points, piece.diagnostics = solve_w_piece(
        Hhi, Hij, factors, (h, i, j), config, name,
        curves_hi=cache(h, i), curves_ij=cache(i, j))
    piece.maps = (Hhi, Hij, path.components, (h, i, j))
    return piece


def assemble_obstruction(path, config=None):
    """All six X pieces and three W pieces, in canonical order."""
    config = config or SolverConfig()
    cache = _CurveCache(path, config)
    pieces = []
    plan = ([("X", 1, t) for t in TRIPLES] + [("X", 2, t) for t in TRIPLES]
            + [("W", 0, t) for t in TRIPLES])
    for kind, a, t in plan:
        try:
            if kind == "X":
                pieces.append(disk_component_intersections(path, a, t, config, cache))
            else:
                pieces.append(circle_circle_intersections(path, t, config, cache))
        except LinkCalcError as exc:
            partial = ObstructionReport(pieces, path.ring, {"failed_at": (kind, a, t)})
            exc.partial_report = partial
            raise
    diag = {
        "path": path.name,
        "config": config.to_dict(),
        "whitney_curves": {f"{h + 1}{i + 1}": len(c) for (h, i), c in sorted(cache.store.items())},
        "path_checks": path.checks,
    }
    return ObstructionReport(pieces, path.ring, diag)


# -- witness paths ---------------------------------------------------------------

def _half(H, n, which, xa, xb, times, u):
    U = np.column_stack([np.full_like(times, xa), np.full_like(times, xb), times,
                         np.full_like(times, u)])
    V = H.eval_batch(U)
    return V[:, :n] if which == 1 else V[:, n:]


def witness_paths(piece, point, samples=65):
    """The three paths omega_h, omega_i, omega_j (each (samples, n)) that a
    piece point carries, evaluated at the point's family parameter u.

    All three start at the component images f_h(x_h), f_i(x_i), f_j(x_j)
    and end at a common point."""
    H, H2, comps, (h, i, j) = piece.maps
    n = H.dim // 2
    z = np.asarray(point.coords)
    xh, xi, xj = z[h], z[i], z[j]
    s, t, u = z[S_IDX], z[T_IDX], z[U_IDX]
    r = np.linspace(0.0, 1.0, samples)
    lo = r <= 0.5
    fj = np.array([float(v) for v in _eval_component(comps[j], xj, u)])
    if piece.kind == "W":
        wh = np.where(lo[:, None], _half(H, n, 1, xh, xi, 2 * r * s, u),
                      _half(H, n, 2, xh, xi, 2 * (1 - r) * s, u))
        fi = _half(H, n, 2, xh, xi, np.zeros(1), u)[0]
        wi = np.tile(fi, (samples, 1))
        wj = np.where(lo[:, None], _half(H2, n, 2, xi, xj, 2 * r * t, u),
                      _half(H2, n, 1, xi, xj, 2 * (1 - r) * t, u))
    elif piece.kind == "X1":
        wh = _half(H, n, 1, xh, xi, r * s, u)
        wi = np.where(lo[:, None], _half(H, n, 2, xh, xi, 2 * r * t, u),
                      _half(H, n, 1, xh, xi, 2 * (1 - r) * t + 2 * (r - 0.5) * s, u))
        wj = np.tile(fj, (samples, 1))
    else:
        wh = np.where(lo[:, None], _half(H, n, 1, xh, xi, 2 * r * s, u),
                      _half(H, n, 2, xh, xi, 2 * (1 - r) * s + 2 * (r - 0.5) * t, u))
        wi = _half(H, n, 2, xh, xi, r * t, u)
        wj = np.tile(fj, (samples, 1))
    return {h: wh, i: wi, j: wj}


def witness_errors(piece, point, samples=65):
    """Start-point errors against the component maps and the spread of the
    three end points."""
    paths = witness_paths(piece, point, samples)
    comps = piece.maps[2]
    z = np.asarray(point.coords)
    u = z[U_IDX]
    start = 0.0
    for k, w in paths.items():
        fk = np.array([float(v) for v in _eval_component(comps[k], z[k], u)])
        start = max(start, float(np.linalg.norm(w[0] - fk)))
    ends = np.array([w[-1] for w in paths.values()])
    meet = float(np.max(np.linalg.norm(ends - ends[0], axis=1)))
    return {"start": start, "meet": meet}


__all__ = [
    "ObstructionPiece", "ObstructionReport", "assemble_obstruction",
    "disk_component_intersections", "circle_circle_intersections", "solve_x_piece",
    "solve_w_piece", "witness_paths", "witness_errors", "x_system", "w_system",
    "path_factors", "PAIRS", "VERDICT_OBSTRUCTED", "VERDICT_CLEAR",
]
