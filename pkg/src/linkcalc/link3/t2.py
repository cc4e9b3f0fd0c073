"""Quadratic-stage data: tuples (f, F, H) and one-parameter families of them."""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ..errors import DimensionError, NotALinkMap, ValidationError
from ..expr import CallableMap, ParamMap, SmoothMap
from ..link2 import DISJOINT_DELTA, fix_factor, sample_min_distance

PAIRS = ((0, 1), (1, 2), (2, 0))
TRIPLES = ((0, 1, 2), (1, 2, 0), (2, 0, 1))
AGREE_TOL = 1e-9


def dimension_audit(p, n):
    """Check p1 + p2 + p3 + 2 - 2n + 1 = 0 (zero-dimensional pieces over a
    one-parameter family).  Returns the piece dimension."""
    dim = sum(p) + 2 - 2 * n + 1
    if dim != 0:
        raise DimensionError(
            f"obstruction pieces over a one-parameter family have dimension "
            f"p1 + p2 + p3 + 2 - 2n + 1 = {dim} for p = {tuple(p)}, n = {n}; "
            "only the zero-dimensional case is supported")
    return dim


def pair_distance(h, n):
    """Sampled min over the domain of |p1 H - p2 H|."""
    U = h.sample_points(12 if h.k > 3 else 24)
    V = h.eval_batch(U)
    return float(np.min(np.linalg.norm(V[:, :n] - V[:, n:], axis=1)))


def _max_dev(a, b, U_a, U_b=None):
    U_b = U_a if U_b is None else U_b
    return float(np.max(np.abs(a.eval_batch(U_a) - b.eval_batch(U_b))))


def swap_halves(h, n, name=None):
    """H_ji(x_j, x_i, s, ...) from H_ij(x_i, x_j, s, ...)."""
    names = list(h.names)
    order = [names[1], names[0]] + names[2:]
    outs = list(range(n, 2 * n)) + list(range(n))
    if isinstance(h, ParamMap):
        return h.reorder(order).select(outs, new_name=name or f"{h.name}~")
    dom = (h.domain[1], h.domain[0]) + tuple(h.domain[2:])

    def fn(args):
        v = h.evaluate([args[1], args[0]] + list(args[2:]))
        return [v[i] for i in outs]
    return CallableMap(name or f"{h.name}~", dom, 2 * n, fn)


@dataclass
class T2Point:
    """Components f_i, diagonal-avoiding pair maps F_ij and homotopies H_ij
    with H_ij(., ., 0) = f_i x f_j and H_ij(., ., 1) = F_ij."""

    f: Tuple[SmoothMap, SmoothMap, SmoothMap]
    F: Tuple[SmoothMap, SmoothMap, SmoothMap]
    H: Tuple[SmoothMap, SmoothMap, SmoothMap]
    delta: float = DISJOINT_DELTA

    def __post_init__(self):
        n = self.f[0].dim
        if any(m.dim != n for m in self.f):
            raise DimensionError("components must share the target dimension")
        for (i, j), F, H in zip(PAIRS, self.F, self.H):
            if F.dim != 2 * n or H.dim != 2 * n:
                raise DimensionError(f"{H.name}/{F.name} must map into R^{n} x R^{n}")
            H0 = fix_factor(H, H.k - 1, 0.0)
            H1 = fix_factor(H, H.k - 1, 1.0)
            U = H0.sample_points(16)
            fi = self.f[i].eval_batch(U[:, :self.f[i].k])
            fj = self.f[j].eval_batch(U[:, self.f[i].k:])
            dev0 = float(np.max(np.abs(H0.eval_batch(U) - np.hstack([fi, fj]))))
            if dev0 > AGREE_TOL:
                raise ValidationError(f"{H.name}(.,.,0) differs from f_{i + 1} x f_{j + 1} "
                                      f"by {dev0:.3g}")
            dev1 = _max_dev(H1, F, U)
            if dev1 > AGREE_TOL:
                raise ValidationError(f"{H.name}(.,.,1) differs from {F.name} by {dev1:.3g}")
            gap = pair_distance(F, n)
            if gap <= self.delta:
                raise NotALinkMap(f"{F.name} comes within {gap:.3g} of the diagonal")


@dataclass
class T2Path:
    """A family over u of (f, F, H).

    ``components[i]`` maps (x_i, u) to R^n and ``H[k]`` maps
    (x_h, x_i, s, u) to R^n x R^n for the pairs (1,2), (2,3), (3,1).  The
    u = 1 end must be a genuine link map: H constant in s there and the
    component images pairwise disjoint.
    """

    components: Tuple[SmoothMap, SmoothMap, SmoothMap]
    H: Tuple[SmoothMap, SmoothMap, SmoothMap]
    oriented: Tuple[bool, bool, bool] = (True, True, True)
    name: str = ""
    delta: float = DISJOINT_DELTA
    labels: Tuple[str, str, str] = ("1", "2", "3")
    checks: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.components = tuple(self.components)
        self.H = tuple(self.H)
        if len(self.components) != 3 or len(self.H) != 3:
            raise ValidationError("a T2 path needs three components and three homotopies")
        n = self.n
        for c in self.components:
            if c.dim != n:
                raise DimensionError("components must share the target dimension")
            last = c.domain[-1]
            if last.is_circle:
                raise ValidationError(f"component {c.name!r} needs a final family factor")
        dimension_audit(self.p, n)
        for (i, j), h in zip(PAIRS, self.H):
            want = self.p[i] + self.p[j] + 2
            if h.dim != 2 * n or h.k != want:
                raise DimensionError(
                    f"{h.name} must map a {want}-dimensional domain into R^{2 * n}, "
                    f"got {h.k} -> {h.dim}")
            s_f, u_f = h.domain[-2], h.domain[-1]
            if s_f.is_circle or u_f.is_circle:
                raise ValidationError(f"{h.name}: last two factors must be intervals (s, u)")
        self.checks = self._validate()

    @property
    def n(self):
        return self.components[0].dim

    @property
    def p(self):
        return tuple(c.k - 1 for c in self.components)

    @property
    def ring(self):
        return "Z" if all(self.oriented) else "Z/2"

    def u_factor(self):
        return self.components[0].domain[-1]

    def component_at(self, i, u):
        c = self.components[i]
        return fix_factor(c, c.k - 1, u, f"{c.name}@u={u:g}")

    def _validate(self, per_u=5):
        n = self.n
        uf = self.u_factor()
        us = np.linspace(uf.lower, uf.upper, per_u)
        worst0 = 0.0
        worst_gap = np.inf
        for (i, j), h in zip(PAIRS, self.H):
            ci, cj = self.components[i], self.components[j]
            s_f = h.domain[-2]
            for u in us:
                hu = fix_factor(h, h.k - 1, u)
                h0 = fix_factor(hu, hu.k - 1, s_f.lower)
                U = h0.sample_points(16)
                pi, pj = self.p[i], self.p[j]
                cu = np.full((len(U), 1), u)
                want = np.hstack([ci.eval_batch(np.hstack([U[:, :pi], cu])),
                                  cj.eval_batch(np.hstack([U[:, pi:pi + pj], cu]))])
                worst0 = max(worst0, float(np.max(np.abs(h0.eval_batch(U) - want))))
                h1 = fix_factor(hu, hu.k - 1, s_f.upper)
                worst_gap = min(worst_gap, pair_distance(h1, n))
        if worst0 > AGREE_TOL:
            raise ValidationError(f"H(., ., s=0, u) differs from f_i x f_j by {worst0:.3g}")
        if worst_gap <= self.delta:
            raise NotALinkMap(f"F = H(., ., s=1, u) comes within {worst_gap:.3g} of the diagonal")
        # u = 1 end: constant in s and a genuine link map
        worst_s = 0.0
        for h in self.H:
            h1 = fix_factor(h, h.k - 1, uf.upper)
            U = h1.sample_points(12)
            V = h1.eval_batch(U)
            U0 = U.copy()
            U0[:, -1] = h.domain[-2].lower
            worst_s = max(worst_s, float(np.max(np.abs(V - h1.eval_batch(U0)))))
        if worst_s > AGREE_TOL:
            raise ValidationError(f"at u = {uf.upper:g} the homotopies still depend on s "
                                  f"(deviation {worst_s:.3g})")
        ends = [self.component_at(i, uf.upper) for i in range(3)]
        end_gap = min(sample_min_distance(ends[i], ends[j], 96) for i, j in PAIRS)
        if end_gap <= self.delta:
            raise NotALinkMap(f"the u = {uf.upper:g} end is not a link map "
                              f"(images within {end_gap:.3g})")
        return {"base_agreement": worst0, "F_diagonal_gap": worst_gap,
                "end_s_dependence": worst_s, "end_min_distance": end_gap}

    def at(self, u):
        """The T2Point at family parameter ``u``."""
        f = tuple(self.component_at(i, u) for i in range(3))
        H = tuple(fix_factor(h, h.k - 1, u, f"{h.name}@u={u:g}") for h in self.H)
        F = tuple(fix_factor(h, h.k - 1, h.domain[-2].upper, f"F{h.name}") for h in H)
        return T2Point(f, F, H, self.delta)

    def pair_map(self, h, i):
        """H_hi, swapping halves when only H_ih is stored."""
        if (h, i) in PAIRS:
            return self.H[PAIRS.index((h, i))]
        if (i, h) in PAIRS:
            return swap_halves(self.H[PAIRS.index((i, h))], self.n)
        raise ValidationError(f"no homotopy for pair ({h + 1}, {i + 1})")

    def relabel(self, perm):
        """New path whose component k is old component perm[k]."""
        perm = tuple(int(q) for q in perm)
        if sorted(perm) != [0, 1, 2]:
            raise ValidationError("relabeling needs a permutation of (0, 1, 2)")
        comps = tuple(self.components[q] for q in perm)
        H = tuple(self.pair_map(perm[a], perm[b]) for a, b in PAIRS)
        return T2Path(comps, H, tuple(self.oriented[q] for q in perm),
                      f"{self.name}[{''.join(str(q + 1) for q in perm)}]", self.delta,
                      tuple(self.labels[q] for q in perm))
