"""Parametrised maps from products of circles and intervals into R^n."""

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ..errors import PeriodicityViolation, UnknownIdentifier, ValidationError
from . import dual
from .dual import Dual
from .parser import (Node, Num, compile_node, parse_expression, parse_header_and_body,
                     substitute, to_text, variables)

TWO_PI = 2.0 * math.pi
PERIODICITY_TOL = 1e-9
PERIODICITY_SAMPLES = 16


@dataclass(frozen=True)
class DomainFactor:
    """One factor of a parameter domain: a circle [0, period) or an interval."""

    name: str
    kind: str
    lower: float = 0.0
    upper: float = TWO_PI

    def __post_init__(self):
        if self.kind not in ("circle", "interval"):
            raise ValidationError(f"unknown factor kind {self.kind!r}")
        if self.kind == "circle" and (self.lower != 0.0 or not self.upper > 0):
            raise ValidationError(f"circle {self.name!r} needs a positive period")
        if self.kind == "interval" and not self.lower < self.upper:
            raise ValidationError(f"interval {self.name!r} needs lower < upper")

    @classmethod
    def circle(cls, name, period=TWO_PI):
        return cls(name, "circle", 0.0, float(period))

    @classmethod
    def interval(cls, name, lower, upper):
        return cls(name, "interval", float(lower), float(upper))

    @property
    def is_circle(self):
        return self.kind == "circle"

    @property
    def period(self):
        return self.upper if self.is_circle else None

    @property
    def length(self):
        return self.upper - self.lower

    def wrap(self, x):
        if self.is_circle:
            return np.mod(x, self.upper)
        return x

    def renamed(self, name):
        return DomainFactor(name, self.kind, self.lower, self.upper)

    def to_text(self):
        if self.is_circle:
            if self.upper == TWO_PI:
                return f"{self.name}: circle"
            return f"{self.name}: circle {self.upper!r}"
        return f"{self.name}: interval {self.lower!r} {self.upper!r}"


def _wrap_arg(factor, a):
    if not factor.is_circle:
        return a
    if isinstance(a, Dual):
        return Dual(np.mod(a.val, factor.upper), a.grad)
    return np.mod(a, factor.upper)


def wrap_point(factors, u):
    u = np.array(u, dtype=float)
    for i, f in enumerate(factors):
        if f.is_circle:
            u[..., i] = np.mod(u[..., i], f.upper)
    return u


def _finish(values, args):
    """Broadcast constant components against the arguments."""
    duals = [a for a in args if isinstance(a, Dual)]
    if duals:
        ref = duals[0]
        out = []
        for v in values:
            if isinstance(v, Dual):
                out.append(v)
            else:
                val = np.broadcast_to(np.asarray(v, dtype=float), np.shape(ref.val)).copy()
                out.append(Dual(val, np.zeros((ref.nvars,) + val.shape)))
        return out
    shape = np.broadcast_shapes(*(np.shape(a) for a in args)) if args else ()
    return [np.broadcast_to(np.asarray(v, dtype=float), shape) for v in values]


class SmoothMap:
    """Common evaluation and differentiation interface.

    Subclasses provide ``name``, ``domain`` (tuple of DomainFactor), ``dim``
    and ``raw(args)`` returning ``dim`` values for unwrapped arguments.
    """

    @property
    def k(self):
        return len(self.domain)

    @property
    def names(self):
        return tuple(f.name for f in self.domain)

    def evaluate(self, args):
        """Evaluate on k scalars/arrays/duals; circle arguments are wrapped."""
        if len(args) != self.k:
            raise ValidationError(f"{self.name} expects {self.k} arguments, got {len(args)}")
        wrapped = [_wrap_arg(f, a) for f, a in zip(self.domain, args)]
        return _finish(self.raw(wrapped), wrapped)

    def __call__(self, *args):
        return self.evaluate(args)

    def eval(self, u):
        u = np.asarray(u, dtype=float).reshape(self.k)
        return np.array([float(v) for v in self.evaluate(list(u))])

    def eval_batch(self, U):
        U = np.asarray(U, dtype=float)
        vals = self.evaluate([U[:, i] for i in range(self.k)])
        return np.stack(vals, axis=-1)

    def jacobian(self, u):
        u = np.asarray(u, dtype=float).reshape(self.k)
        out = self.evaluate(dual.seed(list(u)))
        return np.array([d.grad for d in out])

    def jacobian_batch(self, U):
        U = np.asarray(U, dtype=float)
        out = self.evaluate(dual.seed([U[:, i] for i in range(self.k)]))
        # grads are (k, N) -> (N, n, k)
        return np.stack([d.grad.T for d in out], axis=1)

    def sample_points(self, per_factor, rng=None):
        """Deterministic interior sample grid (or random points when rng)."""
        if rng is not None:
            cols = [rng.uniform(f.lower, f.upper, per_factor) for f in self.domain]
            return np.stack(cols, axis=-1)
        axes = []
        for f in self.domain:
            if f.is_circle:
                axes.append(f.upper * (np.arange(per_factor) + 0.5) / per_factor)
            else:
                axes.append(np.linspace(f.lower, f.upper, per_factor))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True, eq=True)
class ParamMap(SmoothMap):
    """A closed-form map given by one expression per target coordinate."""

    name: str
    domain: Tuple[DomainFactor, ...]
    dim: int
    components: Tuple[Node, ...]
    _fns: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))
        object.__setattr__(self, "components", tuple(self.components))
        if self.dim < 1 or len(self.components) != self.dim:
            raise ValidationError(
                f"map {self.name!r} declares dimension {self.dim} but has "
                f"{len(self.components)} components")
        names = [f.name for f in self.domain]
        if len(set(names)) != len(names):
            raise ValidationError(f"map {self.name!r} repeats a parameter name")
        for c in self.components:
            extra = variables(c) - set(names)
            if extra:
                raise UnknownIdentifier(sorted(extra)[0])
        index = {n: i for i, n in enumerate(names)}
        object.__setattr__(self, "_fns", tuple(compile_node(c, index) for c in self.components))
        self._check_periodicity()

    def raw(self, args):
        return [f(args) for f in self._fns]

    def _check_periodicity(self):
        base = []
        for j, f in enumerate(self.domain):
            frac = (0.5 + 0.618 * (j + 1)) % 1.0
            base.append(f.lower + frac * (f.upper - f.lower))
        for i, f in enumerate(self.domain):
            if not f.is_circle:
                continue
            cols = [np.full(PERIODICITY_SAMPLES, b) for b in base]
            u = f.upper * (np.arange(PERIODICITY_SAMPLES) + 0.37) / PERIODICITY_SAMPLES
            cols[i] = u
            shifted = list(cols)
            shifted[i] = u + f.upper
            a = _finish(self.raw(cols), cols)
            b = _finish(self.raw(shifted), shifted)
            dev = max(float(np.max(np.abs(x - y) / np.maximum(1.0, np.abs(x))))
                      for x, y in zip(a, b))
            if dev > PERIODICITY_TOL:
                raise PeriodicityViolation(self.name, f.name, dev)

    # -- text ----------------------------------------------------------------
    def to_text(self):
        params = ", ".join(f.to_text() for f in self.domain)
        body = ", ".join(to_text(c) for c in self.components)
        return f"{self.name}({params}) -> {self.dim} = ({body})"

    def __str__(self):
        return self.to_text()

    # -- derived maps --------------------------------------------------------
    def with_name(self, name):
        return ParamMap(name, self.domain, self.dim, self.components)

    def restrict(self, name, value, new_name=None):
        """Fix one parameter at a constant and drop its factor."""
        keep = tuple(f for f in self.domain if f.name != name)
        if len(keep) == len(self.domain):
            raise UnknownIdentifier(name)
        comps = tuple(substitute(c, {name: Num(float(value))}) for c in self.components)
        return ParamMap(new_name or self.name, keep, self.dim, comps)

    def substitute(self, name, replacement, new_name=None):
        """Precompose: replace parameter ``name`` by an expression in the
        existing parameters (text or AST)."""
        if name not in self.names:
            raise UnknownIdentifier(name)
        if isinstance(replacement, str):
            replacement = parse_expression(replacement, self.names)
        comps = tuple(substitute(c, {name: replacement}) for c in self.components)
        return ParamMap(new_name or self.name, self.domain, self.dim, comps)

    def rename_params(self, mapping, new_name=None):
        from .parser import Var
        dom = tuple(f.renamed(mapping.get(f.name, f.name)) for f in self.domain)
        comps = tuple(substitute(c, {a: Var(b) for a, b in mapping.items()})
                      for c in self.components)
        return ParamMap(new_name or self.name, dom, self.dim, comps)

    def reorder(self, names, new_name=None):
        by_name = {f.name: f for f in self.domain}
        if sorted(names) != sorted(by_name):
            raise ValidationError(f"reorder of {self.name!r} must list every parameter once")
        return ParamMap(new_name or self.name, tuple(by_name[n] for n in names),
                        self.dim, self.components)

    def select(self, indices, new_name=None):
        comps = tuple(self.components[i] for i in indices)
        return ParamMap(new_name or self.name, self.domain, len(comps), comps)

    def extend(self, factor, new_name=None):
        """Same formulas on a domain with one more (unused) trailing factor."""
        return ParamMap(new_name or self.name, self.domain + (factor,), self.dim, self.components)


class CallableMap(SmoothMap):
    """A map backed by a Python function of the (wrapped) arguments.

    Used for constructions the DSL cannot express, such as the piecewise
    separation homotopy.  ``fn`` must accept floats, arrays and duals.
    """

    def __init__(self, name, domain, dim, fn):
        self.name = name
        self.domain = tuple(domain)
        self.dim = dim
        self._fn = fn

    def raw(self, args):
        out = list(self._fn(args))
        if len(out) != self.dim:
            raise ValidationError(f"{self.name} returned {len(out)} components, expected {self.dim}")
        return out

    def to_text(self):
        params = ", ".join(f.to_text() for f in self.domain)
        return f"{self.name}({params}) -> {self.dim} = <computed>"

    def __repr__(self):
        return f"CallableMap({self.to_text()!r})"


def parse_map(text):
    """Parse one DSL line into a :class:`ParamMap`."""
    name, params, dim, dim_offset, comps = parse_header_and_body(text)
    domain = []
    for tok, spec in params:
        if spec[0] == "circle":
            domain.append(DomainFactor.circle(tok.text, spec[1]))
        else:
            domain.append(DomainFactor.interval(tok.text, spec[1], spec[2]))
    if dim < 1 or len(comps) != dim:
        from ..errors import DSLSyntaxError
        raise DSLSyntaxError(f"declared dimension {dim} but {len(comps)} components given",
                             dim_offset, f"{dim} components")
    return ParamMap(name, tuple(domain), dim, tuple(comps))


def parse_maps(text):
    """Parse a block with one map per line ('#' starts a comment)."""
    maps = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = parse_map(line)
        if m.name in maps:
            raise ValidationError(f"map {m.name!r} defined twice")
        maps[m.name] = m
    return maps


def eval_map(m, u):
    return m.eval(u)


def jacobian(m, u):
    return m.jacobian(u)


def min_image_distance(a, b, per_factor=96):
    """Sampled minimum distance between the images of two maps."""
    pa = a.eval_batch(a.sample_points(per_factor))
    pb = b.eval_batch(b.sample_points(per_factor))
    best = np.inf
    for chunk in np.array_split(pa, max(1, len(pa) // 512)):
        d = np.linalg.norm(chunk[:, None, :] - pb[None, :, :], axis=-1)
        best = min(best, float(d.min()))
    return best
