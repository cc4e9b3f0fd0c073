"""Scenario files: YAML with the map definitions embedded verbatim as DSL text.

    schema: linkcalc.scenario/1
    name: hopf
    seed: 0
    solver: {grid: 64}                     # optional SolverConfig overrides
    maps: |
      f1(x: circle) -> 3 = (cos(x), sin(x), 0)
      ...
    links:          {name: {components: [f1, f2], oriented: [true, true]}}
    double_points:  {name: [mapA, mapB]}
    whitney:        {name: {map: G, fi: f3, fj: H1}}
    lifts:          {name: {link: L, components: [a, b, c], H: [H12, H23, H31]}}
    expect:         {lk: {link: {"1-2": value}}, obstruction: {lift: mod2}}

Everything referenced is resolved and dimension-checked at load time, before
any solve.
"""

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, Tuple

import yaml

from ..errors import DimensionError, ValidationError
from ..expr import parse_maps
from ..link2 import LinkPair
from ..link3 import T2Path
from ..solve import SolverConfig

SCHEMA = "linkcalc.scenario/1"
BUILTINS = ("hopf", "unlink2", "unlink3", "torus-2-4", "torus-2-6", "borromean",
            "borromean-perturbed", "tangent-pair")
TOP_KEYS = {"schema", "name", "description", "seed", "solver", "maps", "links",
            "double_points", "whitney", "lifts", "expect"}


@dataclass
class LinkDecl:
    components: Tuple[str, ...]
    oriented: Tuple[bool, ...]


@dataclass
class LiftDecl:
    link: str
    components: Tuple[str, str, str]
    H: Tuple[str, str, str]


@dataclass
class Scenario:
    name: str
    source: str
    text: str
    maps: Dict
    links: Dict[str, LinkDecl] = field(default_factory=dict)
    double_points: Dict[str, Tuple[str, str]] = field(default_factory=dict)
    whitney: Dict[str, dict] = field(default_factory=dict)
    lifts: Dict[str, LiftDecl] = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    seed: int = 0
    expect: dict = field(default_factory=dict)
    description: str = ""

    @property
    def digest(self):
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    def config(self, seed=None, resolution=None):
        cfg = SolverConfig(**self.solver).with_(seed=self.seed if seed is None else seed)
        if resolution is not None:
            if resolution < 4:
                raise ValidationError("--resolution must be at least 4")
            cfg = cfg.with_(grid=int(resolution))
        return cfg

    # -- links and pairs --------------------------------------------------------

    def pair_names(self, link):
        k = len(self.links[link].components)
        return [f"{i + 1}-{j + 1}" for i in range(k) for j in range(i + 1, k)]

    def link_pair(self, link, pair):
        decl = self._link(link)
        try:
            i, j = (int(q) - 1 for q in pair.split("-"))
        except ValueError:
            raise ValidationError(f"pair must look like '1-2', got {pair!r}") from None
        k = len(decl.components)
        if not (0 <= i < k and 0 <= j < k and i != j):
            raise ValidationError(f"link {link!r} has no pair {pair!r}")
        return LinkPair(self.maps[decl.components[i]], self.maps[decl.components[j]],
                        (decl.oriented[i], decl.oriented[j]), f"{link}:{pair}")

    def _link(self, link):
        if link not in self.links:
            raise ValidationError(f"scenario {self.name!r} declares no link {link!r}")
        return self.links[link]

    def default(self, table, requested, what):
        items = getattr(self, table)
        if requested is not None:
            if requested not in items:
                raise ValidationError(f"scenario {self.name!r} declares no {what} {requested!r}")
            return [requested]
        return sorted(items)

    def lift_path(self, name):
        decl = self.lifts[name]
        link = self._link(decl.link)
        return T2Path(tuple(self.maps[c] for c in decl.components),
                      tuple(self.maps[h] for h in decl.H),
                      tuple(link.oriented), name=name)


def _need(mapping, key, kind, where):
    if not isinstance(mapping, kind):
        raise ValidationError(f"{where}: expected {kind.__name__} for {key!r}")
    return mapping


def _names(value, where):
    if not isinstance(value, (list, tuple)) or not all(isinstance(v, str) for v in value):
        raise ValidationError(f"{where}: expected a list of map names")
    return tuple(value)


def parse_scenario(text, source="<string>"):
    """Parse and validate scenario text."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"{source}: invalid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{source}: a scenario must be a mapping")
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ValidationError(f"{source}: unknown keys {sorted(unknown)}")
    if data.get("schema", SCHEMA) != SCHEMA:
        raise ValidationError(f"{source}: unsupported schema {data.get('schema')!r}")
    if not isinstance(data.get("maps"), str):
        raise ValidationError(f"{source}: 'maps' must be a block of DSL text")
    maps = parse_maps(data["maps"])

    def known(name, where):
        if name not in maps:
            raise ValidationError(f"{where}: map {name!r} is not defined")
        return maps[name]

    solver = _need(data.get("solver") or {}, "solver", dict, source)
    bad = set(solver) - set(SolverConfig.__dataclass_fields__)
    if bad:
        raise ValidationError(f"{source}: unknown solver settings {sorted(bad)}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ValidationError(f"{source}: seed must be a non-negative integer")

    sc = Scenario(name=str(data.get("name", Path(source).stem)), source=source, text=text,
                  maps=maps, solver=dict(solver), seed=seed,
                  expect=_need(data.get("expect") or {}, "expect", dict, source),
                  description=str(data.get("description", "")).strip())

    for lname, body in (_need(data.get("links") or {}, "links", dict, source)).items():
        where = f"{source}: link {lname!r}"
        body = _need(body, lname, dict, where)
        comps = _names(body.get("components"), where)
        if len(comps) < 2:
            raise ValidationError(f"{where}: a link needs at least two components")
        comp_maps = [known(c, where) for c in comps]
        oriented = body.get("oriented", [True] * len(comps))
        if len(oriented) != len(comps) or not all(isinstance(o, bool) for o in oriented):
            raise ValidationError(f"{where}: 'oriented' needs one boolean per component")
        n = comp_maps[0].dim
        if any(m.dim != n for m in comp_maps):
            raise DimensionError(f"{where}: components map into different dimensions")
        for m in comp_maps:
            if not all(f.is_circle for f in m.domain):
                raise ValidationError(f"{where}: component {m.name!r} must be closed "
                                      "(circle factors only)")
        sc.links[lname] = LinkDecl(comps, tuple(oriented))

    for pname, body in (_need(data.get("double_points") or {}, "double_points", dict,
                              source)).items():
        where = f"{source}: double_points {pname!r}"
        pair = _names(body, where)
        if len(pair) != 2:
            raise ValidationError(f"{where}: expected two map names")
        a, b = (known(q, where) for q in pair)
        if a.dim != b.dim:
            raise DimensionError(f"{where}: maps have different target dimensions")
        sc.double_points[pname] = pair

    for wname, body in (_need(data.get("whitney") or {}, "whitney", dict, source)).items():
        where = f"{source}: whitney {wname!r}"
        body = _need(body, wname, dict, where)
        h = known(body.get("map"), where)
        if h.dim % 2 or h.k != h.dim // 2 + 1:
            raise DimensionError(f"{where}: {h.name} must map an (n+1)-dimensional domain "
                                 "into R^n x R^n")
        for role in ("fi", "fj"):
            if role in body:
                f = known(body[role], where)
                if f.dim != h.dim // 2:
                    raise DimensionError(f"{where}: {role} {f.name!r} has the wrong target")
        sc.whitney[wname] = dict(body)

    for lname, body in (_need(data.get("lifts") or {}, "lifts", dict, source)).items():
        where = f"{source}: lift {lname!r}"
        body = _need(body, lname, dict, where)
        comps = _names(body.get("components"), where)
        H = _names(body.get("H"), where)
        if len(comps) != 3 or len(H) != 3:
            raise ValidationError(f"{where}: a lift needs three components and three homotopies")
        for q in comps + H:
            known(q, where)
        link = body.get("link")
        if link not in sc.links or len(sc.links[link].components) != 3:
            raise ValidationError(f"{where}: 'link' must name a declared three-component link")
        sc.lifts[lname] = LiftDecl(link, comps, H)
        sc.lift_path(lname)     # runs the structural checks of T2Path
    return sc


def builtin_text(name):
    if name not in BUILTINS:
        raise ValidationError(f"no built-in scenario {name!r}; choose from {', '.join(BUILTINS)}")
    return resources.files("linkcalc.scenarios").joinpath(f"{name}.yaml").read_text("utf-8")


def load_scenario(ref):
    """Load a scenario from a file path or a built-in name."""
    path = Path(ref)
    if path.is_file():
        try:
            text = path.read_text("utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ValidationError(f"cannot read {ref}: {exc}") from None
        return parse_scenario(text, str(path))
    if ref in BUILTINS:
        return parse_scenario(builtin_text(ref), f"builtin:{ref}")
    raise ValidationError(f"{ref!r} is neither a file nor a built-in scenario")


__all__ = ["Scenario", "LinkDecl", "LiftDecl", "parse_scenario", "load_scenario",
           "builtin_text", "BUILTINS", "SCHEMA"]
