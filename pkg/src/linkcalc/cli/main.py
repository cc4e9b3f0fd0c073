"""Command-line entry point ``linkcalc``."""

import argparse
import json
import sys
import time
import traceback
from pathlib import Path

from .. import __version__
from ..errors import (InvariantFailure, LinkCalcError, MethodDisagreement, NonTransverse,
                      ResolutionUnstable, StepCollapse, ValidationError)
from ..link2 import (LinkPair, double_points, lk_via_gauss_quadrature, lk_via_ray,
                     lk_via_regular_value, linking_number_via_separation)
from ..link3 import assemble_obstruction, borromean_demo, whitney_circle, whitney_disk
from ..link3.pieces import witness_errors
from . import export
from .scenario import BUILTINS, load_scenario

REPORT_SCHEMA = "linkcalc.report/1"
METHODS = ("all", "ray", "regular", "gauss", "separation")
GAUSS_RESOLUTION = 256
GAUSS_TOL = 1e-2
BOUNDARY_TOL = 1e-6

EXIT_OK = 0
EXIT_NON_TRANSVERSE = 2
EXIT_INPUT = 3
EXIT_DISAGREEMENT = 4
EXIT_INVARIANT = 5


def exit_code_for(exc):
    if isinstance(exc, MethodDisagreement):
        return EXIT_DISAGREEMENT
    if isinstance(exc, (NonTransverse, StepCollapse, ResolutionUnstable)):
        return EXIT_NON_TRANSVERSE
    if isinstance(exc, ValidationError):
        return EXIT_INPUT
    return EXIT_INVARIANT


class Run:
    """Mutable report under construction for one command."""

    def __init__(self, command, args):
        self.command = command
        self.args = args
        self.scenario = None
        self.results = {}
        self.diagnostics = {}
        self.notes = []
        self.exports = []
        self.t0 = time.perf_counter()

    def config(self):
        return self.scenario.config(self.args.seed, self.args.resolution)

    def _config_dict(self):
        if self.scenario is None:
            return None
        try:
            return self.config().to_dict()
        except LinkCalcError:
            return None

    def export_dir(self):
        return Path(self.args.export_dir) if self.args.export_dir else None

    def add_exports(self, paths):
        self.exports.extend(str(p) for p in paths)

    def report(self, code, exc=None):
        sc = self.scenario
        rep = {
            "schema": REPORT_SCHEMA,
            "tool_version": __version__,
            "command": self.command,
            "scenario": None if sc is None else {
                "name": sc.name, "source": sc.source, "digest": sc.digest},
            "seed": self.args.seed if self.args.seed is not None else (sc.seed if sc else 0),
            "config": self._config_dict(),
            "results": self.results,
            "diagnostics": self.diagnostics,
            "notes": self.notes,
            "exports": self.exports,
            "status": {"exit_code": code, "ok": code == 0,
                       "error": None if exc is None else {
                           "type": type(exc).__name__, "message": str(exc),
                           "location": _listify(getattr(exc, "location", None))}},
            "wall_time": round(time.perf_counter() - self.t0, 3),
        }
        return rep


def _listify(v):
    if v is None:
        return None
    try:
        return [float(q) for q in v]
    except TypeError:
        return float(v)


def dumps(report):
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False, default=_json_default)


def _json_default(o):
    import numpy as np
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, (np.ndarray, tuple)):
        return list(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def strip_wall_time(text):
    """Report JSON without the wall_time field (for determinism checks)."""
    d = json.loads(text)
    d.pop("wall_time", None)
    return json.dumps(d, sort_keys=True)


# -- lk ------------------------------------------------------------------------

def linking_numbers(pair, method, seed, config):
    """Values of the requested method(s); raises MethodDisagreement when the
    independent methods differ."""
    pair.require_linking_dims()
    out = {"components": [pair.f1.name, pair.f2.name], "ring": pair.ring}
    vals = {}
    if method in ("all", "ray"):
        vals["ray"] = lk_via_ray(pair, seed=seed, config=config)
    if method in ("all", "regular"):
        vals["regular"] = lk_via_regular_value(pair, seed=seed, config=config)
    if method in ("all", "gauss"):
        g = lk_via_gauss_quadrature(pair, GAUSS_RESOLUTION)
        out["gauss_value"] = g
        out["gauss_error"] = abs(g - round(g))
        vals["gauss"] = int(round(g))
    if method == "separation":
        res = linking_number_via_separation(pair, seed=seed, config=config)
        vals["separation"] = res.signed_count if pair.ring == "Z" else res.mod2
    out["methods"] = vals
    distinct = set(vals.values())
    bad_gauss = out.get("gauss_error", 0.0) > GAUSS_TOL
    if pair.ring == "Z":
        out["lk"] = next(iter(distinct)) if len(distinct) == 1 else None
    else:
        distinct = {v % 2 for v in distinct}
        out["lk"] = None
    out["mod2"] = next(iter(distinct)) % 2 if len(distinct) == 1 else None
    if len(distinct) > 1 or bad_gauss:
        exc = MethodDisagreement(
            f"{pair.name}: methods disagree: {vals}"
            + (f" (quadrature {out['gauss_value']:.6f} is not within {GAUSS_TOL} of an integer)"
               if bad_gauss else ""))
        exc.result = out
        raise exc
    return out


def cmd_lk(run):
    sc = run.scenario
    cfg = run.config()
    links = sc.default("links", run.args.link, "link")
    method = run.args.method or "all"
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    for link in links:
        pairs = [run.args.pair] if run.args.pair else sc.pair_names(link)
        out = run.results.setdefault(link, {})
        for pname in pairs:
            pair = sc.link_pair(link, pname)
            try:
                out[pname] = linking_numbers(pair, method, cfg.seed, cfg)
            except MethodDisagreement as exc:
                out[pname] = exc.result
                raise


# -- double points ---------------------------------------------------------------

def _double_point_targets(run):
    sc = run.scenario
    if run.args.pair and run.args.pair in sc.double_points:
        return [(run.args.pair, sc.double_points[run.args.pair], (True, True))]
    if sc.double_points and not run.args.pair and not run.args.link:
        return [(k, v, (True, True)) for k, v in sorted(sc.double_points.items())]
    out = []
    for link in sc.default("links", run.args.link, "link"):
        names = [run.args.pair] if run.args.pair else sc.pair_names(link)
        for pname in names:
            p = sc.link_pair(link, pname)
            out.append((f"{link}:{pname}", (p.f1.name, p.f2.name), p.oriented))
    return out


def cmd_double_points(run):
    sc = run.scenario
    cfg = run.config()
    for name, (a, b), oriented in _double_point_targets(run):
        res = double_points(LinkPair(sc.maps[a], sc.maps[b], oriented, name), cfg)
        run.results[name] = res.to_dict()
        d = run.export_dir()
        if d is not None:
            stem = name.replace(":", "_")
            run.add_exports(export.export_points(d, stem, res.points, res.labels))
            run.add_exports(export.export_curves(d, stem, res.curves, res.labels))


# -- whitney ---------------------------------------------------------------------

def cmd_whitney(run):
    sc = run.scenario
    cfg = run.config()
    names = sc.default("whitney", run.args.pair, "whitney declaration")
    if not names:
        raise ValidationError(f"scenario {sc.name!r} declares no whitney maps")
    for name in names:
        decl = sc.whitney[name]
        h = sc.maps[decl["map"]]
        fi = sc.maps.get(decl.get("fi"))
        fj = sc.maps.get(decl.get("fj"))
        curves = whitney_circle(h, cfg)
        disk = whitney_disk(h, curves, fi=fi, fj=fj)
        out = disk.to_dict()
        if "boundary_error_i" in disk.checks:
            worst = max(disk.checks["boundary_error_i"], disk.checks["boundary_error_j"])
            out["boundary_on_images"] = worst <= BOUNDARY_TOL
        run.results[name] = out
        d = run.export_dir()
        if d is not None:
            run.add_exports(export.export_disk(d, name, disk))


# -- obstruct --------------------------------------------------------------------

def obstruction(sc, lift, cfg):
    path = sc.lift_path(lift)
    rep = assemble_obstruction(path, cfg)
    out = rep.to_dict()
    errs = []
    for piece in rep.pieces:
        for p in piece.points:
            errs.append(witness_errors(piece, p))
    out["witness_path_errors"] = {
        "start": max((e["start"] for e in errs), default=0.0),
        "meet": max((e["meet"] for e in errs), default=0.0)}
    return rep, out


def cmd_obstruct(run):
    sc = run.scenario
    cfg = run.config()
    lifts = sc.default("lifts", run.args.lift, "lift")
    if not lifts:
        raise ValidationError(f"scenario {sc.name!r} declares no lifts")
    for lift in lifts:
        try:
            rep, out = obstruction(sc, lift, cfg)
        except LinkCalcError as exc:
            partial = getattr(exc, "partial_report", None)
            if partial is not None:
                run.results[lift] = dict(partial.to_dict(), incomplete=True)
            raise
        run.results[lift] = out
        d = run.export_dir()
        if d is not None:
            for piece in rep.pieces:
                run.add_exports(export.export_points(d, f"{lift}_{_file_tag(piece.tag)}",
                                                     piece.points, piece.labels))


def _file_tag(tag):
    return tag.replace(",", "").replace("(", "").replace(")", "")


# -- demo ------------------------------------------------------------------------

def cmd_demo(run):
    if run.args.name != "borromean":
        raise ValidationError(f"unknown demo {run.args.name!r}")
    if run.args.scenario not in (None, "borromean"):
        raise ValidationError("demo borromean always uses the built-in borromean scenario")
    run.scenario = load_scenario("borromean")
    cfg = run.config()
    try:
        demo = borromean_demo(cfg, strict=True)
    except InvariantFailure as exc:
        demo = getattr(exc, "demo", None)
        if demo is not None:
            run.results = demo.to_dict()
        raise
    run.results = demo.to_dict()
    run.notes.extend(demo.notes)
    d = run.export_dir()
    if d is not None:
        run.add_exports(export.export_disk(d, "borromean_W", demo.disk))


# -- validate --------------------------------------------------------------------

def _check(checks, scenario, name, ok, detail=None):
    checks.append({"scenario": scenario, "check": name, "ok": bool(ok), "detail": detail})
    return ok


def validate_scenario(sc, seed=None, resolution=None, checks=None):
    """The invariant suite for one scenario; appends check records."""
    checks = [] if checks is None else checks
    cfg = sc.config(seed, resolution)
    fine = cfg.refined()
    expect = sc.expect
    _check(checks, sc.name, "loads", True, sc.digest)

    for link in sorted(sc.links):
        for pname in sc.pair_names(link):
            pair = sc.link_pair(link, pname)
            if sum(pair.p) + 1 != pair.n:
                continue
            try:
                res = linking_numbers(pair, "all", cfg.seed, cfg)
            except MethodDisagreement as exc:
                _check(checks, sc.name, f"lk {link}:{pname} methods agree", False,
                       getattr(exc, "result", str(exc)))
                continue
            _check(checks, sc.name, f"lk {link}:{pname} methods agree", True, res["methods"])
            swapped = linking_numbers(pair.swapped(), "regular", cfg.seed, cfg)
            _check(checks, sc.name, f"lk {link}:{pname} symmetric", swapped["lk"] == res["lk"],
                   [res["lk"], swapped["lk"]])
            doubled = linking_numbers(pair, "ray", cfg.seed, fine)
            _check(checks, sc.name, f"lk {link}:{pname} stable under refinement",
                   doubled["lk"] == res["lk"], [res["lk"], doubled["lk"]])
            want = expect.get("lk", {}).get(link, {}).get(pname)
            if want is not None:
                _check(checks, sc.name, f"lk {link}:{pname} expected", res["lk"] == want,
                       [res["lk"], want])

    for name in sorted(sc.double_points):
        a, b = sc.double_points[name]
        pair = LinkPair(sc.maps[a], sc.maps[b], name=name)
        want_nt = name in expect.get("non_transverse", [])
        try:
            coarse = double_points(pair, cfg)
            refined = double_points(pair, fine)
        except NonTransverse as exc:
            _check(checks, sc.name, f"double points {name} non-transverse flagged", want_nt,
                   str(exc))
            continue
        _check(checks, sc.name, f"double points {name} transverse", not want_nt)
        _check(checks, sc.name, f"double points {name} stable under refinement",
               coarse.count == refined.count, [coarse.count, refined.count])

    for name in sorted(sc.whitney):
        decl = sc.whitney[name]
        h = sc.maps[decl["map"]]
        curves = whitney_circle(h, cfg)
        disk = whitney_disk(h, curves, fi=sc.maps.get(decl.get("fi")),
                            fj=sc.maps.get(decl.get("fj")))
        if "boundary_error_i" in disk.checks:
            worst = max(disk.checks["boundary_error_i"], disk.checks["boundary_error_j"])
            _check(checks, sc.name, f"whitney {name} boundary on images", worst <= BOUNDARY_TOL,
                   worst)

    for lift in sorted(sc.lifts):
        rep, out = obstruction(sc, lift, cfg)
        rep2 = assemble_obstruction(sc.lift_path(lift), fine)
        _check(checks, sc.name, f"obstruction {lift} stable under refinement",
               rep.total == rep2.total, [rep.total, rep2.total])
        w = out["witness_path_errors"]
        _check(checks, sc.name, f"obstruction {lift} witness paths",
               max(w["start"], w["meet"]) <= 1e-8, w)
        perm = sc.lift_path(lift).relabel((1, 0, 2))
        rep3 = assemble_obstruction(perm, cfg)
        _check(checks, sc.name, f"obstruction {lift} relabeling", rep3.mod2_total == rep.mod2_total,
               [rep.mod2_total, rep3.mod2_total])
        want = expect.get("obstruction", {}).get(lift)
        if want is not None:
            _check(checks, sc.name, f"obstruction {lift} expected", rep.mod2_total == want,
                   [rep.mod2_total, want])
    return checks


def cmd_validate(run):
    refs = [run.args.scenario] if run.args.scenario else list(BUILTINS)
    checks = []
    for ref in refs:
        sc = load_scenario(ref)
        if run.scenario is None or len(refs) == 1:
            run.scenario = sc
        validate_scenario(sc, run.args.seed, run.args.resolution, checks)
    run.results = {"checks": checks, "n_checks": len(checks),
                   "n_failed": sum(not c["ok"] for c in checks)}
    if len(refs) > 1:
        run.scenario = None
    failed = [c for c in checks if not c["ok"]]
    if failed:
        if any("methods agree" in c["check"] for c in failed):
            raise MethodDisagreement(f"{len(failed)} validation checks failed")
        raise InvariantFailure(f"{len(failed)} validation checks failed: "
                               + "; ".join(f"{c['scenario']}: {c['check']}" for c in failed))


COMMANDS = {
    "lk": cmd_lk,
    "double-points": cmd_double_points,
    "whitney": cmd_whitney,
    "obstruct": cmd_obstruct,
    "demo": cmd_demo,
    "validate": cmd_validate,
}


# -- human summary -----------------------------------------------------------------

def summary_lines(rep):
    st = rep["status"]
    sc = rep["scenario"]
    head = f"linkcalc {rep['command']}"
    if sc:
        head += f" [{sc['name']} {sc['digest'][:12]}]"
    lines = [head]
    res = rep["results"]
    cmd = rep["command"]
    if cmd == "lk":
        for link, pairs in sorted(res.items()):
            for pname, r in sorted(pairs.items()):
                shown = r["lk"] if r.get("lk") is not None else f"{r.get('mod2')} (mod 2)"
                lines.append(f"  {link} {pname}: lk = {shown}  methods {r.get('methods')}")
    elif cmd == "double-points":
        for name, r in sorted(res.items()):
            lines.append(f"  {name}: dimension {r['dimension']}, count {r['count']}, "
                         f"signed {r['signed_count']}")
    elif cmd == "whitney":
        for name, r in sorted(res.items()):
            lines.append(f"  {name}: {r['n_curves']} circle component(s), "
                         f"boundary on images: {r.get('boundary_on_images')}")
    elif cmd == "obstruct":
        for lift, r in sorted(res.items()):
            counts = ", ".join(f"{p['tag']}={p['count']}" for p in r["pieces"])
            lines.append(f"  {lift}: mod 2 total {r['mod2_total']}, signed "
                         f"{r['signed_total']} ({counts})")
            lines.append(f"  verdict: {r['verdict']}")
    elif cmd == "demo" and res:
        lines.append(f"  double points: {len(res['double_points'])}")
        lines.append(f"  arc z-range {res['arc'].get('z_range')}, t-range {res['arc'].get('t_range')}")
        lines.append(f"  determinant sign relation {res['determinant']['sign_relation']}")
        lit = res["literal_intersections"]
        lines.append(f"  disk intersections: f1 {lit['f1']['count']}, f2 {lit['f2']['count']}")
        lines.append(f"  pipeline mod 2 total {res['pipeline']['mod2_total']}")
        bad = [k for k, v in res["checks"].items() if not v]
        lines.append("  all checks pass" if not bad else f"  failed checks: {bad}")
    elif cmd == "validate" and res:
        lines.append(f"  {res['n_checks']} checks, {res['n_failed']} failed")
        for c in res["checks"]:
            if not c["ok"]:
                lines.append(f"  FAIL {c['scenario']}: {c['check']} {c['detail']}")
    if st["error"]:
        lines.append(f"  error ({st['error']['type']}): {st['error']['message']}")
    lines.append(f"  exit code {st['exit_code']}")
    return lines


# -- argument parsing ---------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario file or built-in name")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--resolution", type=int, default=None,
                        help="seeding cells per factor")
    common.add_argument("--report", help="write the JSON report here")
    common.add_argument("--export-dir", help="directory for OBJ/CSV exports")
    common.add_argument("--method", default=None, help="lk method: " + "|".join(METHODS))
    common.add_argument("--link", default=None, help="link name (default: all)")
    common.add_argument("--pair", default=None,
                        help="pair such as 1-2, or a declared double_points/whitney name")
    common.add_argument("--lift", default=None, help="lift name (default: all)")
    common.add_argument("--quiet", action="store_true", help="no summary on stdout")

    parser = argparse.ArgumentParser(prog="linkcalc", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("lk", parents=[common], help="linking numbers of two-component pairs")
    sub.add_parser("double-points", parents=[common], help="double-point sets")
    sub.add_parser("whitney", parents=[common], help="Whitney circles and ruled disks")
    sub.add_parser("obstruct", parents=[common], help="cubic obstruction of a lift")
    demo = sub.add_parser("demo", parents=[common], help="worked examples")
    demo.add_argument("name", choices=["borromean"])
    sub.add_parser("validate", parents=[common], help="run the invariant suite")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map them onto the input-error code
        return EXIT_INPUT if exc.code not in (0, None) else 0
    run = Run(args.command, args)
    code, err = EXIT_OK, None
    try:
        if args.seed is not None and args.seed < 0:
            raise ValidationError("--seed must be non-negative")
        if args.command not in ("demo", "validate"):
            if not args.scenario:
                raise ValidationError("--scenario is required")
            run.scenario = load_scenario(args.scenario)
        COMMANDS[args.command](run)
    except LinkCalcError as exc:
        code, err = exit_code_for(exc), exc
    except Exception as exc:    # a bug, not an input problem
        traceback.print_exc(file=sys.stderr)
        code, err = EXIT_INVARIANT, exc
    rep = run.report(code, err)
    text = dumps(rep)
    if args.report:
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        Path(args.report).write_text(text + "\n")
    if not args.quiet:
        print("\n".join(summary_lines(rep)))
    return code


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
