"""Acceptance criteria 1 to 7.

Each criterion test prints one PASS/FAIL line (visible with or without -s).
Run on its own with ``pytest tests/test_acceptance.py -s``.
"""

import itertools
import math
import time

import numpy as np
import pytest

from linkcalc.cli.scenario import BUILTINS, load_scenario
from linkcalc.errors import NonTransverse
from linkcalc.expr import CallableMap, parse_map
from linkcalc.link2 import (LinkPair, double_points, linking_number_via_separation,
                            lk_via_gauss_quadrature, lk_via_ray, lk_via_regular_value,
                            perturb_map, reparametrize)
from linkcalc.link3 import assemble_obstruction, lift_path
from linkcalc.link3.borromean import T_RANGE, Z_RANGE, determinant_check, maps
from linkcalc.solve import SolverConfig, ZeroProblem, find_zeros_0d

from conftest import fd_jacobian

TAU = 2 * math.pi


@pytest.fixture
def say(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


def lk_three(pair):
    g = lk_via_gauss_quadrature(pair, 256)
    return lk_via_ray(pair), lk_via_regular_value(pair), int(round(g)), abs(g - round(g))


# -- 1. Borromean reproduction ---------------------------------------------------

@pytest.fixture(scope="module")
def demo_run(tmp_path_factory):
    from linkcalc.cli.main import main
    import json
    path = tmp_path_factory.mktemp("demo") / "demo.json"
    t0 = time.perf_counter()
    code = main(["demo", "borromean", "--report", str(path), "--quiet"])
    elapsed = time.perf_counter() - t0
    return code, json.loads(path.read_text()), elapsed


def test_criterion_1_borromean(demo_run, say):
    code, rep, elapsed = demo_run
    r = rep["results"]
    arc = r["arc"]
    det = determinant_check(maps()["H"], seed=0, samples=100)
    checks = {
        "exit code 0": code == 0,
        "2 double points": len(r["double_points"]) == 2,
        "arc z-range": np.allclose(arc["z_range"], Z_RANGE, atol=1e-3),
        "arc t-range": np.allclose(arc["t_range"], T_RANGE, atol=1e-3),
        "|det DH| = |formula| to 1e-8 (100 points)": det["max_err_vs_negated_formula"] <= 1e-8,
        "ring outside the pair meets W once": r["literal_intersections"]["f1"]["count"] == 1,
        "invariant 1 mod 2": r["pipeline"]["mod2_total"] == 1,
        "runtime <= 60 s": elapsed <= 60.0,
    }
    ok = all(checks.values())
    bad = [k for k, v in checks.items() if not v]
    say(1, ok, f"({elapsed:.1f} s) " + ("all corrected clauses hold" if ok else f"failed: {bad}")
        + "; literal clauses det = +formula and f2 count = 1 FAIL (det = -formula, f2 count "
        "= 0), kept as strict xfail tests below")
    assert ok, bad


@pytest.mark.xfail(strict=True, reason="det DH equals minus the printed formula")
def test_criterion_1_literal_determinant_sign():
    det = determinant_check(maps()["H"], seed=0, samples=100)
    assert det["max_err_vs_formula"] <= 1e-8


@pytest.mark.xfail(strict=True, reason="f2 lies in the plane y = 0 and misses W")
def test_criterion_1_literal_f2_count(demo_run):
    _, rep, _ = demo_run
    assert rep["results"]["literal_intersections"]["f2"]["count"] == 1


# -- 2. three-way agreement --------------------------------------------------------

CASES = [("hopf", "hopf", "1-2", 1), ("torus-2-4", "torus", "1-2", 2),
         ("torus-2-6", "torus", "1-2", 3), ("unlink2", "unlink2", "1-2", 0),
         ("borromean", "borromean", "1-2", 0), ("borromean", "borromean", "2-3", 0),
         ("borromean", "borromean", "1-3", 0)]


def test_criterion_2_three_way_agreement(say):
    rows = []
    ok = True
    for name, link, pname, size in CASES:
        ray, reg, gauss, err = lk_three(load_scenario(name).link_pair(link, pname))
        good = ray == reg == gauss and abs(ray) == size and err <= 1e-2
        ok &= good
        rows.append(f"{name}:{pname}={ray}")
    say(2, ok, ", ".join(rows))
    assert ok


# -- 3. lift independence --------------------------------------------------------

BASES = [("hopf", "hopf"), ("torus-2-4", "torus"), ("unlink2", "unlink2"),
         ("torus-2-6", "torus"), ("borromean", "borromean")]


def test_criterion_3_lift_independence(say):
    ok = True
    rows = []
    for seed, (name, link) in enumerate(BASES):
        base = load_scenario(name).link_pair(link, "1-2")
        pair = LinkPair(perturb_map(base.f1, 0.1, seed=seed),
                        perturb_map(base.f2, 0.1, seed=seed + 50))
        a = linking_number_via_separation(pair, seed=seed + 1).signed_count
        b = linking_number_via_separation(pair, seed=seed + 101).signed_count
        ok &= a == b == lk_via_ray(pair)
        rows.append(f"{name}~{seed}: {a}/{b}")
    say(3, ok, ", ".join(rows))
    assert ok


# -- 4. solver vs brute force -------------------------------------------------------

TERMS = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 0), (0, 2)]


def trig_system(seed):
    rng = np.random.default_rng(seed)
    comps = []
    for _ in range(2):
        parts = [f"{rng.uniform(-0.5, 0.5):.6f}"]
        for k, l in TERMS:
            a, b = rng.normal(size=2)
            arg = f"{k}*x + {l}*y"
            parts.append(f"{a:.6f}*cos({arg}) + {b:.6f}*sin({arg})")
        comps.append(" + ".join(parts))
    return parse_map(f"F(x: circle, y: circle) -> 2 = ({comps[0]}, {comps[1]})")


def brute_force_roots(m, N=512):
    """Cells where both components change sign on a dense grid, polished by
    Newton with a finite-difference Jacobian."""
    g = TAU * np.arange(N) / N
    X, Y = np.meshgrid(g, g, indexing="ij")
    V = m.eval_batch(np.column_stack([X.ravel(), Y.ravel()])).reshape(N, N, 2)

    def straddles(c):
        corners = [c, np.roll(c, -1, 0), np.roll(c, -1, 1), np.roll(np.roll(c, -1, 0), -1, 1)]
        return (np.minimum.reduce(corners) <= 0) & (np.maximum.reduce(corners) >= 0)

    Z = (np.argwhere(straddles(V[..., 0]) & straddles(V[..., 1])) + 0.5) * (TAU / N)
    for _ in range(30):
        J = np.empty((len(Z), 2, 2))
        for i in range(2):
            d = np.zeros(2)
            d[i] = 1e-7
            J[:, :, i] = (m.eval_batch(Z + d) - m.eval_batch(Z - d)) / 2e-7
        Z = Z - np.linalg.solve(J, m.eval_batch(Z)[..., None])[..., 0]
    Z = np.mod(Z[np.linalg.norm(m.eval_batch(Z), axis=1) < 1e-10], TAU)
    roots = []
    for z in Z:
        if not any(np.linalg.norm((z - r + math.pi) % TAU - math.pi) < 1e-6 for r in roots):
            roots.append(z)
    return roots


def test_criterion_4_solver_vs_brute_force(say):
    ok = True
    counts = []
    for seed in range(10):
        m = trig_system(seed)
        pts = find_zeros_0d(ZeroProblem(lambda a, m=m: m.evaluate(a), m.domain, 2,
                                        SolverConfig(seed=seed)))
        roots = brute_force_roots(m)
        same = len(pts) == len(roots) and all(
            min(np.linalg.norm((p.coords - r + math.pi) % TAU - math.pi) for r in roots) < 1e-8
            for p in pts)
        ok &= same
        counts.append(f"{len(pts)}/{len(roots)}")
    say(4, ok, "solver/brute counts " + " ".join(counts))
    assert ok


# -- 5. AD vs finite differences -------------------------------------------------------

VARS = ("a", "b", "c")


def random_expr(rng, depth):
    if depth == 0 or rng.random() < 0.2:
        return str(rng.choice(VARS)) if rng.random() < 0.7 else f"{rng.uniform(-2, 2):.3f}"
    op = rng.integers(9)
    e1 = random_expr(rng, depth - 1)
    if op == 0:
        return f"({e1} + {random_expr(rng, depth - 1)})"
    if op == 1:
        return f"({e1} - {random_expr(rng, depth - 1)})"
    if op == 2:
        return f"({e1} * {random_expr(rng, depth - 1)})"
    if op == 3:
        return f"({e1} / (2 + ({random_expr(rng, depth - 1)})^2))"
    if op == 4:
        return f"({e1})^{rng.integers(2, 4)}"
    if op == 5:
        return f"sin({e1})"
    if op == 6:
        return f"cos({e1})"
    if op == 7:
        return f"exp(sin({e1}))"
    return f"sqrt(1 + ({e1})^2)"


def max_rel_error(m, U):
    worst = 0.0
    for u in U:
        J = m.jacobian(u)
        F = fd_jacobian(m, u, h=1e-5)
        worst = max(worst, float(np.max(np.abs(J - F) / np.maximum(1.0, np.abs(J)))))
    return worst


def test_criterion_5_ad_vs_fd(say):
    rng = np.random.default_rng(0)
    worst_random = 0.0
    for _ in range(50):
        body = ", ".join(random_expr(rng, 4) for _ in range(2))
        m = parse_map(f"g(a: interval -1 1, b: interval -1 1, c: interval 0 2) -> 2 = ({body})")
        worst_random = max(worst_random, max_rel_error(m, m.sample_points(5, rng)))
    worst_builtin = 0.0
    n_maps = 0
    for name in BUILTINS:
        for m in load_scenario(name).maps.values():
            n_maps += 1
            worst_builtin = max(worst_builtin, max_rel_error(m, m.sample_points(10, rng)))
    ok = worst_random <= 1e-6 and worst_builtin <= 1e-6
    say(5, ok, f"50 random expressions max rel err {worst_random:.1e}; {n_maps} built-in maps "
        f"max rel err {worst_builtin:.1e}")
    assert ok


# -- 6. invariance -------------------------------------------------------------------

def shifted(m, c):
    return CallableMap(f"{m.name}+{c}", m.domain, m.dim,
                       lambda args: m.evaluate([args[0] + c] + list(args[1:])))


def integers_at(sc, cfg):
    """Every integer the tool reports for a scenario at one resolution."""
    out = {}
    for link in sorted(sc.links):
        for pname in sc.pair_names(link):
            pair = sc.link_pair(link, pname)
            out[f"lk ray {link}:{pname}"] = lk_via_ray(pair, config=cfg)
            out[f"lk regular {link}:{pname}"] = lk_via_regular_value(pair, config=cfg)
    for name, (a, b) in sorted(sc.double_points.items()):
        try:
            out[f"double points {name}"] = double_points(
                LinkPair(sc.maps[a], sc.maps[b]), cfg).count
        except NonTransverse:
            out[f"double points {name}"] = "non-transverse"
    for lift in sorted(sc.lifts):
        out[f"obstruction {lift}"] = assemble_obstruction(sc.lift_path(lift), cfg).total
    return out


def test_criterion_6_invariance(say):
    problems = []
    for name, link in (("hopf", "hopf"), ("torus-2-4", "torus")):
        pair = load_scenario(name).link_pair(link, "1-2")
        base = lk_three(pair)[:3]
        for label, f1, sign in (("shift", shifted(pair.f1, 0.7), 1),
                                ("bend", reparametrize(pair.f1, bend=0.3), 1),
                                ("reverse", reparametrize(pair.f1, bend=0.0, reverse=True), -1)):
            vals = lk_three(LinkPair(f1, pair.f2))[:3]
            if vals != tuple(sign * v for v in base):
                problems.append(f"{name} {label}: {vals} vs {base}")

    path = lift_path()
    relabel = {p: assemble_obstruction(path.relabel(p)).mod2_total
               for p in itertools.permutations(range(3))}
    if set(relabel.values()) != {1}:
        problems.append(f"relabeling: {relabel}")

    for name in BUILTINS:
        sc = load_scenario(name)
        cfg = sc.config()
        coarse, fine = integers_at(sc, cfg), integers_at(sc, cfg.refined())
        if coarse != fine:
            problems.append(f"{name} resolution: {coarse} vs {fine}")

    ok = not problems
    say(6, ok, "reparametrisation, 6 relabelings and resolution doubling on "
        f"{len(BUILTINS)} scenarios" + ("" if ok else f"; {problems}"))
    assert ok, problems


# -- 7. degenerate inputs ---------------------------------------------------------------

def test_criterion_7_degenerate(run_cli, say):
    code, rep, _ = run_cli("obstruct", "--scenario", "unlink3", "--quiet")
    r = rep["results"]["trivial"]
    empty = code == 0 and all(p["count"] == 0 for p in r["pieces"]) and r["mod2_total"] == 0
    code2, rep2, _ = run_cli("double-points", "--scenario", "tangent-pair", "--quiet")
    err = rep2["status"]["error"] or {}
    flagged = code2 == 2 and err.get("type") == "NonTransverse" and not rep2["results"]
    ok = empty and flagged
    say(7, ok, f"unlink3 pieces empty, invariant {r['mod2_total']}; tangent-pair exit "
        f"{code2} ({err.get('type')})")
    assert ok
