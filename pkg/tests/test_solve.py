import math

import numpy as np
import pytest

from linkcalc.errors import NonTransverse, StepCollapse, ValidationError
from linkcalc.expr import DomainFactor, parse_map
from linkcalc.solve import (SolverConfig, ZeroProblem, find_zeros_0d, oriented_tangent,
                            signed_count, trace_zeros_1d)
import linkcalc.solve.zeros as zeros

SQ3 = math.sqrt(3) / 2


def problem_of(m, config=None, **kw):
    return ZeroProblem(lambda a: m.evaluate(a), m.domain, m.dim, config or SolverConfig(), **kw)


def test_single_zero_on_circle():
    # two equations in one unknown; the only common zero is x = 0
    m = parse_map("f(x: circle) -> 2 = (cos(x) - 1, sin(x))")
    pts = find_zeros_0d(problem_of(m))
    assert len(pts) == 1
    assert abs(pts[0].coords[0]) < 1e-8 or abs(pts[0].coords[0] - 2 * math.pi) < 1e-8
    assert pts[0].sign == 1


def test_square_system_signs():
    # (cos x, cos y) on the torus: four zeros, signs from sin x sin y
    m = parse_map("f(x: circle, y: circle) -> 2 = (cos(x), cos(y))")
    pts = find_zeros_0d(problem_of(m))
    assert len(pts) == 4
    for p in pts:
        x, y = p.coords
        assert p.sign == int(np.sign(math.sin(x) * math.sin(y)))
    assert signed_count(pts) == 0


def test_borromean_double_points():
    f3 = parse_map("f3(z: circle) -> 3 = (2*cos(z), sin(z), 0)")
    H1 = parse_map("H1(y: circle, t: interval 0 4) -> 3 = (cos(y), t, 2*sin(y))")

    def F(a):
        y, z, t = a
        return [p - q for p, q in zip(f3.evaluate([z]), H1.evaluate([y, t]))]
    factors = (H1.domain[0], f3.domain[0], H1.domain[1])
    pts = find_zeros_0d(ZeroProblem(F, factors, 3))
    assert len(pts) == 2
    np.testing.assert_allclose(pts[0].coords, [0.0, math.pi / 3, SQ3], atol=1e-9)
    np.testing.assert_allclose(pts[1].coords, [math.pi, 2 * math.pi / 3, SQ3], atol=1e-9)
    assert pts[0].sign == -pts[1].sign


def test_disjoint_images_give_no_zeros():
    m = parse_map("f(x: circle, y: circle) -> 2 = (cos(x) - cos(y) - 5, sin(x) - sin(y))")
    assert find_zeros_0d(problem_of(m)) == []


def test_tangential_zero_raises():
    m = parse_map("f(x: circle, y: circle) -> 2 = (cos(x) - 2 - cos(y), sin(x) - sin(y))")
    with pytest.raises(NonTransverse) as err:
        find_zeros_0d(problem_of(m))
    assert err.value.location is not None


def test_deterministic_order_and_seed_independence():
    m = parse_map("f(x: circle, y: circle) -> 2 = (sin(2*x) + 0.3*cos(y), cos(x + y) - 0.2)")
    a = find_zeros_0d(problem_of(m, SolverConfig(seed=1)))
    b = find_zeros_0d(problem_of(m, SolverConfig(seed=7)))
    assert [p.coords for p in a] == [p.coords for p in b]
    assert [p.coords for p in a] == sorted(p.coords for p in a)


def test_underdetermined_rejected_for_isolated_zeros():
    m = parse_map("f(x: circle, y: circle) -> 1 = (cos(x) + cos(y))")
    with pytest.raises(ValidationError):
        find_zeros_0d(problem_of(m))


def test_unit_circle_arc_length():
    m = parse_map("f(x: interval -2 2, y: interval -2 2) -> 1 = (x^2 + y^2 - 1)")
    curves = trace_zeros_1d(problem_of(m))
    assert len(curves) == 1
    c = curves[0]
    assert c.closed
    assert c.arc_length == pytest.approx(2 * math.pi, abs=1e-3)
    assert np.max(np.abs(np.hypot(c.points[:, 0], c.points[:, 1]) - 1)) < 1e-9


def test_two_components_traced_once_each():
    m = parse_map("f(x: interval -3 3, y: interval -1 1) -> 1 = (((x - 1.5)^2 + y^2 - 0.25)*"
                  "((x + 1.5)^2 + y^2 - 0.25))")
    curves = trace_zeros_1d(problem_of(m))
    assert len(curves) == 2
    for c in curves:
        assert c.closed and c.arc_length == pytest.approx(math.pi, abs=1e-3)


def test_arc_ends_on_boundary_with_tags():
    m = parse_map("f(x: interval -2 2, y: interval 0 2) -> 1 = (x^2 + y^2 - 1)")
    curves = trace_zeros_1d(problem_of(m))
    assert len(curves) == 1
    c = curves[0]
    assert not c.closed
    assert sorted(c.end_tags) == [("y", "lower"), ("y", "lower")]
    assert c.arc_length == pytest.approx(math.pi, abs=1e-3)


def test_borromean_whitney_arc():
    G = parse_map("G(z: circle, y: circle, s: interval 0 1, t: interval 0 4) -> 6 = "
                  "(2*cos(z), sin(z), 0, cos(y), t, 2*sin(y) + s*(-(t-2)^2 + 4))")

    def F(a):
        v = G.evaluate(a)
        return [v[i] - v[i + 3] for i in range(3)]
    curves = trace_zeros_1d(ZeroProblem(F, G.domain, 3))
    assert len(curves) == 1
    c = curves[0]
    assert c.column("z").min() == pytest.approx(math.pi / 3, abs=1e-3)
    assert c.column("z").max() == pytest.approx(2 * math.pi / 3, abs=1e-3)
    assert c.column("t").min() == pytest.approx(SQ3, abs=1e-3)
    assert c.column("t").max() == pytest.approx(1.0, abs=1e-3)
    assert c.end_tags == (("s", "lower"), ("s", "lower"))


def test_oriented_tangent_sign_convention():
    J = np.array([[0.0, 1.0]])
    t, _ = oriented_tangent(J)
    assert np.linalg.det(np.vstack([J, t])) > 0


def test_step_collapse_reported():
    # a tiny circle whose curvature the step floor cannot resolve
    m = parse_map("f(x: interval -1 1, y: interval -1 1) -> 1 = (x^2 + y^2 - 0.0001)")
    cfg = SolverConfig(step_max=0.02, step_min=0.008)
    with pytest.raises(StepCollapse) as err:
        trace_zeros_1d(problem_of(m, cfg))
    assert err.value.location is not None


def test_slab_scan_matches_whole_grid(monkeypatch):
    m = parse_map("f(a: interval -1 2, b: circle) -> 2 = (a^2 - 0.5 + 0.1*sin(b), cos(b) - a/3)")
    p = problem_of(m)
    for res in (16, 33):
        axes = zeros.grid_axes(p.factors, res)
        whole = zeros.candidate_cells(zeros.grid_values(p, axes), [False, True],
                                      zeros.grid_spacing(p.factors, res))
        monkeypatch.setattr(zeros, "SLAB_POINTS", 300)
        _, sliced, _ = zeros.scan_candidates(p, res)
        monkeypatch.setattr(zeros, "SLAB_POINTS", 1_000_000)
        assert set(map(tuple, whole)) == set(map(tuple, sliced))


def test_grid_size_limit():
    factors = tuple(DomainFactor.circle(n) for n in "abcde")
    p = ZeroProblem(lambda a: list(a), factors, 5, SolverConfig(grid=64))
    with pytest.raises(ValidationError):
        find_zeros_0d(p)
