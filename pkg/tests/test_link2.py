import math

import numpy as np
import pytest

from linkcalc.errors import DimensionError, EndpointNotLink, NotALinkMap, ValidationError
from linkcalc.expr import parse_maps
from linkcalc.link2 import (HomotopyPath, LinkPair, double_points, linking_manifold,
                            linking_number_via_separation, lk_all, lk_via_gauss_quadrature,
                            lk_via_ray, lk_via_regular_value, perturb_map, reparametrize,
                            separation_homotopy)

MAPS = parse_maps("""
c1(x: circle) -> 3 = (cos(x), sin(x), 0)
hopf2(y: circle) -> 3 = (1 + cos(y), 0, sin(y))
far(y: circle) -> 3 = (4 + cos(y), sin(y), 0)
high(y: circle) -> 3 = (cos(y), sin(y), 10)
inner(y: circle) -> 3 = (0.5*cos(y), 0.5*sin(y), 0)
t1(x: circle) -> 3 = ((2 + cos(2*x))*cos(x), (2 + cos(2*x))*sin(x), sin(2*x))
t2(y: circle) -> 3 = ((2 - cos(2*y))*cos(y), (2 - cos(2*y))*sin(y), -sin(2*y))
p1(x: circle) -> 2 = (cos(x), sin(x))
p2(y: circle) -> 2 = (1 + cos(y), sin(y))
b1(x: circle) -> 3 = (0, 2*cos(x), sin(x))
b3(z: circle) -> 3 = (2*cos(z), sin(z), 0)
c1t(x: circle, t: interval 0 1) -> 3 = (cos(x), sin(x), 0)
hopf2t(y: circle, t: interval 0 1) -> 3 = (1 + cos(y) + 5*t, 0, sin(y))
far_t(y: circle, t: interval 0 1) -> 3 = (4 + cos(y), sin(y), 0)
t1t(x: circle, t: interval 0 1) -> 3 = ((2 + cos(2*x))*cos(x), (2 + cos(2*x))*sin(x), sin(2*x))
t2t(y: circle, t: interval 0 1) -> 3 = ((2 - cos(2*y))*cos(y), (2 - cos(2*y))*sin(y), -sin(2*y) + 6*t)
shrink(y: circle, t: interval 0 1) -> 3 = (1 + cos(y) - t, 0, sin(y))
""")


def pair(a, b, oriented=(True, True)):
    return LinkPair(MAPS[a], MAPS[b], oriented)


HOPF = pair("c1", "hopf2")


# -- double points -------------------------------------------------------------

def test_plane_circles_meet_twice():
    res = double_points(pair("p1", "p2"))
    assert res.dimension == 0
    assert res.count == 2
    for p in res.points:
        x, y = p.coords
        np.testing.assert_allclose(MAPS["p1"].eval([x]), MAPS["p2"].eval([y]), atol=1e-10)


def test_borromean_pair_has_no_double_points():
    assert double_points(pair("b1", "b3")).is_empty


def test_concentric_circles_disjoint():
    assert double_points(pair("c1", "inner")).is_empty


def test_mismatched_targets_rejected():
    with pytest.raises(DimensionError):
        LinkPair(MAPS["p1"], MAPS["c1"])


# -- the three linking numbers -------------------------------------------------

@pytest.mark.parametrize("a,b,expected", [
    ("c1", "hopf2", -1),
    ("c1", "far", 0),
    ("t1", "t2", -2),
    ("b1", "b3", 0),
])
def test_three_methods_agree(a, b, expected):
    out = lk_all(pair(a, b))
    assert out["ray"] == expected
    assert out["regular"] == expected
    assert out["gauss_rounded"] == expected
    assert out["gauss_error"] < 1e-2


def test_ray_stacked_circles_along_axis():
    val, pts, _ = lk_via_ray(pair("c1", "high"), direction=[0, 0, 1], return_points=True)
    assert val == 0 and pts == []


def test_gauss_split_pair_is_zero():
    assert abs(lk_via_gauss_quadrature(pair("c1", "far"))) < 1e-3


def test_ray_independent_of_seed():
    assert {lk_via_ray(HOPF, seed=s) for s in range(4)} == {-1}
    assert {lk_via_regular_value(HOPF, seed=s) for s in range(4)} == {-1}


def test_swapping_components_keeps_value():
    for a, b in (("c1", "hopf2"), ("t1", "t2")):
        p = pair(a, b)
        q = p.swapped()
        assert lk_via_ray(p) == lk_via_ray(q)
        assert lk_via_regular_value(p) == lk_via_regular_value(q)
        assert math.isclose(lk_via_gauss_quadrature(p), lk_via_gauss_quadrature(q),
                            abs_tol=1e-9)


def test_unoriented_component_reports_mod2():
    p = pair("c1", "hopf2", oriented=(True, False))
    assert p.ring == "Z/2"
    assert lk_via_ray(p) == 1
    assert lk_via_regular_value(p) == 1
    q = pair("t1", "t2", oriented=(False, True))
    assert lk_via_ray(q) == 0


def test_intersecting_components_are_not_a_link():
    with pytest.raises(NotALinkMap):
        lk_via_ray(LinkPair(MAPS["c1"], MAPS["c1"]))


def test_wrong_dimensions_for_linking_number():
    with pytest.raises(DimensionError):
        lk_via_ray(pair("p1", "p2"))


# -- linking manifolds ---------------------------------------------------------

def test_constant_path_on_split_pair_is_empty():
    path = HomotopyPath(MAPS["c1t"], MAPS["far_t"], basepoint=pair("c1", "far"))
    res = linking_manifold(path)
    assert res.is_empty and res.signed_count == 0


def test_translation_pulls_hopf_apart_once():
    path = HomotopyPath(MAPS["c1t"], MAPS["hopf2t"], basepoint=HOPF)
    res = linking_manifold(path)
    assert res.count == 1
    assert abs(res.signed_count) == 1
    x1, x2, t = res.points[0].coords
    assert math.isclose(t, 0.2, abs_tol=1e-9)
    w = res.witness_paths[0]
    np.testing.assert_allclose(w[0], MAPS["c1"].eval([x1]), atol=1e-12)
    np.testing.assert_allclose(w[-1], MAPS["hopf2"].eval([x2]), atol=1e-12)
    np.testing.assert_allclose(w[len(w) // 2], MAPS["c1"].eval([x1]), atol=1e-9)


def test_translation_pulls_torus_link_apart_twice():
    path = HomotopyPath(MAPS["t1t"], MAPS["t2t"], basepoint=pair("t1", "t2"))
    res = linking_manifold(path)
    assert abs(res.signed_count) == 2


def test_endpoint_must_be_a_link():
    # at t = 1 the second circle passes through the first one
    path = HomotopyPath(MAPS["c1t"], MAPS["shrink"])
    with pytest.raises(EndpointNotLink):
        linking_manifold(path)


def test_declared_endpoint_must_match():
    with pytest.raises(ValidationError):
        HomotopyPath(MAPS["c1t"], MAPS["hopf2t"], basepoint=pair("c1", "far"))


# -- separation homotopy -------------------------------------------------------

def test_separation_of_split_pair_is_empty():
    assert linking_number_via_separation(pair("c1", "far"), seed=3).is_empty


def test_separation_matches_ray_on_hopf():
    res = linking_number_via_separation(HOPF, seed=1)
    assert res.signed_count == lk_via_ray(HOPF)


def test_two_separation_seeds_agree():
    p = pair("t1", "t2")
    a = linking_number_via_separation(p, seed=1).signed_count
    b = linking_number_via_separation(p, seed=7).signed_count
    assert a == b == -2


def test_separation_ends_in_disjoint_points():
    hp = separation_homotopy(HOPF, seed=5)
    a, b = hp.pair_at(1.0).f1, hp.pair_at(1.0).f2
    U = a.sample_points(16)
    A, B = a.eval_batch(U), b.eval_batch(U)
    assert np.ptp(A, axis=0).max() < 1e-12 and np.ptp(B, axis=0).max() < 1e-12
    assert np.linalg.norm(A[0] - B[0]) > 2.0
    np.testing.assert_allclose(hp.pair_at(0.0).f2.eval_batch(U), MAPS["hopf2"].eval_batch(U),
                               atol=1e-12)


# -- perturbation and reparametrisation ----------------------------------------

def test_perturbation_is_bounded_and_seeded():
    m = MAPS["hopf2"]
    a = perturb_map(m, 0.05, seed=4)
    b = perturb_map(m, 0.05, seed=4)
    U = m.sample_points(64)
    d = a.eval_batch(U) - m.eval_batch(U)
    assert np.abs(d).max() <= 0.05 + 1e-12
    np.testing.assert_array_equal(a.eval_batch(U), b.eval_batch(U))
    assert lk_via_ray(LinkPair(MAPS["c1"], a)) == -1


def test_reparametrisation_preserves_and_reverse_negates():
    kept = LinkPair(MAPS["c1"], reparametrize(MAPS["hopf2"], bend=0.3))
    flipped = LinkPair(reparametrize(MAPS["c1"], bend=0.0, reverse=True), MAPS["hopf2"])
    assert lk_all(kept)["ray"] == -1
    out = lk_all(flipped)
    assert out["ray"] == out["regular"] == out["gauss_rounded"] == 1
