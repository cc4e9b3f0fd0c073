import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linkcalc.errors import (DSLSyntaxError, DimensionError, DomainError, PeriodicityViolation,
                             UnknownIdentifier, ValidationError)
from linkcalc.expr import DomainFactor, parse_expression, parse_map, parse_maps, to_text
from linkcalc.expr import dual
from linkcalc.expr.parser import Num, tokenize

from conftest import fd_jacobian


def test_parse_circle_map():
    f = parse_map("f1(x: circle) -> 3 = (0, 2*cos(x), sin(x))")
    assert f.name == "f1" and f.k == 1 and f.dim == 3
    assert f.domain[0].is_circle and f.domain[0].upper == pytest.approx(2 * math.pi)
    np.testing.assert_allclose(f.eval([0.0]), [0.0, 2.0, 0.0], atol=1e-15)


def test_interval_factor_and_pi_bounds():
    g = parse_map("g(y: circle, t: interval 0 4) -> 3 = (cos(y), t, 2*sin(y))")
    assert g.domain[1].lower == 0.0 and g.domain[1].upper == 4.0
    h = parse_map("h(a: interval -pi (pi/2)) -> 1 = (a)")
    assert h.domain[0].lower == pytest.approx(-math.pi)
    assert h.domain[0].upper == pytest.approx(math.pi / 2)


def test_whitespace_insensitive():
    a = parse_map("f(x:circle)->2=(cos(x),sin(x))")
    b = parse_map("  f ( x : circle ) -> 2 = ( cos ( x ) , sin ( x ) )  ")
    assert a.to_text() == b.to_text()


def test_constant_folding():
    node = parse_expression("2*3 + sin(0) - pi/pi")
    assert isinstance(node, Num) and node.value == pytest.approx(5.0)


def test_precedence_and_unary_minus():
    node = parse_expression("-x^2 + 2*x*3")
    f = parse_map("f(x: interval -3 3) -> 1 = (-x^2 + 2*x*3)")
    assert f.eval([2.0])[0] == pytest.approx(-4 + 12)
    assert "x" in to_text(node)


def test_print_parse_round_trip_exact():
    f = parse_map("G(z: circle, y: circle, s: interval 0 1, t: interval 0 4) -> 6 = "
                  "(2*cos(z), sin(z), 0, cos(y), t, 2*sin(y) + s*(-(t-2)^2 + 4))")
    g = parse_map(f.to_text())
    assert g.to_text() == f.to_text()
    U = f.sample_points(5)
    np.testing.assert_array_equal(f.eval_batch(U), g.eval_batch(U))


@pytest.mark.parametrize("text, offset", [
    ("f(x: circle) -> 2 = (cos(x), )", 29),
    ("f(x: circle) -> 2 = (cos(x) sin(x))", 28),
    ("f(x: circle) 2 = (x, x)", 13),
])
def test_syntax_error_offsets(text, offset):
    with pytest.raises(DSLSyntaxError) as err:
        parse_map(text)
    assert err.value.offset == offset


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as err:
        parse_map("f(x: circle) -> 1 = (cos(y))")
    assert err.value.name == "y"
    with pytest.raises(UnknownIdentifier):
        parse_map("f(x: circle) -> 1 = (tan(x))")


def test_reserved_and_duplicate_names():
    with pytest.raises(DSLSyntaxError):
        parse_map("f(pi: circle) -> 1 = (pi)")
    with pytest.raises(DSLSyntaxError):
        parse_map("f(x: circle, x: circle) -> 1 = (x)")


def test_dimension_mismatch_is_syntax_error():
    with pytest.raises(DSLSyntaxError):
        parse_map("f(x: circle) -> 3 = (cos(x), sin(x))")


def test_periodicity_violation():
    with pytest.raises(PeriodicityViolation) as err:
        parse_map("f(x: circle) -> 2 = (x, sin(x))")
    assert err.value.factor == "x"
    # non-integer frequency is not periodic either
    with pytest.raises(PeriodicityViolation):
        parse_map("f(x: circle) -> 1 = (cos(x/2))")
    # custom period
    parse_map("f(x: circle 1) -> 1 = (cos(2*pi*x))")


def test_duplicate_map_names():
    with pytest.raises(ValidationError):
        parse_maps("f(x: circle) -> 1 = (cos(x))\nf(y: circle) -> 1 = (sin(y))")


def test_comments_and_blank_lines():
    maps = parse_maps("# header\n\nf(x: circle) -> 1 = (cos(x))  # trailing\n")
    assert list(maps) == ["f"]


def test_division_by_zero_raises_domain_error():
    f = parse_map("f(a: interval -1 1) -> 1 = (1/a)")
    with pytest.raises(DomainError):
        f.eval([0.0])


def test_sqrt_negative_raises_domain_error():
    f = parse_map("f(a: interval -1 1) -> 1 = (sqrt(a))")
    with pytest.raises(DomainError):
        f.eval([-0.5])


def test_domain_factor_validation():
    with pytest.raises(ValidationError):
        DomainFactor.interval("t", 1.0, 0.0)
    with pytest.raises(ValidationError):
        DomainFactor.circle("x", -1.0)


def test_tokenizer_offsets():
    toks = tokenize("a + 2.5e-1")
    assert [t.offset for t in toks if t.kind != "eof"] == [0, 2, 4]


# -- automatic differentiation ----------------------------------------------------

def test_dual_rules():
    x = dual.seed([np.array([0.3]), np.array([1.2])])
    f = dual.sin(x[0]) * x[1] + dual.exp(x[0] * x[1]) - dual.sqrt(x[1]) / x[0]
    a, b = 0.3, 1.2
    want = [math.cos(a) * b + b * math.exp(a * b) + math.sqrt(b) / a ** 2,
            math.sin(a) + a * math.exp(a * b) - 0.5 / (math.sqrt(b) * a)]
    np.testing.assert_allclose(f.grad[:, 0], want, rtol=1e-13)


def test_jacobian_batch_matches_single():
    f = parse_map("f(x: circle, y: circle) -> 2 = (cos(x)*sin(y), exp(sin(x + y)))")
    U = f.sample_points(6)
    Jb = f.jacobian_batch(U)
    for u, J in zip(U, Jb):
        np.testing.assert_allclose(f.jacobian(u), J, rtol=1e-14)


def test_jacobian_vs_finite_differences_builtin_family():
    H = parse_map("H(y: circle, t: interval 0 4, s: interval 0 1) -> 3 = "
                  "(cos(y), t, 2*sin(y) + s*(-(t-2)^2 + 4))")
    rng = np.random.default_rng(3)
    for _ in range(20):
        u = np.array([rng.uniform(0, 2 * math.pi), rng.uniform(0.1, 3.9), rng.uniform(0.1, 0.9)])
        np.testing.assert_allclose(H.jacobian(u), fd_jacobian(H, u), atol=1e-7)


def test_wrapping_of_circle_arguments():
    f = parse_map("f(x: circle) -> 1 = (sin(x))")
    np.testing.assert_allclose(f.eval([0.4 + 4 * math.pi]), f.eval([0.4]), atol=1e-14)


def test_restrict_and_reorder():
    g = parse_map("g(y: circle, t: interval 0 4) -> 3 = (cos(y), t, 2*sin(y))")
    r = g.restrict("t", 4.0)
    np.testing.assert_allclose(r.eval([0.7]), g.eval([0.7, 4.0]))
    o = g.reorder(["t", "y"])
    np.testing.assert_allclose(o.eval([1.5, 0.7]), g.eval([0.7, 1.5]))
    with pytest.raises(UnknownIdentifier):
        g.restrict("q", 0.0)


# -- properties ---------------------------------------------------------------------

_leaf = st.one_of(st.sampled_from(["x", "y"]),
                  st.integers(min_value=-5, max_value=5).map(str),
                  st.floats(min_value=0.1, max_value=3.0).map(lambda v: f"{v:.3f}"))


def _compose(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(
            lambda t: f"({t[0]} {t[1]} {t[2]})"),
        st.tuples(st.sampled_from(["sin", "cos"]), children).map(lambda t: f"{t[0]}({t[1]})"),
        st.tuples(children, st.integers(min_value=0, max_value=3)).map(
            lambda t: f"({t[0]})^{t[1]}"),
        children.map(lambda c: f"-{c}"),
    )


expressions = st.recursive(_leaf, _compose, max_leaves=8)


@settings(max_examples=60, deadline=None)
@given(expressions)
def test_round_trip_property(text):
    f = parse_map(f"f(x: interval -1 1, y: interval -1 1) -> 1 = ({text})")
    g = parse_map(f.to_text())
    assert g.to_text() == f.to_text()
    U = np.array([[0.3, -0.4], [-0.7, 0.9]])
    np.testing.assert_allclose(f.eval_batch(U), g.eval_batch(U), rtol=1e-12, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(expressions, st.floats(min_value=-0.9, max_value=0.9),
       st.floats(min_value=-0.9, max_value=0.9))
def test_ad_matches_finite_differences_property(text, a, b):
    f = parse_map(f"f(x: interval -1 1, y: interval -1 1) -> 1 = ({text})")
    u = np.array([a, b])
    J = f.jacobian(u)
    scale = max(1.0, float(np.max(np.abs(J))), float(np.max(np.abs(f.eval(u)))))
    assert np.max(np.abs(J - fd_jacobian(f, u))) <= 1e-6 * scale
