import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisenphase.core import (
    DimensionError,
    GroupElement,
    Params,
    PhasePoint,
    automorphism_A,
    automorphism_matrix,
    complexify,
    decomplexify,
    group_inv,
    group_mul,
    map_B,
    map_B_inv,
    symplectic_form,
)

coord = st.floats(-10, 10, allow_nan=False)


def elements(n=1):
    vec = st.lists(coord, min_size=n, max_size=n)
    return st.builds(GroupElement, coord, vec, vec)


def close(g, h, tol=1e-9):
    return np.allclose(g.as_tuple(), h.as_tuple(), atol=tol)


@pytest.mark.parametrize(
    "p1, p2, expected",
    [
        (((1,), (0,)), ((0,), (1,)), 1.0),
        (((2,), (3,)), ((2,), (3,)), 0.0),
        (((2,), (3,)), ((5,), (7,)), -1.0),
    ],
)
def test_symplectic_form_values(p1, p2, expected):
    assert symplectic_form(PhasePoint(*p1), PhasePoint(*p2)) == pytest.approx(expected)


def test_group_mul_picks_up_half_the_form():
    g = group_mul(GroupElement(0, [1], [0]), GroupElement(0, [0], [1]))
    assert g.as_tuple() == pytest.approx((0.5, 1.0, 1.0))


def test_group_mul_doubles_diagonal_element():
    g = GroupElement(1, [1], [1])
    assert (g * g).as_tuple() == pytest.approx((2.0, 2.0, 2.0))


def test_group_inv_value():
    assert group_inv(GroupElement(1, [2], [3])).as_tuple() == pytest.approx((-1, -2, -3))


@given(elements())
def test_inverse_gives_identity(g):
    assert close(g * group_inv(g), GroupElement.identity())
    assert close(group_inv(group_inv(g)), g)


@given(elements(2), elements(2), elements(2))
def test_associativity(a, b, c):
    assert close((a * b) * c, a * (b * c), tol=1e-7)


@given(st.lists(coord, min_size=6, max_size=6), st.floats(-3, 3))
def test_form_bilinear_and_antisymmetric(v, lam):
    p, q, r = PhasePoint([v[0]], [v[1]]), PhasePoint([v[2]], [v[3]]), PhasePoint([v[4]], [v[5]])
    assert symplectic_form(p, q) == pytest.approx(-symplectic_form(q, p))
    combo = PhasePoint(lam * p.x + r.x, lam * p.y + r.y)
    assert symplectic_form(combo, q) == pytest.approx(lam * symplectic_form(p, q) + symplectic_form(r, q), abs=1e-8)


def test_automorphism_value():
    g = automorphism_A(GroupElement(0, [1, 0], [0, 0]), 1.0)
    assert g.as_tuple() == pytest.approx((0.0, 0.0, 0.5, 1.0, 0.0))


@pytest.mark.parametrize("upsilon", [0.5, 1.0, math.sqrt(2.0), 2.0])
def test_automorphism_preserves_form(upsilon):
    rng = np.random.default_rng(3)
    for _ in range(10):
        p, q = rng.normal(size=4), rng.normal(size=4)
        mat = automorphism_matrix(upsilon)
        assert symplectic_form(mat @ p, mat @ q) == pytest.approx(symplectic_form(p, q), abs=1e-12)


@settings(max_examples=50)
@given(elements(2), elements(2), st.sampled_from([0.5, 1.0, 2.0]))
def test_automorphism_is_homomorphism(a, b, upsilon):
    lhs = automorphism_A(a * b, upsilon)
    rhs = automorphism_A(a, upsilon) * automorphism_A(b, upsilon)
    assert close(lhs, rhs, tol=1e-6)


@pytest.mark.parametrize(
    "point, upsilon, expected",
    [([1, 2, 3, 4], 1.0, [1, 3, 4, 2]), ([0, 4, 0, 1], 2.0, [0, 0, 2, 2])],
)
def test_map_B_values(point, upsilon, expected):
    assert map_B(point, upsilon) == pytest.approx(expected)


@given(st.lists(coord, min_size=4, max_size=4), st.floats(0.1, 10))
def test_map_B_round_trip(p, upsilon):
    assert map_B_inv(map_B(p, upsilon), upsilon) == pytest.approx(p, abs=1e-9)


def test_complexify_value():
    params = Params(hbar=1 / (2 * math.pi), tau=1.0)
    z = complexify(PhasePoint([1], [0]), params)
    assert z[0] == pytest.approx(1 / math.sqrt(2))


@given(coord, coord, st.floats(0.25, 4))
def test_complexify_round_trip(x, y, tau):
    params = Params(hbar=1.0, tau=tau)
    back = decomplexify(complexify(PhasePoint([x], [y]), params), params)
    assert back.x[0] == pytest.approx(x, abs=1e-9)
    assert back.y[0] == pytest.approx(y, abs=1e-9)


def test_mixed_dimensions_rejected():
    with pytest.raises(DimensionError):
        GroupElement(0, [1], [0]) * GroupElement(0, [1, 0], [0, 0])
    with pytest.raises(DimensionError):
        symplectic_form([1, 2], [1, 2, 3, 4])
    with pytest.raises(DimensionError):
        automorphism_A(GroupElement(0, [1], [0]), 1.0)


def test_params_validation():
    with pytest.raises(ValueError):
        Params(hbar=0.0)
    with pytest.raises(ValueError):
        Params(tau=-1.0)
