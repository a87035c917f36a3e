import random

import pytest

from ecolang import messages as m
from ecolang.simstub.regions import RegionError, RegionStore, angle_in_sweep, cells_in_region, simple_cells

from .generators import random_shape
from .oracles import brute_cells, in_sweep

P = m.Point


def land(*shapes):
    return m.Concrete(m.Land(), shapes)


def test_point_origin():
    assert simple_cells(P(0, 0), 10, 10) == {0}


def test_rect_two_by_two():
    assert simple_cells(m.Rect(P(0, 0), P(1, 1)), 10, 10) == {0, 1, 10, 11}


def test_rect_corners_any_order():
    assert simple_cells(m.Rect(P(1, 1), P(0, 0)), 10, 10) == {0, 1, 10, 11}


def test_zero_radius_circle():
    assert simple_cells(m.Circle(P(5, 5), 0.0), 10, 10) == {55}


def test_unit_circle_is_a_plus():
    assert simple_cells(m.Circle(P(5, 5), 1.0), 10, 10) == {45, 54, 55, 56, 65}


def test_out_of_bounds_is_clipped():
    assert simple_cells(P(10, 0), 10, 10) == set()
    assert simple_cells(m.Rect(P(-3, -3), P(0, 1)), 10, 10) == {0, 10}


def test_diamond_square_includes_boundary():
    diamond = m.Square(P(2, 0), P(4, 2), P(2, 4), P(0, 2))
    expected = {2, 11, 12, 13, 20, 21, 22, 23, 24, 31, 32, 33, 42}
    assert simple_cells(diamond, 5, 10) == expected


def test_quarter_arc():
    arc = m.Arc(P(0, 0), 1.0, 2.0, 0.0, 90.0)
    assert simple_cells(arc, 5, 5) == {1, 2, 5, 6, 10}


def test_arc_centre_only_with_zero_inner_radius():
    assert 0 in simple_cells(m.Arc(P(0, 0), 0.0, 1.0, 0.0, 90.0), 5, 5)
    assert 0 not in simple_cells(m.Arc(P(0, 0), 0.5, 1.0, 0.0, 90.0), 5, 5)


def test_arc_with_inverted_radii_is_empty():
    assert simple_cells(m.Arc(P(2, 2), 3.0, 1.0, 0.0, 360.0), 5, 5) == set()


@pytest.mark.parametrize(
    "theta, a1, a2, inside",
    [
        (0, 350, 10, True),
        (180, 350, 10, False),
        (10, 0, 10, True),
        (-90, 0, 360, True),
        (60, 90, 45, False),
        (45, 90, 45, True),
        (45, 45, 45, True),
        (200, -180, -90, True),
        (100, 0, 720, True),
    ],
)
def test_angle_sweep(theta, a1, a2, inside):
    assert angle_in_sweep(theta, a1, a2) is inside
    assert in_sweep(theta, a1, a2) is inside


def test_random_shapes_match_oracle():
    rng = random.Random(20240)
    for _ in range(400):
        lines, columns = rng.randint(1, 20), rng.randint(1, 20)
        shape = random_shape(rng, lines, columns)
        assert simple_cells(shape, lines, columns) == brute_cells([shape], lines, columns), shape


def test_concrete_union():
    body = land(P(0, 0), m.Rect(P(2, 0), P(3, 0)))
    assert cells_in_region(body, 4, 4) == {0, 2, 3}


# -- store --------------------------------------------------------------------


def test_store_composite_resolution():
    store = RegionStore()
    store.define("a", land(P(0, 0)))
    store.define("b", land(P(1, 0)))
    store.define("ab", m.Composite(("a", "b")))
    assert store.cells("ab", 4, 4) == {0, 1}
    assert store.names() == ["a", "b", "ab"]


def test_store_rejects_unknown_part():
    store = RegionStore()
    with pytest.raises(RegionError):
        store.define("x", m.Composite(("nope",)))
    assert "x" not in store


def test_store_rejects_cycles():
    store = RegionStore()
    store.define("a", land(P(0, 0)))
    store.define("b", m.Composite(("a",)))
    with pytest.raises(RegionError):
        store.define("a", m.Composite(("b",)))
    with pytest.raises(RegionError):
        store.define("c", m.Composite(("c",)))


def test_redefine_replaces():
    store = RegionStore()
    store.define("a", land(P(0, 0)))
    store.define("a", land(P(1, 0)))
    assert store.cells("a", 2, 2) == {1}


def test_delete_referenced_region_fails_atomically():
    store = RegionStore()
    store.define("a", land(P(0, 0)))
    store.define("z", land(P(1, 1)))
    store.define("b", m.Composite(("a",)))
    with pytest.raises(RegionError):
        store.delete(["z", "a"])
    assert store.names() == ["a", "z", "b"]
    store.delete(["a", "b"])
    assert store.names() == ["z"]


def test_delete_unknown_fails():
    store = RegionStore()
    with pytest.raises(RegionError):
        store.delete(["ghost"])
