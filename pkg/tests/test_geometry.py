import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from figlabel.geometry import BBox, Point, center, enclosing_box, iou, solve_assignment
from oracles import brute_assignment


@st.composite
def boxes(draw, lo=-50.0, hi=50.0):
    x1 = draw(st.floats(lo, hi))
    y1 = draw(st.floats(lo, hi))
    w = draw(st.floats(0.5, 40.0))
    h = draw(st.floats(0.5, 40.0))
    return BBox(x1, y1, x1 + w, y1 + h)


def test_iou_examples():
    assert iou(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10)) == 1.0
    assert iou(BBox(0, 0, 10, 10), BBox(20, 20, 30, 30)) == 0.0
    # intersection 50, union 150
    assert iou(BBox(0, 0, 10, 10), BBox(5, 0, 15, 10)) == pytest.approx(1 / 3)


def test_touching_boxes_do_not_overlap():
    assert iou(BBox(0, 0, 10, 10), BBox(10, 0, 20, 10)) == 0.0


@pytest.mark.parametrize("box, expected", [
    ((0, 0, 10, 10), (5, 5)),
    ((2, 4, 6, 8), (4, 6)),
    ((0, 0, 1, 3), (0.5, 1.5)),
])
def test_center(box, expected):
    assert center(BBox(*box)) == Point(*expected)


def test_enclosing_box():
    assert enclosing_box([BBox(0, 0, 2, 2)]) == BBox(0, 0, 2, 2)
    assert enclosing_box([BBox(0, 0, 2, 2), BBox(5, 1, 6, 7)]) == BBox(0, 0, 6, 7)
    assert enclosing_box([BBox(1, 1, 2, 2), BBox(0, 3, 1.5, 4)]) == BBox(0, 1, 2, 4)
    assert enclosing_box([Point(0, 0), Point(3, 2)]) == BBox(0, 0, 3, 2)


def test_enclosing_box_empty():
    with pytest.raises(ValueError, match="empty geometry set"):
        enclosing_box([])


@pytest.mark.parametrize("coords", [(0, 0, 0, 5), (3, 0, 1, 5), (0, math.nan, 1, 1)])
def test_invalid_boxes_rejected(coords):
    with pytest.raises(ValueError):
        BBox(*coords)


@given(boxes(), boxes())
def test_iou_symmetric_and_bounded(a, b):
    assert iou(a, b) == iou(b, a)
    assert 0.0 <= iou(a, b) <= 1.0


@given(boxes())
def test_iou_self_is_one(a):
    assert iou(a, a) == pytest.approx(1.0, abs=1e-12)


@given(st.lists(boxes(), min_size=1, max_size=8))
def test_enclosing_box_contains_inputs(bs):
    env = enclosing_box(bs)
    assert all(env.contains(b) for b in bs)


def test_assignment_examples():
    a = solve_assignment([[1, 2], [2, 4]])
    assert set(a.pairs) == {(0, 1), (1, 0)}
    assert a.total_cost == 4

    a = solve_assignment([[0]])
    assert a.pairs == ((0, 0),) and a.total_cost == 0

    # brute force over the 6 injections of 2 columns into 3 rows gives 8,
    # reached by both {(0,0),(1,1)} and {(0,1),(1,0)}
    a = solve_assignment([[5, 1], [7, 3], [9, 9]])
    assert a.total_cost == 8
    assert a.pairs == ((0, 0), (1, 1))


def test_assignment_rejects_non_finite():
    with pytest.raises(ValueError, match="invalid cost"):
        solve_assignment([[1.0, math.inf]])
    with pytest.raises(ValueError):
        solve_assignment([[]])


@pytest.mark.parametrize("shape, expected", [
    ((3, 3), ((0, 0), (1, 1), (2, 2))),
    ((3, 2), ((0, 0), (1, 1))),
    ((2, 3), ((0, 0), (1, 1))),
])
def test_assignment_ties_are_lexicographic(shape, expected):
    zeros = [[0] * shape[1] for _ in range(shape[0])]
    assert solve_assignment(zeros).pairs == expected


matrices = st.integers(1, 6).flatmap(
    lambda r: st.integers(1, 7 if r <= 6 else 6).flatmap(
        lambda c: st.lists(st.lists(st.integers(0, 9), min_size=c, max_size=c),
                           min_size=r, max_size=r)))


@given(matrices)
def test_assignment_matches_brute_force(cost):
    a = solve_assignment(cost)
    total, pairs = brute_assignment(cost)
    assert a.total_cost == total
    assert a.pairs == pairs
    assert len(a.pairs) == min(len(cost), len(cost[0]))
    assert len({r for r, _ in a.pairs}) == len(a.pairs) == len({c for _, c in a.pairs})


@given(st.lists(st.lists(st.floats(0, 1e3), min_size=4, max_size=4), min_size=5, max_size=5))
def test_assignment_float_costs(cost):
    a = solve_assignment(cost)
    total, _ = brute_assignment(cost)
    assert a.total_cost == pytest.approx(total, rel=1e-9, abs=1e-9)
    assert a.total_cost == sum(cost[r][c] for r, c in a.pairs)
