import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qradon import (
    ClipError,
    StripImage,
    backproject,
    digital_line_closed,
    digital_line_recursive,
    dot,
    dual_line_closed,
    dual_line_recursive,
    forward,
    line_indicator,
    make_delta,
    SquareImage,
    values_equal,
)


def test_base_case_single_point():
    for ell in range(4):
        line = digital_line_recursive(2, 0, ell, 5, 0)
        assert line.points == [(5, ell)]


@pytest.mark.parametrize("h", [-3, 0, 2])
def test_recursion_level_one(h):
    flat = digital_line_recursive(1, 1, 0, h, 0)
    assert flat.points == [(h, 0), (h, 1)]
    steep = digital_line_recursive(1, 1, 0, h, 1)
    assert steep.points == [(h, 0), (h + 1, 1)]


def test_recursion_maximal_slope_is_diagonal():
    line = digital_line_recursive(2, 2, 0, -1, 3)
    assert line.points == [(-1, 0), (0, 1), (1, 2), (2, 3)]


def test_recursion_bounds():
    with pytest.raises(ValueError):
        digital_line_recursive(2, 3, 0, 0, 0)
    with pytest.raises(ValueError):
        digital_line_recursive(2, 1, 2, 0, 0)
    with pytest.raises(ValueError):
        digital_line_recursive(2, 1, 0, 0, 2)


def test_closed_form_zero_slope_constant():
    line = digital_line_closed(3, 4, 0)
    assert set(line.heights.tolist()) == {4}


def test_closed_form_examples():
    diag = digital_line_closed(2, 0, 3)
    np.testing.assert_array_equal(np.diff(diag.heights), [1, 1, 1])
    one = digital_line_closed(1, 7, 1)
    assert one.points == [(7, 0), (8, 1)]


@pytest.mark.parametrize("n", range(5))
def test_closed_equals_recursive_exhaustive(n):
    N = 1 << n
    for h in range(-N, N + 1):
        for s in range(N):
            closed = digital_line_closed(n, h, s)
            rec = digital_line_recursive(n, n, 0, h, s)
            np.testing.assert_array_equal(closed.heights, rec.heights)


@pytest.mark.parametrize("n", range(5))
def test_dual_closed_equals_dual_recursive(n):
    # the closed dual is anchored at k(0) = h, descending by the same rises
    N = 1 << n
    for h in range(-N, N + 1):
        for s in range(N):
            closed = dual_line_closed(n, h, s)
            rec = dual_line_recursive(n, n, 0, h, s)
            np.testing.assert_array_equal(closed.heights, rec.heights)


@pytest.mark.parametrize("h", [-2, 0, 3])
def test_dual_level_one(h):
    flat = dual_line_recursive(1, 1, 0, h, 0)
    assert flat.points == [(h, 0), (h, 1)]
    steep = dual_line_recursive(1, 1, 0, h, 1)
    assert steep.points == [(h, 0), (h - 1, 1)]


@pytest.mark.parametrize("n", range(4))
def test_duality_membership(n):
    # (i, j) lies on the line [h|s] exactly when (h, s) lies on the dual [i|j]
    N = 1 << n
    for h in range(-N, N):
        for s in range(N):
            line = digital_line_closed(n, h, s)
            for i in range(-N, 2 * N):
                for j in range(N):
                    on_line = line.heights[j] == i
                    dual = dual_line_closed(n, i, j)
                    on_dual = dual.heights[s] == h
                    assert on_line == on_dual


@given(
    n=st.integers(0, 5),
    h=st.integers(-40, 40),
    data=st.data(),
)
def test_monotone_increments_and_total_rise(n, h, data):
    s = data.draw(st.integers(0, (1 << n) - 1))
    line = digital_line_closed(n, h, s)
    diffs = np.diff(line.heights)
    assert set(diffs.tolist()) <= {0, 1}
    assert line.heights[-1] - line.heights[0] == s
    dual = dual_line_closed(n, h, s)
    np.testing.assert_array_equal(np.diff(dual.heights), -diffs)


def test_line_indicator_dot_with_ones():
    ind = line_indicator(digital_line_closed(1, 0, 1))
    ones = StripImage(1, ind.h_lo, ind.h_hi, "sino", np.ones_like(ind.data))
    assert dot(ind, ones) == 2


def test_line_indicator_window_too_small():
    line = digital_line_closed(2, 0, 3)
    with pytest.raises(ClipError):
        line_indicator(line, 0, 3)


def test_indicator_of_dual_equals_forward_of_delta():
    n = 2
    for i in range(1 << n):
        for j in range(1 << n):
            ind = line_indicator(dual_line_recursive(n, n, 0, i, j))
            assert values_equal(ind, forward(make_delta_square(n, i, j)))


def test_indicator_of_line_equals_backprojection_of_delta():
    n = 2
    N = 1 << n
    for h in range(-(N - 1), N):
        for s in range(N):
            ind = line_indicator(digital_line_closed(n, h, s))
            assert values_equal(ind, backproject(make_delta(n, h, s), n))


def make_delta_square(n, i, j):
    data = np.zeros((1 << n, 1 << n), dtype=np.int64)
    data[i, j] = 1
    return SquareImage(n, data)
