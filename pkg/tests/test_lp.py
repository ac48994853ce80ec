import pytest
from fractions import Fraction
from autobid import lp

HALF = Fraction(1, 2)


def test_feasible_point():
    x = lp.feasible_point([[1, 1], [1, -1]], [1, 0])
    assert x == [HALF, HALF]


def test_feasible_point_negative_rhs():
    x = lp.feasible_point([[-1, -1]], [-2])
    assert sum(x) == 2
    assert all(v >= 0 for v in x)


def test_feasible_point_infeasible():
    assert lp.feasible_point([[1], [1]], [1, 2]) is None


def test_feasible_point_nonnegativity():
    assert lp.feasible_point([[1, 1]], [-1]) is None


def test_feasible_point_redundant_rows():
    x = lp.feasible_point([[1, 1, 0], [1, 1, 0], [0, 1, 1]], [1, 1, 1])
    assert x[0] + x[1] == 1
    assert x[1] + x[2] == 1


def test_feasible_point_without_rows():
    assert lp.feasible_point([], [], size=3) == [0, 0, 0]


def test_maximize():
    value, x = lp.maximize([1, 1, 0, 0], [[1, 0, 1, 0], [0, 1, 0, 1]], [1, 2])
    assert value == 3
    assert x[:2] == [1, 2]


def test_minimize_exact_fractions():
    value, x = lp.minimize([1, 2], [[3, 1]], [1])
    assert value == Fraction(1, 3)
    assert x == [Fraction(1, 3), 0]


def test_minimize_infeasible():
    with pytest.raises(lp.InfeasibleError):
        lp.minimize([1], [[1], [1]], [1, 2])


def test_minimize_unbounded():
    with pytest.raises(lp.UnboundedError):
        lp.minimize([-1, 0], [[1, -1]], [0])
