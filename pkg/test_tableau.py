import math

import pytest

from errors import TableauError
from tableau import (
    BUILTINS,
    SdirkTableau,
    builtin,
    is_order4_candidate,
    make_schedule,
    order_conditions,
    parse_custom,
)


def test_midpoint_schedule():
    s = make_schedule(builtin("midpoint"), 0.1)
    assert s.substeps == (0.1,)
    assert s.r == (0.0, 1.0)
    assert s.c == (0.5,)


def test_two_stage_schedule():
    s = make_schedule(parse_custom([0.5, 0.5]), 1.0)
    assert s.substeps == (0.5, 0.5)
    assert s.r == (0.0, 0.5, 1.0)
    assert s.c == (0.25, 0.75)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_schedule_invariants(name):
    t = builtin(name)
    s = make_schedule(t, 0.01)
    assert math.fsum(s.substeps) == pytest.approx(0.01, abs=1e-16)
    assert s.r[0] == 0.0 and s.r[-1] == 1.0
    for i, b in enumerate(t.b):
        assert s.c[i] - s.r[i] == pytest.approx(b / 2, abs=1e-15)
    assert abs(sum(t.b) - 1.0) <= 1e-14


def test_schedule_rejects_nonpositive_h():
    with pytest.raises(ValueError):
        make_schedule(builtin("midpoint"), 0.0)
    with pytest.raises(ValueError):
        make_schedule(builtin("midpoint"), -0.1)


def test_time_reversed_schedule():
    s = make_schedule(builtin("yoshida4"), 0.1)
    r = s.time_reversed()
    assert r.substeps == tuple(-h for h in s.substeps)
    assert r.h == -0.1
    assert r.time_reversed() == s


def test_yoshida_has_negative_substep():
    s = make_schedule(builtin("yoshida4"), 0.1)
    assert s.substeps[1] < 0
    assert s.r[1] > s.r[2]


def test_order_conditions():
    assert order_conditions(builtin("midpoint")) == (0.0, 1.0)
    assert not is_order4_candidate(builtin("midpoint"))
    assert not is_order4_candidate(builtin("sdirk2"))
    for name in ("yoshida4", "suzuki4"):
        first, third = order_conditions(builtin(name))
        assert first <= 1e-12 and third <= 1e-12
        assert is_order4_candidate(builtin(name))


def test_builtins():
    assert builtin("midpoint").b == (1.0,)
    assert builtin("sdirk2").s == 2
    yoshida = builtin("yoshida4")
    w1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
    assert yoshida.s == 3
    assert yoshida.b == pytest.approx((w1, 1 - 2 * w1, w1))
    assert builtin("suzuki4").s == 5
    with pytest.raises(TableauError):
        builtin("rk4")


def test_butcher_matrix_is_diagonally_implicit():
    A = builtin("suzuki4").butcher_matrix()
    b = builtin("suzuki4").b
    for i in range(5):
        assert A[i][i] == b[i] / 2
        assert A[i][:i] == list(b[:i])
        assert all(a == 0.0 for a in A[i][i + 1:])


def test_parse_custom():
    assert parse_custom([1]).b == (1.0,)
    with pytest.raises(TableauError):
        parse_custom([0.3, 0.3])
    with pytest.raises(TableauError):
        parse_custom([0.5, 0, 0.5])
    with pytest.raises(TableauError):
        parse_custom([])
    seven = parse_custom([0.1, 0.2, 0.15, 0.1, 0.15, 0.2, 0.1], name="seven")
    assert seven.s == 7 and seven.name == "seven"


def test_model_validator():
    with pytest.raises(ValueError):
        SdirkTableau(name="bad", b=(0.5, 0.6))
