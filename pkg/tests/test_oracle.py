import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from g2kp.instance import Bounds, Instance, Piece, generate_random_instance
from g2kp.layout import layout_is_feasible, layout_profit
from g2kp.oracle import OracleLimitError, OracleLimits, exhaustive_value, optimal_value_bruteforce

tiny = Bounds(plate_length=(3, 5), plate_width=(3, 5), n_pieces=(1, 3), demand=(1, 2))
# random instances may ask for up to 5 * 3 copies
roomy = OracleLimits(max_demand=15)


def test_toy1(toy1):
    res = optimal_value_bruteforce(toy1)
    assert res.value == 28
    assert layout_profit(res.layout, toy1) == 28
    assert layout_is_feasible(res.layout, toy1)
    assert exhaustive_value(toy1) == 28


def test_piece_equal_to_plate(single):
    assert optimal_value_bruteforce(single).value == 7
    assert exhaustive_value(single, max_area=100) == 7


def test_nothing_can_be_cut():
    # the only piece is wider than every plate a guillotine cut produces,
    # yet fits the original plate once
    inst = Instance(4, 4, (Piece(3, 3, 9, 2),))
    assert optimal_value_bruteforce(inst).value == 9


def test_no_piece_fits_after_demand():
    inst = Instance(5, 5, (Piece(3, 3, 4, 1),))
    assert optimal_value_bruteforce(inst).value == 4


def test_rotation_not_exploited():
    # two copies stack in the 2 x 2 corner; a third would need the 1 x 2
    # strip left over, i.e. a rotated piece
    inst = Instance(3, 2, (Piece(2, 1, 10, 3),))
    assert optimal_value_bruteforce(inst).value == 20
    assert exhaustive_value(inst) == 20


def test_limits_refuse_large_instances():
    big = Instance(40, 40, (Piece(1, 1, 1, 1),))
    with pytest.raises(OracleLimitError):
        optimal_value_bruteforce(big)
    demanding = Instance(5, 5, (Piece(1, 1, 1, 13),))
    with pytest.raises(OracleLimitError):
        optimal_value_bruteforce(demanding)
    assert optimal_value_bruteforce(demanding, OracleLimits(max_demand=13)).value == 13


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_memoized_matches_exhaustive(seed):
    inst = generate_random_instance(seed, tiny)
    if inst.total_demand > 4:
        inst = Instance(inst.L, inst.W, tuple(Piece(p.length, p.width, p.profit, 1) for p in inst.pieces))
    assert optimal_value_bruteforce(inst).value == exhaustive_value(inst)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["L", "W", "u"]))
def test_monotone(seed, grow):
    inst = generate_random_instance(seed, Bounds(plate_length=(4, 10), plate_width=(4, 10)))
    base = optimal_value_bruteforce(inst, roomy).value
    if grow == "L":
        bigger = Instance(inst.L + 1, inst.W, inst.pieces)
    elif grow == "W":
        bigger = Instance(inst.L, inst.W + 1, inst.pieces)
    else:
        p = inst.pieces[0]
        bigger = Instance(inst.L, inst.W, (Piece(p.length, p.width, p.profit, p.demand + 1),) + inst.pieces[1:])
    assert optimal_value_bruteforce(bigger, OracleLimits(max_demand=16)).value >= base


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_normalized_subplate_keeps_optimum(seed, data):
    from g2kp.discretization import PositionTables

    inst = generate_random_instance(seed, Bounds(plate_length=(4, 12), plate_width=(4, 12)))
    tables = PositionTables(inst)
    l = data.draw(st.integers(1, inst.L))
    w = data.draw(st.integers(1, inst.W))
    normal = tables.normalize_plate(l, w)
    value = sub_optimum(inst, l, w)
    if normal is None:
        assert value == 0
    else:
        assert sub_optimum(inst, *normal) == value


def sub_optimum(inst, l, w):
    fitting = tuple(p for p in inst.pieces if p.fits(l, w))
    if not fitting:
        return 0
    return optimal_value_bruteforce(Instance(l, w, fitting), roomy).value
