import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from g2kp.instance import (
    Bounds,
    Instance,
    InstanceError,
    Piece,
    generate_random_instance,
    parse_instance,
    read_instance,
    render_instance,
    validate_instance,
)


def test_parse_basic():
    inst = parse_instance(b"6 6\n2\n4 4 16 1\n2 6 12 2\n")
    assert (inst.L, inst.W) == (6, 6)
    assert inst.pieces == (Piece(4, 4, 16, 1), Piece(2, 6, 12, 2))


def test_piece_equal_to_plate_allowed():
    inst = parse_instance("10 10\n1\n10 10 7 1\n")
    assert inst.pieces == (Piece(10, 10, 7, 1),)


def test_oversized_piece_names_line():
    with pytest.raises(InstanceError) as err:
        parse_instance("6 6\n1\n7 1 5 1\n")
    assert err.value.line == 3
    assert "line 3" in str(err.value)


@pytest.mark.parametrize(
    "text",
    [
        "",
        "6\n1\n1 1 1 1\n",
        "6 6\n2\n1 1 1 1\n",
        "6 6\n1\n1 1 0 1\n",
        "6 6\n1\n1 1 1 -1\n",
        "6 6\n1\n1 x 1 1\n",
        "6 6\n0\n",
        "0 6\n1\n1 1 1 1\n",
    ],
)
def test_malformed(text):
    with pytest.raises(InstanceError):
        parse_instance(text)


def test_comments_ignored():
    text = "# header\n6 6\n# pieces\n1\n2 2 3 1\n"
    assert parse_instance(text).pieces == (Piece(2, 2, 3, 1),)


def test_read_instance_uses_file_stem(tmp_path):
    path = tmp_path / "abc.txt"
    path.write_text("5 5\n1\n1 1 1 1\n")
    assert read_instance(path).name == "abc"


def test_generator_deterministic():
    assert generate_random_instance(1) == generate_random_instance(1)
    assert generate_random_instance(1) != generate_random_instance(2)


def test_generator_respects_demand_bounds():
    inst = generate_random_instance(2, Bounds(demand=(1, 1)))
    assert all(p.demand == 1 for p in inst.pieces)


def test_generator_unweighted_profit_is_area():
    inst = generate_random_instance(5, Bounds(unweighted=True))
    assert all(p.profit == p.area for p in inst.pieces)


def test_generator_rejects_impossible_bounds():
    with pytest.raises(InstanceError):
        generate_random_instance(1, Bounds(plate_length=(5, 5), piece_length=(6, 9)))
    with pytest.raises(InstanceError):
        generate_random_instance(1, Bounds(demand=(3, 1)))


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_generated_instances_validate_and_round_trip(seed):
    inst = generate_random_instance(seed)
    assert validate_instance(inst) is inst
    back = parse_instance(render_instance(inst), name=inst.name)
    assert back == inst


pieces_st = st.lists(
    st.tuples(st.integers(1, 20), st.integers(1, 20), st.integers(1, 99), st.integers(1, 5)),
    min_size=1,
    max_size=6,
)


@settings(max_examples=200, deadline=None)
@given(pieces_st)
def test_round_trip_arbitrary(raw):
    L = max(l for l, _, _, _ in raw)
    W = max(w for _, w, _, _ in raw)
    inst = Instance(L, W, tuple(Piece(*r) for r in raw))
    assert parse_instance(render_instance(inst)) == inst
