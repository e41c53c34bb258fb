import itertools

import pytest
from hypothesis import given, strategies as st

from lcsbounds.codec import (
    Params,
    complement_index,
    decode_digits,
    decode_tuple,
    deinterleave_pair,
    encode_tuple,
    fold_index,
    heads,
    interleave_bits,
    interleave_pair,
)
from lcsbounds.errors import CapacityError, InvalidInputError


@pytest.mark.parametrize("strings,params,expected", [
    (("0", "0"), Params(2, 2, 1), 0),
    (("1", "0"), Params(2, 2, 1), 2),
    (("21", "02"), Params(3, 2, 2), 65),
])
def test_encode_examples(strings, params, expected):
    assert encode_tuple(strings, params) == expected
    assert decode_tuple(expected, params) == strings


def test_decode_small():
    p = Params(2, 2, 1)
    assert decode_tuple(0, p) == ("0", "0")
    assert decode_tuple(3, p) == ("1", "1")


@pytest.mark.parametrize("bad", [("2", "0"), ("00", "0"), ("0",), ("x", "0")])
def test_encode_rejects(bad):
    with pytest.raises(InvalidInputError):
        encode_tuple(bad, Params(2, 2, 1))


def test_decode_out_of_range():
    with pytest.raises(InvalidInputError):
        decode_tuple(4, Params(2, 2, 1))
    with pytest.raises(InvalidInputError):
        decode_tuple(-1, Params(2, 2, 1))


@pytest.mark.parametrize("kwargs", [dict(sigma=1, d=2, ell=1), dict(sigma=2, d=1, ell=1),
                                    dict(sigma=2, d=2, ell=0), dict(sigma=2.0, d=2, ell=1)])
def test_params_validation(kwargs):
    with pytest.raises(InvalidInputError):
        Params(**kwargs)


def test_params_capacity():
    Params(2, 2, 31)
    Params(2, 63, 1)
    with pytest.raises(CapacityError):
        Params(2, 2, 32)
    with pytest.raises(CapacityError):
        Params(3, 4, 10)


def _small_instances(limit):
    for sigma in range(2, 6):
        for d in range(2, 6):
            for ell in range(1, 6):
                if sigma ** (d * ell) <= limit:
                    yield Params(sigma, d, ell)


def test_round_trip_exhaustive_small():
    for p in _small_instances(1 << 12):
        for i in range(p.state_count):
            assert encode_tuple(decode_digits(i, p), p) == i


@pytest.mark.slow
def test_round_trip_exhaustive_2_20():
    import numpy as np

    # vectorized digit extraction over every index, compared with the encoder on a stride
    for p in _small_instances(1 << 20):
        idx = np.arange(p.state_count, dtype=np.int64)
        rebuilt = np.zeros_like(idx)
        rest = idx.copy()
        place = 1
        for _ in range(p.d * p.ell):
            rest, digit = np.divmod(rest, p.sigma)
            rebuilt += digit * place
            place *= p.sigma
        assert np.array_equal(rebuilt, idx)
        for i in range(0, p.state_count, max(1, p.state_count // 2000)):
            assert encode_tuple(decode_digits(i, p), p) == i


@given(st.integers(2, 40), st.integers(2, 5), st.integers(1, 6), st.data())
def test_round_trip_random(sigma, d, ell, data):
    try:
        p = Params(sigma, d, ell)
    except CapacityError:
        return
    i = data.draw(st.integers(0, p.state_count - 1))
    assert encode_tuple(decode_digits(i, p), p) == i


def test_lexicographic_order():
    p = Params(3, 2, 2)
    words = ["".join(t) for t in itertools.product("012", repeat=2)]
    tuples = list(itertools.product(words, repeat=2))
    assert [encode_tuple(t, p) for t in tuples] == list(range(p.state_count))


def test_heads():
    p = Params(3, 3, 2)
    for i in range(p.state_count):
        assert heads(i, p) == tuple(s[0] for s in decode_digits(i, p))


def test_same_head_count():
    for p in _small_instances(1 << 14):
        same = sum(len(set(heads(i, p))) == 1 for i in range(p.state_count))
        assert same == p.sigma ** (p.d * p.ell - p.d + 1)


@pytest.mark.parametrize("a,b,x", [("1011", "0010", 142), ("0000", "0000", 0), ("1", "1", 3)])
def test_interleave_examples(a, b, x):
    assert interleave_pair(a, b) == x
    assert deinterleave_pair(x, len(a)) == (a, b)


def test_deinterleave_zero():
    assert deinterleave_pair(0, 3) == ("000", "000")


def test_interleave_rejects():
    with pytest.raises(InvalidInputError):
        interleave_pair("10", "1")
    with pytest.raises(InvalidInputError):
        interleave_pair("12", "10")
    with pytest.raises(InvalidInputError):
        deinterleave_pair(16, 2)


def test_interleave_round_trip_exhaustive():
    for ell in range(1, 9):
        n = 1 << ell
        seen = set()
        for a in range(n):
            for b in range(n):
                sa, sb = format(a, f"0{ell}b"), format(b, f"0{ell}b")
                x = interleave_pair(sa, sb)
                assert deinterleave_pair(x, ell) == (sa, sb)
                seen.add(x)
        assert seen == set(range(n * n))


def test_interleave_bit_layout():
    ell = 5
    for a in range(1 << ell):
        for b in range(1 << ell):
            x = interleave_bits(a, b, ell)
            for k in range(ell):
                assert (x >> (2 * k + 1)) & 1 == (a >> k) & 1
                assert (x >> (2 * k)) & 1 == (b >> k) & 1


def test_head_ranges():
    for ell in range(1, 7):
        q = 1 << (2 * ell - 2)
        for x in range(1 << (2 * ell)):
            a, b = deinterleave_pair(x, ell)
            expected = ("0", "0") if x < q else ("0", "1") if x < 2 * q else \
                ("1", "0") if x < 3 * q else ("1", "1")
            assert (a[0], b[0]) == expected


def test_complement_examples():
    assert complement_index(0, 2) == 15
    assert complement_index(142, 4) == 113
    assert deinterleave_pair(113, 4) == ("0100", "1101")


def test_complement_bijection():
    for ell in range(1, 7):
        half = 1 << (2 * ell - 1)
        image = {complement_index(i, ell) for i in range(half)}
        assert image == set(range(half, 2 * half))
        for i in range(2 * half):
            assert complement_index(complement_index(i, ell), ell) == i
            a, b = deinterleave_pair(i, ell)
            flip = str.maketrans("01", "10")
            assert deinterleave_pair(complement_index(i, ell), ell) == (a.translate(flip), b.translate(flip))
            assert fold_index(i, ell) < half
