"""Integer encodings of string tuples.

Two schemes live here:

* the general mixed-radix encoding of a ``d``-tuple of length-``ell`` strings
  over ``{0, .., sigma-1}``: string 0 is the most significant digit block and
  the head character is the most significant digit inside a string;
* the binary interleaved pair, where the bits of ``a`` and ``b`` alternate with
  ``a`` first, so that the two heads occupy the top two of the ``2*ell`` bits.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .errors import CapacityError, InvalidInputError

SYMBOLS = "0123456789abcdefghijklmnopqrstuvwxyz"
MAX_STATES = 1 << 63
MAX_BINARY_ELL = 31

Word = Union[str, Sequence[int]]


@dataclass(frozen=True)
class Params:
    """Problem instance: alphabet size, string count and string length."""

    sigma: int
    d: int
    ell: int

    def __post_init__(self):
        for name in ("sigma", "d", "ell"):
            if not isinstance(getattr(self, name), int) or isinstance(getattr(self, name), bool):
                raise InvalidInputError(f"{name} must be an integer")
        if self.sigma < 2:
            raise InvalidInputError(f"sigma must be >= 2, got {self.sigma}")
        if self.d < 2:
            raise InvalidInputError(f"d must be >= 2, got {self.d}")
        if self.ell < 1:
            raise InvalidInputError(f"ell must be >= 1, got {self.ell}")
        if self.sigma ** (self.d * self.ell) > MAX_STATES:
            raise CapacityError(
                f"sigma^(d*ell) = {self.sigma}^{self.d * self.ell} exceeds 2^63 states"
            )

    @property
    def state_count(self) -> int:
        return self.sigma ** (self.d * self.ell)

    @property
    def is_binary(self) -> bool:
        return self.sigma == 2 and self.d == 2

    def require_binary(self) -> None:
        if not self.is_binary or 2 * self.ell > 2 * MAX_BINARY_ELL:
            raise InvalidInputError(
                "the binary engine needs sigma=2, d=2 and ell <= 31"
            )


def _digits(word: Word, sigma: int, ell: int) -> list[int]:
    if isinstance(word, str):
        try:
            chars = [SYMBOLS.index(ch) for ch in word.lower()]
        except ValueError:
            raise InvalidInputError(f"unknown symbol in {word!r}") from None
    else:
        chars = [int(c) for c in word]
    if len(chars) != ell:
        raise InvalidInputError(f"string {word!r} has length {len(chars)}, expected {ell}")
    for c in chars:
        if not 0 <= c < sigma:
            raise InvalidInputError(f"character {c} out of range for sigma={sigma}")
    return chars


def encode_tuple(strings: Sequence[Word], params: Params) -> int:
    """Map a tuple of strings to its index in ``[0, sigma^(d*ell))``."""
    if len(strings) != params.d:
        raise InvalidInputError(f"expected {params.d} strings, got {len(strings)}")
    index = 0
    for word in strings:
        for c in _digits(word, params.sigma, params.ell):
            index = index * params.sigma + c
    return index


def decode_digits(index: int, params: Params) -> tuple[tuple[int, ...], ...]:
    """Inverse of :func:`encode_tuple`, returning each string as a tuple of ints."""
    if not 0 <= index < params.state_count:
        raise InvalidInputError(f"index {index} out of range [0, {params.state_count})")
    flat = []
    for _ in range(params.d * params.ell):
        index, c = divmod(index, params.sigma)
        flat.append(c)
    flat.reverse()
    ell = params.ell
    return tuple(tuple(flat[k * ell:(k + 1) * ell]) for k in range(params.d))


def decode_tuple(index: int, params: Params) -> tuple[str, ...]:
    """Inverse of :func:`encode_tuple`. Characters are rendered as base-36 symbols."""
    if params.sigma > len(SYMBOLS):
        raise InvalidInputError("string rendering supports sigma <= 36; use decode_digits")
    return tuple("".join(SYMBOLS[c] for c in word) for word in decode_digits(index, params))


def heads(index: int, params: Params) -> tuple[int, ...]:
    """Head character of every string in the tuple at ``index``."""
    block = params.sigma ** params.ell
    lead = params.sigma ** (params.ell - 1)
    out = []
    for k in range(params.d - 1, -1, -1):
        out.append((index // block ** k) % block // lead)
    return tuple(out)


# ---------------------------------------------------------------------------
# binary interleaved pairs


def _bits(word: Word, ell: int | None = None) -> tuple[int, int]:
    if isinstance(word, str):
        if any(ch not in "01" for ch in word):
            raise InvalidInputError(f"{word!r} is not a binary string")
        return (int(word, 2) if word else 0), len(word)
    chars = list(word)
    if any(c not in (0, 1) for c in chars):
        raise InvalidInputError(f"{word!r} is not a binary string")
    value = 0
    for c in chars:
        value = (value << 1) | c
    return value, len(chars)


def spread_bits(value: int, ell: int) -> int:
    """Place bit ``k`` of ``value`` at bit ``2k``."""
    out = 0
    for k in range(ell):
        out |= ((value >> k) & 1) << (2 * k)
    return out


def gather_bits(x: int, ell: int) -> int:
    """Inverse of :func:`spread_bits` for the even bit positions of ``x``."""
    out = 0
    for k in range(ell):
        out |= ((x >> (2 * k)) & 1) << k
    return out


def interleave_bits(a: int, b: int, ell: int) -> int:
    """Interleave two ``ell``-bit integers, ``a`` taking the odd (higher) positions."""
    return (spread_bits(a, ell) << 1) | spread_bits(b, ell)


def interleave_pair(a: Word, b: Word) -> int:
    """Encode the binary string pair ``(a, b)`` as one interleaved integer.

    >>> interleave_pair("1011", "0010")
    142
    """
    av, la = _bits(a)
    bv, lb = _bits(b)
    if la != lb:
        raise InvalidInputError(f"strings differ in length: {la} vs {lb}")
    if la < 1 or la > MAX_BINARY_ELL:
        raise InvalidInputError(f"pair length must be in [1, {MAX_BINARY_ELL}]")
    return interleave_bits(av, bv, la)


def deinterleave_bits(x: int, ell: int) -> tuple[int, int]:
    _check_pair_index(x, ell)
    return gather_bits(x >> 1, ell), gather_bits(x, ell)


def deinterleave_pair(x: int, ell: int) -> tuple[str, str]:
    """Decode an interleaved pair back into its two binary strings."""
    a, b = deinterleave_bits(x, ell)
    return format(a, f"0{ell}b"), format(b, f"0{ell}b")


def complement_index(i: int, ell: int) -> int:
    """Index of the pair obtained by complementing both strings."""
    _check_pair_index(i, ell)
    return (1 << (2 * ell)) - 1 - i


def fold_index(i: int, ell: int) -> int:
    """Position of logical pair ``i`` inside a complement-symmetric half vector."""
    half = 1 << (2 * ell - 1)
    return i if i < half else (1 << (2 * ell)) - 1 - i


def _check_pair_index(x: int, ell: int) -> None:
    if not 1 <= ell <= MAX_BINARY_ELL:
        raise InvalidInputError(f"ell must be in [1, {MAX_BINARY_ELL}]")
    if not 0 <= x < 1 << (2 * ell):
        raise InvalidInputError(f"pair index {x} out of range for ell={ell}")
