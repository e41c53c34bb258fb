"""Ground truth independent of the triplet engines.

Exact LCS by dynamic programming, exact expected LCS of short random strings
by enumeration, and Monte-Carlo estimates of ``E[LCS]/n`` for long ones.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np
from numba import njit

from .errors import CapacityError, InvalidInputError

GENERATOR = "PCG64"
ENUMERATION_LIMIT = 10 ** 7
MAX_DP_CELLS = 1 << 27

Word = Union[str, Sequence[int]]

__all__ = [
    "EstimateResult",
    "ExactExpectation",
    "estimate_gamma",
    "exact_expected_lcs",
    "lcs_length",
]


@njit(cache=True, nogil=True)
def _lcs2(a, b):
    m = len(b)
    row = np.zeros(m + 1, dtype=np.int32)
    for i in range(len(a)):
        ai = a[i]
        diag = 0  # row[j] of the previous row
        left = 0  # row[j] of the current row
        for j in range(m):
            up = row[j + 1]
            if ai == b[j]:
                val = diag + 1
            else:
                val = up if up > left else left
            row[j + 1] = val
            diag = up
            left = val
    return row[m]


@njit(cache=True, nogil=True)
def _lcs_nd(flat, starts, lens):
    """d-dimensional table over all prefix tuples, last string fastest."""
    d = len(lens)
    strides = np.empty(d, dtype=np.int64)
    size = np.int64(1)
    for j in range(d - 1, -1, -1):
        strides[j] = size
        size *= lens[j] + 1
    table = np.zeros(size, dtype=np.int32)
    pos = np.zeros(d, dtype=np.int64)
    for idx in range(size):
        if idx > 0:
            j = d - 1
            pos[j] += 1
            while pos[j] > lens[j]:
                pos[j] = 0
                j -= 1
                pos[j] += 1
        zero = False
        for j in range(d):
            if pos[j] == 0:
                zero = True
                break
        if zero:
            continue
        c = flat[starts[0] + pos[0] - 1]
        same = True
        for j in range(1, d):
            if flat[starts[j] + pos[j] - 1] != c:
                same = False
                break
        if same:
            back = idx
            for j in range(d):
                back -= strides[j]
            table[idx] = table[back] + 1
        else:
            best = 0
            for j in range(d):
                val = table[idx - strides[j]]
                if val > best:
                    best = val
            table[idx] = best
    return table[size - 1]


def _dp_cells(lengths: Sequence[int]) -> int:
    return math.prod(n + 1 for n in lengths)


def _lcs_arrays(arrays: Sequence[np.ndarray]) -> int:
    if len(arrays) == 2:
        return int(_lcs2(arrays[0], arrays[1]))
    lens = np.array([len(a) for a in arrays], dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(lens)[:-1]]).astype(np.int64)
    flat = np.concatenate(arrays).astype(np.int64) if len(lens) else np.zeros(0, np.int64)
    return int(_lcs_nd(flat, starts, lens))


def _to_arrays(strings: Sequence[Word]) -> list[np.ndarray]:
    if all(isinstance(s, str) for s in strings):
        alphabet = {c: k for k, c in enumerate(sorted(set("".join(strings))))}
        return [np.array([alphabet[c] for c in s], dtype=np.int64) for s in strings]
    if any(isinstance(s, str) for s in strings):
        raise InvalidInputError("mix of text and integer sequences")
    return [np.asarray(s, dtype=np.int64).reshape(-1) for s in strings]


def lcs_length(strings: Sequence[Word]) -> int:
    """Length of the longest common subsequence of ``strings`` (d >= 2).

    Strings may be ``str`` or integer sequences. Two strings use a
    two-row table; more use the full d-dimensional table, guarded by
    ``MAX_DP_CELLS``.
    """
    if len(strings) < 2:
        raise InvalidInputError("need at least two strings")
    arrays = _to_arrays(strings)
    if len(arrays) > 2:
        cells = _dp_cells([len(a) for a in arrays])
        if cells > MAX_DP_CELLS:
            raise CapacityError(
                f"LCS table of {cells} cells exceeds the {MAX_DP_CELLS}-cell limit",
                required_bytes=4 * cells,
            )
    return _lcs_arrays(arrays)


@dataclass(frozen=True)
class ExactExpectation:
    """``E[LCS]`` of ``d`` uniform strings of length ``n``, exact and as a float."""

    fraction: Fraction
    sigma: int
    d: int
    n: int

    @property
    def value(self) -> float:
        return float(self.fraction)

    def __float__(self) -> float:
        return self.value


@njit(cache=True)
def _enumerate_total(words, d):
    count = words.shape[0]
    n = words.shape[1]
    idx = np.zeros(d, dtype=np.int64)
    total = np.int64(0)
    lens = np.full(d, n, dtype=np.int64)
    starts = np.arange(d).astype(np.int64) * n
    flat = np.empty(d * n, dtype=np.int64)
    while True:
        for j in range(d):
            flat[j * n:(j + 1) * n] = words[idx[j]]
        if d == 2:
            total += _lcs2(flat[:n], flat[n:])
        else:
            total += _lcs_nd(flat, starts, lens)
        j = d - 1
        while j >= 0:
            idx[j] += 1
            if idx[j] < count:
                break
            idx[j] = 0
            j -= 1
        if j < 0:
            break
    return total


def exact_expected_lcs(sigma: int, d: int, n: int) -> ExactExpectation:
    """Exact expectation by enumerating all ``sigma^(d*n)`` tuples."""
    for name, value, low in (("sigma", sigma, 2), ("d", d, 2), ("n", n, 1)):
        if isinstance(value, bool) or not isinstance(value, int) or value < low:
            raise InvalidInputError(f"{name} must be an integer >= {low}")
    tuples = sigma ** (d * n)
    if tuples > ENUMERATION_LIMIT:
        raise CapacityError(f"{tuples} tuples exceed the enumeration limit {ENUMERATION_LIMIT}")
    words = np.array(list(itertools.product(range(sigma), repeat=n)), dtype=np.int64)
    total = int(_enumerate_total(words, d))
    return ExactExpectation(Fraction(total, tuples), sigma, d, n)


@dataclass(frozen=True)
class EstimateResult:
    """Monte-Carlo estimate of ``E[LCS]/n``."""

    mean: float
    stderr: float
    samples: int
    n: int
    seed: int
    sigma: int
    d: int
    generator: str = GENERATOR

    def upper_check(self, k: float = 4.0) -> float:
        """``mean + k * stderr``, the threshold a lower bound must not exceed."""
        return self.mean + k * self.stderr


def estimate_gamma(sigma: int, d: int, n: int, samples: int, seed: int = 0,
                   workers: int = 1) -> EstimateResult:
    """Average ``LCS/n`` over ``samples`` independent uniform d-tuples.

    Sample ``k`` draws from its own child of ``SeedSequence(seed)``, so the
    result depends only on the seed and not on ``workers``.
    """
    for name, value, low in (("sigma", sigma, 2), ("d", d, 2), ("n", n, 1), ("samples", samples, 1)):
        if isinstance(value, bool) or not isinstance(value, int) or value < low:
            raise InvalidInputError(f"{name} must be an integer >= {low}")
    if not 0 <= seed < 1 << 64:
        raise InvalidInputError("seed must fit in 64 bits")
    if d > 2:
        cells = (n + 1) ** d
        if cells > MAX_DP_CELLS:
            raise CapacityError(
                f"d={d}, n={n} needs an LCS table of {cells} cells per sample "
                f"(limit {MAX_DP_CELLS})",
                required_bytes=4 * cells,
            )
    children = np.random.SeedSequence(seed).spawn(samples)

    def one(k: int) -> int:
        rng = np.random.Generator(np.random.PCG64(children[k]))
        arrays = [rng.integers(0, sigma, size=n, dtype=np.int64) for _ in range(d)]
        return _lcs_arrays(arrays)

    if workers > 1 and samples > 1:
        with ThreadPoolExecutor(workers) as pool:
            lengths = list(pool.map(one, range(samples)))
    else:
        lengths = [one(k) for k in range(samples)]
    ratios = np.array(lengths, dtype=np.float64) / n
    mean = float(np.mean(ratios))
    stderr = float(np.std(ratios, ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return EstimateResult(mean, stderr, samples, n, seed, sigma, d)
