"""Compiled loop bodies for the binary engine.

Every kernel reads a *window* of a complement-symmetric half vector: ``win``
holds stored elements ``[w0, w0 + len(win))``. A logical pair index ``i`` is
folded into the stored half (``i`` or ``2^(2l) - 1 - i``) and then offset by
``w0``. RAM mode passes the whole half vector with ``w0 = 0``; disk mode
passes a window it read sequentially. Both therefore execute identical
arithmetic.

When ``f32`` is set every produced value is rounded to single precision
before it is combined, mirroring what a 4-byte store would hold.
"""
import numpy as np
from numba import njit


@njit(inline="always")
def _at(win, w0, i, half, full):
    if i >= half:
        i = full - 1 - i
    return np.float64(win[i - w0])


@njit(inline="always")
def _round(val, f32):
    if f32:
        return np.float64(np.float32(val))
    return val


@njit(inline="always")
def _masks(ell):
    full = np.int64(1) << (2 * ell)
    amask = np.int64(0)
    for k in range(ell):
        amask |= np.int64(1) << (2 * k + 1)
    bmask = (full - 1) ^ amask
    return full, amask, bmask


@njit(inline="always")
def _same(win, w0, x, half, full, f32):
    y = x << 2
    s = _at(win, w0, y, half, full) + _at(win, w0, y + 1, half, full)
    s = s + _at(win, w0, y + 2, half, full)
    s = s + _at(win, w0, y + 3, half, full)
    return _round(1.0 + 0.25 * s, f32)


@njit(inline="always")
def _l01(win, w0, x, half, full, amask, bmask, bhead, shift, f32):
    i = (x & amask) | ((x & bmask & ~bhead) << 2)
    lo = _at(win, w0, i, half, full) + shift
    hi = _at(win, w0, i + 1, half, full) + shift
    return _round(0.5 * (lo + hi), f32)


@njit(inline="always")
def _l10(win, w0, x, half, full, amask, bmask, ahead, shift, f32):
    i = ((x & amask & ~ahead) << 2) | (x & bmask)
    lo = _at(win, w0, i, half, full) + shift
    hi = _at(win, w0, i + 2, half, full) + shift
    return _round(0.5 * (lo + hi), f32)


@njit(cache=True, nogil=True)
def same_block(win, w0, ell, x0, x1, out, f32):
    """``out[x - x0] = 1 + mean of the four successors of x`` for same-head pairs."""
    full, amask, bmask = _masks(ell)
    half = full >> 1
    for x in range(x0, x1):
        out[x - x0] = _same(win, w0, x, half, full, f32)


@njit(cache=True, nogil=True)
def l01_block(win, w0, ell, x0, x1, shift, out, f32):
    """Branch that advances ``b`` for pairs with heads (0, 1)."""
    full, amask, bmask = _masks(ell)
    half = full >> 1
    bhead = np.int64(1) << (2 * ell - 2)
    for x in range(x0, x1):
        out[x - x0] = _l01(win, w0, x, half, full, amask, bmask, bhead, shift, f32)


@njit(cache=True, nogil=True)
def l10_block(win, w0, ell, x0, x1, shift, out, f32):
    """Branch that advances ``a`` for pairs with heads (0, 1)."""
    full, amask, bmask = _masks(ell)
    half = full >> 1
    ahead = np.int64(1) << (2 * ell - 1)
    for x in range(x0, x1):
        out[x - x0] = _l10(win, w0, x, half, full, amask, bmask, ahead, shift, f32)


@njit(cache=True, nogil=True)
def f_slice(recent, older, ell, lo, hi, out, f32):
    """Fused F over stored indices ``[lo, hi)``; returns ``max(out - recent)`` there."""
    full, amask, bmask = _masks(ell)
    half = full >> 1
    quarter = full >> 2
    ahead = np.int64(1) << (2 * ell - 1)
    bhead = np.int64(1) << (2 * ell - 2)
    best = -np.inf
    for x in range(lo, hi):
        if x < quarter:
            val = _same(older, 0, x, half, full, f32)
        else:
            p = _l01(recent, 0, x, half, full, amask, bmask, bhead, 0.0, f32)
            q = _l10(recent, 0, x, half, full, amask, bmask, ahead, 0.0, f32)
            val = p if p >= q else q
        out[x] = val
        diff = np.float64(out[x]) - np.float64(recent[x])
        if diff > best:
            best = diff
    return best


@njit(cache=True, nogil=True)
def w_slice(v, ell, lo, hi, shift, f32):
    """``max((v + 2*shift) - F(v + shift, v))`` over stored indices ``[lo, hi)``."""
    full, amask, bmask = _masks(ell)
    half = full >> 1
    quarter = full >> 2
    ahead = np.int64(1) << (2 * ell - 1)
    bhead = np.int64(1) << (2 * ell - 2)
    two = 2.0 * shift
    best = -np.inf
    for x in range(lo, hi):
        if x < quarter:
            val = _same(v, 0, x, half, full, f32)
        else:
            p = _l01(v, 0, x, half, full, amask, bmask, bhead, shift, f32)
            q = _l10(v, 0, x, half, full, amask, bmask, ahead, shift, f32)
            val = p if p >= q else q
        w = (np.float64(v[x]) + two) - val
        if w > best:
            best = w
    return best
