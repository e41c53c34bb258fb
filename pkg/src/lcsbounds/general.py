"""Feasible-triplet iteration for arbitrary (sigma, d, ell).

Vectors are indexed by :func:`lcsbounds.codec.encode_tuple`. The averaging
kernel is evaluated for all tuples at once by viewing a vector as a tensor
with one axis of length ``sigma**ell`` per string: advancing string ``j``
(dropping its head and appending every character) is an average over the
last character of axis ``j``, and it applies only where the head differs
from ``z``. Composing that per-axis operator over all strings gives every
``F_z`` value in ``O(sigma * d**2 * sigma**(d*ell))`` work.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np

from .codec import Params, decode_digits, encode_tuple, heads
from .errors import CapacityError, InvalidInputError
from .iteration import StopRule, Tracker, TripletResult, lower_bound_from

DEFAULT_MEMORY_BUDGET = 2 << 30

__all__ = [
    "GeneralEngine",
    "apply_F",
    "f_z",
    "feasible_triplet",
    "lower_bound_from",
    "same_head_indicator",
]


def same_head_indicator(i: int, params: Params) -> int:
    """1 if every string of tuple ``i`` starts with the same character."""
    return int(len(set(heads(i, params))) == 1)


def f_z(vs: Sequence[np.ndarray], i: int, z: int, params: Params) -> float:
    """Average of ``vs[|N|-1]`` over all ways to advance the strings not starting with ``z``.

    ``vs`` is ordered most recent first, so ``vs[k-1]`` is the vector ``k``
    steps back. Returns 0 when every string starts with ``z``.
    """
    if len(vs) != params.d:
        raise InvalidInputError(f"expected {params.d} vectors, got {len(vs)}")
    if not 0 <= z < params.sigma:
        raise InvalidInputError(f"character {z} out of range")
    strings = [list(s) for s in decode_digits(i, params)]
    moved = [j for j, s in enumerate(strings) if s[0] != z]
    if not moved:
        return 0.0
    source = vs[len(moved) - 1]
    total = 0.0
    for tail in itertools.product(range(params.sigma), repeat=len(moved)):
        shifted = [list(s) for s in strings]
        for j, c in zip(moved, tail):
            shifted[j] = strings[j][1:] + [c]
        total += source[encode_tuple(shifted, params)]
    return params.sigma ** -len(moved) * total


class GeneralEngine:
    """Precomputed index tables for one instance plus the vectorized F map."""

    def __init__(self, params: Params, workers: int = 1):
        self.params = params
        self.workers = max(1, int(workers))
        sigma, d, ell = params.sigma, params.d, params.ell
        self.size = params.state_count
        self.block = sigma ** ell
        self.lead = sigma ** (ell - 1)
        axis_heads = np.arange(self.block) // self.lead
        hs = np.empty((d, self.size), dtype=np.int8)
        for j in range(d):
            shape = [1] * d
            shape[j] = self.block
            hs[j] = np.broadcast_to(axis_heads.reshape(shape), (self.block,) * d).reshape(-1)
        # b-vector: 1 where all heads agree
        self.b = np.all(hs == hs[0], axis=0).astype(np.float64)
        self.counts = [np.sum(hs != z, axis=0).astype(np.intp) for z in range(sigma)]
        self.scale = np.array([float(sigma) ** -k for k in range(d + 1)])

    def _advance(self, cur: np.ndarray, j: int, z: int, carry: int) -> np.ndarray:
        """Keep-or-advance on string axis ``j``.

        ``cur`` has a leading batch axis. Where the head of string ``j`` is
        ``z`` the entry is kept; elsewhere it becomes the sum over appended
        characters of batch entry ``carry`` further along.
        """
        p = self.params
        pre = self.block ** j
        post = self.block ** (p.d - 1 - j)
        n_in = cur.shape[0]
        n_out = n_in - carry
        g = cur.reshape(n_in, pre, self.lead, p.sigma, post)
        tail_sum = g[carry:, :, :, 0, :].copy()
        for c in range(1, p.sigma):
            tail_sum += g[carry:, :, :, c, :]
        out = np.empty((n_out, pre, p.sigma, self.lead, post))
        out[:] = tail_sum[:, :, None, :, :]
        out[:, :, z] = cur.reshape(n_in, pre, p.sigma, self.lead, post)[:n_out, :, z]
        return out

    def _fz_all(self, batch: np.ndarray, z: int) -> np.ndarray:
        # batch[r] holds the source for tuples that still have r strings to
        # advance among the unprocessed axes; every axis consumes one level.
        p = self.params
        cur = batch
        for j in range(p.d):
            cur = self._advance(cur, j, z, carry=1)
        count = self.counts[z]
        vals = cur.reshape(-1) * self.scale[count]
        vals[count == 0] = -np.inf
        return vals

    def _fz_shifted(self, v: np.ndarray, z: int, step: float) -> np.ndarray:
        # all sources are v plus a multiple of step, so one transform suffices
        p = self.params
        cur = v.reshape(1, -1)
        for j in range(p.d):
            cur = self._advance(cur, j, z, carry=0)
        count = self.counts[z]
        vals = cur.reshape(-1) * self.scale[count] + (p.d - count) * step
        vals[count == 0] = -np.inf
        return vals

    def _combine(self, per_z: Callable[[int], np.ndarray]) -> np.ndarray:
        zs = range(self.params.sigma)
        if self.workers > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                results = list(pool.map(per_z, zs))
        else:
            results = [per_z(z) for z in zs]
        best = results[0]
        for vals in results[1:]:
            np.maximum(best, vals, out=best)
        return self.b + best

    def apply(self, vs: Sequence[np.ndarray]) -> np.ndarray:
        """``b + max_z F_z`` for every tuple; ``vs`` most recent first."""
        p = self.params
        if len(vs) != p.d:
            raise InvalidInputError(f"expected {p.d} vectors, got {len(vs)}")
        batch = np.empty((p.d + 1, self.size))
        batch[0] = 0.0
        for k, v in enumerate(vs, start=1):
            v = np.asarray(v, dtype=np.float64)
            if v.shape != (self.size,):
                raise InvalidInputError("vector length does not match the instance")
            batch[k] = v
        return self._combine(lambda z: self._fz_all(batch, z))

    def apply_shifted(self, v: np.ndarray, step: float) -> np.ndarray:
        """``apply([v + (d-1)*step, ..., v + step, v])`` without building the shifted copies."""
        v = np.asarray(v, dtype=np.float64)
        return self._combine(lambda z: self._fz_shifted(v, z, step))


def apply_F(vs: Sequence[np.ndarray], params: Params, workers: int = 1) -> np.ndarray:
    """One application of the combined map; builds a throwaway :class:`GeneralEngine`."""
    return GeneralEngine(params, workers).apply(vs)


def feasible_triplet(
    params: Params,
    n: Optional[int] = None,
    *,
    rule: Optional[StopRule] = None,
    workers: int = 1,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    keep_u: bool = False,
    on_iteration: Optional[Callable[[int, float, float, Tracker], None]] = None,
) -> TripletResult:
    """Run the feasible-triplet iteration and return the best triplet.

    ``n`` fixes the loop range ``d..n``; without it the loop runs to
    convergence under ``rule`` (default :class:`StopRule`).
    """
    if rule is None:
        rule = StopRule(n=n)
    elif n is not None:
        rule = StopRule(n=n, tol=rule.tol, patience=rule.patience,
                        max_iterations=rule.max_iterations)
    rule.validate(params.d)
    d = params.d
    # d generations, the (d+1)-deep batch and per-axis temporaries
    needed = 8 * params.state_count * (3 * d + 6)
    if needed > memory_budget:
        raise CapacityError(
            f"general engine needs about {needed} bytes for {params}, budget is {memory_budget}",
            required_bytes=needed,
        )
    engine = GeneralEngine(params, workers)
    gens = [np.zeros(params.state_count) for _ in range(d)]  # gens[k] = v_k, oldest first
    tracker = Tracker(d, rule)
    while not tracker.done():
        i = tracker.first_index()
        newest = engine.apply(gens[::-1])
        R = float(np.max(newest - gens[-1]))
        W = (newest + d * R) - engine.apply_shifted(newest, R)
        E = max(0.0, float(np.max(W)))
        tracker.record(i, R, E, newest.copy() if keep_u else None)
        if on_iteration is not None:
            on_iteration(i, R, E, tracker)
        gens = gens[1:] + [newest]
    return tracker.result()
