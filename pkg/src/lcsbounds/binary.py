"""Feasible-triplet iteration specialized to two binary strings.

A pair of length-``l`` binary strings is one interleaved integer ``x`` (see
:func:`lcsbounds.codec.interleave_bits`). Complementing both strings leaves
every quantity unchanged, so only ``x < 2^(2l-1)`` is stored; larger indices
are read at ``2^(2l) - 1 - x``. Within the stored half the heads of ``(a, b)``
are ``(0, 0)`` for ``x < 2^(2l-2)`` and ``(0, 1)`` above, which splits the
update into three loops:

* same heads: ``1 + mean`` of the four successors in the older vector;
* heads (0, 1), advancing ``b``: mean of two neighbours in the newer vector;
* heads (0, 1), advancing ``a``: same, with ``a`` advanced instead.

The scalar functions here are slow references. :func:`apply_F_binary` and
:func:`binary_feasible_triplet` run the compiled kernels.
"""
from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .codec import MAX_BINARY_ELL, complement_index, deinterleave_bits, interleave_bits
from .errors import InvalidInputError, StoreIOError
from .iteration import StopRule, Tracker, TripletResult
from .store import (
    SLOT_COUNT,
    DiskVector,
    IORecorder,
    RamVector,
    StoreConfig,
    Vector,
    check_disk_space,
    for_slices,
    half_length,
    read_metadata,
    recurse_l01,
    recurse_l10,
    sequential_l00_pass,
    slot_path,
    write_metadata,
)

log = logging.getLogger(__name__)

__all__ = [
    "apply_F_binary",
    "binary_feasible_triplet",
    "different_first_bit",
    "expand_half",
    "f0_eval",
    "f1_eval",
    "l10_value",
    "logical_value",
    "same_first_bit",
]


def _check_ell(ell: int) -> None:
    if isinstance(ell, bool) or not isinstance(ell, (int, np.integer)):
        raise InvalidInputError("ell must be an integer")
    if not 1 <= ell <= MAX_BINARY_ELL:
        raise InvalidInputError(f"ell must be in [1, {MAX_BINARY_ELL}], got {ell}")


def _check_half(v, ell: int) -> None:
    if len(v) != half_length(ell):
        raise InvalidInputError(
            f"half vector for ell={ell} has {half_length(ell)} entries, got {len(v)}"
        )


def logical_value(v, j: int, ell: int) -> float:
    """Entry ``j`` of the full vector represented by the stored half ``v``."""
    half = half_length(ell)
    if not 0 <= j < 2 * half:
        raise InvalidInputError(f"index {j} out of range for ell={ell}")
    return float(v[j if j < half else complement_index(j, ell)])


def expand_half(v, ell: int) -> np.ndarray:
    """Materialize the full ``2^(2l)`` vector from its stored half."""
    v = np.asarray(v, dtype=np.float64)
    _check_half(v, ell)
    return np.concatenate([v, v[::-1]])


def _fz_eval(v1, v2, x: int, ell: int, z: int) -> float:
    a, b = deinterleave_bits(x, ell)
    top = ell - 1
    ha, hb = a >> top, b >> top
    mask = (1 << top) - 1
    if ha == z and hb == z:
        return 0.0
    if ha != z and hb != z:
        total = 0.0
        for ca in (0, 1):
            for cb in (0, 1):
                j = interleave_bits(((a & mask) << 1) | ca, ((b & mask) << 1) | cb, ell)
                total += logical_value(v2, j, ell)
        return 0.25 * total
    total = 0.0
    for c in (0, 1):
        if ha != z:
            j = interleave_bits(((a & mask) << 1) | c, b, ell)
        else:
            j = interleave_bits(a, ((b & mask) << 1) | c, ell)
        total += logical_value(v1, j, ell)
    return 0.5 * total


def f1_eval(v1, v2, x: int, ell: int) -> float:
    """Average over advancing the strings whose head is not 1.

    ``v1`` serves one advanced string, ``v2`` two. Both are stored halves.
    """
    return _fz_eval(v1, v2, x, ell, 1)


def f0_eval(v1, v2, x: int, ell: int) -> float:
    """Mirror of :func:`f1_eval` for strings whose head is not 0."""
    return _fz_eval(v1, v2, x, ell, 0)


def same_first_bit(x: int, v_src, ell: int) -> float:
    """``1 + mean`` of the four successors of ``x`` (heads both 0)."""
    if not 0 <= x < 1 << (2 * ell - 2):
        raise InvalidInputError(f"pair {x} does not have heads (0, 0)")
    return 1.0 + 0.25 * sum(logical_value(v_src, 4 * x + k, ell) for k in range(4))


def _mismatch_index(x: int, ell: int, advance_a: bool) -> int:
    if not 1 << (2 * ell - 2) <= x < 1 << (2 * ell - 1):
        raise InvalidInputError(f"pair {x} does not have heads (0, 1)")
    full = 1 << (2 * ell)
    amask = sum(1 << (2 * k + 1) for k in range(ell))
    bmask = (full - 1) ^ amask
    if advance_a:
        return ((x & amask & ~(1 << (2 * ell - 1))) << 2) | (x & bmask)
    return (x & amask) | ((x & bmask & ~(1 << (2 * ell - 2))) << 2)


def different_first_bit(x: int, v_src, ell: int) -> float:
    """Heads (0, 1), advancing ``b``: mean over the appended bit of ``b``."""
    i = _mismatch_index(x, ell, advance_a=False)
    return 0.5 * (logical_value(v_src, i, ell) + logical_value(v_src, i + 1, ell))


def l10_value(x: int, v_src, ell: int) -> float:
    """Heads (0, 1), advancing ``a``: mean over the appended bit of ``a``."""
    i = _mismatch_index(x, ell, advance_a=True)
    return 0.5 * (logical_value(v_src, i, ell) + logical_value(v_src, i + 2, ell))


def _as_store_array(v, dtype) -> np.ndarray:
    return np.ascontiguousarray(v, dtype=dtype)


def _f_ram(v1, v0, ell, out, threads, f32):
    parts = for_slices(0, len(out), threads,
                       lambda lo, hi: _kernels.f_slice(v1, v0, ell, lo, hi, out, f32))
    return max(parts)


def _w_ram(v, ell, shift, threads, f32):
    parts = for_slices(0, len(v), threads,
                       lambda lo, hi: _kernels.w_slice(v, ell, lo, hi, shift, f32))
    return max(parts)


def apply_F_binary(v1, v0, ell: int, threads: int = 1, element_width: int = 8) -> np.ndarray:
    """``F(v1, v0)`` on stored halves; ``v1`` is the newer generation."""
    _check_ell(ell)
    dtype = np.dtype("<f4") if element_width == 4 else np.dtype("<f8")
    v1 = _as_store_array(v1, dtype)
    v0 = _as_store_array(v0, dtype)
    _check_half(v1, ell)
    _check_half(v0, ell)
    out = np.empty_like(v1)
    _f_ram(v1, v0, ell, out, threads, element_width == 4)
    return out


# ---------------------------------------------------------------------------
# stepping


class _RamStepper:
    def __init__(self, ell, config: StoreConfig, threads):
        self.ell, self.threads = ell, threads
        self.f32 = config.element_width == 4
        n = half_length(ell)
        self.vecs = [np.zeros(n, dtype=config.dtype) for _ in range(SLOT_COUNT)]
        self.slots = [0, 1, 2]  # v0, v1, spare

    def step(self):
        v0, v1, out = (self.vecs[s] for s in self.slots)
        R = _f_ram(v1, v0, self.ell, out, self.threads, self.f32)
        W = _w_ram(out, self.ell, R, self.threads, self.f32)
        self.slots = [self.slots[1], self.slots[2], self.slots[0]]
        return R, W

    def newest(self) -> np.ndarray:
        return self.vecs[self.slots[1]]


class _BlockStepper:
    """Iteration through block transfers only, for vectors that live on disk."""

    def __init__(self, ell, config: StoreConfig, threads, vectors: list[Vector],
                 recorder: Optional[IORecorder], slots=(0, 1, 2)):
        self.ell, self.threads = ell, threads
        self.f32 = config.element_width == 4
        self.plan = config.plan(ell)
        self.vecs = vectors
        self.recorder = recorder
        self.slots = list(slots)

    def _pass(self, name):
        if self.recorder is not None:
            self.recorder.current_pass = name

    def step(self):
        ell, plan, f32, th = self.ell, self.plan, self.f32, self.threads
        v0, v1, out = (self.vecs[s] for s in self.slots)
        best = [-np.inf]

        def diff(x0, vals, ref):
            ref = ref.read_block(x0, len(vals), tag="compare")
            best[0] = max(best[0], float(np.max(vals.astype(np.float64) - ref.astype(np.float64))))

        def emit_same(x0, vals):
            out.write_block(x0, vals, tag="output")
            diff(x0, vals.astype(out.dtype), v1)

        def emit_combine(x0, vals):
            vals = np.maximum(out.read_block(x0, len(vals), tag="combine"), vals.astype(out.dtype))
            out.write_block(x0, vals, tag="output")
            diff(x0, vals, v1)

        self._pass("F.l00")
        sequential_l00_pass(v0, ell, plan, emit_same, f32, th)
        self._pass("F.l01")
        recurse_l01(v1, ell, plan, lambda x0, vals: out.write_block(x0, vals, tag="output"),
                    0.0, f32, th)
        self._pass("F.l10")
        recurse_l10(v1, ell, plan, emit_combine, 0.0, f32, th)
        out.flush()
        R = best[0]

        # W pass: the old v0 slot is free scratch for the b-advancing branch
        scratch, v2 = v0, out
        two = 2.0 * R
        worst = [-np.inf]

        def w_update(x0, vals):
            ref = v2.read_block(x0, len(vals), tag="compare").astype(np.float64)
            worst[0] = max(worst[0], float(np.max((ref + two) - vals)))

        def emit_w_combine(x0, vals):
            vals = np.maximum(scratch.read_block(x0, len(vals), tag="combine").astype(np.float64), vals)
            w_update(x0, vals)

        self._pass("W.l00")
        sequential_l00_pass(v2, ell, plan, w_update, f32, th)
        self._pass("W.l01")
        recurse_l01(v2, ell, plan, lambda x0, vals: scratch.write_block(x0, vals, tag="output"),
                    R, f32, th)
        self._pass("W.l10")
        recurse_l10(v2, ell, plan, emit_w_combine, R, f32, th)
        self._pass("")
        self.slots = [self.slots[1], self.slots[2], self.slots[0]]
        return R, worst[0]

    def newest(self) -> np.ndarray:
        return self.vecs[self.slots[1]].to_array()


_META_INT = ("sigma", "d", "ell", "element_width", "iteration", "best_iteration",
             "iterations_run", "stall")


def _meta_values(ell, config, tracker: Tracker, slots):
    return {
        "sigma": 2,
        "d": 2,
        "ell": ell,
        "element_width": config.element_width,
        "iteration": tracker.first_index() - 1,
        "symmetry": "half",
        "slots": ",".join(str(s) for s in slots),
        "r": repr(float(tracker.r)),
        "epsilon": repr(float(tracker.epsilon)),
        "best_iteration": tracker.best_iteration,
        "iterations_run": tracker.iterations_run,
        "stall": tracker.stall,
        "started": int(tracker.started),
    }


def _restore(directory: Path, ell: int, config: StoreConfig, tracker: Tracker) -> list[int]:
    meta = read_metadata(directory)
    try:
        ints = {k: int(meta[k]) for k in _META_INT}
        slots = [int(s) for s in meta["slots"].split(",")]
        r, eps = float(meta["r"]), float(meta["epsilon"])
        started = bool(int(meta["started"]))
    except (KeyError, ValueError) as exc:
        raise StoreIOError(f"checkpoint metadata in {directory} is incomplete: {exc}") from exc
    expected = {"sigma": 2, "d": 2, "ell": ell, "element_width": config.element_width}
    for key, value in expected.items():
        if ints[key] != value:
            raise StoreIOError(f"checkpoint has {key}={ints[key]}, this run needs {value}")
    if sorted(slots) != list(range(SLOT_COUNT)) or meta.get("symmetry") != "half":
        raise StoreIOError(f"checkpoint metadata in {directory} is inconsistent")
    tracker.r, tracker.epsilon = r, eps
    tracker.best_iteration = ints["best_iteration"]
    tracker.iterations_run = ints["iterations_run"]
    tracker.stall = ints["stall"]
    tracker.started = started
    return slots


def binary_feasible_triplet(
    ell: int,
    n: Optional[int] = None,
    *,
    rule: Optional[StopRule] = None,
    store: Optional[StoreConfig] = None,
    threads: int = 1,
    keep_u: bool = False,
    resume: bool = False,
    recorder: Optional[IORecorder] = None,
    on_iteration: Optional[Callable[[int, float, float, Tracker], None]] = None,
    on_vector: Optional[Callable[[int, np.ndarray], None]] = None,
) -> TripletResult:
    """Run the binary feasible-triplet iteration and return the best triplet.

    ``store`` selects RAM or disk vectors (default RAM, 64-bit). Disk runs
    write a checkpoint after every iteration and ``resume=True`` continues
    from it. ``on_vector`` receives each new generation (mainly for tests;
    on disk it costs a full read).
    """
    _check_ell(ell)
    if rule is None:
        rule = StopRule(n=n)
    elif n is not None:
        rule = StopRule(n=n, tol=rule.tol, patience=rule.patience,
                        max_iterations=rule.max_iterations)
    rule.validate(2)
    config = store if store is not None else StoreConfig()
    threads = max(1, int(threads))
    tracker = Tracker(2, rule)

    if config.mode == "ram":
        if resume:
            raise InvalidInputError("resume needs a disk store")
        stepper = _RamStepper(ell, config, threads)
    else:
        directory = config.directory
        n_half = half_length(ell)
        if resume:
            slots = _restore(directory, ell, config, tracker)
            vecs = [DiskVector(f"slot{s}", slot_path(directory, s, config.element_width), n_half,
                               config.dtype, recorder) for s in range(SLOT_COUNT)]
        else:
            check_disk_space(directory, ell, config.element_width)
            slots = [0, 1, 2]
            vecs = [DiskVector(f"slot{s}", slot_path(directory, s, config.element_width), n_half,
                               config.dtype, recorder, create=True) for s in range(SLOT_COUNT)]
        stepper = _BlockStepper(ell, config, threads, vecs, recorder, slots)

    while not tracker.done():
        i = tracker.first_index()
        R, W = stepper.step()
        E = max(0.0, W)
        u = stepper.newest() if keep_u or on_vector is not None else None
        if on_vector is not None:
            on_vector(i, u)
        tracker.record(i, R, E, np.array(u, dtype=np.float64) if keep_u else None)
        if config.mode == "disk":
            write_metadata(config.directory, _meta_values(ell, config, tracker, stepper.slots))
        if on_iteration is not None:
            on_iteration(i, R, E, tracker)
    if config.mode == "disk":
        for v in stepper.vecs:
            v.close()
    return tracker.result()
