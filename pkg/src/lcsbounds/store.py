"""Vector storage for the binary engine, in RAM or on disk.

A stored vector is the lower half ``[0, 2^(2l-1))`` of a complement-symmetric
vector indexed by interleaved pairs. On disk each vector is one headerless
file of little-endian floats, index 0 first, so element ``i`` lives at byte
``i * width``. A sidecar ``run.meta`` file of ``key: value`` lines records the
instance, which file holds which generation and the running best triplet.

The three loop families are driven here so that every transfer is a single
contiguous range:

* ``sequential_l00_pass`` streams the same-head range in two phases, first
  reading the stored half forwards, then backwards through the fold;
* ``recurse_l01`` splits the (0,1)-head range four ways per level; each leaf
  reads one window of ``2 * num_strs`` elements;
* ``recurse_l10`` does the same for the branch that advances ``a``; leaves in
  the upper logical half read their window through the fold.
"""
from __future__ import annotations

import os
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Optional

import numpy as np

from . import _kernels
from .errors import CapacityError, ConfigurationError, InvalidInputError, StoreIOError

META_NAME = "run.meta"
SLOT_COUNT = 3

Emit = Callable[[int, np.ndarray], None]


def dtype_for(width: int) -> np.dtype:
    if width == 8:
        return np.dtype("<f8")
    if width == 4:
        return np.dtype("<f4")
    raise InvalidInputError(f"element width must be 4 or 8 bytes, got {width}")


def half_length(ell: int) -> int:
    return 1 << (2 * ell - 1)


def required_disk_bytes(ell: int, element_width: int) -> int:
    """Bytes for three stored generations of the symmetry-halved vector."""
    return SLOT_COUNT * element_width * half_length(ell)


@dataclass(frozen=True)
class ChunkPlan:
    stop_depth: int
    chunk_count: int
    chunk_elements: int


def plan_recursion(ell: int, element_width: int, memory_budget: int) -> ChunkPlan:
    """Smallest recursion depth whose leaf working set fits ``memory_budget``.

    A leaf at depth ``s`` handles ``num_strs = 4^(l-1-s)`` pairs, reading
    ``2 * num_strs`` elements and writing ``num_strs``.
    """
    dtype_for(element_width)
    if ell < 1:
        raise InvalidInputError("ell must be >= 1")
    if memory_budget < 4 * element_width:
        raise ConfigurationError(
            f"memory budget {memory_budget} B is below one 4-element chunk"
        )
    for depth in range(ell):
        num_strs = 4 ** (ell - 1 - depth)
        if 3 * num_strs * element_width <= memory_budget:
            return ChunkPlan(depth, 4 ** depth, num_strs)
    raise ConfigurationError(f"memory budget {memory_budget} B too small for ell={ell}")


@dataclass
class StoreConfig:
    """Where the binary engine keeps its vectors.

    ``stop_depth`` overrides the depth derived from ``memory_budget``.
    """

    mode: str = "ram"
    directory: Optional[Path] = None
    element_width: int = 8
    memory_budget: int = 1 << 30
    stop_depth: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("ram", "disk"):
            raise InvalidInputError(f"mode must be 'ram' or 'disk', got {self.mode!r}")
        dtype_for(self.element_width)
        if self.directory is not None:
            self.directory = Path(self.directory)
        if self.mode == "disk" and self.directory is None:
            raise InvalidInputError("disk mode needs a directory")

    @property
    def dtype(self) -> np.dtype:
        return dtype_for(self.element_width)

    def plan(self, ell: int) -> ChunkPlan:
        if self.stop_depth is None:
            return plan_recursion(ell, self.element_width, self.memory_budget)
        if not 0 <= self.stop_depth <= max(ell - 1, 0):
            raise ConfigurationError(f"stop_depth must be in [0, {ell - 1}] for ell={ell}")
        return ChunkPlan(self.stop_depth, 4 ** self.stop_depth, 4 ** (ell - 1 - self.stop_depth))


# ---------------------------------------------------------------------------
# I/O


@dataclass
class IORecorder:
    """Log of block transfers: ``(pass, vector, op, tag, start, count)`` tuples."""

    events: list = field(default_factory=list)
    current_pass: str = ""

    def log(self, name, op, tag, start, count):
        self.events.append((self.current_pass, name, op, tag, start, count))

    def select(self, pass_name=None, name=None, op=None, tag=None):
        return [
            e for e in self.events
            if (pass_name is None or e[0] == pass_name)
            and (name is None or e[1] == name)
            and (op is None or e[2] == op)
            and (tag is None or e[3] == tag)
        ]


class Vector:
    """Block access to one stored vector."""

    def __init__(self, name: str, length: int, dtype: np.dtype, recorder: Optional[IORecorder] = None):
        self.name = name
        self.length = length
        self.dtype = np.dtype(dtype)
        self.recorder = recorder

    def _check(self, start: int, count: int) -> None:
        if start < 0 or count < 0 or start + count > self.length:
            raise StoreIOError(
                f"{self.name}: range [{start}, {start + count}) outside [0, {self.length})"
            )

    def _log(self, op, tag, start, count):
        if self.recorder is not None:
            self.recorder.log(self.name, op, tag, start, count)

    def read_block(self, start: int, count: int, tag: str = "") -> np.ndarray:
        raise NotImplementedError

    def write_block(self, start: int, values: np.ndarray, tag: str = "") -> None:
        raise NotImplementedError

    def flush(self) -> None:
        pass

    def to_array(self) -> np.ndarray:
        return np.array(self.read_block(0, self.length, tag="snapshot"))


class RamVector(Vector):
    def __init__(self, name, length, dtype, recorder=None, data=None):
        super().__init__(name, length, dtype, recorder)
        self.data = np.zeros(length, dtype=self.dtype) if data is None else data

    def read_block(self, start, count, tag=""):
        self._check(start, count)
        self._log("read", tag, start, count)
        return self.data[start:start + count]

    def write_block(self, start, values, tag=""):
        values = np.asarray(values)
        self._check(start, len(values))
        self._log("write", tag, start, len(values))
        self.data[start:start + len(values)] = values


class DiskVector(Vector):
    """Headerless little-endian file accessed with positioned reads and writes."""

    def __init__(self, name, path, length, dtype, recorder=None, create=False):
        super().__init__(name, length, dtype, recorder)
        self.path = Path(path)
        nbytes = length * self.dtype.itemsize
        if create:
            with open(self.path, "wb") as fh:
                fh.truncate(nbytes)
        elif not self.path.exists():
            raise StoreIOError(f"missing vector file {self.path}")
        actual = self.path.stat().st_size
        if actual != nbytes:
            raise StoreIOError(f"{self.path}: size {actual} B, expected {nbytes} B")
        self.fd = os.open(self.path, os.O_RDWR)

    def read_block(self, start, count, tag=""):
        self._check(start, count)
        self._log("read", tag, start, count)
        width = self.dtype.itemsize
        raw = os.pread(self.fd, count * width, start * width)
        if len(raw) != count * width:
            raise StoreIOError(
                f"{self.path}: short read at byte {start * width} ({len(raw)} of {count * width} B)"
            )
        return np.frombuffer(raw, dtype=self.dtype)

    def write_block(self, start, values, tag=""):
        values = np.ascontiguousarray(values, dtype=self.dtype)
        self._check(start, len(values))
        self._log("write", tag, start, len(values))
        width = self.dtype.itemsize
        data = values.tobytes()
        done = os.pwrite(self.fd, data, start * width)
        if done != len(data):
            raise StoreIOError(f"{self.path}: short write at byte {start * width}")

    def flush(self):
        os.fsync(self.fd)

    def close(self):
        if self.fd is not None:
            os.close(self.fd)
            self.fd = None

    def __del__(self):
        try:
            self.close()
        except (OSError, AttributeError):
            pass


def slot_path(directory: Path, slot: int, width: int) -> Path:
    return Path(directory) / f"slot{slot}.f{8 * width}"


def check_disk_space(directory: Path, ell: int, element_width: int) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if not os.access(directory, os.W_OK):
        raise CapacityError(f"{directory} is not writable")
    needed = required_disk_bytes(ell, element_width)
    existing = sum(
        p.stat().st_size for s in range(SLOT_COUNT)
        if (p := slot_path(directory, s, element_width)).exists()
    )
    free = shutil.disk_usage(directory).free
    if free + existing < needed:
        raise CapacityError(
            f"disk mode for ell={ell} needs {needed} bytes in {directory}, {free} free",
            required_bytes=needed,
        )


# ---------------------------------------------------------------------------
# metadata sidecar


def write_metadata(directory: Path, values: dict) -> None:
    path = Path(directory) / META_NAME
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for key, value in values.items():
            fh.write(f"{key}: {value}\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def read_metadata(directory: Path) -> dict:
    path = Path(directory) / META_NAME
    if not path.exists():
        raise StoreIOError(f"no checkpoint metadata at {path}")
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, sep, value = line.partition(":")
            if not sep:
                raise StoreIOError(f"{path}: malformed line {line!r}")
            out[key.strip()] = value.strip()
    return out


# ---------------------------------------------------------------------------
# loop drivers


def _run_leaf(kernel, window, w0, ell, x0, x1, shift, f32, threads):
    vals = np.empty(x1 - x0)
    if threads == 1 or x1 - x0 < 2 * threads:
        if kernel is _kernels.same_block:
            kernel(window, w0, ell, x0, x1, vals, f32)
        else:
            kernel(window, w0, ell, x0, x1, shift, vals, f32)
        return vals
    if kernel is _kernels.same_block:
        call = lambda a, b: _kernels.same_block(window, w0, ell, a, b, vals[a - x0:b - x0], f32)
    else:
        call = lambda a, b: kernel(window, w0, ell, a, b, shift, vals[a - x0:b - x0], f32)
    for_slices(x0, x1, threads, call)
    return vals


def for_slices(lo: int, hi: int, threads: int, fn: Callable[[int, int], object]) -> list:
    """Run ``fn`` on ``threads`` contiguous slices of ``[lo, hi)`` and return results in order."""
    spans = split_range(lo, hi, threads)
    if len(spans) == 1:
        return [fn(*spans[0])]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(len(spans)) as pool:
        return list(pool.map(lambda s: fn(*s), spans))


def split_range(lo: int, hi: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, hi - lo))
    step, extra = divmod(hi - lo, parts)
    spans, start = [], lo
    for k in range(parts):
        end = start + step + (1 if k < extra else 0)
        spans.append((start, end))
        start = end
    return spans


def sequential_l00_pass(src: Vector, ell: int, plan: ChunkPlan, emit: Emit,
                        f32: bool = False, threads: int = 1) -> None:
    """Same-head pairs ``[0, 4^(l-1))`` in streamed chunks.

    Phase one covers ``[0, 4^(l-1)/2)`` and reads the stored half forwards;
    phase two covers the rest and reads it backwards through the fold.
    """
    quarter = 1 << (2 * ell - 2)
    if ell == 1:
        window = src.read_block(0, src.length, tag="window")
        emit(0, _run_leaf(_kernels.same_block, window, 0, ell, 0, 1, 0.0, f32, threads))
        return
    full = 1 << (2 * ell)
    mid = quarter // 2
    chunk = max(1, plan.chunk_elements // 2)
    for x0 in range(0, mid, chunk):
        x1 = min(mid, x0 + chunk)
        window = src.read_block(4 * x0, 4 * (x1 - x0), tag="window")
        emit(x0, _run_leaf(_kernels.same_block, window, 4 * x0, ell, x0, x1, 0.0, f32, threads))
    for x0 in range(mid, quarter, chunk):
        x1 = min(quarter, x0 + chunk)
        w0 = full - 4 * x1
        window = src.read_block(w0, 4 * (x1 - x0), tag="window")
        emit(x0, _run_leaf(_kernels.same_block, window, w0, ell, x0, x1, 0.0, f32, threads))


def l01_leaves(ell: int, stop_depth: int, offset: int = 0, idx_offset: int = 0,
               depth: int = 0) -> Iterator[tuple[int, int, int]]:
    """Yield ``(offset, idx_offset, num_strs)`` leaves of the four-way split, in order.

    Pairs ``[4^(l-1) + offset, + num_strs)`` read ``[idx_offset, + 2*num_strs)``.
    """
    num_strs = 1 << (2 * (ell - depth) - 2)
    if depth < stop_depth:
        q = num_strs // 4
        # second digit (a, b) = (0,0), (0,1), (1,0), (1,1): b selects a
        # num_strs-sized half of the window, a a num_strs/2-sized quarter
        for k, step in enumerate((0, 4 * q, 2 * q, 6 * q)):
            yield from l01_leaves(ell, stop_depth, offset + k * q, idx_offset + step, depth + 1)
    else:
        yield offset, idx_offset, num_strs


def recurse_l01(src: Vector, ell: int, plan: ChunkPlan, emit: Emit, shift: float = 0.0,
                f32: bool = False, threads: int = 1) -> None:
    """Branch advancing ``b`` over pairs with heads (0, 1), one sequential window per leaf."""
    quarter = 1 << (2 * ell - 2)
    for offset, idx_offset, num_strs in l01_leaves(ell, plan.stop_depth):
        window = src.read_block(idx_offset, 2 * num_strs, tag="window")
        x0 = quarter + offset
        emit(x0, _run_leaf(_kernels.l01_block, window, idx_offset, ell, x0, x0 + num_strs,
                           shift, f32, threads))


def l10_leaves(ell: int, stop_depth: int) -> list[tuple[int, int, int]]:
    """``(x_start, x_count, logical_window_start)`` for the branch advancing ``a``.

    A node at level ``k`` fixes pair digits ``1..k-1`` and the ``a`` bit of
    digit ``k``; its pairs are contiguous and the logical indices they read
    form one block of ``4^(l-k)``. Leaves sit at level ``stop_depth + 1``
    (capped at ``l - 1``).
    """
    quarter = 1 << (2 * ell - 2)
    if ell == 1 or stop_depth == 0:
        return [(quarter, quarter, -1)]
    level = min(stop_depth + 1, ell - 1)
    leaves = []

    def visit(x_lo, i_lo, k):
        if k == level:
            leaves.append((x_lo, 2 * 4 ** (ell - 1 - k), i_lo))
            return
        digit = 4 ** (ell - 1 - k)
        for b_bit in (0, 1):
            for a_next in (0, 1):
                visit(x_lo + b_bit * digit + a_next * digit // 2,
                      i_lo + (2 * a_next + b_bit) * digit, k + 1)

    for a1 in (0, 1):
        visit(quarter + a1 * quarter // 2, (2 * a1 + 1) * quarter, 1)
    return leaves


def recurse_l10(src: Vector, ell: int, plan: ChunkPlan, emit: Emit, shift: float = 0.0,
                f32: bool = False, threads: int = 1) -> None:
    """Branch advancing ``a`` over pairs with heads (0, 1).

    Windows in the upper logical half are read forwards at their folded
    position and consumed in reverse by the kernel.
    """
    half = 1 << (2 * ell - 1)
    full = half << 1
    for x0, count, i_lo in l10_leaves(ell, plan.stop_depth):
        if i_lo < 0:
            w0, size = 0, src.length
        else:
            size = 2 * count
            w0 = i_lo if i_lo < half else full - i_lo - size
        window = src.read_block(w0, size, tag="window")
        emit(x0, _run_leaf(_kernels.l10_block, window, w0, ell, x0, x0 + count, shift, f32, threads))
