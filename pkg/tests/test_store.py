import os
from collections import namedtuple

import numpy as np
import pytest

from lcsbounds import store as store_mod
from lcsbounds.binary import (
    _mismatch_index,
    apply_F_binary,
    binary_feasible_triplet,
)
from lcsbounds.codec import fold_index
from lcsbounds.errors import CapacityError, ConfigurationError, InvalidInputError, StoreIOError
from lcsbounds.store import (
    ChunkPlan,
    DiskVector,
    IORecorder,
    RamVector,
    StoreConfig,
    l01_leaves,
    l10_leaves,
    plan_recursion,
    read_metadata,
    recurse_l01,
    recurse_l10,
    required_disk_bytes,
    sequential_l00_pass,
)

MiB = 1 << 20


def test_plan_examples():
    assert plan_recursion(10, 8, 64 * MiB).stop_depth == 0
    big = plan_recursion(20, 4, 1 << 30)
    assert 3 * big.chunk_elements * 4 <= 1 << 30
    assert big.chunk_count == 4 ** big.stop_depth
    assert required_disk_bytes(20, 4) == 3 * 4 * 2 ** 39
    with pytest.raises(ConfigurationError):
        plan_recursion(5, 8, 31)


@pytest.mark.parametrize("ell,width,budget", [(3, 8, 32), (8, 4, 4096), (12, 8, MiB), (25, 4, 1 << 30)])
def test_plan_is_smallest_fitting(ell, width, budget):
    plan = plan_recursion(ell, width, budget)
    assert 2 * plan.chunk_elements * width <= budget
    assert 3 * plan.chunk_elements * width <= budget
    if plan.stop_depth > 0:
        assert 3 * 4 * plan.chunk_elements * width > budget


def test_config_validation():
    with pytest.raises(InvalidInputError):
        StoreConfig(mode="tape")
    with pytest.raises(InvalidInputError):
        StoreConfig(mode="disk")
    with pytest.raises(InvalidInputError):
        StoreConfig(element_width=2)
    with pytest.raises(ConfigurationError):
        StoreConfig(stop_depth=5).plan(3)
    assert StoreConfig(stop_depth=2).plan(4) == ChunkPlan(2, 16, 4)


def test_l01_leaves_ell3():
    assert list(l01_leaves(3, 1)) == [(0, 0, 4), (4, 16, 4), (8, 8, 4), (12, 24, 4)]
    assert list(l01_leaves(3, 0)) == [(0, 0, 16)]


def _accessed(ell, x, advance_a):
    i = _mismatch_index(x, ell, advance_a)
    return {fold_index(i, ell), fold_index(i + (2 if advance_a else 1), ell)}


@pytest.mark.parametrize("ell", range(1, 7))
def test_l01_leaf_geometry(ell):
    q = 1 << (2 * ell - 2)
    for depth in range(ell):
        leaves = list(l01_leaves(ell, depth))
        assert len(leaves) == 4 ** depth
        outputs = sorted((q + off, q + off + n) for off, _, n in leaves)
        assert outputs[0][0] == q and outputs[-1][1] == 2 * q
        assert all(a[1] == b[0] for a, b in zip(outputs, outputs[1:]))
        windows = sorted((idx, idx + 2 * n) for _, idx, n in leaves)
        assert windows[0][0] == 0 and windows[-1][1] == 2 * q
        assert all(a[1] == b[0] for a, b in zip(windows, windows[1:]))
        for off, idx, n in leaves:
            for x in range(q + off, q + off + n):
                assert all(idx <= j < idx + 2 * n for j in _accessed(ell, x, False))


@pytest.mark.parametrize("ell", range(1, 7))
def test_l10_leaf_geometry(ell):
    q = 1 << (2 * ell - 2)
    half = 2 * q
    for depth in range(ell):
        leaves = l10_leaves(ell, depth)
        outputs = sorted((x0, x0 + c) for x0, c, _ in leaves)
        assert outputs[0][0] == q and outputs[-1][1] == 2 * q
        assert all(a[1] == b[0] for a, b in zip(outputs, outputs[1:]))
        stored = []
        for x0, count, i_lo in leaves:
            if i_lo < 0:
                w0, size = 0, half
            else:
                size = 2 * count
                w0 = i_lo if i_lo < half else 2 * half - i_lo - size
            stored.append((w0, w0 + size))
            for x in range(x0, x0 + count):
                assert all(w0 <= j < w0 + size for j in _accessed(ell, x, True))
        if len(leaves) > 1:
            stored.sort()
            assert stored[0][0] == 0 and stored[-1][1] == half
            assert all(a[1] == b[0] for a, b in zip(stored, stored[1:]))


def _collect(n):
    out = np.full(n, np.nan)

    def emit(x0, vals):
        assert np.all(np.isnan(out[x0:x0 + len(vals)]))
        out[x0:x0 + len(vals)] = vals

    return out, emit


@pytest.mark.parametrize("ell", range(1, 8))
def test_drivers_match_fused_kernel(ell):
    rng = np.random.default_rng(ell)
    half = 1 << (2 * ell - 1)
    q = half // 2
    v1, v0 = rng.random(half), rng.random(half)
    want = apply_F_binary(v1, v0, ell)
    for depth in range(ell):
        plan = StoreConfig(stop_depth=depth).plan(ell)
        same, emit = _collect(half)
        sequential_l00_pass(RamVector("v0", half, np.float64, data=v0), ell, plan, emit)
        b_adv, emit_b = _collect(half)
        recurse_l01(RamVector("v1", half, np.float64, data=v1), ell, plan, emit_b)
        a_adv, emit_a = _collect(half)
        recurse_l10(RamVector("v1", half, np.float64, data=v1), ell, plan, emit_a)
        assert np.array_equal(same[:q], want[:q])
        assert np.array_equal(np.maximum(b_adv[q:], a_adv[q:]), want[q:])


def test_l00_trace_ell2():
    rec = IORecorder()
    v = RamVector("v0", 8, np.float64, rec, data=np.arange(8.0))
    out, emit = _collect(8)
    sequential_l00_pass(v, 2, StoreConfig(stop_depth=0).plan(2), emit)
    reads = [(e[4], e[5]) for e in rec.events]
    assert reads == [(0, 8), (0, 8)]
    # x=2 is the pair (01, 00); its successors 8..11 fold onto 7..4
    assert out[2] == 1 + 0.25 * (7 + 6 + 5 + 4)


def test_l00_constant():
    for ell in range(1, 6):
        half = 1 << (2 * ell - 1)
        out, emit = _collect(half)
        sequential_l00_pass(RamVector("c", half, np.float64, data=np.full(half, 3.0)), ell,
                            StoreConfig(stop_depth=ell - 1).plan(ell), emit)
        assert np.all(out[:half // 2] == 4.0)


def test_disk_vector_round_trip(tmp_path):
    v = DiskVector("a", tmp_path / "a.f64", 100, np.float64, create=True)
    data = np.random.default_rng(0).random(30)
    v.write_block(10, data)
    assert np.array_equal(v.read_block(10, 30), data)
    assert np.all(v.read_block(0, 10) == 0)
    v.close()
    w = DiskVector("b", tmp_path / "b.f32", 16, np.float32, create=True)
    vals = np.array([0.1, 1e-30, 3.5, 65504.0], dtype=np.float32)
    w.write_block(3, vals)
    assert w.read_block(3, 4).tobytes() == vals.tobytes()
    raw = (tmp_path / "b.f32").read_bytes()
    assert raw[12:16] == np.float32(0.1).tobytes()  # little-endian, no header
    with pytest.raises(StoreIOError):
        w.read_block(14, 4)
    with pytest.raises(StoreIOError):
        w.write_block(-1, vals)
    w.close()


def test_disk_vector_short_file(tmp_path):
    path = tmp_path / "a.f64"
    DiskVector("a", path, 64, np.float64, create=True).close()
    with open(path, "r+b") as fh:
        fh.truncate(100)
    with pytest.raises(StoreIOError):
        DiskVector("a", path, 64, np.float64)
    with pytest.raises(StoreIOError):
        DiskVector("a", tmp_path / "missing", 64, np.float64)


def test_short_read_detected(tmp_path):
    path = tmp_path / "a.f64"
    v = DiskVector("a", path, 64, np.float64, create=True)
    with open(path, "r+b") as fh:
        fh.truncate(80)
    with pytest.raises(StoreIOError, match="short read"):
        v.read_block(0, 64)
    v.close()


def _run_pair(tmp_path, ell, n, width=8, depth=None, threads=1):
    ram, disk = [], []
    a = binary_feasible_triplet(ell, n=n, store=StoreConfig(element_width=width), threads=threads,
                                on_vector=lambda i, u: ram.append(np.array(u)))
    d = tmp_path / f"run{ell}_{width}_{depth}"
    b = binary_feasible_triplet(ell, n=n, threads=threads,
                                store=StoreConfig("disk", d, width, stop_depth=depth),
                                on_vector=lambda i, u: disk.append(np.array(u)))
    return a, b, ram, disk


@pytest.mark.parametrize("ell", [1, 2, 3, 4, 6])
@pytest.mark.parametrize("width", [8, 4])
def test_disk_equals_ram(tmp_path, ell, width):
    for depth in sorted({0, 1, ell - 1} & set(range(ell))):
        a, b, ram, disk = _run_pair(tmp_path, ell, 25, width, depth)
        assert (a.r, a.epsilon) == (b.r, b.epsilon)
        assert len(ram) == len(disk)
        assert all(np.array_equal(x, y) for x, y in zip(ram, disk))


def test_disk_threads_bitwise(tmp_path):
    runs = []
    for t in (1, 3):
        d = tmp_path / f"t{t}"
        runs.append(binary_feasible_triplet(7, n=15, threads=t,
                                            store=StoreConfig("disk", d, stop_depth=2)))
    assert (runs[0].r, runs[0].epsilon) == (runs[1].r, runs[1].epsilon)


def _check_sequential(events, ell):
    half = 1 << (2 * ell - 1)
    q = half // 2
    by_pass = {}
    for e in events:
        by_pass.setdefault(e[0], []).append(e)
    for name, evs in by_pass.items():
        for (vec, op, tag), group in _group(evs).items():
            spans = [(s, s + c) for s, c in group]
            if tag == "window" and name.endswith("l00"):
                continue  # the same-head stream reads each stored value once per phase
            ordered = sorted(spans)
            assert all(a[1] <= b[0] for a, b in zip(ordered, ordered[1:])), (name, vec, op, tag)
            if tag in ("output", "compare", "combine"):
                lo, hi = (0, q) if name.endswith("l00") else (q, 2 * q)
                assert ordered[0][0] == lo and ordered[-1][1] == hi, (name, tag)
                assert sum(b - a for a, b in ordered) == hi - lo
            if tag == "window":
                assert sum(b - a for a, b in ordered) == half, (name, tag)
                assert ordered[0][0] == 0 and ordered[-1][1] == half


def _group(evs):
    groups = {}
    for _, vec, op, tag, start, count in evs:
        groups.setdefault((vec, op, tag), []).append((start, count))
    return groups


@pytest.mark.parametrize("ell,depth", [(3, 1), (5, 2), (6, 1), (6, 4)])
def test_io_sequential(tmp_path, ell, depth):
    rec = IORecorder()
    binary_feasible_triplet(ell, n=4, recorder=rec,
                            store=StoreConfig("disk", tmp_path / "s", stop_depth=depth))
    # each iteration repeats the same pattern over rotated slots
    per_iter = {}
    it = -1
    last = None
    for e in rec.events:
        if e[0] == "F.l00" and last != "F.l00":
            it += 1
        last = e[0]
        per_iter.setdefault(it, []).append(e)
    assert len(per_iter) == 3
    for evs in per_iter.values():
        _check_sequential(evs, ell)
        q = 1 << (2 * ell - 2)
        assert sum(e[5] for e in evs if e[2] == "write") == 4 * q


def test_rotation_relabels(tmp_path):
    d = tmp_path / "rot"
    binary_feasible_triplet(3, n=2, store=StoreConfig("disk", d))
    assert read_metadata(d)["slots"] == "1,2,0"
    binary_feasible_triplet(3, n=3, store=StoreConfig("disk", d), resume=True)
    assert read_metadata(d)["slots"] == "2,0,1"
    assert sorted(p.name for p in d.iterdir()) == ["run.meta", "slot0.f64", "slot1.f64", "slot2.f64"]


class Stop(Exception):
    pass


@pytest.mark.parametrize("width", [8, 4])
def test_resume_matches_straight_run(tmp_path, width):
    ell, n = 5, 40
    straight = binary_feasible_triplet(ell, n=n, store=StoreConfig("disk", tmp_path / "a", width))

    def interrupt(i, R, E, t):
        if i == 17:
            raise Stop

    with pytest.raises(Stop):
        binary_feasible_triplet(ell, n=n, store=StoreConfig("disk", tmp_path / "b", width),
                                on_iteration=interrupt)
    meta = read_metadata(tmp_path / "b")
    assert meta["iteration"] == "17" and meta["symmetry"] == "half"
    resumed = binary_feasible_triplet(ell, n=n, store=StoreConfig("disk", tmp_path / "b", width),
                                      resume=True)
    assert (resumed.r, resumed.epsilon, resumed.best_iteration, resumed.iterations_run) == \
        (straight.r, straight.epsilon, straight.best_iteration, straight.iterations_run)


def test_resume_rejects_mismatch(tmp_path):
    d = tmp_path / "m"
    binary_feasible_triplet(3, n=4, store=StoreConfig("disk", d))
    with pytest.raises(StoreIOError):
        binary_feasible_triplet(4, n=6, store=StoreConfig("disk", d), resume=True)
    with pytest.raises(StoreIOError):
        binary_feasible_triplet(3, n=6, store=StoreConfig("disk", d, element_width=4), resume=True)
    os.remove(d / "slot1.f64")
    with pytest.raises(StoreIOError):
        binary_feasible_triplet(3, n=6, store=StoreConfig("disk", d), resume=True)
    with pytest.raises(StoreIOError):
        binary_feasible_triplet(3, n=6, store=StoreConfig("disk", tmp_path / "none"), resume=True)


def test_disk_space_precheck(tmp_path, monkeypatch):
    Usage = namedtuple("Usage", "total used free")
    monkeypatch.setattr(store_mod.shutil, "disk_usage", lambda p: Usage(10 ** 6, 0, 1000))
    with pytest.raises(CapacityError) as info:
        binary_feasible_triplet(6, n=3, store=StoreConfig("disk", tmp_path / "x"))
    assert info.value.required_bytes == 3 * 8 * 2 ** 11
