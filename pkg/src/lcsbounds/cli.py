"""Command-line entry point: ``lcsbounds {bound,binary-bound,estimate,verify}``.

Exit status: 0 success, 1 verification failure, 2 usage error, 3 capacity or
I/O error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import re
import sys
import time
from dataclasses import dataclass
from decimal import ROUND_FLOOR, Decimal
from pathlib import Path
from typing import Optional, Sequence

import numba
import numpy as np

from . import __version__
from .binary import binary_feasible_triplet
from .codec import Params
from .errors import CapacityError, ConfigurationError, InvalidInputError, StoreIOError
from .general import DEFAULT_MEMORY_BUDGET, feasible_triplet
from .golden import BINARY, TOLERANCE, general_cells
from .iteration import StopRule, TripletResult
from .oracle import estimate_gamma
from .store import META_NAME, SLOT_COUNT, StoreConfig, dtype_for, half_length, read_metadata, slot_path

log = logging.getLogger("lcsbounds")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3
CSV_FIELDS = ["sigma", "d", "ell", "iterations", "r", "epsilon", "lower_bound",
              "wall_seconds", "threads", "mode"]

_UNITS = {"": 1, "b": 1, "k": 10 ** 3, "kb": 10 ** 3, "kib": 1 << 10, "m": 10 ** 6,
          "mb": 10 ** 6, "mib": 1 << 20, "g": 10 ** 9, "gb": 10 ** 9, "gib": 1 << 30,
          "t": 10 ** 12, "tb": 10 ** 12, "tib": 1 << 40}


def parse_size(text: str) -> int:
    """``"16MiB"`` -> 16777216. Plain numbers are bytes."""
    m = re.fullmatch(r"\s*(\d+(?:\.\d+)?)\s*([a-zA-Z]*)\s*", text)
    if not m or m.group(2).lower() not in _UNITS:
        raise argparse.ArgumentTypeError(f"not a byte size: {text!r}")
    return int(float(m.group(1)) * _UNITS[m.group(2).lower()])


def floor6(x: float) -> str:
    """Round down to six decimals, the convention of the published tables."""
    return str(Decimal(repr(x)).quantize(Decimal("0.000001"), rounding=ROUND_FLOOR))


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


@dataclass
class RunRecord:
    sigma: int
    d: int
    ell: int
    iterations: int
    r: float
    epsilon: float
    lower_bound: float
    wall_seconds: float
    threads: int
    mode: str
    element_width: int = 8

    @classmethod
    def from_result(cls, params: Params, res: TripletResult, wall, threads, mode, width=8):
        return cls(params.sigma, params.d, params.ell, res.iterations_run, res.r, res.epsilon,
                   res.lower_bound, wall, threads, mode, width)

    def row(self) -> dict:
        return {k: (repr(v) if isinstance(v, float) else v)
                for k, v in vars(self).items() if k in CSV_FIELDS}

    def show(self, out) -> None:
        print(f"sigma={self.sigma} d={self.d} ell={self.ell}", file=out)
        print(f"lower bound   {floor6(self.lower_bound)}", file=out)
        print(f"r             {self.r!r}", file=out)
        print(f"epsilon       {self.epsilon!r}", file=out)
        print(f"iterations    {self.iterations}", file=out)
        print(f"wall seconds  {self.wall_seconds:.3f}", file=out)
        print(f"threads       {self.threads}   mode {self.mode}   width {self.element_width}", file=out)


def append_csv(path: Path, record: RunRecord) -> None:
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        if new:
            writer.writeheader()
        writer.writerow(record.row())


def _rule(args) -> StopRule:
    return StopRule(n=args.iters, tol=args.tol, patience=args.patience,
                    max_iterations=args.max_iterations)


def _progress(args):
    if not args.progress:
        return None

    def report(i, R, E, tracker):
        print(f"iter {i}  R={R:.12f}  E={E:.3e}  best={floor6(tracker.d * tracker.best)}",
              file=sys.stderr, flush=True)

    return report


def cmd_bound(args) -> int:
    params = Params(args.sigma, args.d, args.ell)
    start = time.perf_counter()
    res = feasible_triplet(params, rule=_rule(args), workers=args.threads,
                           memory_budget=args.budget, on_iteration=_progress(args))
    record = RunRecord.from_result(params, res, time.perf_counter() - start, args.threads, "ram")
    record.show(sys.stdout)
    if args.csv:
        append_csv(args.csv, record)
    return EXIT_OK


def cmd_binary_bound(args) -> int:
    if args.mode == "disk" and args.dir is None:
        raise InvalidInputError("--mode disk needs --dir")
    if args.resume and args.mode != "disk":
        raise InvalidInputError("--resume needs --mode disk")
    store = StoreConfig(args.mode, args.dir, args.width, args.budget, args.stop_depth)
    start = time.perf_counter()
    res = binary_feasible_triplet(args.ell, rule=_rule(args), store=store, threads=args.threads,
                                  resume=args.resume, on_iteration=_progress(args))
    record = RunRecord.from_result(Params(2, 2, args.ell), res, time.perf_counter() - start,
                                   args.threads, args.mode, args.width)
    record.show(sys.stdout)
    if args.csv:
        append_csv(args.csv, record)
    return EXIT_OK


def cmd_estimate(args) -> int:
    start = time.perf_counter()
    est = estimate_gamma(args.sigma, args.d, args.n, args.samples, args.seed, workers=args.threads)
    wall = time.perf_counter() - start
    print(f"sigma={est.sigma} d={est.d} n={est.n} samples={est.samples} "
          f"seed={est.seed} generator={est.generator}")
    print(f"mean    {est.mean!r}")
    print(f"stderr  {est.stderr!r}")
    print(f"wall seconds  {wall:.3f}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def check_store(directory: Path) -> list[str]:
    """Problems found in a checkpoint directory (empty list if it looks sound)."""
    directory = Path(directory)
    try:
        meta = read_metadata(directory)
        ell, width = int(meta["ell"]), int(meta["element_width"])
        dtype = dtype_for(width)
    except (StoreIOError, KeyError, ValueError) as exc:
        return [f"{directory / META_NAME}: {exc}"]
    problems = []
    n = half_length(ell)
    for s in range(SLOT_COUNT):
        path = slot_path(directory, s, width)
        if not path.exists():
            problems.append(f"{path}: missing")
            continue
        size = path.stat().st_size
        if size != n * width:
            problems.append(f"{path}: {size} bytes, expected {n * width}")
            continue
        step = 1 << 20
        with open(path, "rb") as fh:
            for offset in range(0, n, step):
                raw = fh.read(min(step, n - offset) * width)
                values = np.frombuffer(raw, dtype=dtype)
                bad = ~np.isfinite(values) | (values < 0)
                if bad.any():
                    k = offset + int(np.argmax(bad))
                    problems.append(
                        f"{path}: invalid value {float(values[k - offset])!r} at element {k} "
                        f"(byte {k * width})"
                    )
                    break
    return problems


def cmd_verify(args) -> int:
    failures = 0
    rule_n = args.iters

    def report(name, expected, actual, tol):
        nonlocal failures
        ok = actual is not None and abs(actual - expected) <= tol
        failures += not ok
        shown = "error" if actual is None else f"{actual:.9f}"
        print(f"{'PASS' if ok else 'FAIL'}  {name:<28} expected {expected:.6f}  "
              f"actual {shown}  tol {tol:g}", flush=True)

    if args.store is not None:
        problems = check_store(args.store)
        for p in problems:
            print(f"FAIL  store  {p}")
        failures += len(problems)
        if not problems:
            print(f"PASS  store  {args.store}")

    for ell in range(1, args.binary_max_ell + 1):
        res = binary_feasible_triplet(ell, n=rule_n, threads=args.threads)
        report(f"binary ell={ell}", BINARY[ell], res.lower_bound, TOLERANCE)

    for (sigma, d, ell), value in general_cells(args.max_states):
        res = feasible_triplet(Params(sigma, d, ell), n=rule_n if rule_n is None else max(rule_n, d),
                               workers=args.threads)
        report(f"general {sigma},{d},{ell}", value, res.lower_bound, TOLERANCE)

    if not args.skip_equivalence:
        for ell in range(1, 6):
            a = binary_feasible_triplet(ell, n=200)
            b = feasible_triplet(Params(2, 2, ell), n=200)
            gap = max(abs(a.r - b.r), abs(a.epsilon - b.epsilon))
            ok = gap <= 1e-12
            failures += not ok
            print(f"{'PASS' if ok else 'FAIL'}  equivalence ell={ell:<16} max |diff| {gap:.3e}  tol 1e-12")

    if not args.skip_oracle:
        est = estimate_gamma(2, 2, args.oracle_n, args.oracle_samples, seed=args.seed)
        limit = est.upper_check(4.0)
        for ell in range(1, args.binary_max_ell + 1):
            ok = BINARY[ell] <= limit
            failures += not ok
            print(f"{'PASS' if ok else 'FAIL'}  dominance ell={ell:<18} bound {BINARY[ell]:.6f} "
                  f"<= {limit:.6f}")

    print(f"{failures} failure(s)")
    return EXIT_OK if failures == 0 else EXIT_VERIFY


# ---------------------------------------------------------------------------


def _add_iteration_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--iters", type=_positive, default=None, metavar="N",
                   help="run the fixed index range d..N instead of converging")
    g.add_argument("--converge", action="store_true",
                   help="run until the best bound stalls (default)")
    p.add_argument("--tol", type=float, default=1e-9, help="stall threshold on r - epsilon")
    p.add_argument("--patience", type=_positive, default=None,
                   help="stalled iterations before stopping (default max(10, 4d))")
    p.add_argument("--max-iterations", type=_positive, default=100_000)
    p.add_argument("--threads", type=_positive, default=1)
    p.add_argument("--csv", type=Path, default=None, help="append a result row to this CSV file")
    p.add_argument("--progress", action="store_true", help="print one line per iteration to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcsbounds",
                                     description="Lower bounds on Chvatal-Sankoff constants.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="general engine for any (sigma, d, ell)")
    p.add_argument("--sigma", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--budget", type=parse_size, default=DEFAULT_MEMORY_BUDGET,
                   help="memory budget, e.g. 2GiB")
    _add_iteration_flags(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("binary-bound", help="binary engine (sigma=2, d=2)")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--mode", choices=("ram", "disk"), default="ram")
    p.add_argument("--dir", type=Path, default=None, help="directory for disk vectors")
    p.add_argument("--budget", type=parse_size, default=1 << 30,
                   help="RAM for one disk chunk, e.g. 16MiB")
    p.add_argument("--width", type=int, choices=(4, 8), default=8, help="bytes per stored value")
    p.add_argument("--stop-depth", type=int, default=None,
                   help="override the recursion depth derived from --budget")
    p.add_argument("--resume", action="store_true", help="continue from the checkpoint in --dir")
    _add_iteration_flags(p)
    p.set_defaults(func=cmd_binary_bound)

    p = sub.add_parser("estimate", help="Monte-Carlo estimate of E[LCS]/n")
    p.add_argument("--sigma", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--samples", type=_positive, default=100)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--threads", type=_positive, default=1)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("verify", help="check published values and internal consistency")
    p.add_argument("--iters", type=_positive, default=None, metavar="N",
                   help="fixed iteration range instead of converging")
    p.add_argument("--store", type=Path, default=None, help="also check a checkpoint directory")
    p.add_argument("--binary-max-ell", type=int, default=8, choices=range(0, 14), metavar="L")
    p.add_argument("--max-states", type=_positive, default=1 << 20,
                   help="largest general instance to check")
    p.add_argument("--skip-equivalence", action="store_true")
    p.add_argument("--skip-oracle", action="store_true")
    p.add_argument("--oracle-n", type=_positive, default=2000)
    p.add_argument("--oracle-samples", type=_positive, default=50)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--threads", type=_positive, default=1)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    print(f"# lcsbounds {__version__} numpy {np.__version__} numba {numba.__version__} "
          f"python {sys.version.split()[0]} args {' '.join(sys.argv[1:] if argv is None else argv)}",
          file=sys.stderr)
    try:
        return args.func(args)
    except (InvalidInputError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        extra = f" (requires {exc.required_bytes} bytes)" if exc.required_bytes else ""
        print(f"error: {exc}{extra}", file=sys.stderr)
        return EXIT_CAPACITY
    except (StoreIOError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


if __name__ == "__main__":
    sys.exit(main())
