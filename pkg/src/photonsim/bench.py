"""Kernel timing harness.

Inputs are drawn from a fixed seed so runs are comparable.  A size whose
single evaluation takes under a second is averaged over ``runs`` repetitions
(100 by default), otherwise timed once.
"""

from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, TextIO

import numpy as np
from scipy.stats import unitary_group

from . import gaussian, kernels

KERNELS = ("permanent", "hafnian", "loop_hafnian", "torontonian", "loop_torontonian")
MAX_SIZE = {"permanent": 40, "hafnian": 60, "loop_hafnian": 60, "torontonian": 48, "loop_torontonian": 48}
DEFAULT_SEED = 20240517
SLOW_RUN_S = 1.0


@dataclass
class BenchRecord:
    kernel: str
    size: int
    repetitions: int
    expanded_dim: int
    seconds: float
    runs: int
    impl: str


def parse_sizes(text: str, kernel: str) -> list[int]:
    """``"a..b"`` or ``"a..b:step"``; even-only kernels default to step 2."""
    step = 2 if kernel in ("hafnian", "torontonian", "loop_torontonian") else 1
    if ":" in text:
        text, step_s = text.split(":", 1)
        step = int(step_s)
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        lo, hi = int(lo_s), int(hi_s)
    else:
        lo = hi = int(text)
    if step < 1 or lo < 1 or hi < lo:
        raise ValueError(f"bad size range {text!r}")
    return list(range(lo, hi + 1, step))


def check_size(kernel: str, size: int, reps: int) -> None:
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    if reps < 1:
        raise ValueError("repetitions must be at least 1")
    if size > MAX_SIZE[kernel]:
        raise ValueError(f"size {size} exceeds the supported maximum {MAX_SIZE[kernel]} for {kernel}")
    if kernel == "hafnian" and (size * reps) % 2:
        raise ValueError(f"hafnian needs an even expanded dimension (size {size} x reps {reps})")
    if kernel in ("torontonian", "loop_torontonian"):
        if size % 2:
            raise ValueError("torontonian sizes must be even (2m x 2m)")
        if reps != 1:
            raise ValueError("torontonian kernels take no repetitions")


def make_input(kernel: str, size: int, seed: int = DEFAULT_SEED):
    """Random well-conditioned input for ``kernel`` at ``size``."""
    rng = np.random.default_rng([seed, size])
    if kernel in ("torontonian", "loop_torontonian"):
        R = threshold_matrix(size // 2, rng)
        if kernel == "torontonian":
            return (R,)
        return (R, 0.3 * rng.normal(size=size))
    A = (rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))) / np.sqrt(2 * size)
    if kernel == "permanent":
        return (A,)
    A = 0.5 * (A + A.T)
    if kernel == "hafnian":
        return (A,)
    return (A, np.diag(A).copy())


def threshold_matrix(m: int, rng: np.random.Generator) -> np.ndarray:
    """Real-form ``I - Q^{-1}`` of a random squeezed state (valid torontonian input)."""
    state = gaussian.vacuum_state(m)
    for i in range(m):
        state = gaussian.evolve(state, gaussian.squeezing(rng.uniform(0.2, 0.6), rng.uniform(0, 2 * np.pi), i))
    U = unitary_group.rvs(m, random_state=rng) if m > 1 else np.eye(1)
    state = gaussian.evolve(state, gaussian.passive_gate(U, range(m)))
    data = gaussian.husimi_data(state)
    W = gaussian.w_matrix(m)
    R = W.conj().T @ (np.eye(2 * m) - data.Qinv) @ W
    return np.ascontiguousarray(0.5 * (R + R.conj().T).real)


def _call(kernel: str, args, reps: int, impl: Optional[str]):
    n = args[0].shape[0]
    rv = None if reps == 1 else np.full(n, reps)
    if kernel == "permanent":
        return kernels.permanent(args[0], rv, rv, impl=impl)
    if kernel == "hafnian":
        return kernels.hafnian(args[0], rv, impl=impl)
    if kernel == "loop_hafnian":
        return kernels.loop_hafnian(args[0], args[1], rv, impl=impl)
    if kernel == "torontonian":
        return kernels.torontonian(args[0], impl=impl)
    return kernels.loop_torontonian(args[0], args[1], impl=impl)


def time_kernel(
    kernel: str,
    size: int,
    reps: int = 1,
    runs: int = 100,
    impl: Optional[str] = None,
    seed: int = DEFAULT_SEED,
) -> BenchRecord:
    check_size(kernel, size, reps)
    args = make_input(kernel, size, seed)
    t0 = time.perf_counter()
    _call(kernel, args, reps, impl)
    single = time.perf_counter() - t0
    if single >= SLOW_RUN_S or runs <= 1:
        seconds, used = single, 1
    else:
        t0 = time.perf_counter()
        for _ in range(runs):
            _call(kernel, args, reps, impl)
        seconds, used = (time.perf_counter() - t0) / runs, runs
    expanded = size if kernel in ("torontonian", "loop_torontonian") else size * reps
    return BenchRecord(kernel, size, reps, expanded, seconds, used, impl or kernels.BACKEND)


def run_bench(kernel: str, sizes: Iterable[int], reps: int = 1, runs: int = 100, impl: Optional[str] = None, seed: int = DEFAULT_SEED) -> list[BenchRecord]:
    sizes = list(sizes)
    for n in sizes:
        check_size(kernel, n, reps)
    return [time_kernel(kernel, n, reps, runs, impl, seed) for n in sizes]


def write_csv(records: list[BenchRecord], fh: TextIO) -> None:
    writer = csv.DictWriter(fh, fieldnames=list(BenchRecord.__dataclass_fields__), lineterminator="\n")
    writer.writeheader()
    for rec in records:
        row = asdict(rec)
        row["seconds"] = f"{rec.seconds:.9g}"
        writer.writerow(row)
