"""Deterministic partially self-avoiding walks over a ``WalkMap``.

A walker at pixel ``p`` moves to the eligible neighbor with the smallest
(rule ``min``) or largest (rule ``max``) weight that is not among the last
``mu`` visited pixels, the current one included. Ties go to the first
neighbor in clockwise order starting from north.

The walker's state is the ordered window of its last ``mu`` pixels (just the
current pixel when ``mu == 0``). The walk stops at the first repeated state:
if the state at trace position ``a`` reappears at position ``b`` the
trajectory is ``(tau=a, rho=b-a)``. A walker with nowhere to go stops with
``(tau=<pixels visited>, rho=0)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numba
import numpy as np
from numba import njit, prange

from .pixel_map import Rule, WalkMap

# skip probing the system TBB, which is often too old for numba
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


SERIAL_BELOW = 1024


@dataclass(frozen=True)
class WalkConfig:
    mu: int
    rule: Rule = "min"
    k: int = 0

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError(f"memory must be >= 0, got {self.mu}")


class Trajectory(NamedTuple):
    tau: int
    rho: int


def choose_next(walk_map: WalkMap, current: int, forbidden: Sequence[int]) -> Optional[int]:
    """Next pixel from ``current`` avoiding ``forbidden``, or None at a dead end."""
    nbr, wts = walk_map.tables
    walk_map.raster._check(current)
    banned = set(forbidden)
    best, best_w = None, 0
    maximize = walk_map.rule == "max"
    for s in range(8):
        q = int(nbr[current, s])
        if q < 0 or q in banned:
            continue
        w = int(wts[current, s])
        if best is None or (w > best_w if maximize else w < best_w):
            best, best_w = q, w
    return best


@njit(cache=True, nogil=True)
def _walk(nbr, wts, maximize, mu, start, head, trace, prev):
    # head[p]: latest trace position of pixel p (-1 if unseen in this walk);
    # prev[n]: previous position of the pixel at trace[n]. Both are reset
    # before returning so the buffers can be reused for the next start.
    span = mu if mu > 0 else 1
    n = 0
    cur = start
    tau = 0
    rho = 0
    while True:
        if n == trace.shape[0]:
            bigger = np.empty(2 * n, trace.dtype)
            bigger[:n] = trace
            trace = bigger
            bigger = np.empty(2 * n, prev.dtype)
            bigger[:n] = prev
            prev = bigger
        trace[n] = cur
        prev[n] = head[cur]
        head[cur] = n

        if n >= span - 1:
            i = prev[n]
            found = -1
            while i >= span - 1:
                same = True
                for d in range(1, span):
                    if trace[i - d] != trace[n - d]:
                        same = False
                        break
                if same:
                    found = i
                    break
                i = prev[i]
            if found >= 0:
                tau = found
                rho = n - found
                break

        lo = n - mu + 1
        if lo < 0:
            lo = 0
        best = -1
        best_w = 0
        for s in range(8):
            q = nbr[cur, s]
            if q < 0:
                continue
            banned = False
            for j in range(lo, n + 1):
                if trace[j] == q:
                    banned = True
                    break
            if banned:
                continue
            w = wts[cur, s]
            if best < 0 or (w > best_w if maximize else w < best_w):
                best = q
                best_w = w
        if best < 0:
            tau = n + 1
            rho = 0
            break
        cur = best
        n += 1

    for j in range(n + 1):
        head[trace[j]] = -1
    return tau, rho, trace, prev


@njit(cache=True, nogil=True)
def _walk_range(nbr, wts, maximize, mu, lo, hi, taus, rhos):
    head = np.full(nbr.shape[0], -1, np.int64)
    trace = np.empty(256, np.int64)
    prev = np.empty(256, np.int64)
    for s in range(lo, hi):
        tau, rho, trace, prev = _walk(nbr, wts, maximize, mu, s, head, trace, prev)
        taus[s] = tau
        rhos[s] = rho


@njit(cache=True, parallel=True)
def _walk_all(nbr, wts, maximize, mu, n_chunks):
    n_pix = nbr.shape[0]
    taus = np.empty(n_pix, np.int64)
    rhos = np.empty(n_pix, np.int64)
    for c in prange(n_chunks):
        lo = c * n_pix // n_chunks
        hi = (c + 1) * n_pix // n_chunks
        _walk_range(nbr, wts, maximize, mu, lo, hi, taus, rhos)
    return taus, rhos


def _check_config(walk_map: WalkMap, config: WalkConfig) -> None:
    if config.rule != walk_map.rule or config.k != walk_map.k:
        raise ValueError(
            f"config ({config.rule}, k={config.k}) does not match map ({walk_map.rule}, k={walk_map.k})"
        )


def run_walk(walk_map: WalkMap, config: WalkConfig, start: int) -> Trajectory:
    _check_config(walk_map, config)
    walk_map.raster._check(start)
    nbr, wts = walk_map.tables
    head = np.full(nbr.shape[0], -1, np.int64)
    tau, rho, _, _ = _walk(
        nbr, wts, walk_map.rule == "max", config.mu, start,
        head, np.empty(64, np.int64), np.empty(64, np.int64),
    )
    return Trajectory(int(tau), int(rho))


def walk_arrays(walk_map: WalkMap, mu: int, workers: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """``(taus, rhos)`` for a walk started at every pixel, in row-major order.

    The starts are split into contiguous chunks spread over numba threads;
    small maps, or ``workers=1``, run on the calling thread. Output does not
    depend on ``workers``.
    """
    if mu < 0:
        raise ValueError(f"memory must be >= 0, got {mu}")
    nbr, wts = walk_map.tables
    n_pix = nbr.shape[0]
    maximize = walk_map.rule == "max"
    if workers == 1 or n_pix < SERIAL_BELOW:
        taus = np.empty(n_pix, np.int64)
        rhos = np.empty(n_pix, np.int64)
        _walk_range(nbr, wts, maximize, mu, 0, n_pix, taus, rhos)
        return taus, rhos
    threads = numba.config.NUMBA_NUM_THREADS
    if workers is not None:
        threads = max(1, min(workers, threads))
    n_chunks = max(1, min(n_pix, 4 * (workers or threads)))
    old = numba.get_num_threads()
    numba.set_num_threads(threads)
    try:
        return _walk_all(nbr, wts, maximize, mu, n_chunks)
    finally:
        numba.set_num_threads(old)


def run_all_walks(walk_map: WalkMap, config: WalkConfig, workers: Optional[int] = None) -> list[Trajectory]:
    _check_config(walk_map, config)
    taus, rhos = walk_arrays(walk_map, config.mu, workers)
    return [Trajectory(int(t), int(r)) for t, r in zip(taus, rhos)]


def trace_walk(walk_map: WalkMap, mu: int, start: int) -> list[int]:
    """Pixel sequence of one walk, up to the repeated state or the dead end.

    Slow path for inspection and plotting; ``run_walk`` gives the same
    ``(tau, rho)``.
    """
    walk_map.raster._check(start)
    trace = [start]
    seen = {}
    while True:
        state = tuple(trace[-mu:]) if mu > 0 else (trace[-1],)
        if state in seen:
            return trace
        seen.setdefault(state, len(trace) - 1)
        nxt = choose_next(walk_map, trace[-1], trace[-mu:] if mu > 0 else ())
        if nxt is None:
            return trace
        trace.append(nxt)
