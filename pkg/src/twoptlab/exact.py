"""Exact baselines: optimal tours, spanning trees and tour diagnostics.

Two independent exact TSP solvers are kept side by side on purpose --
``brute_force`` (permutation enumeration, n <= 11) and ``held_karp``
(bitmask dynamic program, n <= 20) -- so each can vouch for the other in
tests.  ``mst_length`` is a dense Prim implementation; under any metric
satisfying the triangle inequality MST <= TSP <= 2 MST, which powers the
cheap approximation-ratio lower bound used on instances too large to solve.

``estimate_two_opt_max`` approximates the *worst* 2-optimal tour length by
restarting the engine from many random tours and keeping the maximum; its
seeds are spawned from one SeedSequence, so the estimate is monotone
non-decreasing in the number of restarts.

``edge_length_histogram`` buckets tour edges into the dyadic scale
[OPT/2^i, OPT/2^(i-1)); the identity sum_i L(T_i) = L(T) makes it the
bookkeeping tool behind descent-counting arguments.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
import time

import numpy as np

from .geometry import Metric, pairwise_distances, vec_dist
from .tour import Tour, _coords, run_two_opt

__all__ = [
    "ExactResult",
    "brute_force",
    "held_karp",
    "mst_length",
    "estimate_two_opt_max",
    "edge_length_histogram",
    "OVERFLOW_BIN",
]

BRUTE_FORCE_MAX_N = 11
HELD_KARP_MAX_N = 20

# Edges of length exactly zero fall outside every dyadic bucket; they are
# collected under this index so the buckets always partition the tour.
OVERFLOW_BIN = 1100


@dataclasses.dataclass(frozen=True)
class ExactResult:
    """An optimal tour with its length and provenance."""

    length: float
    tour: Tour
    algorithm: str
    elapsed: float


def brute_force(inst_or_points, metric: Metric | str = Metric.EUCLIDEAN) -> ExactResult:
    """Exact optimum by enumerating permutations (3 <= n <= 11).

    Fixes vertex 0 first and keeps only one direction of each cycle
    (first visited < last visited), evaluating all candidates in one
    vectorized pass.
    """
    t0 = time.perf_counter()
    pts = _coords(inst_or_points)
    n = pts.shape[0]
    if not 3 <= n <= BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute_force handles 3 <= n <= {BRUTE_FORCE_MAX_N}, got n={n}")
    D = pairwise_distances(pts, metric)
    perms = np.array(list(itertools.permutations(range(1, n))), dtype=np.int8)
    perms = perms[perms[:, 0] < perms[:, -1]]
    lengths = D[0, perms[:, 0]] + D[perms[:, -1], 0]
    for k in range(n - 2):
        lengths += D[perms[:, k], perms[:, k + 1]]
    best = int(np.argmin(lengths))
    order = [0] + [int(v) for v in perms[best]]
    return ExactResult(
        length=float(lengths[best]),
        tour=Tour.from_order(order, cached_length=float(lengths[best]),
                             metric=Metric.parse(metric)),
        algorithm="brute",
        elapsed=time.perf_counter() - t0,
    )


def held_karp(inst_or_points, metric: Metric | str = Metric.EUCLIDEAN) -> ExactResult:
    """Exact optimum by the Held-Karp dynamic program (3 <= n <= 20).

    State: dp[mask, j] = shortest path from vertex 0 through the vertex set
    ``mask`` (over vertices 1..n-1) ending at j.  Masks are processed grouped
    by popcount so each transition is one vectorized scatter; memory is
    O(2^(n-1) n) float64, about 160 MiB at n = 20.
    """
    t0 = time.perf_counter()
    pts = _coords(inst_or_points)
    n = pts.shape[0]
    if not 3 <= n <= HELD_KARP_MAX_N:
        raise ValueError(f"held_karp handles 3 <= n <= {HELD_KARP_MAX_N}, got n={n}")
    D = pairwise_distances(pts, metric)
    m = n - 1
    size = 1 << m
    dp = np.full((size, m), np.inf)
    dp[1 << np.arange(m), np.arange(m)] = D[0, 1:]

    masks = np.arange(size, dtype=np.int64)
    pop = np.zeros(size, dtype=np.int8)
    for b in range(m):
        pop += ((masks >> b) & 1).astype(np.int8)
    by_pop = [masks[pop == k] for k in range(m + 1)]

    for k in range(1, m):
        layer = by_pop[k]
        vals = dp[layer]
        for j in range(m):
            free = (layer >> j) & 1 == 0
            if not free.any():
                continue
            src = vals[free] + D[1:, j + 1]
            np.minimum.at(dp[:, j], layer[free] | (1 << j), src.min(axis=1))

    full = size - 1
    totals = dp[full] + D[1:, 0]
    j = int(np.argmin(totals))
    best_len = float(totals[j])

    # walk the DP backwards; the recomputed candidate row contains dp[mask, j]
    # bit-exactly, so argmin recovers a true predecessor
    mask = full
    rev = [j + 1]
    while mask != (1 << j):
        pmask = mask ^ (1 << j)
        row = dp[pmask] + D[1:, j + 1]
        i = int(np.argmin(row))
        mask, j = pmask, i
        rev.append(j + 1)
    order = [0] + rev[::-1]
    return ExactResult(
        length=best_len,
        tour=Tour.from_order(order, cached_length=best_len, metric=Metric.parse(metric)),
        algorithm="heldkarp",
        elapsed=time.perf_counter() - t0,
    )


def mst_length(inst_or_points, metric: Metric | str = Metric.EUCLIDEAN) -> float:
    """Minimum-spanning-tree weight by dense Prim."""
    pts = _coords(inst_or_points)
    n = pts.shape[0]
    if n < 1:
        raise ValueError("mst_length needs at least one point")
    if n == 1:
        return 0.0
    D = pairwise_distances(pts, metric)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = D[0].copy()
    best[0] = np.inf
    total = 0.0
    for _ in range(n - 1):
        v = int(np.argmin(best))
        total += float(best[v])
        in_tree[v] = True
        best = np.minimum(best, D[v])
        best[in_tree] = np.inf
    return total


def estimate_two_opt_max(
    inst_or_points,
    metric: Metric | str = Metric.EUCLIDEAN,
    restarts: int = 50,
    pivot: str = "first",
    eps: float = 1e-12,
    seed: int = 0,
) -> float:
    """Largest 2-optimal tour length seen over random-restart runs.

    Restart r draws its seed from SeedSequence(seed).spawn(...)[r]; since
    spawning is prefix-stable, increasing ``restarts`` can only add runs,
    never change earlier ones, so the estimate is monotone non-decreasing.
    """
    if restarts < 1:
        raise ValueError(f"need at least one restart, got {restarts}")
    pts = _coords(inst_or_points)
    children = np.random.SeedSequence(seed).spawn(restarts)
    worst = -math.inf
    for child in children:
        run_seed = int(child.generate_state(1, np.uint64)[0])
        rec = run_two_opt(
            pts, metric, init="random", pivot=pivot, eps=eps, seed=run_seed,
            keep_changes=False,
        )
        worst = max(worst, rec.final_length)
    return worst


def edge_length_histogram(
    tour: Tour,
    inst_or_points,
    metric: Metric | str = Metric.EUCLIDEAN,
    opt_length: float | None = None,
) -> list[tuple[int, float, int]]:
    """Bucket tour edges by the dyadic scale [OPT/2^i, OPT/2^(i-1)).

    The index of an edge of length L is ceil(log2(OPT/L)); exact powers of
    two land on the smaller index (their bucket's upper end).  Indices may be
    <= 0 when an edge is at least as long as OPT (possible without the
    triangle inequality).  Zero-length edges go to OVERFLOW_BIN.  If
    ``opt_length`` is omitted it is computed exactly (so n must be <= 20).

    Returns (bin index, total length in bin, edge count) sorted by index;
    the total lengths sum to the tour length exactly.
    """
    pts = _coords(inst_or_points)
    if opt_length is None:
        opt_length = held_karp(pts, metric).length
    if opt_length <= 0.0:
        raise ValueError(f"optimal length must be positive, got {opt_length}")
    order = tour.order if isinstance(tour, Tour) else np.asarray(tour, dtype=np.int64)
    p = pts[order]
    lengths = vec_dist(p, np.roll(p, -1, axis=0), metric)
    bins: dict[int, list] = {}
    for length in lengths:
        length = float(length)
        if length <= 0.0:
            i = OVERFLOW_BIN
        else:
            i = math.ceil(math.log2(opt_length / length))
            i = min(i, OVERFLOW_BIN)
        slot = bins.setdefault(i, [0.0, 0])
        slot[0] += length
        slot[1] += 1
    return [(i, bins[i][0], bins[i][1]) for i in sorted(bins)]
