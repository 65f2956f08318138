"""The 2-opt engine: tours, 2-changes, pivot rules, runs and linked pairs.

A tour is stored as an order array (position -> vertex) canonicalized so that
vertex 0 sits at position 0; rotation is the only normalization, direction is
preserved.  A 2-change removes the tour edges (x1,x2) and (x3,x4) -- indices
in tour order -- and reconnects as (x1,x3), (x2,x4), reversing the segment in
between.  Its gain is positive when the tour gets shorter.

Scans enumerate edge-position pairs (i, j) with j >= i+2, skipping the
adjacent wrap-around pair (0, n-1), in lexicographic order:

* ``first``  -- the first pair with gain > eps;
* ``best``   -- the maximum gain, earliest pair on ties;
* ``random`` -- uniform over all improving pairs (needs a seed).

``run_two_opt`` iterates scan+apply until no improving pair remains and
certifies termination with a final full scan.  ``min_improvement`` computes
the smallest positive gain over *all* ordered vertex quadruples, which upper
bounds the number of iterations by initial_length / min_improvement.

The second half implements the linked-pair taxonomy for sequences of applied
2-changes (an edge added by one change and removed by another): pairs sharing
all four vertices (type 2), five vertices (type 1a/1b, split by whether the
second change also re-creates an edge the first removed), or six (type 0),
plus a counter for large sets of pairwise change-disjoint pairs of type 0/1.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from typing import IO, Sequence

import numpy as np

from .geometry import Metric, as_points, pairwise_distances, vec_dist

__all__ = [
    "Tour",
    "TwoChange",
    "Violation",
    "RunRecord",
    "LinkedPairType",
    "tour_length",
    "initial_tour",
    "find_improving",
    "apply_two_change",
    "run_two_opt",
    "certify_two_optimality",
    "min_improvement",
    "classify_linked_pair",
    "count_disjoint_linked_pairs",
    "linked_pair_bound",
]

Edge = tuple[int, int]


def _coords(inst_or_points) -> np.ndarray:
    """Accept an Instance-like object (``.points``) or a raw coordinate array."""
    pts = getattr(inst_or_points, "points", inst_or_points)
    return as_points(pts)


@dataclasses.dataclass
class Tour:
    """A cyclic visiting order.

    Attributes:
        order: (n,) int array, position -> vertex; order[0] == 0.
        cached_length: optional length under ``metric``; kept in sync by
            apply_two_change (new length = old length - gain).
        metric: token of the metric the cache refers to, if any.
    """

    order: np.ndarray
    cached_length: float | None = None
    metric: str | None = None

    @classmethod
    def from_order(
        cls,
        order,
        cached_length: float | None = None,
        metric: Metric | str | None = None,
    ) -> "Tour":
        """Validate a permutation and canonicalize its rotation."""
        arr = np.asarray(order, dtype=np.int64).ravel()
        n = arr.size
        if n < 3:
            raise ValueError("a tour needs at least three vertices")
        seen = np.zeros(n, dtype=bool)
        if arr.min(initial=0) < 0 or arr.max(initial=0) >= n:
            raise ValueError("tour order is not a permutation of 0..n-1")
        seen[arr] = True
        if not seen.all():
            raise ValueError("tour order is not a permutation of 0..n-1")
        shift = int(np.flatnonzero(arr == 0)[0])
        arr = np.roll(arr, -shift)
        token = Metric.parse(metric).value if metric is not None else None
        return cls(order=arr, cached_length=cached_length, metric=token)

    @property
    def n(self) -> int:
        return int(self.order.size)

    def positions(self) -> np.ndarray:
        """Inverse index: vertex -> position."""
        pos = np.empty(self.n, dtype=np.int64)
        pos[self.order] = np.arange(self.n)
        return pos

    def edges(self) -> list[Edge]:
        nxt = np.roll(self.order, -1)
        return [(int(a), int(b)) for a, b in zip(self.order, nxt)]


@dataclasses.dataclass(frozen=True)
class TwoChange:
    """Removed tour edges (x1,x2),(x3,x4); added edges (x1,x3),(x2,x4)."""

    removed: tuple[Edge, Edge]
    added: tuple[Edge, Edge]
    gain: float

    def inverse(self) -> "TwoChange":
        return TwoChange(removed=self.added, added=self.removed, gain=-self.gain)

    def to_dict(self) -> dict:
        return {
            "removed": [list(e) for e in self.removed],
            "added": [list(e) for e in self.added],
            "gain": self.gain,
        }


@dataclasses.dataclass(frozen=True)
class Violation:
    """An improving pair found by the certifier (maximum gain over the tour)."""

    i: int
    j: int
    removed: tuple[Edge, Edge]
    added: tuple[Edge, Edge]
    gain: float


class LinkedPairType(enum.Enum):
    NOT_LINKED = "not_linked"
    TYPE_0 = "type0"
    TYPE_1A = "type1a"
    TYPE_1B = "type1b"
    TYPE_2 = "type2"


@dataclasses.dataclass
class RunRecord:
    """Everything observed during one run_two_opt call.

    iterations always equals the number of applied changes; ``changes`` is
    populated when the run was asked to keep them.  JSON field names match
    the attribute names exactly.
    """

    seed: int
    metric: str
    pivot: str
    init: str
    n: int
    eps: float
    initial_length: float
    final_length: float
    iterations: int
    min_gain_observed: float | None
    converged: bool
    final_order: list[int]
    changes: list[TwoChange] = dataclasses.field(default_factory=list)

    def to_json(self, fp: IO[str] | None = None, include_changes: bool = False) -> str:
        payload = {
            "seed": self.seed,
            "metric": self.metric,
            "pivot": self.pivot,
            "init": self.init,
            "n": self.n,
            "eps": self.eps,
            "initial_length": self.initial_length,
            "final_length": self.final_length,
            "iterations": self.iterations,
            "min_gain_observed": self.min_gain_observed,
            "converged": self.converged,
            "final_order": self.final_order,
        }
        if include_changes:
            payload["changes"] = [c.to_dict() for c in self.changes]
        text = json.dumps(payload)
        if fp is not None:
            fp.write(text)
        return text


# ---------------------------------------------------------------------------
# lengths and construction heuristics


def tour_length(tour: Tour | Sequence[int], inst_or_points, metric: Metric | str = Metric.EUCLIDEAN) -> float:
    """Length of the closed tour under the metric."""
    order = tour.order if isinstance(tour, Tour) else np.asarray(tour, dtype=np.int64)
    pts = _coords(inst_or_points)
    p = pts[order]
    return float(vec_dist(p, np.roll(p, -1, axis=0), metric).sum())


def _rule_token(rule: str) -> str:
    aliases = {
        "random": "random",
        "nearest_neighbor": "nearest_neighbor",
        "nn": "nearest_neighbor",
        "greedy_insertion": "greedy_insertion",
        "greedy": "greedy_insertion",
    }
    try:
        return aliases[rule]
    except KeyError:
        raise ValueError(f"unknown initial-tour rule {rule!r}") from None


def initial_tour(
    inst_or_points,
    metric: Metric | str = Metric.EUCLIDEAN,
    rule: str = "random",
    seed: int | np.random.Generator = 0,
) -> Tour:
    """Build a starting tour.

    Rules: "random" (uniform permutation, canonical rotation),
    "nearest_neighbor" (start at vertex 0, ties to the smallest index) and
    "greedy_insertion" (cheapest insertion from vertex 0; ties prefer the
    smallest vertex, then the earliest tour edge).  Only "random" consumes
    randomness; ``seed`` may be an int or a numpy Generator.
    """
    pts = _coords(inst_or_points)
    n = pts.shape[0]
    rule = _rule_token(rule)
    if rule == "random":
        rng = np.random.default_rng(seed)
        return Tour.from_order(rng.permutation(n))
    D = pairwise_distances(pts, metric)
    if rule == "nearest_neighbor":
        visited = np.zeros(n, dtype=bool)
        order = [0]
        visited[0] = True
        cur = 0
        for _ in range(n - 1):
            row = np.where(visited, np.inf, D[cur])
            cur = int(np.argmin(row))
            visited[cur] = True
            order.append(cur)
        return Tour.from_order(order)
    # greedy_insertion
    order = [0]
    rest = np.arange(1, n)
    if rest.size:
        v = int(rest[np.argmin(D[0, rest])])
        order.append(v)
        rest = rest[rest != v]
    while rest.size:
        a = np.asarray(order)
        b = np.roll(a, -1)
        cost = D[a][:, rest] + D[b][:, rest] - D[a, b][:, None]
        per_vertex = cost.min(axis=0)
        k = int(np.argmin(per_vertex))
        e = int(np.argmin(cost[:, k]))
        order.insert(e + 1, int(rest[k]))
        rest = np.delete(rest, k)
    return Tour.from_order(order)


# ---------------------------------------------------------------------------
# scans

# Scans work on (D, order) with edge i = (order[i], order[(i+1) % n]).
# Candidate pairs: j in [i+2, n-1], minus (0, n-1); i runs to n-3.


def _scan_first(D: np.ndarray, order: np.ndarray, eps: float):
    n = order.size
    nxt = np.roll(order, -1)
    el = D[order, nxt]
    for i in range(n - 2):
        hi = n if i > 0 else n - 1
        if hi <= i + 2:
            continue
        js = np.arange(i + 2, hi)
        gains = el[i] + el[js] - D[order[i], order[js]] - D[nxt[i], nxt[js]]
        good = np.flatnonzero(gains > eps)
        if good.size:
            k = int(good[0])
            return i, int(js[k]), float(gains[k])
    return None


def _scan_best(D: np.ndarray, order: np.ndarray, eps: float):
    n = order.size
    nxt = np.roll(order, -1)
    el = D[order, nxt]
    best = None
    for i in range(n - 2):
        hi = n if i > 0 else n - 1
        if hi <= i + 2:
            continue
        js = np.arange(i + 2, hi)
        gains = el[i] + el[js] - D[order[i], order[js]] - D[nxt[i], nxt[js]]
        k = int(np.argmax(gains))
        g = float(gains[k])
        if g > eps and (best is None or g > best[2]):
            best = (i, int(js[k]), g)
    return best


def _scan_random(D: np.ndarray, order: np.ndarray, eps: float, rng: np.random.Generator):
    n = order.size
    nxt = np.roll(order, -1)
    el = D[order, nxt]

    def row_gains(i):
        hi = n if i > 0 else n - 1
        if hi <= i + 2:
            return None, None
        js = np.arange(i + 2, hi)
        return js, el[i] + el[js] - D[order[i], order[js]] - D[nxt[i], nxt[js]]

    counts = np.zeros(n - 2, dtype=np.int64) if n > 2 else np.zeros(0, dtype=np.int64)
    for i in range(n - 2):
        js, gains = row_gains(i)
        if js is not None:
            counts[i] = int(np.count_nonzero(gains > eps))
    total = int(counts.sum())
    if total == 0:
        return None
    r = int(rng.integers(total))
    for i in range(n - 2):
        if r >= counts[i]:
            r -= int(counts[i])
            continue
        js, gains = row_gains(i)
        good = np.flatnonzero(gains > eps)
        k = int(good[r])
        return i, int(js[k]), float(gains[k])
    raise AssertionError("unreachable: improving-pair index out of range")


_SCANS = {"first": _scan_first, "best": _scan_best}


def _make_change(order: np.ndarray, i: int, j: int, gain: float) -> TwoChange:
    n = order.size
    x1, x2 = int(order[i]), int(order[(i + 1) % n])
    x3, x4 = int(order[j]), int(order[(j + 1) % n])
    return TwoChange(removed=((x1, x2), (x3, x4)), added=((x1, x3), (x2, x4)), gain=gain)


def _reverse_segment(order: np.ndarray, i: int, j: int) -> np.ndarray:
    """Reverse positions i+1..j (inclusive); picks the shorter side, ties inner."""
    n = order.size
    inner = j - i
    if inner <= n - inner:
        order[i + 1 : j + 1] = order[i + 1 : j + 1][::-1]
        return order
    rolled = np.roll(order, -(j + 1) % n)
    k = n - inner
    rolled[:k] = rolled[:k][::-1]
    return rolled


def find_improving(
    tour: Tour,
    inst_or_points,
    metric: Metric | str = Metric.EUCLIDEAN,
    pivot: str = "first",
    eps: float = 1e-12,
    seed: int | np.random.Generator | None = None,
) -> TwoChange | None:
    """Search the tour for an improving 2-change under the pivot rule."""
    pts = _coords(inst_or_points)
    D = pairwise_distances(pts, metric)
    order = tour.order
    if pivot in _SCANS:
        hit = _SCANS[pivot](D, order, eps)
    elif pivot == "random":
        rng = np.random.default_rng(seed)
        hit = _scan_random(D, order, eps, rng)
    else:
        raise ValueError(f"unknown pivot rule {pivot!r}")
    if hit is None:
        return None
    return _make_change(order, *hit)


def apply_two_change(tour: Tour, change: TwoChange) -> Tour:
    """Apply a 2-change, returning a new canonicalized Tour.

    The removed edges are located by vertex (either traversal direction);
    the change's added edges must match the reconnection they force.
    """
    order = tour.order
    n = order.size
    pos = tour.positions()

    def edge_position(edge: Edge) -> int:
        a, b = edge
        if not (0 <= a < n and 0 <= b < n):
            raise ValueError(f"edge {edge} has vertices outside the tour")
        if order[(pos[a] + 1) % n] == b:
            return int(pos[a])
        if order[(pos[b] + 1) % n] == a:
            return int(pos[b])
        raise ValueError(f"edge {edge} is not in the tour")

    (e1, e2) = change.removed
    if len({e1[0], e1[1], e2[0], e2[1]}) != 4:
        raise ValueError(f"removed edges {change.removed} are not disjoint")
    i, j = edge_position(e1), edge_position(e2)
    if i > j:
        i, j = j, i
    if i == j or j == i + 1 or (i == 0 and j == n - 1):
        raise ValueError(f"removed edges {change.removed} are adjacent in the tour")
    produced = {frozenset((int(order[i]), int(order[j]))),
                frozenset((int(order[(i + 1) % n]), int(order[(j + 1) % n])))}
    wanted = {frozenset(change.added[0]), frozenset(change.added[1])}
    if produced != wanted:
        raise ValueError(
            f"added edges {change.added} do not reconnect the removed pair into a tour"
        )
    new_order = _reverse_segment(order.copy(), i, j)
    cached = None
    if tour.cached_length is not None:
        cached = tour.cached_length - change.gain
    return Tour.from_order(new_order, cached_length=cached, metric=tour.metric)


def run_two_opt(
    inst_or_points,
    metric: Metric | str = Metric.EUCLIDEAN,
    init: str = "random",
    pivot: str = "first",
    eps: float = 1e-12,
    seed: int = 0,
    max_iter: int | None = None,
    keep_changes: bool = True,
) -> RunRecord:
    """Run 2-opt to local optimality.

    One RNG (seeded with ``seed``) drives both the random initial tour and
    the random pivot, so a record is reproducible from its parameters.  The
    run ends when a full scan finds no pair with gain > eps (converged=True)
    or when max_iter changes have been applied (converged=False).
    """
    if pivot not in ("first", "best", "random"):
        raise ValueError(f"unknown pivot rule {pivot!r}")
    pts = _coords(inst_or_points)
    n = pts.shape[0]
    rng = np.random.default_rng(seed)
    start = initial_tour(pts, metric, _rule_token(init), rng)
    D = pairwise_distances(pts, metric)
    order = start.order.copy()
    initial_length = float(D[order, np.roll(order, -1)].sum())

    changes: list[TwoChange] = []
    iterations = 0
    min_gain: float | None = None
    converged = False
    while True:
        if pivot == "random":
            hit = _scan_random(D, order, eps, rng)
        else:
            hit = _SCANS[pivot](D, order, eps)
        if hit is None:
            converged = True
            break
        if max_iter is not None and iterations >= max_iter:
            converged = False
            break
        i, j, gain = hit
        if keep_changes:
            changes.append(_make_change(order, i, j, gain))
        iterations += 1
        min_gain = gain if min_gain is None else min(min_gain, gain)
        order = _reverse_segment(order, i, j)

    final_tour = Tour.from_order(order)
    final_length = float(D[final_tour.order, np.roll(final_tour.order, -1)].sum())
    return RunRecord(
        seed=int(seed),
        metric=Metric.parse(metric).value,
        pivot=pivot,
        init=_rule_token(init),
        n=n,
        eps=eps,
        initial_length=initial_length,
        final_length=final_length,
        iterations=iterations,
        min_gain_observed=min_gain,
        converged=converged,
        final_order=[int(v) for v in final_tour.order],
        changes=changes,
    )


def certify_two_optimality(
    inst_or_points,
    tour: Tour | Sequence[int],
    metric: Metric | str = Metric.EUCLIDEAN,
    eps: float = 1e-12,
) -> Violation | None:
    """Full scan for the maximum-gain improving pair; None if 2-optimal.

    Works directly from coordinates (no n x n matrix), so it stays cheap and
    bit-accurate on large, nearly-degenerate instances.
    """
    pts = _coords(inst_or_points)
    order = tour.order if isinstance(tour, Tour) else np.asarray(tour, dtype=np.int64)
    n = order.size
    p = pts[order]
    pn = np.roll(p, -1, axis=0)
    el = vec_dist(p, pn, metric)
    worst: tuple[float, int, int] | None = None
    for i in range(n - 2):
        hi = n if i > 0 else n - 1
        if hi <= i + 2:
            continue
        gains = (
            el[i]
            + el[i + 2 : hi]
            - vec_dist(p[i], p[i + 2 : hi], metric)
            - vec_dist(pn[i], pn[i + 2 : hi], metric)
        )
        k = int(np.argmax(gains))
        g = float(gains[k])
        if g > eps and (worst is None or g > worst[0]):
            worst = (g, i, i + 2 + k)
    if worst is None:
        return None
    g, i, j = worst
    change = _make_change(order, i, j, g)
    return Violation(i=i, j=j, removed=change.removed, added=change.added, gain=g)


def min_improvement(
    inst_or_points,
    metric: Metric | str = Metric.EUCLIDEAN,
    eps: float = 1e-12,
) -> float | None:
    """Smallest gain above eps over all ordered vertex quadruples.

    Every 2-change any run could ever perform has gain of the form
    d(a,b) + d(c,d) - d(a,c) - d(b,d) for distinct a,b,c,d, so this value
    divides the total descent: iterations <= initial_length / min_improvement.
    Returns None when no quadruple improves.  O(n^4) work, O(n^2) memory.
    """
    pts = _coords(inst_or_points)
    n = pts.shape[0]
    if n < 4:
        raise ValueError(f"min_improvement needs n >= 4, got {n}")
    D = pairwise_distances(pts, metric)
    best = math.inf
    idx = np.arange(n)
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            g = D[a, b] + D - D[a][:, None] - D[b][None, :]
            g[a, :] = -np.inf
            g[b, :] = -np.inf
            g[:, a] = -np.inf
            g[:, b] = -np.inf
            g[idx, idx] = -np.inf
            pos = g[g > eps]
            if pos.size:
                best = min(best, float(pos.min()))
    return None if best is math.inf else best


# ---------------------------------------------------------------------------
# linked pairs


def _edge_sets(change: TwoChange) -> tuple[set[frozenset], set[frozenset]]:
    removed = {frozenset(e) for e in change.removed}
    added = {frozenset(e) for e in change.added}
    return removed, added


def classify_linked_pair(first: TwoChange, second: TwoChange) -> LinkedPairType:
    """Type of the (ordered) pair of 2-changes, by shared added/removed edge.

    The pair is linked when an edge added by one change is removed by the
    other.  With the changes sharing one such edge: 4 distinct vertices in
    total is type 2, 6 is type 0, and 5 splits into type 1b when the link
    runs both ways (the second change re-creates an edge the first removed)
    and type 1a otherwise.
    """
    r1, a1 = _edge_sets(first)
    r2, a2 = _edge_sets(second)
    forward = a1 & r2
    backward = a2 & r1
    if not forward and not backward:
        return LinkedPairType.NOT_LINKED
    vertices = set()
    for e in (*first.removed, *first.added, *second.removed, *second.added):
        vertices.update(e)
    k = len(vertices)
    if k == 4:
        return LinkedPairType.TYPE_2
    if k == 6:
        return LinkedPairType.TYPE_0
    if k == 5:
        return LinkedPairType.TYPE_1B if (forward and backward) else LinkedPairType.TYPE_1A
    raise ValueError(f"linked pair with {k} vertices cannot occur")


def linked_pair_bound(t: int, n: int) -> int:
    """Guaranteed number of disjoint type-0/1 pairs in t changes on n vertices."""
    return math.ceil(t / 7 - 3 * n / 28)


def count_disjoint_linked_pairs(
    changes: Sequence[TwoChange],
    n: int | None = None,
    exhaustive_limit: int = 60,
    method: str = "auto",
) -> tuple[int, list[tuple[int, int]]]:
    """Count pairwise change-disjoint linked pairs of type 0/1.

    Pairs are indices (i, j), i < j, into ``changes`` whose classification is
    type 0, 1a or 1b; "disjoint" means no 2-change belongs to two selected
    pairs.  A lexicographic greedy matching is used by default; when ``n`` is
    given, the greedy result falls short of the guaranteed bound and the
    sequence is short (len(changes) <= exhaustive_limit), an exact
    maximum-cardinality matching is computed instead.  method="greedy" or
    "exact" forces one strategy.

    Returns (count, selected pairs).
    """
    if method not in ("auto", "greedy", "exact"):
        raise ValueError(f"unknown method {method!r}")
    t = len(changes)
    added_by: dict[frozenset, list[int]] = {}
    removed_by: dict[frozenset, list[int]] = {}
    for idx, ch in enumerate(changes):
        removed, added = _edge_sets(ch)
        for e in added:
            added_by.setdefault(e, []).append(idx)
        for e in removed:
            removed_by.setdefault(e, []).append(idx)

    candidates: set[tuple[int, int]] = set()
    for e, adders in added_by.items():
        removers = removed_by.get(e)
        if not removers:
            continue
        for i in adders:
            for j in removers:
                if i != j:
                    candidates.add((min(i, j), max(i, j)))
    linked = [
        pair
        for pair in sorted(candidates)
        if classify_linked_pair(changes[pair[0]], changes[pair[1]])
        in (LinkedPairType.TYPE_0, LinkedPairType.TYPE_1A, LinkedPairType.TYPE_1B)
    ]

    def greedy() -> list[tuple[int, int]]:
        used: set[int] = set()
        picked = []
        for i, j in linked:
            if i not in used and j not in used:
                picked.append((i, j))
                used.update((i, j))
        return picked

    def exact() -> list[tuple[int, int]]:
        import networkx as nx

        graph = nx.Graph()
        graph.add_nodes_from(range(t))
        graph.add_edges_from(linked)
        matching = nx.max_weight_matching(graph, maxcardinality=True)
        return sorted((min(i, j), max(i, j)) for i, j in matching)

    if method == "exact":
        picked = exact()
    else:
        picked = greedy()
        if (
            method == "auto"
            and n is not None
            and len(picked) < linked_pair_bound(t, n)
            and t <= exhaustive_limit
        ):
            picked = exact()
    return len(picked), picked
