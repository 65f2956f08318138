"""Metrics and elementary 2-change geometry.

Three point-to-point distances are supported: Manhattan (l1), Euclidean (l2)
and squared Euclidean (l2sq).  Squared Euclidean is deliberately kept even
though it violates the triangle inequality -- several experiments probe
exactly that regime.

The module also provides the two scalar quantities everything downstream is
built from:

* ``delta(a, b, c)`` -- the difference d(c,a) - d(c,b), i.e. how much closer
  ``c`` sits to ``b`` than to ``a``.
* ``two_change_gain(x1, x2, x3, x4)`` -- the length saved by removing the
  tour edges (x1,x2), (x3,x4) and reconnecting as (x1,x3), (x2,x4).

``eta_geometry_y`` inverts the Euclidean level-set relation used when two
points at vertical distance ``delta_ab`` act as foci: given the difference
eta of the two distances and the horizontal coordinate x of a third point,
it returns the non-negative vertical coordinate y with
|z-a| - |z-b| = eta (a hyperbola branch).
"""

from __future__ import annotations

import enum
import math
from typing import Iterable

import numpy as np

__all__ = [
    "Metric",
    "as_points",
    "distance",
    "pairwise_distances",
    "rows_to_points",
    "vec_dist",
    "delta",
    "two_change_gain",
    "eta_geometry_y",
]


class Metric(str, enum.Enum):
    """Distance functions understood by the lab.

    The enum values double as the CLI / config tokens.
    """

    MANHATTAN = "l1"
    EUCLIDEAN = "l2"
    SQ_EUCLIDEAN = "l2sq"

    @classmethod
    def parse(cls, token: "Metric | str") -> "Metric":
        if isinstance(token, Metric):
            return token
        try:
            return cls(token)
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown metric {token!r} (expected one of: {names})") from None


def as_points(points: Iterable) -> np.ndarray:
    """Coerce to a float64 (n, d) coordinate array, validating shape."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected an (n, d) coordinate array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coordinates must be finite")
    return arr


def distance(a, b, metric: Metric | str = Metric.EUCLIDEAN) -> float:
    """Distance between two points under the given metric."""
    m = Metric.parse(metric)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"point dimensions differ: {a.shape} vs {b.shape}")
    diff = a - b
    if m is Metric.MANHATTAN:
        return float(np.sum(np.abs(diff)))
    sq = float(np.dot(diff, diff))
    if m is Metric.SQ_EUCLIDEAN:
        return sq
    return math.sqrt(sq)


def pairwise_distances(points, metric: Metric | str = Metric.EUCLIDEAN) -> np.ndarray:
    """Dense (n, n) distance matrix. Symmetric with a zero diagonal.

    Computed from coordinate differences (blocked to bound memory) rather
    than the Gram-matrix identity: the latter loses absolute precision near
    coincident points, and the 2-opt engine compares gains at 1e-12.
    """
    m = Metric.parse(metric)
    pts = as_points(points)
    n = pts.shape[0]
    d = np.empty((n, n))
    block = max(1, int(2**22 // max(1, n * pts.shape[1])))
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        diff = pts[lo:hi, None, :] - pts[None, :, :]
        if m is Metric.MANHATTAN:
            d[lo:hi] = np.abs(diff).sum(axis=2)
        else:
            np.einsum("ijk,ijk->ij", diff, diff, out=d[lo:hi])
            if m is Metric.EUCLIDEAN:
                np.sqrt(d[lo:hi], out=d[lo:hi])
    np.fill_diagonal(d, 0.0)
    return d


def vec_dist(a, b, metric: Metric | str = Metric.EUCLIDEAN) -> np.ndarray:
    """Row-aligned distances between two (k, d) arrays."""
    m = Metric.parse(metric)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    diff = a - b
    if m is Metric.MANHATTAN:
        return np.abs(diff).sum(axis=-1)
    d = np.einsum("...k,...k->...", diff, diff)
    if m is Metric.EUCLIDEAN:
        d = np.sqrt(d)
    return d


def rows_to_points(sources, targets, metric: Metric | str = Metric.EUCLIDEAN) -> np.ndarray:
    """Distances from each source point to each target point, shape (s, t).

    Computed straight from coordinates; used where a full pairwise matrix
    would be wasteful (certifying large instances).
    """
    m = Metric.parse(metric)
    src = as_points(sources)
    tgt = as_points(targets)
    diff = src[:, None, :] - tgt[None, :, :]
    if m is Metric.MANHATTAN:
        return np.abs(diff).sum(axis=2)
    d = np.einsum("ijk,ijk->ij", diff, diff)
    if m is Metric.EUCLIDEAN:
        np.sqrt(d, out=d)
    return d


def delta(a, b, c, metric: Metric | str = Metric.EUCLIDEAN) -> float:
    """d(c, a) - d(c, b): positive when c is nearer to b than to a."""
    return distance(c, a, metric) - distance(c, b, metric)


def two_change_gain(x1, x2, x3, x4, metric: Metric | str = Metric.EUCLIDEAN) -> float:
    """Gain of the 2-change replacing edges (x1,x2),(x3,x4) by (x1,x3),(x2,x4).

    Points are given in tour order, so x2 follows x1 and x4 follows x3.
    Positive gain means the exchange shortens the tour.
    """
    m = Metric.parse(metric)
    return (
        distance(x1, x2, m)
        + distance(x3, x4, m)
        - distance(x1, x3, m)
        - distance(x2, x4, m)
    )


def eta_geometry_y(eta: float, x: float, delta_ab: float) -> float:
    """Vertical coordinate on the distance-difference level set.

    With foci a = (0, -delta_ab/2) and b = (0, +delta_ab/2), a point
    z = (x, y), y >= 0, satisfies |z - a| - |z - b| = eta exactly when

        y^2 = eta^2 / 4 + eta^2 x^2 / (delta_ab^2 - eta^2).

    Defined for 0 <= eta < delta_ab (the difference of distances to the foci
    can never reach their separation off the axis).

    Args:
        eta: target distance difference, 0 <= eta < delta_ab.
        x: horizontal coordinate of the point.
        delta_ab: distance between the two foci (> 0).

    Returns:
        The non-negative y with |z-a| - |z-b| = eta.
    """
    if delta_ab <= 0.0:
        raise ValueError(f"focus separation must be positive, got {delta_ab}")
    if eta < 0.0 or eta >= delta_ab:
        raise ValueError(
            f"eta must satisfy 0 <= eta < delta_ab, got eta={eta}, delta_ab={delta_ab}"
        )
    y_sq = eta * eta / 4.0 + (eta * eta * x * x) / (delta_ab * delta_ab - eta * eta)
    return math.sqrt(y_sq)
