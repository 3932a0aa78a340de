"""Kernel budget rule and per-channel k-means."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import BudgetError, ConfigurationError, InputValidationError
from ..utils import log
from ..validation import validate_unit_interval
from .config import CompressionConfig


def kernel_count(v: float, n_filters: int, cfg: CompressionConfig) -> int:
    """Return the kernel budget ``q_c`` of a channel with indicator ``v``.

    The cases are checked in order: ``floor(v * G) == 0`` prunes the
    channel, ``ceil(v * G) == G`` keeps all ``N`` kernels, otherwise
    ``q_c = ceil(N / 2 ** (G - ceil(v * G) + T))``. The result is clamped
    to ``[0, N]``.

    Parameters
    ----------
    v : float
        Indicator in ``[0, 1]``.
    n_filters : int
        Number of filters ``N``.
    cfg : CompressionConfig
        Supplies ``G`` and ``T``.

    Returns
    -------
    int
        Kernel budget.

    Raises
    ------
    ConfigurationError
        If ``G < 2``.
    InputValidationError
        If ``v`` lies outside ``[0, 1]``.

    Examples
    --------
    >>> kernel_count(0.6, 16, CompressionConfig(granularity=4, shift=0))
    8
    >>> kernel_count(0.3, 16, CompressionConfig(granularity=4, shift=1))
    2
    """
    g = cfg.granularity
    if g < 2:
        raise ConfigurationError(f"granularity must be >= 2, got {g}")
    validate_unit_interval(v, "indicator")
    scaled = v * g
    if math.floor(scaled) == 0:
        return 0
    level = math.ceil(scaled)
    if level == g:
        return n_filters
    exponent = g - level + cfg.shift
    if exponent >= 0:
        q = -(-n_filters // (1 << exponent))
    else:
        q = n_filters << -exponent
    return min(max(q, 0), n_filters)


@dataclass(frozen=True, eq=False)
class ClusterResult:
    """Outcome of clustering one channel's kernels.

    Attributes
    ----------
    centroids : np.ndarray
        ``q x D`` float64 centroids.
    assignments : np.ndarray
        Length-``N`` int array of 1-based centroid indices.
    inertia : float
        Sum of squared distances to the assigned centroids.
    inertia_history : tuple[float, ...]
        Inertia after every assignment step, non-increasing.
    iterations : int
        Lloyd iterations run.
    """

    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    inertia_history: tuple[float, ...] = field(default=())
    iterations: int = 0

    @property
    def q(self) -> int:
        return int(self.centroids.shape[0])


def _squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nqd,nqd->nq", diff, diff)


def _seed_centroids(points: np.ndarray, q: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-weighted seeding (k-means++)."""
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _squared_distances(points, points[chosen]).min(axis=1)
    while len(chosen) < q:
        total = closest.sum()
        if total > 0:
            candidate = int(rng.choice(n, p=closest / total))
        else:
            remaining = np.setdiff1d(np.arange(n), chosen)
            candidate = int(rng.choice(remaining))
        chosen.append(candidate)
        closest = np.minimum(closest, _squared_distances(points, points[[candidate]])[:, 0])
    return points[chosen].copy()


def _assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Assign points to their nearest centroid and repair empty clusters.

    An empty cluster takes the point farthest from its own centroid (among
    clusters with a spare member) and its centroid moves onto that point,
    so the inertia never grows.
    """
    q = centroids.shape[0]
    centroids = centroids.copy()
    sq = _squared_distances(points, centroids)
    labels = np.argmin(sq, axis=1)
    rows = np.arange(labels.size)
    for cluster in range(q):
        if np.any(labels == cluster):
            continue
        counts = np.bincount(labels, minlength=q)
        own = np.where(counts[labels] >= 2, sq[rows, labels], -np.inf)
        point = int(np.argmax(own))
        labels[point] = cluster
        centroids[cluster] = points[point]
        sq[:, cluster] = _squared_distances(points, centroids[[cluster]])[:, 0]
    inertia = float(sq[rows, labels].sum())
    return labels, centroids, inertia


def kmeans_kernels(kernels: np.ndarray, q: int, cfg: CompressionConfig) -> ClusterResult:
    """Cluster ``N`` flattened kernels into ``q`` centroids.

    Parameters
    ----------
    kernels : np.ndarray
        ``N x D`` flattened kernels.
    q : int
        Number of centroids, ``1 <= q <= N``.
    cfg : CompressionConfig
        Supplies the seed, iteration cap and tolerance.

    Returns
    -------
    ClusterResult
        Centroids, 1-based assignments and inertia. ``q == N`` returns the
        kernels themselves; ``q == 1`` returns the mean kernel.

    Raises
    ------
    BudgetError
        If ``q`` lies outside ``[1, N]``.

    Examples
    --------
    >>> import numpy as np
    >>> result = kmeans_kernels(np.array([[0.0], [0.1], [10.0], [10.1]]), 2, CompressionConfig())
    >>> sorted(np.round(result.centroids[:, 0], 2).tolist())
    [0.05, 10.05]
    """
    points = np.asarray(kernels, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 1:
        raise InputValidationError(f"kernels must be an N x D array, got {points.shape}")
    n = points.shape[0]
    if not 1 <= q <= n:
        raise BudgetError(f"cluster count must lie in [1, {n}], got {q}", context={"q": q, "n": n})

    if q == n:
        return ClusterResult(
            centroids=points.copy(),
            assignments=np.arange(1, n + 1, dtype=np.int32),
            inertia=0.0,
            inertia_history=(0.0,),
        )
    if q == 1:
        mean = points.mean(axis=0, keepdims=True)
        inertia = float(_squared_distances(points, mean).sum())
        return ClusterResult(
            centroids=mean,
            assignments=np.ones(n, dtype=np.int32),
            inertia=inertia,
            inertia_history=(inertia,),
        )

    rng = np.random.default_rng(cfg.kmeans_seed)
    centroids = _seed_centroids(points, q, rng)
    labels, centroids, inertia = _assign(points, centroids)
    history = [inertia]
    iterations = 0
    converged = False
    while iterations < cfg.kmeans_max_iters:
        iterations += 1
        updated = np.stack([points[labels == cluster].mean(axis=0) for cluster in range(q)])
        shift = float(np.max(np.linalg.norm(updated - centroids, axis=1)))
        centroids = updated
        labels, centroids, inertia = _assign(points, centroids)
        history.append(inertia)
        if shift < cfg.kmeans_tol:
            converged = True
            break
    if not converged:
        log(
            f"k-means stopped after {iterations} iterations without converging",
            level=logging.WARNING,
        )
    return ClusterResult(
        centroids=centroids,
        assignments=(labels + 1).astype(np.int32),
        inertia=inertia,
        inertia_history=tuple(history),
        iterations=iterations,
    )


__all__ = ["kernel_count", "ClusterResult", "kmeans_kernels"]
