"""Rigidity, edge, and gap statistics over sample batches.

All reductions are pure functions of the batch's particle positions and
a set of classical locations, so they parallelize trivially per sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampler import SampleBatch

__all__ = [
    "EdgeStatistics",
    "KSResult",
    "RigidityProfile",
    "rigidity_profile",
    "rescale_edge",
    "gap_statistics",
    "ks_distance",
    "ecdf",
]


@dataclass(frozen=True)
class EdgeStatistics:
    """Rescaled extreme-particle values plus the scaling descriptor."""

    values: np.ndarray            # one value per sample
    n_particles: int
    k: int
    s_coefficient: float
    side: str

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("edge statistics must be finite")
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")

    def ecdf_grid(self):
        return ecdf(self.values)


@dataclass(frozen=True)
class KSResult:
    distance: float
    n_a: int
    n_b: int

    def __post_init__(self):
        if not 0.0 <= self.distance <= 1.0:
            raise ValueError("KS distance outside [0, 1]")


@dataclass
class RigidityProfile:
    """Bulk deviations D_i = N^{2/3} min(i, N-i+1)^{1/3} |ell_i/N - gamma_i|."""

    bulk_indices: np.ndarray
    max_per_sample: np.ndarray
    quantiles_per_index: dict     # level -> array over bulk indices


def _bulk_window(n: int) -> np.ndarray:
    lo = max(int(math.ceil(0.05 * n)), 1)
    hi = int(math.floor(0.95 * n))
    return np.arange(lo, hi + 1)


def rigidity_profile(
    batch: SampleBatch,
    gammas: np.ndarray,
    quantile_levels=(0.5, 0.9, 0.99),
) -> RigidityProfile:
    """Per-sample max bulk deviation and per-index deviation quantiles."""
    gammas = np.asarray(gammas, dtype=float)
    n = batch.params.n_particles
    if gammas.size != n:
        raise ValueError("classical locations and batch disagree on N")
    idx = _bulk_window(n)
    pos = batch.positions() / n
    weight = n ** (2.0 / 3.0) * np.minimum(idx, n - idx + 1) ** (1.0 / 3.0)
    dev = np.abs(pos[:, idx - 1] - gammas[idx - 1][None, :]) * weight[None, :]
    return RigidityProfile(
        bulk_indices=idx,
        max_per_sample=np.max(dev, axis=1),
        quantiles_per_index={
            q: np.quantile(dev, q, axis=0) for q in quantile_levels
        },
    )


def rescale_edge(
    batch: SampleBatch,
    gammas: np.ndarray,
    s: float,
    k: int,
    side: str = "left",
) -> EdgeStatistics:
    """N^{2/3} k^{1/3} s^{2/3} (ell_k/N - gamma_k) for the k-th extreme particle.

    ``side="left"`` takes the k-th smallest particle with its classical
    location; ``side="right"`` mirrors the bookkeeping to the k-th
    largest.  No sign flip is applied: compare left statistics with a
    left-edge reference and right with right.
    """
    if s <= 0:
        raise ValueError("edge coefficient s must be positive")
    gammas = np.asarray(gammas, dtype=float)
    n = batch.params.n_particles
    if gammas.size != n:
        raise ValueError("classical locations and batch disagree on N")
    if not 1 <= k <= n:
        raise ValueError("k outside [1, N]")
    pos = batch.positions() / n
    col = k - 1 if side == "left" else n - k
    coeff = n ** (2.0 / 3.0) * k ** (1.0 / 3.0) * s ** (2.0 / 3.0)
    values = coeff * (pos[:, col] - gammas[col])
    return EdgeStatistics(values=values, n_particles=n, k=k, s_coefficient=s, side=side)


def gap_statistics(batch: SampleBatch, k: int, level_count: float) -> np.ndarray:
    """Rescaled nearest-neighbor gaps (ell_{k+1} - ell_k) L^{1/3} N^{-1/3}.

    The lattice floor makes the ECDF vanish below theta L^{1/3} N^{-1/3}.
    """
    n = batch.params.n_particles
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < N")
    pos = batch.positions()
    gaps = pos[:, k] - pos[:, k - 1]
    return gaps * level_count ** (1.0 / 3.0) * n ** (-1.0 / 3.0)


def ecdf(values: np.ndarray):
    """Sorted values and the right-continuous ECDF heights at them."""
    v = np.sort(np.asarray(values, dtype=float))
    f = np.arange(1, v.size + 1) / v.size
    return v, f


def ks_distance(values_a, values_b) -> KSResult:
    """Exact two-sample sup-difference of ECDFs by a merge scan."""
    a = np.sort(np.asarray(values_a, dtype=float))
    b = np.sort(np.asarray(values_b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_distance needs nonempty samples")
    i = j = 0
    d = 0.0
    na, nb = a.size, b.size
    while i < na and j < nb:
        v = min(a[i], b[j])
        while i < na and a[i] == v:
            i += 1
        while j < nb and b[j] == v:
            j += 1
        d = max(d, abs(i / na - j / nb))
    d = max(d, abs(1.0 - j / nb) if i == na else abs(i / na - 1.0))
    return KSResult(distance=float(d), n_a=na, n_b=nb)
