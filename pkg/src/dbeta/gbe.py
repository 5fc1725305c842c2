"""Continuous Gaussian beta-ensemble reference via tridiagonal matrices.

A symmetric tridiagonal matrix with diagonal N(0, 2/beta) and
off-diagonal chi_{beta*(N-i)}/sqrt(beta) entries has eigenvalue density
proportional to |Delta(x)|^beta exp(-(beta/4) sum x_i^2), so the empirical
measure of lambda/sqrt(N) converges to the semicircle on [-2, 2].  The
entry scaling is validated by that semicircle limit (see the tests)
rather than assumed.  Extreme eigenvalues come from Sturm-sequence
bisection, checked against a dense eigensolver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "TridiagonalMatrix",
    "sample_gbe",
    "extreme_eigenvalues",
    "all_eigenvalues",
    "semicircle_cdf",
    "semicircle_quantiles",
    "gbe_edge_samples",
]


@dataclass(frozen=True)
class TridiagonalMatrix:
    diagonal: np.ndarray
    offdiagonal: np.ndarray

    def __post_init__(self):
        if self.offdiagonal.size != max(self.diagonal.size - 1, 0):
            raise ValueError("off-diagonal length must be N - 1")
        if np.any(self.offdiagonal < 0):
            raise ValueError("off-diagonal entries must be nonnegative")

    @property
    def n(self) -> int:
        return self.diagonal.size


def sample_gbe(n: int, beta: float, seed) -> TridiagonalMatrix:
    """Draw one tridiagonal matrix; chi entries via the gamma route.

    chi_k = sqrt(Gamma(k/2, scale=2)); the degenerate shape-zero case is
    an exact zero (only reachable for k = 0, i.e. beyond the last row).
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    diag = rng.standard_normal(n) * math.sqrt(2.0 / beta)
    dof = beta * np.arange(n - 1, 0, -1, dtype=float)
    off = np.where(dof > 0, np.sqrt(rng.gamma(np.maximum(dof, 1e-300) / 2.0, 2.0)), 0.0)
    off = off / math.sqrt(beta)
    return TridiagonalMatrix(diag, off)


def _count_below(diag: np.ndarray, off2: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Eigenvalues strictly below each shift, by the Sturm/LDL recurrence."""
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    q = diag[0] - shifts
    count = (q < 0).astype(int)
    tiny = 1e-300
    for i in range(1, diag.size):
        q = np.where(np.abs(q) < tiny, np.where(q < 0, -tiny, tiny), q)
        q = diag[i] - shifts - off2[i - 1] / q
        count += q < 0
    return count


def _count_below_scalar(d: list, o2: list, t: float) -> int:
    # plain-float twin of _count_below; the bisection hot path
    q = d[0] - t
    count = 1 if q < 0 else 0
    for i in range(1, len(d)):
        if q == 0.0:
            q = 1e-300
        q = d[i] - t - o2[i - 1] / q
        if q < 0:
            count += 1
    return count


def extreme_eigenvalues(matrix: TridiagonalMatrix, k: int, tol: float = 1e-10):
    """The k smallest and k largest eigenvalues by bisection.

    Returns (smallest ascending, largest ascending).  Each eigenvalue is
    located to absolute tolerance ``tol`` inside Gershgorin bounds.
    """
    n = matrix.n
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= N")
    d = matrix.diagonal
    o = matrix.offdiagonal
    o2 = o * o
    radius = np.zeros(n)
    if n > 1:
        radius[:-1] += o
        radius[1:] += o
    lo = float(np.min(d - radius)) - tol
    hi = float(np.max(d + radius)) + tol

    d_list = d.tolist()
    o2_list = o2.tolist()

    def kth(index: int) -> float:
        # smallest t with count_below(t) >= index, located by bisection
        a, b = lo, hi
        while b - a > tol:
            mid = 0.5 * (a + b)
            if _count_below_scalar(d_list, o2_list, mid) >= index:
                b = mid
            else:
                a = mid
        return 0.5 * (a + b)

    smallest = np.array([kth(i) for i in range(1, k + 1)])
    largest = np.array([kth(i) for i in range(n - k + 1, n + 1)])
    return smallest, largest


def all_eigenvalues(matrix: TridiagonalMatrix) -> np.ndarray:
    """Full spectrum (LAPACK); plumbing for pooled-spectrum statistics."""
    from scipy.linalg import eigvalsh_tridiagonal

    if matrix.n == 1:
        return matrix.diagonal.copy()
    return eigvalsh_tridiagonal(matrix.diagonal, matrix.offdiagonal)


def semicircle_cdf(x) -> np.ndarray:
    """CDF of the semicircle on [-2, 2]."""
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    return 0.5 + x * np.sqrt(4.0 - x * x) / (4.0 * math.pi) + np.arcsin(x / 2.0) / math.pi


def semicircle_quantiles(n: int) -> np.ndarray:
    """Classical locations of the semicircle at levels (i - 1/2)/N."""
    levels = (np.arange(1, n + 1) - 0.5) / n
    return np.array([brentq(lambda x, p=p: float(semicircle_cdf(x)) - p, -2.0, 2.0, xtol=1e-12) for p in levels])


def gbe_edge_samples(
    n: int,
    beta: float,
    n_samples: int,
    seed: int,
    k_set=(1,),
    side: str = "right",
    reference: str = "edge",
    start_index: int = 0,
) -> dict:
    """Rescaled extreme-eigenvalue statistics, one array per k.

    Per sample, x_k is the k-th eigenvalue from the chosen side in the
    scaling where x/N follows the semicircle; the statistic is
    N^{2/3} k^{1/3} (x_k/N - ref_k) with ref_k either the band edge
    (+/-2, ``reference="edge"``) or the semicircle classical location
    (``reference="quantile"``).  Edge-referenced right-side values for
    k = 1 follow the Tracy-Widom beta law (negative mean); the
    quantile-referenced variant recenters each k near zero.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if reference not in ("edge", "quantile"):
        raise ValueError("reference must be 'edge' or 'quantile'")
    k_set = tuple(int(k) for k in k_set)
    kmax = max(k_set)
    if reference == "quantile":
        gam = semicircle_quantiles(n)
        refs = {k: (gam[k - 1] if side == "left" else gam[n - k]) for k in k_set}
    else:
        refs = {k: (-2.0 if side == "left" else 2.0) for k in k_set}
    scale = math.sqrt(n)  # matrix eigenvalues live at semicircle-on-[-2,2] scale
    out = {k: np.empty(n_samples) for k in k_set}
    for s in range(n_samples):
        # per-sample stream keyed by (seed, global index): worker-split safe
        rng = np.random.default_rng([seed, start_index + s])
        mat = sample_gbe(n, beta, rng)
        smallest, largest = extreme_eigenvalues(mat, kmax)
        for k in k_set:
            x = smallest[k - 1] if side == "left" else largest[-k]
            out[k][s] = n ** (2.0 / 3.0) * k ** (1.0 / 3.0) * (x * scale / n - refs[k])
    return out
