"""Young-diagram algebra for the deformed Plancherel measure.

The measure on partitions of n is

    M_n(lam) = n! theta^n / (H(lam) H'(lam)),

with H, H' the deformed hook products, computable either box by box or
through gamma ratios over row lengths; both routes are implemented and
must agree.  Mixing M_n with Poisson(M) weights gives the rate-M
Poissonized measure, which -- viewed with a fixed particle count
N ~ c sqrt(M) through ell_i = lam_{N-i+1} + (i-1) theta -- is exactly a
discrete beta-ensemble and is sampled with the chain from
:mod:`dbeta.sampler`.
"""

from __future__ import annotations

import math
from typing import Iterator, Sequence

import numpy as np

from .ensemble import Configuration, EnsembleParams, lattice_params
from .equilibrium import classical_locations, jack_equilibrium, jack_measure
from .sampler import ChainSpec, SampleBatch, run_chain
from .weights import PoissonizedJack

__all__ = [
    "check_partition",
    "transpose",
    "partitions_of",
    "hook_products_boxes",
    "hook_products_rows",
    "jack_plancherel_logprob",
    "vw_products",
    "poissonized_logprob",
    "partition_to_config",
    "config_to_partition",
    "sample_poissonized_jack",
    "row_statistic",
]


def check_partition(lam: Sequence[int]) -> tuple[int, ...]:
    lam = tuple(int(v) for v in lam)
    if any(v <= 0 for v in lam):
        raise ValueError("rows must be positive (drop trailing zeros)")
    if any(lam[i] < lam[i + 1] for i in range(len(lam) - 1)):
        raise ValueError("rows must be nonincreasing")
    return lam


def transpose(lam: Sequence[int]) -> tuple[int, ...]:
    lam = check_partition(lam) if lam else ()
    if not lam:
        return ()
    return tuple(sum(1 for r in lam if r >= j) for j in range(1, lam[0] + 1))


def partitions_of(n: int, max_part: int | None = None) -> Iterator[tuple[int, ...]]:
    """All partitions of n, largest part first, lexicographically down."""
    if n == 0:
        yield ()
        return
    cap = n if max_part is None else min(max_part, n)
    for first in range(cap, 0, -1):
        for rest in partitions_of(n - first, first):
            yield (first,) + rest


def hook_products_boxes(lam: Sequence[int], theta: float) -> tuple[float, float]:
    """(log H, log H') summed box by box from arm and leg lengths."""
    lam = check_partition(lam) if lam else ()
    if not lam:
        return 0.0, 0.0
    lam_t = transpose(lam)
    log_h = 0.0
    log_hp = 0.0
    for i, row in enumerate(lam, start=1):
        for j in range(1, row + 1):
            arm = row - j
            leg = lam_t[j - 1] - i
            log_h += math.log(arm + leg * theta + 1.0)
            log_hp += math.log(arm + leg * theta + theta)
    return log_h, log_hp


def hook_products_rows(lam: Sequence[int], theta: float) -> tuple[float, float]:
    """(log H, log H') through gamma ratios over row lengths."""
    lam = check_partition(lam) if lam else ()
    if not lam:
        return 0.0, 0.0
    ln = len(lam)
    lg = math.lgamma
    log_h = 0.0
    log_hp = 0.0
    for i in range(1, ln + 1):
        for j in range(i + 1, ln + 1):
            d = lam[i - 1] - lam[j - 1]
            k = j - i
            log_h += lg(d + (k - 1) * theta + 1.0) - lg(d + k * theta + 1.0)
            log_hp += lg(d + k * theta) - lg(d + (k + 1) * theta)
        log_h += lg(lam[i - 1] + (ln - i) * theta + 1.0)
        log_hp += lg(lam[i - 1] + (ln - i) * theta + theta) - lg(theta)
    return log_h, log_hp


def jack_plancherel_logprob(lam: Sequence[int], n: int, theta: float) -> float:
    """ln M_n(lam) = ln n! + n ln theta - log H - log H'."""
    lam = check_partition(lam) if lam else ()
    if sum(lam) != n:
        raise ValueError("partition size %d != n = %d" % (sum(lam), n))
    log_h, log_hp = hook_products_rows(lam, theta)
    return math.lgamma(n + 1.0) + n * math.log(theta) - log_h - log_hp


def vw_products(lam: Sequence[int], m: int, theta: float) -> tuple[float, float]:
    """(log V_m, log W_m); the product V_m W_m does not depend on m >= len(lam)."""
    lam = check_partition(lam) if lam else ()
    if m < len(lam):
        raise ValueError("m must be at least the number of rows")
    rows = list(lam) + [0] * (m - len(lam))
    lg = math.lgamma
    log_v = 0.0
    for i in range(1, m + 1):
        for j in range(i + 1, m + 1):
            d = rows[i - 1] - rows[j - 1]
            k = j - i
            log_v += (
                lg(d + k * theta + 1.0)
                + lg(d + (k + 1) * theta)
                - lg(d + (k - 1) * theta + 1.0)
                - lg(d + k * theta)
            )
    log_w = 0.0
    for i in range(1, m + 1):
        log_w += lg(theta) - lg(rows[i - 1] + (m - i) * theta + 1.0) - lg(rows[i - 1] + (m - i) * theta + theta)
    return log_v, log_w


def poissonized_logprob(lam: Sequence[int], rate: float, theta: float) -> float:
    """ln of the rate-M Poissonized measure: -M + log(V W) + |lam| ln(theta M)."""
    lam = check_partition(lam) if lam else ()
    m = max(len(lam), 1)
    log_v, log_w = vw_products(lam, m, theta)
    return -rate + log_v + log_w + sum(lam) * math.log(theta * rate)


def partition_to_config(lam: Sequence[int], n: int, theta: float) -> Configuration:
    """Embed a partition as particles ell_i = lam_{N-i+1} + (i-1) theta."""
    lam = check_partition(lam) if lam else ()
    if n < len(lam):
        raise ValueError("need N >= number of rows")
    rows = list(lam) + [0] * (n - len(lam))
    params = lattice_params(theta, n, 0.0)  # left endpoint so min position is 0
    lam_vec = tuple(rows[n - i] + 1 for i in range(1, n + 1))
    return Configuration(params, lam_vec)


def config_to_partition(config: Configuration) -> tuple[int, ...]:
    """Inverse embedding; drops zero rows."""
    lam_vec = config.lam
    rows = [int(v) - 1 for v in reversed(lam_vec)]
    if any(r < 0 for r in rows):
        raise ValueError("configuration does not encode a partition")
    return tuple(r for r in rows if r > 0)


def row_statistic(rows: np.ndarray, rate: float, theta: float) -> np.ndarray:
    """theta^{-5/6} M^{1/3} (row/sqrt(M) - 2 sqrt(theta))."""
    rows = np.asarray(rows, dtype=float)
    return theta ** (-5.0 / 6.0) * rate ** (1.0 / 3.0) * (
        rows / math.sqrt(rate) - 2.0 * math.sqrt(theta)
    )


def sample_poissonized_jack(
    rate: float,
    theta: float,
    c: float,
    spec: ChainSpec,
    k_set=(1,),
):
    """Sample the Poissonized measure as a fixed-N discrete beta-ensemble.

    N = ceil(c sqrt(M)) particles with the Poissonized-row weight; the
    chain initializes at the quantiles of the closed-form equilibrium
    measure.  Returns (batch, partitions, {k: rescaled row-k statistics}).
    """
    weight = PoissonizedJack(rate, theta, c)  # validates the c bound
    n = math.ceil(c * math.sqrt(rate))
    lo, hi = weight.support_box()
    params = lattice_params(theta, n, lo, hi)
    gammas = classical_locations(jack_measure(theta, c, grid_n=4000), n).gammas
    batch = run_chain(params, weight, spec, gammas=gammas)
    partitions = [config_to_partition(c_) for c_ in batch.configurations()]
    pos = batch.positions()
    stats = {}
    for k in k_set:
        # row k = particle N-k+1 minus its lattice offset
        rows_k = pos[:, n - k] - (n - k) * theta
        stats[int(k)] = row_statistic(rows_k, rate, theta)
    return batch, partitions, stats
