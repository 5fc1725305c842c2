"""Lattice particle configurations and their unnormalized law.

A configuration of N particles is stored through the integer vector
``lam`` (nondecreasing, lam[0] >= 1 when the left lattice endpoint is
finite).  Particle positions are recovered as

    ell_i = a_lattice + lam_i + theta * i,       i = 1..N,

so consecutive positions always differ by at least ``theta``.  The
unnormalized density combines a gamma-ratio pair interaction with a
one-body weight; for theta = 1 (resp. 1/2) the interaction reduces to
the squared (resp. plain) Vandermonde, i.e. the usual Coulomb gas.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy.special import gammaln

__all__ = [
    "EnsembleParams",
    "Configuration",
    "HoleConfiguration",
    "ExactTable",
    "lattice_params",
    "log_interaction",
    "log_interaction_positions",
    "log_density_unnormalized",
    "enumerate_configurations",
    "count_configurations",
    "exact_distribution",
    "stieltjes_empirical",
    "holes_of",
    "particles_of",
    "dual_log_weight",
]

NEG_INF = float("-inf")

ENUMERATION_CAP = 10**7


class EnumerationCapError(RuntimeError):
    """Raised when an instance is too large to enumerate exactly."""

    def __init__(self, count: int, cap: int):
        super().__init__(f"{count} configurations exceed the enumeration cap {cap}")
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class EnsembleParams:
    """State-space parameters (theta, N, lattice endpoints).

    Infinite endpoints are encoded as -inf / +inf.  When both are finite,
    b - a - N*theta must be a positive integer: it counts the admissible
    values of the top lambda coordinate plus one.
    """

    theta: float
    n_particles: int
    a_lattice: float = NEG_INF
    b_lattice: float = math.inf

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if self.n_particles < 1:
            raise ValueError("need at least one particle")
        if math.isfinite(self.a_lattice) and math.isfinite(self.b_lattice):
            span = self.b_lattice - self.a_lattice - self.n_particles * self.theta
            if abs(span - round(span)) > 1e-9 or round(span) < 1:
                raise ValueError(
                    "b - a - N*theta must be a positive integer, got %r" % span
                )

    @property
    def lam_max(self) -> float:
        """Largest admissible lambda coordinate (inf if unbounded)."""
        if not math.isfinite(self.b_lattice):
            return math.inf
        return round(self.b_lattice - self.a_lattice - self.n_particles * self.theta) - 1

    @property
    def origin(self) -> float:
        """Additive offset in ell_i = origin + lam_i + theta*i."""
        return self.a_lattice if math.isfinite(self.a_lattice) else 0.0


def lattice_params(theta: float, n_particles: int, lo: float, hi: float = math.inf) -> EnsembleParams:
    """Parameters whose smallest attainable position is ``lo``.

    The left endpoint is placed at lo - theta - 1 so that lam = (1,...)
    maps the first particle to exactly ``lo``; the right endpoint caps
    positions at the largest lattice point <= hi.
    """
    a = lo - theta - 1.0
    if math.isinf(hi):
        return EnsembleParams(theta, n_particles, a, math.inf)
    lam_top = math.floor(hi - a - n_particles * theta + 1e-9)
    if lam_top < 1:
        raise ValueError("box [%r, %r] cannot hold %d particles" % (lo, hi, n_particles))
    return EnsembleParams(theta, n_particles, a, a + n_particles * theta + lam_top + 1)


@dataclass(frozen=True)
class Configuration:
    """An ordered point of the state space, stored through lambda."""

    params: EnsembleParams
    lam: tuple[int, ...]

    def __post_init__(self):
        p = self.params
        if len(self.lam) != p.n_particles:
            raise ValueError("lambda vector has wrong length")
        if any(self.lam[i] > self.lam[i + 1] for i in range(len(self.lam) - 1)):
            raise ValueError("lambda must be nondecreasing")
        if math.isfinite(p.a_lattice) and self.lam[0] < 1:
            raise ValueError("lambda_1 must be >= 1 on a left-bounded lattice")
        if math.isfinite(p.b_lattice) and self.lam[-1] > p.lam_max:
            raise ValueError("lambda_N exceeds the right lattice endpoint")

    def positions(self) -> np.ndarray:
        """ell_i = origin + lam_i + theta*i, strictly increasing."""
        p = self.params
        i = np.arange(1, p.n_particles + 1, dtype=float)
        return p.origin + np.asarray(self.lam, dtype=float) + p.theta * i

    def to_json(self) -> str:
        p = self.params
        payload = {
            "theta": p.theta,
            "aN": p.a_lattice if math.isfinite(p.a_lattice) else None,
            "bN": p.b_lattice if math.isfinite(p.b_lattice) else None,
            "lambdas": list(self.lam),
        }
        return json.dumps(payload, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "Configuration":
        d = json.loads(text)
        a = NEG_INF if d["aN"] is None else float(d["aN"])
        b = math.inf if d["bN"] is None else float(d["bN"])
        params = EnsembleParams(float(d["theta"]), len(d["lambdas"]), a, b)
        return Configuration(params, tuple(int(v) for v in d["lambdas"]))


@dataclass(frozen=True)
class HoleConfiguration:
    """Complement of a theta=1 particle set inside {0, ..., m_max}."""

    m_max: int
    holes: tuple[int, ...]

    def __post_init__(self):
        if any(self.holes[i] >= self.holes[i + 1] for i in range(len(self.holes) - 1)):
            raise ValueError("holes must be strictly increasing")
        if self.holes and (self.holes[0] < 0 or self.holes[-1] > self.m_max):
            raise ValueError("holes outside {0..M}")


def _pair_terms(gaps: np.ndarray, theta: float) -> np.ndarray:
    """lnG(d+1) + lnG(d+theta) - lnG(d) - lnG(d+1-theta) per gap."""
    if np.any(gaps + 1.0 - theta <= 0):
        raise ValueError("gap smaller than theta: invalid configuration")
    return (
        gammaln(gaps + 1.0)
        + gammaln(gaps + theta)
        - gammaln(gaps)
        - gammaln(gaps + 1.0 - theta)
    )


def log_interaction_positions(ell, theta: float) -> float:
    """Interaction log-value on a raw increasing position vector."""
    ell = np.asarray(ell, dtype=float)
    n = ell.size
    if n < 2:
        return 0.0
    gaps = ell[None, :] - ell[:, None]
    iu = np.triu_indices(n, k=1)
    return float(np.sum(_pair_terms(gaps[iu], theta)))


def log_interaction(config: Configuration) -> float:
    """Log of the gamma-ratio pair interaction over all i < j."""
    return log_interaction_positions(config.positions(), config.params.theta)


def log_density_unnormalized(config: Configuration, weight) -> float:
    """log_interaction plus the sum of log-weights; -inf off support."""
    lw = weight.log_w(config.positions())
    total = float(np.sum(lw))
    if total == NEG_INF or math.isnan(total):
        return NEG_INF
    return log_interaction(config) + total


def count_configurations(params: EnsembleParams) -> int:
    """Number of nondecreasing integer vectors in [1, lam_max]^N."""
    lam_top = params.lam_max
    if math.isinf(lam_top):
        raise ValueError("cannot count configurations on an unbounded lattice")
    return math.comb(int(lam_top) + params.n_particles - 1, params.n_particles)


def enumerate_configurations(
    params: EnsembleParams, cap: int = ENUMERATION_CAP
) -> Iterator[Configuration]:
    """Yield every configuration once, lexicographically in lambda."""
    total = count_configurations(params)
    if total > cap:
        raise EnumerationCapError(total, cap)
    n = params.n_particles
    top = int(params.lam_max)
    lam = [1] * n

    while True:
        yield Configuration(params, tuple(lam))
        # advance to the next nondecreasing vector
        k = n - 1
        while k >= 0 and lam[k] == top:
            k -= 1
        if k < 0:
            return
        lam[k] += 1
        for j in range(k + 1, n):
            lam[j] = lam[k]


@dataclass
class ExactTable:
    """Fully enumerated law: configurations, probabilities, partition sum."""

    params: EnsembleParams
    configs: list[Configuration]
    log_weights: np.ndarray  # unnormalized log densities
    probabilities: np.ndarray
    log_partition: float

    @property
    def partition(self) -> float:
        return math.exp(self.log_partition)

    def probability_of(self, lam: tuple[int, ...]) -> float:
        return self._index()[tuple(lam)]

    def _index(self) -> dict:
        if not hasattr(self, "_by_lam"):
            self._by_lam = {
                tuple(c.lam): float(p) for c, p in zip(self.configs, self.probabilities)
            }
        return self._by_lam

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("lambda_vector,log_weight,probability\n")
            for c, lw, p in zip(self.configs, self.log_weights, self.probabilities):
                fh.write('"%s",%r,%r\n' % (" ".join(map(str, c.lam)), float(lw), float(p)))


def exact_distribution(
    params: EnsembleParams, weight, cap: int = ENUMERATION_CAP
) -> ExactTable:
    """Enumerate the law exactly; probabilities sum to one.

    The partition value is the plain sum of exp(log density) over the
    state space, so for integer weights it is an exact integer up to
    floating point roundoff.
    """
    configs = []
    logs = []
    for c in enumerate_configurations(params, cap=cap):
        configs.append(c)
        logs.append(log_density_unnormalized(c, weight))
    logs = np.asarray(logs, dtype=float)
    finite = logs > NEG_INF
    if not np.any(finite):
        raise ValueError("weight vanishes on the whole state space")
    m = float(np.max(logs[finite]))
    scaled = np.where(finite, np.exp(logs - m), 0.0)
    z = float(np.sum(scaled))
    probs = scaled / z
    return ExactTable(params, configs, logs, probs, m + math.log(z))


def stieltjes_empirical(config: Configuration, z: complex) -> complex:
    """G_N(z) = (1/N) sum 1/(z - ell_i/N) of the empirical measure."""
    ell = config.positions()
    n = ell.size
    d = z - ell / n
    if np.any(np.abs(d) == 0.0):
        raise ZeroDivisionError("z coincides with a particle location")
    return complex(np.sum(1.0 / d) / n)


def holes_of(config: Configuration, m_max: int) -> HoleConfiguration:
    """Complement of a theta=1 particle set in {0..M}."""
    p = config.params
    if abs(p.theta - 1.0) > 1e-12:
        raise ValueError("particle-hole duality requires theta = 1")
    if m_max - p.n_particles + 1 <= 0:
        raise ValueError("degenerate duality: M - N + 1 <= 0 holes")
    ell = config.positions()
    sites = np.rint(ell).astype(int)
    if np.max(np.abs(ell - sites)) > 1e-9 or sites[0] < 0 or sites[-1] > m_max:
        raise ValueError("particles must sit on integer sites inside {0..M}")
    occupied = set(sites.tolist())
    holes = tuple(x for x in range(m_max + 1) if x not in occupied)
    return HoleConfiguration(m_max, holes)


def particles_of(holes: HoleConfiguration, n_particles: int | None = None) -> Configuration:
    """Inverse of holes_of: rebuild the theta=1 particle configuration."""
    m = holes.m_max
    hole_set = set(holes.holes)
    sites = [x for x in range(m + 1) if x not in hole_set]
    if n_particles is not None and len(sites) != n_particles:
        raise ValueError("hole complement has %d sites, expected %d" % (len(sites), n_particles))
    n = len(sites)
    params = lattice_params(1.0, n, 0, m)
    lam = tuple(int(s - params.origin - 1 * (i + 1)) for i, s in enumerate(sites))
    return Configuration(params, lam)


def dual_log_weight(x: int, weight, m_max: int) -> float:
    """Log weight of the theta=1 hole ensemble at site x.

    Equals -log w(x) - 2*sum_{k != x} ln|x - k| over k in {0..M}; the
    lattice product collapses to x! (M-x)! through log-gamma.
    """
    if x < 0 or x > m_max:
        raise ValueError("site outside {0..%d}" % m_max)
    lw = float(weight.log_w(float(x)))
    return -lw - 2.0 * (math.lgamma(x + 1.0) + math.lgamma(m_max - x + 1.0))
