"""One-body weight families and their psi-ratio factorizations.

Every family exposes the same surface:

* ``log_w(x)``        -- ln w(x; N), -inf outside the support,
* ``psi_ratio(x)``    -- a pair (psi_plus, psi_minus) with
                         w(x)/w(x-1) = psi_plus(x)/psi_minus(x),
* ``psi_pair(xi)``    -- the same two functions evaluated at a complex
                         argument (used by the loop-equation checks),
* ``support_box()``   -- an interval holding all but exponentially rare
                         mass.

psi_minus may legally vanish at the support boundary: that encodes a
vanishing weight and is reported, not raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .ensemble import NEG_INF

__all__ = [
    "Krawtchouk",
    "ConvexPotential",
    "PoissonizedJack",
    "Tabulated",
    "weight_from_config",
    "weight_to_config",
]


def _as_array(x):
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Krawtchouk:
    """Binomial weight w(x) = C(M, x) on {0, ..., M}; theta must be 1."""

    m_total: int

    def __post_init__(self):
        if self.m_total < 1:
            raise ValueError("M must be >= 1")

    def log_w(self, x):
        m = float(self.m_total)
        if np.ndim(x) == 0:  # scalar fast path for the chain inner loop
            x = float(x)
            if x < -1e-9 or x > m + 1e-9 or abs(x - round(x)) > 1e-9:
                return NEG_INF
            x = round(x)
            return math.lgamma(m + 1.0) - math.lgamma(x + 1.0) - math.lgamma(m - x + 1.0)
        x = _as_array(x)
        on = (x >= -1e-9) & (x <= m + 1e-9) & (np.abs(x - np.rint(x)) < 1e-9)
        xr = np.where(on, np.rint(x), 0.0)
        val = gammaln(m + 1.0) - gammaln(xr + 1.0) - gammaln(m - xr + 1.0)
        return np.where(on, val, NEG_INF)

    def psi_pair(self, xi):
        # C(M,x)/C(M,x-1) = (M - x + 1)/x
        return self.m_total - xi + 1.0, xi

    def psi_ratio(self, x: float) -> tuple[float, float]:
        p, m = self.psi_pair(float(x))
        return float(p), float(m)

    @property
    def psi_poly_degrees(self) -> tuple[int, int]:
        return 1, 1

    def support_box(self) -> tuple[float, float]:
        return 0.0, float(self.m_total)


@dataclass(frozen=True)
class ConvexPotential:
    """w(x; N) = exp(-kappa * N * V(x/N)) for a convex analytic V.

    Analyticity and convexity of the callable are the caller's
    responsibility (they cannot be verified here).  ``box`` is the hard
    truncation interval in particle coordinates, standing in for the
    exponential tail bound of the untruncated measure.
    """

    kappa: float
    potential: Callable[[float], float]
    n_particles: int
    box: tuple[float, float]

    def log_w(self, x):
        n = float(self.n_particles)
        lo, hi = self.box
        if np.ndim(x) == 0:
            x = float(x)
            if x < lo - 1e-9 or x > hi + 1e-9:
                return NEG_INF
            return -self.kappa * n * float(self.potential(x / n))
        x = _as_array(x)
        on = (x >= lo - 1e-9) & (x <= hi + 1e-9)
        val = -self.kappa * n * np.array([float(self.potential(v / n)) for v in x])
        return np.where(on, val, NEG_INF)

    def psi_pair(self, xi):
        n = float(self.n_particles)
        return np.exp(self.kappa * n * (self.potential((xi - 1.0) / n) - self.potential(xi / n))), 1.0

    def psi_ratio(self, x: float) -> tuple[float, float]:
        p, m = self.psi_pair(float(x))
        return float(p), float(m)

    @property
    def psi_poly_degrees(self):
        return None

    def support_box(self) -> tuple[float, float]:
        return self.box


@dataclass(frozen=True)
class PoissonizedJack:
    """w(x) = (theta*M)^x / (Gamma(x+1) Gamma(x+theta)) on x >= 0.

    The Poissonized row-length ensemble at rate M, viewed with a fixed
    particle count N ~ c*sqrt(M).  The constant c must dominate the
    large-deviation scale 2e*max(sqrt(theta), 1/sqrt(theta)) so that the
    fixed-N truncation is exponentially faithful.
    """

    rate: float
    theta: float
    c: float

    def __post_init__(self):
        if self.rate <= 0 or self.theta <= 0:
            raise ValueError("rate and theta must be positive")
        bound = 2.0 * math.e * max(math.sqrt(self.theta), 1.0 / math.sqrt(self.theta))
        if self.c < bound - 1e-12:
            raise ValueError("c = %g below the admissible bound %g" % (self.c, bound))

    def log_w(self, x):
        if np.ndim(x) == 0:
            x = float(x)
            if x < -1e-9:
                return NEG_INF
            x = max(x, 0.0)
            return (
                x * math.log(self.theta * self.rate)
                - math.lgamma(x + 1.0)
                - math.lgamma(x + self.theta)
            )
        x = _as_array(x)
        on = x >= -1e-9
        xs = np.where(on, np.maximum(x, 0.0), 0.0)
        val = xs * math.log(self.theta * self.rate) - gammaln(xs + 1.0) - gammaln(xs + self.theta)
        return np.where(on, val, NEG_INF)

    def psi_pair(self, xi):
        # w(x)/w(x-1) = theta*M / (x (x + theta - 1))
        return self.theta * self.rate, xi * (xi + self.theta - 1.0)

    def psi_ratio(self, x: float) -> tuple[float, float]:
        p, m = self.psi_pair(float(x))
        return float(p), float(m)

    @property
    def psi_poly_degrees(self) -> tuple[int, int]:
        return 0, 2

    def support_box(self) -> tuple[float, float]:
        cap = math.ceil(self.c * math.sqrt(self.rate)) * (1.0 + self.theta)
        return 0.0, float(cap)


@dataclass(frozen=True)
class Tabulated:
    """Explicit log-weights on a contiguous integer range."""

    lo: int
    log_values: tuple[float, ...]

    def log_w(self, x):
        if np.ndim(x) == 0:
            x = float(x)
            if abs(x - round(x)) > 1e-9:
                return NEG_INF
            idx = round(x) - self.lo
            if idx < 0 or idx >= len(self.log_values):
                return NEG_INF
            return self.log_values[idx]
        x = _as_array(x)
        idx = np.rint(x - self.lo).astype(int)
        on = (
            (np.abs(x - np.rint(x)) < 1e-9)
            & (idx >= 0)
            & (idx < len(self.log_values))
        )
        vals = np.asarray(self.log_values, dtype=float)
        return np.where(on, vals[np.clip(idx, 0, len(self.log_values) - 1)], NEG_INF)

    def psi_ratio(self, x: float) -> tuple[float, float]:
        cur = self.log_w(float(x))
        prev = self.log_w(float(x) - 1.0)
        if prev == NEG_INF and cur == NEG_INF:
            return 0.0, 0.0
        if prev == NEG_INF:
            return 1.0, 0.0  # boundary: w vanishes below
        if cur == NEG_INF:
            return 0.0, 1.0
        return math.exp(cur - prev), 1.0

    def psi_pair(self, xi):
        raise ValueError("tabulated weights carry no analytic psi functions")

    @property
    def psi_poly_degrees(self):
        return None

    def support_box(self) -> tuple[float, float]:
        return float(self.lo), float(self.lo + len(self.log_values) - 1)

    @staticmethod
    def from_csv(path) -> "Tabulated":
        xs, vals = [], []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("x"):
                    continue
                a, b = line.split(",")
                xs.append(int(float(a)))
                vals.append(float(b))
        if xs != list(range(xs[0], xs[0] + len(xs))):
            raise ValueError("tabulated support must be a contiguous integer range")
        return Tabulated(xs[0], tuple(vals))


_NAMED_POTENTIALS = {
    "quadratic": lambda u: u * u,
    "quartic": lambda u: u ** 4,
}


def weight_from_config(cfg: dict):
    """Build a weight from its JSON declaration."""
    kind = cfg.get("kind")
    if kind == "krawtchouk":
        return Krawtchouk(int(cfg["M"]))
    if kind == "poissonized_jack":
        return PoissonizedJack(float(cfg["M"]), float(cfg["theta"]), float(cfg["c"]))
    if kind == "convex":
        name = cfg.get("potential", "quadratic")
        if name not in _NAMED_POTENTIALS:
            raise ValueError("unknown named potential %r" % name)
        return ConvexPotential(
            float(cfg["kappa"]),
            _NAMED_POTENTIALS[name],
            int(cfg["n_particles"]),
            (float(cfg["box"][0]), float(cfg["box"][1])),
        )
    if kind == "tabulated":
        if "path" in cfg:
            return Tabulated.from_csv(cfg["path"])
        return Tabulated(int(cfg["lo"]), tuple(float(v) for v in cfg["log_values"]))
    raise ValueError("unknown weight kind %r" % kind)


def weight_to_config(weight) -> dict:
    """Inverse of weight_from_config for the declarable families."""
    if isinstance(weight, Krawtchouk):
        return {"kind": "krawtchouk", "M": weight.m_total}
    if isinstance(weight, PoissonizedJack):
        return {"kind": "poissonized_jack", "M": weight.rate, "theta": weight.theta, "c": weight.c}
    if isinstance(weight, ConvexPotential):
        name = next(
            (k for k, v in _NAMED_POTENTIALS.items() if v is weight.potential), "custom"
        )
        return {
            "kind": "convex",
            "kappa": weight.kappa,
            "potential": name,
            "n_particles": weight.n_particles,
            "box": list(weight.box),
        }
    if isinstance(weight, Tabulated):
        return {"kind": "tabulated", "lo": weight.lo, "log_values": list(weight.log_values)}
    raise ValueError("weight %r has no JSON form" % type(weight).__name__)
