"""Constrained equilibrium measures for the log-gas with box constraint.

The minimizer of

    E[rho] = -theta int int ln|x-y| rho(x) rho(y) dx dy + int V rho

over densities with 0 <= rho <= 1/theta and unit mass splits the support
into voids (rho = 0), bands (0 < rho < 1/theta) and saturated regions
(rho = 1/theta).  The effective potential

    F_V(x) = V(x) - 2 theta int ln|x-y| rho(y) dy - f_V

is >= 0 on voids, <= 0 on saturated regions and = 0 on bands; the KKT
residual reported by the solver measures the worst violation of these
sign conditions.

The module also carries the closed-form binomial-ensemble and
Poissonized-row-ensemble densities used as oracles, Stieltjes transforms
with principal-value evaluation on the support, the particle/hole dual
of a measure, and the finite-interval Hilbert transform identities.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

__all__ = [
    "EquilibriumMeasure",
    "ClassicalLocations",
    "solve_constrained",
    "krawtchouk_density",
    "krawtchouk_measure",
    "krawtchouk_potential",
    "krawtchouk_edges",
    "jack_equilibrium",
    "jack_measure",
    "jack_potential",
    "classical_locations",
    "stieltjes_measure",
    "dual_measure",
    "rq_functions",
    "edge_coefficient",
    "hilbert_inv_sqrt_kernel",
    "hilbert_sqrt_kernel",
    "inverse_hilbert",
    "measure_from_density",
]

VOID, BAND, SATURATED = "void", "band", "saturated"


@dataclass
class EquilibriumMeasure:
    """Gridded density with region labels and band edges.

    ``mass`` records the total integral: 1 for solver output, and the
    complement mass (b-a)/theta - 1 for the particle/hole dual of a unit
    measure.
    """

    grid: np.ndarray          # midpoints of a uniform partition
    density: np.ndarray
    theta: float
    f_V: float
    regions: list             # (kind, lo, hi) triples covering the support
    edges: tuple              # (A, B): outermost band endpoints
    support: tuple            # (a_hat, b_hat)
    effective_potential: np.ndarray | None = None
    mass: float = 1.0

    @property
    def cell_width(self) -> float:
        return float(self.grid[1] - self.grid[0]) if self.grid.size > 1 else (
            self.support[1] - self.support[0]
        )

    def total_mass(self) -> float:
        return float(np.sum(self.density) * self.cell_width)

    def validate(self, tol: float = 1e-6) -> None:
        cap = 1.0 / self.theta
        if np.min(self.density) < -tol or np.max(self.density) > cap + tol:
            raise ValueError("density leaves the box [0, 1/theta]")
        if abs(self.total_mass() - self.mass) > 1e-6:
            raise ValueError("stored mass %r inconsistent with grid sum" % self.mass)

    def cdf_nodes(self):
        """Cumulative mass at cell right edges, prefixed with (a_hat, 0)."""
        h = self.cell_width
        x = np.concatenate(([self.support[0]], self.grid + 0.5 * h))
        c = np.concatenate(([0.0], np.cumsum(self.density) * h))
        return x, c

    def density_at(self, x) -> np.ndarray:
        """Linear interpolation of the gridded density (0 outside)."""
        return np.interp(np.asarray(x, dtype=float), self.grid, self.density, left=0.0, right=0.0)

    def to_csv(self, path) -> None:
        fv = self.effective_potential
        with open(path, "w") as fh:
            fh.write("x,rho,FV\n")
            for k in range(self.grid.size):
                v = float(fv[k]) if fv is not None else float("nan")
                fh.write("%r,%r,%r\n" % (float(self.grid[k]), float(self.density[k]), v))

    def sidecar(self) -> dict:
        return {
            "A": self.edges[0],
            "B": self.edges[1],
            "f_V": self.f_V,
            "theta": self.theta,
            "mass": self.mass,
            "support": list(self.support),
            "regions": [
                {"kind": kind, "lo": lo, "hi": hi} for kind, lo, hi in self.regions
            ],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass(frozen=True)
class ClassicalLocations:
    """Quantiles gamma_i with integral_a^{gamma_i} rho = (i - 1/2)/N."""

    gammas: np.ndarray

    def __post_init__(self):
        g = self.gammas
        if np.any(np.diff(g) < -1e-12):
            raise ValueError("classical locations must be nondecreasing")


# ---------------------------------------------------------------------------
# solver


def _log_kernel(grid: np.ndarray, h: float) -> np.ndarray:
    """ln|x_k - x_l| with the exact same-cell average on the diagonal.

    The cell average of ln|x-y| over a h x h square is ln h - 3/2, which
    sidesteps the singularity without any ad hoc regularizer.
    """
    d = np.abs(grid[:, None] - grid[None, :])
    np.fill_diagonal(d, 1.0)
    k = np.log(d)
    np.fill_diagonal(k, math.log(h) - 1.5)
    return k


def _project_capped_simplex(v: np.ndarray, cap: float, h: float) -> np.ndarray:
    """Euclidean projection onto {0 <= rho <= cap, h * sum(rho) = 1}.

    The projection is clip(v - s) with the shift s found by bisection on
    the (monotone) mass of the clipped vector.
    """
    lo = float(np.min(v)) - cap - 1.0
    hi = float(np.max(v))
    target = 1.0 / h
    for _ in range(200):
        s = 0.5 * (lo + hi)
        mass = float(np.sum(np.clip(v - s, 0.0, cap)))
        if mass > target:
            lo = s
        else:
            hi = s
        if hi - lo < 1e-15 * max(1.0, abs(hi)):
            break
    return np.clip(v - 0.5 * (lo + hi), 0.0, cap)


def _classify(density: np.ndarray, theta: float, min_cells: int = 3):
    """Label cells void/band/saturated and merge runs shorter than min_cells."""
    cap = 1.0 / theta
    kinds = np.full(density.size, 1, dtype=int)  # 0 void, 1 band, 2 saturated
    kinds[density < 1e-3 * cap] = 0
    kinds[density > (1.0 - 1e-3) * cap] = 2
    runs = []
    start = 0
    for k in range(1, kinds.size + 1):
        if k == kinds.size or kinds[k] != kinds[start]:
            runs.append([int(kinds[start]), start, k])
            start = k
    # merge short runs into the longer neighbor
    changed = True
    while changed and len(runs) > 1:
        changed = False
        for idx, (kind, s, e) in enumerate(runs):
            if e - s < min_cells:
                left = runs[idx - 1] if idx > 0 else None
                right = runs[idx + 1] if idx + 1 < len(runs) else None
                host = left if (right is None or (left is not None and (left[2] - left[1]) >= (right[2] - right[1]))) else right
                host[1] = min(host[1], s)
                host[2] = max(host[2], e)
                runs.pop(idx)
                # re-merge neighbors that now share a kind
                j = 0
                while j + 1 < len(runs):
                    if runs[j][0] == runs[j + 1][0]:
                        runs[j][2] = runs[j + 1][2]
                        runs.pop(j + 1)
                    else:
                        j += 1
                changed = True
                break
    return runs


def _regions_from_runs(runs, grid, h, support):
    names = {0: VOID, 1: BAND, 2: SATURATED}
    out = []
    for kind, s, e in runs:
        lo = support[0] if s == 0 else grid[s] - 0.5 * h
        hi = support[1] if e == grid.size else grid[e - 1] + 0.5 * h
        out.append((names[kind], float(lo), float(hi)))
    return out


def _refine_edge(grid, density, theta, edge_idx, going_right, vanishing, h):
    """Refine a band endpoint by a local fit of rho^2 (or (1/theta-rho)^2).

    Near a square-root endpoint rho^2 is linear in x; the fit intercept
    locates the edge to sub-cell accuracy.
    """
    w = 8
    if going_right:
        sl = slice(edge_idx, min(edge_idx + w, grid.size))
    else:
        sl = slice(max(edge_idx - w + 1, 0), edge_idx + 1)
    x = grid[sl]
    y = density[sl] if vanishing else 1.0 / theta - density[sl]
    y = np.maximum(y, 0.0) ** 2
    if x.size < 3 or np.ptp(y) == 0.0:
        return float(grid[edge_idx] + (-0.5 if going_right else 0.5) * h)
    a, b = np.polyfit(x, y, 1)
    if a == 0.0:
        return float(grid[edge_idx])
    root = -b / a
    guess = grid[edge_idx] + (-0.5 if going_right else 0.5) * h
    if abs(root - guess) > 3 * w * h:
        return float(guess)
    return float(root)


def _band_edges(runs, grid, density, theta, h, support):
    """Outermost band endpoints, refined by the local square fit."""
    bands = [(s, e) for kind, s, e in runs if kind == 1]
    if not bands:
        return (support[0], support[1])
    s0, _ = bands[0]
    _, e1 = bands[-1]
    if s0 == 0:
        a_edge = support[0]
    else:
        prev_kind = next(kind for kind, s, e in runs if e == s0)
        a_edge = _refine_edge(grid, density, theta, s0, True, prev_kind == 0, h)
    if e1 == grid.size:
        b_edge = support[1]
    else:
        next_kind = next(kind for kind, s, e in runs if s == e1)
        b_edge = _refine_edge(grid, density, theta, e1 - 1, False, next_kind == 0, h)
    return (float(a_edge), float(b_edge))


def solve_constrained(
    V,
    theta: float,
    support: tuple,
    grid_n: int = 1000,
    tol: float = 1e-5,
    max_iter: int = 200_000,
    accel: str = "bb",
    check_every: int = 25,
) -> EquilibriumMeasure:
    """Minimize the constrained energy by projected gradient descent.

    The base iteration uses the fixed step 1/L with L estimated from the
    kernel norm; ``accel="bb"`` (default) tries a Barzilai-Borwein step
    first and falls back to the fixed step whenever it would increase the
    energy, so iterates never go uphill either way.  Stops when the KKT
    residual (worst violation of the effective-potential sign conditions)
    drops below ``tol``.
    """
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    lo, hi = float(support[0]), float(support[1])
    cap = 1.0 / theta
    if cap * (hi - lo) < 1.0 + 1e-12:
        raise ValueError("box cannot hold unit mass under the 1/theta cap")
    h = (hi - lo) / grid_n
    grid = lo + (np.arange(grid_n) + 0.5) * h
    vvals = np.array([float(V(x)) for x in grid])
    kern = _log_kernel(grid, h)

    # Lipschitz bound through a few power iterations on the kernel
    z = np.ones(grid_n) / math.sqrt(grid_n)
    for _ in range(20):
        z = kern @ z
        z /= np.linalg.norm(z)
    lip = 2.0 * theta * h * h * abs(float(z @ (kern @ z))) + 1e-12
    step_fixed = 1.0 / lip

    def energy(r):
        return float(-theta * h * h * (r @ (kern @ r)) + h * (vvals @ r))

    def gradient(r):
        return h * (vvals - 2.0 * theta * h * (kern @ r))

    rho = np.full(grid_n, 1.0 / (hi - lo))
    g = gradient(rho)
    e_cur = energy(rho)
    rho_prev = None
    g_prev = None
    residual = math.inf
    iterations = 0

    for it in range(max_iter):
        iterations = it + 1
        step = step_fixed
        if accel == "bb" and rho_prev is not None:
            dr = rho - rho_prev
            dg = g - g_prev
            denom = float(dr @ dg)
            if denom > 0:
                step = float(dr @ dr) / denom
        cand = _project_capped_simplex(rho - step * g, cap, h)
        e_new = energy(cand)
        if e_new > e_cur + 1e-15 * max(1.0, abs(e_cur)):
            cand = _project_capped_simplex(rho - step_fixed * g, cap, h)
            e_new = energy(cand)
            if e_new > e_cur + 1e-12 * max(1.0, abs(e_cur)):
                cand = rho  # numerically converged; keep the iterate
                e_new = e_cur
        rho_prev, g_prev = rho, g
        rho, e_cur = cand, e_new
        g = gradient(rho)
        if (it + 1) % check_every == 0 or it + 1 == max_iter:
            residual, f_v, f_eff = _kkt_residual(rho, g, h, theta)
            if residual <= tol:
                break
    else:
        pass

    residual, f_v, f_eff = _kkt_residual(rho, g, h, theta)
    if residual > tol:
        raise RuntimeError(
            "no convergence after %d iterations: KKT residual %.3e > %.1e"
            % (iterations, residual, tol)
        )
    runs = _classify(rho, theta)
    regions = _regions_from_runs(runs, grid, h, (lo, hi))
    edges = _band_edges(runs, grid, rho, theta, h, (lo, hi))
    measure = EquilibriumMeasure(
        grid=grid,
        density=rho,
        theta=theta,
        f_V=f_v,
        regions=regions,
        edges=edges,
        support=(lo, hi),
        effective_potential=f_eff,
    )
    measure.validate()
    return measure


def _kkt_residual(rho, g, h, theta):
    """Worst violation of the effective-potential sign conditions."""
    cap = 1.0 / theta
    f_tilde = g / h  # V - 2 theta int ln|x-y| rho, up to the constant f_V
    band = (rho > 1e-3 * cap) & (rho < (1.0 - 1e-3) * cap)
    if np.any(band):
        f_v = float(np.mean(f_tilde[band]))
    else:
        f_v = float(np.median(f_tilde))
    f_eff = f_tilde - f_v
    void = rho <= 1e-3 * cap
    sat = rho >= (1.0 - 1e-3) * cap
    res = 0.0
    if np.any(void):
        res = max(res, float(np.max(np.maximum(-f_eff[void], 0.0))))
    if np.any(sat):
        res = max(res, float(np.max(np.maximum(f_eff[sat], 0.0))))
    if np.any(band):
        res = max(res, float(np.max(np.abs(f_eff[band]))))
    return res, f_v, f_eff


# ---------------------------------------------------------------------------
# closed forms


def _arccot(y):
    """Continuous branch with range (0, pi), matching the density formulas."""
    return 0.5 * math.pi - np.arctan(y)


def krawtchouk_density(m: float, x) -> np.ndarray:
    """Closed-form equilibrium density of the binomial ensemble, theta = 1.

    Two-branch formula: bands carry the arccot profile; for 1 < m < 2 the
    region between the band and the support endpoints is saturated at 1.
    """
    if m <= 1:
        raise ValueError("m must exceed 1")
    x = np.asarray(x, dtype=float)
    half = m / 2.0
    r2 = m - 1.0 - (x - half) ** 2
    band = r2 > 0.0
    out = np.zeros_like(x)
    y = np.where(band, (m - 2.0) / (2.0 * np.sqrt(np.where(band, r2, 1.0))), 0.0)
    out = np.where(band, _arccot(y) / math.pi, 0.0)
    if m < 2.0:
        saturated = (~band) & (np.abs(x - half) <= half)
        out = np.where(saturated, 1.0, out)
    return out if out.ndim else float(out)


def krawtchouk_edges(m: float) -> tuple:
    s = math.sqrt(m - 1.0)
    return (m / 2.0 - s, m / 2.0 + s)


def krawtchouk_potential(m: float):
    """Continuum potential of the binomial weight, u ln u + (m-u) ln(m-u) - m ln m."""

    def V(u: float) -> float:
        u = min(max(u, 0.0), m)
        t1 = u * math.log(u) if u > 0 else 0.0
        t2 = (m - u) * math.log(m - u) if u < m else 0.0
        return t1 + t2 - m * math.log(m)

    return V


def krawtchouk_measure(m: float, grid_n: int = 2000) -> EquilibriumMeasure:
    """Closed-form density sampled on a uniform grid over [0, m]."""
    h = m / grid_n
    grid = (np.arange(grid_n) + 0.5) * h
    rho = krawtchouk_density(m, grid)
    a, b = krawtchouk_edges(m)
    if m >= 2.0:
        regions = [(VOID, 0.0, a), (BAND, a, b), (VOID, b, m)]
    else:
        regions = [(SATURATED, 0.0, a), (BAND, a, b), (SATURATED, b, m)]
    return EquilibriumMeasure(
        grid=grid,
        density=rho,
        theta=1.0,
        f_V=0.0,
        regions=regions,
        edges=(a, b),
        support=(0.0, m),
        mass=float(np.sum(rho) * h),
    )


def jack_equilibrium(theta: float, c: float):
    """Closed-form (A, B, density, Stieltjes transform) of the row ensemble.

    A = theta - 2 sqrt(theta)/c must be positive, i.e. theta >= (2/c)^2;
    the density is saturated at 1/theta on [0, A] and follows an arctan
    profile on the band [A, B].
    """
    if theta < (2.0 / c) ** 2:
        raise ValueError("need theta >= (2/c)^2 for a positive lower edge")
    root = 2.0 * math.sqrt(theta) / c
    a_edge, b_edge = theta - root, theta + root

    def density(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        sat = (x >= 0) & (x <= a_edge)
        band = (x > a_edge) & (x < b_edge)
        out = np.where(sat, 1.0 / theta, out)
        ratio = np.where(band, (b_edge - x) / np.where(band, x - a_edge, 1.0), 0.0)
        out = np.where(band, 2.0 / (math.pi * theta) * np.arctan(np.sqrt(np.abs(ratio))), out)
        return out if out.ndim else float(out)

    def stieltjes(z):
        z = np.asarray(z, dtype=complex)
        root_zab = np.sqrt(z - a_edge) * np.sqrt(z - b_edge)  # ~ z at infinity
        val = (z * z - theta * z) - z * root_zab
        return np.log(val / (2.0 * theta / c**2)) / theta

    return a_edge, b_edge, density, stieltjes


def jack_potential(theta: float, c: float):
    """Continuum potential 2x ln x - 2x - x ln(theta/c^2) of the row weight."""

    def V(x: float) -> float:
        if x <= 0:
            return 0.0
        return 2.0 * x * math.log(x) - 2.0 * x - x * math.log(theta / c**2)

    return V


def jack_measure(theta: float, c: float, grid_n: int = 2000, hi: float | None = None) -> EquilibriumMeasure:
    a_edge, b_edge, density, _ = jack_equilibrium(theta, c)
    hi = 1.5 * b_edge if hi is None else hi
    h = hi / grid_n
    grid = (np.arange(grid_n) + 0.5) * h
    rho = density(grid)
    return EquilibriumMeasure(
        grid=grid,
        density=rho,
        theta=theta,
        f_V=0.0,
        regions=[(SATURATED, 0.0, a_edge), (BAND, a_edge, b_edge), (VOID, b_edge, hi)],
        edges=(a_edge, b_edge),
        support=(0.0, hi),
        mass=float(np.sum(rho) * h),
    )


# ---------------------------------------------------------------------------
# transforms and derived quantities


def classical_locations(measure: EquilibriumMeasure, n: int) -> ClassicalLocations:
    """Quantiles of the measure at levels (i - 1/2)/N, by CDF inversion."""
    x, cdf = measure.cdf_nodes()
    total = cdf[-1]
    levels = (np.arange(1, n + 1) - 0.5) / n * total
    # strictly increasing nodes for interpolation: drop flat CDF stretches
    keep = np.concatenate(([True], np.diff(cdf) > 1e-15 * total))
    gammas = np.interp(levels, cdf[keep], x[keep])
    return ClassicalLocations(np.asarray(gammas, dtype=float))


def stieltjes_measure(measure: EquilibriumMeasure, z) -> complex:
    """G_mu(z) by midpoint quadrature; principal value for z on the support."""
    h = measure.cell_width
    zc = complex(z)
    if zc.imag == 0.0 and measure.support[0] < zc.real < measure.support[1]:
        e = zc.real
        rho_e = float(measure.density_at(e))
        vals = (measure.density - rho_e) / (e - measure.grid)
        near = np.abs(e - measure.grid) < 0.5 * h
        vals[near] = 0.0  # the subtracted integrand vanishes at e
        pv = float(np.sum(vals) * h)
        a, b = measure.support
        pv += rho_e * math.log((e - a) / (b - e))
        return complex(pv)
    return complex(np.sum(measure.density / (zc - measure.grid)) * h)


def dual_measure(measure: EquilibriumMeasure) -> EquilibriumMeasure:
    """Complement density 1/theta - rho on the support (unnormalized).

    The dual mass is (b-a)/theta - 1; dividing the density by it gives
    the unit-mass dual used when the hole count differs from N.  Region
    kinds swap void <-> saturated; band edges are unchanged.
    """
    cap = 1.0 / measure.theta
    rho_dual = np.clip(cap - measure.density, 0.0, cap)
    swap = {VOID: SATURATED, SATURATED: VOID, BAND: BAND}
    regions = [(swap[kind], lo, hi) for kind, lo, hi in measure.regions]
    return EquilibriumMeasure(
        grid=measure.grid.copy(),
        density=rho_dual,
        theta=measure.theta,
        f_V=-measure.f_V,
        regions=regions,
        edges=measure.edges,
        support=measure.support,
        mass=float(np.sum(rho_dual) * measure.cell_width),
    )


def rq_functions(stieltjes, phi_plus, phi_minus, theta: float):
    """R and Q built from a Stieltjes transform and the macroscopic phi's.

    R(z) = phi_-(z) e^{-theta G(z)} + phi_+(z) e^{theta G(z)} extends
    analytically through the band; Q(z) = phi_- e^{-theta G} - phi_+
    e^{theta G} carries the square-root branch cut across it.
    """

    def r_of(z):
        g = stieltjes(z)
        return phi_minus(z) * np.exp(-theta * g) + phi_plus(z) * np.exp(theta * g)

    def q_of(z):
        g = stieltjes(z)
        return phi_minus(z) * np.exp(-theta * g) - phi_plus(z) * np.exp(theta * g)

    return r_of, q_of


def edge_coefficient(
    measure: EquilibriumMeasure,
    edge: str = "A",
    window_frac: float = 0.02,
    min_cells: int = 6,
) -> float:
    """Square-root coefficient s with rho(x) ~ s sqrt(|x - edge|)/pi.

    Least squares of rho(x)*pi against sqrt(u) and u^{3/2} over a short
    window inside the band (the linear term absorbs the first correction
    of the profile).  Only edges adjacent to a void are admissible.
    """
    a_edge, b_edge = measure.edges
    at_a = edge in ("A", "left")
    x0 = a_edge if at_a else b_edge
    # the edge must touch a void region
    adjacent_kind = None
    for kind, lo, hi in measure.regions:
        if at_a and abs(hi - x0) < 2 * measure.cell_width:
            adjacent_kind = kind
        if not at_a and abs(lo - x0) < 2 * measure.cell_width:
            adjacent_kind = kind
    if adjacent_kind == SATURATED:
        raise ValueError("edge %s adjoins a saturated region; no square-root profile" % edge)
    band_len = b_edge - a_edge
    width = max(window_frac * band_len, (min_cells + 0.5) * measure.cell_width)
    if at_a:
        sel = (measure.grid > x0) & (measure.grid <= x0 + width)
        u = measure.grid[sel] - x0
    else:
        sel = (measure.grid < x0) & (measure.grid >= x0 - width)
        u = x0 - measure.grid[sel]
    y = measure.density[sel] * math.pi
    if u.size < 3:
        raise ValueError("fitting window holds fewer than 3 grid cells")
    basis = np.stack([np.sqrt(u), u ** 1.5], axis=1)
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    return float(coef[0])


# ---------------------------------------------------------------------------
# finite-interval Hilbert transform


def _sqrt_branch(x: float, a: float, b: float) -> float:
    """sqrt((x-a)(x-b)) on the real line with the x ~ infinity branch."""
    p = (x - a) * (x - b)
    if p < 0:
        raise ValueError("x inside (a, b): branch undefined on the cut")
    s = math.sqrt(p)
    return s if x > b else -s


def hilbert_inv_sqrt_kernel(a: float, b: float, x: float) -> float:
    """P.V. integral of 1/sqrt((y-a)(b-y)) / (x-y): 0 inside, pi/sqrt outside."""
    if a <= x <= b:
        return 0.0
    return math.pi / _sqrt_branch(x, a, b)


def hilbert_sqrt_kernel(a: float, b: float, x: float) -> float:
    """P.V. integral of sqrt((y-a)(b-y)) / (x-y)."""
    base = math.pi * (x - 0.5 * (a + b))
    if a <= x <= b:
        return base
    return base - math.pi * _sqrt_branch(x, a, b)


def inverse_hilbert(g, a: float, b: float, total_mass: float, x: float) -> float:
    """Recover f on (a, b) from its finite-interval Hilbert transform g.

    f(x) = PV int sqrt((y-a)(b-y)) g(y)/(y-x) dy / (pi^2 sqrt((x-a)(b-x)))
           + total_mass / (pi sqrt((x-a)(b-x))),

    with the principal value computed by Cauchy-weighted quadrature.
    """
    if not (a < x < b):
        raise ValueError("x must lie strictly inside (a, b)")

    def phi(y):
        return math.sqrt(max((y - a) * (b - y), 0.0)) * g(y)

    pv, err = quad(phi, a, b, weight="cauchy", wvar=x, limit=400)
    if not math.isfinite(pv) or err > 1e-6:
        raise RuntimeError("principal-value quadrature failed: err=%r" % err)
    root = math.sqrt((x - a) * (b - x))
    return pv / (math.pi**2 * root) + total_mass / (math.pi * root)


def measure_from_density(
    density, support: tuple, theta: float, grid_n: int = 2000,
    edges: tuple | None = None, regions=None,
) -> EquilibriumMeasure:
    """Wrap a density callable into a gridded EquilibriumMeasure."""
    lo, hi = support
    h = (hi - lo) / grid_n
    grid = lo + (np.arange(grid_n) + 0.5) * h
    rho = np.asarray(density(grid), dtype=float)
    runs = _classify(rho, theta)
    regs = regions if regions is not None else _regions_from_runs(runs, grid, h, support)
    edg = edges if edges is not None else _band_edges(runs, grid, rho, theta, h, support)
    return EquilibriumMeasure(
        grid=grid,
        density=rho,
        theta=theta,
        f_V=0.0,
        regions=regs,
        edges=edg,
        support=(float(lo), float(hi)),
        mass=float(np.sum(rho) * h),
    )
