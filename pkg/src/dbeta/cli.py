"""Reproducible experiment driver.

Usage:  dbeta <subcommand> --config cfg.json --out DIR [--seed U64] [--workers K]

Every run writes the full resolved configuration to DIR/manifest.json,
so re-running from a manifest reproduces each CSV byte for byte.  Exit
codes: 0 all checks pass, 1 a configured check failed (or a runtime
error), 2 usage or schema errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .ensemble import (
    EnsembleParams,
    exact_distribution,
    dual_log_weight,
    holes_of,
    lattice_params,
)
from .equilibrium import (
    classical_locations,
    edge_coefficient,
    jack_measure,
    jack_potential,
    jack_equilibrium,
    krawtchouk_measure,
    krawtchouk_potential,
    solve_constrained,
)
from .jack import sample_poissonized_jack
from .nekrasov import r_monte_carlo
from .render import render_artifact_dir, render_ecdf_overlay
from .sampler import ChainSpec, load_batch, run_chain, save_batch
from .stats import ecdf, gap_statistics, ks_distance, rescale_edge, rigidity_profile
from .weights import Tabulated, weight_from_config
from . import gbe as gbe_mod

SUBCOMMANDS = (
    "sample",
    "equilibrium",
    "nekrasov",
    "duality-check",
    "rigidity",
    "edge",
    "gaps",
    "gbe",
    "jack",
    "compare",
    "render",
)


class UsageError(Exception):
    pass


class CheckFailure(Exception):
    pass


def _get(cfg: dict, path: str, kind=None, default=KeyError):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if default is not KeyError:
                return default
            raise UsageError("config field %r is missing" % path)
        node = node[part]
    if kind is not None:
        try:
            return kind(node)
        except (TypeError, ValueError):
            raise UsageError("config field %r has invalid value %r" % (path, node))
    return node


def _measure_from_config(cfg: dict, grid_n: int = 2000):
    kind = _get(cfg, "kind", str)
    if kind == "krawtchouk":
        return krawtchouk_measure(_get(cfg, "m", float), grid_n=grid_n)
    if kind == "jack":
        return jack_measure(_get(cfg, "theta", float), _get(cfg, "c", float), grid_n=grid_n)
    if kind == "csv":
        return _load_measure_csv(_get(cfg, "path", str), cfg)
    raise UsageError("config field 'measure.kind' must be krawtchouk, jack, or csv")


def _load_measure_csv(path, cfg):
    from .equilibrium import EquilibriumMeasure, _classify, _regions_from_runs, _band_edges

    data = np.loadtxt(path, delimiter=",", skiprows=1)
    grid, rho = data[:, 0], data[:, 1]
    theta = float(cfg.get("theta", 1.0))
    h = grid[1] - grid[0]
    support = (float(grid[0] - 0.5 * h), float(grid[-1] + 0.5 * h))
    runs = _classify(rho, theta)
    regions = _regions_from_runs(runs, grid, h, support)
    edges = _band_edges(runs, grid, rho, theta, h, support)
    return EquilibriumMeasure(
        grid=grid, density=rho, theta=theta, f_V=0.0, regions=regions,
        edges=edges, support=support, mass=float(np.sum(rho) * h),
    )


def _write_ecdf_csv(path, values) -> None:
    v, f = ecdf(np.asarray(values, dtype=float))
    with open(path, "w") as fh:
        fh.write("value,ecdf\n")
        for a, b in zip(v, f):
            fh.write("%r,%r\n" % (float(a), float(b)))


def _read_values_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0]


def _chain_spec(cfg: dict, seed: int) -> ChainSpec:
    return ChainSpec(
        steps=_get(cfg, "steps", int),
        burn_in=_get(cfg, "burn_in", int, default=None),
        thin=_get(cfg, "thin", int, default=None),
        seed=seed,
        init=_get(cfg, "init", str, default="uniform-spread"),
    )


def _params_for_weight(weight, theta: float, n: int) -> EnsembleParams:
    lo, hi = weight.support_box()
    return lattice_params(theta, n, lo, hi)


# --------------------------------------------------------------------------
# subcommand handlers: cfg, out_dir, seed, workers -> (exit_code, summary)


def _run_sample(cfg, out, seed, workers):
    theta = _get(cfg, "theta", float)
    n = _get(cfg, "n_particles", int)
    weight = weight_from_config(_get(cfg, "weight", dict))
    spec = _chain_spec(_get(cfg, "chain", dict), seed)
    gammas = None
    if spec.init == "equilibrium-quantile":
        measure = _measure_from_config(_get(cfg, "measure", dict))
        gammas = classical_locations(measure, n).gammas
    params = _params_for_weight(weight, theta, n)
    batch = run_chain(params, weight, spec, gammas=gammas)
    save_batch(batch, out)
    return 0, {
        "n_samples": len(batch),
        "acceptance_rate": batch.acceptance_rate,
        "autocorr_time": batch.autocorr_time,
    }


def _run_equilibrium(cfg, out, seed, workers):
    pot = _get(cfg, "potential", dict)
    kind = _get(pot, "kind", str)
    grid_n = _get(cfg, "grid_n", int, default=2000)
    tol = _get(cfg, "tol", float, default=1e-5)
    if kind == "krawtchouk":
        m = _get(pot, "m", float)
        theta, support, V = 1.0, (0.0, m), krawtchouk_potential(m)
    elif kind == "jack":
        theta = _get(pot, "theta", float)
        c = _get(pot, "c", float)
        _, b_edge, _, _ = jack_equilibrium(theta, c)
        support, V = (0.0, 1.5 * b_edge), jack_potential(theta, c)
    elif kind == "convex_preset":
        from .weights import _NAMED_POTENTIALS

        name = _get(pot, "name", str)
        if name not in _NAMED_POTENTIALS:
            raise UsageError("config field 'potential.name' unknown preset %r" % name)
        kappa = _get(pot, "kappa", float)
        base = _NAMED_POTENTIALS[name]
        V = lambda u: kappa * base(u)
        theta = _get(cfg, "theta", float)
        support = tuple(_get(pot, "support", list))
    else:
        raise UsageError("config field 'potential.kind' must be krawtchouk, jack, or convex_preset")
    measure = solve_constrained(V, theta, support, grid_n=grid_n, tol=tol)
    measure.to_csv(os.path.join(out, "measure.csv"))
    measure.to_json(os.path.join(out, "measure.json"))
    return 0, {"edges": list(measure.edges), "f_V": measure.f_V,
               "regions": [r[0] for r in measure.regions]}


def _run_duality_check(cfg, out, seed, workers):
    n = _get(cfg, "N", int)
    m = _get(cfg, "M", int)
    tol = _get(cfg, "tol", float, default=1e-10)
    weight = weight_from_config(_get(cfg, "weight", dict, default={"kind": "krawtchouk", "M": m}))
    params = lattice_params(1.0, n, 0, m)
    table = exact_distribution(params, weight)

    pushed = {}
    for c_, p in zip(table.configs, table.probabilities):
        key = holes_of(c_, m).holes
        pushed[key] = pushed.get(key, 0.0) + float(p)

    n_dual = m - n + 1
    dual_weight = Tabulated(0, tuple(dual_log_weight(x, weight, m) for x in range(m + 1)))
    dual_table = exact_distribution(lattice_params(1.0, n_dual, 0, m), dual_weight)
    worst = 0.0
    for c_, p in zip(dual_table.configs, dual_table.probabilities):
        sites = tuple(int(v) for v in np.rint(c_.positions()))
        q = pushed.get(sites, 0.0)
        denom = max(float(p), 1e-300)
        worst = max(worst, abs(q - float(p)) / denom)
    summary = {"max_rel_error": worst, "tol": tol, "match": worst <= tol}
    if not summary["match"]:
        raise CheckFailure("duality pushforward mismatch: rel error %.3e" % worst)
    return 0, summary


def _run_nekrasov(cfg, out, seed, workers):
    batch = load_batch(_get(cfg, "batch", str))
    weight = weight_from_config(batch.weight_config)
    xi_cfg = _get(cfg, "xi", dict)
    re = np.linspace(
        _get(xi_cfg, "re_min", float), _get(xi_cfg, "re_max", float),
        _get(xi_cfg, "count", int),
    )
    xi = re + 1j * _get(xi_cfg, "imag", float, default=0.5)
    report = r_monte_carlo(
        batch, weight, xi,
        n_check=_get(cfg, "n_check", int, default=4),
    )
    report.to_json(os.path.join(out, "nekrasov.json"))
    summary = {
        "fit_residual": report.fit_residual,
        "residues_pass": report.all_residues_pass,
    }
    if not report.all_residues_pass:
        raise CheckFailure("a residue check exceeded 3 standard errors")
    return 0, summary


def _gammas_and_s(cfg, n, side):
    measure = _measure_from_config(_get(cfg, "measure", dict), grid_n=_get(cfg, "grid_n", int, default=4000))
    gammas = classical_locations(measure, n).gammas
    s_cfg = _get(cfg, "s", None, default="fit")
    if s_cfg == "fit":
        s = edge_coefficient(measure, "A" if side == "left" else "B")
    else:
        s = float(s_cfg)
    return gammas, s


def _run_rigidity(cfg, out, seed, workers):
    batch = load_batch(_get(cfg, "batch", str))
    n = batch.params.n_particles
    measure = _measure_from_config(_get(cfg, "measure", dict), grid_n=_get(cfg, "grid_n", int, default=4000))
    gammas = classical_locations(measure, n).gammas
    profile = rigidity_profile(batch, gammas)
    with open(os.path.join(out, "rigidity.csv"), "w") as fh:
        levels = sorted(profile.quantiles_per_index)
        fh.write("index," + ",".join("q%g" % (100 * q) for q in levels) + "\n")
        for row, idx in enumerate(profile.bulk_indices):
            vals = ",".join("%r" % float(profile.quantiles_per_index[q][row]) for q in levels)
            fh.write("%d,%s\n" % (idx, vals))
    threshold = _get(cfg, "threshold", float, default=10.0)
    quantile = _get(cfg, "quantile", float, default=0.99)
    frac = float(np.mean(profile.max_per_sample <= threshold))
    summary = {"threshold": threshold, "required_fraction": quantile, "fraction_within": frac}
    if frac < quantile:
        raise CheckFailure("only %.3f of samples within D <= %g" % (frac, threshold))
    return 0, summary


def _run_edge(cfg, out, seed, workers):
    batch = load_batch(_get(cfg, "batch", str))
    n = batch.params.n_particles
    side = _get(cfg, "side", str, default="left")
    gammas, s = _gammas_and_s(cfg, n, side)
    for k in _get(cfg, "k", list, default=[1]):
        st = rescale_edge(batch, gammas, s, int(k), side=side)
        _write_ecdf_csv(os.path.join(out, "edge_k%d.csv" % int(k)), st.values)
    return 0, {"s": s, "side": side}


def _run_gaps(cfg, out, seed, workers):
    batch = load_batch(_get(cfg, "batch", str))
    n = batch.params.n_particles
    k = _get(cfg, "k", int, default=1)
    level = _get(cfg, "L", None, default="N^0.25")
    if isinstance(level, str):
        if not level.startswith("N^"):
            raise UsageError("config field 'L' must be a number or 'N^<exponent>'")
        level = float(n) ** float(level[2:])
    gaps = gap_statistics(batch, k, float(level))
    _write_ecdf_csv(os.path.join(out, "gaps_k%d.csv" % k), gaps)
    small = float(np.mean(gaps < _get(cfg, "small_gap", float, default=0.01)))
    limit = _get(cfg, "small_gap_fraction", float, default=0.05)
    summary = {"L": float(level), "small_gap_fraction": small, "limit": limit}
    if small >= limit:
        raise CheckFailure("rescaled gaps below threshold too often: %.4f" % small)
    return 0, summary


def _gbe_chunk(args):
    n, beta, n_samples, seed, k_set, side, reference, lo, hi = args
    out = gbe_mod.gbe_edge_samples(
        n, beta, hi - lo, seed, k_set=k_set, side=side, reference=reference,
        start_index=lo,
    )
    return lo, out


def _run_gbe(cfg, out, seed, workers):
    n = _get(cfg, "N", int)
    beta = _get(cfg, "beta", float)
    n_samples = _get(cfg, "n_samples", int)
    k_set = tuple(int(k) for k in _get(cfg, "k", list, default=[1]))
    side = _get(cfg, "side", str, default="right")
    reference = _get(cfg, "reference", str, default="edge")
    if workers > 1 and n_samples >= 4 * workers:
        bounds = np.linspace(0, n_samples, workers + 1, dtype=int)
        jobs = [
            (n, beta, n_samples, seed, k_set, side, reference, int(lo), int(hi))
            for lo, hi in zip(bounds[:-1], bounds[1:])
        ]
        values = {k: np.empty(n_samples) for k in k_set}
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for lo, chunk in pool.map(_gbe_chunk, jobs):
                for k in k_set:
                    values[k][lo : lo + chunk[k].size] = chunk[k]
    else:
        values = gbe_mod.gbe_edge_samples(n, beta, n_samples, seed, k_set=k_set, side=side, reference=reference)
    for k in k_set:
        _write_ecdf_csv(os.path.join(out, "gbe_k%d.csv" % k), values[k])
    return 0, {"N": n, "beta": beta, "side": side, "reference": reference}


def _run_jack(cfg, out, seed, workers):
    rate = _get(cfg, "M", float)
    theta = _get(cfg, "theta", float)
    c = _get(cfg, "c", float)
    spec = _chain_spec(_get(cfg, "chain", dict), seed)
    k_set = tuple(int(k) for k in _get(cfg, "k", list, default=[1]))
    batch, partitions, stats = sample_poissonized_jack(rate, theta, c, spec, k_set=k_set)
    save_batch(batch, os.path.join(out, "batch"))
    with open(os.path.join(out, "partitions.json"), "w") as fh:
        json.dump([list(p) for p in partitions], fh)
        fh.write("\n")
    for k, vals in stats.items():
        _write_ecdf_csv(os.path.join(out, "rowstat_k%d.csv" % k), vals)
    return 0, {"N": batch.params.n_particles, "n_samples": len(batch)}


def _run_compare(cfg, out, seed, workers):
    path_a = _get(cfg, "a", str)
    path_b = _get(cfg, "b", str)
    values_a = _read_values_csv(path_a)
    values_b = _read_values_csv(path_b)
    result = ks_distance(values_a, values_b)
    payload = {"ks": result.distance, "n_a": result.n_a, "n_b": result.n_b}
    threshold = _get(cfg, "threshold", float, default=None)
    if threshold is not None:
        payload["threshold"] = threshold
        payload["pass"] = result.distance <= threshold
    with open(os.path.join(out, "ks.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    render_ecdf_overlay([path_a, path_b], os.path.join(out, "overlay.svg"), title="ecdf overlay")
    if threshold is not None and not payload["pass"]:
        raise CheckFailure("KS %.4f exceeds threshold %.4f" % (result.distance, threshold))
    return 0, payload


def _run_render(cfg, out, seed, workers):
    target = _get(cfg, "dir", str)
    made = render_artifact_dir(target)
    return 0, {"rendered": made}


_HANDLERS = {
    "sample": _run_sample,
    "equilibrium": _run_equilibrium,
    "nekrasov": _run_nekrasov,
    "duality-check": _run_duality_check,
    "rigidity": _run_rigidity,
    "edge": _run_edge,
    "gaps": _run_gaps,
    "gbe": _run_gbe,
    "jack": _run_jack,
    "compare": _run_compare,
    "render": _run_render,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dbeta", description=__doc__)
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", required=True, help="artifact directory")
    parser.add_argument("--seed", type=int, default=None, help="64-bit seed override")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--grid-n", type=int, default=None, help="equilibrium grid override")
    parser.add_argument("--tol", type=float, default=None, help="equilibrium KKT tolerance override")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print("dbeta: cannot read config: %s" % exc, file=sys.stderr)
        return 2
    if not isinstance(cfg, dict):
        print("dbeta: config must be a JSON object", file=sys.stderr)
        return 2

    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    workers = args.workers
    if workers is None:
        workers = int(cfg.get("workers", os.environ.get("DBETA_WORKERS", 1)))
    if args.grid_n is not None:
        cfg["grid_n"] = args.grid_n
    if args.tol is not None:
        cfg["tol"] = args.tol

    os.makedirs(args.out, exist_ok=True)
    code = 0
    summary: dict = {}
    try:
        code, summary = _HANDLERS[args.subcommand](cfg, args.out, seed, workers)
    except UsageError as exc:
        print("dbeta %s: %s" % (args.subcommand, exc), file=sys.stderr)
        return 2
    except CheckFailure as exc:
        summary = {"check_failed": str(exc)}
        print("dbeta %s: CHECK FAILED: %s" % (args.subcommand, exc), file=sys.stderr)
        code = 1
    except Exception as exc:  # propagate with module context, nonzero exit
        print("dbeta %s: error: %s: %s" % (args.subcommand, type(exc).__name__, exc), file=sys.stderr)
        return 1

    manifest = {
        "subcommand": args.subcommand,
        "config": cfg,
        "seed": seed,
        "workers": workers,
        "version": __version__,
        "summary": summary,
        "exit_code": code,
    }
    manifest_path = os.path.join(args.out, "manifest.json")
    if os.path.exists(manifest_path):
        # a handler (e.g. sample) already wrote batch metadata; keep both
        with open(manifest_path) as fh:
            existing = json.load(fh)
        existing.update(manifest)
        manifest = existing
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
