"""End-to-end experiment orchestration.

One density's pipeline is generate -> normalize/certify -> solve the
Fokker-Planck evolution -> sample the initial density -> transport the
samples along the probability flow -> compare the identity pairing against
the exact assignment. A suite runs many densities (optionally in parallel),
writes one JSON report per density plus a summary, and is judged failed only
if more than 10% of densities fail.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import MISSING, asdict, dataclass, replace

import numpy as np

from .chebyshev import ChebGrid
from .densities import (diag_gaussian_tt, gen_quartic_mixture, gen_tt_random,
                        normalize_and_certify)
from .errors import ConfigError
from .flow import flow_integrate, paths_to_csv, sample_tt, straightness_diagnostic
from .fpe import fpe_solve, rel_l2_distance
from .gaussian import GaussianSpec, encoder_map, finite_time_map
from .tt import tt_integrate, tt_scale
from .transport import compare

_FAMILIES = ("quartic-mixture", "tt-random", "gaussian")

PRESETS = {
    "d2": {"d": 2, "n_grid": 250, "m_steps": 250, "family": "quartic-mixture"},
    "d3": {"d": 3, "n_grid": 100, "m_steps": 100, "family": "quartic-mixture"},
    "d7": {"d": 7, "n_grid": 50, "m_steps": 50, "family": "tt-random"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    d: int
    n_grid: int
    m_steps: int
    family: str
    t_max: float = 5.0
    box: tuple = (-8.0, 8.0)
    n_samples: int = 500
    n_densities: int = 100
    seed: int = 0
    cross_tol: float = 1e-8
    cross_max_rank: int = 30
    round_tol: float = 1e-10
    solver_max_rank: int = 50
    splitting: str = "exact"
    workers: int = 1
    out: str = None
    gaussian_mean: tuple = None
    gaussian_var: tuple = None

    def __post_init__(self):
        box = tuple(float(v) for v in self.box)
        object.__setattr__(self, "box", box)
        if self.gaussian_mean is not None:
            object.__setattr__(self, "gaussian_mean", tuple(map(float, self.gaussian_mean)))
        if self.gaussian_var is not None:
            object.__setattr__(self, "gaussian_var", tuple(map(float, self.gaussian_var)))
        if self.d < 2:
            raise ConfigError(f"d must be >= 2, got {self.d}")
        if self.n_grid < 8:
            raise ConfigError(f"spatial grid size must be >= 8, got {self.n_grid}")
        if self.m_steps < 4:
            raise ConfigError(f"temporal grid size must be >= 4, got {self.m_steps}")
        if self.t_max <= 0:
            raise ConfigError(f"t_max must be positive, got {self.t_max}")
        if not box[1] > box[0]:
            raise ConfigError(f"empty box {box}")
        if self.family not in _FAMILIES:
            raise ConfigError(f"family must be one of {_FAMILIES}, got {self.family!r}")
        if self.family == "quartic-mixture" and self.d > 3:
            raise ConfigError("quartic-mixture densities are defined for d <= 3")
        if self.n_samples < 1 or self.n_densities < 1:
            raise ConfigError("need n_samples >= 1 and n_densities >= 1")
        if self.workers < 1:
            raise ConfigError("need workers >= 1")

    def grid(self) -> ChebGrid:
        return ChebGrid.uniform(self.d, self.n_grid, self.box[0], self.box[1])

    def as_dict(self) -> dict:
        return asdict(self)


def config_from_dict(data: dict, **overrides) -> ExperimentConfig:
    merged = dict(data)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    preset = merged.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}, have {sorted(PRESETS)}")
        base = dict(PRESETS[preset])
        base.update(merged)
        merged = base
    fields = ExperimentConfig.__dataclass_fields__
    unknown = set(merged) - set(fields)
    if unknown:
        raise ConfigError(f"unknown config fields {sorted(unknown)}")
    missing = [k for k, f in fields.items()
               if f.default is MISSING and f.default_factory is MISSING
               and k not in merged]
    if missing:
        raise ConfigError(f"missing required config fields: {', '.join(missing)}")
    try:
        return ExperimentConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _child_seed(master: int, index: int, purpose: int) -> int:
    ss = np.random.SeedSequence(entropy=master, spawn_key=(index, purpose))
    return int(ss.generate_state(1)[0])


def _gaussian_params(config: ExperimentConfig, seed: int):
    if config.gaussian_mean is not None or config.gaussian_var is not None:
        mean = np.array(config.gaussian_mean if config.gaussian_mean is not None
                        else (0.0,) * config.d)
        var = np.array(config.gaussian_var if config.gaussian_var is not None
                       else (1.0,) * config.d)
    else:
        rng = np.random.default_rng(seed)
        mean = rng.uniform(-1.0, 1.0, size=config.d)
        var = rng.uniform(0.5, 2.0, size=config.d)
    if mean.shape != (config.d,) or var.shape != (config.d,):
        raise ConfigError("gaussian mean/var must have length d")
    return mean, var


def _build_density(config: ExperimentConfig, grid: ChebGrid, seed: int):
    """Initial density TT plus generation metadata for the report."""
    meta = {"family": config.family, "density_seed": seed}
    if config.family == "quartic-mixture":
        spec, f = gen_quartic_mixture(config.d, seed, box=config.box)
        res = normalize_and_certify(f, grid, cross_tol=config.cross_tol,
                                    max_rank=config.cross_max_rank, seed=seed)
        meta.update(k_components=spec.k, rescales=res.rescales,
                    boundary_ratio=res.boundary_ratio,
                    cross_converged=bool(res.cross_info.converged),
                    cross_error=res.cross_info.val_error,
                    ranks=list(res.tensor.ranks))
        return res.tensor, meta, None
    if config.family == "tt-random":
        t = gen_tt_random(grid, seed)
        res = normalize_and_certify(t, grid, seed=seed)
        meta.update(rescales=res.rescales, boundary_ratio=res.boundary_ratio,
                    ranks=list(res.tensor.ranks))
        return res.tensor, meta, None
    # analytic Gaussian: rank-1 by construction, certificate bypassed since
    # the closed form provides the oracle and moderate variances put walls
    # above the 1e-12 bar without affecting the comparison
    mean, var = _gaussian_params(config, seed)
    t = diag_gaussian_tt(grid, mean, var)
    mass = tt_integrate(t, [grid.quad_weights(k) for k in range(grid.d)])
    spec = GaussianSpec(mean, np.diag(var))
    meta.update(mean=mean.tolist(), var=var.tolist())
    return tt_scale(t, 1.0 / mass), meta, spec


def run_one(config: ExperimentConfig, index: int) -> dict:
    """Full pipeline for density ``index``; returns the per-density report."""
    t_start = time.perf_counter()
    grid = config.grid()
    dseed = _child_seed(config.seed, index, 0)
    sseed = _child_seed(config.seed, index, 1)

    p0, meta, gauss_spec = _build_density(config, grid, dseed)
    t_gen = time.perf_counter()

    traj = fpe_solve(p0, grid, config.m_steps, config.t_max,
                     splitting=config.splitting, round_tol=config.round_tol,
                     max_rank=config.solver_max_rank)
    t_solve = time.perf_counter()

    x0 = sample_tt(p0, grid, config.n_samples, sseed)
    res = flow_integrate(traj, x0)
    t_flow = time.perf_counter()

    report = compare(x0.points, res.x1.points).as_dict()
    t_compare = time.perf_counter()

    report.update(
        index=index,
        density=meta,
        flow={"clamped_stages": res.clamped, "failed_ids": res.failed_ids,
              "score_floor_hits": traj.floor_hits,
              "solver_warnings": traj.warnings},
        config=config.as_dict(),
    )
    report["timings"].update(
        generate_s=t_gen - t_start, solve_s=t_solve - t_gen,
        flow_s=t_flow - t_solve, compare_s=t_compare - t_flow,
        total_s=t_compare - t_start)
    if gauss_spec is not None:
        ok = np.isfinite(res.x1.points).all(axis=1)
        ref = finite_time_map(gauss_spec, x0.points[ok], config.t_max)
        gap = np.linalg.norm(res.x1.points[ok] - ref, axis=1)
        report["map_discrepancy"] = float(gap.max())
    return report


def _run_one_payload(args):
    config_dict, index = args
    try:
        return run_one(config_from_dict(config_dict), index), None
    except Exception as exc:  # per-density failures are budgeted
        return None, {"index": index, "error": f"{type(exc).__name__}: {exc}"}


def run_suite(config: ExperimentConfig) -> dict:
    """All densities; writes per-density and summary JSON when out is set."""
    t0 = time.perf_counter()
    reports, failures = [], []
    payload = [(config.as_dict(), i) for i in range(config.n_densities)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_run_one_payload, payload))
    else:
        outcomes = map(_run_one_payload, payload)
    for rep, failure in outcomes:
        if failure is not None:
            failures.append(failure)
        else:
            reports.append(rep)

    eps = [r["epsilon_rel"] for r in reports]
    times = [r["timings"]["total_s"] for r in reports]
    status = "ok" if len(failures) <= 0.1 * config.n_densities else "failed"
    summary = {
        "status": status,
        "config": config.as_dict(),
        "n_completed": len(reports),
        "n_failed": len(failures),
        "failures": failures,
        "epsilon_rel_max": max(eps) if eps else None,
        "epsilon_rel_min": min(eps) if eps else None,
        "epsilon_rel_median": float(np.median(eps)) if eps else None,
        "identity_fraction_min": min(r["identity_fraction"] for r in reports) if reports else None,
        "timings": {"per_density_s": times, "suite_s": time.perf_counter() - t0},
    }
    if config.out:
        os.makedirs(config.out, exist_ok=True)
        for rep in reports:
            path = os.path.join(config.out, f"density_{rep['index']:04d}.json")
            with open(path, "w") as fh:
                json.dump(rep, fh, indent=2, sort_keys=True)
        with open(os.path.join(config.out, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
    return summary


def gaussian_check(config: ExperimentConfig, mean=None, var=None) -> dict:
    """Numeric pipeline vs the closed-form Gaussian law.

    Reports the per-step relative L2 density error against the evolved
    moments and the endpoint discrepancies against the finite-time map and
    the limiting whitening map.
    """
    cfg = replace(config, family="gaussian",
                  gaussian_mean=tuple(mean) if mean is not None else config.gaussian_mean,
                  gaussian_var=tuple(var) if var is not None else config.gaussian_var)
    grid = cfg.grid()
    dseed = _child_seed(cfg.seed, 0, 0)
    mean_v, var_v = _gaussian_params(cfg, dseed)
    spec = GaussianSpec(mean_v, np.diag(var_v))
    p0, _, _ = _build_density(cfg, grid, dseed)

    t0 = time.perf_counter()
    traj = fpe_solve(p0, grid, cfg.m_steps, cfg.t_max, splitting=cfg.splitting,
                     round_tol=cfg.round_tol, max_rank=cfg.solver_max_rank)
    weights = [grid.quad_weights(k) for k in range(grid.d)]
    l2 = []
    for m in range(traj.n_steps + 1):
        t = m * traj.h
        ref = diag_gaussian_tt(grid, np.exp(-t) * mean_v,
                               1 + np.exp(-2 * t) * (var_v - 1))
        ref = tt_scale(ref, 1.0 / tt_integrate(ref, weights))
        l2.append(rel_l2_distance(traj.snapshots[m], ref, grid))
    t_solve = time.perf_counter()

    x0 = sample_tt(p0, grid, cfg.n_samples, _child_seed(cfg.seed, 0, 1))
    res = flow_integrate(traj, x0)
    ok = np.isfinite(res.x1.points).all(axis=1)
    gap_finite = np.linalg.norm(
        res.x1.points[ok] - finite_time_map(spec, x0.points[ok], cfg.t_max), axis=1)
    gap_limit = np.linalg.norm(
        res.x1.points[ok] - encoder_map(spec, x0.points[ok]), axis=1)
    rep = compare(x0.points, res.x1.points)
    return {
        "config": cfg.as_dict(),
        "mean": mean_v.tolist(),
        "var": var_v.tolist(),
        "l2_per_step": [float(v) for v in l2],
        "l2_max": float(max(l2)),
        "map_discrepancy_finite": float(gap_finite.max()),
        "map_discrepancy_limit": float(gap_limit.max()),
        "limit_bound": float(np.exp(-cfg.t_max) * np.abs(var_v - 1).max()),
        "epsilon_rel": rep.epsilon_rel,
        "excluded": rep.excluded,
        "timings": {"solve_s": t_solve - t0,
                    "flow_s": time.perf_counter() - t_solve},
    }


def dump_trajectories(config: ExperimentConfig, n_paths: int, out_csv,
                      out_json=None) -> dict:
    """Run one density and write n_paths randomly chosen paths as CSV.

    Returns the straightness diagnostics (also written to ``out_json``).
    """
    if n_paths < 0:
        raise ConfigError(f"n_paths must be >= 0, got {n_paths}")
    grid = config.grid()
    dseed = _child_seed(config.seed, 0, 0)
    p0, meta, _ = _build_density(config, grid, dseed)
    traj = fpe_solve(p0, grid, config.m_steps, config.t_max,
                     splitting=config.splitting, round_tol=config.round_tol,
                     max_rank=config.solver_max_rank)
    x0 = sample_tt(p0, grid, max(n_paths, 1), _child_seed(config.seed, 0, 1))
    res = flow_integrate(traj, x0)
    chooser = np.random.default_rng(_child_seed(config.seed, 0, 2))
    chosen = sorted(chooser.choice(len(res.paths), size=n_paths, replace=False))
    paths = [res.paths[i] for i in chosen]
    paths_to_csv(paths, out_csv, d=config.d)
    # sub-1e-6 chords are transport noise, reported straight
    diag = straightness_diagnostic(paths, chord_floor=1e-6) if paths else np.array([])
    payload = {
        "density": meta,
        "ids": [p.id for p in paths],
        "straightness": [float(v) for v in diag],
        "clamped_stages": res.clamped,
        "failed_ids": res.failed_ids,
    }
    if out_json:
        with open(out_json, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
    return payload


def aggregate_table(summary_paths, out_csv=None) -> str:
    """Collect suite summaries into a compact markdown table."""
    rows = []
    for path in summary_paths:
        with open(path) as fh:
            s = json.load(fh)
        cfg = s["config"]
        times = s["timings"]["per_density_s"]
        rows.append({
            "d": cfg["d"], "n_grid": cfg["n_grid"], "m_steps": cfg["m_steps"],
            "family": cfg["family"], "n_densities": s["n_completed"],
            "n_samples": cfg["n_samples"],
            "epsilon_rel_max": s["epsilon_rel_max"],
            "epsilon_rel_median": s["epsilon_rel_median"],
            "mean_time_s": float(np.mean(times)) if times else None,
        })
    rows.sort(key=lambda r: r["d"])
    header = ("| d | Spatial grid | Temporal grid | Family | Densities | "
              "Samples | max eps_rel | median eps_rel | mean time (s) |")
    sep = "|" + "---|" * 9
    lines = [header, sep]
    for r in rows:
        lines.append(
            f"| {r['d']} | {r['n_grid']} | {r['m_steps']} | {r['family']} | "
            f"{r['n_densities']} | {r['n_samples']} | {r['epsilon_rel_max']:.3e} | "
            f"{r['epsilon_rel_median']:.3e} | {r['mean_time_s']:.2f} |")
    table = "\n".join(lines)
    if out_csv:
        import csv as _csv

        with open(out_csv, "w", newline="") as fh:
            writer = _csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    return table
