"""Batch command-line front door.

Subcommands cover sampling (sample, bridge, theta-stats), closed-form
analytics (qmatrix, exact-gauss), the large-deviation machinery (tilts,
profile), tube confinement (confine, exponent-fit), and validation sweeps
(oracle-check, continuum-check).

Configuration is a JSON file with sections model / potential / boundary /
sampler / tube plus output_dir; unknown keys anywhere are rejected.  Flags
override config values.  Every text output starts with a comment line (or
leading JSON fields) carrying a 12-hex-digit hash of the effective
configuration and the seed, and repeated runs with the same configuration and
seed are byte-identical regardless of --workers.  Exit codes: 0 success,
1 domain or validation error (message on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import confinement, gaussian, ldp, oracle, sampling
from .model import (
    BoundaryConditions,
    ContinuumProfile,
    GaussianPotential,
    ModelParams,
    PowerLawPotential,
    TabulatedPotential,
    continuum_energy_check,
)

__all__ = ["main", "build_parser"]

_SCHEMA = {
    "model": {"n_sites", "epsilon", "macro_length", "height_mode"},
    "potential": {"kind", "kappa", "alpha", "grid", "values"},
    "boundary": {"xi_left", "xi_right", "endpoint"},
    "sampler": {"seed", "n_samples", "sweeps", "burn_in", "thin", "n_chains"},
    "tube": {"rho", "grad_cut"},
    "output_dir": None,
}

_DEFAULTS = {
    "model": {"n_sites": 100, "epsilon": 0.01, "macro_length": 1.0,
              "height_mode": "continuous"},
    "potential": {"kind": "gaussian", "kappa": 1.0},
    "boundary": {"xi_left": 0.0, "xi_right": 0.0, "endpoint": 0.0},
    "sampler": {"seed": 0, "n_samples": 10_000, "sweeps": None, "burn_in": 0,
                "thin": 1, "n_chains": None},
    "tube": {"rho": 0.1, "grad_cut": None},
    "output_dir": ".",
}


# ---------------------------------------------------------------------------
# configuration

def _check_keys(data: dict) -> None:
    for key, sub in data.items():
        if key not in _SCHEMA:
            raise ValueError(f"unknown config key {key!r}")
        allowed = _SCHEMA[key]
        if allowed is None:
            continue
        if not isinstance(sub, dict):
            raise ValueError(f"config section {key!r} must be a JSON object")
        for inner in sub:
            if inner not in allowed:
                raise ValueError(f"unknown config key {key}.{inner}")


def _merge_config(args) -> dict:
    cfg = {k: (dict(v) if isinstance(v, dict) else v) for k, v in _DEFAULTS.items()}
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text())
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        _check_keys(data)
        for key, sub in data.items():
            if key == "potential" and isinstance(sub, dict) and "kind" in sub:
                # switching kind discards the defaults of the previous kind
                cfg[key] = dict(sub)
            elif isinstance(sub, dict):
                cfg[key].update(sub)
            else:
                cfg[key] = sub
    if getattr(args, "seed", None) is not None:
        cfg["sampler"]["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        cfg["output_dir"] = args.out
    return cfg


def _config_hash(cfg: dict, cmd: dict) -> str:
    hashed = {k: v for k, v in cfg.items() if k != "output_dir"}
    payload = json.dumps({"cfg": hashed, "cmd": cmd}, sort_keys=True,
                         separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _model(cfg: dict) -> ModelParams:
    m = cfg["model"]
    return ModelParams(n_sites=int(m["n_sites"]), epsilon=float(m["epsilon"]),
                       macro_length=float(m["macro_length"]),
                       height_mode=m["height_mode"])


def _potential(cfg: dict):
    p = dict(cfg["potential"])
    kind = p.pop("kind", "gaussian")
    if kind == "gaussian":
        extras = set(p) - {"kappa"}
        if extras:
            raise ValueError(f"gaussian potential does not take {sorted(extras)}")
        return GaussianPotential(kappa=float(p.get("kappa", 1.0)))
    if kind == "power":
        extras = set(p) - {"kappa", "alpha"}
        if extras:
            raise ValueError(f"power potential does not take {sorted(extras)}")
        return PowerLawPotential(kappa=float(p.get("kappa", 1.0)),
                                 alpha=float(p.get("alpha", 2.0)))
    if kind == "table":
        if "grid" not in p or "values" not in p:
            raise ValueError("table potential needs grid and values")
        extras = set(p) - {"grid", "values"}
        if extras:
            raise ValueError(f"table potential does not take {sorted(extras)}")
        return TabulatedPotential(np.asarray(p["grid"], dtype=float),
                                  np.asarray(p["values"], dtype=float))
    raise ValueError(f"unknown potential kind {kind!r}")


def _boundary(cfg: dict) -> BoundaryConditions:
    b = cfg["boundary"]
    return BoundaryConditions(xi_left=float(b["xi_left"]),
                              xi_right=float(b["xi_right"]),
                              endpoint=float(b["endpoint"]))


def _settings(cfg: dict) -> sampling.ChainSettings:
    s = cfg["sampler"]
    return sampling.ChainSettings(
        seed=int(s["seed"]), n_samples=int(s["n_samples"]),
        sweeps=None if s.get("sweeps") is None else int(s["sweeps"]),
        burn_in=int(s.get("burn_in", 0)), thin=int(s.get("thin", 1)),
        n_chains=None if s.get("n_chains") is None else int(s["n_chains"]),
    )


# ---------------------------------------------------------------------------
# output helpers

def _out_path(cfg: dict, name: str) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _stamp(h: str, seed: int) -> str:
    return f"config={h} seed={seed}"


def _write_csv(path: Path, header: list[str], rows, comment: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {comment}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    print(f"wrote {path}")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print(f"wrote {path}")


def _write_svg_loglog(path: Path, xs, ys, comment: str,
                      xlabel: str, ylabel: str) -> None:
    """Minimal log-log line plot: axes, decade ticks, one polyline."""
    lx, ly = np.log10(np.asarray(xs, float)), np.log10(np.asarray(ys, float))
    width, height, left, right, top, bottom = 640, 480, 70, 20, 30, 50

    def span(v):
        lo, hi = float(v.min()), float(v.max())
        pad = 0.05 * (hi - lo) if hi > lo else 0.5
        return lo - pad, hi + pad

    (x0, x1), (y0, y1) = span(lx), span(ly)
    px = left + (lx - x0) / (x1 - x0) * (width - left - right)
    py = height - bottom - (ly - y0) / (y1 - y0) * (height - top - bottom)

    def ticks(lo, hi):
        vals = [k for k in range(math.ceil(lo), math.floor(hi) + 1)]
        return vals if vals else [lo, hi]

    parts = [f"<!-- {comment} -->",
             f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" '
             f'y2="{height - bottom}" stroke="black"/>',
             f'<line x1="{left}" y1="{top}" x2="{left}" '
             f'y2="{height - bottom}" stroke="black"/>']
    for tv in ticks(x0, x1):
        tx = left + (tv - x0) / (x1 - x0) * (width - left - right)
        parts.append(f'<line x1="{tx:.1f}" y1="{height - bottom}" '
                     f'x2="{tx:.1f}" y2="{height - bottom + 5}" stroke="black"/>')
        parts.append(f'<text x="{tx:.1f}" y="{height - bottom + 20}" '
                     f'font-size="12" text-anchor="middle">1e{tv:g}</text>')
    for tv in ticks(y0, y1):
        ty = height - bottom - (tv - y0) / (y1 - y0) * (height - top - bottom)
        parts.append(f'<line x1="{left - 5}" y1="{ty:.1f}" x2="{left}" '
                     f'y2="{ty:.1f}" stroke="black"/>')
        parts.append(f'<text x="{left - 8}" y="{ty + 4:.1f}" font-size="12" '
                     f'text-anchor="end">1e{tv:g}</text>')
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" '
                 'stroke-width="1.5"/>')
    for a, b in zip(px, py):
        parts.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3" fill="steelblue"/>')
    parts.append(f'<text x="{(left + width - right) / 2}" y="{height - 10}" '
                 f'font-size="13" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="15" y="{(top + height - bottom) / 2}" font-size="13" '
                 f'text-anchor="middle" transform="rotate(-90 15 '
                 f'{(top + height - bottom) / 2})">{ylabel}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")
    print(f"wrote {path}")


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from exc


def _write_samples(cfg: dict, name: str, fmt: str, samples: np.ndarray,
                   h: str, seed: int) -> None:
    if fmt == "csv":
        path = _out_path(cfg, f"{name}.csv")
        sampling.samples_to_csv(samples, path, comment=_stamp(h, seed))
    else:
        # binary frames carry the SFLX1 magic instead of a comment line
        path = _out_path(cfg, f"{name}.bin")
        sampling.samples_to_frame(samples, path)
    print(f"wrote {path}")


# ---------------------------------------------------------------------------
# subcommands

def _run_sample(args) -> int:
    cfg = _merge_config(args)
    if args.n is not None:
        cfg["sampler"]["n_samples"] = args.n
    cmd = {"name": "sample", "xi1": args.xi1, "fmt": args.fmt,
           "truncation": args.truncation}
    h = _config_hash(cfg, cmd)
    params, pot = _model(cfg), _potential(cfg)
    settings = _settings(cfg)
    dist = sampling.build_increment_dist(pot, params, truncation=args.truncation)
    samples = sampling.sample_free(params, dist, args.xi1, settings,
                                   workers=args.workers)
    _write_samples(cfg, "sample", args.fmt, samples, h, settings.seed)
    return 0


def _run_bridge(args) -> int:
    cfg = _merge_config(args)
    if args.n is not None:
        cfg["sampler"]["n_samples"] = args.n
    for flag, key in (("xi_left", "xi_left"), ("xi_right", "xi_right"),
                      ("endpoint", "endpoint")):
        val = getattr(args, flag)
        if val is not None:
            cfg["boundary"][key] = val
    if args.burn_in is not None:
        cfg["sampler"]["burn_in"] = args.burn_in
    if args.thin is not None:
        cfg["sampler"]["thin"] = args.thin
    cmd = {"name": "bridge", "method": args.method, "fmt": args.fmt,
           "truncation": args.truncation, "width": args.width}
    h = _config_hash(cfg, cmd)
    params, pot = _model(cfg), _potential(cfg)
    bc, settings = _boundary(cfg), _settings(cfg)
    if args.method == "exact":
        samples = sampling.sample_gaussian_bridge(params, pot, bc, settings,
                                                  workers=args.workers)
    else:
        samples = sampling.sample_bridge_mcmc(
            params, pot, bc, settings, workers=args.workers,
            truncation=args.truncation, step_width=args.width)
    _write_samples(cfg, "bridge", args.fmt, samples, h, settings.seed)
    return 0


def _run_theta_stats(args) -> int:
    cfg = _merge_config(args)
    if args.n is not None:
        cfg["sampler"]["n_samples"] = args.n
    times = _parse_floats(args.times)
    cmd = {"name": "theta-stats", "times": times, "method": args.method}
    h = _config_hash(cfg, cmd)
    params, pot = _model(cfg), _potential(cfg)
    bc, settings = _boundary(cfg), _settings(cfg)
    if args.method == "exact":
        samples = sampling.sample_gaussian_bridge(params, pot, bc, settings,
                                                  workers=args.workers)
    else:
        samples = sampling.sample_bridge_mcmc(params, pot, bc, settings,
                                              workers=args.workers)
    sigma = math.sqrt(gaussian.sigma2_increment(pot, params))
    stats = sampling.estimate_theta_stats(samples, times, sigma, params.epsilon)
    payload = {
        "config_hash": h, "seed": settings.seed,
        "times": list(stats.times), "mean": list(stats.mean),
        "mean_se": list(stats.mean_se),
        "cov": [list(r) for r in stats.cov],
        "cov_se": [list(r) for r in stats.cov_se],
    }
    _write_json(_out_path(cfg, "theta_stats.json"), payload)
    return 0


def _run_qmatrix(args) -> int:
    cfg = _merge_config(args)
    times = _parse_floats(args.times)
    cmd = {"name": "qmatrix", "times": times}
    h = _config_hash(cfg, cmd)
    q = gaussian.q_matrix(np.asarray(times))
    labels = ["0"] + [f"{t:.17g}" for t in times] + ["1"]
    path = _out_path(cfg, "qmatrix.csv")
    gaussian.matrix_to_csv(q, labels, path,
                           comment=_stamp(h, cfg["sampler"]["seed"]))
    print(f"wrote {path}")
    return 0


def _run_exact_gauss(args) -> int:
    cfg = _merge_config(args)
    cmd = {"name": "exact-gauss", "xi_left": args.xi_left,
           "xi_right": args.xi_right}
    h = _config_hash(cfg, cmd)
    params, pot = _model(cfg), _potential(cfg)
    if not isinstance(pot, GaussianPotential):
        raise ValueError("exact-gauss is defined for the gaussian potential only")
    value = gaussian.exact_boundary_density(params.n_sites, pot.kappa,
                                            params.macro_length,
                                            args.xi_left, args.xi_right)
    payload = {"config_hash": h, "seed": cfg["sampler"]["seed"],
               "n_sites": params.n_sites, "kappa": pot.kappa,
               "c": params.macro_length, "xi_left": args.xi_left,
               "xi_right": args.xi_right, "density": value}
    _write_json(_out_path(cfg, "exact_gauss.json"), payload)
    return 0


def _tilt_payload(args, cfg: dict, h: str):
    params, pot = _model(cfg), _potential(cfg)
    mgf = ldp.limit_log_mgf(pot)
    sol = ldp.solve_tilts(args.xi_left, args.xi_right, args.slope,
                          params.macro_length, mgf)
    rate = ldp.ld_rate(args.xi_left, args.xi_right, args.slope,
                       params.macro_length, mgf, sol)
    return params, mgf, sol, {
        "config_hash": h, "seed": cfg["sampler"]["seed"],
        "u_star": float(sol.u_star), "v_star": float(sol.v_star),
        "residual": float(np.max(np.abs(sol.residual))),
        "det_hessian": float(np.linalg.det(sol.hessian)),
        "rate": float(rate),
    }


def _run_tilts(args) -> int:
    cfg = _merge_config(args)
    cmd = {"name": "tilts", "xi_left": args.xi_left, "xi_right": args.xi_right,
           "slope": args.slope}
    h = _config_hash(cfg, cmd)
    _, _, _, payload = _tilt_payload(args, cfg, h)
    _write_json(_out_path(cfg, "tilts.json"), payload)
    return 0


def _run_profile(args) -> int:
    cfg = _merge_config(args)
    cmd = {"name": "profile", "xi_left": args.xi_left,
           "xi_right": args.xi_right, "slope": args.slope,
           "points": args.points}
    h = _config_hash(cfg, cmd)
    params, mgf, sol, payload = _tilt_payload(args, cfg, h)
    ts = np.linspace(0.0, 1.0, args.points)
    vals = ldp.mean_profile(ts, args.xi_left, args.xi_right, args.slope,
                            params.macro_length, mgf, sol)
    _write_csv(_out_path(cfg, "profile.csv"), ["t", "profile"],
               zip(ts, vals), _stamp(h, cfg["sampler"]["seed"]))
    _write_json(_out_path(cfg, "tilts.json"), payload)
    return 0


def _run_confine(args) -> int:
    cfg = _merge_config(args)
    if args.grad_cut is not None:
        cfg["tube"]["grad_cut"] = args.grad_cut
    cmd = {"name": "confine", "rho_min": args.rho_min, "rho_max": args.rho_max,
           "rho_steps": args.rho_steps, "mesh": args.mesh}
    h = _config_hash(cfg, cmd)
    params, pot = _model(cfg), _potential(cfg)
    rhos = np.geomspace(args.rho_min, args.rho_max, args.rho_steps)
    rows = confinement.confinement_sweep(
        params, pot, rhos, grad_cut=cfg["tube"]["grad_cut"], mesh=args.mesh,
        workers=args.workers)
    seed = cfg["sampler"]["seed"]
    _write_csv(_out_path(cfg, "confine.csv"),
               ["rho", "F", "lambda_max", "states", "mesh_delta"],
               [(r.rho, r.free_energy, r.lam_norm, r.n_states, r.mesh_delta)
                for r in rows],
               _stamp(h, seed))
    fit = confinement.exponent_fit([r.rho for r in rows],
                                   [r.free_energy for r in rows])
    _write_json(_out_path(cfg, "confine_fit.json"),
                {"config_hash": h, "seed": seed, "slope": fit.slope,
                 "intercept": fit.intercept, "r2": fit.r_squared})
    if args.svg:
        _write_svg_loglog(_out_path(cfg, "confine.svg"),
                          [r.rho for r in rows], [r.free_energy for r in rows],
                          _stamp(h, seed), "rho", "F")
    return 0


def _run_exponent_fit(args) -> int:
    cfg = _merge_config(args)
    raw = Path(args.data).read_bytes()
    cmd = {"name": "exponent-fit",
           "data_sha": hashlib.sha256(raw).hexdigest()[:12]}
    h = _config_hash(cfg, cmd)
    rows = [line.split(",") for line in raw.decode().splitlines()
            if line and not line.startswith("#")]
    if len(rows) < 2:
        raise ValueError(f"{args.data}: no data rows")
    header, body = rows[0], rows[1:]
    try:
        i_r, i_f = header.index("rho"), header.index("F")
    except ValueError:
        i_r, i_f = 0, 1
    rhos = [float(r[i_r]) for r in body]
    fs = [float(r[i_f]) for r in body]
    fit = confinement.exponent_fit(rhos, fs)
    _write_json(_out_path(cfg, "exponent_fit.json"),
                {"config_hash": h, "seed": cfg["sampler"]["seed"],
                 "slope": fit.slope, "intercept": fit.intercept,
                 "r2": fit.r_squared})
    return 0


def _run_continuum_check(args) -> int:
    cfg = _merge_config(args)
    eps_list = _parse_floats(args.eps)
    cmd = {"name": "continuum-check", "shape": args.shape, "eps": eps_list}
    h = _config_hash(cfg, cmd)
    pot = _potential(cfg)
    if args.shape == "square":
        profile = ContinuumProfile(f=lambda x: x * x, gamma=1.0, delta=1.0,
                                   d2f=lambda x: 2.0 * np.ones_like(np.asarray(x)))
    else:
        profile = ContinuumProfile(f=lambda x: x ** 3, gamma=1.0, delta=1.0,
                                   d2f=lambda x: 6.0 * np.asarray(x))
    c = float(cfg["model"]["macro_length"])
    rows = continuum_energy_check(profile, pot, eps_list, macro_length=c)
    _write_csv(_out_path(cfg, "continuum_check.csv"),
               ["eps", "lattice_energy", "integral", "error"],
               rows, _stamp(h, cfg["sampler"]["seed"]))
    return 0


# ---------------------------------------------------------------------------
# desk-scale oracle sweep

def _oracle_report(n_max: int, seed: int, workers: int) -> tuple[list[dict], bool]:
    checks: list[dict] = []

    def record(name: str, measured: float, bound: float) -> None:
        checks.append({"name": name, "measured": measured, "bound": bound,
                       "passed": bool(measured <= bound)})

    support = (-1.0, 0.0, 1.0)
    zero_grid = np.linspace(-2.0, 2.0, 5)
    pots = {"gaussian": GaussianPotential(kappa=1.0),
            "zero": TabulatedPotential(zero_grid, np.zeros(5))}

    for n in range(3, n_max + 1):
        params = ModelParams(n_sites=n, epsilon=1.0, macro_length=float(n),
                             height_mode="discrete")
        for pname, pot in pots.items():
            spec = oracle.EnumerationSpec(params, pot, support)
            radius = 1.0
            event = lambda hh: np.max(np.abs(hh[:, 1:n + 1]), axis=1) <= radius
            res = oracle.enumerate_configs(spec, event=event)
            op = confinement.build_transfer(
                params, pot,
                confinement.TubeSpec(rho=(radius + 0.5) /
                                     math.sqrt(_support_sigma2(pot, 1.0) * n)),
                support=support)
            p_dp = confinement.survival_probability(op, n)
            rel = abs(p_dp - res.probability) / res.probability
            record(f"transfer_vs_enumeration_{pname}_n{n}", rel, 1e-12)

    # iid partial-sum identities: Var X_N, Cov(X,Y), Var Y_N from enumeration
    n = n_max
    params = ModelParams(n_sites=n, epsilon=1.0, macro_length=float(n),
                         height_mode="discrete")
    pot = pots["gaussian"]
    spec = oracle.EnumerationSpec(params, pot, support)
    s2 = _support_sigma2(pot, 1.0)
    var_x, cov_xy, var_y = gaussian.xy_moments(n, n, s2)
    ex2 = oracle.enumerate_configs(
        spec, statistic=lambda hh: _stat_x(hh, n) ** 2).conditional_mean
    exy = oracle.enumerate_configs(
        spec, statistic=lambda hh: _stat_x(hh, n) * _stat_y(hh, n)).conditional_mean
    ey2 = oracle.enumerate_configs(
        spec, statistic=lambda hh: _stat_y(hh, n) ** 2).conditional_mean
    record(f"moment_var_x_n{n}", abs(ex2 - var_x) / var_x, 1e-12)
    record(f"moment_cov_xy_n{n}", abs(exy - cov_xy) / cov_xy, 1e-12)
    record(f"moment_var_y_n{n}", abs(ey2 - var_y) / var_y, 1e-12)

    # free sampler against enumeration, mean and variance of the far endpoint
    dist = sampling.build_increment_dist(pot, params, truncation=1.0)
    settings = sampling.ChainSettings(seed=seed, n_samples=20_000)
    samples = sampling.sample_free(params, dist, 0.0, settings, workers=workers)
    end = samples[:, n + 1]
    e_end = oracle.enumerate_configs(
        spec, statistic=lambda hh: hh[:, n + 1]).conditional_mean
    v_end = oracle.enumerate_configs(
        spec, statistic=lambda hh: hh[:, n + 1] ** 2).conditional_mean - e_end ** 2
    se = math.sqrt(v_end / len(end))
    record(f"free_sampler_mean_n{n}", abs(float(end.mean()) - e_end), 5.0 * se)
    record(f"free_sampler_var_n{n}",
           abs(float(end.var(ddof=1)) - v_end) / v_end, 0.05)

    # bridge MCMC marginal against conditioned enumeration
    bc = BoundaryConditions(0.0, 0.0, 0.0)
    bridge_event = lambda hh: (hh[:, n + 1] == 0.0) & (hh[:, n] == 0.0)
    p_mid = oracle.enumerate_configs(
        spec, event=bridge_event,
        statistic=lambda hh: (hh[:, (n + 1) // 2] == 0.0).astype(float),
    ).conditional_mean
    mc_settings = sampling.ChainSettings(seed=seed, n_samples=4000,
                                         burn_in=500, thin=2)
    mc = sampling.sample_bridge_mcmc(params, pot, bc, mc_settings,
                                     workers=workers, truncation=1.0)
    p_hat = float(np.mean(mc[:, (n + 1) // 2] == 0.0))
    record(f"mcmc_bridge_marginal_n{n}", abs(p_hat - p_mid), 0.03)

    # bivariate endpoint density integrates to one
    s2g = 1.0
    grid = np.linspace(-40.0, 40.0, 401)
    xx, yy = np.meshgrid(grid, grid, indexing="ij")
    dens = oracle.gaussian_functional_density(8, s2g, xx, yy)
    total = float(np.trapezoid(np.trapezoid(dens, grid, axis=1), grid))
    record("functional_density_normalization", abs(total - 1.0), 1e-6)

    return checks, all(c["passed"] for c in checks)


def _support_sigma2(pot, eps: float) -> float:
    vals = np.array([-1.0, 0.0, 1.0])
    w = np.exp(-eps * np.array([float(pot(v / eps)) for v in vals]))
    return float(np.sum(w * vals ** 2) / np.sum(w))


def _stat_x(heights: np.ndarray, n: int) -> np.ndarray:
    # X_N = (xi_{N+1} - xi_1)/eps at eps = 1 with xi_1 = 0
    return heights[:, n + 1] - heights[:, n]


def _stat_y(heights: np.ndarray, n: int) -> np.ndarray:
    # Y_N = phi_{N+1}/(eps (N+1)) at eps = 1 with xi_1 = 0
    return heights[:, n + 1] / (n + 1)


def _run_oracle_check(args) -> int:
    cfg = _merge_config(args)
    cmd = {"name": "oracle-check", "n_max": args.n_max}
    h = _config_hash(cfg, cmd)
    seed = int(cfg["sampler"]["seed"])
    checks, passed = _oracle_report(args.n_max, seed, args.workers)
    payload = {"config_hash": h, "seed": seed, "n_max": args.n_max,
               "all_passed": passed, "checks": checks}
    _write_json(_out_path(cfg, "oracle_check.json"), payload)
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# parser and dispatch

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semiflex",
        description="Discrete semiflexible polymer toolkit: samplers, "
                    "Gaussian analytics, large-deviation solvers, and tube "
                    "confinement.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel worker bound (default 1)")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("sample", help="free-measure sampler")
    common(p)
    p.add_argument("--n", type=int, help="number of samples")
    p.add_argument("--xi1", type=float, default=0.0, help="first gradient")
    p.add_argument("--truncation", type=float, help="increment truncation")
    p.add_argument("--fmt", choices=("csv", "bin"), default="csv")
    p.set_defaults(func=_run_sample)

    p = sub.add_parser("bridge", help="boundary-pinned sampler")
    common(p)
    p.add_argument("--n", type=int, help="number of samples")
    p.add_argument("--method", choices=("exact", "mcmc"), default="exact")
    p.add_argument("--xi-left", dest="xi_left", type=float)
    p.add_argument("--xi-right", dest="xi_right", type=float)
    p.add_argument("--endpoint", type=float)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--truncation", type=float)
    p.add_argument("--width", type=float, help="MCMC proposal width")
    p.add_argument("--fmt", choices=("csv", "bin"), default="csv")
    p.set_defaults(func=_run_bridge)

    p = sub.add_parser("theta-stats", help="rescaled bridge statistics")
    common(p)
    p.add_argument("--n", type=int, help="number of samples")
    p.add_argument("--times", default="0.25,0.5,0.75",
                   help="comma-separated grid in (0,1)")
    p.add_argument("--method", choices=("exact", "mcmc"), default="exact")
    p.set_defaults(func=_run_theta_stats)

    p = sub.add_parser("qmatrix", help="limit covariance matrix on a grid")
    common(p)
    p.add_argument("--times", required=True,
                   help="comma-separated grid in (0,1)")
    p.set_defaults(func=_run_qmatrix)

    p = sub.add_parser("exact-gauss", help="exact Gaussian endpoint density")
    common(p)
    p.add_argument("--xi-left", dest="xi_left", type=float, default=0.0)
    p.add_argument("--xi-right", dest="xi_right", type=float, default=0.0)
    p.set_defaults(func=_run_exact_gauss)

    p = sub.add_parser("tilts", help="solve the boundary tilt equations")
    common(p)
    p.add_argument("--xi-left", dest="xi_left", type=float, default=0.0)
    p.add_argument("--xi-right", dest="xi_right", type=float, default=0.0)
    p.add_argument("--slope", type=float, default=0.0)
    p.set_defaults(func=_run_tilts)

    p = sub.add_parser("profile", help="conditioned mean profile")
    common(p)
    p.add_argument("--xi-left", dest="xi_left", type=float, default=0.0)
    p.add_argument("--xi-right", dest="xi_right", type=float, default=0.0)
    p.add_argument("--slope", type=float, default=0.0)
    p.add_argument("--points", type=int, default=101)
    p.set_defaults(func=_run_profile)

    p = sub.add_parser("confine", help="tube free-energy sweep")
    common(p)
    p.add_argument("--rho-min", dest="rho_min", type=float, default=0.02)
    p.add_argument("--rho-max", dest="rho_max", type=float, default=0.2)
    p.add_argument("--rho-steps", dest="rho_steps", type=int, default=8)
    p.add_argument("--grad-cut", dest="grad_cut", type=float)
    p.add_argument("--mesh", type=float)
    p.add_argument("--svg", action="store_true", help="emit a log-log plot")
    p.set_defaults(func=_run_confine)

    p = sub.add_parser("exponent-fit", help="fit log F against log rho")
    common(p)
    p.add_argument("--data", required=True, help="CSV with rho and F columns")
    p.set_defaults(func=_run_exponent_fit)

    p = sub.add_parser("oracle-check", help="desk-scale validation sweep")
    common(p)
    p.add_argument("--n-max", dest="n_max", type=int, default=6)
    p.set_defaults(func=_run_oracle_check)

    p = sub.add_parser("continuum-check", help="lattice energy vs integral")
    common(p)
    p.add_argument("--shape", choices=("square", "cubic"), default="square")
    p.add_argument("--eps", default="0.1,0.05,0.025,0.0125",
                   help="comma-separated lattice spacings")
    p.set_defaults(func=_run_continuum_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
