"""Scenario configuration, pipeline orchestration and report persistence.

A scenario is a YAML file with nested sections (model, grid, forcing,
solver, analysis, evolution, sweep). Unknown keys are hard errors; every
knob has a documented default. Reports are deterministic: identical configs
produce byte-identical ``report.json``; wall-clock goes to a sidecar.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, MissingArtifacts, NlsLabError
from .evolution import evolve_selfsimilar
from .fieldio import field_to_csv, history_to_json, table_from_csv, table_to_csv
from .forcing import build_forcing_profile
from .grids import ComplexField, build_grid
from .localization import (
    LocalizationReport,
    check_energy_inequality,
    check_identities,
    energy_inequality_tolerance,
    energy_profile,
    k_eps_containment,
    lemma_constants,
    rho_max,
    support_radius,
    thmG_margin,
)
from .params import derive_coefficients, validate_params
from .profile import ProfileProblem, solve_profile
from .selfsimilar import gauge_backward, gauge_forward

SCHEMA_TAG = "nlslab-report/1"
CONFIG_VERSION = 1

# section -> {key: (required, default)}
_FORCING_KEYS = {
    "gaussian-bump": {"kind": (True, None), "amplitude": (True, None),
                      "sigma": (True, None), "support": (True, None)},
    "plateau-bump": {"kind": (True, None), "amplitude": (True, None),
                     "radius": (True, None), "shoulder": (False, None)},
    "custom-csv": {"kind": (True, None), "path": (True, None)},
}

_SCHEMA = {
    "config_version": (True, None),
    "name": (True, None),
    "seed": (False, 0),
    "model": {
        "m": (True, None),
        "a": (True, None),
        "im_p": (False, 0.0),
        "N": (False, 1),
        "R": (True, None),
    },
    "grid": {
        "kind": (False, "interval"),
        "n": (True, None),
    },
    "forcing": None,  # validated per kind
    "solver": {
        "theta": (False, 0.5),
        "tol": (False, 1e-8),
        "max_iter": (False, 5000),
        "continuation_steps": (False, 8),
        "continuation_threshold": (False, 1e-6),
        "scheme": (False, "stabilized"),
        "guess_perturbation": (False, 0.0),
    },
    "analysis": {
        "x0": (False, 0.0),
        "rho0": (False, None),       # default R/2
        "rho1": (False, None),       # default R
        "eps": (False, 0.5),
        "c_cal": (False, 1.0),
        "eps_star": (False, 1.0),
        "support_threshold": (False, 1e-6),
        "n_radii": (False, 65),
    },
    "evolution": {
        "enabled": (False, True),
        "t0": (False, 1.0),
        "t1": (False, 4.0),
        "steps": (False, 800),
    },
    "sweep": {
        "amplitudes": (False, None),
    },
}


def _check_section(name, given, schema, errors):
    out = {}
    for key, value in given.items():
        if key not in schema:
            errors.append(f"{name}.{key}" if name else key)
    for key, (required, default) in schema.items():
        if key in given:
            out[key] = given[key]
        elif required:
            errors.append(f"{name}.{key} (missing)" if name else f"{key} (missing)")
        else:
            out[key] = default
    return out


def load_scenario(path) -> dict:
    """Parse and validate a scenario config; returns the normalized dict."""
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return normalize_scenario(raw, base_dir=Path(path).parent)


def normalize_scenario(raw, base_dir=None) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    errors: list[str] = []
    # Top-level pass only collects unknown/missing key errors; the nested
    # sections are then walked with their own schemas.
    _check_section("", raw, {k: (v if isinstance(v, tuple) else (False, None))
                             for k, v in _SCHEMA.items()}, errors)
    cfg = {"config_version": raw.get("config_version"),
           "name": raw.get("name"),
           "seed": raw.get("seed", 0)}
    for section in ("model", "grid", "solver", "analysis", "evolution", "sweep"):
        given = raw.get(section, {})
        if given is None:
            given = {}
        if not isinstance(given, dict):
            errors.append(f"{section} (not a mapping)")
            given = {}
        cfg[section] = _check_section(section, given, _SCHEMA[section], errors)
    forcing = raw.get("forcing")
    if not isinstance(forcing, dict) or "kind" not in forcing:
        errors.append("forcing.kind (missing)")
        cfg["forcing"] = {}
    else:
        kind = forcing["kind"]
        if kind not in _FORCING_KEYS:
            errors.append(f"forcing.kind (unknown kind {kind!r})")
            cfg["forcing"] = dict(forcing)
        else:
            cfg["forcing"] = _check_section("forcing", forcing,
                                            _FORCING_KEYS[kind], errors)
            cfg["forcing"] = {k: v for k, v in cfg["forcing"].items() if v is not None}
    if errors:
        raise ConfigError(f"invalid config keys: {errors}", keys=errors)
    if cfg["config_version"] != CONFIG_VERSION:
        raise ConfigError(
            f"config_version must be {CONFIG_VERSION}, got {cfg['config_version']}",
            keys=["config_version"])
    if not isinstance(cfg["name"], str) or not cfg["name"]:
        raise ConfigError("name must be a non-empty string", keys=["name"])
    # Model parameters are validated by the params module; surface its
    # errors as ConfigError naming the key.
    model = cfg["model"]
    try:
        a = model["a"]
        if isinstance(a, (list, tuple)):
            a = complex(a[0], a[1])
        else:
            a = complex(a)
        model["a"] = [a.real, a.imag]
        validate_params(dict(m=model["m"], a=a, im_p=model["im_p"],
                             N=model["N"], R=model["R"]))
    except Exception as exc:
        raise ConfigError(f"invalid model parameters: {exc}",
                          keys=["model"]) from exc
    if cfg["grid"]["kind"] not in ("interval", "radial"):
        raise ConfigError(f"unknown grid kind {cfg['grid']['kind']!r}",
                          keys=["grid.kind"])
    if cfg["analysis"]["rho0"] is None:
        cfg["analysis"]["rho0"] = model["R"] / 2.0
    if cfg["analysis"]["rho1"] is None:
        cfg["analysis"]["rho1"] = float(model["R"])
    if cfg["forcing"].get("kind") == "custom-csv" and base_dir is not None:
        p = Path(cfg["forcing"]["path"])
        if not p.is_absolute():
            p = base_dir / p
        if not p.exists():
            raise ConfigError(f"forcing CSV {p} does not exist", keys=["forcing.path"])
        cfg["forcing"]["path"] = str(p)
    return cfg


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(canonical).hexdigest()[:12]


def output_root(explicit=None) -> Path:
    if explicit is not None:
        return Path(explicit)
    return Path(os.environ.get("NLSLAB_OUT", "nlslab-runs"))


@dataclass
class RunReport:
    scenario: dict
    solver: dict
    localization: dict | None
    evolution: dict | None
    errors: list | None = None
    schema: str = SCHEMA_TAG

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "scenario": self.scenario,
            "solver": self.solver,
            "localization": self.localization,
            "evolution": self.evolution,
            "errors": self.errors,
            "timing_sidecar": "timing.json",
        }


def _pyfloat(x):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x} in report")
    return x


def _finite_dict(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out[k] = _finite_dict(v)
        elif isinstance(v, bool) or isinstance(v, (str, int)) or v is None:
            out[k] = v
        elif isinstance(v, (list, tuple)):
            out[k] = [_finite_dict(i) if isinstance(i, dict)
                      else (i if isinstance(i, (str, bool, int)) else _pyfloat(i))
                      for i in v]
        else:
            out[k] = _pyfloat(v)
    return out


def run_scenario(config_path, out=None, seed=None, stage: str = "evolve"):
    """Execute the pipeline for one scenario config.

    ``stage`` is one of solve | localize | evolve, running the pipeline up
    to that point. Returns (report, run_dir, exit_code); exit code 0 on
    success, 2 when the profile solve did not converge (the report is still
    written).
    """
    cfg = load_scenario(config_path)
    if seed is not None:
        cfg["seed"] = int(seed)
    run_dir = output_root(out) / f"{cfg['name']}-{config_hash(cfg)}"
    run_dir.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()
    report, exit_code = _execute(cfg, run_dir, stage)
    wall = time.perf_counter() - t_start
    payload = _finite_dict(report.to_dict())
    (run_dir / "report.json").write_text(
        json.dumps(payload, sort_keys=True, indent=1) + "\n")
    (run_dir / "timing.json").write_text(
        json.dumps({"wall_clock_seconds": wall, "unix_time": time.time()}) + "\n")
    return report, run_dir, exit_code


def _build_problem(cfg):
    model = cfg["model"]
    params = validate_params(dict(m=model["m"], a=complex(*model["a"]),
                                  im_p=model["im_p"], N=model["N"], R=model["R"]))
    coeffs = derive_coefficients(params)
    grid = build_grid(cfg["grid"]["kind"], params.N, params.R, int(cfg["grid"]["n"]))
    F = build_forcing_profile(grid, cfg["forcing"])
    G = ComplexField(grid, -gauge_forward(F, coeffs.c_gauge).values)
    s = cfg["solver"]
    problem = ProfileProblem(
        params=params, coeffs=coeffs, grid=grid, G=G,
        theta=s["theta"], tol=s["tol"], max_iter=int(s["max_iter"]),
        continuation_steps=int(s["continuation_steps"]),
        continuation_threshold=s["continuation_threshold"],
        scheme=s["scheme"],
    )
    return params, coeffs, grid, F, problem


def _initial_guess(cfg, grid):
    amp = cfg["solver"]["guess_perturbation"]
    if not amp:
        return None
    rng = np.random.default_rng(cfg["seed"])
    vals = amp * (rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n))
    vals[grid.dirichlet] = 0.0
    return ComplexField(grid, vals)


def _execute(cfg, run_dir, stage):
    params, coeffs, grid, F, problem = _build_problem(cfg)
    sol = solve_profile(problem, initial_guess=_initial_guess(cfg, grid))
    U = gauge_backward(sol.g, coeffs.c_gauge)
    norm_G = grid.norm_l2(problem.G.values)
    norm_h1 = grid.norm_h1(sol.g.values)
    solver_summary = {
        "converged": sol.converged,
        "iterations": sol.iterations,
        "residual_norm": sol.residual_norm,
        "norm_G_l2": norm_G,
        "norm_g_l2": grid.norm_l2(sol.g.values),
        "norm_g_h1": norm_h1,
        "h1_ratio": norm_h1 / ((params.R ** 2 + 1.0) * norm_G) if norm_G > 0 else 0.0,
    }
    field_to_csv(sol.g, run_dir / "g.csv")
    field_to_csv(U, run_dir / "U.csv")
    field_to_csv(F, run_dir / "F.csv")
    field_to_csv(problem.G, run_dir / "G.csv")
    history_to_json(sol.history, run_dir / "history.json")

    pipeline_errors = []

    loc_summary = None
    if stage in ("localize", "evolve"):
        loc = analyze_localization(cfg, params, coeffs, grid, F, problem, sol)
        loc_summary = {
            "A": loc.A, "L": loc.L, "M": loc.M,
            "rho_max": loc.rho_max, "tau_star": loc.tau_star,
            "support_radius": loc.support_radius,
            "k_eps_contained": loc.k_eps_contained,
            "k_eps_worst_offender": loc.k_eps_worst_offender,
            "identity_residuals": loc.identity_residuals,
            "thmG_margin": loc.thmG_margin,
            "forcing_free_inside": loc.forcing_free_inside,
            "min_inequality_margin": loc.min_inequality_margin,
            "inequality_tolerance": loc.inequality_tolerance,
        }
        prof = energy_profile(sol.g, problem.G, grid, params.m,
                              x0=cfg["analysis"]["x0"],
                              n_radii=int(cfg["analysis"]["n_radii"]))
        table_to_csv(run_dir / "energy_profile.csv", {
            "rho": prof.radii, "E": prof.E, "bmass": prof.bmass,
            "l2mass": prof.l2mass, "wmass": prof.wmass,
            "flux_abs": prof.flux_abs, "Jterm": prof.Jterm, "Gball": prof.Gball,
        })
        (run_dir / "energy_profile.json").write_text(
            json.dumps(prof.to_dict(), sort_keys=True) + "\n")

    evo_summary = None
    if stage == "evolve" and cfg["evolution"]["enabled"]:
        ev = cfg["evolution"]
        try:
            dev = evolve_selfsimilar(U, params, F, t0=ev["t0"], t1=ev["t1"],
                                     steps=int(ev["steps"]))
        except NlsLabError as exc:
            # embed the failure in the report instead of losing the run
            pipeline_errors.append(f"evolution: {type(exc).__name__}: {exc}")
            dev = None
        if dev is not None:
            run = dev.run
            evo_summary = {
                "t0": run.t0, "t1": run.t1, "steps": run.steps,
                "max_deviation": dev.max_deviation,
                "max_mass_residual": float(np.max(run.mass_residual))
                if run.mass_residual.size else 0.0,
                "boundary_max": run.boundary_max,
                "final_support_radius": float(run.support[-1]),
            }
            table_to_csv(run_dir / "evolution.csv", {
                "t": run.times, "mass": run.mass, "energy": run.energy,
                "mass_residual": np.concatenate(([0.0], run.mass_residual)),
                "support": run.support,
            })
            table_to_csv(run_dir / "deviation.csv", {
                "t": run.snapshot_times, "deviation": dev.deviation,
            })

    report = RunReport(scenario=cfg, solver=solver_summary,
                       localization=loc_summary, evolution=evo_summary,
                       errors=pipeline_errors or None)
    ok = sol.converged and not pipeline_errors
    return report, (0 if ok else 2)


def analyze_localization(cfg, params, coeffs, grid, F, problem, sol) -> LocalizationReport:
    an = cfg["analysis"]
    x0 = an["x0"]
    prof = energy_profile(sol.g, problem.G, grid, params.m, x0=x0,
                          n_radii=int(an["n_radii"]))
    A, L, M = lemma_constants(params.a, coeffs.b, coeffs.c, params.R)
    margins = check_energy_inequality(prof, L, M)
    tol_disc = energy_inequality_tolerance(prof, L, M, grid.h)
    rm = rho_max(prof, an["rho0"], L, M, an["c_cal"], params)
    rad = support_radius(sol.g, an["support_threshold"])
    cont = k_eps_containment(U=gauge_backward(sol.g, coeffs.c_gauge), F=F,
                             eps=an["eps"], threshold_rel=an["support_threshold"])
    rhos = [params.R / 4.0, params.R / 2.0, params.R]
    ids = check_identities(sol.g, problem.G, params.a, coeffs.b, coeffs.c,
                           rhos, params.m, x0=x0)
    tg = thmG_margin(prof, an["rho0"], an["rho1"], an["eps_star"], params)
    return LocalizationReport(
        A=A, L=L, M=M,
        rho_max=rm.rho_max, tau_star=rm.tau_star,
        support_radius=rad,
        k_eps_contained=cont.contained,
        k_eps_worst_offender=cont.worst_offender
        if math.isfinite(cont.worst_offender) else -1e300,
        identity_residuals={
            f"{r:g}": {"real": float(ids.real[j]), "imag": float(ids.imag[j])}
            for j, r in enumerate(rhos)
        },
        thmG_margin=tg.margin,
        forcing_free_inside=tg.forcing_free_inside,
        min_inequality_margin=float(np.min(margins)),
        inequality_tolerance=tol_disc,
    )


def _sweep_one(args):
    cfg, amplitude = args
    sub = copy.deepcopy(cfg)
    sub["forcing"]["amplitude"] = amplitude
    params, coeffs, grid, F, problem = _build_problem(sub)
    sol = solve_profile(problem, initial_guess=_initial_guess(sub, grid))
    loc = analyze_localization(sub, params, coeffs, grid, F, problem, sol)
    norm_G = grid.norm_l2(problem.G.values)
    norm_h1 = grid.norm_h1(sol.g.values)
    return {
        "amplitude": amplitude,
        "norm_G_l2": norm_G,
        "norm_g_h1": norm_h1,
        "support_radius": loc.support_radius,
        "rho_max": loc.rho_max,
        "h1_ratio": norm_h1 / ((params.R ** 2 + 1.0) * norm_G) if norm_G > 0 else 0.0,
        "converged": 1.0 if sol.converged else 0.0,
    }


def sweep(config_path, out=None, jobs: int = 1, seed=None):
    """Run the scenario across its amplitude list; one CSV row per amplitude.

    Partial results are kept: a non-converged amplitude still contributes a
    row with converged = 0.
    """
    cfg = load_scenario(config_path)
    if seed is not None:
        cfg["seed"] = int(seed)
    amplitudes = cfg["sweep"]["amplitudes"]
    if not amplitudes:
        raise ConfigError("sweep requires a non-empty sweep.amplitudes list",
                          keys=["sweep.amplitudes"])
    if cfg["forcing"].get("kind") == "custom-csv":
        raise ConfigError("sweep requires a named forcing profile",
                          keys=["forcing.kind"])
    tasks = [(cfg, float(a)) for a in amplitudes]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_one, tasks))
    else:
        rows = [_sweep_one(t) for t in tasks]
    run_dir = output_root(out) / f"{cfg['name']}-sweep-{config_hash(cfg)}"
    run_dir.mkdir(parents=True, exist_ok=True)
    names = ["amplitude", "norm_G_l2", "norm_g_h1", "support_radius",
             "rho_max", "h1_ratio", "converged"]
    table_to_csv(run_dir / "sweep.csv",
                 {k: np.array([row[k] for row in rows]) for k in names})
    exit_code = 0 if all(row["converged"] for row in rows) else 2
    return rows, run_dir, exit_code


_PLOTS = {
    "profile_abs.dat": ("U.csv", "profile magnitude vs coordinate"),
    "energy_profile.dat": ("energy_profile.csv", "ball energies vs radius"),
    "balance.dat": ("evolution.csv", "mass/energy balance vs time"),
    "deviation.dat": ("deviation.csv", "self-similar deviation vs time"),
}


def emit_plots(run_dir) -> list:
    """Write gnuplot-style whitespace data files next to the report.

    Column layout is documented in '#' header lines; re-running over the
    same inputs writes byte-identical files.
    """
    run_dir = Path(run_dir)
    if not (run_dir / "report.json").exists():
        raise MissingArtifacts(f"{run_dir} does not contain report.json")
    written = []
    for name, (source, description) in _PLOTS.items():
        src = run_dir / source
        if not src.exists():
            if name in ("profile_abs.dat", "energy_profile.dat"):
                raise MissingArtifacts(f"{src} is missing")
            continue
        if source == "U.csv":
            with open(src, newline="") as fh:
                reader = csv.reader(fh)
                next(reader)
                rows = [(float(r[0]), abs(complex(float(r[1]), float(r[2]))))
                        for r in reader]
            cols = {"x": np.array([r[0] for r in rows]),
                    "absU": np.array([r[1] for r in rows])}
        else:
            cols = table_from_csv(src)
        dest = run_dir / name
        lines = [f"# {description}", "# columns: " + " ".join(cols)]
        arrays = list(cols.values())
        for i in range(len(arrays[0])):
            lines.append(" ".join(format(a[i], ".17g") for a in arrays))
        dest.write_text("\n".join(lines) + "\n")
        written.append(dest)
    return written
