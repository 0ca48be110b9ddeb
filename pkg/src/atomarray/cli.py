"""Scenario runner: JSON configs in, CSV/JSON artifacts + run manifest out.

Exit codes: 0 ok, 2 config error, 3 numeric failure.
Every output table carries units in its header row; identical config and
seed reproduce identical bytes (accumulation order is fixed by realization
index, not by scheduling).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NonConvergenceError
from .geometry import (LAMBDA, Geometry, LatticeTrapSpec, build_bilayer,
                       build_ring, build_square_lattice, build_stack,
                       wannier_width)
from .streams import seed_streams

SCENARIOS = ("spectrum", "eigen", "transmit", "bistab", "bands", "stack",
              "qme", "traj", "g2", "disorder", "checks")

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["scenario"],
    "additionalProperties": False,
    "properties": {
        "scenario": {"enum": list(SCENARIOS)},
        "seed": {"type": "integer", "minimum": 0},
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["square", "bilayer", "stack", "ring"]},
                "nx": {"type": "integer", "minimum": 1},
                "ny": {"type": "integer", "minimum": 1},
                "spacing_wl": {"type": "number", "exclusiveMinimum": 0},
                "separation_wl": {"type": "number", "exclusiveMinimum": 0},
                "separations_wl": {"type": "array",
                                   "items": {"type": "number",
                                             "exclusiveMinimum": 0}},
                "natoms": {"type": "integer", "minimum": 2},
                "radius_wl": {"type": "number", "exclusiveMinimum": 0},
                "lattice_depth": {"type": "number", "exclusiveMinimum": 0},
                "ell_x_wl": {"type": "number", "minimum": 0},
            },
        },
        "transition": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "levels": {"enum": [2, 4]},
                "orientation": {"type": "array", "items": {"type": "number"},
                                "minItems": 3, "maxItems": 3},
                "zeeman": {"type": "array", "items": {"type": "number"},
                           "minItems": 3, "maxItems": 3},
            },
        },
        "drive": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["plane", "gaussian"]},
                "rabi": {"type": "number"},
                "waist_wl": {"type": "number", "exclusiveMinimum": 0},
                "polarization": {"type": "array", "items": {"type": "number"},
                                 "minItems": 3, "maxItems": 3},
            },
        },
        "detuning_grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["start", "stop", "num"],
            "properties": {
                "start": {"type": "number"},
                "stop": {"type": "number"},
                "num": {"type": "integer", "minimum": 2},
            },
        },
        "intensity_grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["start", "stop", "num"],
            "properties": {
                "start": {"type": "number", "exclusiveMinimum": 0},
                "stop": {"type": "number", "exclusiveMinimum": 0},
                "num": {"type": "integer", "minimum": 2},
            },
        },
        "spacing_grid_wl": {"type": "array",
                            "items": {"type": "number", "exclusiveMinimum": 0}},
        "q_path": {"type": "array",
                   "items": {"type": "array", "items": {"type": "number"},
                             "minItems": 2, "maxItems": 2}},
        "n_realizations": {"type": "integer", "minimum": 2},
        "n_trajectories": {"type": "integer", "minimum": 1},
        "jump_basis": {"enum": ["source", "directional"]},
        "t_final": {"type": "number", "exclusiveMinimum": 0},
        "n_times": {"type": "integer", "minimum": 2},
        "tau_max": {"type": "number", "exclusiveMinimum": 0},
        "detuning": {"type": "number"},
        "tolerances": {"type": "object"},
        "threads": {"type": "integer", "minimum": 1},
        "bit_stable": {"type": "boolean"},
        "out_dir": {"type": "string"},
    },
}


class ConfigError(ValueError):
    pass


def validate_config(config: dict) -> None:
    import jsonschema
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {err.message}") from None


def geometry_from_config(cfg: dict) -> Geometry:
    g = cfg.get("geometry", {})
    kind = g.get("kind", "square")
    a = g.get("spacing_wl", 0.68) * LAMBDA
    nx, ny = g.get("nx", 10), g.get("ny", 10)
    if kind == "square":
        geo = build_square_lattice(nx, ny, a)
    elif kind == "bilayer":
        geo = build_bilayer(nx, ny, a, g.get("separation_wl", 0.5) * LAMBDA)
    elif kind == "stack":
        seps = [s * LAMBDA for s in g.get("separations_wl", [0.5])]
        geo = build_stack(nx, ny, a, seps)
    else:
        geo = build_ring(g.get("natoms", 8), g.get("radius_wl", 1.0) * LAMBDA)
    if "lattice_depth" in g:
        spec = LatticeTrapSpec(a, g["lattice_depth"],
                               g.get("ell_x_wl", 0.0) * LAMBDA)
        geo = geo.with_fluctuation(wannier_width(spec), spec.ell_x)
    return geo


def transition_from_config(cfg: dict):
    from .lli import TransitionSpec
    t = cfg.get("transition", {})
    return TransitionSpec(levels=t.get("levels", 2),
                          orientation=tuple(t.get("orientation", (0, 1, 0))),
                          zeeman=tuple(t.get("zeeman", (0, 0, 0))))


def drive_from_config(cfg: dict):
    from .drives import GaussianBeam, PlaneWave
    d = cfg.get("drive", {})
    pol = tuple(d.get("polarization", (0, 1, 0)))
    amp = d.get("rabi", 1.0)
    if d.get("kind", "gaussian") == "plane":
        return PlaneWave(amplitude=amp, polarization=pol)
    return GaussianBeam(waist=d.get("waist_wl", 3.0) * LAMBDA,
                        amplitude=amp, polarization=pol)


def detuning_grid(cfg, default=(-4.0, 4.0, 81)):
    g = cfg.get("detuning_grid")
    if g is None:
        return np.linspace(*default)
    return np.linspace(g["start"], g["stop"], g["num"])


def write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v
                        for v in row])


# ---------------------------------------------------------------------------
# scenario handlers: each returns a list of artifact paths

def run_spectrum(cfg, out):
    """Uniform-mode (infinite lattice) spectrum with energy balance, plus
    the LLI amplitude response."""
    from .infinite import lattice_sums, single_mode_rt
    from .observables import rt_beyond_lli
    a = cfg.get("geometry", {}).get("spacing_wl", 0.68) * LAMBDA
    om, gt = lattice_sums(a).uniform_mode(1)
    rabi = cfg.get("drive", {}).get("rabi", 1e-3)
    rows, amp_rows = [], []
    for d in detuning_grid(cfg):
        for rep in rt_beyond_lli(d, om, gt, rabi):
            rows.append((d, rep.transmittance, rep.reflectance,
                         rep.incoherent_flux, rep.residual))
        r, t = single_mode_rt(d, om, gt)
        amp_rows.append((d, r.real, r.imag, abs(r) ** 2, abs(t) ** 2))
    path = out / "spectrum.csv"
    write_csv(path, ["delta[gamma]", "T[1]", "R[1]", "F_inc[1]",
                     "residual[1]"], rows)
    resp = out / "response.csv"
    write_csv(resp, ["delta[gamma]", "Re_r[1]", "Im_r[1]", "R[1]", "T[1]"],
              amp_rows)
    return [path, resp]


def run_eigen(cfg, out):
    from . import lli
    geo = geometry_from_config(cfg)
    tr = transition_from_config(cfg)
    system = lli.assemble(geo, tr, drive_from_config(cfg))
    table = lli.eigen_table(system)
    path = out / "eigenmodes.csv"
    write_csv(path, ["mode[1]", "shift[gamma]", "linewidth[gamma]",
                     "occupation[1]"], table)
    counts, edges = np.histogram([r[2] for r in table],
                                 bins=np.geomspace(1e-4, 1e2, 61))
    hist = out / "linewidth_histogram.csv"
    write_csv(hist, ["linewidth_lo[gamma]", "linewidth_hi[gamma]", "count[1]"],
              [(edges[i], edges[i + 1], int(c)) for i, c in enumerate(counts)])
    return [path, hist]


def run_transmit(cfg, out):
    from . import lli
    from .observables import dipole_table, lorentzian_fit, transmission_reflection
    geo = geometry_from_config(cfg)
    tr = transition_from_config(cfg)
    beam = drive_from_config(cfg)
    system = lli.assemble(geo, tr, beam)
    rows = []
    for d in detuning_grid(cfg):
        b = lli.steady_state(system, d)
        t, r = transmission_reflection(dipole_table(system, b), geo, beam)
        rows.append((d, abs(t) ** 2, abs(r) ** 2, t.real, t.imag))
    path = out / "transmission.csv"
    write_csv(path, ["delta[gamma]", "T[1]", "R[1]", "Re_t[1]", "Im_t[1]"],
              rows)
    deltas = [r[0] for r in rows]
    A, d0, w, c = lorentzian_fit(deltas, [r[2] for r in rows])
    meta = out / "transmit_fit.json"
    meta.write_text(json.dumps({"fitted_hwhm_gamma": w,
                                "resonance_gamma": d0,
                                "peak_reflectance": A + c}, indent=2))
    # far-field intensity map at the fitted resonance
    from .observables import farfield_amplitude, sphere_grid
    b = lli.steady_state(system, float(d0))
    nhat, _ = sphere_grid(24, 48)
    I = np.sum(np.abs(farfield_amplitude(dipole_table(system, b),
                                         geo, nhat)) ** 2, axis=1)
    theta = np.arccos(np.clip(nhat[:, 0], -1, 1))
    phi = np.arctan2(nhat[:, 2], nhat[:, 1])
    fmap = out / "farfield_map.csv"
    write_csv(fmap, ["theta[rad]", "phi[rad]", "intensity[arb]"],
              list(zip(theta, phi, I)))
    return [path, meta, fmap]


def run_bistab(cfg, out):
    from .infinite import lattice_sums
    from .semiclassical import (has_bistable_window, max_bistable_spacing,
                                uniform_steady_state)
    grid = cfg.get("spacing_grid_wl")
    paths = []
    if grid:
        a_grid = [s * LAMBDA for s in grid]
        amax = max_bistable_spacing(a_grid)
        rows = [(a / LAMBDA, int(has_bistable_window(a))) for a in a_grid]
        p = out / "bistable_spacings.csv"
        write_csv(p, ["spacing[lambda]", "bistable[0/1]"], rows)
        (out / "bistab_summary.json").write_text(json.dumps(
            {"max_bistable_spacing_wl": amax / LAMBDA,
             "analytic_bound_wl": float(np.sqrt(np.pi / 3) / (2 * np.pi))},
            indent=2))
        paths += [p, out / "bistab_summary.json"]
    a = cfg.get("geometry", {}).get("spacing_wl", 0.1) * LAMBDA
    om, gt = lattice_sums(a).uniform_mode(1)
    ig = cfg.get("intensity_grid", {"start": 1e-2, "stop": 1e3, "num": 25})
    intensities = np.geomspace(ig["start"], ig["stop"], ig["num"])
    rows = []
    for d in detuning_grid(cfg, default=(-max(3, 4 * abs(om)),
                                         max(3, 4 * abs(om)), 41)):
        for I in intensities:
            sols = uniform_steady_state(d, np.sqrt(I / 2), om, gt)
            for i, s in enumerate(sols):
                rows.append((d, I, i, s.rho_ee, s.inversion, int(s.stable)))
    p = out / "branches.csv"
    write_csv(p, ["delta[gamma]", "I[I_sat]", "branch[1]", "rho_ee[1]",
                  "Z[1]", "stable[0/1]"], rows)
    return paths + [p]


def run_bands(cfg, out):
    from .infinite import band_structure
    a = cfg.get("geometry", {}).get("spacing_wl", 0.5) * LAMBDA
    qpath = cfg.get("q_path")
    if qpath is None:
        edge = np.pi / a
        s = np.linspace(0, 1, 25)
        qpath = ([(x * edge, 0.0) for x in s]
                 + [(edge, x * edge) for x in s]
                 + [((1 - x) * edge, (1 - x) * edge) for x in s])
    else:
        qpath = [(qy * np.pi / a, qz * np.pi / a) for qy, qz in qpath]
    rows = []
    for q, ev in band_structure(a, qpath):
        if ev is None:
            rows.append((q[0] * a / np.pi, q[1] * a / np.pi)
                        + ("nan",) * 6)
            continue
        flat = []
        for e in ev:
            flat += [e.real, e.imag]
        rows.append((q[0] * a / np.pi, q[1] * a / np.pi) + tuple(flat))
    path = out / "bands.csv"
    write_csv(path, ["qy[pi/a]", "qz[pi/a]",
                     "shift1[gamma]", "width1[gamma]",
                     "shift2[gamma]", "width2[gamma]",
                     "shift3[gamma]", "width3[gamma]"], rows)
    return [path]


def run_stack(cfg, out):
    from .stacked1d import LayerStack, system_rt
    g = cfg.get("geometry", {})
    a = g.get("spacing_wl", 0.55) * LAMBDA
    seps = [s * LAMBDA for s in g.get("separations_wl", [0.5])]
    x = np.concatenate([[0.0], np.cumsum(seps)])
    from .infinite import lattice_sums
    om, gt = lattice_sums(a).uniform_mode(1)
    stack = LayerStack.uniform(x, 1.0 + gt, om)
    rows = []
    for d in detuning_grid(cfg):
        t, r = system_rt(stack, d)
        rows.append((d, abs(t) ** 2, abs(r) ** 2, np.angle(t)))
    path = out / "stack_spectrum.csv"
    write_csv(path, ["delta[gamma]", "T[1]", "R[1]", "arg_t[rad]"], rows)
    return [path]


def run_qme(cfg, out):
    from .quantum import (build_quantum_system, evolve_qme, mean_lowering,
                          steady_state_qme)
    geo = geometry_from_config(cfg)
    tr = transition_from_config(cfg)
    system = build_quantum_system(geo, tr, drive_from_config(cfg))
    tgrid = np.linspace(0, cfg.get("t_final", 20.0), cfg.get("n_times", 41))
    psi0 = system.ops.ground_state()
    rhos = evolve_qme(np.outer(psi0, psi0.conj()), system, tgrid)
    pop_op = system.population_operator()
    rows = [(t, float(np.real(np.trace(pop_op @ r))))
            for t, r in zip(tgrid, rhos)]
    path = out / "qme_populations.csv"
    write_csv(path, ["t[1/gamma]", "total_excited[1]"], rows)
    rho_ss = steady_state_qme(system)
    means = mean_lowering(rho_ss, system)
    meta = out / "qme_steady.json"
    meta.write_text(json.dumps(
        {"steady_population": float(np.real(np.trace(pop_op @ rho_ss))),
         "mean_lowering_abs": np.abs(means).tolist()}, indent=2))
    return [path, meta]


def run_traj(cfg, out, seed):
    from .quantum import (build_quantum_system, directional_basis, evolve_qme,
                          run_trajectories, source_mode_basis, trace_distance)
    geo = geometry_from_config(cfg)
    tr = transition_from_config(cfg)
    system = build_quantum_system(geo, tr, drive_from_config(cfg))
    tgrid = np.linspace(0, cfg.get("t_final", 5.0), cfg.get("n_times", 11))
    psi0 = system.ops.ground_state()
    n_traj = cfg.get("n_trajectories", 2000)
    directional = cfg.get("jump_basis", "source") == "directional"
    basis = (directional_basis(system, n_theta=8, n_phi=16) if directional
             else source_mode_basis(system))
    res = run_trajectories(psi0, system, basis, tgrid, n_traj, seed)
    ref = evolve_qme(np.outer(psi0, psi0.conj()), system, tgrid)
    rows = [(t, res.populations[i],
             trace_distance(res.rho[i], ref[i]))
            for i, t in enumerate(tgrid)]
    path = out / "trajectories.csv"
    write_csv(path, ["t[1/gamma]", "mean_excited[1]", "trace_distance[1]"],
              rows)
    artifacts = [path]
    if directional:
        # photon detection records: directional jumps only
        click_rows = [(t, basis.directions[ch][0], basis.directions[ch][1])
                      for _, t, ch in res.clicks]
        clicks = out / "clicks.csv"
        write_csv(clicks, ["t[1/gamma]", "theta[rad]", "phi[rad]"],
                  click_rows)
        artifacts.append(clicks)
    return artifacts


def run_g2(cfg, out):
    from .quantum import build_quantum_system, g2_analytic, g2_regression
    geo = geometry_from_config(cfg)
    tr = transition_from_config(cfg)
    system = build_quantum_system(geo, tr, drive_from_config(cfg))
    tau = np.linspace(0, cfg.get("tau_max", 10.0), 101)
    vals = g2_regression(system, tau)
    rabi = cfg.get("drive", {}).get("rabi", 1.0)
    ratio = 2 * abs(rabi) ** 2
    ana = g2_analytic(tau, ratio)
    rows = list(zip(tau, vals, ana))
    path = out / "g2.csv"
    write_csv(path, ["tau[1/gamma]", "g2_regression[1]",
                     "g2_single_atom_closed_form[1]"], rows)
    return [path]


def run_disorder(cfg, out, seed):
    from .observables import disorder_average
    geo = geometry_from_config(cfg)
    tr = transition_from_config(cfg)
    beam = drive_from_config(cfg)
    n = cfg.get("n_realizations", 16)
    rows = []
    for d in detuning_grid(cfg, default=(-3, 3, 25)):
        streams = seed_streams(seed, n)
        rep = disorder_average(geo, tr, beam, n, streams, delta=d)
        rows.append((d, abs(rep.mean_t) ** 2, abs(rep.mean_r) ** 2,
                     rep.stderr_t, rep.stderr_r))
    path = out / "disorder_spectrum.csv"
    write_csv(path, ["delta[gamma]", "T[1]", "R[1]", "stderr_t[1]",
                     "stderr_r[1]"], rows)
    return [path]


def run_checks(cfg, out):
    """Verification bundle: appendix integrals, rate-formula equivalence on
    random configurations, and uniform-mode energy closure."""
    from .geometry import Geometry
    from .lli import TransitionSpec
    from .observables import (farfield_rate_quadrature, rt_beyond_lli,
                              total_scattering_rate)
    from .stacked1d import appendix_checks
    results = {}
    app = appendix_checks()
    results["appendix_field_dev"] = app["field_rel_dev"]
    results["appendix_recursion_dev"] = app["recursion_rel_dev"]
    results["appendix_linewidth_dev"] = app["linewidth_rel_dev"]
    ok = (app["field_rel_dev"] < 1e-3 and app["recursion_rel_dev"] < 1e-8
          and app["linewidth_rel_dev"] < 1e-4)

    rng = np.random.default_rng(11)
    worst = 0.0
    tr = TransitionSpec(levels=2, orientation=(0, 1, 0))
    for _ in range(10):
        n = rng.integers(2, 6)
        pos = rng.uniform(-1.5 * LAMBDA, 1.5 * LAMBDA, size=(n, 3))
        geo = Geometry(pos)
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        C = A @ A.conj().T
        C /= np.trace(C).real
        n_s = total_scattering_rate(C, geo, tr)
        n_q = farfield_rate_quadrature(C, geo, tr, n_theta=72, n_phi=144)
        worst = max(worst, abs(n_s - n_q) / abs(n_s))
    results["rate_quadrature_rel_dev"] = worst
    ok = ok and worst < 1e-6

    res_worst = 0.0
    for d in np.linspace(-3, 3, 11):
        for I in np.geomspace(0.01, 100, 11):
            for rep in rt_beyond_lli(d, -0.6, -0.4, np.sqrt(I / 2)):
                res_worst = max(res_worst, abs(rep.residual))
    results["energy_closure_residual"] = res_worst
    ok = ok and res_worst < 1e-10

    results["pass"] = bool(ok)
    path = out / "checks.json"
    path.write_text(json.dumps(results, indent=2))
    if not ok:
        raise NonConvergenceError(f"verification failures: {results}")
    return [path]


def run(config: dict, out_dir=None, seed=None) -> dict:
    """Execute one scenario; returns the manifest dict."""
    validate_config(config)
    scenario = config["scenario"]
    seed = seed if seed is not None else config.get("seed", 0)
    out = Path(out_dir or config.get("out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    if scenario == "spectrum":
        artifacts = run_spectrum(config, out)
    elif scenario == "eigen":
        artifacts = run_eigen(config, out)
    elif scenario == "transmit":
        artifacts = run_transmit(config, out)
    elif scenario == "bistab":
        artifacts = run_bistab(config, out)
    elif scenario == "bands":
        artifacts = run_bands(config, out)
    elif scenario == "stack":
        artifacts = run_stack(config, out)
    elif scenario == "qme":
        artifacts = run_qme(config, out)
    elif scenario == "traj":
        artifacts = run_traj(config, out, seed)
    elif scenario == "g2":
        artifacts = run_g2(config, out)
    elif scenario == "disorder":
        artifacts = run_disorder(config, out, seed)
    else:
        artifacts = run_checks(config, out)
    import scipy
    manifest = {
        "scenario": scenario,
        "config_sha256": hashlib.sha256(
            json.dumps(config, sort_keys=True).encode()).hexdigest(),
        "seed": seed,
        "versions": {"atomarray": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "wall_time_s": round(time.time() - t0, 3),
        "artifacts": [str(p) for p in artifacts],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="atomarray",
        description="cooperative-scattering scenario runner")
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap for ensembles (results identical)")
    parser.add_argument("--bit-stable", action="store_true",
                        help="force serial accumulation (default behaviour "
                             "is already index-ordered)")
    parser.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    try:
        validate_config(config)
    except ConfigError as err:
        print(str(err), file=sys.stderr)
        return 2
    try:
        manifest = run(config, out_dir=args.out, seed=args.seed)
    except ConfigError as err:
        print(str(err), file=sys.stderr)
        return 2
    except Exception as err:
        print(f"numeric failure: {type(err).__name__}: {err}",
              file=sys.stderr)
        return 3
    print(json.dumps(manifest, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
