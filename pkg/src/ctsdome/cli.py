"""Command-line entry point: ``ctsdome <command> --config run.yaml --out results/``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .deploy import (build_schedule, cluster_study, compare_static_dynamic, design_material,
                     run_dynamic_deploy, start_dome, sweep_trajectory)
from .dynamics import DynamicsConfig
from .errors import CTSError, ConfigError
from .io import RunConfig, config_to_dict, load_config, write_dome, write_table
from .levy import ELEMENT_GROUPS, design_dome
from .modal import natural_frequencies, tangent_stiffness

EXIT_OK, EXIT_SOLVE, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
COMMANDS = ("generate", "cluster-study", "sweep", "modes", "deploy", "compare")


def _design(cfg: RunConfig, **overrides):
    return design_dome(cfg.dome.params(**overrides), anchor_force=cfg.dome.ib_prestress_n,
                       capacities=cfg.materials.capacities(),
                       mass_scale=cfg.materials.mass_scale)


def _material(cfg):
    params = cfg.dome.params()
    return design_material(params, cfg.materials.mass_scale, cfg.materials.capacities())


def _sweep(cfg):
    return sweep_trajectory(cfg.dome.params(), cfg.sweep.c_grid, material=_material(cfg))


def cmd_generate(cfg, out):
    dome = _design(cfg)
    write_dome(dome, out / "dome.json")
    return ["dome.json"]


def cmd_cluster_study(cfg, out):
    rows = cluster_study(cfg.dome.params(), cfg.cluster_study.n_c,
                         mass_scale=cfg.materials.mass_scale,
                         capacities=cfg.materials.capacities())
    write_table(out / "cluster_study.csv", ["n_c", "n_p", "lambda_min", "f_min"], rows)
    return ["cluster_study.csv"]


def cmd_sweep(cfg, out):
    sw = _sweep(cfg)
    header = ["c", "n_p", "lambda_min", "f_min"] + [f"force_{g}" for g in ELEMENT_GROUPS]
    rows = [[pt.c, pt.n_p, pt.lambda_min, pt.f_min] + [pt.prestress[g] for g in ELEMENT_GROUPS]
            for pt in sw.points]
    write_table(out / "trajectory.csv", header, rows)
    header = ["c"] + [f"l0_{i}_{lab}" for i, lab in enumerate(sw.labels)]
    write_table(out / "rest_lengths.csv", header,
                [[pt.c] + list(pt.rest_lengths_c) for pt in sw.points])
    return ["trajectory.csv", "rest_lengths.csv"]


def cmd_modes(cfg, out):
    dome = _design(cfg)
    s = dome.structure
    k = cfg.modes.k_modes
    res = natural_frequencies(s, k_modes=k, K_Taa=tangent_stiffness(s).K_Taa)
    write_table(out / "modal.csv", ["mode", "stiffness_eigenvalue", "frequency_hz"],
                [[i + 1, lam, f] for i, (lam, f) in
                 enumerate(zip(res.stiffness_eigenvalues, res.frequencies))])
    dofs = s.nodes.free_dofs
    header = ["node", "axis"] + [f"mode_{i + 1}" for i in range(res.mode_shapes.shape[1])]
    rows = [[d // 3, d % 3] + list(res.mode_shapes[r]) for r, d in enumerate(dofs)]
    write_table(out / "mode_shapes.csv", header, rows)
    return ["modal.csv", "mode_shapes.csv"]


def _dyn_config(cfg):
    d = cfg.deploy
    return DynamicsConfig(dt=d.dt_s, damping_ratio=d.damping_ratio, gravity_on=d.gravity_on,
                          newton_tol=d.newton_tol_n, newton_max_iter=d.newton_max_iter,
                          record_every=d.record_every)


def _one_run(args):
    cfg, t_total = args
    d = cfg.deploy
    sw = _sweep(cfg)
    mat = _material(cfg)
    c0, c1 = (d.c_end, d.c_start) if d.fold else (d.c_start, d.c_end)
    dome = start_dome(cfg.dome.params(), c0, mat)
    schedule = build_schedule(sw, c0, c1, t_total)
    run = run_dynamic_deploy(dome, _dyn_config(cfg), schedule)
    return run, sw


def _runs(cfg, threads):
    jobs = [(cfg, t) for t in cfg.deploy.t_total_s]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_one_run, jobs))
    return [_one_run(j) for j in jobs]


def _tag(t_total):
    return format(t_total, "g").replace(".", "p")


def cmd_deploy(cfg, out, threads=1):
    written = []
    for t_total, (run, sw) in zip(cfg.deploy.t_total_s, _runs(cfg, threads)):
        rec = run.record
        tag = _tag(t_total)
        n = rec.coords.shape[1] // 3
        coord_cols = [f"{a}{i}" for i in range(n) for a in "xyz"]
        write_table(out / f"deploy_{tag}s_coordinates.csv", ["time"] + coord_cols,
                    np.column_stack([rec.times, rec.coords]))
        force_cols = [f"t_{i}_{lab}" for i, lab in enumerate(sw.labels)]
        write_table(out / f"deploy_{tag}s_forces.csv", ["time"] + force_cols,
                    np.column_stack([rec.times, rec.member_forces_c]))
        l0_cols = [f"l0_{i}_{lab}" for i, lab in enumerate(sw.labels)]
        write_table(out / f"deploy_{tag}s_rest_lengths.csv", ["time"] + l0_cols,
                    np.column_stack([rec.times, rec.actuation]))
        written += [f"deploy_{tag}s_{k}.csv" for k in ("coordinates", "forces", "rest_lengths")]
    return written


def cmd_compare(cfg, out, threads=1):
    header = ["t_total", "rms_OTN_x", "rms_ITN_x", "peak_OTN_x", "peak_ITN_x",
              "hold_error_OTN_x", "hold_error_ITN_x", "peak_force_OB", "peak_force_IB",
              "force_ratio_OB", "force_ratio_IB"]
    rows = []
    for t_total, (run, sw) in zip(cfg.deploy.t_total_s, _runs(cfg, threads)):
        r = compare_static_dynamic(run, sw)
        rows.append([t_total, r.rms["OTN"], r.rms["ITN"], r.peak["OTN"], r.peak["ITN"],
                     r.hold_mean_error["OTN"], r.hold_mean_error["ITN"],
                     r.peak_force["OB"], r.peak_force["IB"],
                     r.force_ratio["OB"], r.force_ratio["IB"]])
    write_table(out / "compare.csv", header, rows)
    return ["compare.csv"]


def build_parser():
    ap = argparse.ArgumentParser(prog="ctsdome", description=__doc__)
    ap.add_argument("--version", action="version", version=f"ctsdome {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="YAML run configuration")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--seedless", action="store_true",
                        help="assert that the run uses no random numbers")
    return ap


def _check_seedless(raw):
    if isinstance(raw, dict):
        for k, v in raw.items():
            if "seed" in str(k).lower():
                raise ConfigError(f"{k}: no random input is allowed with --seedless")
            _check_seedless(v)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if args.seedless:
            _check_seedless(config_to_dict(cfg))
        cfg.dome.params()  # validates divisibility and ranges up front
    except CTSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        handler = {"generate": cmd_generate, "cluster-study": cmd_cluster_study,
                   "sweep": cmd_sweep, "modes": cmd_modes}.get(args.command)
        if handler is not None:
            files = handler(cfg, args.out)
        elif args.command == "deploy":
            files = cmd_deploy(cfg, args.out, args.threads)
        else:
            files = cmd_compare(cfg, args.out, args.threads)
    except CTSError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    manifest = {"command": args.command, "tool_version": __version__,
                "config": config_to_dict(cfg), "outputs": files,
                "wall_time_s": time.perf_counter() - start}
    (args.out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
