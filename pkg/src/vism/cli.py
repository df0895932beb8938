"""Command-line interface: solve, fit, sweep-q, sweep-n, born.

Exit codes: 0 success/converged, 2 solve finished without convergence,
1 any input/solver error, 64 unknown subcommand.
"""

import argparse
import logging
import os
import sys

import numpy as np

from .config import load_run_config
from .coupling import self_consistent_solve
from .errors import VismError
from .fitting import FitDataset, FitEntry, FitState, fit_parameters
from .io import (
    read_manifest,
    read_molecule,
    write_csv_rows,
    write_field,
    write_field_csv,
    write_json,
)
from .validation import (
    born_energy_analytical,
    born_pipeline,
    n_sweep,
    q_sweep,
    richardson_order,
)

COMMANDS = ("solve", "fit", "sweep-q", "sweep-n", "born")

USAGE = """usage: vism <command> [options]

commands:
  solve    minimise the solvation functional for one molecule
  fit      iterative NNLS parameterisation against a manifest
  sweep-q  total energies over a decreasing q_k sequence
  sweep-n  total energies over the volume-ratio exponent N
  born     sharp-interface Born-ion benchmark over a list of spacings

common options: --config FILE --molecule FILE --out DIR --threads N
                --csv --dump-fields
"""


def _build_parser():
    parser = argparse.ArgumentParser(prog="vism", add_help=True)
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--molecule", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--csv", action="store_true", default=None)
        p.add_argument("--dump-fields", action="store_true", default=None, dest="dump_fields")
        if name == "fit":
            p.add_argument("--manifest", required=True)
    return parser


def _overrides(args):
    return {
        "molecule": args.molecule,
        "out": args.out,
        "threads": args.threads,
        "csv": args.csv,
        "dump_fields": args.dump_fields,
    }


def _outdir(cfg):
    out = cfg["out"] or "."
    os.makedirs(out, exist_ok=True)
    return out


def cmd_solve(cfg):
    if not cfg["molecule"]:
        raise VismError("solve needs a molecule file (--molecule or config)")
    molecule = read_molecule(cfg["molecule"])
    params = cfg.build_params()
    solution = self_consistent_solve(
        molecule,
        params,
        coupling=cfg.build_coupling(),
        evolution=cfg.build_evolution(),
        h=cfg["h"],
        pad=cfg["pad"],
        probe_radius=cfg["probe_radius"],
        nonpolar_only=cfg["nonpolar"],
    )
    out = _outdir(cfg)
    payload = {
        "molecule": cfg["molecule"],
        "converged": solution.converged,
        "energy": solution.report.as_dict(),
        "outer_iterations": len(solution.trace),
        "trace": [
            {
                "outer_iter": row.outer_iter,
                "total_energy": row.total_energy,
                "max_du": row.max_du,
                "pb_residual": row.pb_residual,
            }
            for row in solution.trace
        ],
        "effective_config": cfg.effective_text(),
    }
    write_json(os.path.join(out, "energy.json"), payload)
    if cfg["dump_fields"]:
        writer = write_field_csv if cfg["csv"] else write_field
        suffix = ".csv" if cfg["csv"] else ""
        writer(os.path.join(out, f"u.field{suffix}"), solution.u.u)
        if solution.psi is not None:
            writer(os.path.join(out, f"psi.field{suffix}"), solution.psi.psi)
    print(f"total {solution.report.total:.6f} kcal/mol, converged={solution.converged}")
    return 0 if solution.converged else 2


def cmd_fit(cfg, manifest_path):
    raw_entries, manifest_nonpolar = read_manifest(manifest_path)
    nonpolar = manifest_nonpolar or cfg["nonpolar"]
    entries = [
        FitEntry(os.path.basename(path), read_molecule(path), dg)
        for path, dg in raw_entries
    ]
    dataset = FitDataset(entries, nonpolar=nonpolar)
    params = cfg.build_params()
    tags = sorted({t for e in entries for t in e.molecule.tags})
    init = FitState(
        gamma=cfg["gamma"],
        p_h=cfg["p_h"],
        eps_by_tag={t: params.lj.eps(t) for t in tags},
    )
    state = fit_parameters(dataset, init, params, cfg.build_fit())
    out = _outdir(cfg)
    payload = {
        "iterations": state.iteration,
        "rms": state.rms,
        "gamma": state.gamma,
        "p_h": state.p_h,
        "eps_by_tag": state.eps_by_tag,
        "residual_history": state.residual_history,
        "predictions": state.predictions,
        "nonpolar": nonpolar,
    }
    write_json(os.path.join(out, "fit.json"), payload)
    print(
        f"fit: rms={state.rms:.4f} gamma={state.gamma:.4f} p_h={state.p_h:.4f} "
        + " ".join(f"eps_{t}={v:.4f}" for t, v in state.eps_by_tag.items())
    )
    return 0


def _sweep_common(cfg, sweep_fn, values, out_name):
    if not cfg["molecule"]:
        raise VismError(f"{out_name} needs a molecule file (--molecule or config)")
    molecule = read_molecule(cfg["molecule"])
    params = cfg.build_params()
    result = sweep_fn(
        molecule,
        params,
        values,
        coupling=cfg.build_coupling(),
        evolution=cfg.build_evolution(),
        h=cfg["h"],
        pad=cfg["pad"],
        probe_radius=cfg["probe_radius"],
        threads=cfg.threads(),
    )
    rows = []
    for i, (axis, energy) in enumerate(zip(result.axis, result.energies)):
        diff = result.diffs[i - 1] if i > 0 else float("nan")
        rows.append((float(axis), float(energy), float(diff)))
    out = _outdir(cfg)
    write_csv_rows(os.path.join(out, out_name), "axis_value total_energy diff", rows)
    failed = [e for e in result.errors if e]
    for err in failed:
        print(f"sweep entry failed: {err}", file=sys.stderr)
    print(f"{out_name}: {len(values) - len(failed)}/{len(values)} entries solved")
    return 0 if not failed else 2


def cmd_sweep_q(cfg):
    return _sweep_common(cfg, q_sweep, list(cfg["q_list"]), "sweep_q.csv")


def cmd_sweep_n(cfg):
    values = [int(v) for v in cfg["n_list"]]
    return _sweep_common(cfg, n_sweep, values, "sweep_n.csv")


def cmd_born(cfg):
    params = cfg.build_params()
    radius = cfg["born_radius"]
    charge = cfg["born_charge"]
    exact = born_energy_analytical(charge, radius, params.eps_m, params.eps_s, params.k_e)
    rows = []
    errors = []
    h_list = list(cfg["h_list"])
    for h in h_list:
        energy = born_pipeline(radius, charge, params, h, pad=cfg["pad"])
        err = abs(energy - exact)
        errors.append(err)
        rows.append((float(h), float(energy), float(err)))
    out = _outdir(cfg)
    write_csv_rows(os.path.join(out, "born.csv"), "h energy abs_error", rows)
    msg = f"born: analytic {exact:.4f}"
    if len([e for e in errors if e > 0]) >= 2:
        msg += f", observed order {richardson_order(h_list, errors):.2f}"
    print(msg)
    return 0


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=os.environ.get("VISM_LOG", "WARNING"))
    if not argv or argv[0] in ("-h", "--help"):
        print(USAGE)
        return 0
    if argv[0] not in COMMANDS:
        print(USAGE, file=sys.stderr)
        return 64

    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_run_config(args.config, _overrides(args))
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "fit":
            return cmd_fit(cfg, args.manifest)
        if args.command == "sweep-q":
            return cmd_sweep_q(cfg)
        if args.command == "sweep-n":
            return cmd_sweep_n(cfg)
        if args.command == "born":
            return cmd_born(cfg)
    except (VismError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 64


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
