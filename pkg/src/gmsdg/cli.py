"""Command-line entry point: ``gmsdg <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .coarse import coarse_solve
from .config import ExperimentConfig, apply_settings, load_config
from .errors import error_report
from .experiments import (ExperimentError, build_experiment, contrasts, run_lambda_plot,
                          run_penalty_sweep, run_table)
from .serialize import dump_basis, dump_solution, load_basis
from .spectral import METHODS

OUT_ENV = "GMSDG_OUT"


def _l_add(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty L_add list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat 'section.key = value' config file")
    common.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and output.dir)")
    common.add_argument("--method", choices=METHODS)
    common.add_argument("--eta", type=float, nargs="+", help="contrast value(s)")
    common.add_argument("--l-add", type=_l_add, help="comma separated L_add values")
    common.add_argument("--delta", type=float, help="penalty parameter")
    common.add_argument("--threads", type=int)
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key, e.g. --set mesh.M=4")

    p = argparse.ArgumentParser(prog="gmsdg", description="Spectral multiscale coarse spaces with SIPG coupling.")
    p.add_argument("--version", action="version", version=f"gmsdg {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("table", parents=[common], help="error table over L_add, one CSV per contrast")
    sw = sub.add_parser("penalty-sweep", parents=[common], help="coarse errors against penalty scaling")
    sw.add_argument("--scalings", type=float, nargs="+")
    sub.add_parser("lambda-plot", parents=[common], help="total error against 1/lambda_min")
    so = sub.add_parser("solve", parents=[common], help="fine and coarse solves, solution dumps")
    so.add_argument("--basis", type=Path, help="coarse basis from dump-basis (skips the eigensolves)")
    sub.add_parser("dump-basis", parents=[common], help="write coarse bases for reuse by 'solve'")
    return p


def resolve_config(args) -> tuple[ExperimentConfig, Path]:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = apply_settings(cfg, args.set)
    cfg = cfg.with_overrides(method=args.method, delta=args.delta, threads=args.threads,
                             l_add=args.l_add, eta=tuple(args.eta) if args.eta else None,
                             scalings=tuple(args.scalings) if getattr(args, "scalings", None) else None)
    out = args.out or os.environ.get(OUT_ENV) or cfg.out_dir
    return cfg, Path(out)


def _print(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=float))


def cmd_table(cfg, out):
    for t in run_table(cfg, out):
        print(f"wrote {out / (t.name + '.csv')}")
        print(t.to_csv(), end="")


def cmd_penalty_sweep(cfg, out):
    for t in run_penalty_sweep(cfg, out):
        print(f"wrote {out / (t.name + '.csv')} and .svg")


def cmd_lambda_plot(cfg, out):
    t = run_lambda_plot(cfg, out)
    print(f"wrote {out / (t.name + '.csv')} and .svg")
    for tag, c in t.meta["correlation"].items():
        print(f"eta={tag}: pearson(total, 1/lambda_min) = " + ("n/a" if c is None else f"{c:.4f}"))


def cmd_solve(cfg, out, basis=None):
    out.mkdir(parents=True, exist_ok=True)
    for eta in contrasts(cfg):
        exp = build_experiment(cfg, eta)
        tag = f"{exp.eta:g}"
        mesh = exp.system.mesh
        dump_solution(out / f"solution_fine_eta{tag}.txt", mesh, exp.u_ref)
        if basis is not None:
            space, meta = load_basis(basis)
            if sum(b.shape[0] for b in space.bases) != mesh.n_dofs:
                raise ValueError(f"basis {basis} does not match a {mesh.M}x{mesh.M} / m={mesh.m} mesh")
            spaces = [(int(np.max(space.L_add)), space)]
        else:
            spaces = [(k, exp.space(k)) for k in cfg.l_add]
        for k, space in spaces:
            sol = coarse_solve(exp.system, space)
            path = dump_solution(out / f"solution_{space.method}_L{k}_eta{tag}.txt", mesh, sol.u_H,
                                 space.method, k)
            rep = error_report(exp.system, exp.u_ref, sol.u_H, space.lambda_min)
            _print({"file": str(path), "eta": exp.eta, "L_add": k, "dim": space.dim, **rep.as_dict()})


def cmd_dump_basis(cfg, out):
    out.mkdir(parents=True, exist_ok=True)
    for eta in contrasts(cfg):
        exp = build_experiment(cfg, eta)
        for k in cfg.l_add:
            space = exp.space(k)
            path = out / f"basis_{space.method}_L{k}_eta{exp.eta:g}.npz"
            dump_basis(path, space, {"M": cfg.M, "m": cfg.m, "eta": exp.eta, "config_hash": cfg.hash()})
            print(f"wrote {path} (dim {space.dim})")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, out = resolve_config(args)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    try:
        if args.command == "table":
            cmd_table(cfg, out)
        elif args.command == "penalty-sweep":
            cmd_penalty_sweep(cfg, out)
        elif args.command == "lambda-plot":
            cmd_lambda_plot(cfg, out)
        elif args.command == "solve":
            cmd_solve(cfg, out, args.basis)
        else:
            cmd_dump_basis(cfg, out)
    except (ExperimentError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"gmsdg: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
