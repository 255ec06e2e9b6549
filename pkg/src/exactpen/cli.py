"""Command-line entry point: ``exactpen {generate,solve,experiment,verify}``.

Exit codes: 0 success, 1 a check or trial failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys

import numpy as np

from . import matio
from .errors import ExactPenError
from .experiments import (ExperimentConfig, box_radii, generate_instance_full, run_trials)
from .scalar_phi import PhiSpec, make_phi
from .solver import DecompositionInstance, Schedule, SolverOptions, default_schedule, gep_mscra
from .verify import verify_suite

EXIT_OK, EXIT_FAIL, EXIT_BAD_INPUT = 0, 1, 2


class BadInput(Exception):
    pass


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise BadInput(f"cannot read config {path}: {exc}") from None


def _experiment_config(args) -> ExperimentConfig:
    obj = _load_json(args.config)
    if args.seed is not None:
        obj["seed"] = args.seed
    if getattr(args, "output", None) and "output_path" in ExperimentConfig.__dataclass_fields__:
        obj["output_path"] = args.output
    try:
        return ExperimentConfig.from_json(obj)
    except (TypeError, ValueError, ExactPenError) as exc:
        raise BadInput(f"invalid experiment config: {exc}") from None


def _threads(n):
    if not n:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def cmd_generate(args) -> int:
    cfg = _experiment_config(argparse.Namespace(config=args.config, seed=args.seed))
    out = args.output or "."
    os.makedirs(out, exist_ok=True)
    ext = "csv" if args.format == "csv" else "bin"
    gen = generate_instance_full(cfg, args.trial)
    radii = box_radii(gen.M_R, gen.M_S)
    for name, X in (("M", gen.M), ("M_R", gen.M_R), ("M_S", gen.M_S)):
        matio.write_matrix(os.path.join(out, f"{name}.{ext}"), X, args.format)
    meta = {"trial": args.trial, "gamma1": radii.gamma1, "gamma2": radii.gamma2,
            "flags": list(radii.flags), "config": cfg.to_json()}
    with open(os.path.join(out, "instance.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
    print(json.dumps({"output": os.path.abspath(out), "shape": list(gen.M.shape),
                      "gamma1": radii.gamma1, "gamma2": radii.gamma2}))
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        M = matio.read_matrix(args.input)
    except (OSError, ExactPenError, ValueError) as exc:
        raise BadInput(str(exc)) from None
    obj = _load_json(args.config) if args.config else {}
    try:
        phi = PhiSpec.from_json(obj["phi"]) if "phi" in obj else make_phi("Scad")
        n = max(M.shape)
        sched = Schedule.from_json(obj["schedule"], n=n) if "schedule" in obj else default_schedule(n)
        opts = SolverOptions(**obj.get("options", {}))
        g1 = args.gamma1 if args.gamma1 is not None else obj.get("gamma1")
        g2 = args.gamma2 if args.gamma2 is not None else obj.get("gamma2")
        if g1 is None or g2 is None:
            raise BadInput("box radii gamma1 and gamma2 are required")
        inst = DecompositionInstance(M, float(g1), float(g2), obj.get("lam", 1.0), obj.get("nu", 1.0))
    except (KeyError, TypeError, ValueError, ExactPenError) as exc:
        raise BadInput(f"invalid solve input: {exc}") from None
    report = gep_mscra(inst, phi, sched, opts)
    summary = report.to_json()
    if args.output:
        os.makedirs(args.output, exist_ok=True)
        ext = "csv" if args.format == "csv" else "bin"
        matio.write_matrix(os.path.join(args.output, f"X_hat.{ext}"), report.X_hat, args.format)
        matio.write_matrix(os.path.join(args.output, f"Y_hat.{ext}"), report.Y_hat, args.format)
        with open(os.path.join(args.output, "report.json"), "w") as fh:
            json.dump(summary, fh, indent=2, default=float)
    print(json.dumps({k: summary[k] for k in ("final_rank", "final_sparsity", "outer_iters",
                                              "certificates_ok", "flags")}))
    return EXIT_OK if report.certificates_ok else EXIT_FAIL


def cmd_experiment(args) -> int:
    cfg = _experiment_config(args)
    records = run_trials(cfg, workers=args.workers)
    if not cfg.output_path:
        from .experiments import records_to_csv
        sys.stdout.write(records_to_csv(cfg, records))
    failed = sum(r.status.startswith("failed") for r in records)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_verify(args) -> int:
    results = verify_suite(args.level, log=print)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} checks passed")
    return EXIT_OK if n_pass == len(results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="exactpen",
                                description="Exact-penalty low-rank plus sparse toolkit.")
    p.add_argument("--threads", type=int, default=None,
                   help="cap BLAS/LAPACK threads (default: library default)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write one synthetic instance to files")
    g.add_argument("--config", required=True, help="experiment config JSON")
    g.add_argument("--seed", type=_u64)
    g.add_argument("--trial", type=int, default=0)
    g.add_argument("--output", help="output directory (default: current)")
    g.add_argument("--format", choices=("csv", "bin"), default="csv")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="decompose one matrix file")
    s.add_argument("--input", required=True, help="matrix file (CSV or binary)")
    s.add_argument("--config", help="JSON with phi, schedule, options, gamma1, gamma2")
    s.add_argument("--gamma1", type=float)
    s.add_argument("--gamma2", type=float)
    s.add_argument("--output", help="directory for X_hat, Y_hat and report.json")
    s.add_argument("--format", choices=("csv", "bin"), default="csv")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("experiment", help="run seeded trials and emit CSV")
    e.add_argument("--config", required=True)
    e.add_argument("--seed", type=_u64)
    e.add_argument("--output", help="CSV path (overrides output_path)")
    e.add_argument("--workers", type=int, default=1, help="parallel trial processes")
    e.set_defaults(func=cmd_experiment)

    v = sub.add_parser("verify", help="run the oracle and invariant suite")
    v.add_argument("--level", choices=("fast", "full"), default="fast")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_BAD_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        with _threads(args.threads):
            return args.func(args)
    except BadInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
