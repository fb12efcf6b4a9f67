"""Command line entry point: ``cutvibro <verb> [--config PATH | --preset NAME] ...``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

VERBS = ("simulate", "optimize", "gradcheck", "harmonic", "baseline")
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cutvibro", description=__doc__)
    p.add_argument("verb", choices=VERBS)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="scenario INI file")
    src.add_argument("--preset", help="built-in scenario name (default: lowpass-coarse)")
    p.add_argument("--out", type=Path, help="output directory (overrides the config)")
    p.add_argument("--seed", type=int, help="signal and initial-design seed")
    p.add_argument("--iterations", type=int, help="optimization iteration cap")
    p.add_argument("--threads", type=int, help="BLAS/OpenMP thread count")
    p.add_argument("--design", type=Path, help="design vector file (one value per line)")
    p.add_argument("--vars", type=int, default=10, help="gradcheck: number of random variables")
    p.add_argument("--step", type=float, default=1e-6, help="gradcheck: central-difference step")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads:
        # must happen before numpy loads its BLAS
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    import numpy as np

    from . import output, runner
    from .config import load_config, preset

    try:
        cfg = load_config(args.config) if args.config else preset(args.preset or "lowpass-coarse")
        if args.seed is not None:
            cfg.signal.seed = args.seed
        if args.iterations is not None:
            cfg.optimizer.iterations = args.iterations
        if args.out is not None:
            cfg.output.directory = str(args.out)
        cfg.validate()
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    output.write_manifest(out / "manifest.txt", cfg.to_ini(), cfg.digest(), {"verb": args.verb})

    if args.verb == "baseline":
        mesh = runner.make_mesh(cfg)
        P0 = runner.baseline(cfg, mesh, runner.make_signal(cfg))
        f = np.arange(P0.size) / (P0.size * cfg.time.dt)
        output.write_csv(out / "baseline.csv", ["f_Hz", "re", "im", "abs"],
                         [(f[k], P0[k].real, P0[k].imag, abs(P0[k])) for k in range(P0.size // 2 + 1)])
        print(f"baseline written to {out / 'baseline.csv'}")
        return 0

    problem = runner.build_problem(cfg)
    s = np.loadtxt(args.design) if args.design else None

    if args.verb == "simulate":
        ev = runner.simulate(cfg, s, out, problem)
        print("phi " + " ".join(f"{v:.6e}" for v in ev.phi))
    elif args.verb == "optimize":
        res = runner.optimize(cfg, problem, s0=s, out_dir=out)
        first, last = res.history[0], res.history[-1]
        print(f"phi1 {first[2]:.6e} -> {last[2]:.6e}   phi2 {first[3]:.6e} -> {last[3]:.6e}")
        if cfg.output.harmonic:
            for row in runner.harmonic_check(problem, res.final, out):
                print(row)
    elif args.verb == "gradcheck":
        rows = runner.gradcheck(cfg, args.vars, args.step, cfg.signal.seed, problem, s, out)
        worst = max(r[4] for r in rows) if rows else 0.0
        print(f"{len(rows)} checks, max relative error {worst:.3e}")
    elif args.verb == "harmonic":
        ev = problem.evaluate(runner.initial_design(cfg, problem.mesh) if s is None else s)
        for row in runner.harmonic_check(problem, ev, out):
            print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
