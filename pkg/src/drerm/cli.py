"""Command line interface.

Subcommands::

    drerm generate     --seed S [--out game.json]
    drerm solve-drerm  --instance game.json [--gamma1 G1 --gamma2 G2 --tol T]
    drerm solve-erm    --instance game.json [--nk 80 --sampling per-coordinate]
    drerm evaluate     --instance game.json --solution sol.json [--realizations 5000]
    drerm compare      --seed S --instances K --nk 80 10000 --out compare.csv
    drerm sweep        --seed S --grid gamma2 --out sweep.csv

Instance files hold either a generated game (``{"game": ...}``) or a general
affine SVIP (``{"svip": ...}``). Solutions are written as JSON with the
decision ``x`` and the solver report.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .ambiguity import MomentAmbiguity
from .harness.evaluate import evaluate
from .harness.experiments import (
    CompareConfig,
    SweepConfig,
    nominal_ambiguity,
    run_compare,
    run_sweep,
    solve_drerm,
    write_result,
)
from .harness.instances import generate_game, sample_realizations
from .model import AffineSVIP, GameInstance
from .qmc_erm import SamplingMode, qmc_samples, solve_erm
from .solver.conic import SolverSettings


def _emit(payload, out):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_instance(path):
    """``(svip, game or None)`` from an instance file."""
    d = json.loads(Path(path).read_text())
    if "game" in d:
        game = GameInstance.from_dict(d["game"])
        return game.to_svip(), game
    if "svip" in d:
        return AffineSVIP.from_dict(d["svip"]), None
    return AffineSVIP.from_dict(d), None


def _instance(args):
    if args.instance:
        inst, _ = _load_instance(args.instance)
    else:
        inst = generate_game(args.n1, args.n2, seed=args.seed).to_svip()
    alpha = args.alpha if args.alpha is not None else 1.0 / inst.beta0()
    return inst, alpha


def _ambiguity(args, m):
    if getattr(args, "moments", None):
        amb = MomentAmbiguity.from_json(Path(args.moments).read_text())
        if amb.m != m:
            raise SystemExit(f"moment file has dimension {amb.m}, instance needs {m}")
    else:
        amb = nominal_ambiguity(m)
    g1 = args.gamma1[0] if getattr(args, "gamma1", None) else None
    g2 = args.gamma2[0] if getattr(args, "gamma2", None) else None
    return amb.with_gammas(g1, g2)


def _settings(args):
    return SolverSettings(tol=args.tol, max_iter=args.max_iter, mu_factor=args.mu_factor)


def cmd_generate(args):
    game = generate_game(args.n1, args.n2, args.l1, args.l2, seed=args.seed)
    _emit({"seed": args.seed, "game": game.to_dict(), "svip": game.to_svip().to_dict()}, args.out)
    return 0


def cmd_solve_drerm(args):
    inst, alpha = _instance(args)
    amb = _ambiguity(args, inst.m)
    x, rep = solve_drerm(inst, alpha, amb, settings=_settings(args))
    _emit(
        {
            "method": "drerm",
            "alpha": alpha,
            "gamma1": amb.gamma1,
            "gamma2": amb.gamma2,
            "x": None if x is None else x.tolist(),
            "objective": rep.objective,
            "status": rep.status.value,
            "iterations": rep.iterations,
            "kkt_residual": rep.kkt_residual,
            "wall_time": rep.wall_time,
        },
        args.out,
    )
    return 0 if rep.status.value == "optimal" else 1


def cmd_solve_erm(args):
    inst, alpha = _instance(args)
    amb = _ambiguity(args, inst.m)
    samples = qmc_samples(amb, args.nk[0], args.sampling)
    x, rep = solve_erm(inst, alpha, samples, amb, tol=args.tol, max_iter=args.max_iter)
    _emit(
        {
            "method": "erm",
            "alpha": alpha,
            "nk": args.nk[0],
            "sampling": SamplingMode(args.sampling).value,
            "x": x.tolist(),
            "objective": rep.objective,
            "status": rep.status,
            "iterations": rep.iterations,
            "pg_norm": rep.pg_norm,
            "wall_time": rep.wall_time,
        },
        args.out,
    )
    return 0 if rep.status == "optimal" else 1


def cmd_evaluate(args):
    inst, alpha = _instance(args)
    sol = json.loads(Path(args.solution).read_text())
    if sol.get("x") is None:
        raise SystemExit("solution file has no x")
    x = np.asarray(sol["x"], dtype=np.float64)
    alpha = sol.get("alpha", alpha) if args.alpha is None else args.alpha
    xis = sample_realizations(_ambiguity(args, inst.m), args.realizations, [args.seed, 1])
    summ = evaluate(x, inst, alpha, xis)
    _emit({**summ.stats(), "count": summ.count, "alpha": alpha}, args.out)
    return 0


def cmd_compare(args):
    cfg = CompareConfig(
        seed=args.seed,
        instances=args.instances,
        nk=tuple(args.nk),
        n1=args.n1,
        n2=args.n2,
        realizations=args.realizations,
        sampling=SamplingMode(args.sampling).value,
        tol=args.tol,
        max_iter=args.max_iter,
        mu_factor=args.mu_factor,
    )
    result = run_compare(cfg)
    csv_path, manifest = write_result(result, args.out or "compare.csv")
    print(f"wrote {csv_path} ({len(result.rows)} rows, {len(result.failures)} failed) and {manifest}")
    return 0 if not result.failures else 1


def cmd_sweep(args):
    cfg = SweepConfig(
        seed=args.seed,
        grid=args.grid,
        gamma1=tuple(args.gamma1) if args.gamma1 else None,
        gamma2=tuple(args.gamma2) if args.gamma2 else None,
        n1=args.n1,
        n2=args.n2,
        realizations=args.realizations,
        tol=args.tol,
        max_iter=args.max_iter,
        mu_factor=args.mu_factor,
    )
    result = run_sweep(cfg)
    csv_path, manifest = write_result(result, args.out or "sweep.csv")
    print(f"wrote {csv_path} ({len(result.rows)} rows, {len(result.failures)} failed) and {manifest}")
    return 0 if not result.failures else 1


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="drerm", description="Distributionally robust ERM for affine SVIPs.")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_nonneg_int, default=0)
    common.add_argument("--n1", type=int, default=2)
    common.add_argument("--n2", type=int, default=2)
    common.add_argument("--out", default=None, help="output path (compare/sweep default: compare.csv / sweep.csv)")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--tol", type=float, default=1e-7)
    solver.add_argument("--max-iter", type=int, default=200)
    solver.add_argument("--mu-factor", type=float, default=0.2)

    problem = argparse.ArgumentParser(add_help=False)
    problem.add_argument("--instance", help="instance JSON; generated from --seed when omitted")
    problem.add_argument("--alpha", type=float, default=None, help="default 1/beta0")
    problem.add_argument("--moments", help="MomentAmbiguity JSON; default zero mean, 2/1.6 covariance")
    problem.add_argument("--gamma1", type=float, nargs=1, default=None)
    problem.add_argument("--gamma2", type=float, nargs=1, default=None)

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--sampling", choices=[m.value for m in SamplingMode], default="per-coordinate")

    g = sub.add_parser("generate", parents=[common], help="emit a random game instance as JSON")
    g.add_argument("--l1", type=int, default=None)
    g.add_argument("--l2", type=int, default=None)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve-drerm", parents=[common, solver, problem], help="solve the robust problem")
    s.set_defaults(func=cmd_solve_drerm)

    e = sub.add_parser("solve-erm", parents=[common, problem, sampling], help="solve the QMC-ERM baseline")
    e.add_argument("--nk", type=int, nargs=1, default=[80])
    e.add_argument("--tol", type=float, default=1e-7)
    e.add_argument("--max-iter", type=int, default=500)
    e.set_defaults(func=cmd_solve_erm)

    v = sub.add_parser("evaluate", parents=[common, problem], help="realized gap statistics of a solution")
    v.add_argument("--solution", required=True, help="JSON with an 'x' entry")
    v.add_argument("--realizations", type=int, default=5000)
    v.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compare", parents=[common, solver, sampling], help="DRERM vs ERM over random games")
    c.add_argument("--instances", type=int, default=10)
    c.add_argument("--nk", type=int, nargs="+", default=[80, 10000])
    c.add_argument("--realizations", type=int, default=5000)
    c.set_defaults(func=cmd_compare)

    w = sub.add_parser("sweep", parents=[common, solver], help="vary gamma1 or gamma2 with perturbed moments")
    w.add_argument("--grid", choices=["gamma1", "gamma2"], default="gamma2")
    w.add_argument("--gamma1", type=float, nargs="+", default=None)
    w.add_argument("--gamma2", type=float, nargs="+", default=None)
    w.add_argument("--realizations", type=int, default=5000)
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
