"""Command line entry point: ``nsflab <subcommand> ...``.

Exit codes: 0 success, 1 a study gate or verification failed, 2 the
integrator rejected a step or left the tube, 3 invalid configuration.
"""

import argparse
import math
import os
import sys
import time

import numpy as np

from . import estimates as est
from . import experiments as ex
from . import io
from .config import load_config, parse_config, to_text
from .errors import ConfigError, LeftTube, NSFError, StepRejected
from .grid import TorusGrid

EXIT_OK, EXIT_GATE, EXIT_STEP, EXIT_CONFIG = 0, 1, 2, 3


def _load(path, **overrides):
    try:
        cfg = load_config(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if overrides:
        # re-validate through the text form so overrides get the same checks
        cfg = parse_config(to_text(cfg.with_(**overrides)))
    return cfg


def _outdir(args, cfg):
    return args.out or cfg.output.dir


def cmd_run(args):
    cfg = _load(args.config)
    start = time.perf_counter()
    traj = ex.simulate(cfg)
    ex.write_run(cfg, traj, _outdir(args, cfg), time.perf_counter() - start)
    bad = [r.t for r in traj.records if not r.sandwich_ok]
    print(f"{traj.nsteps} steps, dt = {traj.dt:.6g}, E_f: {traj.records[0].energy:.10g} -> {traj.records[-1].energy:.10g}")
    if bad:
        print(f"weighted-norm sandwich failed at t = {bad[0]!r}", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_sweep_eps(args):
    cfg = _load(args.config)
    res = ex.sweep_eps(cfg, args.eps)
    rows = list(zip(res.eps, res.distances))
    print("eps,sup_distance")
    for e, d in rows:
        print(f"{e!r},{d!r}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        io.write_table(os.path.join(args.out, "sweep.csv"), ["eps", "sup_distance"], rows)
    if not res.gate:
        print("distance to the eps = 0 run did not shrink with eps", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_uniqueness(args):
    cfg = _load(args.config)
    res = ex.uniqueness(cfg, args.theta)
    outdir = _outdir(args, cfg)
    os.makedirs(outdir, exist_ok=True)
    ex.write_pair_csv(os.path.join(outdir, "pair.csv"), res)
    last = res.series[-1]
    print(f"final E = {last.energy!r}, max distance = {last.max_distance!r}")
    if res.fit.all_zero:
        print("pair functional vanishes identically")
    else:
        print(f"Gronwall rate C = {res.fit.rate!r}")
    if any(p.distance_exceeds_delta0 for p in res.series):
        print("warning: pair distance reached delta0", file=sys.stderr)
    return EXIT_OK


def cmd_expand_torus(args):
    cfg = _load(args.config)
    res = ex.expand_torus(cfg, args.k)
    print("k_from,k_to,window_sup_distance")
    for (a, b), d in zip(zip(res.factors, res.factors[1:]), res.differences):
        print(f"{a},{b},{d!r}")
    if not res.gate:
        print("window differences did not decrease with the torus size", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_tube(args):
    overrides = {"mode": "ambient"}
    cfg = _load(args.config)
    if args.scale is not None:
        overrides["initial"] = cfg.initial.__class__(cfg.initial.family, cfg.initial.params, args.scale)
    cfg = _load(args.config, **overrides)
    res, traj = ex.tube_study(cfg)
    ex.write_run(cfg, traj, _outdir(args, cfg))
    print(f"tube energy {res.energies[0]!r} -> {res.energies[-1]!r}, slack {res.slack:.3g}")
    if not res.passed:
        print(f"tube energy increased beyond slack at samples {res.violations[:5]}", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def _ode(args):
    if args.A is not None or args.B is not None:
        return est.LinearCascadeOde(args.A or 0.0, args.B or 0.0, args.U0)
    if args.D is None or args.Q is None:
        raise ConfigError("give either --D and --Q or --A and --B")
    return est.NonlinearOde(args.D, args.Q, args.U0)


def cmd_ode(args):
    ode = _ode(args)
    tstar = est.blowup_time(ode, infinite_ok=True)
    t_end = args.t_end
    if t_end is None:
        t_end = 0.9 * tstar if math.isfinite(tstar) else 1.0
    print(f"# blow-up time t* = {tstar!r}")
    if isinstance(ode, est.NonlinearOde):
        print(f"# safe horizon min(t*/2, T*) = {est.safe_horizon(ode, args.horizon)!r}")
    print("t,U")
    for t in np.linspace(0.0, t_end, args.points):
        print(f"{float(t)!r},{est.solution(ode, t)!r}")
    return EXIT_OK


def cmd_verify(args):
    ode = _ode(args)
    cols = io.read_csv(args.csv)
    if args.column not in cols:
        raise ConfigError(f"column {args.column!r} not in {sorted(cols)}")
    rep = est.verify_supersolution(cols["t"], cols[args.column], ode)
    if rep.passed:
        print(f"supersolution holds on {rep.checked} rows (max excess {rep.max_excess!r})")
        return EXIT_OK
    print(
        f"violated at row {rep.first_violation}: t = {rep.t_violation!r}, "
        f"y = {rep.y_violation!r} > U = {rep.bound_violation!r}"
    )
    return EXIT_GATE


def cmd_gn_check(args):
    grid = TorusGrid((args.n,) * args.m, (args.L,) * args.m)
    ratio = ex.gn_check(grid, tuple(args.exponents), args.count, args.seed, args.kappa_max)
    print(f"max ratio over {args.count} sections: {ratio!r}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="nsflab", description="Sphere-valued Schroedinger-type flows on flat tori.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", help="integrate one configuration and write CSV, snapshots and manifest")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (default: [output] dir)")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep-eps", help="distance to the eps = 0 run for several eps")
    s.add_argument("config")
    s.add_argument("--eps", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep_eps)

    s = sub.add_parser("uniqueness", help="pair functional between two runs")
    s.add_argument("config")
    s.add_argument("--theta", type=float, default=0.0, help="rotation of the second run (0: rk4 vs euler)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_uniqueness)

    s = sub.add_parser("expand-torus", help="window differences on growing tori")
    s.add_argument("config")
    s.add_argument("--k", type=int, nargs="+", default=[1, 2, 4])
    s.set_defaults(func=cmd_expand_torus)

    s = sub.add_parser("tube", help="ambient run from an off-sphere start")
    s.add_argument("config")
    s.add_argument("--scale", type=float, help="initial radial scale s")
    s.add_argument("--out")
    s.set_defaults(func=cmd_tube)

    for name, func, help_ in (("ode", cmd_ode, "tabulate a comparison ODE"),
                              ("verify", cmd_verify, "check a CSV column against a comparison ODE")):
        s = sub.add_parser(name, help=help_)
        if name == "verify":
            s.add_argument("csv")
            s.add_argument("--column", default="Hkf_1")
        s.add_argument("--D", type=float)
        s.add_argument("--Q", type=float)
        s.add_argument("--A", type=float)
        s.add_argument("--B", type=float)
        s.add_argument("--U0", type=float, default=0.0)
        if name == "ode":
            s.add_argument("--t-end", type=float)
            s.add_argument("--points", type=int, default=11)
            s.add_argument("--horizon", type=float, default=math.inf, help="coupling horizon T*")
        s.set_defaults(func=func)

    s = sub.add_parser("gn-check", help="largest interpolation ratio over random sections")
    s.add_argument("--m", type=int, default=1)
    s.add_argument("--n", type=int, default=64)
    s.add_argument("--L", type=float, default=2.0 * math.pi)
    s.add_argument("--exponents", type=float, nargs=6, default=[1, 2, 2, 2, 2, 0.5],
                   metavar=("J", "K", "P", "Q", "R", "A"))
    s.add_argument("--count", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--kappa-max", type=float, default=6.0)
    s.set_defaults(func=cmd_gn_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "exponents", None):
        j, k = args.exponents[:2]
        args.exponents = [int(j), int(k), *args.exponents[2:]]
    try:
        return args.func(args)
    except (StepRejected, LeftTube) as exc:
        where = f" at step {exc.step_index}" if exc.step_index is not None else ""
        print(f"integration stopped{where}: {exc}", file=sys.stderr)
        return EXIT_STEP
    except ConfigError as exc:
        for lineno, msg in exc.errors:
            print(f"config error{f' (line {lineno})' if lineno else ''}: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except NSFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, ValueError) else EXIT_GATE
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
