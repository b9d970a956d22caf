"""Command-line front end.

Subcommands:

  me          deterministic master-equation series (+ quadrature oracle)
  trajectory  one seeded stochastic trajectory
  ensemble    M trajectories, pointwise mean/stderr with ME overlay columns
  verify      invariant suite; exit 0 iff every check passes

All output is data-only CSV (or JSON with --format json); plotting is left
to external tools.  Every output file embeds the fully resolved config so a
run can be reproduced from the file alone.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .config import SimConfig, DETECTORS, ENGINES
from .errors import PhotonFilterError
from .master_ensemble import (
    analytic_mean_photon_series,
    integrate_master,
    run_ensemble,
)
from .sde_engine import simulate_trajectory
from .verify import run_checks


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kappa", type=float, default=0.1, help="cavity decay rate")
    p.add_argument("--gamma", type=float, default=0.1, help="wavepacket decay rate")
    p.add_argument("--delta", type=float, default=0.0, help="cavity detuning")
    p.add_argument("--t0", type=float, default=3.0, help="photon arrival time")
    p.add_argument("--tend", type=float, default=103.0, help="end of the time grid")
    p.add_argument("--dt", type=float, default=1e-3, help="integrator step")
    p.add_argument("--dim", type=int, default=2, help="Fock truncation")
    p.add_argument("--ntraj", type=int, default=100, help="ensemble size")
    p.add_argument("--seed", type=int, default=1, help="master seed")
    p.add_argument("--engine", choices=ENGINES, default="moments")
    p.add_argument("--detector", choices=DETECTORS, default="homodyne")
    p.add_argument("--out", default=None, help="output file path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonfilter",
        description="Photon-number estimation for a cavity driven by a single photon",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("me", "master-equation series"),
        ("trajectory", "single seeded trajectory"),
        ("ensemble", "trajectory ensemble with ME overlay"),
        ("verify", "run the invariant suite"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        if name == "ensemble":
            p.add_argument("--workers", type=int, default=1,
                           help="parallel worker processes")
    return parser


def _config_from_args(args) -> SimConfig:
    return SimConfig(
        kappa=args.kappa, gamma=args.gamma, delta=args.delta, t0=args.t0,
        t_end=args.tend, dt=args.dt, fock_dim=args.dim, ntraj=args.ntraj,
        seed=args.seed, engine=args.engine, detector=args.detector,
    )


def write_series(path, columns, rows, fmt="csv", config=None, seed=None) -> None:
    """Write a table of series to ``path`` at full double precision."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != len(columns):
        raise ValueError(
            f"row width {rows.shape} does not match {len(columns)} columns"
        )
    if fmt == "json":
        payload = {
            "times": [float(v) for v in rows[:, 0]],
            "series": {
                name: [float(v) for v in rows[:, j]]
                for j, name in enumerate(columns)
                if j > 0
            },
            "config": config or {},
            "seed": seed,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if config is not None:
            fh.write("# config: " + json.dumps(config) + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _cmd_me(cfg: SimConfig, args) -> int:
    me = integrate_master(cfg)
    oracle = analytic_mean_photon_series(cfg, me.times)
    peak = int(np.argmax(me.values))
    sup = float(np.abs(me.values - oracle).max())
    print(
        f"me: peak <n> = {me.values[peak]:.6f} at t = {me.times[peak]:.4f}, "
        f"sup|ME - oracle| = {sup:.3e}"
    )
    if args.out:
        write_series(
            args.out, ["t", "me_n", "analytic_n"],
            np.column_stack([me.times, me.values, oracle]),
            fmt=args.format, config=cfg.asdict(), seed=cfg.seed,
        )
    return 0


def _cmd_trajectory(cfg: SimConfig, args) -> int:
    traj = simulate_trajectory(cfg)
    msg = f"trajectory: seed {cfg.seed}, final <n> = {traj.n_cond[-1]:.6f}"
    if cfg.detector == "photocount":
        msg += f", jumps at {traj.jumps}"
    print(msg)
    if args.out:
        write_series(
            args.out, ["t", "n_cond", "record"],
            np.column_stack([traj.times, traj.n_cond, traj.record]),
            fmt=args.format, config=cfg.asdict(), seed=cfg.seed,
        )
    return 0


def _cmd_ensemble(cfg: SimConfig, args) -> int:
    stats = run_ensemble(cfg, workers=getattr(args, "workers", 1))
    me = integrate_master(cfg)
    oracle = analytic_mean_photon_series(cfg, stats.times)
    sup = float(np.abs(stats.mean - me.values).max())
    print(
        f"ensemble: M = {stats.count}, seed {cfg.seed}, "
        f"sup|mean - ME| = {sup:.4f}"
    )
    if args.out:
        write_series(
            args.out, ["t", "mean_n", "stderr_n", "me_n", "analytic_n"],
            np.column_stack([stats.times, stats.mean, stats.stderr, me.values, oracle]),
            fmt=args.format, config=cfg.asdict(), seed=cfg.seed,
        )
    return 0


def _cmd_verify(cfg: SimConfig, args) -> int:
    checks = run_checks(engine=cfg.engine, seed=cfg.seed)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    return 0 if all(c.passed for c in checks) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        handler = {
            "me": _cmd_me,
            "trajectory": _cmd_trajectory,
            "ensemble": _cmd_ensemble,
            "verify": _cmd_verify,
        }[args.command]
        return handler(cfg, args)
    except (PhotonFilterError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
