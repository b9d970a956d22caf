"""Invariant suite backing the ``verify`` CLI subcommand."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .config import SimConfig
from .master_ensemble import run_ensemble


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check(results, name, passed, detail):
    results.append(CheckResult(name, bool(passed), detail))


def run_checks(engine: str = "moments", seed: int = 2024) -> list[CheckResult]:
    """Run the full invariant suite; all checks must pass for a clean build."""
    results: list[CheckResult] = []

    # Truncated commutator: identity on the first D-1 levels, -(D-1) on top.
    worst = 0.0
    for dim in range(2, 6):
        comm = ops.commutator(ops.annihilation(dim), ops.creation(dim))
        expect = np.eye(dim, dtype=complex)
        expect[-1, -1] = -(dim - 1)
        worst = max(worst, float(np.abs(comm - expect).max()))
    _check(results, "commutator truncation identity (D=2..5)", worst <= 1e-12,
           f"max deviation {worst:.2e}")

    # Homodyne run: conjugation pairs, reality, unit-trace drift.
    cfg = SimConfig(t_end=23.0, ntraj=200, seed=seed, engine=engine,
                    detector="homodyne")
    hd = run_ensemble(cfg).diagnostics
    _check(results, "conjugation pairs pi10(adag)=conj(pi01(a)) etc.",
           hd.max_pair_dev <= 1e-9, f"max deviation {hd.max_pair_dev:.2e}")
    _check(results, "K_t real for real wavepacket",
           hd.max_im_k <= 1e-9, f"max |Im K_t| {hd.max_im_k:.2e}")
    _check(results, "pi11(n), pi00(n) real",
           hd.max_im_n <= 1e-9, f"max |Im| {hd.max_im_n:.2e}")
    _check(results, "pi11(I) within 1e-3 of 1",
           hd.max_i11_dev <= 1e-3, f"max |pi11(I)-1| {hd.max_i11_dev:.2e}")

    # Photon counting: nonnegative intensity, single jump, unit mean count.
    cfg_pc = SimConfig(t_end=203.0, dt=1e-2, ntraj=1000, seed=seed,
                       engine=engine, detector="photocount")
    pc = run_ensemble(cfg_pc).diagnostics
    _check(results, "nu_t >= -1e-10 at all steps",
           pc.min_nu >= -1e-10, f"min nu_t {pc.min_nu:.2e}")
    _check(results, "nu_t real for real wavepacket",
           pc.max_im_nu <= 1e-9, f"max |Im nu_t| {pc.max_im_nu:.2e}")
    _check(results, "at most one jump per trajectory",
           pc.jump_counts.max() <= 1, f"max jumps {int(pc.jump_counts.max())}")
    mean_count = float(pc.jump_counts.mean())
    _check(results, "mean total counts = 1 +/- 0.03 (M=1000)",
           abs(mean_count - 1.0) <= 0.03, f"mean count {mean_count:.4f}")
    return results
