"""Time grids, reproducible noise, and the trajectory driver.

Every trajectory owns an independent random stream derived from a
``numpy.random.SeedSequence``; ensembles spawn one child sequence per
trajectory index from the master seed, so results are reproducible under
any degree of parallelism.  Integration is fixed-step Euler-Maruyama on the
Ito equations; photon-counting jumps use per-step Bernoulli thinning, valid
because nu * dt <= 0.1 is enforced.

The workhorse is :func:`run_block`, which advances a whole block of
trajectories in lock-step with vectorized state arrays.  A trajectory's
noise depends only on its own seed sequence, so a trajectory inside a block
matches the same trajectory run alone to rounding (BLAS kernels may pick a
different summation order for different batch widths); rerunning the same
command, including under parallel workers, is bit-identical because the
block decomposition is fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import filter_generic as fg
from . import filter_moments as fm
from . import wavepacket as wp
from .config import SimConfig
from .errors import (
    FilterDivergenceError,
    GridTooCoarseError,
    NonRealInnovationError,
    PhotonFilterError,
)

_CHUNK = 4096


@dataclass(frozen=True)
class SimGrid:
    """Uniform time grid [t_start, t_end] with step dt."""

    t_start: float
    t_end: float
    dt: float

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        span = self.t_end - self.t_start
        steps = int(round(span / self.dt))
        if steps < 1:
            raise ValueError(f"grid needs at least one step, span={span}, dt={self.dt}")
        if abs(steps * self.dt - span) > 1e-12 * max(1.0, abs(span)):
            raise ValueError(
                f"span {span} is not an integer multiple of dt={self.dt}"
            )

    @property
    def steps(self) -> int:
        return int(round((self.t_end - self.t_start) / self.dt))

    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.steps + 1)


@dataclass
class Trajectory:
    """One realization: conditional photon number plus the measurement record."""

    times: np.ndarray
    n_cond: np.ndarray
    record: np.ndarray
    jumps: list[float]
    seed: object


def wiener_increment(stream: np.random.Generator, dt: float) -> float:
    """One Gaussian increment with mean 0 and variance dt."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    return stream.standard_normal() * np.sqrt(dt)


def jump_draw(stream: np.random.Generator, nu: float, dt: float) -> bool:
    """Bernoulli thinning of the point process: True with probability nu*dt."""
    if nu < 0:
        raise ValueError(f"nu must be >= 0, got {nu}")
    p = nu * dt
    if p > 0.1:
        raise GridTooCoarseError(f"nu*dt = {p:.3g} > 0.1; refine the grid")
    return bool(stream.random() < p)


@dataclass
class BlockStats:
    """Per-block accumulators; ensembles fold these in trajectory-index order."""

    m: int
    times: np.ndarray
    sum_n: np.ndarray
    sumsq_n: np.ndarray
    sum_i00: np.ndarray
    sumsq_i00: np.ndarray
    jump_counts: np.ndarray
    sum_dy: np.ndarray | None = None
    sum_kdt: np.ndarray | None = None
    n_min: float = np.inf
    n_max: float = -np.inf
    post_jump_max_n: float = -np.inf
    max_pair_dev: float = 0.0
    max_im_k: float = 0.0
    max_im_nu: float = 0.0
    max_im_n: float = 0.0
    max_i11_dev: float = 0.0
    min_nu: float = np.inf
    series: np.ndarray | None = None
    record: np.ndarray | None = None
    jump_times: list[list[float]] = field(default_factory=list)


def _fold(blocks: list[BlockStats]) -> BlockStats:
    """Deterministic reduction of block accumulators, in block order."""
    out = blocks[0]
    for b in blocks[1:]:
        out.m += b.m
        out.sum_n += b.sum_n
        out.sumsq_n += b.sumsq_n
        out.sum_i00 += b.sum_i00
        out.sumsq_i00 += b.sumsq_i00
        out.jump_counts = np.concatenate([out.jump_counts, b.jump_counts])
        if out.sum_dy is not None and b.sum_dy is not None:
            out.sum_dy += b.sum_dy
            out.sum_kdt += b.sum_kdt
        out.n_min = min(out.n_min, b.n_min)
        out.n_max = max(out.n_max, b.n_max)
        out.post_jump_max_n = max(out.post_jump_max_n, b.post_jump_max_n)
        out.max_pair_dev = max(out.max_pair_dev, b.max_pair_dev)
        out.max_im_k = max(out.max_im_k, b.max_im_k)
        out.max_im_nu = max(out.max_im_nu, b.max_im_nu)
        out.max_im_n = max(out.max_im_n, b.max_im_n)
        out.max_i11_dev = max(out.max_i11_dev, b.max_i11_dev)
        out.min_nu = min(out.min_nu, b.min_nu)
        out.jump_times.extend(b.jump_times)
    return out


def _chunk_noise(gens, n: int, homodyne: bool, sqrt_dt: float) -> np.ndarray:
    out = np.empty((n, len(gens)))
    for j, g in enumerate(gens):
        if homodyne:
            out[:, j] = g.standard_normal(n) * sqrt_dt
        else:
            out[:, j] = g.random(n)
    return out


def run_block(
    cfg: SimConfig,
    detector: str,
    engine: str,
    seed_seqs,
    *,
    noise: np.ndarray | None = None,
    drift_only: bool = False,
    record_series: bool = False,
) -> BlockStats:
    """Advance a block of trajectories (one per seed sequence) in lock-step."""
    if engine == "moments":
        return _run_moment_block(
            cfg, detector, seed_seqs, noise=noise, drift_only=drift_only,
            record_series=record_series,
        )
    if engine == "generic":
        return _run_generic_block(
            cfg, detector, seed_seqs, noise=noise, drift_only=drift_only,
            record_series=record_series,
        )
    raise ValueError(f"unknown engine {engine!r}")


def _init_stats(m: int, times: np.ndarray, homodyne: bool, record_series: bool, steps: int) -> BlockStats:
    z = np.zeros(steps + 1)
    stats = BlockStats(
        m=m,
        times=times,
        sum_n=z.copy(),
        sumsq_n=z.copy(),
        sum_i00=z.copy(),
        sumsq_i00=z.copy(),
        jump_counts=np.zeros(m, dtype=np.int64),
        sum_dy=np.zeros(steps) if homodyne else None,
        sum_kdt=np.zeros(steps) if homodyne else None,
        jump_times=[[] for _ in range(m)],
    )
    if record_series:
        stats.series = np.zeros((steps + 1, m))
        stats.record = np.zeros((steps + 1, m))
    return stats


def _run_moment_block(cfg, detector, seed_seqs, *, noise, drift_only, record_series):
    homodyne = detector == "homodyne"
    grid = SimGrid(0.0, cfg.t_end, cfg.dt)
    steps = grid.steps
    times = grid.times()
    dt = cfg.dt
    sqrt_dt = np.sqrt(dt)
    w = wp.Wavepacket(cfg.gamma, cfg.t0)
    xi_arr = np.asarray(wp.xi(w, times[:-1]))
    m = len(seed_seqs)
    gens = [np.random.default_rng(ss) for ss in seed_seqs]

    x = np.zeros((fm.NVARS, m), dtype=np.complex128)
    x[fm.I11] = 1.0
    x[fm.I00] = 1.0

    fd = fm.drift_matrix(cfg.kappa, cfg.delta, 0j)
    fgm = fm.diffusion_matrix(cfg.kappa, 0j)
    fj = fm.jump_gain_matrix(cfg.kappa, 0j)
    kr = fm.k_row(cfg.kappa, 0j)

    stats = _init_stats(m, times, homodyne, record_series, steps)
    counts = np.zeros(m)
    _accumulate(stats, 0, x[fm.N11], x[fm.N00], x[fm.I00], x[fm.I11], x[fm.D10],
                x[fm.A01], x[fm.I10], x[fm.I01], x[fm.D01], x[fm.A10])
    if record_series:
        stats.series[0] = x[fm.N11].real

    for start in range(0, steps, _CHUNK):
        n = min(_CHUNK, steps - start)
        if drift_only:
            nz = None
        elif noise is not None:
            nz = noise[start:start + n]
        else:
            nz = _chunk_noise(gens, n, homodyne, sqrt_dt)
        for i in range(n):
            k = start + i
            xi_k = complex(xi_arr[k])
            fm.drift_matrix(cfg.kappa, cfg.delta, xi_k, out=fd)
            drift = fd @ x
            if drift_only:
                x = x + drift * dt
            elif homodyne:
                fm.diffusion_matrix(cfg.kappa, xi_k, out=fgm)
                fm.k_row(cfg.kappa, xi_k, out=kr)
                kc = kr @ x
                im = np.abs(kc.imag).max()
                if im > fm._IM_ERR:
                    raise NonRealInnovationError(
                        f"K_t imaginary part {im:.3e} at t={times[k]:.6g}"
                    )
                kk = kc.real
                stats.max_im_k = max(stats.max_im_k, float(im))
                dw = nz[i]
                x = x + drift * dt + ((fgm @ x) - kk * x) * dw
                dy = kk * dt + dw
                stats.sum_dy[k] = np.add.reduce(dy)
                stats.sum_kdt[k] = np.add.reduce(kk) * dt
                if record_series:
                    stats.record[k + 1] = dy
            else:
                fm.jump_gain_matrix(cfg.kappa, xi_k, out=fj)
                gains = fj @ x
                nuc = gains[fm.I11]
                im = np.abs(nuc.imag).max()
                if im > fm._IM_ERR:
                    raise NonRealInnovationError(
                        f"nu_t imaginary part {im:.3e} at t={times[k]:.6g}"
                    )
                stats.max_im_nu = max(stats.max_im_nu, float(im))
                nu = nuc.real
                if nu.min() < -fm.nu_floor(dt):
                    raise FilterDivergenceError(
                        f"nu_t = {nu.min():.3e} at t={times[k]:.6g}"
                    )
                nu = np.where(nu < 0.0, 0.0, nu)
                stats.min_nu = min(stats.min_nu, float(nu.min()))
                nudt = nu * dt
                if nudt.max() > 0.1:
                    raise GridTooCoarseError(
                        f"nu*dt = {nudt.max():.3g} > 0.1 at t={times[k]:.6g}"
                    )
                active = nu >= fm._NU_EPS
                jump = active & (nz[i] < nudt)
                comp = np.where(active, gains - nu * x, 0.0)
                x_new = x + (drift - comp) * dt
                if jump.any():
                    # A jump step applies the pure reset; the O(dt) drift
                    # contribution is dropped so the collapse is exact.
                    nu_safe = np.where(active, nu, 1.0)
                    x = np.where(jump, gains / nu_safe, x_new)
                    counts += jump
                    stats.jump_counts += jump
                    stats.post_jump_max_n = max(
                        stats.post_jump_max_n, float(x[fm.N11].real[jump].max())
                    )
                    for idx in np.nonzero(jump)[0]:
                        stats.jump_times[idx].append(float(times[k + 1]))
                else:
                    x = x_new
                if record_series:
                    stats.record[k + 1] = counts
            if not np.isfinite(x[fm.N11]).all():
                raise FilterDivergenceError(
                    f"moment filter diverged at t={times[k + 1]:.6g}"
                )
            _accumulate(stats, k + 1, x[fm.N11], x[fm.N00], x[fm.I00], x[fm.I11],
                        x[fm.D10], x[fm.A01], x[fm.I10], x[fm.I01], x[fm.D01],
                        x[fm.A10])
            if record_series:
                stats.series[k + 1] = x[fm.N11].real
    return stats


def _accumulate(stats, k, n11, n00, i00, i11, d10, a01, i10, i01, d01, a10):
    v = n11.real
    stats.sum_n[k] = np.add.reduce(v)
    stats.sumsq_n[k] = v @ v
    u = i00.real
    stats.sum_i00[k] = np.add.reduce(u)
    stats.sumsq_i00[k] = u @ u
    stats.n_min = min(stats.n_min, float(v.min()))
    stats.n_max = max(stats.n_max, float(v.max()))
    stats.max_im_n = max(
        stats.max_im_n,
        float(np.abs(n11.imag).max()),
        float(np.abs(n00.imag).max()),
    )
    stats.max_i11_dev = max(stats.max_i11_dev, float(np.abs(i11 - 1.0).max()))
    dev = max(
        float(np.abs(d10 - a01.conj()).max()),
        float(np.abs(i10 - i01.conj()).max()),
        float(np.abs(d01 - a10.conj()).max()),
    )
    stats.max_pair_dev = max(stats.max_pair_dev, dev)


def _run_generic_block(cfg, detector, seed_seqs, *, noise, drift_only, record_series):
    homodyne = detector == "homodyne"
    grid = SimGrid(0.0, cfg.t_end, cfg.dt)
    steps = grid.steps
    times = grid.times()
    dt = cfg.dt
    sqrt_dt = np.sqrt(dt)
    w = wp.Wavepacket(cfg.gamma, cfg.t0)
    xi_arr = np.asarray(wp.xi(w, times[:-1]))
    m = len(seed_seqs)
    gens = [np.random.default_rng(ss) for ss in seed_seqs]
    dim = cfg.fock_dim
    model = fg.SLHModel.cavity(dim, cfg.kappa, cfg.delta)
    n_op = np.diag(np.arange(dim, dtype=np.complex128))
    a_op = model.L / np.sqrt(cfg.kappa)
    ad_op = a_op.conj().T

    vac = np.zeros((dim, dim), dtype=np.complex128)
    vac[0, 0] = 1.0
    proj = np.broadcast_to(vac, (m, dim, dim)).copy()
    zero = np.zeros_like(proj)
    state = fg.GenericFilterState(proj.copy(), zero.copy(), zero.copy(), proj.copy())

    stats = _init_stats(m, times, homodyne, record_series, steps)
    counts = np.zeros(m)
    _accumulate_generic(stats, 0, state, n_op, a_op, ad_op)
    if record_series:
        stats.series[0] = np.einsum("mij,ji->m", state.rho11, n_op).real

    for start in range(0, steps, _CHUNK):
        n = min(_CHUNK, steps - start)
        if drift_only:
            nz = None
        elif noise is not None:
            nz = noise[start:start + n]
        else:
            nz = _chunk_noise(gens, n, homodyne, sqrt_dt)
        for i in range(n):
            k = start + i
            xi_k = complex(xi_arr[k])
            try:
                if drift_only:
                    a11, a10, a01, a00 = fg._drifts(state, model, xi_k)
                    state = fg.GenericFilterState(
                        state.rho11 + a11 * dt,
                        state.rho10 + a10 * dt,
                        state.rho01 + a01 * dt,
                        state.rho00 + a00 * dt,
                    )
                elif homodyne:
                    state, dy = fg.homodyne_step(state, model, xi_k, dt, nz[i])
                    stats.sum_dy[k] = np.add.reduce(dy)
                    stats.sum_kdt[k] = np.add.reduce(dy - nz[i])
                    if record_series:
                        stats.record[k + 1] = dy
                else:
                    nu = np.asarray(fg.nu_t(state, model, xi_k, dt))
                    stats.min_nu = min(stats.min_nu, float(nu.min()))
                    nudt = nu * dt
                    if nudt.max() > 0.1:
                        raise GridTooCoarseError(
                            f"nu*dt = {nudt.max():.3g} > 0.1 at t={times[k]:.6g}"
                        )
                    jump = (nu >= fm._NU_EPS) & (nz[i] < nudt)
                    state = fg.photocount_step(state, model, xi_k, dt, jump)
                    if jump.any():
                        counts += jump
                        stats.jump_counts += jump
                        pj = np.einsum("mij,ji->m", state.rho11, n_op).real
                        stats.post_jump_max_n = max(
                            stats.post_jump_max_n, float(pj[jump].max())
                        )
                        for idx in np.nonzero(jump)[0]:
                            stats.jump_times[idx].append(float(times[k + 1]))
                    if record_series:
                        stats.record[k + 1] = counts
            except PhotonFilterError as exc:
                raise type(exc)(f"{exc} (t={times[k]:.6g})") from exc
            _accumulate_generic(stats, k + 1, state, n_op, a_op, ad_op)
            if record_series:
                stats.series[k + 1] = np.einsum("mij,ji->m", state.rho11, n_op).real
    return stats


def _accumulate_generic(stats, k, state, n_op, a_op, ad_op):
    n11 = np.einsum("mij,ji->m", state.rho11, n_op)
    n00 = np.einsum("mij,ji->m", state.rho00, n_op)
    i00 = np.einsum("mii->m", state.rho00)
    i11 = np.einsum("mii->m", state.rho11)
    d10 = np.einsum("mij,ji->m", state.rho10, ad_op)
    a01 = np.einsum("mij,ji->m", state.rho01, a_op)
    i10 = np.einsum("mii->m", state.rho10)
    i01 = np.einsum("mii->m", state.rho01)
    d01 = np.einsum("mij,ji->m", state.rho01, ad_op)
    a10 = np.einsum("mij,ji->m", state.rho10, a_op)
    _accumulate(stats, k, n11, n00, i00, i11, d10, a01, i10, i01, d01, a10)


def simulate_trajectory(
    cfg: SimConfig,
    detector: str | None = None,
    engine: str | None = None,
    seed=None,
    *,
    drift_only: bool = False,
) -> Trajectory:
    """Run one seeded trajectory and return its full time series.

    ``seed`` may be an int or a ``numpy.random.SeedSequence``; by default the
    config's seed is used.  The record holds dY increments for homodyne
    detection and cumulative counts for photon counting.
    """
    detector = detector or cfg.detector
    engine = engine or cfg.engine
    if seed is None:
        seed = cfg.seed
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    stats = run_block(
        cfg, detector, engine, [ss], drift_only=drift_only, record_series=True
    )
    return Trajectory(
        times=stats.times,
        n_cond=stats.series[:, 0].copy(),
        record=stats.record[:, 0].copy(),
        jumps=list(stats.jump_times[0]),
        seed=seed,
    )
