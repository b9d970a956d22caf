import numpy as np
import pytest

from photonfilter import sde_engine as se
from photonfilter.config import SimConfig
from photonfilter.errors import GridTooCoarseError
from photonfilter.master_ensemble import integrate_master


class TestSimGrid:
    def test_basic(self):
        g = se.SimGrid(0.0, 1.0, 0.25)
        assert g.steps == 4
        np.testing.assert_allclose(g.times(), [0.0, 0.25, 0.5, 0.75, 1.0])

    def test_rejects_non_multiple_span(self):
        with pytest.raises(ValueError, match="multiple"):
            se.SimGrid(0.0, 1.0, 0.3)

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            se.SimGrid(0.0, 1.0, 0.0)

    def test_rejects_empty_span(self):
        with pytest.raises(ValueError):
            se.SimGrid(1.0, 1.0, 0.1)


class TestNoise:
    def test_wiener_increment_mean(self):
        g = np.random.default_rng(0)
        n = 10**6
        dt = 1e-3
        total = sum(se.wiener_increment(g, dt) for _ in range(n))
        assert abs(total / n) <= 3.0 * np.sqrt(dt / n)

    def test_wiener_increment_deterministic(self):
        a = [se.wiener_increment(np.random.default_rng(7), 1e-3) for _ in range(3)]
        b = [se.wiener_increment(np.random.default_rng(7), 1e-3) for _ in range(3)]
        assert a == b

    def test_jump_draw_never_fires_at_zero(self):
        g = np.random.default_rng(0)
        assert not any(se.jump_draw(g, 0.0, 1e-3) for _ in range(1000))

    def test_jump_draw_empirical_rate(self):
        # nu*dt = 1e-4; the count over 1e6 draws should sit within 5%
        g = np.random.default_rng(1)
        count = sum(se.jump_draw(g, 0.1, 1e-3) for _ in range(10**6))
        assert abs(count - 100) <= 5

    def test_jump_draw_guards(self):
        g = np.random.default_rng(0)
        with pytest.raises(GridTooCoarseError):
            se.jump_draw(g, 200.0, 1e-3)
        with pytest.raises(ValueError):
            se.jump_draw(g, -0.1, 1e-3)


class TestTrajectory:
    def test_quiet_before_arrival(self):
        cfg = SimConfig(t_end=13.0, dt=1e-2)
        traj = se.simulate_trajectory(cfg, seed=123)
        before = traj.times <= cfg.t0
        assert np.abs(traj.n_cond[before]).max() <= 1e-12

    def test_same_seed_bitwise_identical(self):
        cfg = SimConfig(t_end=13.0, dt=1e-2, detector="homodyne")
        a = se.simulate_trajectory(cfg, seed=7)
        b = se.simulate_trajectory(cfg, seed=7)
        np.testing.assert_array_equal(a.n_cond, b.n_cond)
        np.testing.assert_array_equal(a.record, b.record)

    def test_drift_only_tracks_master_equation(self):
        cfg = SimConfig(t_end=33.0, dt=1e-2)
        traj = se.simulate_trajectory(cfg, drift_only=True, seed=0)
        me = integrate_master(cfg)
        # explicit Euler vs RK4: O(dt) agreement
        assert np.abs(traj.n_cond - me.values).max() <= 1e-3

    def test_engines_agree_homodyne(self):
        cfg = SimConfig(t_end=8.0, dt=1e-3, detector="homodyne")
        a = se.simulate_trajectory(cfg, engine="moments", seed=5)
        b = se.simulate_trajectory(cfg, engine="generic", seed=5)
        assert np.abs(a.n_cond - b.n_cond).max() <= 1e-12

    def test_engines_agree_photocount(self):
        cfg = SimConfig(t_end=23.0, dt=1e-2, detector="photocount")
        a = se.simulate_trajectory(cfg, engine="moments", seed=9)
        b = se.simulate_trajectory(cfg, engine="generic", seed=9)
        assert a.jumps == b.jumps
        assert np.abs(a.n_cond - b.n_cond).max() <= 1e-12

    def test_photocount_single_jump_and_collapse(self):
        cfg = SimConfig(t_end=103.0, dt=1e-2, detector="photocount")
        jumps_seen = 0
        for seed in range(12):
            traj = se.simulate_trajectory(cfg, seed=seed)
            assert len(traj.jumps) <= 1
            if traj.jumps:
                jumps_seen += 1
                k = int(np.searchsorted(traj.times, traj.jumps[0]))
                assert traj.n_cond[k] <= 1e-12
        assert jumps_seen > 0

    def test_trajectory_in_block_matches_alone(self):
        # batching must not change any individual trajectory (up to BLAS
        # summation-order rounding, which depends on the batch width)
        cfg = SimConfig(t_end=13.0, dt=1e-2)
        children = np.random.SeedSequence(11).spawn(3)
        block = se.run_block(cfg, "homodyne", "moments", children, record_series=True)
        for j, child in enumerate(children):
            solo = se.simulate_trajectory(cfg, seed=child)
            np.testing.assert_allclose(block.series[:, j], solo.n_cond, atol=1e-13)

    def test_unknown_engine(self):
        cfg = SimConfig(t_end=13.0, dt=1e-2)
        with pytest.raises(ValueError, match="engine"):
            se.run_block(cfg, "homodyne", "exact", [np.random.SeedSequence(0)])
