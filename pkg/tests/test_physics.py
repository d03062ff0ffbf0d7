import math

import numpy as np
import pytest

from hrclab.errors import ConfigError, SimulationFault
from hrclab.physics import (STATE_CSV_HEADER, ControlInput, EnvState, InitRanges,
                            PhysicsParams, load_physics_config, observe, reset, step,
                            write_trajectory_csv)

from oracles import rk4_trajectory


def state_vec(s: EnvState) -> np.ndarray:
    return np.array([s.C_x, s.C_x_dot, s.P_z, s.P_z_dot, s.B_y, s.B_y_dot])


def vec_state(y) -> EnvState:
    return EnvState(C_x=y[0], C_x_dot=y[1], P_z=y[2], P_z_dot=y[3], B_y=y[4], B_y_dot=y[5])


class TestParams:
    def test_defaults_valid(self):
        PhysicsParams()

    @pytest.mark.parametrize("field", ["slider_mass", "pendulum_inertia", "ball_mass",
                                       "pendulum_half_length", "slider_half_range", "dt"])
    def test_nonpositive_rejected(self, field):
        with pytest.raises(ConfigError):
            PhysicsParams(**{field: 0.0})

    def test_negative_limit_rejected(self):
        with pytest.raises(ConfigError):
            PhysicsParams(torque_limit=-1.0)


class TestReset:
    def test_degenerate_ranges_give_zero_state(self):
        s = reset(PhysicsParams(), InitRanges(), rng=123)
        assert s == EnvState()

    def test_same_seed_same_state(self):
        ranges = InitRanges(C_x=(-0.3, 0.3), P_z=(-0.2, 0.2), B_y=(-0.4, 0.4))
        a = reset(PhysicsParams(), ranges, rng=7)
        b = reset(PhysicsParams(), ranges, rng=7)
        assert a == b

    def test_uniform_sampling_statistics(self):
        # 10^4 draws of B_y from [-0.3, 0.3]: bounds respected, mean near 0
        ranges = InitRanges(B_y=(-0.3, 0.3))
        draws = np.array([reset(PhysicsParams(), ranges, rng=seed).B_y
                          for seed in range(10_000)])
        assert draws.min() >= -0.3 and draws.max() <= 0.3
        assert abs(draws.mean()) <= 0.02

    def test_range_outside_bounds_rejected(self):
        with pytest.raises(ConfigError):
            reset(PhysicsParams(), InitRanges(B_y=(-0.6, 0.6)), rng=0)
        with pytest.raises(ConfigError):
            reset(PhysicsParams(), InitRanges(C_x=(0.0, 0.9)), rng=0)

    def test_velocities_default_zero_and_t_zero(self):
        s = reset(PhysicsParams(), InitRanges(C_x=(-0.2, 0.2)), rng=5)
        assert s.C_x_dot == 0.0 and s.P_z_dot == 0.0 and s.B_y_dot == 0.0 and s.t == 0.0


class TestStep:
    def test_zero_state_is_equilibrium(self):
        p = PhysicsParams()
        s = step(EnvState(), ControlInput(), p)
        assert state_vec(s).tolist() == [0.0] * 6
        assert s.t == p.dt

    def test_ball_rolls_downhill_under_positive_tilt(self):
        # P_z > 0 tilts the +B_y end up, so the ball must roll toward -B_y
        s = step(EnvState(P_z=0.1), ControlInput(), PhysicsParams())
        assert s.B_y_dot < 0.0 and s.B_y < 0.0

    def test_single_step_semi_implicit_arithmetic(self):
        # hand-rolled update from the documented equations
        p = PhysicsParams()
        s0 = EnvState(C_x=0.1, C_x_dot=0.2, P_z=0.05, P_z_dot=-0.1, B_y=0.15, B_y_dot=0.02)
        u = ControlInput(slider_force=1.0, pendulum_torque=0.3)
        c_dd = (1.0 - p.slider_damping * 0.2) / p.slider_mass
        z_dd = (0.3 - p.pendulum_damping * -0.1
                - p.ball_mass * p.gravity * 0.15 * math.cos(0.05)) / p.pendulum_inertia
        b_dd = ((5.0 / 7.0) * (0.15 * (-0.1) ** 2 - (p.gravity + c_dd) * math.sin(0.05))
                - p.ball_rolling_damping * 0.02)
        c_dot = 0.2 + c_dd * p.dt
        z_dot = -0.1 + z_dd * p.dt
        b_dot = 0.02 + b_dd * p.dt
        expect = EnvState(C_x=0.1 + c_dot * p.dt, C_x_dot=c_dot,
                          P_z=0.05 + z_dot * p.dt, P_z_dot=z_dot,
                          B_y=0.15 + b_dot * p.dt, B_y_dot=b_dot, t=p.dt)
        assert step(s0, u, p) == expect

    def test_single_step_matches_rk4_to_first_order(self):
        # independent dense RK4 over one 0.2 s control period; a single
        # semi-implicit Euler step carries at most ~dt^2 * max|acc| error
        p = PhysicsParams()
        s1 = step(EnvState(P_z=0.1), ControlInput(), p)
        fine = rk4_trajectory(np.array([0, 0, 0.1, 0, 0, 0.0]), 0.0, 0.0, p,
                              horizon=p.dt, dt_fine=1e-4, sample_every=int(p.dt / 1e-4))
        err = np.abs(state_vec(s1) - fine[-1])
        assert np.max(err) < 0.02
        # velocity components are tighter; catches wrong constants
        assert err[5] < 1e-2 and err[3] < 3e-3

    def test_input_clamped_to_limits(self):
        p = PhysicsParams()
        a = step(EnvState(), ControlInput(slider_force=1e9, pendulum_torque=-1e9), p)
        b = step(EnvState(), ControlInput(slider_force=p.force_limit,
                                          pendulum_torque=-p.torque_limit), p)
        assert a == b

    def test_nonfinite_state_faults(self):
        with pytest.raises(SimulationFault):
            step(EnvState(C_x=float("nan")), ControlInput(), PhysicsParams())
        with pytest.raises(SimulationFault):
            step(EnvState(), ControlInput(slider_force=float("inf")), PhysicsParams())

    def test_ball_end_constraint_inelastic(self):
        p = PhysicsParams()
        s = EnvState(B_y=0.49, B_y_dot=1.0)
        s1 = step(s, ControlInput(), p)
        assert s1.B_y == p.pendulum_half_length and s1.B_y_dot == 0.0

    def test_slider_end_constraint_inelastic(self):
        p = PhysicsParams()
        s1 = step(EnvState(C_x=-0.49, C_x_dot=-1.0), ControlInput(), p)
        assert s1.C_x == -p.slider_half_range and s1.C_x_dot == 0.0

    def test_rotation_end_stop_inelastic(self):
        p = PhysicsParams()
        s1 = step(EnvState(P_z=1.0, P_z_dot=2.0), ControlInput(pendulum_torque=p.torque_limit), p)
        assert s1.P_z == p.pendulum_angle_limit and s1.P_z_dot == 0.0


class TestInvariants:
    def test_equilibrium_fixed_point_1000_steps(self):
        p = PhysicsParams()
        s = EnvState()
        for _ in range(1000):
            s = step(s, ControlInput(), p)
        assert state_vec(s).tolist() == [0.0] * 6

    def test_clamp_safety_random_rollout(self):
        # 10^5 random-action steps never escape the end stops
        p = PhysicsParams()
        rng = np.random.default_rng(0)
        s = reset(p, InitRanges(C_x=(-0.4, 0.4), P_z=(-0.3, 0.3), B_y=(-0.4, 0.4)), rng=1)
        for _ in range(100_000):
            u = ControlInput(slider_force=rng.uniform(-p.force_limit, p.force_limit),
                             pendulum_torque=rng.uniform(-p.torque_limit, p.torque_limit))
            s = step(s, u, p)
            assert abs(s.B_y) <= p.pendulum_half_length
            assert abs(s.C_x) <= p.slider_half_range
            assert s.is_finite()

    def test_first_order_convergence_against_rk4(self):
        # halving dt roughly halves the worst-case state error vs dense RK4
        p = PhysicsParams()
        rng = np.random.default_rng(42)
        for _ in range(10):
            y0 = np.array([rng.uniform(-0.2, 0.2), rng.uniform(-0.1, 0.1),
                           rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                           rng.uniform(-0.1, 0.1), rng.uniform(-0.05, 0.05)])
            oracle = rk4_trajectory(y0, 0.0, 0.0, p, horizon=1.0,
                                    dt_fine=1e-4, sample_every=500)
            # the comparison is only valid while no end stop engages
            assert np.max(np.abs(oracle[:, 4])) < p.pendulum_half_length
            assert np.max(np.abs(oracle[:, 0])) < p.slider_half_range
            errs = {}
            for dt_sim, stride in ((0.05, 1), (0.025, 2)):
                pp = PhysicsParams(dt=dt_sim)
                s = vec_state(y0)
                worst = 0.0
                for k in range(1, int(round(1.0 / dt_sim)) + 1):
                    s = step(s, ControlInput(), pp)
                    if k % stride == 0:
                        worst = max(worst, float(np.max(np.abs(
                            state_vec(s) - oracle[k // stride]))))
                errs[dt_sim] = worst
            assert 1.5 <= errs[0.05] / errs[0.025] <= 2.5

    def test_damping_dissipates_kinetic_energy(self):
        # with the ball coupling disabled (massless ball) the remaining
        # energy store is kinetic, so the mass-weighted velocity square
        # must decay monotonically under damping
        p = PhysicsParams(ball_mass=1e-12)
        s = EnvState(C_x=0.1, C_x_dot=0.4, P_z=-0.3, P_z_dot=0.5, B_y=0.5, B_y_dot=0.0)

        def ke(st):
            return (p.slider_mass * st.C_x_dot ** 2
                    + p.pendulum_inertia * st.P_z_dot ** 2
                    + 1.4 * p.ball_mass * st.B_y_dot ** 2)

        prev = ke(s)
        for _ in range(300):
            s = step(s, ControlInput(), p)
            cur = ke(s)
            assert cur <= prev + 1e-15
            prev = cur

    def test_determinism(self):
        p = PhysicsParams()
        s0 = EnvState(C_x=0.11, C_x_dot=-0.2, P_z=0.07, P_z_dot=0.3, B_y=-0.21, B_y_dot=0.05)
        u = ControlInput(slider_force=1.3, pendulum_torque=-0.4)
        assert step(s0, u, p) == step(s0, u, p)


class TestObserve:
    def test_zero_state_zero_observation(self):
        o = observe(EnvState(), 0.0)
        assert o.as_vector().tolist() == [0.0, 0.0, 0.0, 0.0]

    def test_projection(self):
        o = observe(EnvState(B_y=0.2, P_z=-0.05, C_x=0.1), 0.7)
        assert (o.B_y, o.P_z, o.C_x, o.partner_prev_action) == (0.2, -0.05, 0.1, 0.7)

    def test_absent_partner_placeholder_zero(self):
        assert observe(EnvState(B_y=0.3)).partner_prev_action == 0.0


class TestIO:
    def test_trajectory_csv_header_and_roundtrip_values(self, tmp_path):
        p = PhysicsParams()
        states = [EnvState()]
        rng = np.random.default_rng(3)
        for _ in range(5):
            states.append(step(states[-1],
                               ControlInput(slider_force=rng.uniform(-1, 1),
                                            pendulum_torque=rng.uniform(-0.5, 0.5)), p))
        path = tmp_path / "traj.csv"
        with open(path, "w") as fh:
            write_trajectory_csv(states, fh)
        lines = path.read_text().splitlines()
        assert lines[0] == STATE_CSV_HEADER
        assert len(lines) == len(states) + 1
        got = [float(v) for v in lines[3].split(",")]
        s = states[2]
        assert got == [s.t, s.C_x, s.C_x_dot, s.P_z, s.P_z_dot, s.B_y, s.B_y_dot]

    def test_physics_config_load(self, tmp_path):
        path = tmp_path / "physics.cfg"
        path.write_text("# test config\nslider_mass = 2.5\ndt = 0.1  # faster\n")
        p = load_physics_config(str(path))
        assert p.slider_mass == 2.5 and p.dt == 0.1
        assert p.gravity == PhysicsParams().gravity

    def test_physics_config_unknown_key(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("not_a_param = 1\n")
        with pytest.raises(ConfigError):
            load_physics_config(str(path))

    def test_physics_config_bad_value(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("slider_mass = heavy\n")
        with pytest.raises(ConfigError):
            load_physics_config(str(path))
