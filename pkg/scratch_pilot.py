"""Scratch pilot (not part of the package)."""
import math
import sys
import numpy as np
from dataclasses import replace

sys.path.insert(0, "tests")
from oracles import rk4_trajectory

from hrclab.physics import PhysicsParams, EnvState, ControlInput, step
from hrclab.partners import make_surrogate, SurrogatePartner, SKILL_PROFILES
from hrclab.rewards import build_slider_pendulum_tree, subtask_reward, BALL_TASK, SLIDER_TASK, PENDULUM_TASK

def rollout_dual_pd(params, state0, steps, profile="ideal", gains=None, active=frozenset({BALL_TASK}), seed=0):
    sp = make_surrogate(profile, "pendulum_torque")
    ss = make_surrogate(profile, "slider_force")
    if gains:
        sp = replace(sp, **gains.get("pend", {}))
        ss = replace(ss, **gains.get("slid", {}))
    s_pend = SurrogatePartner(sp, rng=seed, dt=params.dt)
    s_slid = SurrogatePartner(ss, rng=seed + 1, dt=params.dt)
    s_pend.start_episode(); s_slid.start_episode()
    st = state0
    traj = [st]
    for _ in range(steps):
        a_p = s_pend.act(st, active)
        a_s = s_slid.act(st, active)
        st = step(st, ControlInput(slider_force=a_s * params.force_limit,
                                   pendulum_torque=a_p * params.torque_limit), params)
        traj.append(st)
    return traj

def score(params, traj):
    tree = build_slider_pendulum_tree(params)
    tail = traj[len(traj) // 2:]
    ma = lambda f: np.mean([abs(getattr(s, f)) for s in tail])
    r = lambda tid, f: np.mean([subtask_reward(getattr(s, f), tree.node(tid).reward) for s in traj[1:]])
    return (f"tail |C_x|={ma('C_x'):.4f} |P_z|={ma('P_z'):.4f} |B_y|={ma('B_y'):.4f} | "
            f"ep rewards C={r(SLIDER_TASK,'C_x'):.3f} P={r(PENDULUM_TASK,'P_z'):.3f} B={r(BALL_TASK,'B_y'):.3f}")

p = PhysicsParams()
st0 = EnvState(C_x=0.2, P_z=0.1, B_y=-0.2)
steps = int(40 / p.dt)

print("== gain sweep (ideal profile) ==")
for kp_p, kd_p, kb_p, kbr in [(2,1,.5,.8),(3,1.5,.5,.8),(3,1.5,.75,.8),(2.5,1.2,.6,1.0),
                              (3,1.5,.6,1.2),(4,2,.8,1.0),(3,2,.5,1.0),(3,1.5,.4,1.5)]:
    gains = {"pend": dict(kp=kp_p, kd=kd_p, kb=kb_p, kb_rate=kbr),
             "slid": dict(kp=2, kd=1.2, kb=0.3, kb_rate=0.8)}
    traj = rollout_dual_pd(p, st0, steps, gains=gains)
    print(f"pend kp={kp_p} kd={kd_p} kb={kb_p} kbr={kbr}: {score(p, traj)}")

print("\n== profiles with default gains ==")
for prof in ("ideal", "skilled_translation", "weak_rotation"):
    traj = rollout_dual_pd(p, st0, steps, profile=prof, seed=3)
    print(f"{prof}: {score(p, traj)}")

print("\n== convergence-order check, smaller ranges ==")
rng = np.random.default_rng(42)
ratios = []
for i in range(10):
    y0 = np.array([rng.uniform(-0.2, 0.2), rng.uniform(-0.1, 0.1),
                   rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                   rng.uniform(-0.1, 0.1), rng.uniform(-0.05, 0.05)])
    oracle = rk4_trajectory(y0, 0.0, 0.0, p, horizon=1.0, dt_fine=1e-4, sample_every=500)
    assert np.max(np.abs(oracle[:, 4])) < p.pendulum_half_length, f"ball stop hit (max {np.max(np.abs(oracle[:,4])):.3f})"
    assert np.max(np.abs(oracle[:, 0])) < p.slider_half_range
    errs = {}
    for dt_sim, stride in ((0.05, 1), (0.025, 2)):
        pp = PhysicsParams(dt=dt_sim)
        st = EnvState(C_x=y0[0], C_x_dot=y0[1], P_z=y0[2], P_z_dot=y0[3], B_y=y0[4], B_y_dot=y0[5])
        worst = 0.0
        for k in range(1, int(round(1.0 / dt_sim)) + 1):
            st = step(st, ControlInput(), pp)
            if (k % stride) == 0:
                ref = oracle[k // stride]
                cur = np.array([st.C_x, st.C_x_dot, st.P_z, st.P_z_dot, st.B_y, st.B_y_dot])
                worst = max(worst, np.max(np.abs(cur - ref)))
        errs[dt_sim] = worst
    ratios.append(errs[0.05] / errs[0.025])
print("ratios:", [f"{r:.3f}" for r in ratios])
