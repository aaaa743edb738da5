"""Quick end-to-end check of the sagin_sim Python module."""

import json
import math

import sagin_sim as ss


def main():
    base = ss.Scenario().with_override("n_steps", "30").with_override("n_users", "40")
    assert base.n_steps == 30 and base.n_users == 40
    assert json.loads(base.to_json())["n_users"] == 40
    assert len(ss.scheme_names()) == 9

    try:
        base.with_override("uav_speed_mps", "-1")
    except ValueError as e:
        assert "uav_speed_mps" in str(e)
    else:
        raise AssertionError("negative speed accepted")

    for scheme in ss.scheme_names():
        res = ss.run_once(base, scheme, 3)
        assert len(res) == 30
        agg = res.aggregates
        assert 0.0 <= agg["fairness"] <= 1.0 + 1e-12
        assert all(math.isfinite(r["mean_reward"]) for r in res.records())
        print(f"{scheme:<12} reward={agg['mean_reward']:.4f} load={agg['mean_load']:.4f}")

    a = ss.run_once(base, "Sat3dCa", 11).steps_csv()
    b = ss.run_once(base, "Sat3dCa", 11).steps_csv()
    assert a == b

    sim = ss.Simulation(base, "Pso3d", 5)
    for _ in range(3):
        sim.step()
    assert sim.steps_done == 3 and len(sim.uav_positions) == base.n_uavs

    rows = ss.run_campaign(base, ["Sat2d", "Mab2d"], "uavs", [1, 2], 2, master_seed=9)
    assert len(rows) == 4 and all(r["runs"] == 2 for r in rows)

    assert ss.jain_fairness([1.0, 1.0, 1.0]) == 1.0
    assert abs(ss.jain_fairness([1.0, 0.0]) - 0.5) < 1e-12
    assert abs(ss.reward(1.0, 0.5) - 0.75) < 1e-12

    agent = ss.SatisfactionAgent(4, kappa0=1.0, reward_max=1.0, seed=1)
    for _ in range(50):
        agent.select()
        agent.observe(0.2)
    assert abs(sum(agent.pi) - 1.0) < 1e-9

    bandit = ss.UcbBandit(3)
    for _ in range(100):
        arm = bandit.select()
        bandit.update(arm, [0.1, 0.9, 0.5][arm])
    assert max(range(3), key=lambda i: bandit.counts[i]) == 1

    q = ss.QLearner(2, 2, alpha=0.5, gamma=0.0, epsilon=0.0)
    q.update(0, 1, 1.0, 1)
    assert q.select(0) == 1 and q.q_values(0) == [0.0, 0.5]

    print("smoke test ok")


if __name__ == "__main__":
    main()
