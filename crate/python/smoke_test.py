"""Smoke test for the mec_offload_py extension.

Build and install first:
    maturin develop -m crates/py/Cargo.toml
"""

import math

import mec_offload_py as mec


def main():
    cfg = mec.SystemConfig(seed=3)
    assert (cfg.num_users, cfg.num_edge_servers, cfg.horizon) == (4, 2, 10_000)

    env = mec.Environment(cfg)
    assert env.methods(0)[:3] == ["L", "E1", "E2"]
    local = [0, 0, 0, 0]
    assert math.isclose(env.expected_delay(local), 4 * 1600.0)
    total, per_user = env.sample_round(local)
    assert math.isclose(total, sum(per_user))

    oracle = env.oracle()
    assert oracle["best_action"] == local
    assert math.isclose(oracle["best_expected_delay"], 6400.0)

    assert mec.shannon_rate(30e3, 3200.0, 1.0, 50.0) > 0
    assert mec.partition_shape(5, 2) == (2, 3, 1, 1)
    assert mec.pool_size_closed_form(9, 3) == 1680
    assert mec.equipartition_pool_size(4, 2) == 6
    assert math.isclose(mec.regret_bound_ul(1, math.e), math.sqrt(math.e))

    short = mec.SystemConfig(horizon=2000, seed=1)
    ucb = mec.run_policy(short, "mu_ucb1")
    bmse = mec.run_policy(short, "bmse")
    assert len(ucb["actions"]) == len(bmse["actions"]) == 2000
    assert ucb["decisions"] == 2000 - 256
    assert bmse["decisions"] < ucb["decisions"] // 20
    assert bmse["pseudo_regret"][-1] <= ucb["pseudo_regret"][-1]
    print("ok: ucb decisions", ucb["decisions"], "bmse decisions", bmse["decisions"])


if __name__ == "__main__":
    main()
