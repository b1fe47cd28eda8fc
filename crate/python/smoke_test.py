"""Smoke test for the commplan_py extension.

Build and install it first, e.g. `maturin develop --release -m crates/py/Cargo.toml`.
"""

import math

import commplan_py as cp


def main():
    sym = cp.Scenario.defense_symmetric(1.0)
    assert sym.num_states == [2, 2]
    assert math.isclose(sym.discount, 0.95)
    again = cp.Scenario.from_json(sym.to_json())
    assert again.content_hash() == sym.content_hash()

    sol = cp.solve(sym, grid=51)
    never = cp.baseline_never(sym, grid=51)
    always = cp.baseline_always(sym, grid=51)
    print(f"optimal={sol.initial_value:.2f} never={never.initial_value:.2f} always={always.initial_value:.2f}")
    assert abs(sol.initial_value - 108.45) < 1.5
    assert sol.initial_value <= min(never.initial_value, always.initial_value) + 1e-9
    assert sol.report()["mode"] == "grid"

    m1, m2 = sol.decide_comm([1.0, 0.0], [1.0, 0.0])
    u1, u2 = sol.decide_ctrl([0.5, 0.5], [1.0, 0.0])
    assert len(m1) == len(m2) == len(u1) == len(u2) == 2

    stats = sol.simulate(episodes=2000, seed=1)
    print(f"simulated mean={stats['mean']:.2f} +- {stats['std_error']:.2f}")
    assert abs(stats["mean"] - sol.initial_value) < 4 * stats["std_error"] + 0.1

    short = sym.with_horizon(1)
    assert abs(cp.brute_force_t1(short) - cp.solve(short).initial_value) < 1e-9
    two = sym.with_horizon(2)
    assert abs(cp.brute_force_t2(two) - cp.solve(two).initial_value) < 1e-9

    text = cp.export_pomdp(sym)
    assert "states: comm_0_0" in text
    try:
        cp.export_pomdp(sym.with_erasure(0.2))
    except ValueError as e:
        assert "erasure" in str(e)
    else:
        raise AssertionError("erasure export should fail")
    print("smoke test passed")


if __name__ == "__main__":
    main()
