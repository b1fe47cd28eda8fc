//! The coordinator's dynamic program.
//!
//! Finite horizons are solved exactly on the reachable belief set
//! ([`solve_finite`]); discounted problems by value iteration on a belief
//! grid ([`solve_discounted`]). Both alternate a communication phase and a
//! control phase and share the backups in [`backup`].

pub mod backup;
pub mod discounted;
pub mod finite;
pub mod grid;
pub mod policy;

pub use backup::{comm_backup, control_backup, CommMode, ConstraintState, Model};
pub use discounted::{solve_discounted, GridOptions};
pub use finite::{solve_finite, FiniteOptions};
pub use grid::{ProductGrid, SimplexGrid};
pub use policy::{BeliefKey, Levels, Policy, RunReport, Solution, ValueFunction};

use crate::error::{Error, Result};
use crate::scenario::{Horizon, Scenario};

/// Options for either solver; the scenario's horizon picks which applies.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOptions {
    pub grid: GridOptions,
    pub finite: FiniteOptions,
}

impl SolveOptions {
    pub fn grid(resolution: usize) -> Self {
        Self {
            grid: GridOptions::with_resolution(resolution),
            ..Default::default()
        }
    }

    fn with_mode(mut self, mode: CommMode) -> Self {
        self.grid.comm_mode = mode;
        self.finite.comm_mode = mode;
        self
    }
}

/// Solves with the scenario's horizon and the communication mode in `opts`.
pub fn solve(scenario: &Scenario, opts: SolveOptions) -> Result<Solution> {
    match scenario.horizon {
        Horizon::Finite(_) => solve_finite(scenario, opts.finite),
        Horizon::Discounted => solve_discounted(scenario, opts.grid),
    }
}

/// Solves a scenario that carries communication constraints.
pub fn solve_constrained(scenario: &Scenario, opts: SolveOptions) -> Result<Solution> {
    if scenario.constraints.is_none() {
        return Err(Error::InfeasibleConstraints(
            "scenario has no constraints".into(),
        ));
    }
    solve(scenario, opts)
}

/// Best control when agents never communicate.
pub fn baseline_never(scenario: &Scenario, opts: SolveOptions) -> Result<Solution> {
    solve(scenario, opts.with_mode(CommMode::Never))
}

/// Best control when agents communicate at every step.
pub fn baseline_always(scenario: &Scenario, opts: SolveOptions) -> Result<Solution> {
    solve(scenario, opts.with_mode(CommMode::Always))
}

/// Optimal cost with full state sharing at every step, from the initial
/// distribution, computed on the joint-state MDP.
///
/// With communication at every step the coordinator sees the joint state
/// before each control, so the problem is an MDP on `(x1, x2)`.
pub fn joint_mdp_value(scenario: &Scenario, tolerance: f64) -> f64 {
    let [n1, n2] = scenario.num_states();
    let [a1, a2] = scenario.num_actions();
    let (theta_c, theta_k) = scenario.discount_mode.phase_factors(scenario.discount);
    let [d1, d2] = &scenario.agents;
    let mut comm = vec![vec![0.0; n2]; n1];
    let control = |comm: &Vec<Vec<f64>>| {
        let mut out = vec![vec![0.0; n2]; n1];
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                let mut best = f64::INFINITY;
                for u1 in 0..a1 {
                    for u2 in 0..a2 {
                        let mut future = 0.0;
                        for y1 in 0..n1 {
                            for y2 in 0..n2 {
                                future += d1.prob(x1, u1, y1) * d2.prob(x2, u2, y2) * comm[y1][y2];
                            }
                        }
                        best = best.min(scenario.cost.get(x1, x2, u1, u2) + theta_k * future);
                    }
                }
                out[x1][x2] = best;
            }
        }
        out
    };
    let step = |comm: &Vec<Vec<f64>>| {
        let ctrl = control(comm);
        let mut next = vec![vec![0.0; n2]; n1];
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                next[x1][x2] = scenario.comm_cost.at(x1, x2) + theta_c * ctrl[x1][x2];
            }
        }
        next
    };
    match scenario.horizon {
        Horizon::Finite(t) => {
            for _ in 0..t {
                comm = step(&comm);
            }
        }
        Horizon::Discounted => loop {
            let next = step(&comm);
            let delta = next
                .iter()
                .flatten()
                .zip(comm.iter().flatten())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            comm = next;
            if delta < tolerance {
                break;
            }
        },
    }
    let mut value = 0.0;
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            value += d1.initial[x1] * d2.initial[x2] * comm[x1][x2];
        }
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{defense_symmetric, CommCost, JointCost};

    #[test]
    fn zero_cost_converges_in_one_sweep() {
        let mut s = defense_symmetric(0.0);
        s.cost = JointCost::from_fn([2, 2, 2, 2], |_, _, _, _| 0.0);
        s.comm_cost = CommCost::Fixed(0.0);
        let sol = solve_discounted(&s, GridOptions::with_resolution(11)).unwrap();
        assert_eq!(sol.report.iterations, 1);
        assert_eq!(sol.initial_value(), 0.0);
        let never = baseline_never(&s, SolveOptions::grid(11)).unwrap();
        assert_eq!(never.initial_value(), 0.0);
    }

    #[test]
    fn always_comm_matches_joint_mdp() {
        for rho in [0.0, 1.0, 4.0] {
            let s = defense_symmetric(rho);
            let mut opts = SolveOptions::grid(5);
            opts.grid.tolerance = Some(1e-11);
            let sol = baseline_always(&s, opts).unwrap();
            let mdp = joint_mdp_value(&s, 1e-12);
            assert!(
                (sol.initial_value() - mdp).abs() < 1e-8,
                "{} vs {mdp}",
                sol.initial_value()
            );
        }
    }

    #[test]
    fn per_step_mode_charges_undiscounted_first_stage() {
        let mut s = defense_symmetric(0.0).with_horizon(Horizon::Finite(1));
        s.discount_mode = crate::scenario::DiscountMode::PerStep;
        for agent in &mut s.agents {
            agent.initial = vec![0.0, 1.0];
        }
        let sol = solve_finite(&s, FiniteOptions::default()).unwrap();
        assert_eq!(sol.initial_value(), 20.0);
    }

    #[test]
    fn finite_horizon_rejected_by_grid() {
        let s = defense_symmetric(0.0).with_horizon(Horizon::Finite(3));
        assert!(matches!(
            solve_discounted(&s, GridOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }
}
