mod common;

use common::{random_binary, random_scenario, rng};
use commplan::belief::{
    erasure_outcome_probs, eta_pair, prob_comm_outcome, prob_no_comm, Belief, BeliefPair,
};
use commplan::prescriptions::{enumerate_comm_pairs, DEFAULT_ENUMERATION_CAP};
use commplan::scenario::{CommCost, Horizon, Observation};
use commplan::solver::{baseline_always, baseline_never, solve, SolveOptions};
use proptest::prelude::*;

fn pair_from(a: f64, b: f64) -> BeliefPair {
    BeliefPair::new(
        Belief::new(vec![1.0 - a, a]).unwrap(),
        Belief::new(vec![1.0 - b, b]).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn base_outcomes_sum_to_one(seed in any::<u64>(), a in 0.0f64..=1.0, b in 0.0f64..=1.0, k in 0usize..16) {
        let s = random_binary(&mut rng(seed), Horizon::Finite(1));
        let gamma = enumerate_comm_pairs(&s, DEFAULT_ENUMERATION_CAP).unwrap()[k];
        let pair = pair_from(a, b);
        let mut total = prob_no_comm(&pair, &gamma);
        for x1 in 0..2 {
            for x2 in 0..2 {
                total += prob_comm_outcome(&pair, &gamma, x1, x2);
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn erasure_outcomes_sum_to_one(a in 0.0f64..=1.0, b in 0.0f64..=1.0, k in 0usize..16, p_e in 0.0f64..=1.0) {
        let s = random_binary(&mut rng(1), Horizon::Finite(1));
        let gamma = enumerate_comm_pairs(&s, DEFAULT_ENUMERATION_CAP).unwrap()[k];
        let total: f64 = erasure_outcome_probs(&pair_from(a, b), &gamma, p_e).iter().map(|o| o.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    // Conditioning on silence twice under the same prescription changes nothing.
    #[test]
    fn silent_update_is_idempotent(a in 0.01f64..0.99, b in 0.01f64..0.99, k in 0usize..16) {
        let s = random_binary(&mut rng(2), Horizon::Finite(1));
        let gamma = enumerate_comm_pairs(&s, DEFAULT_ENUMERATION_CAP).unwrap()[k];
        let pair = pair_from(a, b);
        if prob_no_comm(&pair, &gamma) > 0.0 {
            let once = eta_pair(&pair, &gamma, Observation::Phi).unwrap();
            let twice = eta_pair(&once, &gamma, Observation::Phi).unwrap();
            for i in 0..2 {
                for x in 0..2 {
                    prop_assert!((once.0[i][x] - twice.0[i][x]).abs() < 1e-15);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // Alternating sweeps contract by at most θ_c·θ_k per iteration.
    #[test]
    fn sweeps_contract(seed in any::<u64>()) {
        let s = random_binary(&mut rng(seed), Horizon::Discounted);
        let sol = solve(&s, SolveOptions::grid(11)).unwrap();
        let q = s.discount * s.discount;
        let h = &sol.report.residual_history;
        for w in h.windows(2) {
            if w[0] > 1e-9 {
                prop_assert!(w[1] / w[0] <= q + 1e-6, "ratio {} > {q}", w[1] / w[0]);
            }
        }
    }

    // Optimal ≤ both baselines, and the value is nondecreasing in ρ.
    #[test]
    fn sandwich_and_monotone(seed in any::<u64>(), rho in 0.0f64..5.0, extra in 0.0f64..5.0) {
        let base = random_scenario(&mut rng(seed), [2, 2], [2, 2], Horizon::Finite(3));
        let s = base.clone().with_comm_cost(CommCost::Fixed(rho));
        let opts = SolveOptions::default();
        let opt = solve(&s, opts).unwrap().initial_value();
        let never = baseline_never(&s, opts).unwrap().initial_value();
        let always = baseline_always(&s, opts).unwrap().initial_value();
        prop_assert!(opt <= never.min(always) + 1e-9);
        let dearer = solve(&base.with_comm_cost(CommCost::Fixed(rho + extra)), opts).unwrap().initial_value();
        prop_assert!(opt <= dearer + 1e-9);
    }
}

#[test]
fn grid_solve_is_deterministic() {
    let s = random_binary(&mut rng(9), Horizon::Discounted);
    let a = solve(&s, SolveOptions::grid(15)).unwrap();
    let b = solve(&s, SolveOptions::grid(15)).unwrap();
    assert_eq!(a.report.to_lines(true), b.report.to_lines(true));
    assert_eq!(a.report.residual_history, b.report.residual_history);
}
