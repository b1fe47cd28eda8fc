#![allow(dead_code)]

use commplan::scenario::{AgentDynamics, CommCost, Horizon, JointCost, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}

pub fn agent(rng: &mut ChaCha8Rng, states: usize, actions: usize) -> AgentDynamics {
    let transition = (0..states)
        .map(|_| (0..actions).map(|_| distribution(rng, states)).collect())
        .collect();
    AgentDynamics::new(transition, distribution(rng, states)).unwrap()
}

/// Random scenario with stage costs in [0, 10] and ρ in [0, 5].
pub fn random_scenario(
    rng: &mut ChaCha8Rng,
    states: [usize; 2],
    actions: [usize; 2],
    horizon: Horizon,
) -> Scenario {
    let agents = [
        agent(rng, states[0], actions[0]),
        agent(rng, states[1], actions[1]),
    ];
    let cost = JointCost::from_fn(
        [states[0], states[1], actions[0], actions[1]],
        |_, _, _, _| rng.random_range(0.0..10.0),
    );
    Scenario {
        agents,
        cost,
        comm_cost: CommCost::Fixed(rng.random_range(0.0..5.0)),
        discount: rng.random_range(0.5..0.99),
        discount_mode: Default::default(),
        erasure_prob: 0.0,
        constraints: None,
        horizon,
    }
}

pub fn random_binary(rng: &mut ChaCha8Rng, horizon: Horizon) -> Scenario {
    random_scenario(rng, [2, 2], [2, 2], horizon)
}
