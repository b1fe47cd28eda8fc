//! Factored coordinator beliefs and their updates.
//!
//! The coordinator's posterior over the joint state factors into one belief
//! per agent. `eta` conditions a belief on the communication outcome and
//! `beta` pushes it through the agent's dynamics under a control
//! prescription.

use std::ops::Index;

use crate::error::{Error, Result};
use crate::prescriptions::{CommPair, CommPrescription, CtrlPair, CtrlPrescription};
use crate::scenario::{AgentDynamics, Observation};

/// Tolerated mass drift before renormalization.
pub const DRIFT_TOL: f64 = 1e-6;

/// Probability vector over one agent's local states.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Validates and wraps a probability vector.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::OutOfRange {
                path: "belief".into(),
                value: weights.iter().copied().fold(f64::NAN, f64::min),
                message: "weights must be nonnegative and finite".into(),
            });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NonStochasticRow {
                path: "belief".into(),
                sum,
            });
        }
        Ok(Belief(weights))
    }

    pub fn delta(len: usize, at: usize) -> Self {
        let mut w = vec![0.0; len];
        w[at] = 1.0;
        Belief(w)
    }

    pub fn uniform(len: usize) -> Self {
        Belief(vec![1.0 / len as f64; len])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Mass on states where the prescription outputs `decision`.
    #[inline]
    pub fn mass_where(&self, gamma: &CommPrescription, decision: u8) -> f64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(x, _)| gamma.eval(*x) == decision)
            .map(|(_, w)| w)
            .sum()
    }

    /// Conditions on `{x : gamma(x) == decision}`.
    pub fn condition(&self, gamma: &CommPrescription, decision: u8) -> Result<Belief> {
        let normalizer = self.mass_where(gamma, decision);
        if normalizer <= 0.0 {
            return Err(Error::ZeroNormalizer);
        }
        Ok(Belief(
            self.0
                .iter()
                .enumerate()
                .map(|(x, w)| {
                    if gamma.eval(x) == decision {
                        w / normalizer
                    } else {
                        0.0
                    }
                })
                .collect(),
        ))
    }

    fn renormalized(mut weights: Vec<f64>) -> Result<Belief> {
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > DRIFT_TOL {
            return Err(Error::BeliefDrift((sum - 1.0).abs()));
        }
        for w in &mut weights {
            *w /= sum;
        }
        Ok(Belief(weights))
    }
}

impl Index<usize> for Belief {
    type Output = f64;

    fn index(&self, x: usize) -> &f64 {
        &self.0[x]
    }
}

/// Beliefs about agent 1 and agent 2.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefPair(pub [Belief; 2]);

impl BeliefPair {
    pub fn new(first: Belief, second: Belief) -> Self {
        BeliefPair([first, second])
    }

    pub fn deltas(lens: [usize; 2], x1: usize, x2: usize) -> Self {
        BeliefPair([Belief::delta(lens[0], x1), Belief::delta(lens[1], x2)])
    }

    #[inline]
    pub fn joint(&self, x1: usize, x2: usize) -> f64 {
        self.0[0][x1] * self.0[1][x2]
    }

    pub fn lens(&self) -> [usize; 2] {
        [self.0[0].len(), self.0[1].len()]
    }
}

/// `P(Z = φ)` under the base model.
pub fn prob_no_comm(pair: &BeliefPair, gamma: &CommPair) -> f64 {
    pair.0[0].mass_where(&gamma.0[0], 0) * pair.0[1].mass_where(&gamma.0[1], 0)
}

/// `P(Z = (x1, x2))` under the base model.
pub fn prob_comm_outcome(pair: &BeliefPair, gamma: &CommPair, x1: usize, x2: usize) -> f64 {
    if gamma.fires(x1, x2) {
        pair.joint(x1, x2)
    } else {
        0.0
    }
}

/// Expected communication cost `Σ ρ(x)·max(γ¹(x¹), γ²(x²))·π¹(x¹)π²(x²)`.
pub fn expected_comm_cost(
    pair: &BeliefPair,
    gamma: &CommPair,
    rho: impl Fn(usize, usize) -> f64,
) -> f64 {
    let [n1, n2] = pair.lens();
    let mut total = 0.0;
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            if gamma.fires(x1, x2) {
                total += rho(x1, x2) * pair.joint(x1, x2);
            }
        }
    }
    total
}

/// Post-communication update of agent `agent`'s belief.
pub fn eta(
    agent: usize,
    belief: &Belief,
    gamma: &CommPrescription,
    z: Observation,
) -> Result<Belief> {
    match z {
        Observation::Joint(x1, x2) => Ok(Belief::delta(
            belief.len(),
            if agent == 0 { x1 } else { x2 },
        )),
        Observation::Phi => belief.condition(gamma, 0),
    }
}

pub fn eta_pair(pair: &BeliefPair, gamma: &CommPair, z: Observation) -> Result<BeliefPair> {
    Ok(BeliefPair([
        eta(0, &pair.0[0], &gamma.0[0], z)?,
        eta(1, &pair.0[1], &gamma.0[1], z)?,
    ]))
}

/// Propagation through the dynamics: `π'(x') = Σ_x P(x'|x, λ(x)) π(x)`.
pub fn beta(
    belief: &Belief,
    lambda: &CtrlPrescription,
    dynamics: &AgentDynamics,
) -> Result<Belief> {
    let n = belief.len();
    let mut next = vec![0.0; n];
    for (x, &w) in belief.weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let row = &dynamics.transition[x][lambda.eval(x)];
        for (y, p) in row.iter().enumerate() {
            next[y] += p * w;
        }
    }
    Belief::renormalized(next)
}

pub fn beta_pair(
    pair: &BeliefPair,
    lambda: &CtrlPair,
    agents: &[AgentDynamics; 2],
) -> Result<BeliefPair> {
    Ok(BeliefPair([
        beta(&pair.0[0], &lambda.0[0], &agents[0])?,
        beta(&pair.0[1], &lambda.0[1], &agents[1])?,
    ]))
}

/// Communication outcome under the erasure channel: what was exchanged and
/// the (always observed) decision pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ErasureOutcome {
    pub z: Observation,
    pub m: (u8, u8),
}

/// Post-communication update under the erasure channel.
pub fn eta_erasure(
    agent: usize,
    belief: &Belief,
    gamma: &CommPrescription,
    outcome: ErasureOutcome,
    p_e: f64,
) -> Result<Belief> {
    let own_m = if agent == 0 { outcome.m.0 } else { outcome.m.1 };
    match outcome.z {
        Observation::Joint(..) if outcome.m == (0, 0) => Err(Error::IllegalOutcome(
            "states exchanged although neither agent communicated".into(),
        )),
        Observation::Joint(..) if p_e >= 1.0 => Err(Error::IllegalOutcome(
            "states exchanged on a channel that erases everything".into(),
        )),
        Observation::Joint(..) => eta(agent, belief, gamma, outcome.z),
        Observation::Phi if outcome.m == (0, 0) => belief.condition(gamma, 0),
        Observation::Phi if p_e <= 0.0 => Err(Error::IllegalOutcome(
            "erased communication on a lossless channel".into(),
        )),
        Observation::Phi => belief.condition(gamma, own_m),
    }
}

pub fn eta_erasure_pair(
    pair: &BeliefPair,
    gamma: &CommPair,
    outcome: ErasureOutcome,
    p_e: f64,
) -> Result<BeliefPair> {
    Ok(BeliefPair([
        eta_erasure(0, &pair.0[0], &gamma.0[0], outcome, p_e)?,
        eta_erasure(1, &pair.0[1], &gamma.0[1], outcome, p_e)?,
    ]))
}

/// Distribution over erasure-channel outcomes. Entries with zero probability
/// are included; the order is φ with m = (0,0), (0,1), (1,0), (1,1), then
/// joint states in row-major order.
pub fn erasure_outcome_probs(
    pair: &BeliefPair,
    gamma: &CommPair,
    p_e: f64,
) -> Vec<(ErasureOutcome, f64)> {
    let [n1, n2] = pair.lens();
    let mut out = Vec::with_capacity(4 + n1 * n2);
    for m in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
        let mass = pair.0[0].mass_where(&gamma.0[0], m.0) * pair.0[1].mass_where(&gamma.0[1], m.1);
        let p = if m == (0, 0) { mass } else { p_e * mass };
        out.push((
            ErasureOutcome {
                z: Observation::Phi,
                m,
            },
            p,
        ));
    }
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            let p = if gamma.fires(x1, x2) {
                (1.0 - p_e) * pair.joint(x1, x2)
            } else {
                0.0
            };
            out.push((
                ErasureOutcome {
                    z: Observation::Joint(x1, x2),
                    m: gamma.decisions(x1, x2),
                },
                p,
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::defense_symmetric;

    const COMM_IFF_1: CommPrescription = CommPrescription {
        mask: 0b10,
        width: 2,
    };
    const SILENT: CommPrescription = CommPrescription { mask: 0, width: 2 };

    fn uniform_pair() -> BeliefPair {
        BeliefPair::new(Belief::uniform(2), Belief::uniform(2))
    }

    #[test]
    fn no_comm_probabilities() {
        let pair = uniform_pair();
        assert_eq!(prob_no_comm(&pair, &CommPair::silent([2, 2])), 1.0);
        // Joint states (0,0), (0,1) stay silent: 2 of 4 equally likely states.
        assert_eq!(prob_no_comm(&pair, &CommPair([COMM_IFF_1, SILENT])), 0.5);
        let deltas = BeliefPair::deltas([2, 2], 1, 0);
        assert_eq!(prob_no_comm(&deltas, &CommPair([COMM_IFF_1, SILENT])), 0.0);
    }

    #[test]
    fn comm_outcome_probabilities() {
        let pair = uniform_pair();
        let silent = CommPair::silent([2, 2]);
        for x1 in 0..2 {
            for x2 in 0..2 {
                assert_eq!(prob_comm_outcome(&pair, &silent, x1, x2), 0.0);
            }
        }
        let gamma = CommPair([COMM_IFF_1, SILENT]);
        assert_eq!(prob_comm_outcome(&pair, &gamma, 1, 0), 0.25);
        assert_eq!(prob_comm_outcome(&pair, &gamma, 0, 1), 0.0);
        let deltas = BeliefPair::deltas([2, 2], 1, 1);
        assert_eq!(prob_comm_outcome(&deltas, &gamma, 1, 1), 1.0);
    }

    #[test]
    fn eta_cases() {
        let pi = Belief::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(eta(0, &pi, &SILENT, Observation::Phi).unwrap(), pi);
        assert_eq!(
            eta(0, &pi, &COMM_IFF_1, Observation::Phi)
                .unwrap()
                .weights(),
            &[1.0, 0.0]
        );
        assert_eq!(
            eta(0, &pi, &SILENT, Observation::Joint(1, 0)).unwrap(),
            Belief::delta(2, 1)
        );
        assert_eq!(
            eta(1, &pi, &SILENT, Observation::Joint(1, 0)).unwrap(),
            Belief::delta(2, 0)
        );
    }

    #[test]
    fn eta_zero_normalizer() {
        let pi = Belief::delta(2, 1);
        assert!(matches!(
            eta(0, &pi, &COMM_IFF_1, Observation::Phi),
            Err(Error::ZeroNormalizer)
        ));
    }

    #[test]
    fn beta_identity_and_defense_rows() {
        let identity = AgentDynamics::new(
            vec![vec![vec![1.0, 0.0]; 2], vec![vec![0.0, 1.0]; 2]],
            vec![1.0, 0.0],
        )
        .unwrap();
        let pi = Belief::new(vec![0.3, 0.7]).unwrap();
        let lambda = CtrlPrescription {
            actions: vec![1, 0],
        };
        assert_eq!(beta(&pi, &lambda, &identity).unwrap(), pi);

        let s = defense_symmetric(0.0);
        let defend_in_attack = CtrlPrescription {
            actions: vec![0, 1],
        };
        let out = beta(&Belief::delta(2, 1), &defend_in_attack, &s.agents[0]).unwrap();
        assert!((out[0] - 0.6).abs() < 1e-15 && (out[1] - 0.4).abs() < 1e-15);
        for actions in [vec![0, 0], vec![1, 1]] {
            let out = beta(
                &Belief::delta(2, 0),
                &CtrlPrescription { actions },
                &s.agents[0],
            )
            .unwrap();
            assert!((out[0] - 0.7).abs() < 1e-15 && (out[1] - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn erasure_cases() {
        let pi = Belief::new(vec![0.5, 0.5]).unwrap();
        let attempt = ErasureOutcome {
            z: Observation::Phi,
            m: (1, 0),
        };
        assert_eq!(
            eta_erasure(0, &pi, &COMM_IFF_1, attempt, 0.3).unwrap(),
            Belief::delta(2, 1)
        );
        assert_eq!(eta_erasure(1, &pi, &SILENT, attempt, 0.3).unwrap(), pi);
        let joint = ErasureOutcome {
            z: Observation::Joint(1, 1),
            m: (1, 1),
        };
        assert_eq!(
            eta_erasure(0, &pi, &COMM_IFF_1, joint, 0.3).unwrap(),
            Belief::delta(2, 1)
        );
        let bad = ErasureOutcome {
            z: Observation::Joint(1, 1),
            m: (0, 0),
        };
        assert!(matches!(
            eta_erasure(0, &pi, &COMM_IFF_1, bad, 0.3),
            Err(Error::IllegalOutcome(_))
        ));
    }

    #[test]
    fn erasure_silent_matches_eta_phi() {
        let pi = Belief::new(vec![0.2, 0.8]).unwrap();
        let silent = ErasureOutcome {
            z: Observation::Phi,
            m: (0, 0),
        };
        for p_e in [0.0, 0.4, 1.0] {
            assert_eq!(
                eta_erasure(0, &pi, &COMM_IFF_1, silent, p_e).unwrap(),
                eta(0, &pi, &COMM_IFF_1, Observation::Phi).unwrap()
            );
        }
    }

    #[test]
    fn erasure_outcome_examples() {
        let pair = uniform_pair();
        let gamma = CommPair([COMM_IFF_1, SILENT]);
        let probs = erasure_outcome_probs(&pair, &gamma, 0.5);
        let phi_10 = probs
            .iter()
            .find(|(o, _)| {
                *o == ErasureOutcome {
                    z: Observation::Phi,
                    m: (1, 0),
                }
            })
            .unwrap()
            .1;
        assert_eq!(phi_10, 0.25);
        let total: f64 = probs.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);

        let lost = erasure_outcome_probs(&pair, &CommPair::always([2, 2]), 1.0);
        assert!(lost
            .iter()
            .filter(|(o, _)| o.z != Observation::Phi)
            .all(|(_, p)| *p == 0.0));
    }

    #[test]
    fn erasure_without_loss_reduces_to_base() {
        let pair = BeliefPair::new(
            Belief::new(vec![0.3, 0.7]).unwrap(),
            Belief::new(vec![0.6, 0.4]).unwrap(),
        );
        let gamma = CommPair([
            COMM_IFF_1,
            CommPrescription {
                mask: 0b01,
                width: 2,
            },
        ]);
        let probs = erasure_outcome_probs(&pair, &gamma, 0.0);
        for (o, p) in probs {
            match o.z {
                Observation::Phi if o.m == (0, 0) => assert_eq!(p, prob_no_comm(&pair, &gamma)),
                Observation::Phi => assert_eq!(p, 0.0),
                Observation::Joint(x1, x2) => {
                    assert_eq!(p, prob_comm_outcome(&pair, &gamma, x1, x2))
                }
            }
        }
    }

    #[test]
    fn expected_comm_cost_example() {
        let gamma = CommPair([COMM_IFF_1, SILENT]);
        assert_eq!(expected_comm_cost(&uniform_pair(), &gamma, |_, _| 8.0), 4.0);
    }
}
