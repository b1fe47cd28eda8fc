//! One-phase Bellman backups of the coordinator's dynamic program.

use serde::Serialize;

use crate::belief::{
    beta_pair, erasure_outcome_probs, eta_erasure_pair, eta_pair, expected_comm_cost,
    prob_comm_outcome, prob_no_comm, BeliefPair,
};
use crate::error::{Error, Result};
use crate::prescriptions::{
    enumerate_comm_pairs, enumerate_ctrl_pairs, CommPair, CtrlPair, DEFAULT_ENUMERATION_CAP,
};
use crate::scenario::{CommConstraints, Observation, Scenario};

/// Branches at or below this probability are not expanded.
pub const PROB_FLOOR: f64 = 1e-12;

/// Relative slack under which two candidate values count as tied.
const TIE_TOL: f64 = 1e-12;

/// Which communication prescriptions the coordinator may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommMode {
    #[default]
    Optimize,
    /// Only `(all-zero, all-zero)`.
    Never,
    /// Only `(all-one, all-one)`.
    Always,
}

/// Time since the last communication and number of communications so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ConstraintState {
    pub since_last: u32,
    pub count: u32,
}

impl ConstraintState {
    /// State at the first step: a virtual communication at time 0.
    pub const INITIAL: ConstraintState = ConstraintState {
        since_last: 1,
        count: 0,
    };
}

/// Scenario plus its enumerated prescription spaces.
#[derive(Debug, Clone)]
pub struct Model<'a> {
    pub scenario: &'a Scenario,
    pub comm_pairs: Vec<CommPair>,
    pub ctrl_pairs: Vec<CtrlPair>,
    /// Discount applied after the communication phase.
    pub comm_factor: f64,
    /// Discount applied after the control phase.
    pub ctrl_factor: f64,
    /// Resolve communication with the erasure-channel updates. Set whenever
    /// `erasure_prob > 0`; may be forced on for cross-checks.
    pub erasure_channel: bool,
}

impl<'a> Model<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        Self::with_cap(scenario, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(scenario: &'a Scenario, cap: u128) -> Result<Self> {
        scenario.validate()?;
        if scenario.erasure_prob > 0.0 && scenario.constraints.is_some() {
            return Err(Error::Unsupported(
                "communication constraints combined with an erasure channel".into(),
            ));
        }
        let (comm_factor, ctrl_factor) = scenario.discount_mode.phase_factors(scenario.discount);
        Ok(Self {
            scenario,
            comm_pairs: enumerate_comm_pairs(scenario, cap)?,
            ctrl_pairs: enumerate_ctrl_pairs(scenario, cap)?,
            comm_factor,
            ctrl_factor,
            erasure_channel: scenario.erasure_prob > 0.0,
        })
    }

    pub fn initial_pair(&self) -> BeliefPair {
        let [a, b] = &self.scenario.agents;
        BeliefPair::new(
            crate::belief::Belief::new(a.initial.clone()).expect("validated initial distribution"),
            crate::belief::Belief::new(b.initial.clone()).expect("validated initial distribution"),
        )
    }

    pub fn silent_index(&self) -> usize {
        0
    }

    pub fn always_index(&self) -> usize {
        self.comm_pairs.len() - 1
    }

    /// Largest reachable value of `since_last`; beyond it behaviour repeats.
    pub fn since_last_cap(&self) -> u32 {
        match self.scenario.constraints {
            Some(c) => c.s_max.unwrap_or(c.s_min.max(1)),
            None => 1,
        }
    }

    /// Indices of the communication pairs allowed in `cstate`.
    pub fn feasible_comm(
        &self,
        mode: CommMode,
        cstate: Option<ConstraintState>,
    ) -> Result<Vec<usize>> {
        let by_mode = || match mode {
            CommMode::Optimize => (0..self.comm_pairs.len()).collect(),
            CommMode::Never => vec![self.silent_index()],
            CommMode::Always => vec![self.always_index()],
        };
        let (Some(c), Some(s)) = (self.scenario.constraints, cstate) else {
            return Ok(by_mode());
        };
        let forced = c.s_max.is_some_and(|m| s.since_last >= m);
        let exhausted = c.max_count.is_some_and(|n| s.count >= n);
        if exhausted && forced {
            return Err(Error::ForcedCommunicationOverBudget {
                since_last: s.since_last,
                count: s.count,
            });
        }
        let allowed: Vec<usize> = if exhausted || s.since_last < c.s_min {
            vec![self.silent_index()]
        } else if forced {
            vec![self.always_index()]
        } else {
            return Ok(by_mode());
        };
        match mode {
            CommMode::Optimize => Ok(allowed),
            _ => Ok(allowed
                .into_iter()
                .filter(|i| by_mode().contains(i))
                .collect()),
        }
    }

    /// Constraint state after the communication phase.
    /// Unconstrained scenarios keep the state fixed, and the count only
    /// advances when there is a budget to track.
    pub fn after_comm(&self, s: ConstraintState, communicated: bool) -> ConstraintState {
        match self.scenario.constraints {
            Some(c) if communicated => ConstraintState {
                since_last: 0,
                count: if c.max_count.is_some() {
                    s.count + 1
                } else {
                    0
                },
            },
            _ => s,
        }
    }

    /// Constraint state at the start of the next step.
    pub fn next_step(&self, s: ConstraintState) -> ConstraintState {
        if self.scenario.constraints.is_none() {
            return s;
        }
        ConstraintState {
            since_last: (s.since_last + 1).min(self.since_last_cap()),
            count: s.count,
        }
    }
}

pub fn constraints_active(c: Option<&CommConstraints>) -> bool {
    c.is_some_and(|c| *c != CommConstraints::VACUOUS)
}

/// A positive-probability outcome of the communication phase.
#[derive(Debug, Clone)]
pub struct CommBranch {
    pub prob: f64,
    pub post: BeliefPair,
    /// Whether states were exchanged.
    pub communicated: bool,
}

/// Expected communication cost and outcome branches for `gamma` at `pair`.
pub fn comm_branches(
    model: &Model,
    pair: &BeliefPair,
    gamma: &CommPair,
) -> Result<(f64, Vec<CommBranch>)> {
    let scenario = model.scenario;
    let rho_term = expected_comm_cost(pair, gamma, |x1, x2| scenario.comm_cost.at(x1, x2));
    let mut branches = Vec::new();
    if model.erasure_channel {
        for (outcome, prob) in erasure_outcome_probs(pair, gamma, scenario.erasure_prob) {
            if prob > PROB_FLOOR {
                branches.push(CommBranch {
                    prob,
                    post: eta_erasure_pair(pair, gamma, outcome, scenario.erasure_prob)?,
                    communicated: outcome.z != Observation::Phi,
                });
            }
        }
    } else {
        let silent = prob_no_comm(pair, gamma);
        if silent > PROB_FLOOR {
            branches.push(CommBranch {
                prob: silent,
                post: eta_pair(pair, gamma, Observation::Phi)?,
                communicated: false,
            });
        }
        let [n1, n2] = pair.lens();
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                let prob = prob_comm_outcome(pair, gamma, x1, x2);
                if prob > PROB_FLOOR {
                    branches.push(CommBranch {
                        prob,
                        post: BeliefPair::deltas([n1, n2], x1, x2),
                        communicated: true,
                    });
                }
            }
        }
    }
    Ok((rho_term, branches))
}

/// Expected stage cost of `lambda` at `pair` and the propagated beliefs.
pub fn ctrl_terms(
    model: &Model,
    pair: &BeliefPair,
    lambda: &CtrlPair,
) -> Result<(f64, BeliefPair)> {
    let [n1, n2] = pair.lens();
    let cost = &model.scenario.cost;
    let mut expected = 0.0;
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            let w = pair.joint(x1, x2);
            if w != 0.0 {
                let (u1, u2) = lambda.actions(x1, x2);
                expected += w * cost.get(x1, x2, u1, u2);
            }
        }
    }
    Ok((expected, beta_pair(pair, lambda, &model.scenario.agents)?))
}

/// Index of the first candidate within tie tolerance of the minimum.
pub fn argmin_first(values: &[f64]) -> Option<(f64, usize)> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() || min.is_nan() {
        return None;
    }
    let slack = TIE_TOL * (1.0 + min.abs());
    values
        .iter()
        .position(|&v| v <= min + slack)
        .map(|i| (values[i], i))
}

/// Control-phase backup: `min_λ E[c] + θ·V_next(β(pair, λ))`.
pub fn control_backup(
    model: &Model,
    pair: &BeliefPair,
    mut v_next: impl FnMut(&BeliefPair) -> Result<f64>,
) -> Result<(f64, usize)> {
    let mut values = Vec::with_capacity(model.ctrl_pairs.len());
    for lambda in &model.ctrl_pairs {
        let (cost, next) = ctrl_terms(model, pair, lambda)?;
        values.push(cost + model.ctrl_factor * v_next(&next)?);
    }
    Ok(argmin_first(&values).expect("at least one control pair"))
}

/// Communication-phase backup over the pairs allowed in `cstate`.
///
/// `v_plus` receives each post-communication belief pair and whether states
/// were exchanged.
pub fn comm_backup(
    model: &Model,
    pair: &BeliefPair,
    mode: CommMode,
    cstate: Option<ConstraintState>,
    mut v_plus: impl FnMut(&BeliefPair, bool) -> Result<f64>,
) -> Result<(f64, usize)> {
    let allowed = model.feasible_comm(mode, cstate)?;
    let mut values = Vec::with_capacity(allowed.len());
    for &g in &allowed {
        let (rho_term, branches) = comm_branches(model, pair, &model.comm_pairs[g])?;
        let mut future = 0.0;
        for b in &branches {
            future += b.prob * v_plus(&b.post, b.communicated)?;
        }
        values.push(rho_term + model.comm_factor * future);
    }
    let (value, k) = argmin_first(&values)
        .ok_or_else(|| Error::InfeasibleConstraints("no feasible prescription".into()))?;
    Ok((value, allowed[k]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::Belief;
    use crate::prescriptions::CommPrescription;
    use crate::scenario::{defense_symmetric, CommCost};

    #[test]
    fn terminal_control_backup_from_safe_state() {
        let s = defense_symmetric(0.0);
        let model = Model::new(&s).unwrap();
        let (value, k) =
            control_backup(&model, &BeliefPair::deltas([2, 2], 0, 0), |_| Ok(0.0)).unwrap();
        assert_eq!(value, 0.0);
        assert_eq!(k, 0);
    }

    #[test]
    fn terminal_control_backup_under_attack() {
        let s = defense_symmetric(0.0);
        let model = Model::new(&s).unwrap();
        let (value, k) =
            control_backup(&model, &BeliefPair::deltas([2, 2], 1, 1), |_| Ok(0.0)).unwrap();
        assert_eq!(value, 20.0);
        let (u1, u2) = model.ctrl_pairs[k].actions(1, 1);
        assert!(!(u1 == 1 && u2 == 1));
    }

    #[test]
    fn silent_pair_reduces_to_v_plus() {
        let s = defense_symmetric(3.0);
        let model = Model::new(&s).unwrap();
        let pair = BeliefPair::new(Belief::new(vec![0.4, 0.6]).unwrap(), Belief::uniform(2));
        let (rho, branches) = comm_branches(&model, &pair, &model.comm_pairs[0]).unwrap();
        assert_eq!(rho, 0.0);
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].post, pair);
        assert_eq!(branches[0].prob, 1.0);
    }

    #[test]
    fn rho_term_example() {
        let s = defense_symmetric(8.0);
        let model = Model::new(&s).unwrap();
        let pair = BeliefPair::new(Belief::uniform(2), Belief::uniform(2));
        let gamma = CommPair([
            CommPrescription {
                mask: 0b10,
                width: 2,
            },
            CommPrescription::silent(2),
        ]);
        let (rho, branches) = comm_branches(&model, &pair, &gamma).unwrap();
        assert_eq!(rho, 4.0);
        let total: f64 = branches.iter().map(|b| b.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn state_dependent_rho() {
        let s = defense_symmetric(0.0).with_comm_cost(CommCost::StateDependent(vec![
            vec![1.0, 2.0],
            vec![3.0, 4.0],
        ]));
        let model = Model::new(&s).unwrap();
        let pair = BeliefPair::new(Belief::uniform(2), Belief::uniform(2));
        let (rho, _) =
            comm_branches(&model, &pair, &model.comm_pairs[model.always_index()]).unwrap();
        assert!((rho - 2.5).abs() < 1e-15);
    }

    #[test]
    fn constrained_feasible_sets() {
        use crate::scenario::{CommConstraints, Horizon};
        let s = defense_symmetric(1.0)
            .with_horizon(Horizon::Finite(10))
            .with_constraints(Some(CommConstraints {
                s_min: 2,
                s_max: Some(4),
                max_count: Some(3),
            }));
        let model = Model::new(&s).unwrap();
        let at = |since_last, count| {
            model.feasible_comm(
                CommMode::Optimize,
                Some(ConstraintState { since_last, count }),
            )
        };
        assert_eq!(at(1, 0).unwrap(), vec![0]);
        assert_eq!(at(2, 0).unwrap().len(), 16);
        assert_eq!(at(4, 0).unwrap(), vec![15]);
        assert_eq!(at(3, 3).unwrap(), vec![0]);
        assert!(matches!(
            at(4, 3),
            Err(Error::ForcedCommunicationOverBudget { .. })
        ));
    }

    #[test]
    fn argmin_prefers_first_tie() {
        assert_eq!(argmin_first(&[3.0, 1.0, 1.0 + 1e-15, 2.0]), Some((1.0, 1)));
        assert_eq!(argmin_first(&[2.0, 2.0]), Some((2.0, 0)));
        assert_eq!(argmin_first(&[]), None);
    }
}
