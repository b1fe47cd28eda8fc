//! Exhaustive computations on the joint state, independent of the factored
//! belief filters. Only practical for very small instances.

use crate::error::{Error, Result};
use crate::prescriptions::{
    enumerate_comm_pairs, enumerate_ctrl_pairs, CommPair, CtrlPair, PrescriptionPair,
};
use crate::scenario::{Observation, Scenario};

const ORACLE_CAP: u128 = 100_000_000;

/// Distribution over joint states, row-major in `(x1, x2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pub dims: [usize; 2],
    pub probs: Vec<f64>,
}

impl JointDistribution {
    pub fn get(&self, x1: usize, x2: usize) -> f64 {
        self.probs[x1 * self.dims[1] + x2]
    }

    pub fn marginals(&self) -> [Vec<f64>; 2] {
        let [n1, n2] = self.dims;
        let mut m = [vec![0.0; n1], vec![0.0; n2]];
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                m[0][x1] += self.get(x1, x2);
                m[1][x2] += self.get(x1, x2);
            }
        }
        m
    }

    /// Largest `|P(x1,x2) − P1(x1)·P2(x2)|`.
    pub fn factorization_error(&self) -> f64 {
        let [m1, m2] = self.marginals();
        let mut worst = 0.0f64;
        for (x1, a) in m1.iter().enumerate() {
            for (x2, b) in m2.iter().enumerate() {
                worst = worst.max((self.get(x1, x2) - a * b).abs());
            }
        }
        worst
    }
}

fn initial_joint(scenario: &Scenario) -> Vec<f64> {
    let [a, b] = &scenario.agents;
    a.initial
        .iter()
        .flat_map(|p| b.initial.iter().map(move |q| p * q))
        .collect()
}

fn propagate(scenario: &Scenario, joint: &[f64], lambda: &CtrlPair) -> Vec<f64> {
    let [n1, n2] = scenario.num_states();
    let [d1, d2] = &scenario.agents;
    let mut next = vec![0.0; n1 * n2];
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            let w = joint[x1 * n2 + x2];
            if w == 0.0 {
                continue;
            }
            let (u1, u2) = lambda.actions(x1, x2);
            for y1 in 0..n1 {
                let p1 = d1.prob(x1, u1, y1);
                if p1 == 0.0 {
                    continue;
                }
                for y2 in 0..n2 {
                    next[y1 * n2 + y2] += w * p1 * d2.prob(x2, u2, y2);
                }
            }
        }
    }
    next
}

/// Exact `P(x1, x2 | history)` by forward enumeration of the joint state.
///
/// The history applies `prescriptions` in order; each communication
/// prescription consumes the next entry of `observations`.
pub fn exact_joint_filter(
    scenario: &Scenario,
    prescriptions: &[PrescriptionPair],
    observations: &[Observation],
) -> Result<JointDistribution> {
    if scenario.erasure_prob > 0.0 {
        return Err(Error::Unsupported(
            "joint filter covers the lossless channel only".into(),
        ));
    }
    let comms = prescriptions
        .iter()
        .filter(|p| matches!(p, PrescriptionPair::Comm(_)))
        .count();
    if comms != observations.len() {
        return Err(Error::DimensionMismatch {
            path: "observations".into(),
            expected: comms,
            found: observations.len(),
        });
    }
    let [n1, n2] = scenario.num_states();
    let mut joint = initial_joint(scenario);
    let mut obs = observations.iter();
    for p in prescriptions {
        match p {
            PrescriptionPair::Comm(gamma) => {
                let z = *obs.next().expect("counted above");
                for x1 in 0..n1 {
                    for x2 in 0..n2 {
                        let keep = match z {
                            Observation::Phi => !gamma.fires(x1, x2),
                            Observation::Joint(a, b) => (a, b) == (x1, x2) && gamma.fires(x1, x2),
                        };
                        if !keep {
                            joint[x1 * n2 + x2] = 0.0;
                        }
                    }
                }
            }
            PrescriptionPair::Ctrl(lambda) => joint = propagate(scenario, &joint, lambda),
        }
    }
    let total: f64 = joint.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbabilityHistory);
    }
    Ok(JointDistribution {
        dims: [n1, n2],
        probs: joint.into_iter().map(|p| p / total).collect(),
    })
}

/// Weight with which joint state `(x1, x2)` produces each communication
/// outcome, as `(outcome tag, weight)` pairs. Tags: `None` for an exchange,
/// `Some(m)` for silence or an erased transmission with decisions `m`.
fn outcome_weight(
    gamma: &CommPair,
    x1: usize,
    x2: usize,
    p_e: f64,
) -> [(Option<(u8, u8)>, f64); 2] {
    let m = gamma.decisions(x1, x2);
    if m == (0, 0) {
        [(Some(m), 1.0), (None, 0.0)]
    } else {
        [(Some(m), p_e), (None, 1.0 - p_e)]
    }
}

/// Splits an unnormalized joint distribution by communication outcome.
fn split_outcomes(scenario: &Scenario, joint: &[f64], gamma: &CommPair) -> Vec<Vec<f64>> {
    let [n1, n2] = scenario.num_states();
    let p_e = scenario.erasure_prob;
    let ms = [(0u8, 0u8), (0, 1), (1, 0), (1, 1)];
    let mut silent = vec![vec![0.0; n1 * n2]; 4];
    let mut out = Vec::new();
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            let w = joint[x1 * n2 + x2];
            if w == 0.0 {
                continue;
            }
            for (tag, weight) in outcome_weight(gamma, x1, x2, p_e) {
                if weight == 0.0 {
                    continue;
                }
                match tag {
                    Some(m) => {
                        let k = ms.iter().position(|&c| c == m).expect("binary decisions");
                        silent[k][x1 * n2 + x2] += weight * w;
                    }
                    None => {
                        let mut part = vec![0.0; n1 * n2];
                        part[x1 * n2 + x2] = weight * w;
                        out.push(part);
                    }
                }
            }
        }
    }
    out.extend(silent.into_iter().filter(|p| p.iter().any(|&w| w != 0.0)));
    out
}

fn reject_constraints(scenario: &Scenario) -> Result<()> {
    if scenario.constraints.is_some() {
        return Err(Error::Unsupported(
            "tree search does not model communication constraints".into(),
        ));
    }
    Ok(())
}

struct Tree<'a> {
    scenario: &'a Scenario,
    comm: Vec<CommPair>,
    ctrl: Vec<CtrlPair>,
    theta_c: f64,
    theta_k: f64,
}

impl Tree<'_> {
    fn comm_node(&self, joint: &[f64], depth: usize) -> f64 {
        if depth == 0 {
            return 0.0;
        }
        let [_, n2] = self.scenario.num_states();
        let mut best = f64::INFINITY;
        for gamma in &self.comm {
            let mut value = 0.0;
            for (i, &w) in joint.iter().enumerate() {
                if w != 0.0 && gamma.fires(i / n2, i % n2) {
                    value += w * self.scenario.comm_cost.at(i / n2, i % n2);
                }
            }
            let future: f64 = split_outcomes(self.scenario, joint, gamma)
                .iter()
                .map(|part| self.ctrl_node(part, depth))
                .sum();
            best = best.min(value + self.theta_c * future);
        }
        best
    }

    fn ctrl_node(&self, joint: &[f64], depth: usize) -> f64 {
        let [_, n2] = self.scenario.num_states();
        let mut best = f64::INFINITY;
        for lambda in &self.ctrl {
            let mut value = 0.0;
            for (i, &w) in joint.iter().enumerate() {
                if w != 0.0 {
                    let (u1, u2) = lambda.actions(i / n2, i % n2);
                    value += w * self.scenario.cost.get(i / n2, i % n2, u1, u2);
                }
            }
            let future = if depth > 1 {
                self.comm_node(&propagate(self.scenario, joint, lambda), depth - 1)
            } else {
                0.0
            };
            best = best.min(value + self.theta_k * future);
        }
        best
    }
}

/// Optimal expected cost over `depth` steps by exhaustive search of the
/// coordinator's decision tree: a communication pair at the root, a control
/// pair per communication outcome, and so on, evaluated on unnormalized
/// joint distributions.
pub fn brute_force_tree(scenario: &Scenario, depth: usize) -> Result<f64> {
    scenario.validate()?;
    reject_constraints(scenario)?;
    let comm = enumerate_comm_pairs(scenario, ORACLE_CAP)?;
    let ctrl = enumerate_ctrl_pairs(scenario, ORACLE_CAP)?;
    let [n1, n2] = scenario.num_states();
    let outcomes = (n1 * n2 + 4) as u128;
    let per_level = comm.len() as u128 * outcomes * ctrl.len() as u128;
    let count = (0..depth).fold(1u128, |acc, _| acc.saturating_mul(per_level));
    if count > ORACLE_CAP {
        return Err(Error::EnumerationCap {
            what: "decision-tree leaves",
            count,
            cap: ORACLE_CAP,
        });
    }
    let (theta_c, theta_k) = scenario.discount_mode.phase_factors(scenario.discount);
    let tree = Tree {
        scenario,
        comm,
        ctrl,
        theta_c,
        theta_k,
    };
    Ok(tree.comm_node(&initial_joint(scenario), depth))
}

pub fn brute_force_t2(scenario: &Scenario) -> Result<f64> {
    brute_force_tree(scenario, 2)
}

/// Decodes `code` as a map from `len` local states to `base` symbols.
fn decode(mut code: usize, base: usize, len: usize) -> Vec<usize> {
    (0..len)
        .map(|_| {
            let d = code % base;
            code /= base;
            d
        })
        .collect()
}

/// Optimal single-step cost over decentralized strategies
/// `mⁱ = fⁱ(xⁱ)`, `uⁱ = gⁱ(xⁱ, o)` where `o` is the post-communication
/// common information.
///
/// The expected cost is a sum over outcomes `o`, and `gⁱ(·, o)` for
/// different outcomes are independent components of the strategy, so each
/// outcome's control maps are enumerated separately. Constraints are
/// applied as at the first step.
pub fn brute_force_t1(scenario: &Scenario) -> Result<f64> {
    scenario.validate()?;
    let [n1, n2] = scenario.num_states();
    let [a1, a2] = scenario.num_actions();
    let p_e = scenario.erasure_prob;
    let (theta_c, _) = scenario.discount_mode.phase_factors(scenario.discount);
    let f_count = (1usize << n1) * (1usize << n2);
    let g_count = (a1 as u128).pow(n1 as u32) * (a2 as u128).pow(n2 as u32);
    let count = f_count as u128 * (n1 * n2 + 4) as u128 * g_count;
    if count > ORACLE_CAP {
        return Err(Error::EnumerationCap {
            what: "single-step strategy profiles",
            count,
            cap: ORACLE_CAP,
        });
    }
    let g_count = g_count as usize;

    // At the first step one step has passed since the virtual communication.
    let (may_send, must_send) = match scenario.constraints {
        None => (true, false),
        Some(c) => (c.s_min <= 1 && c.max_count != Some(0), c.s_max == Some(1)),
    };
    if must_send && !may_send {
        return Err(Error::InfeasibleConstraints(
            "communication forced with no budget".into(),
        ));
    }

    let prior = initial_joint(scenario);
    let mut best = f64::INFINITY;
    for code in 0..f_count {
        let f1 = decode(code % (1 << n1), 2, n1);
        let f2 = decode(code >> n1, 2, n2);
        let silent = f1.iter().chain(&f2).all(|&m| m == 0);
        let always = f1.iter().chain(&f2).all(|&m| m == 1);
        if (!may_send && !silent) || (must_send && !always) {
            continue;
        }
        // Weight of each joint state within each outcome.
        let mut outcomes: Vec<Vec<f64>> = Vec::new();
        let mut silent_parts = vec![vec![0.0; n1 * n2]; 4];
        let mut value = 0.0;
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                let w = prior[x1 * n2 + x2];
                let m = (f1[x1], f2[x2]);
                if m == (0, 0) {
                    silent_parts[0][x1 * n2 + x2] += w;
                    continue;
                }
                value += w * scenario.comm_cost.at(x1, x2);
                silent_parts[m.0 * 2 + m.1][x1 * n2 + x2] += p_e * w;
                let mut exchanged = vec![0.0; n1 * n2];
                exchanged[x1 * n2 + x2] = (1.0 - p_e) * w;
                outcomes.push(exchanged);
            }
        }
        outcomes.extend(silent_parts);
        let mut stage = 0.0;
        for part in outcomes.iter().filter(|p| p.iter().any(|&w| w != 0.0)) {
            let mut least = f64::INFINITY;
            for g in 0..g_count {
                let g1 = decode(g % a1.pow(n1 as u32), a1, n1);
                let g2 = decode(g / a1.pow(n1 as u32), a2, n2);
                let mut c = 0.0;
                for x1 in 0..n1 {
                    for x2 in 0..n2 {
                        let w = part[x1 * n2 + x2];
                        if w != 0.0 {
                            c += w * scenario.cost.get(x1, x2, g1[x1], g2[x2]);
                        }
                    }
                }
                least = least.min(c);
            }
            stage += least;
        }
        best = best.min(value + theta_c * stage);
    }
    Ok(best)
}
