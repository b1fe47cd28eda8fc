//! Coordinator action spaces: communication prescriptions (state → {0,1})
//! and control prescriptions (state → action), enumerated in a fixed order.

use std::fmt;

use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Default cap on the number of prescription pairs of either kind.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 20;

/// Bit `x` is the communication decision in local state `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CommPrescription {
    pub mask: u64,
    pub width: usize,
}

impl CommPrescription {
    pub fn silent(width: usize) -> Self {
        Self { mask: 0, width }
    }

    pub fn always(width: usize) -> Self {
        Self {
            mask: (1u64 << width) - 1,
            width,
        }
    }

    #[inline]
    pub fn eval(&self, x: usize) -> u8 {
        ((self.mask >> x) & 1) as u8
    }

    pub fn is_silent(&self) -> bool {
        self.mask == 0
    }
}

impl fmt::Display for CommPrescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for x in 0..self.width {
            if x > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", self.eval(x))?;
        }
        write!(f, "]")
    }
}

/// `actions[x]` is the control applied in local state `x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CtrlPrescription {
    pub actions: Vec<usize>,
}

impl CtrlPrescription {
    #[inline]
    pub fn eval(&self, x: usize) -> usize {
        self.actions[x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CommPair(pub [CommPrescription; 2]);

impl CommPair {
    pub fn silent(widths: [usize; 2]) -> Self {
        CommPair([
            CommPrescription::silent(widths[0]),
            CommPrescription::silent(widths[1]),
        ])
    }

    pub fn always(widths: [usize; 2]) -> Self {
        CommPair([
            CommPrescription::always(widths[0]),
            CommPrescription::always(widths[1]),
        ])
    }

    /// Decision pair `(m1, m2)` in joint state `(x1, x2)`.
    #[inline]
    pub fn decisions(&self, x1: usize, x2: usize) -> (u8, u8) {
        (self.0[0].eval(x1), self.0[1].eval(x2))
    }

    /// Whether communication happens in joint state `(x1, x2)`.
    #[inline]
    pub fn fires(&self, x1: usize, x2: usize) -> bool {
        self.0[0].eval(x1) == 1 || self.0[1].eval(x2) == 1
    }

    pub fn is_silent(&self) -> bool {
        self.0[0].is_silent() && self.0[1].is_silent()
    }
}

impl fmt::Display for CommPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "γ¹={} γ²={}", self.0[0], self.0[1])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CtrlPair(pub [CtrlPrescription; 2]);

impl CtrlPair {
    #[inline]
    pub fn actions(&self, x1: usize, x2: usize) -> (usize, usize) {
        (self.0[0].eval(x1), self.0[1].eval(x2))
    }

    /// Renders with the scenario's action labels, e.g. `λ¹=[ℵ,d] λ²=[d,ℵ]`.
    pub fn render(&self, scenario: &Scenario) -> String {
        let agent = |i: usize| {
            let labels: Vec<String> = self.0[i]
                .actions
                .iter()
                .map(|&u| scenario.agents[i].action_label(u))
                .collect();
            format!("[{}]", labels.join(","))
        };
        format!("λ¹={} λ²={}", agent(0), agent(1))
    }
}

/// Either kind of coordinator action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrescriptionPair {
    Comm(CommPair),
    Ctrl(CtrlPair),
}

fn checked_count(what: &'static str, per_agent: [u128; 2], cap: u128) -> Result<()> {
    let count = per_agent[0].saturating_mul(per_agent[1]);
    if count > cap {
        return Err(Error::EnumerationCap { what, count, cap });
    }
    Ok(())
}

fn pow_saturating(base: u128, exp: usize) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base))
}

/// All communication prescription pairs in lexicographic `(mask1, mask2)`
/// order; the first is `(all-zero, all-zero)`.
pub fn enumerate_comm_pairs(scenario: &Scenario, cap: u128) -> Result<Vec<CommPair>> {
    let [n1, n2] = scenario.num_states();
    checked_count(
        "communication prescription pair",
        [pow_saturating(2, n1), pow_saturating(2, n2)],
        cap,
    )?;
    let mut out = Vec::with_capacity(1 << (n1 + n2));
    for m1 in 0..(1u64 << n1) {
        for m2 in 0..(1u64 << n2) {
            out.push(CommPair([
                CommPrescription {
                    mask: m1,
                    width: n1,
                },
                CommPrescription {
                    mask: m2,
                    width: n2,
                },
            ]));
        }
    }
    Ok(out)
}

/// Action arrays of length `states` over `actions` symbols in lexicographic
/// order (index 0 most significant).
fn action_arrays(states: usize, actions: usize) -> Vec<CtrlPrescription> {
    let mut out = Vec::new();
    let mut current = vec![0usize; states];
    loop {
        out.push(CtrlPrescription {
            actions: current.clone(),
        });
        let mut pos = states;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            current[pos] += 1;
            if current[pos] < actions {
                break;
            }
            current[pos] = 0;
        }
    }
}

/// All control prescription pairs, lexicographic by the agents' action
/// arrays (agent 1 outer).
pub fn enumerate_ctrl_pairs(scenario: &Scenario, cap: u128) -> Result<Vec<CtrlPair>> {
    let [n1, n2] = scenario.num_states();
    let [a1, a2] = scenario.num_actions();
    checked_count(
        "control prescription pair",
        [
            pow_saturating(a1 as u128, n1),
            pow_saturating(a2 as u128, n2),
        ],
        cap,
    )?;
    let first = action_arrays(n1, a1);
    let second = action_arrays(n2, a2);
    let mut out = Vec::with_capacity(first.len() * second.len());
    for p1 in &first {
        for p2 in &second {
            out.push(CtrlPair([p1.clone(), p2.clone()]));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{defense_symmetric, AgentDynamics, CommCost, JointCost, Scenario};

    fn uniform_scenario(states: usize, actions: usize) -> Scenario {
        let agent = AgentDynamics::new(
            vec![vec![vec![1.0 / states as f64; states]; actions]; states],
            vec![1.0 / states as f64; states],
        )
        .unwrap();
        let mut s = defense_symmetric(0.0);
        s.agents = [agent.clone(), agent];
        s.cost = JointCost::from_fn([states, states, actions, actions], |_, _, _, _| 0.0);
        s.comm_cost = CommCost::Fixed(0.0);
        s.validate().unwrap();
        s
    }

    #[test]
    fn comm_pair_counts() {
        let pairs = enumerate_comm_pairs(&defense_symmetric(0.0), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(pairs.len(), 16);
        let pairs = enumerate_comm_pairs(&uniform_scenario(3, 2), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(pairs.len(), 64);
    }

    #[test]
    fn first_comm_pair_is_silent_everywhere() {
        let s = uniform_scenario(3, 2);
        let first = enumerate_comm_pairs(&s, DEFAULT_ENUMERATION_CAP).unwrap()[0];
        for x1 in 0..3 {
            for x2 in 0..3 {
                assert_eq!(first.decisions(x1, x2), (0, 0));
            }
        }
    }

    #[test]
    fn comm_order_is_lexicographic() {
        let pairs = enumerate_comm_pairs(&defense_symmetric(0.0), DEFAULT_ENUMERATION_CAP).unwrap();
        let keys: Vec<(u64, u64)> = pairs.iter().map(|p| (p.0[0].mask, p.0[1].mask)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(*pairs.last().unwrap(), CommPair::always([2, 2]));
    }

    #[test]
    fn ctrl_pair_counts() {
        assert_eq!(
            enumerate_ctrl_pairs(&defense_symmetric(0.0), DEFAULT_ENUMERATION_CAP)
                .unwrap()
                .len(),
            16
        );
        assert_eq!(
            enumerate_ctrl_pairs(&uniform_scenario(2, 1), DEFAULT_ENUMERATION_CAP)
                .unwrap()
                .len(),
            1
        );
        assert_eq!(
            enumerate_ctrl_pairs(&uniform_scenario(3, 2), DEFAULT_ENUMERATION_CAP)
                .unwrap()
                .len(),
            64
        );
    }

    #[test]
    fn ctrl_order_is_lexicographic() {
        let pairs = enumerate_ctrl_pairs(&uniform_scenario(2, 3), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(pairs.len(), 81);
        let keys: Vec<_> = pairs
            .iter()
            .map(|p| (p.0[0].actions.clone(), p.0[1].actions.clone()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn cap_is_enforced() {
        let err = enumerate_comm_pairs(&uniform_scenario(3, 2), 63).unwrap_err();
        assert!(matches!(err, Error::EnumerationCap { count: 64, .. }));
        assert!(enumerate_ctrl_pairs(&uniform_scenario(3, 2), 63).is_err());
    }

    #[test]
    fn evaluation_matches_encoding() {
        let s = uniform_scenario(3, 3);
        for pair in enumerate_comm_pairs(&s, DEFAULT_ENUMERATION_CAP).unwrap() {
            for x in 0..3 {
                assert_eq!(pair.0[0].eval(x) as u64, (pair.0[0].mask >> x) & 1);
            }
        }
        for pair in enumerate_ctrl_pairs(&s, DEFAULT_ENUMERATION_CAP).unwrap() {
            for x in 0..3 {
                assert_eq!(pair.0[1].eval(x), pair.0[1].actions[x]);
            }
        }
    }

    #[test]
    fn rendering() {
        let s = defense_symmetric(0.0);
        let comm = CommPair([
            CommPrescription {
                mask: 0b10,
                width: 2,
            },
            CommPrescription::silent(2),
        ]);
        assert_eq!(comm.to_string(), "γ¹=[0,1] γ²=[0,0]");
        let ctrl = CtrlPair([
            CtrlPrescription {
                actions: vec![0, 1],
            },
            CtrlPrescription {
                actions: vec![1, 0],
            },
        ]);
        assert_eq!(ctrl.render(&s), "λ¹=[ℵ,d] λ²=[d,ℵ]");
    }
}
