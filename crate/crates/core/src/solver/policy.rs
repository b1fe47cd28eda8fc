use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::backup::{CommMode, ConstraintState};
use super::grid::ProductGrid;
use crate::belief::BeliefPair;
use crate::error::{Error, Result};
use crate::prescriptions::{CommPair, CtrlPair};
use crate::scenario::Scenario;

/// Quantization factor for memoization keys.
pub const DEFAULT_QUANTIZATION: f64 = 1e9;

/// Belief pair rounded onto an integer lattice, agent 1 coordinates first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BeliefKey(Vec<i64>);

impl BeliefKey {
    pub fn quantize(pair: &BeliefPair, factor: f64) -> Self {
        debug_assert!(factor >= 1.0);
        BeliefKey(
            pair.0
                .iter()
                .flat_map(|b| b.weights().iter().map(move |w| (w * factor).round() as i64))
                .collect(),
        )
    }

    /// Coordinates of the key scaled back to probabilities (not renormalized).
    pub fn dequantize(&self, factor: f64) -> Vec<f64> {
        self.0.iter().map(|&k| k as f64 / factor).collect()
    }
}

impl fmt::Display for BeliefKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

pub(crate) type StateKey = (BeliefKey, ConstraintState);

/// Solved value functions for both phases.
#[derive(Debug, Clone)]
pub enum ValueFunction {
    /// Exact values on the beliefs reachable from the initial pair;
    /// `comm[t]` and `ctrl[t]` hold step `t + 1`.
    ReachableSet {
        horizon: usize,
        quantization: f64,
        comm: Vec<HashMap<StateKey, f64>>,
        ctrl: Vec<HashMap<StateKey, f64>>,
    },
    /// Stationary values on grid nodes, one table per constraint level.
    Grid {
        grid: ProductGrid,
        levels: Levels,
        comm: Vec<Vec<f64>>,
        ctrl: Vec<Vec<f64>>,
    },
}

impl ValueFunction {
    /// Pre-communication value at step `t` (1-based; ignored for grids).
    pub fn comm_value(&self, t: usize, pair: &BeliefPair, cstate: ConstraintState) -> Result<f64> {
        match self {
            ValueFunction::ReachableSet {
                horizon,
                quantization,
                comm,
                ..
            } => lookup(comm, *horizon, *quantization, t, pair, cstate).copied(),
            ValueFunction::Grid {
                grid, levels, comm, ..
            } => Ok(grid.interpolate(&comm[levels.comm_level(cstate)], pair)),
        }
    }

    /// Post-communication value at step `t`.
    pub fn ctrl_value(&self, t: usize, pair: &BeliefPair, cstate: ConstraintState) -> Result<f64> {
        match self {
            ValueFunction::ReachableSet {
                horizon,
                quantization,
                ctrl,
                ..
            } => lookup(ctrl, *horizon, *quantization, t, pair, cstate).copied(),
            ValueFunction::Grid {
                grid, levels, ctrl, ..
            } => Ok(grid.interpolate(&ctrl[levels.ctrl_level(cstate)], pair)),
        }
    }

    pub fn reachable_keys(&self) -> usize {
        match self {
            ValueFunction::ReachableSet { comm, ctrl, .. } => {
                comm.iter().chain(ctrl.iter()).map(HashMap::len).sum()
            }
            ValueFunction::Grid { .. } => 0,
        }
    }
}

fn lookup<'m, T>(
    layers: &'m [HashMap<StateKey, T>],
    horizon: usize,
    quantization: f64,
    t: usize,
    pair: &BeliefPair,
    cstate: ConstraintState,
) -> Result<&'m T> {
    if t == 0 || t > horizon {
        return Err(Error::UnsolvedKey(format!(
            "step {t} outside 1..={horizon}"
        )));
    }
    let key = BeliefKey::quantize(pair, quantization);
    layers[t - 1]
        .get(&(key.clone(), cstate))
        .ok_or_else(|| Error::UnsolvedKey(format!("belief {key} with {cstate:?} at step {t}")))
}

/// Mapping from constraint states to value-table layers for grid solves.
///
/// Unconstrained problems use a single layer per phase. Otherwise comm
/// layers are `since_last ∈ 1..=cap` and control layers `since_last ∈ 0..=cap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Levels {
    pub constrained: bool,
    pub cap: u32,
}

impl Levels {
    pub fn comm_count(&self) -> usize {
        if self.constrained {
            self.cap as usize
        } else {
            1
        }
    }

    pub fn ctrl_count(&self) -> usize {
        if self.constrained {
            self.cap as usize + 1
        } else {
            1
        }
    }

    pub fn comm_level(&self, s: ConstraintState) -> usize {
        if self.constrained {
            (s.since_last.clamp(1, self.cap) - 1) as usize
        } else {
            0
        }
    }

    pub fn ctrl_level(&self, s: ConstraintState) -> usize {
        if self.constrained {
            s.since_last.min(self.cap) as usize
        } else {
            0
        }
    }

    pub fn comm_state(&self, level: usize) -> ConstraintState {
        ConstraintState {
            since_last: level as u32 + 1,
            count: 0,
        }
    }

    pub fn ctrl_state(&self, level: usize) -> ConstraintState {
        ConstraintState {
            since_last: level as u32,
            count: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Rules {
    ReachableSet {
        horizon: usize,
        quantization: f64,
        comm: Vec<HashMap<StateKey, usize>>,
        ctrl: Vec<HashMap<StateKey, usize>>,
    },
    Grid {
        grid: ProductGrid,
        levels: Levels,
        comm: Vec<Vec<usize>>,
        ctrl: Vec<Vec<usize>>,
    },
}

/// Coordinator decision rules, executable by the agents.
#[derive(Debug, Clone)]
pub struct Policy {
    pub scenario: Scenario,
    pub comm_mode: CommMode,
    pub(crate) comm_pairs: Vec<CommPair>,
    pub(crate) ctrl_pairs: Vec<CtrlPair>,
    pub(crate) rules: Rules,
}

impl Policy {
    /// Communication prescriptions for step `t` (1-based; grids ignore it).
    /// Grid policies answer off-node beliefs with the nearest node's choice.
    pub fn decide_comm(
        &self,
        t: usize,
        pair: &BeliefPair,
        cstate: ConstraintState,
    ) -> Result<CommPair> {
        let idx = match &self.rules {
            Rules::ReachableSet {
                horizon,
                quantization,
                comm,
                ..
            } => *lookup(comm, *horizon, *quantization, t, pair, cstate)?,
            Rules::Grid {
                grid, levels, comm, ..
            } => comm[levels.comm_level(cstate)][grid.nearest(pair)],
        };
        self.comm_pairs.get(idx).copied().ok_or_else(|| {
            Error::UnsolvedKey(format!(
                "infeasible constraint state {cstate:?} at step {t}"
            ))
        })
    }

    pub fn decide_ctrl(
        &self,
        t: usize,
        pair: &BeliefPair,
        cstate: ConstraintState,
    ) -> Result<CtrlPair> {
        let idx = match &self.rules {
            Rules::ReachableSet {
                horizon,
                quantization,
                ctrl,
                ..
            } => *lookup(ctrl, *horizon, *quantization, t, pair, cstate)?,
            Rules::Grid {
                grid, levels, ctrl, ..
            } => ctrl[levels.ctrl_level(cstate)][grid.nearest(pair)],
        };
        Ok(self.ctrl_pairs[idx].clone())
    }

    /// Finite horizon of a reachable-set policy.
    pub fn horizon(&self) -> Option<usize> {
        match &self.rules {
            Rules::ReachableSet { horizon, .. } => Some(*horizon),
            Rules::Grid { .. } => None,
        }
    }

    pub fn comm_pairs(&self) -> &[CommPair] {
        &self.comm_pairs
    }

    pub fn ctrl_pairs(&self) -> &[CtrlPair] {
        &self.ctrl_pairs
    }
}

/// Diagnostics emitted with every solve.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario_hash: String,
    pub mode: &'static str,
    pub comm_mode: CommMode,
    pub grid_resolution: Option<usize>,
    pub iterations: usize,
    pub residual: f64,
    pub wall_time_secs: f64,
    pub initial_value: f64,
    /// Sup-norm change after each value-iteration sweep.
    #[serde(skip)]
    pub residual_history: Vec<f64>,
}

impl RunReport {
    /// `key=value` lines, omitting wall time when `stable` is set.
    pub fn to_lines(&self, stable: bool) -> Vec<String> {
        let mut lines = vec![
            format!("scenario_hash={}", self.scenario_hash),
            format!("mode={}", self.mode),
            format!(
                "comm_mode={}",
                serde_json::to_value(self.comm_mode)
                    .unwrap()
                    .as_str()
                    .unwrap()
            ),
            format!(
                "grid_resolution={}",
                self.grid_resolution
                    .map_or_else(|| "-".to_string(), |g| g.to_string())
            ),
            format!("iterations={}", self.iterations),
            format!("residual={:e}", self.residual),
        ];
        if !stable {
            lines.push(format!("wall_time_secs={:.3}", self.wall_time_secs));
        }
        lines.push(format!("initial_value={:.6}", self.initial_value));
        lines
    }
}

/// Output of a solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub value: ValueFunction,
    pub policy: Policy,
    pub report: RunReport,
}

impl Solution {
    pub fn initial_value(&self) -> f64 {
        self.report.initial_value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::Belief;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn quantization_round_trip(a in 0.0f64..1.0, b in 0.0f64..1.0, factor in 1.0f64..1e9) {
            let pair = BeliefPair::new(Belief::new(vec![1.0 - a, a]).unwrap(), Belief::new(vec![b, 1.0 - b]).unwrap());
            let back = BeliefKey::quantize(&pair, factor).dequantize(factor);
            let orig = [1.0 - a, a, b, 1.0 - b];
            for (x, y) in back.iter().zip(orig) {
                prop_assert!((x - y).abs() <= 0.5 / factor + 1e-15);
            }
        }
    }

    #[test]
    fn level_mapping() {
        let levels = Levels {
            constrained: true,
            cap: 3,
        };
        assert_eq!(levels.comm_count(), 3);
        assert_eq!(levels.ctrl_count(), 4);
        for level in 0..3 {
            assert_eq!(levels.comm_level(levels.comm_state(level)), level);
        }
        for level in 0..4 {
            assert_eq!(levels.ctrl_level(levels.ctrl_state(level)), level);
        }
        let free = Levels {
            constrained: false,
            cap: 1,
        };
        assert_eq!(
            free.comm_level(ConstraintState {
                since_last: 9,
                count: 2
            }),
            0
        );
    }
}
