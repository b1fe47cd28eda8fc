//! Exact backward induction over the beliefs reachable from the initial pair.

use std::collections::HashMap;
use std::time::Instant;

use super::backup::{comm_backup, control_backup, CommMode, ConstraintState, Model};
use super::policy::{
    BeliefKey, Policy, Rules, RunReport, Solution, StateKey, ValueFunction, DEFAULT_QUANTIZATION,
};
use crate::belief::BeliefPair;
use crate::error::{Error, Result};
use crate::scenario::{Horizon, Scenario};

#[derive(Debug, Clone, Copy)]
pub struct FiniteOptions {
    /// Maximum number of memoized (step, phase, belief, constraint) entries.
    pub cap: usize,
    pub quantization: f64,
    pub comm_mode: CommMode,
    /// Use the erasure-channel updates even when `erasure_prob = 0`.
    pub erasure_updates: bool,
}

impl Default for FiniteOptions {
    fn default() -> Self {
        Self {
            cap: 1_000_000,
            quantization: DEFAULT_QUANTIZATION,
            comm_mode: CommMode::Optimize,
            erasure_updates: false,
        }
    }
}

type Entry = (f64, Option<usize>);

struct Recursion<'m, 'a> {
    model: &'m Model<'a>,
    opts: FiniteOptions,
    horizon: usize,
    constrained: bool,
    comm: Vec<HashMap<StateKey, Entry>>,
    ctrl: Vec<HashMap<StateKey, Entry>>,
    entries: usize,
}

impl Recursion<'_, '_> {
    fn key(&self, pair: &BeliefPair, cstate: ConstraintState) -> StateKey {
        (BeliefKey::quantize(pair, self.opts.quantization), cstate)
    }

    fn record(&mut self) -> Result<()> {
        self.entries += 1;
        if self.entries > self.opts.cap {
            return Err(Error::ReachableSetCap { cap: self.opts.cap });
        }
        Ok(())
    }

    /// `V_t` with `t` 0-based.
    fn comm_value(&mut self, t: usize, pair: &BeliefPair, cstate: ConstraintState) -> Result<f64> {
        if t == self.horizon {
            return Ok(0.0);
        }
        let key = self.key(pair, cstate);
        if let Some(&(v, _)) = self.comm[t].get(&key) {
            return Ok(v);
        }
        let model = self.model;
        let constraint = self.constrained.then_some(cstate);
        let entry = match comm_backup(
            model,
            pair,
            self.opts.comm_mode,
            constraint,
            |post, communicated| self.ctrl_value(t, post, model.after_comm(cstate, communicated)),
        ) {
            Ok((v, g)) => (v, Some(g)),
            Err(Error::ForcedCommunicationOverBudget { .. }) => (f64::INFINITY, None),
            Err(e) => return Err(e),
        };
        self.record()?;
        self.comm[t].insert(key, entry);
        Ok(entry.0)
    }

    fn ctrl_value(&mut self, t: usize, pair: &BeliefPair, cstate: ConstraintState) -> Result<f64> {
        let key = self.key(pair, cstate);
        if let Some(&(v, _)) = self.ctrl[t].get(&key) {
            return Ok(v);
        }
        let model = self.model;
        let next_state = model.next_step(cstate);
        let (v, l) = control_backup(model, pair, |next| self.comm_value(t + 1, next, next_state))?;
        self.record()?;
        self.ctrl[t].insert(key, (v, Some(l)));
        Ok(v)
    }
}

/// Backward induction for a finite horizon, memoized on quantized beliefs.
pub fn solve_finite(scenario: &Scenario, opts: FiniteOptions) -> Result<Solution> {
    let start = Instant::now();
    let Horizon::Finite(horizon) = scenario.horizon else {
        return Err(Error::Unsupported(
            "reachable-set solve needs a finite horizon".into(),
        ));
    };
    let mut model = Model::new(scenario)?;
    model.erasure_channel |= opts.erasure_updates;
    let constrained = scenario.constraints.is_some();
    let mut rec = Recursion {
        model: &model,
        opts,
        horizon,
        constrained,
        comm: vec![HashMap::new(); horizon],
        ctrl: vec![HashMap::new(); horizon],
        entries: 0,
    };
    let initial = model.initial_pair();
    let value = rec.comm_value(0, &initial, ConstraintState::INITIAL)?;
    if !value.is_finite() {
        return Err(Error::InfeasibleConstraints(
            "no strategy satisfies the constraints from the initial state".into(),
        ));
    }

    let split = |layers: Vec<HashMap<StateKey, Entry>>| {
        let values = layers
            .iter()
            .map(|m| m.iter().map(|(k, e)| (k.clone(), e.0)).collect())
            .collect::<Vec<_>>();
        let choices = layers
            .into_iter()
            .map(|m| {
                m.into_iter()
                    .map(|(k, e)| (k, e.1.unwrap_or(usize::MAX)))
                    .collect()
            })
            .collect::<Vec<_>>();
        (values, choices)
    };
    let (comm_values, comm_choices) = split(rec.comm);
    let (ctrl_values, ctrl_choices) = split(rec.ctrl);

    let report = RunReport {
        scenario_hash: scenario.content_hash(),
        mode: "reachable-set",
        comm_mode: opts.comm_mode,
        grid_resolution: None,
        iterations: horizon,
        residual: 0.0,
        wall_time_secs: start.elapsed().as_secs_f64(),
        initial_value: value,
        residual_history: Vec::new(),
    };
    Ok(Solution {
        value: ValueFunction::ReachableSet {
            horizon,
            quantization: opts.quantization,
            comm: comm_values,
            ctrl: ctrl_values,
        },
        policy: Policy {
            scenario: scenario.clone(),
            comm_mode: opts.comm_mode,
            comm_pairs: model.comm_pairs.clone(),
            ctrl_pairs: model.ctrl_pairs.clone(),
            rules: Rules::ReachableSet {
                horizon,
                quantization: opts.quantization,
                comm: comm_choices,
                ctrl: ctrl_choices,
            },
        },
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{defense_symmetric, Horizon};

    fn from_state(x1: usize, x2: usize, rho: f64, horizon: usize) -> Scenario {
        let mut s = defense_symmetric(rho).with_horizon(Horizon::Finite(horizon));
        for (agent, x) in s.agents.iter_mut().zip([x1, x2]) {
            agent.initial = vec![0.0; 2];
            agent.initial[x] = 1.0;
        }
        s
    }

    #[test]
    fn single_step_from_safe_state_costs_nothing() {
        let sol = solve_finite(&from_state(0, 0, 0.0, 1), FiniteOptions::default()).unwrap();
        assert_eq!(sol.initial_value(), 0.0);
    }

    #[test]
    fn single_step_under_attack() {
        for rho in [0.0, 1.0, 5.0] {
            let s = from_state(1, 1, rho, 1);
            let sol = solve_finite(&s, FiniteOptions::default()).unwrap();
            // PerPhase weights the stage cost by θ.
            assert!((sol.initial_value() - 0.95 * 20.0).abs() < 1e-12);
            let init = BeliefPair::deltas([2, 2], 1, 1);
            let gamma = sol
                .policy
                .decide_comm(1, &init, ConstraintState::INITIAL)
                .unwrap();
            assert!(gamma.is_silent());
        }
    }

    #[test]
    fn unreachable_belief_is_an_error() {
        let sol = solve_finite(&from_state(0, 0, 1.0, 2), FiniteOptions::default()).unwrap();
        let odd = BeliefPair::new(
            crate::belief::Belief::uniform(2),
            crate::belief::Belief::uniform(2),
        );
        assert!(matches!(
            sol.policy.decide_comm(1, &odd, ConstraintState::INITIAL),
            Err(Error::UnsolvedKey(_))
        ));
    }

    #[test]
    fn cap_is_reported() {
        let opts = FiniteOptions {
            cap: 10,
            ..Default::default()
        };
        assert!(matches!(
            solve_finite(&from_state(0, 0, 1.0, 4), opts),
            Err(Error::ReachableSetCap { cap: 10 })
        ));
    }
}
