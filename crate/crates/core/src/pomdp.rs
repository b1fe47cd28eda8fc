//! The coordinator's problem as a flat POMDP in the classical text format
//! (`discount:`, `values:`, `states:`, ..., `T:`, `O:`, `R:` entries).
//!
//! One POMDP step is one phase. States are `(phase, x1, x2)`; the action set
//! is every communication pair followed by every control pair, and an action
//! used in the wrong phase leaves the state unchanged at a large penalty.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::prescriptions::{enumerate_comm_pairs, enumerate_ctrl_pairs, DEFAULT_ENUMERATION_CAP};
use crate::scenario::{DiscountMode, Horizon, Scenario};

/// Dense flat POMDP. Rewards depend on action and start state only.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatPomdp {
    pub discount: f64,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub start: Vec<f64>,
    /// `transition[a][s][s']`
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `observation[a][s'][o]`
    pub observation: Vec<Vec<Vec<f64>>>,
    /// `reward[a][s]`
    pub reward: Vec<Vec<f64>>,
    /// Comment lines written before the preamble.
    pub header: Vec<String>,
}

impl FlatPomdp {
    /// Builds the coordinator POMDP of a discounted, lossless scenario with a
    /// fixed communication cost and no constraints.
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let unsupported = |what: &str| Err(Error::Unsupported(format!("POMDP export: {what}")));
        if scenario.erasure_prob > 0.0 {
            return unsupported("erasure channel");
        }
        let Some(rho) = scenario.comm_cost.fixed() else {
            return unsupported("state-dependent communication cost");
        };
        if scenario.constraints.is_some() {
            return unsupported("communication constraints");
        }
        if scenario.horizon != Horizon::Discounted {
            return unsupported("finite horizon");
        }
        if scenario.discount_mode != DiscountMode::PerPhase {
            return unsupported("per-step discounting (one POMDP step is one phase)");
        }
        let gammas = enumerate_comm_pairs(scenario, DEFAULT_ENUMERATION_CAP)?;
        let lambdas = enumerate_ctrl_pairs(scenario, DEFAULT_ENUMERATION_CAP)?;
        let [n1, n2] = scenario.num_states();
        let cells = n1 * n2;
        let theta = scenario.discount;
        let c_max = scenario.cost.max_abs().max(rho).max(1.0);
        let penalty = 10.0 * c_max / (1.0 - theta);

        // State index: phase * cells + x1 * n2 + x2; phase 0 communicates.
        let mut states = Vec::with_capacity(2 * cells);
        for phase in ["comm", "ctrl"] {
            for x1 in 0..n1 {
                for x2 in 0..n2 {
                    states.push(format!("{phase}_{x1}_{x2}"));
                }
            }
        }
        let actions: Vec<String> = (0..gammas.len())
            .map(|k| format!("comm{k}"))
            .chain((0..lambdas.len()).map(|k| format!("ctrl{k}")))
            .collect();
        let mut observations = vec!["phi".to_string()];
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                observations.push(format!("z_{x1}_{x2}"));
            }
        }
        observations.push("tick".to_string());
        let tick = observations.len() - 1;

        let ns = states.len();
        let na = actions.len();
        let mut transition = vec![vec![vec![0.0; ns]; ns]; na];
        let mut observation = vec![vec![vec![0.0; observations.len()]; ns]; na];
        let mut reward = vec![vec![0.0; ns]; na];
        for (a, gamma) in gammas.iter().enumerate() {
            for x1 in 0..n1 {
                for x2 in 0..n2 {
                    let cell = x1 * n2 + x2;
                    let fires = gamma.fires(x1, x2);
                    transition[a][cell][cells + cell] = 1.0;
                    observation[a][cells + cell][if fires { 1 + cell } else { 0 }] = 1.0;
                    reward[a][cell] = if fires { -rho } else { 0.0 };
                    // Wrong phase.
                    transition[a][cells + cell][cells + cell] = 1.0;
                    reward[a][cells + cell] = -penalty;
                }
            }
            // A comm action never lands in a comm-phase state; these rows only
            // need to be distributions.
            for s in 0..cells {
                observation[a][s][tick] = 1.0;
            }
        }
        let [d1, d2] = &scenario.agents;
        for (k, lambda) in lambdas.iter().enumerate() {
            let a = gammas.len() + k;
            for x1 in 0..n1 {
                for x2 in 0..n2 {
                    let cell = x1 * n2 + x2;
                    let (u1, u2) = lambda.actions(x1, x2);
                    for y1 in 0..n1 {
                        for y2 in 0..n2 {
                            transition[a][cells + cell][y1 * n2 + y2] =
                                d1.prob(x1, u1, y1) * d2.prob(x2, u2, y2);
                        }
                    }
                    reward[a][cells + cell] = -scenario.cost.get(x1, x2, u1, u2);
                    transition[a][cell][cell] = 1.0;
                    reward[a][cell] = -penalty;
                }
            }
            for s in 0..ns {
                observation[a][s][tick] = 1.0;
            }
        }
        let mut start = vec![0.0; ns];
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                start[x1 * n2 + x2] = d1.initial[x1] * d2.initial[x2];
            }
        }
        let header = vec![
            format!("coordinator POMDP, scenario {}", scenario.content_hash()),
            "one step per phase; states comm_* choose a comm* action, states ctrl_* a ctrl* action".into(),
            format!("wrong-phase actions keep the state and earn reward -{penalty} (10 * c_max / (1 - discount))"),
            "observation tick marks a control phase; rewards are negated costs".into(),
        ];
        Ok(FlatPomdp {
            discount: theta,
            states,
            actions,
            observations,
            start,
            transition,
            observation,
            reward,
            header,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in &self.header {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "discount: {:?}", self.discount);
        out.push_str("values: reward\n");
        let _ = writeln!(out, "states: {}", self.states.join(" "));
        let _ = writeln!(out, "actions: {}", self.actions.join(" "));
        let _ = writeln!(out, "observations: {}", self.observations.join(" "));
        let start: Vec<String> = self.start.iter().map(|p| format!("{p:?}")).collect();
        let _ = writeln!(out, "start: {}", start.join(" "));
        out.push('\n');
        for (a, rows) in self.transition.iter().enumerate() {
            for (s, row) in rows.iter().enumerate() {
                for (t, &p) in row.iter().enumerate() {
                    if p != 0.0 {
                        let _ = writeln!(
                            out,
                            "T: {} : {} : {} {p:?}",
                            self.actions[a], self.states[s], self.states[t]
                        );
                    }
                }
            }
        }
        for (a, rows) in self.observation.iter().enumerate() {
            for (s, row) in rows.iter().enumerate() {
                for (o, &p) in row.iter().enumerate() {
                    if p != 0.0 {
                        let _ = writeln!(
                            out,
                            "O: {} : {} : {} {p:?}",
                            self.actions[a], self.states[s], self.observations[o]
                        );
                    }
                }
            }
        }
        for (a, row) in self.reward.iter().enumerate() {
            for (s, &r) in row.iter().enumerate() {
                if r != 0.0 {
                    let _ = writeln!(
                        out,
                        "R: {} : {} : * : * {r:?}",
                        self.actions[a], self.states[s]
                    );
                }
            }
        }
        out
    }

    /// Parses the subset of the format written by [`FlatPomdp::to_text`]:
    /// named states, actions and observations, explicit `T:`/`O:` entries
    /// and `R:` entries with wildcard end state and observation.
    pub fn parse(text: &str) -> Result<Self> {
        let mut header = Vec::new();
        let mut discount = None;
        let mut states: Vec<String> = Vec::new();
        let mut actions: Vec<String> = Vec::new();
        let mut observations: Vec<String> = Vec::new();
        let mut start: Option<Vec<f64>> = None;
        let mut entries: Vec<(usize, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            if let Some(comment) = raw.strip_prefix('#') {
                if entries.is_empty() && discount.is_none() {
                    header.push(comment.strip_prefix(' ').unwrap_or(comment).to_string());
                }
                continue;
            }
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| bad("expected `key: value`".into()))?;
            let rest = rest.trim();
            let names = || {
                rest.split_whitespace()
                    .map(String::from)
                    .collect::<Vec<_>>()
            };
            let number = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
            match key.trim() {
                "discount" => discount = Some(number(rest)?),
                "values" if rest == "reward" => {}
                "values" => return Err(bad(format!("unsupported value type {rest:?}"))),
                "states" => states = names(),
                "actions" => actions = names(),
                "observations" => observations = names(),
                "start" => {
                    start = Some(rest.split_whitespace().map(number).collect::<Result<_>>()?)
                }
                "T" | "O" | "R" => entries.push((line_no, line)),
                other => return Err(bad(format!("unknown section {other:?}"))),
            }
        }
        let discount = discount.ok_or(Error::Parse {
            line: 0,
            message: "missing discount".into(),
        })?;
        let (ns, na, no) = (states.len(), actions.len(), observations.len());
        let start = start.ok_or(Error::Parse {
            line: 0,
            message: "missing start".into(),
        })?;
        if start.len() != ns {
            return Err(Error::DimensionMismatch {
                path: "start".into(),
                expected: ns,
                found: start.len(),
            });
        }
        let mut transition = vec![vec![vec![0.0; ns]; ns]; na];
        let mut observation = vec![vec![vec![0.0; no]; ns]; na];
        let mut reward = vec![vec![0.0; ns]; na];
        for (line_no, line) in entries {
            let bad = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let find = |names: &[String], name: &str| {
                names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| bad(format!("unknown name {name:?}")))
            };
            let (key, rest) = line.split_once(':').expect("checked above");
            let fields: Vec<&str> = rest.split(':').map(str::trim).collect();
            let (last, value) = fields
                .last()
                .and_then(|f| f.rsplit_once(' '))
                .ok_or_else(|| bad("missing value".into()))?;
            let value = value
                .parse::<f64>()
                .map_err(|e| bad(format!("{value:?}: {e}")))?;
            let mut names: Vec<&str> = fields[..fields.len() - 1].to_vec();
            names.push(last.trim());
            match (key.trim(), names.as_slice()) {
                ("T", [a, s, t]) => {
                    transition[find(&actions, a)?][find(&states, s)?][find(&states, t)?] = value
                }
                ("O", [a, s, o]) => {
                    observation[find(&actions, a)?][find(&states, s)?][find(&observations, o)?] =
                        value
                }
                ("R", [a, s, "*", "*"]) => reward[find(&actions, a)?][find(&states, s)?] = value,
                _ => return Err(bad("unsupported entry form".into())),
            }
        }
        Ok(FlatPomdp {
            discount,
            states,
            actions,
            observations,
            start,
            transition,
            observation,
            reward,
            header,
        })
    }

    /// Checks that every transition and observation row is a distribution.
    pub fn check_stochastic(&self) -> Result<()> {
        for (a, rows) in self.transition.iter().enumerate() {
            for (s, row) in rows.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::NonStochasticRow {
                        path: format!("T[{a}][{s}]"),
                        sum,
                    });
                }
            }
        }
        for (a, rows) in self.observation.iter().enumerate() {
            for (s, row) in rows.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::NonStochasticRow {
                        path: format!("O[{a}][{s}]"),
                        sum,
                    });
                }
            }
        }
        Ok(())
    }
}
