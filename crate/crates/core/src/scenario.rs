//! Problem data: two agents with independent local dynamics, coupled through
//! a joint stage cost and a communication cost.
//!
//! Scenarios are immutable once validated. The on-disk form is JSON with the
//! field layout of [`ScenarioFile`].

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Tolerance for row sums of probability tables.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Local dynamics of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentDynamics {
    pub num_states: usize,
    pub num_actions: usize,
    /// `transition[x][u][x']`
    pub transition: Vec<Vec<Vec<f64>>>,
    pub initial: Vec<f64>,
    /// Display names for actions. Defaults to the action index.
    pub action_labels: Option<Vec<String>>,
}

impl AgentDynamics {
    pub fn new(transition: Vec<Vec<Vec<f64>>>, initial: Vec<f64>) -> Result<Self> {
        let num_states = transition.len();
        let num_actions = transition.first().map_or(0, Vec::len);
        let dynamics = Self {
            num_states,
            num_actions,
            transition,
            initial,
            action_labels: None,
        };
        dynamics.validate("agent")?;
        Ok(dynamics)
    }

    #[inline]
    pub fn prob(&self, x: usize, u: usize, next: usize) -> f64 {
        self.transition[x][u][next]
    }

    pub fn action_label(&self, u: usize) -> String {
        match &self.action_labels {
            Some(labels) => labels[u].clone(),
            None => u.to_string(),
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        if self.num_states == 0 {
            return Err(Error::schema(
                format!("{path}.num_states"),
                "must be positive",
            ));
        }
        if self.num_actions == 0 {
            return Err(Error::schema(
                format!("{path}.num_actions"),
                "must be positive",
            ));
        }
        check_len(
            &format!("{path}.transition"),
            self.num_states,
            self.transition.len(),
        )?;
        for (x, per_action) in self.transition.iter().enumerate() {
            check_len(
                &format!("{path}.transition[{x}]"),
                self.num_actions,
                per_action.len(),
            )?;
            for (u, row) in per_action.iter().enumerate() {
                let row_path = format!("{path}.transition[{x}][{u}]");
                check_len(&row_path, self.num_states, row.len())?;
                check_distribution(&row_path, row)?;
            }
        }
        check_len(
            &format!("{path}.initial"),
            self.num_states,
            self.initial.len(),
        )?;
        check_distribution(&format!("{path}.initial"), &self.initial)?;
        if let Some(labels) = &self.action_labels {
            check_len(
                &format!("{path}.action_labels"),
                self.num_actions,
                labels.len(),
            )?;
        }
        Ok(())
    }
}

fn check_len(path: &str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            path: path.to_string(),
            expected,
            found,
        });
    }
    Ok(())
}

fn check_distribution(path: &str, row: &[f64]) -> Result<()> {
    for (k, &p) in row.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::OutOfRange {
                path: format!("{path}[{k}]"),
                value: p,
                message: "probabilities must be nonnegative".into(),
            });
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::NonStochasticRow {
            path: path.to_string(),
            sum,
        });
    }
    Ok(())
}

/// Joint stage cost `c[x1][x2][u1][u2]`, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCost {
    dims: [usize; 4],
    values: Vec<f64>,
}

impl JointCost {
    pub fn from_fn(dims: [usize; 4], mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(dims.iter().product());
        for x1 in 0..dims[0] {
            for x2 in 0..dims[1] {
                for u1 in 0..dims[2] {
                    for u2 in 0..dims[3] {
                        values.push(f(x1, x2, u1, u2));
                    }
                }
            }
        }
        Self { dims, values }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    #[inline]
    pub fn get(&self, x1: usize, x2: usize, u1: usize, u2: usize) -> f64 {
        let [_, n2, a1, a2] = self.dims;
        self.values[((x1 * n2 + x2) * a1 + u1) * a2 + u2]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn to_nested(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        let [n1, n2, a1, a2] = self.dims;
        (0..n1)
            .map(|x1| {
                (0..n2)
                    .map(|x2| {
                        (0..a1)
                            .map(|u1| (0..a2).map(|u2| self.get(x1, x2, u1, u2)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    fn from_nested(path: &str, dims: [usize; 4], nested: &[Vec<Vec<Vec<f64>>>]) -> Result<Self> {
        check_len(path, dims[0], nested.len())?;
        for (x1, a) in nested.iter().enumerate() {
            check_len(&format!("{path}[{x1}]"), dims[1], a.len())?;
            for (x2, b) in a.iter().enumerate() {
                check_len(&format!("{path}[{x1}][{x2}]"), dims[2], b.len())?;
                for (u1, c) in b.iter().enumerate() {
                    let p = format!("{path}[{x1}][{x2}][{u1}]");
                    check_len(&p, dims[3], c.len())?;
                    if let Some((u2, v)) = c.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                        return Err(Error::OutOfRange {
                            path: format!("{p}[{u2}]"),
                            value: *v,
                            message: "costs must be finite".into(),
                        });
                    }
                }
            }
        }
        Ok(Self::from_fn(dims, |x1, x2, u1, u2| nested[x1][x2][u1][u2]))
    }
}

/// Cost charged whenever at least one agent initiates communication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommCost {
    Fixed(f64),
    /// `table[x1][x2]`
    #[serde(rename = "table")]
    StateDependent(Vec<Vec<f64>>),
}

impl CommCost {
    #[inline]
    pub fn at(&self, x1: usize, x2: usize) -> f64 {
        match self {
            CommCost::Fixed(rho) => *rho,
            CommCost::StateDependent(table) => table[x1][x2],
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            CommCost::Fixed(rho) => *rho,
            CommCost::StateDependent(table) => {
                table.iter().flatten().fold(0.0, |m: f64, v| m.max(*v))
            }
        }
    }

    pub fn fixed(&self) -> Option<f64> {
        match self {
            CommCost::Fixed(rho) => Some(*rho),
            CommCost::StateDependent(_) => None,
        }
    }
}

/// Limits on when and how often the agents may communicate.
///
/// `s_a` counts time steps since the last communication (a virtual
/// communication at time 0 makes it 1 at the first step). Communication is
/// allowed only when `s_a >= s_min` and is forced when `s_a == s_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommConstraints {
    #[serde(default)]
    pub s_min: u32,
    #[serde(default)]
    pub s_max: Option<u32>,
    #[serde(default)]
    pub max_count: Option<u32>,
}

impl CommConstraints {
    pub const VACUOUS: CommConstraints = CommConstraints {
        s_min: 0,
        s_max: None,
        max_count: None,
    };

    /// Validates the constraint set against an optional finite horizon.
    pub fn check(&self, horizon: Option<usize>) -> Result<()> {
        if let Some(s_max) = self.s_max {
            if s_max == 0 {
                return Err(Error::InfeasibleConstraints(
                    "s_max must be at least 1".into(),
                ));
            }
            if s_max < self.s_min {
                return Err(Error::InfeasibleConstraints(format!(
                    "s_max={s_max} is below s_min={}",
                    self.s_min
                )));
            }
            if let (Some(n), Some(t)) = (self.max_count, horizon) {
                // Forced communications fall at steps s_max, 2*s_max, ...
                let forced = t as u64 / s_max as u64;
                if forced > n as u64 {
                    return Err(Error::InfeasibleConstraints(format!(
                        "s_max={s_max} forces {forced} communications over {t} steps but max_count={n}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Horizon {
    Finite(usize),
    Discounted,
}

/// Where the discount factor is applied within a time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscountMode {
    /// Discount after the communication phase and again after the control
    /// phase: communication cost at step t is weighted by θ^(2t-2), stage cost
    /// by θ^(2t-1).
    #[default]
    PerPhase,
    /// Both costs of step t weighted by θ^(t-1).
    PerStep,
}

impl DiscountMode {
    /// Factors applied after the communication and after the control phase.
    #[inline]
    pub fn phase_factors(self, discount: f64) -> (f64, f64) {
        match self {
            DiscountMode::PerPhase => (discount, discount),
            DiscountMode::PerStep => (1.0, discount),
        }
    }
}

/// Outcome of the communication phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observation {
    Phi,
    Joint(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub agents: [AgentDynamics; 2],
    pub cost: JointCost,
    pub comm_cost: CommCost,
    pub discount: f64,
    pub discount_mode: DiscountMode,
    pub erasure_prob: f64,
    pub constraints: Option<CommConstraints>,
    pub horizon: Horizon,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        for (i, agent) in self.agents.iter().enumerate() {
            agent.validate(&format!("agents[{i}]"))?;
        }
        let dims = [
            self.agents[0].num_states,
            self.agents[1].num_states,
            self.agents[0].num_actions,
            self.agents[1].num_actions,
        ];
        for (k, (&want, &got)) in dims.iter().zip(self.cost.dims().iter()).enumerate() {
            check_len(&format!("cost (axis {k})"), want, got)?;
        }
        match &self.comm_cost {
            CommCost::Fixed(rho) => check_nonneg("comm_cost.fixed", *rho)?,
            CommCost::StateDependent(table) => {
                check_len("comm_cost.table", dims[0], table.len())?;
                for (x1, row) in table.iter().enumerate() {
                    check_len(&format!("comm_cost.table[{x1}]"), dims[1], row.len())?;
                    for (x2, v) in row.iter().enumerate() {
                        check_nonneg(&format!("comm_cost.table[{x1}][{x2}]"), *v)?;
                    }
                }
            }
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::OutOfRange {
                path: "discount".into(),
                value: self.discount,
                message: "must lie in (0, 1]".into(),
            });
        }
        if self.horizon == Horizon::Discounted && self.discount >= 1.0 {
            return Err(Error::OutOfRange {
                path: "discount".into(),
                value: self.discount,
                message: "discounted horizon requires discount < 1".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.erasure_prob) {
            return Err(Error::OutOfRange {
                path: "erasure_prob".into(),
                value: self.erasure_prob,
                message: "must lie in [0, 1]".into(),
            });
        }
        if let Horizon::Finite(0) = self.horizon {
            return Err(Error::schema("horizon.finite", "must be at least 1"));
        }
        if let Some(c) = &self.constraints {
            let horizon = match self.horizon {
                Horizon::Finite(t) => Some(t),
                Horizon::Discounted => {
                    if c.max_count.is_some() {
                        return Err(Error::InfeasibleConstraints(
                            "a communication budget requires a finite horizon".into(),
                        ));
                    }
                    None
                }
            };
            c.check(horizon)?;
        }
        Ok(())
    }

    pub fn num_states(&self) -> [usize; 2] {
        [self.agents[0].num_states, self.agents[1].num_states]
    }

    pub fn num_actions(&self) -> [usize; 2] {
        [self.agents[0].num_actions, self.agents[1].num_actions]
    }

    /// Largest per-step cost magnitude (stage cost plus communication).
    pub fn max_step_cost(&self) -> f64 {
        self.cost.max_abs() + self.comm_cost.max()
    }

    pub fn with_comm_cost(mut self, comm_cost: CommCost) -> Self {
        self.comm_cost = comm_cost;
        self
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_erasure(mut self, p_e: f64) -> Self {
        self.erasure_prob = p_e;
        self
    }

    pub fn with_constraints(mut self, constraints: Option<CommConstraints>) -> Self {
        self.constraints = constraints;
        self
    }

    pub fn with_discount_mode(mut self, mode: DiscountMode) -> Self {
        self.discount_mode = mode;
        self
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(&ScenarioFile::from(self)).expect("scenario serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes")
    }
}

fn check_nonneg(path: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::OutOfRange {
            path: path.into(),
            value: v,
            message: "must be a nonnegative finite number".into(),
        });
    }
    Ok(())
}

/// Serialized agent record.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentFile {
    pub num_states: usize,
    pub num_actions: usize,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub initial: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_labels: Option<Vec<String>>,
}

/// Serialized scenario document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub agents: Vec<AgentFile>,
    pub cost: Vec<Vec<Vec<Vec<f64>>>>,
    pub comm_cost: CommCost,
    pub discount: f64,
    #[serde(default)]
    pub discount_mode: DiscountMode,
    #[serde(default)]
    pub erasure_prob: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<CommConstraints>,
    pub horizon: Horizon,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        ScenarioFile {
            agents: s
                .agents
                .iter()
                .map(|a| AgentFile {
                    num_states: a.num_states,
                    num_actions: a.num_actions,
                    transition: a.transition.clone(),
                    initial: a.initial.clone(),
                    action_labels: a.action_labels.clone(),
                })
                .collect(),
            cost: s.cost.to_nested(),
            comm_cost: s.comm_cost.clone(),
            discount: s.discount,
            discount_mode: s.discount_mode,
            erasure_prob: s.erasure_prob,
            constraints: s.constraints,
            horizon: s.horizon,
        }
    }
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = Error;

    fn try_from(file: ScenarioFile) -> Result<Self> {
        check_len("agents", 2, file.agents.len())?;
        let mut agents = file.agents.into_iter().map(|a| AgentDynamics {
            num_states: a.num_states,
            num_actions: a.num_actions,
            transition: a.transition,
            initial: a.initial,
            action_labels: a.action_labels,
        });
        let agents = [agents.next().unwrap(), agents.next().unwrap()];
        for (i, agent) in agents.iter().enumerate() {
            agent.validate(&format!("agents[{i}]"))?;
        }
        let dims = [
            agents[0].num_states,
            agents[1].num_states,
            agents[0].num_actions,
            agents[1].num_actions,
        ];
        let cost = JointCost::from_nested("cost", dims, &file.cost)?;
        let scenario = Scenario {
            agents,
            cost,
            comm_cost: file.comm_cost,
            discount: file.discount,
            discount_mode: file.discount_mode,
            erasure_prob: file.erasure_prob,
            constraints: file.constraints,
            horizon: file.horizon,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(source: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(source).map_err(|e| {
        Error::schema(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    Scenario::try_from(file)
}

pub fn load_scenario_path(path: impl AsRef<std::path::Path>) -> Result<Scenario> {
    load_scenario(&std::fs::read_to_string(path)?)
}

pub const SAFE: usize = 0;
pub const ATTACK: usize = 1;
pub const NOTHING: usize = 0;
pub const DEFEND: usize = 1;

/// The two-entity attack/defense game.
///
/// Each agent is safe (0) or under attack (1) and may do nothing (ℵ) or
/// defend (d). Stage cost is 20 if any entity is under attack, plus 150
/// whenever both agents defend. Both agents start safe.
pub fn defense_scenario(
    p_attack: [f64; 2],
    p_recover: [f64; 2],
    discount: f64,
    rho: f64,
) -> Result<Scenario> {
    let agent = |i: usize| -> Result<AgentDynamics> {
        for (name, p) in [("p_attack", p_attack[i]), ("p_recover", p_recover[i])] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::OutOfRange {
                    path: format!("{name}[{i}]"),
                    value: p,
                    message: "probability must lie in [0, 1]".into(),
                });
            }
        }
        let (pa, pv) = (p_attack[i], p_recover[i]);
        let safe_row = vec![1.0 - pa, pa];
        let mut dynamics = AgentDynamics::new(
            vec![
                vec![safe_row.clone(), safe_row],
                vec![vec![0.0, 1.0], vec![pv, 1.0 - pv]],
            ],
            vec![1.0, 0.0],
        )?;
        dynamics.action_labels = Some(vec!["ℵ".into(), "d".into()]);
        Ok(dynamics)
    };
    let cost = JointCost::from_fn([2, 2, 2, 2], |x1, x2, u1, u2| {
        let attack = if x1 == ATTACK || x2 == ATTACK {
            20.0
        } else {
            0.0
        };
        let clash = if u1 == DEFEND && u2 == DEFEND {
            150.0
        } else {
            0.0
        };
        attack + clash
    });
    let scenario = Scenario {
        agents: [agent(0)?, agent(1)?],
        cost,
        comm_cost: CommCost::Fixed(rho),
        discount,
        discount_mode: DiscountMode::PerPhase,
        erasure_prob: 0.0,
        constraints: None,
        horizon: Horizon::Discounted,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Symmetric instance with p_a = 0.3, p_v = 0.6, θ = 0.95.
pub fn defense_symmetric(rho: f64) -> Scenario {
    defense_scenario([0.3, 0.3], [0.6, 0.6], 0.95, rho).expect("valid parameters")
}

/// Asymmetric instance with p_a = (0.5, 0.1), p_v = (0.95, 0.6), θ = 0.99.
pub fn defense_asymmetric(rho: f64) -> Scenario {
    defense_scenario([0.5, 0.1], [0.95, 0.6], 0.99, rho).expect("valid parameters")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defense_cost_table() {
        let s = defense_symmetric(1.0);
        assert_eq!(s.cost.get(1, 1, DEFEND, DEFEND), 170.0);
        assert_eq!(s.cost.get(0, 0, DEFEND, DEFEND), 150.0);
        assert_eq!(s.cost.get(0, 0, NOTHING, DEFEND), 0.0);
        assert_eq!(s.cost.get(0, 1, NOTHING, NOTHING), 20.0);
        assert_eq!(s.cost.dims(), [2, 2, 2, 2]);
    }

    #[test]
    fn defense_rows_sum_exactly_to_one() {
        for s in [defense_symmetric(0.0), defense_asymmetric(0.0)] {
            for agent in &s.agents {
                for per_action in &agent.transition {
                    for row in per_action {
                        assert_eq!(row.iter().sum::<f64>(), 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn defense_rejects_bad_probability() {
        let err = defense_scenario([1.3, 0.3], [0.6, 0.6], 0.95, 0.0).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { .. }));
    }

    #[test]
    fn loads_serialized_defense_game() {
        let s = defense_symmetric(2.0);
        let loaded = load_scenario(&s.to_json()).unwrap();
        assert_eq!(loaded, s);
        assert_eq!(loaded.num_states(), [2, 2]);
        assert_eq!(loaded.discount, 0.95);
    }

    fn json_with(edit: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value =
            serde_json::from_str(&defense_symmetric(1.0).to_json()).unwrap();
        edit(&mut v);
        v.to_string()
    }

    #[test]
    fn rejects_non_stochastic_row() {
        let doc = json_with(|v| v["agents"][1]["transition"][0][1] = serde_json::json!([0.6, 0.3]));
        match load_scenario(&doc).unwrap_err() {
            Error::NonStochasticRow { path, sum } => {
                assert_eq!(path, "agents[1].transition[0][1]");
                assert!((sum - 0.9).abs() < 1e-12);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_erasure_out_of_range() {
        let doc = json_with(|v| v["erasure_prob"] = serde_json::json!(1.2));
        match load_scenario(&doc).unwrap_err() {
            Error::OutOfRange { path, .. } => assert_eq!(path, "erasure_prob"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let doc = json_with(|v| v["cost"][0] = serde_json::json!([[[0.0, 0.0], [0.0, 0.0]]]));
        assert!(matches!(
            load_scenario(&doc).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn rejects_unknown_field() {
        let doc = json_with(|v| v["bogus"] = serde_json::json!(1));
        assert!(matches!(
            load_scenario(&doc).unwrap_err(),
            Error::Schema { .. }
        ));
    }

    #[test]
    fn horizon_and_comm_cost_encodings() {
        let s = defense_symmetric(1.0)
            .with_horizon(Horizon::Finite(7))
            .with_comm_cost(CommCost::StateDependent(vec![
                vec![0.0, 1.0],
                vec![2.0, 3.0],
            ]));
        let json = s.to_json();
        assert!(json.contains("\"finite\": 7"));
        assert!(json.contains("\"table\""));
        assert!(json.contains("\"per-phase\""));
        assert_eq!(load_scenario(&json).unwrap(), s);
    }

    #[test]
    fn constraint_feasibility() {
        let c = CommConstraints {
            s_min: 0,
            s_max: Some(2),
            max_count: Some(4),
        };
        assert!(c.check(Some(9)).is_ok());
        assert!(c.check(Some(10)).is_err());
        let c = CommConstraints {
            s_min: 3,
            s_max: Some(2),
            max_count: None,
        };
        assert!(c.check(None).is_err());
        let budgeted = defense_symmetric(1.0).with_constraints(Some(CommConstraints {
            s_min: 0,
            s_max: None,
            max_count: Some(3),
        }));
        assert!(matches!(
            budgeted.validate(),
            Err(Error::InfeasibleConstraints(_))
        ));
    }

    #[test]
    fn discounted_requires_discount_below_one() {
        let mut s = defense_symmetric(1.0);
        s.discount = 1.0;
        assert!(s.validate().is_err());
        assert!(s.with_horizon(Horizon::Finite(3)).validate().is_ok());
    }
}
