use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::trace::{Phase, TraceRecord};
use crate::belief::{beta_pair, eta_erasure_pair, eta_pair, BeliefPair, ErasureOutcome};
use crate::error::{Error, Result};
use crate::scenario::Observation;
use crate::solver::{ConstraintState, Model, Policy};

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub episodes: usize,
    pub seed: u64,
    /// Bound on the discounted cost beyond the truncation horizon.
    pub tail_tolerance: f64,
    /// Explicit horizon, overriding the tail bound (ignored for finite policies).
    pub horizon: Option<usize>,
    pub record_traces: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            episodes: 10_000,
            seed: 0,
            tail_tolerance: 0.05,
            horizon: None,
            record_traces: false,
        }
    }
}

/// What one agent keeps: its own state and its replica of the common beliefs.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentRuntime {
    pub agent: usize,
    pub state: usize,
    pub beliefs: BeliefPair,
    pub cstate: ConstraintState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub discounted_cost: f64,
    pub comm_count: usize,
    pub steps: usize,
    pub trace: Option<Vec<TraceRecord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub episodes: usize,
    pub seed: u64,
    pub horizon: usize,
    pub tail_bound: f64,
    pub mean: f64,
    pub std_error: f64,
    /// Fraction of simulated steps in which at least one agent sent.
    pub comm_frequency: f64,
}

impl SimSummary {
    pub fn to_lines(&self) -> Vec<String> {
        vec![
            format!("episodes={}", self.episodes),
            format!("seed={}", self.seed),
            format!("horizon={}", self.horizon),
            format!("tail_bound={:e}", self.tail_bound),
            format!("mean={:.6}", self.mean),
            format!("std_error={:.6}", self.std_error),
            format!("comm_frequency={:.6}", self.comm_frequency),
        ]
    }
}

/// Smallest `H` with `(θ_c θ_k)^H · c_max / (1 − θ_c θ_k) ≤ tolerance`, and
/// the resulting bound.
pub fn horizon_for_tail(theta_c: f64, theta_k: f64, c_max: f64, tolerance: f64) -> (usize, f64) {
    let q = theta_c * theta_k;
    let bound = |h: usize| q.powi(h as i32) * c_max / (1.0 - q);
    if c_max <= 0.0 {
        return (1, 0.0);
    }
    let mut h = ((tolerance * (1.0 - q) / c_max).ln() / q.ln())
        .ceil()
        .max(1.0) as usize;
    while bound(h) > tolerance {
        h += 1;
    }
    (h, bound(h))
}

fn sample(weights: &[f64], rng: &mut ChaCha8Rng) -> Result<usize> {
    let dist = WeightedIndex::new(weights)
        .map_err(|e| Error::Unsupported(format!("cannot sample: {e}")))?;
    Ok(dist.sample(rng))
}

fn replicas_agree(agents: &[AgentRuntime; 2]) {
    assert!(
        agents[0].beliefs == agents[1].beliefs && agents[0].cstate == agents[1].cstate,
        "common-information replicas diverged"
    );
}

/// Runs one episode with the given random stream.
pub fn simulate_episode(
    policy: &Policy,
    model: &Model,
    horizon: usize,
    rng: &mut ChaCha8Rng,
    record: bool,
) -> Result<EpisodeStats> {
    let scenario = model.scenario;
    let (theta_c, theta_k) = (model.comm_factor, model.ctrl_factor);
    let p_e = scenario.erasure_prob;
    let initial = model.initial_pair();
    let mut agents = [0, 1].map(|agent| AgentRuntime {
        agent,
        state: 0,
        beliefs: initial.clone(),
        cstate: ConstraintState::INITIAL,
    });
    for a in &mut agents {
        a.state = sample(&scenario.agents[a.agent].initial, rng)?;
    }
    let mut trace = record.then(Vec::new);
    let mut total = 0.0;
    let mut comm_count = 0;
    for t in 1..=horizon {
        let x = (agents[0].state, agents[1].state);
        // Each agent reads the common prescription off its own replica and
        // applies its own component.
        let gammas = [
            policy.decide_comm(t, &agents[0].beliefs, agents[0].cstate)?,
            policy.decide_comm(t, &agents[1].beliefs, agents[1].cstate)?,
        ];
        let m = (gammas[0].0[0].eval(x.0), gammas[1].0[1].eval(x.1));
        let fired = m != (0, 0);
        let z = if fired && !(p_e > 0.0 && rng.random_bool(p_e)) {
            Observation::Joint(x.0, x.1)
        } else {
            Observation::Phi
        };
        let comm_cost = if fired {
            scenario.comm_cost.at(x.0, x.1)
        } else {
            0.0
        };
        comm_count += fired as usize;
        let exchanged = z != Observation::Phi;
        for (a, gamma) in agents.iter_mut().zip(&gammas) {
            a.beliefs = if p_e > 0.0 {
                eta_erasure_pair(&a.beliefs, gamma, ErasureOutcome { z, m }, p_e)?
            } else {
                eta_pair(&a.beliefs, gamma, z)?
            };
            a.cstate = model.after_comm(a.cstate, if p_e > 0.0 { exchanged } else { fired });
        }
        replicas_agree(&agents);
        let comm_record = TraceRecord {
            t,
            phase: Phase::Comm,
            x,
            m: Some(m),
            z: Some(z),
            u: None,
            cost: comm_cost,
        };
        total += comm_record.weight(theta_c, theta_k) * comm_cost;

        let lambdas = [
            policy.decide_ctrl(t, &agents[0].beliefs, agents[0].cstate)?,
            policy.decide_ctrl(t, &agents[1].beliefs, agents[1].cstate)?,
        ];
        let u = (lambdas[0].0[0].eval(x.0), lambdas[1].0[1].eval(x.1));
        let stage = scenario.cost.get(x.0, x.1, u.0, u.1);
        let ctrl_record = TraceRecord {
            t,
            phase: Phase::Ctrl,
            x,
            m: None,
            z: None,
            u: Some(u),
            cost: stage,
        };
        total += ctrl_record.weight(theta_c, theta_k) * stage;
        if let Some(trace) = trace.as_mut() {
            trace.push(comm_record);
            trace.push(ctrl_record);
        }

        let actions = [u.0, u.1];
        for (a, lambda) in agents.iter_mut().zip(&lambdas) {
            a.beliefs = beta_pair(&a.beliefs, lambda, &scenario.agents)?;
            a.cstate = model.next_step(a.cstate);
        }
        replicas_agree(&agents);
        for a in &mut agents {
            let row = &scenario.agents[a.agent].transition[a.state][actions[a.agent]];
            a.state = sample(row, rng)?;
        }
    }
    Ok(EpisodeStats {
        discounted_cost: total,
        comm_count,
        steps: horizon,
        trace,
    })
}

/// Monte Carlo evaluation of `policy`. Episode `k` draws from the ChaCha8
/// stream `k` of the generator seeded with `seed`, so results do not depend
/// on scheduling.
pub fn simulate(policy: &Policy, opts: SimOptions) -> Result<(SimSummary, Vec<EpisodeStats>)> {
    let scenario = &policy.scenario;
    let model = Model::new(scenario)?;
    let (horizon, tail_bound) = match policy.horizon() {
        Some(t) => (t, 0.0),
        None => {
            let (theta_c, theta_k) = (model.comm_factor, model.ctrl_factor);
            let c_max = scenario.max_step_cost();
            match opts.horizon {
                Some(h) => (
                    h,
                    (theta_c * theta_k).powi(h as i32) * c_max / (1.0 - theta_c * theta_k),
                ),
                None => horizon_for_tail(theta_c, theta_k, c_max, opts.tail_tolerance),
            }
        }
    };
    let episodes: Vec<EpisodeStats> = (0..opts.episodes)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            simulate_episode(policy, &model, horizon, &mut rng, opts.record_traces)
        })
        .collect::<Result<_>>()?;

    let n = episodes.len().max(1) as f64;
    let mean = episodes.iter().map(|e| e.discounted_cost).sum::<f64>() / n;
    let std_error = if episodes.len() > 1 {
        let var = episodes
            .iter()
            .map(|e| (e.discounted_cost - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let sent: usize = episodes.iter().map(|e| e.comm_count).sum();
    let steps: usize = episodes.iter().map(|e| e.steps).sum();
    let summary = SimSummary {
        episodes: episodes.len(),
        seed: opts.seed,
        horizon,
        tail_bound,
        mean,
        std_error,
        comm_frequency: if steps == 0 {
            0.0
        } else {
            sent as f64 / steps as f64
        },
    };
    Ok((summary, episodes))
}
