//! Stationary value iteration on a product grid of belief simplices.
//!
//! Transition stencils are computed once per node and prescription; each
//! sweep is then a sequence of sparse dot products, run in parallel over
//! nodes with double-buffered tables.

use std::time::Instant;

use rayon::prelude::*;

use super::backup::{argmin_first, comm_branches, ctrl_terms, CommMode, Model};
use super::grid::ProductGrid;
use super::policy::{Levels, Policy, Rules, RunReport, Solution, ValueFunction};
use crate::error::{Error, Result};
use crate::scenario::{Horizon, Scenario};

#[derive(Debug, Clone, Copy)]
pub struct GridOptions {
    /// Nodes per simplex edge.
    pub resolution: usize,
    /// Sup-norm stopping threshold; defaults to `1e-6·(1−θ_c·θ_k)·scale`.
    pub tolerance: Option<f64>,
    pub max_iterations: usize,
    pub comm_mode: CommMode,
    /// Use the erasure-channel updates even when `erasure_prob = 0`.
    pub erasure_updates: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            resolution: 201,
            tolerance: None,
            max_iterations: 100_000,
            comm_mode: CommMode::Optimize,
            erasure_updates: false,
        }
    }
}

impl GridOptions {
    pub fn with_resolution(resolution: usize) -> Self {
        Self {
            resolution,
            ..Default::default()
        }
    }

    pub fn comm_mode(mut self, mode: CommMode) -> Self {
        self.comm_mode = mode;
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct Span {
    start: u32,
    len: u32,
}

/// Sparse `(node, coefficient)` lists stored contiguously.
#[derive(Debug, Default)]
struct Terms {
    nodes: Vec<u32>,
    coefs: Vec<f64>,
}

impl Terms {
    fn push(&mut self, stencil: &[(usize, f64)]) -> Span {
        let start = self.nodes.len() as u32;
        for &(node, w) in stencil {
            self.nodes.push(node as u32);
            self.coefs.push(w);
        }
        Span {
            start,
            len: stencil.len() as u32,
        }
    }

    #[inline]
    fn dot(&self, span: Span, values: &[f64]) -> f64 {
        let range = span.start as usize..(span.start + span.len) as usize;
        self.nodes[range.clone()]
            .iter()
            .zip(&self.coefs[range])
            .map(|(&n, &c)| c * values[n as usize])
            .sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct CommEntry {
    rho_term: f64,
    silent: Span,
    exchanged: Span,
}

#[derive(Debug, Clone, Copy)]
struct CtrlEntry {
    cost: f64,
    next: Span,
}

/// Precomputed backup ingredients for every node.
struct Tables {
    num_comm: usize,
    num_ctrl: usize,
    comm: Vec<CommEntry>,
    ctrl: Vec<CtrlEntry>,
    terms: Terms,
}

type Stencil = Vec<(usize, f64)>;
type NodeTerms = (Vec<(f64, Stencil, Stencil)>, Vec<(f64, Stencil)>);

fn build_tables(model: &Model, grid: &ProductGrid, comm_used: &[usize]) -> Result<Tables> {
    let per_node: Vec<Result<NodeTerms>> = (0..grid.len())
        .into_par_iter()
        .map(|node| {
            let pair = grid.node_pair(node);
            let mut comm = Vec::with_capacity(comm_used.len());
            for &g in comm_used {
                let (rho_term, branches) = comm_branches(model, &pair, &model.comm_pairs[g])?;
                let mut silent = Vec::new();
                let mut exchanged = Vec::new();
                for b in branches {
                    let target = if b.communicated {
                        &mut exchanged
                    } else {
                        &mut silent
                    };
                    target.extend(
                        grid.stencil(&b.post)
                            .into_iter()
                            .map(|(n, w)| (n, w * b.prob)),
                    );
                }
                comm.push((rho_term, silent, exchanged));
            }
            let mut ctrl = Vec::with_capacity(model.ctrl_pairs.len());
            for lambda in &model.ctrl_pairs {
                let (cost, next) = ctrl_terms(model, &pair, lambda)?;
                ctrl.push((cost, grid.stencil(&next)));
            }
            Ok((comm, ctrl))
        })
        .collect();

    let mut tables = Tables {
        num_comm: comm_used.len(),
        num_ctrl: model.ctrl_pairs.len(),
        comm: Vec::with_capacity(grid.len() * comm_used.len()),
        ctrl: Vec::with_capacity(grid.len() * model.ctrl_pairs.len()),
        terms: Terms::default(),
    };
    for node in per_node {
        let (comm, ctrl) = node?;
        for (rho_term, silent, exchanged) in comm {
            let silent = tables.terms.push(&silent);
            let exchanged = tables.terms.push(&exchanged);
            tables.comm.push(CommEntry {
                rho_term,
                silent,
                exchanged,
            });
        }
        for (cost, next) in ctrl {
            let next = tables.terms.push(&next);
            tables.ctrl.push(CtrlEntry { cost, next });
        }
    }
    Ok(tables)
}

/// Value iteration for the discounted (stationary) coordinator problem.
pub fn solve_discounted(scenario: &Scenario, opts: GridOptions) -> Result<Solution> {
    let start = Instant::now();
    if scenario.horizon != Horizon::Discounted {
        return Err(Error::Unsupported(
            "grid value iteration needs a discounted horizon".into(),
        ));
    }
    if opts.resolution < 2 {
        return Err(Error::OutOfRange {
            path: "grid".into(),
            value: opts.resolution as f64,
            message: "at least 2 nodes per axis".into(),
        });
    }
    let mut model = Model::new(scenario)?;
    model.erasure_channel |= opts.erasure_updates;
    let grid = ProductGrid::new(scenario.num_states(), opts.resolution);
    let levels = Levels {
        constrained: scenario.constraints.is_some(),
        cap: model.since_last_cap(),
    };

    // Allowed communication pairs per comm layer, as indices into `comm_used`.
    let mut comm_used: Vec<usize> = Vec::new();
    let mut allowed: Vec<Vec<usize>> = Vec::new();
    for level in 0..levels.comm_count() {
        let cstate = levels.constrained.then(|| levels.comm_state(level));
        let feasible = model.feasible_comm(opts.comm_mode, cstate)?;
        if feasible.is_empty() {
            return Err(Error::InfeasibleConstraints(format!(
                "no communication prescription allowed in layer {level}"
            )));
        }
        allowed.push(
            feasible
                .into_iter()
                .map(|g| match comm_used.iter().position(|&u| u == g) {
                    Some(k) => k,
                    None => {
                        comm_used.push(g);
                        comm_used.len() - 1
                    }
                })
                .collect(),
        );
    }
    let tables = build_tables(&model, &grid, &comm_used)?;

    let (theta_c, theta_k) = (model.comm_factor, model.ctrl_factor);
    let scale = scenario.max_step_cost().max(1.0);
    let tolerance = opts
        .tolerance
        .unwrap_or(1e-6 * (1.0 - theta_c * theta_k) * scale);
    let n = grid.len();

    // Layer transitions.
    let silent_target = |level: usize| if levels.constrained { level + 1 } else { 0 };
    let exchanged_target = 0usize;
    let next_comm = |ctrl_level: usize| {
        if levels.constrained {
            let s = levels.ctrl_state(ctrl_level);
            levels.comm_level(model.next_step(s))
        } else {
            0
        }
    };

    let ctrl_value = |node: usize, k: usize, target: &[f64]| {
        let e = tables.ctrl[node * tables.num_ctrl + k];
        e.cost + theta_k * tables.terms.dot(e.next, target)
    };
    let comm_value = |node: usize, k: usize, silent: &[f64], exchanged: &[f64]| {
        let e = tables.comm[node * tables.num_comm + k];
        e.rho_term
            + theta_c
                * (tables.terms.dot(e.silent, silent) + tables.terms.dot(e.exchanged, exchanged))
    };

    let ctrl_sweep = |comm_values: &[Vec<f64>], out: &mut [Vec<f64>]| {
        for (level, out) in out.iter_mut().enumerate() {
            let target = &comm_values[next_comm(level)];
            out.par_iter_mut().enumerate().for_each(|(node, slot)| {
                *slot = (0..tables.num_ctrl)
                    .fold(f64::INFINITY, |m, k| m.min(ctrl_value(node, k, target)));
            });
        }
    };
    let comm_sweep = |ctrl_values: &[Vec<f64>], out: &mut [Vec<f64>]| {
        for (level, out) in out.iter_mut().enumerate() {
            let silent = &ctrl_values[silent_target(level)];
            let exchanged = &ctrl_values[exchanged_target];
            let allowed = &allowed[level];
            out.par_iter_mut().enumerate().for_each(|(node, slot)| {
                *slot = allowed.iter().fold(f64::INFINITY, |m, &k| {
                    m.min(comm_value(node, k, silent, exchanged))
                });
            });
        }
    };

    let mut comm_values = vec![vec![0.0; n]; levels.comm_count()];
    let mut next = comm_values.clone();
    let mut ctrl_values = vec![vec![0.0; n]; levels.ctrl_count()];
    let mut iterations = 0;
    let mut residual;
    let mut residuals = Vec::new();
    loop {
        ctrl_sweep(&comm_values, &mut ctrl_values);
        comm_sweep(&ctrl_values, &mut next);
        iterations += 1;
        residual = next
            .iter()
            .flatten()
            .zip(comm_values.iter().flatten())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        residuals.push(residual);
        std::mem::swap(&mut comm_values, &mut next);
        if residual < tolerance {
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NotConverged {
                iterations,
                residual,
            });
        }
    }
    // One more control pass so both phases are consistent, then read off
    // the first minimizing prescription at every node.
    ctrl_sweep(&comm_values, &mut ctrl_values);
    let ctrl_choices: Vec<Vec<usize>> = (0..levels.ctrl_count())
        .map(|level| {
            let target = &comm_values[next_comm(level)];
            (0..n)
                .into_par_iter()
                .map(|node| {
                    let values: Vec<f64> = (0..tables.num_ctrl)
                        .map(|k| ctrl_value(node, k, target))
                        .collect();
                    argmin_first(&values).expect("control pairs exist").1
                })
                .collect()
        })
        .collect();
    let comm_choices: Vec<Vec<usize>> = (0..levels.comm_count())
        .map(|level| {
            let silent = &ctrl_values[silent_target(level)];
            let exchanged = &ctrl_values[exchanged_target];
            let allowed = &allowed[level];
            (0..n)
                .into_par_iter()
                .map(|node| {
                    let values: Vec<f64> = allowed
                        .iter()
                        .map(|&k| comm_value(node, k, silent, exchanged))
                        .collect();
                    let k = argmin_first(&values).expect("allowed set is nonempty").1;
                    comm_used[allowed[k]]
                })
                .collect()
        })
        .collect();

    let initial = model.initial_pair();
    let initial_value = grid.interpolate(&comm_values[0], &initial);
    let report = RunReport {
        scenario_hash: scenario.content_hash(),
        mode: "grid",
        comm_mode: opts.comm_mode,
        grid_resolution: Some(opts.resolution),
        iterations,
        residual,
        wall_time_secs: start.elapsed().as_secs_f64(),
        initial_value,
        residual_history: residuals,
    };
    Ok(Solution {
        policy: Policy {
            scenario: scenario.clone(),
            comm_mode: opts.comm_mode,
            comm_pairs: model.comm_pairs.clone(),
            ctrl_pairs: model.ctrl_pairs.clone(),
            rules: Rules::Grid {
                grid: grid.clone(),
                levels,
                comm: comm_choices,
                ctrl: ctrl_choices,
            },
        },
        value: ValueFunction::Grid {
            grid,
            levels,
            comm: comm_values,
            ctrl: ctrl_values,
        },
        report,
    })
}
