//! Commands behind the `commplan` binary. Each returns the full text of its
//! output, starting with a `#`-prefixed reproducibility stanza.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commplan::exec::{render_trace, simulate, SimOptions};
use commplan::pomdp::FlatPomdp;
use commplan::scenario::{load_scenario_path, CommCost, DiscountMode, Horizon, Scenario};
use commplan::solver::{
    baseline_always, baseline_never, solve, ConstraintState, Solution, SolveOptions,
};
use commplan::{Error, Result};
use rayon::prelude::*;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "commplan",
    version,
    about = "Optimal communication and control for two agents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the scenario and report the optimal cost and first decisions.
    Solve(Common),
    /// Solve, then evaluate the policy by decentralized Monte Carlo runs.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bound on the discounted cost dropped by truncating episodes.
        #[arg(long, default_value_t = 0.05)]
        tail_tol: f64,
        /// Write the first episode's trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Optimal, never-communicate and always-communicate costs over a list of
    /// communication costs.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated communication costs; empty for none. Defaults to
        /// the scenario's own cost.
        #[arg(long)]
        rho: Option<String>,
    },
    /// Optimal cost next to both communication baselines.
    Baselines(Common),
    /// Write the coordinator problem as a flat POMDP file.
    ExportPomdp(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DiscountModeArg {
    PerPhase,
    PerStep,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Grid nodes per belief axis (discounted scenarios).
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Value-iteration stopping threshold (sup norm).
    #[arg(long)]
    pub vi_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub discount_mode: Option<DiscountModeArg>,
    /// Override the erasure probability.
    #[arg(long)]
    pub erasure: Option<f64>,
    /// Ignore the scenario's communication constraints.
    #[arg(long)]
    pub no_constraints: bool,
    /// Write output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    pub fn load(&self) -> Result<Scenario> {
        let mut s = load_scenario_path(&self.scenario)?;
        if let Some(mode) = self.discount_mode {
            s.discount_mode = match mode {
                DiscountModeArg::PerPhase => DiscountMode::PerPhase,
                DiscountModeArg::PerStep => DiscountMode::PerStep,
            };
        }
        if let Some(p) = self.erasure {
            s.erasure_prob = p;
        }
        if self.no_constraints {
            s.constraints = None;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn solve_options(&self) -> SolveOptions {
        let mut opts = SolveOptions::grid(self.grid);
        opts.grid.tolerance = self.vi_tol;
        opts
    }

    fn flags(&self) -> Vec<(&'static str, String)> {
        let mode = match self.discount_mode {
            None => "scenario".to_string(),
            Some(DiscountModeArg::PerPhase) => "per-phase".to_string(),
            Some(DiscountModeArg::PerStep) => "per-step".to_string(),
        };
        vec![
            ("grid", self.grid.to_string()),
            (
                "vi_tol",
                self.vi_tol
                    .map_or_else(|| "auto".to_string(), |t| format!("{t:e}")),
            ),
            ("discount_mode", mode),
            (
                "erasure",
                self.erasure
                    .map_or_else(|| "scenario".to_string(), |p| p.to_string()),
            ),
            (
                "constraints",
                if self.no_constraints {
                    "off"
                } else {
                    "scenario"
                }
                .to_string(),
            ),
        ]
    }
}

/// `#`-prefixed lines identifying the artifact, input and flags of a run.
pub fn stanza(
    command: &str,
    scenario: &Scenario,
    flags: &[(&str, String)],
    seed: Option<u64>,
) -> String {
    let flags: Vec<String> = flags.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(
        "# commplan {VERSION}\n# command: {command}\n# scenario_hash: {}\n# flags: {}\n# seed: {}\n",
        scenario.content_hash(),
        flags.join(" "),
        seed.map_or_else(|| "-".to_string(), |s| s.to_string()),
    )
}

fn fmt_value(v: f64) -> String {
    format!("{v:.4}")
}

fn initial_decisions(sol: &Solution) -> Result<Vec<String>> {
    let policy = &sol.policy;
    let model = commplan::solver::Model::new(&policy.scenario)?;
    let initial = model.initial_pair();
    let gamma = policy.decide_comm(1, &initial, ConstraintState::INITIAL)?;
    Ok(vec![format!("first_comm={gamma}")])
}

pub fn cmd_solve(common: &Common) -> Result<String> {
    let scenario = common.load()?;
    let sol = solve(&scenario, common.solve_options())?;
    let mut out = stanza("solve", &scenario, &common.flags(), None);
    for line in sol.report.to_lines(false) {
        out.push_str(&line);
        out.push('\n');
    }
    for line in initial_decisions(&sol)? {
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Output text plus the rendered trace of the first episode, if requested.
pub fn cmd_simulate(
    common: &Common,
    episodes: usize,
    seed: u64,
    tail_tol: f64,
    want_trace: bool,
) -> Result<(String, Option<String>)> {
    let scenario = common.load()?;
    let sol = solve(&scenario, common.solve_options())?;
    let opts = SimOptions {
        episodes,
        seed,
        tail_tolerance: tail_tol,
        horizon: None,
        record_traces: want_trace,
    };
    let (summary, runs) = simulate(&sol.policy, opts)?;
    let mut flags = common.flags();
    flags.push(("episodes", episodes.to_string()));
    flags.push(("tail_tol", tail_tol.to_string()));
    let mut out = stanza("simulate", &scenario, &flags, Some(seed));
    out.push_str(&format!("dp_value={}\n", fmt_value(sol.initial_value())));
    for line in summary.to_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    let trace = runs
        .first()
        .and_then(|e| e.trace.as_deref())
        .map(render_trace);
    Ok((out, trace))
}

/// Parses a comma-separated list; an empty string is an empty list.
pub fn parse_rho_list(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line: 0,
                message: format!("--rho entry {s:?}: {e}"),
            })
        })
        .collect()
}

/// Baseline columns ignore communication constraints.
pub const SWEEP_HEADER: &str =
    "rho\tOptimal\tNever-comm\tAlways-comm\tmode\tgrid\titerations\tresidual";

pub fn cmd_sweep(common: &Common, rho: Option<&str>) -> Result<String> {
    let scenario = common.load()?;
    let rhos = match rho {
        Some(list) => parse_rho_list(list)?,
        None => match scenario.comm_cost.fixed() {
            Some(r) => vec![r],
            None => {
                return Err(Error::Unsupported(
                    "scenario has a state-dependent communication cost; pass --rho".into(),
                ))
            }
        },
    };
    let mut flags = common.flags();
    let listed: Vec<String> = rhos.iter().map(|r| r.to_string()).collect();
    flags.push(("rho", listed.join(",")));
    let mut out = stanza("sweep", &scenario, &flags, None);
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    if rhos.is_empty() {
        return Ok(out);
    }
    let opts = common.solve_options();
    let free = scenario.clone().with_constraints(None);
    // Never communicating never pays ρ, so one solve covers every row.
    let never = baseline_never(&free, opts)?.initial_value();
    let rows: Vec<Result<String>> = rhos
        .par_iter()
        .map(|&rho| {
            let s = scenario.clone().with_comm_cost(CommCost::Fixed(rho));
            let opt = solve(&s, opts)?;
            let always = baseline_always(&s.clone().with_constraints(None), opts)?;
            let r = &opt.report;
            Ok(format!(
                "{rho}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.3e}\n",
                fmt_value(opt.initial_value()),
                fmt_value(never),
                fmt_value(always.initial_value()),
                r.mode,
                r.grid_resolution
                    .map_or_else(|| "-".to_string(), |g| g.to_string()),
                r.iterations,
                r.residual
            ))
        })
        .collect();
    for row in rows {
        out.push_str(&row?);
    }
    Ok(out)
}

pub fn cmd_baselines(common: &Common) -> Result<String> {
    let scenario = common.load()?;
    let opts = common.solve_options();
    let opt = solve(&scenario, opts)?.initial_value();
    let free = scenario.clone().with_constraints(None);
    let never = baseline_never(&free, opts)?.initial_value();
    let always = baseline_always(&free, opts)?.initial_value();
    let mut out = stanza("baselines", &scenario, &common.flags(), None);
    if scenario.constraints.is_some() {
        out.push_str("# baselines ignore the communication constraints\n");
    }
    out.push_str(&format!(
        "optimal={}\nnever_comm={}\nalways_comm={}\nsaving_vs_best_baseline={}\n",
        fmt_value(opt),
        fmt_value(never),
        fmt_value(always),
        fmt_value(never.min(always) - opt)
    ));
    Ok(out)
}

pub fn cmd_export_pomdp(common: &Common) -> Result<String> {
    let scenario = common.load()?;
    if scenario.horizon != Horizon::Discounted {
        return Err(Error::Unsupported(
            "POMDP export needs a discounted scenario".into(),
        ));
    }
    let pomdp = FlatPomdp::from_scenario(&scenario)?;
    let mut out = stanza("export-pomdp", &scenario, &common.flags(), None);
    out.push_str(&pomdp.to_text());
    Ok(out)
}

fn write(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(c) => write(c.out.as_ref(), &cmd_solve(&c)?),
        Command::Simulate {
            common,
            episodes,
            seed,
            tail_tol,
            trace,
        } => {
            let (text, rendered) =
                cmd_simulate(&common, episodes, seed, tail_tol, trace.is_some())?;
            if let (Some(path), Some(rendered)) = (trace, rendered) {
                std::fs::write(path, rendered)?;
            }
            write(common.out.as_ref(), &text)
        }
        Command::Sweep { common, rho } => {
            write(common.out.as_ref(), &cmd_sweep(&common, rho.as_deref())?)
        }
        Command::Baselines(c) => write(c.out.as_ref(), &cmd_baselines(&c)?),
        Command::ExportPomdp(c) => write(c.out.as_ref(), &cmd_export_pomdp(&c)?),
    }
}
