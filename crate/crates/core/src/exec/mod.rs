//! Decentralized execution of extracted policies, plus exact oracles for
//! small instances.

mod oracle;
mod simulate;
mod trace;

pub use oracle::{
    brute_force_t1, brute_force_t2, brute_force_tree, exact_joint_filter, JointDistribution,
};
pub use simulate::{
    horizon_for_tail, simulate, simulate_episode, AgentRuntime, EpisodeStats, SimOptions,
    SimSummary,
};
pub use trace::{
    parse_trace, recompute_discounted, render_trace, Phase, TraceRecord, TRACE_HEADER,
};
