use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scenario::Observation;

pub const TRACE_HEADER: &str = "t\tphase\tx1\tx2\tm1\tm2\tz\tu1\tu2\tcost";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Comm,
    Ctrl,
}

/// One phase of one simulated step. `t` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub phase: Phase,
    pub x: (usize, usize),
    /// Communication decisions (comm phase only).
    pub m: Option<(u8, u8)>,
    pub z: Option<Observation>,
    /// Actions (control phase only).
    pub u: Option<(usize, usize)>,
    /// Undiscounted cost incurred in this phase.
    pub cost: f64,
}

impl TraceRecord {
    /// Weight of this record's cost in the discounted total.
    pub fn weight(&self, theta_c: f64, theta_k: f64) -> f64 {
        let base = (theta_c * theta_k).powi(self.t as i32 - 1);
        match self.phase {
            Phase::Comm => base,
            Phase::Ctrl => base * theta_c,
        }
    }
}

/// Discounted total of a trace, summed in record order.
pub fn recompute_discounted(records: &[TraceRecord], theta_c: f64, theta_k: f64) -> f64 {
    records
        .iter()
        .fold(0.0, |acc, r| acc + r.weight(theta_c, theta_k) * r.cost)
}

fn opt<T>(v: Option<T>, f: impl FnOnce(T) -> String) -> String {
    v.map_or_else(|| "-".to_string(), f)
}

/// Tab-separated trace with a header line. Costs use the shortest
/// representation that parses back to the same float.
pub fn render_trace(records: &[TraceRecord]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let z = opt(r.z, |z| match z {
            Observation::Phi => "phi".to_string(),
            Observation::Joint(a, b) => format!("{a}:{b}"),
        });
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:?}",
            r.t,
            match r.phase {
                Phase::Comm => "comm",
                Phase::Ctrl => "ctrl",
            },
            r.x.0,
            r.x.1,
            opt(r.m, |m| m.0.to_string()),
            opt(r.m, |m| m.1.to_string()),
            z,
            opt(r.u, |u| u.0.to_string()),
            opt(r.u, |u| u.1.to_string()),
            r.cost
        );
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TRACE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "missing trace header".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != 10 {
            return Err(bad(format!("expected 10 fields, found {}", cells.len())));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}")));
        let maybe = |s: &str| if s == "-" { Ok(None) } else { num(s).map(Some) };
        let phase = match cells[1] {
            "comm" => Phase::Comm,
            "ctrl" => Phase::Ctrl,
            other => return Err(bad(format!("unknown phase {other:?}"))),
        };
        let m = match (maybe(cells[4])?, maybe(cells[5])?) {
            (Some(a), Some(b)) => Some((a as u8, b as u8)),
            _ => None,
        };
        let z = match cells[6] {
            "-" => None,
            "phi" => Some(Observation::Phi),
            s => {
                let (a, b) = s
                    .split_once(':')
                    .ok_or_else(|| bad(format!("bad observation {s:?}")))?;
                Some(Observation::Joint(num(a)?, num(b)?))
            }
        };
        let u = match (maybe(cells[7])?, maybe(cells[8])?) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        };
        let cost = cells[9]
            .parse::<f64>()
            .map_err(|e| bad(format!("{:?}: {e}", cells[9])))?;
        out.push(TraceRecord {
            t: num(cells[0])?,
            phase,
            x: (num(cells[2])?, num(cells[3])?),
            m,
            z,
            u,
            cost,
        });
    }
    Ok(out)
}
