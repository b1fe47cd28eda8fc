//! Prints the optimal, never-communicate and always-communicate costs for
//! the two defense-game instances.

use commplan::scenario::{defense_asymmetric, defense_symmetric};
use commplan::solver::{baseline_always, baseline_never, solve, SolveOptions};

fn main() -> commplan::Result<()> {
    let resolution: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(201);
    let opts = SolveOptions::grid(resolution);
    for (name, build, rhos) in [
        (
            "symmetric",
            defense_symmetric as fn(f64) -> _,
            &[0.0, 1.0, 2.0, 4.0, 8.0][..],
        ),
        (
            "asymmetric",
            defense_asymmetric,
            &[0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0][..],
        ),
    ] {
        println!("{name}");
        let never = baseline_never(&build(0.0), opts)?;
        for &rho in rhos {
            let s = build(rho);
            let t = std::time::Instant::now();
            let opt = solve(&s, opts)?;
            let always = baseline_always(&s, opts)?;
            println!(
                "rho={rho:<4} optimal={:.2} never={:.2} always={:.2}  ({} sweeps, {:.1}s)",
                opt.initial_value(),
                never.initial_value(),
                always.initial_value(),
                opt.report.iterations,
                t.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
