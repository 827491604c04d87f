//! Solve one heterogeneous network exactly, inspect the timeline, and see how
//! the order in which children are served changes the optimum.
//!
//! ```bash
//! cargo run --example solve_network
//! ```

use dlt_surrogate::dlt::{oracle_solve, simulate_timeline, solve_optimal, to_time_rates, SltnConfig};
use dlt_surrogate::dlt::DEFAULT_COMPUTE_INTENSITY;

fn main() -> dlt_surrogate::Result<()> {
    // Root at 8 GFLOPS/s, four children as (speed GFLOPS/s, bandwidth MB/s).
    let children = [(12.0, 40.0), (3.0, 140.0), (9.0, 75.0), (6.0, 20.0)];
    let config = SltnConfig::new(
        8.0,
        children.iter().map(|c| c.0).collect(),
        children.iter().map(|c| c.1).collect(),
        25.0,
    )?;
    let rates = to_time_rates(&config, DEFAULT_COMPUTE_INTENSITY)?;
    let alloc = solve_optimal(&rates, config.load_gb)?;
    let timeline = simulate_timeline(&rates, &alloc, config.load_gb)?;

    println!("T* = {:.4} s for {} GB", alloc.t_star, config.load_gb);
    println!("{:<6}{:>10}{:>14}{:>14}", "proc", "alpha", "comm_done_s", "finish_s");
    for (i, a) in alloc.alpha.iter().enumerate() {
        let comm = if i == 0 { "-".to_string() } else { format!("{:.4}", timeline.comm_finish[i - 1]) };
        println!("P{:<5}{:>10.5}{:>14}{:>14.4}", i, a, comm, timeline.compute_finish[i]);
    }

    let oracle = oracle_solve(&rates, config.load_gb)?;
    println!("linear-system oracle agrees to {:.1e}", (oracle.t_star - alloc.t_star).abs() / alloc.t_star);

    // Serving the fastest links first is the classic sequencing heuristic.
    let mut by_bandwidth = children.to_vec();
    by_bandwidth.sort_by(|a, b| b.1.total_cmp(&a.1));
    let reordered = SltnConfig::new(
        8.0,
        by_bandwidth.iter().map(|c| c.0).collect(),
        by_bandwidth.iter().map(|c| c.1).collect(),
        25.0,
    )?;
    let t = solve_optimal(&to_time_rates(&reordered, DEFAULT_COMPUTE_INTENSITY)?, reordered.load_gb)?.t_star;
    println!("fastest-link-first ordering: T* = {t:.4} s");
    Ok(())
}
