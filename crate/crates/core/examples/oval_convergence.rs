//! Repeats the taught oval twenty times from an offset start for a handful of
//! seeds and prints how the loop-end error settles.
//!
//! Run with `cargo run --release --example oval_convergence [-- seeds]`.

use bearnav::sim::experiments::{convergence_stats, oval_scenario, run_series, LoopSeries};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let scenario = oval_scenario();
    let series = (0..seeds)
        .map(|seed| run_series(&scenario, seed, false))
        .collect::<Result<Vec<LoopSeries>, _>>()?;

    println!("initial error {:.3} m", series[0].initial_error);
    print!("loop");
    for s in &series {
        print!(" {:>7}", format!("seed{}", s.seed));
    }
    println!();
    for k in 0..scenario.loops {
        print!("{:>4}", k + 1);
        for s in &series {
            print!(" {:>7.3}", s.errors[k]);
        }
        println!();
    }

    let stats = convergence_stats(&series);
    println!(
        "worst median after loop 3: {:.3} m, non-increasing after loop 2: {:.0} %, completed: {:.0} %",
        stats.worst_median_after_loop3,
        100.0 * stats.non_increasing_fraction,
        100.0 * stats.completed_fraction
    );
    Ok(())
}
