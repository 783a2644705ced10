//! Compares profile-only, vision-only and combined steering.
//!
//! Run with `cargo run --release --example steering_ablations`.

use bearnav::sim::experiments::{large_loop_scenario, oval_scenario, run_series, sharp_turn_scenario};
use bearnav::types::SteeringMode;

fn fmt(errors: &[f64]) -> String {
    errors.iter().map(|e| format!("{e:.2}")).collect::<Vec<_>>().join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut blind = large_loop_scenario();
    blind.navigator.alpha = 0.0;
    blind.navigator.steering = SteeringMode::ProfileOnly;
    blind.traversal.max_deviation = None;
    blind.loops = 5;
    let s = run_series(&blind, 1, false)?;
    println!("profile only, large loop: loop-end errors {} m", fmt(&s.errors));

    let mut vision = sharp_turn_scenario();
    vision.navigator.steering = SteeringMode::VisionOnly;
    let s = run_series(&vision, 1, true)?;
    let log = &s.logs[0];
    println!(
        "vision only, sharp turn: completion {:?}, stopped after {:.2} m of odometry",
        log.completion,
        log.samples.last().map_or(0.0, |x| x.d_est)
    );

    let s = run_series(&oval_scenario(), 1, false)?;
    println!("combined, oval: loop-end errors {} m", fmt(&s.errors));
    println!("forward velocity always taken from the profile: {}", s.heading_only);
    Ok(())
}
