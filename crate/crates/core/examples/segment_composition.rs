//! Builds the loop transition of a stadium-shaped route from its segments and
//! derives the steady-state error caused by a constant odometry bias.
//!
//! Run with `cargo run --example segment_composition`.

use bearnav::error_model::{
    compose_transitions, curved_segment_transition, steady_loop_error, straight_segment_transition_biased, ErrorState,
    FeatureDistance, Perturbation,
};
use bearnav::types::Velocity;
use std::f64::consts::PI;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (v, radius, straight_len) = (0.5, 1.0, 2.0);
    let l = FeatureDistance::new(3.0)?;
    let (s_x, s_y) = (0.01, 0.002);
    let bias = Perturbation::Constant { s_x, s_y };

    let straight = straight_segment_transition_biased(v, l, straight_len / v, s_x, s_y)?;
    let turn_time = PI * radius / v;
    let turn = curved_segment_transition(|_| Velocity::new(v, v / radius), l, &bias, turn_time, 1e-3)?;
    let lap = compose_transitions(&[straight, turn, straight, turn])?;

    println!("straight segment spectral radius {:.6}", straight.spectral_radius());
    println!("half-turn spectral radius        {:.6}", turn.spectral_radius());
    println!("full loop spectral radius        {:.6}", lap.spectral_radius());

    let fixed = steady_loop_error(&lap)?;
    println!(
        "steady loop error ({:+.5}, {:+.5}) m, norm {:.5} m",
        fixed.x,
        fixed.y,
        fixed.norm()
    );

    let mut e = ErrorState::new(0.5, -0.3);
    for k in 1..=8 {
        e = lap.apply(e);
        println!("after loop {k}: ({:+.5}, {:+.5})", e.x, e.y);
    }
    Ok(())
}
