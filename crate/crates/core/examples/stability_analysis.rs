//! Eigenvalues of the error dynamics, a short integrated trajectory and a
//! coarse stability sweep.
//!
//! Run with `cargo run --example stability_analysis`.

use bearnav::error_model::{
    eigenvalues, integrate_error, stability_sweep, ErrorState, FeatureDistance, Perturbation, SweepRange,
};
use bearnav::types::Velocity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "{:>6} {:>7} {:>6}  {:>24}  {:>24}  verdict",
        "v", "omega", "l", "lambda1", "lambda2"
    );
    for &(v, omega, l) in &[(1.0, 0.0, 1.0), (1.0, 1.0, 1.0), (0.5, 0.2, 5.0), (0.3, -0.8, 2.0)] {
        let e = eigenvalues(v, omega, l)?;
        println!(
            "{v:>6.2} {omega:>7.2} {l:>6.2}  {:>+11.6} {:>+11.6}i  {:>+11.6} {:>+11.6}i  {:?}",
            e.lambda1.re,
            e.lambda1.im,
            e.lambda2.re,
            e.lambda2.im,
            e.verdict()
        );
    }

    let l = FeatureDistance::new(2.0)?;
    let x0 = ErrorState::new(0.3, 0.3);
    let straight = integrate_error(x0, |_| Velocity::new(0.5, 0.0), l, &Perturbation::Zero, 10.0, 1e-3)?;
    let curved = integrate_error(x0, |_| Velocity::new(0.5, 0.4), l, &Perturbation::Zero, 10.0, 1e-3)?;
    println!("\nerror norm from (0.3, 0.3) with v = 0.5 m/s, l = 2 m");
    println!("{:>5}  {:>9}  {:>9}", "t", "straight", "curved");
    for k in (0..=10).step_by(2) {
        let i = k * 1000;
        println!(
            "{:>5.1}  {:>9.5}  {:>9.5}",
            straight[i].t,
            straight[i].state.norm(),
            curved[i].state.norm()
        );
    }

    let rows = stability_sweep(
        SweepRange::new(0.1, 1.0, 4),
        SweepRange::new(-1.0, 1.0, 5),
        SweepRange::new(0.5, 5.0, 3),
    )?;
    let marginal = rows.iter().filter(|r| r.re_lambda1.max(r.re_lambda2) >= 0.0).count();
    println!(
        "\nsweep: {} grid points, {} marginal, all of them with omega = 0: {}",
        rows.len(),
        marginal,
        rows.iter()
            .filter(|r| r.re_lambda1.max(r.re_lambda2) >= 0.0)
            .all(|r| r.omega == 0.0)
    );
    Ok(())
}
