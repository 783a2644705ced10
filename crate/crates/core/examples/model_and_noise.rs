//! Compares one simulated figure-eight traversal with the error model, then
//! repeats the oval under heavy and blinding image corruption.
//!
//! Run with `cargo run --release --example model_and_noise`.

use bearnav::sim::experiments::{
    blinding_corruption, heavy_corruption, lemniscate_scenario, noisy_oval_scenario, run_series,
};
use bearnav::sim::{compare_to_model, estimate_route_l, NoiseModel, Scenario, StartOffset, WorldSpec};
use bearnav::vision::CorruptionModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario {
        noise: NoiseModel::NONE,
        corruption: CorruptionModel::NONE,
        start_offset: StartOffset {
            forward: -0.15,
            left: 0.2,
            heading: 0.0,
        },
        loops: 1,
        ..lemniscate_scenario(WorldSpec::small_room())
    };
    let series = run_series(&sc, 0, true)?;
    let bundle = sc.build(0)?;
    let l = estimate_route_l(&bundle.world, &bundle.route, 0.5)?;
    let cmp = compare_to_model(&series.logs[0], &bundle.route, l)?;
    println!("figure-eight, l = {:.2} m", cmp.l);
    println!(
        "  max norm deviation {:.3}, correlation {:.3}",
        cmp.max_norm_deviation, cmp.norm_correlation
    );
    println!(
        "  decay rate straight/curved: simulated {:.4}/{:.4}, predicted {:.4}/{:.4}",
        cmp.simulated_decay.straight,
        cmp.simulated_decay.curved,
        cmp.predicted_decay.straight,
        cmp.predicted_decay.curved
    );

    for (name, corruption) in [("heavy", heavy_corruption()), ("blinding", blinding_corruption())] {
        let sc = Scenario {
            corruption,
            ..noisy_oval_scenario()
        };
        let s = run_series(&sc, 0, false)?;
        println!(
            "{name} corruption: completed {}, final loop-end error {:.3} m (initial {:.3} m)",
            s.completed,
            s.errors.last().copied().unwrap_or(f64::NAN),
            s.initial_error
        );
    }
    Ok(())
}
