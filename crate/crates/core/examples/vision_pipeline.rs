//! Projection, descriptor corruption, matching and the histogram vote for a
//! robot displaced sideways from the taught pose.
//!
//! Run with `cargo run --example vision_pipeline`.

use bearnav::types::{NavigatorConfig, Pose};
use bearnav::vision::{corrupt, histogram_vote, match_features, project, CameraModel, CorruptionModel, World};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let camera = CameraModel::default();
    let config = NavigatorConfig::default();
    let world = World::uniform_box(3, 150, [3.0, -3.0, 0.0], [9.0, 3.0, 2.0], 256)?;

    let taught = project(&Pose::default(), &camera, world.landmarks());
    println!(
        "focal length {:.1} px, {} landmarks visible from the taught pose",
        camera.focal_px(),
        taught.len()
    );

    for offset in [-0.4, -0.1, 0.0, 0.1, 0.4] {
        let seen = project(&Pose::new(0.0, offset, 0.0), &camera, world.landmarks());
        let noisy = corrupt(seen, &CorruptionModel::nominal(7), &camera, 256)?;
        let matches = match_features(&taught, &noisy, config.max_hamming)?;
        let vote = histogram_vote(&matches, &config, camera.image_width);
        let kappa = vote.kappa.map_or("inconclusive".to_string(), |k| format!("{k:+.1} px"));
        println!(
            "lateral offset {offset:+.1} m: {:>3} matches, vote support {:>3}, kappa {kappa}",
            matches.pairs.len(),
            vote.support
        );
    }
    Ok(())
}
