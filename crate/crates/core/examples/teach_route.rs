//! Teaches an oval route in a random room, saves it in the binary route
//! format and reads it back.
//!
//! Run with `cargo run --example teach_route [-- output.route]`.

use bearnav::teach_repeat::{load_route, save_route, teach, SegmentPlan, TeachParams};
use bearnav::types::NavigatorConfig;
use bearnav::vision::{CameraModel, World};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = World::uniform_box(11, 400, [-8.0, -8.0, 0.0], [8.0, 8.0, 2.0], 256)?;
    let plan = SegmentPlan::oval(10.0, 1.0, 0.5);
    let route = teach(
        &plan,
        &world,
        &CameraModel::default(),
        &NavigatorConfig::default(),
        &TeachParams::default(),
    )?;

    println!(
        "taught {} local maps over {:.2} m",
        route.maps.len(),
        route.profile.total_length()
    );
    for e in route.profile.entries() {
        println!(
            "  from d = {:>6.3} m: v = {:.2} m/s, omega = {:+.4} rad/s",
            e.d, e.velocity.v, e.velocity.omega
        );
    }

    let dir = tempfile::tempdir()?;
    let path = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| dir.path().join("oval.route"));
    save_route(&route, &path)?;
    let size = std::fs::metadata(&path)?.len();
    let back = load_route(&path)?;
    println!(
        "wrote {} ({size} bytes); reloaded copy identical: {}",
        path.display(),
        back == route
    );
    Ok(())
}
