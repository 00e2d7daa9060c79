// Link three panoramas on a line and print the resulting tour document.

use nalgebra::Vector3;
use triage::sfm::{Camera, Reconstruction, Shot};
use triage::tour::{build_graph, emit_tour, TourOptions};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rec = Reconstruction::default();
    rec.cameras
        .insert("pano".into(), Camera::equirectangular(5760, 2880));
    for (id, x) in [("a.jpg", 0.0), ("b.jpg", 1.0), ("c.jpg", 5.0)] {
        let shot = Shot::from_position(id, "pano", Vector3::zeros(), Vector3::new(x, 0.0, 0.0))?;
        rec.shots.insert(id.into(), shot);
    }

    let options = TourOptions {
        max_neighbors: 2,
        scale: Some(2.5),
        ..Default::default()
    };
    let graph = build_graph(&rec, &options)?;
    for e in &graph.edges {
        println!(
            "{} -> {}: yaw {:>6.1}, pitch {:>5.1}, {:.2} m, size {} px, rgb {:?}",
            e.from_id, e.to_id, e.yaw_deg, e.pitch_deg, e.distance, e.size_px, e.color
        );
    }
    print!("{}", emit_tour(&graph));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
