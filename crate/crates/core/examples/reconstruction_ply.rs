// Round-trip a reconstruction through JSON and write it out as a PLY
// point cloud with camera centres in green.

use triage::sfm::ply::export_ply;
use triage::sfm::{parse_reconstruction, to_json, ParseOptions};
use triage::synthetic::random_reconstruction;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rec = random_reconstruction(1, 4, 6, 10.0, 3);
    let (parsed, _) = parse_reconstruction(&to_json(&rec), &ParseOptions::default())?;
    assert_eq!(parsed, rec);

    for shot in parsed.shots.values() {
        let p = shot.position();
        println!(
            "{:<14} centre ({:>6.2}, {:>6.2}, {:>6.2})",
            shot.id, p.x, p.y, p.z
        );
    }

    let mut ply = Vec::new();
    export_ply(&parsed, true, &mut ply)?;
    print!("{}", String::from_utf8(ply)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
