// Run every pipeline stage on files in a scratch directory: score, filter,
// keyframes, tour and PLY export.

use std::fs;

use triage::keyframe::KeyframePolicy;
use triage::pipeline::{
    cmd_export_ply, cmd_filter, cmd_keyframes, cmd_score, cmd_tour, ExportArgs, FilterArgs, KeyframeArgs,
    ScoreArgs, TourArgs,
};
use triage::sfm::to_json;
use triage::synthetic::{blur_corpus, random_reconstruction, write_png, CorpusConfig};
use triage::tour::TourOptions;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let work = tempfile::tempdir()?;
    let frames = work.path().join("frames");
    fs::create_dir(&frames)?;
    let corpus = blur_corpus(&CorpusConfig {
        frames: 60,
        blurred: 10,
        ..Default::default()
    });
    for (i, img) in corpus.frames.iter().enumerate() {
        write_png(img, &frames.join(format!("frame_{i}.png")))?;
    }

    let scores = work.path().join("scores.csv");
    let scored = cmd_score(&ScoreArgs {
        frames_dir: frames.clone(),
        out: scores.clone(),
        k: 20,
        downscale: 1,
        lenient: false,
        force: false,
    })?;
    println!("scored {} frames", scored.scored);

    let filtered = cmd_filter(&FilterArgs {
        scores,
        frames_dir: frames.clone(),
        k: 20,
        out_dir: work.path().join("filtered"),
        force: false,
    })?;
    println!("kept {} of {}", filtered.kept, filtered.total);

    let kept = work.path().join("filtered/kept");
    let keyframes = cmd_keyframes(&KeyframeArgs {
        frames_dir: kept,
        out: work.path().join("keyframes.txt"),
        policy: KeyframePolicy::default(),
        listing: None,
        lenient: false,
        force: false,
    })?;
    println!("{} keyframes", keyframes.selected);

    // Photogrammetry runs outside this crate; stand in with a synthetic model.
    let model = work.path().join("reconstruction.json");
    fs::write(
        &model,
        to_json(&random_reconstruction(1, keyframes.selected.max(2), 200, 20.0, 1)),
    )?;
    let tour = cmd_tour(&TourArgs {
        reconstruction: model.clone(),
        panos_dir: None,
        out: work.path().join("tour.json"),
        options: TourOptions::default(),
        lenient: false,
        force: false,
    })?;
    println!("tour: {} panoramas, {} links", tour.nodes, tour.edges);

    let vertices = cmd_export_ply(&ExportArgs {
        reconstruction: model,
        out: work.path().join("reconstruction.ply"),
        include_shots: true,
        lenient: false,
        force: false,
    })?;
    println!("point cloud: {vertices} vertices");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
