// Thin a panning capture to keyframes at a few similarity thresholds.

use triage::blur::FrameRecord;
use triage::keyframe::{select_keyframes, KeyframePolicy};
use triage::synthetic::{blur_corpus, CorpusConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = blur_corpus(&CorpusConfig {
        frames: 80,
        blurred: 0,
        ..Default::default()
    });
    let frames: Vec<FrameRecord> = corpus
        .frames
        .into_iter()
        .enumerate()
        .map(|(i, img)| FrameRecord::from_image(i, format!("frame_{i:03}.png"), img))
        .collect();

    for threshold in [40.0, 48.0, 56.0] {
        let policy = KeyframePolicy {
            similarity_threshold: threshold,
            min_gap: 1,
            ..Default::default()
        };
        let picked = select_keyframes(&frames, &policy)?;
        let indices: Vec<usize> = picked.iter().map(|f| f.index).collect();
        println!(
            "threshold {threshold:>4}: {} keyframes {indices:?}",
            indices.len()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
