// Drop blurred frames from a 100-frame capture and compare the result
// with the frames that were blurred on purpose.

use triage::blur::{filter_frames, FrameRecord, DEFAULT_K};
use triage::synthetic::{blur_corpus, CorpusConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = blur_corpus(&CorpusConfig::default());
    let frames = corpus
        .frames
        .iter()
        .enumerate()
        .map(|(i, img)| FrameRecord::from_image(i, format!("frame_{i:03}.png"), img.clone()))
        .collect();

    let outcome = filter_frames(frames, DEFAULT_K)?;
    let dropped: Vec<usize> = outcome.discarded.iter().map(|f| f.index).collect();
    let caught = dropped.iter().filter(|i| corpus.blurred.contains(i)).count();

    println!(
        "k = {}: kept {}, discarded {}",
        outcome.report.k, outcome.report.kept, outcome.report.discarded
    );
    println!("blurred on purpose: {:?}", corpus.blurred);
    println!("discarded:          {dropped:?}");
    println!("caught {caught} of {}", corpus.blurred.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
