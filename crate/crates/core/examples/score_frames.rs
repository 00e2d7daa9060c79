// Score a short synthetic capture and print each frame's blur score next
// to its adaptive threshold.

use triage::blur::{compute_thresholds, BlurSeries};
use triage::imaging::variance_of_laplacian;
use triage::synthetic::{blur_corpus, CorpusConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = blur_corpus(&CorpusConfig {
        frames: 24,
        blurred: 4,
        ..Default::default()
    });
    let scores: Vec<f64> = corpus.frames.iter().map(variance_of_laplacian).collect();
    let series = compute_thresholds(BlurSeries::new(scores, 5))?;
    let thresholds = series.thresholds().expect("computed");

    println!("{:>5} {:>10} {:>10}  verdict", "frame", "score", "threshold");
    for (i, (v, t)) in series.variances().iter().zip(thresholds).enumerate() {
        let verdict = if v >= t { "keep" } else { "drop" };
        let mark = if corpus.blurred.contains(&i) {
            " (blurred)"
        } else {
            ""
        };
        println!("{i:>5} {v:>10.1} {t:>10.1}  {verdict}{mark}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
