use proptest::prelude::*;
use triage::blur::FrameRecord;
use triage::imaging::GrayImage;
use triage::keyframe::{select_keyframes, KeyframePolicy};

/// Two-tone frames whose mean absolute difference is exactly the level
/// difference.
fn from_levels(levels: impl IntoIterator<Item = f64>) -> Vec<FrameRecord> {
    levels
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let img = GrayImage::from_fn(16, 8, |x, _| if x < 8 { l } else { 255.0 - l }).unwrap();
            FrameRecord::from_image(i, format!("f{i}.png"), img)
        })
        .collect()
}

fn frames() -> impl Strategy<Value = Vec<FrameRecord>> {
    prop::collection::vec(0.0f64..255.0, 1..40).prop_map(from_levels)
}

fn policy(threshold: f64, min_gap: usize) -> KeyframePolicy {
    KeyframePolicy {
        similarity_threshold: threshold,
        min_gap,
        thumb_width: 8,
        thumb_height: 4,
    }
}

fn indices(frames: &[FrameRecord]) -> Vec<usize> {
    frames.iter().map(|f| f.index).collect()
}

proptest! {
    #[test]
    fn idempotent_with_unit_gap(f in frames(), t in 0.0f64..100.0) {
        let p = policy(t, 1);
        let once = select_keyframes(&f, &p).unwrap();
        let twice = select_keyframes(&once, &p).unwrap();
        prop_assert_eq!(indices(&once), indices(&twice));
    }

    #[test]
    fn raising_threshold_never_adds_on_monotone_drift(
        steps in prop::collection::vec(0.0f64..12.0, 1..40),
        t in 0.0f64..60.0,
        dt in 0.0f64..60.0,
        gap in 1usize..4,
    ) {
        // Monotone brightness drift, as produced by a steady pan.
        let mut level = 0.0;
        let f = from_levels(steps.iter().map(|s| { level = (level + s).min(255.0); level }));
        let lo = select_keyframes(&f, &policy(t, gap)).unwrap().len();
        let hi = select_keyframes(&f, &policy((t + dt).min(255.0), gap)).unwrap().len();
        prop_assert!(hi <= lo);
    }

    #[test]
    fn output_is_subsequence_starting_at_first(f in frames(), t in 0.0f64..100.0, gap in 1usize..6) {
        let out = indices(&select_keyframes(&f, &policy(t, gap)).unwrap());
        prop_assert_eq!(out[0], 0);
        prop_assert!(out.windows(2).all(|w| w[0] + gap <= w[1]));
    }
}

/// Comparing against the last selected frame makes the count path
/// dependent: a higher threshold can skip a frame that would otherwise have
/// become the reference, and then select more frames later.
#[test]
fn threshold_count_not_monotone_in_general() {
    let f = from_levels([0.0, 3.0, 5.0, 1.0]);
    assert_eq!(indices(&select_keyframes(&f, &policy(2.0, 1)).unwrap()), [0, 1]);
    assert_eq!(
        indices(&select_keyframes(&f, &policy(3.0, 1)).unwrap()),
        [0, 2, 3]
    );
}
