//! Dynamic-threshold blur classifier.
//!
//! Each frame's threshold is the mean variance-of-Laplacian over the window
//! `[n - k, n + k]`, counting only frames that exist. A frame is kept when
//! its own score reaches the threshold; ties are kept, so a constant series
//! (and `k = 0`) never discards anything.

use std::collections::VecDeque;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{self, GrayImage};

/// Default window half-width.
pub const DEFAULT_K: usize = 20;

/// One extracted video frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub index: usize,
    pub name: String,
    pub timestamp: Option<f64>,
    pub image: Option<GrayImage>,
    pub blur_score: Option<f64>,
}

impl FrameRecord {
    pub fn from_image(index: usize, name: impl Into<String>, image: GrayImage) -> Self {
        Self {
            index,
            name: name.into(),
            timestamp: None,
            image: Some(image),
            blur_score: None,
        }
    }

    pub fn from_score(index: usize, name: impl Into<String>, score: f64) -> Self {
        Self {
            index,
            name: name.into(),
            timestamp: None,
            image: None,
            blur_score: Some(score),
        }
    }

    /// Cached score, or variance of Laplacian over the raster.
    pub fn score(&self) -> Result<f64> {
        match (self.blur_score, &self.image) {
            (Some(s), _) => Ok(s),
            (None, Some(img)) => Ok(imaging::variance_of_laplacian(img)),
            (None, None) => Err(Error::InvalidSeries(format!(
                "frame {} has neither a raster nor a score",
                self.index
            ))),
        }
    }
}

/// Ordered per-frame scores plus the window parameter and, once computed,
/// per-frame thresholds and out-of-range counts.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurSeries {
    variances: Vec<f64>,
    k: usize,
    thresholds: Option<Vec<f64>>,
    j_counts: Option<Vec<usize>>,
}

impl BlurSeries {
    pub fn new(variances: Vec<f64>, k: usize) -> Self {
        Self {
            variances,
            k,
            thresholds: None,
            j_counts: None,
        }
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn thresholds(&self) -> Option<&[f64]> {
        self.thresholds.as_deref()
    }

    /// Number of window indices that fell outside the sequence, per frame.
    pub fn j_counts(&self) -> Option<&[usize]> {
        self.j_counts.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterVerdict {
    pub frame_index: usize,
    pub variance: f64,
    pub threshold: f64,
    pub keep: bool,
}

fn validate(variances: &[f64]) -> Result<()> {
    if variances.is_empty() {
        return Err(Error::EmptySeries);
    }
    check_score(variances.iter().copied().enumerate())
}

fn check_score(mut scores: impl Iterator<Item = (usize, f64)>) -> Result<()> {
    match scores.find(|(_, v)| !v.is_finite() || *v < 0.0) {
        Some((i, v)) => Err(Error::InvalidSeries(format!("variance[{i}] = {v}"))),
        None => Ok(()),
    }
}

#[inline]
fn window_mean(window: impl Iterator<Item = f64>, k: usize) -> (f64, usize) {
    let (sum, count) = window.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (sum / count as f64, 2 * k + 1 - count)
}

/// Fill per-frame thresholds and out-of-range counts.
pub fn compute_thresholds(mut series: BlurSeries) -> Result<BlurSeries> {
    validate(&series.variances)?;
    let k = series.k;
    let last = series.variances.len() - 1;
    let (thresholds, j_counts) = (0..=last)
        .map(|n| {
            let lo = n.saturating_sub(k);
            let hi = (n + k).min(last);
            window_mean(series.variances[lo..=hi].iter().copied(), k)
        })
        .unzip();
    series.thresholds = Some(thresholds);
    series.j_counts = Some(j_counts);
    Ok(series)
}

/// Keep/discard verdict per frame, in order.
pub fn classify(series: &BlurSeries) -> Result<Vec<FilterVerdict>> {
    let thresholds = series.thresholds.as_ref().ok_or(Error::NotComputed)?;
    Ok(series
        .variances
        .iter()
        .zip(thresholds)
        .enumerate()
        .map(|(i, (&variance, &threshold))| FilterVerdict {
            frame_index: i,
            variance,
            threshold,
            keep: variance >= threshold,
        })
        .collect())
}

/// Summary of a filter run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterReport {
    pub k: usize,
    pub total: usize,
    pub kept: usize,
    pub discarded: usize,
    pub verdicts: Vec<FilterVerdict>,
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub kept: Vec<FrameRecord>,
    pub discarded: Vec<FrameRecord>,
    pub report: FilterReport,
}

/// Score, threshold and partition a frame sequence.
///
/// Verdict `frame_index` values are the frames' own indices. Frames are
/// scored in parallel; results are merged in input order.
pub fn filter_frames(frames: Vec<FrameRecord>, k: usize) -> Result<FilterOutcome> {
    if frames.is_empty() {
        return Err(Error::EmptySeries);
    }
    let scores = frames
        .par_iter()
        .map(FrameRecord::score)
        .collect::<Result<Vec<_>>>()?;
    let series = compute_thresholds(BlurSeries::new(scores, k))?;
    let mut verdicts = classify(&series)?;

    let mut kept = Vec::new();
    let mut discarded = Vec::new();
    for (frame, verdict) in frames.into_iter().zip(verdicts.iter_mut()) {
        verdict.frame_index = frame.index;
        if verdict.keep {
            kept.push(frame);
        } else {
            discarded.push(frame);
        }
    }
    let report = FilterReport {
        k,
        total: verdicts.len(),
        kept: kept.len(),
        discarded: discarded.len(),
        verdicts,
    };
    Ok(FilterOutcome {
        kept,
        discarded,
        report,
    })
}

/// Windowed threshold computation over a stream of scored items.
///
/// Holds at most `2k + 1` entries plus the pending tail, and emits items in
/// input order once their window is complete. Produces exactly the values of
/// [`compute_thresholds`].
#[derive(Debug)]
pub struct ThresholdStream<T> {
    k: usize,
    window: VecDeque<(T, f64)>,
    /// Absolute index of `window[0]`.
    base: usize,
    /// Absolute index of the next item to emit.
    next: usize,
    seen: usize,
}

/// Item emitted from a [`ThresholdStream`].
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholded<T> {
    pub position: usize,
    pub item: T,
    pub variance: f64,
    pub threshold: f64,
    pub keep: bool,
}

impl<T: Clone> ThresholdStream<T> {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            window: VecDeque::with_capacity(2 * k + 2),
            base: 0,
            next: 0,
            seen: 0,
        }
    }

    pub fn push(&mut self, item: T, variance: f64) -> Result<Option<Thresholded<T>>> {
        check_score(std::iter::once((self.seen, variance)))?;
        self.window.push_back((item, variance));
        self.seen += 1;
        if self.seen > self.next + self.k {
            Ok(Some(self.emit(self.seen - 1)))
        } else {
            Ok(None)
        }
    }

    /// Drain remaining items after the last push.
    pub fn finish(mut self) -> Result<Vec<Thresholded<T>>> {
        if self.seen == 0 {
            return Err(Error::EmptySeries);
        }
        let last = self.seen - 1;
        let mut out = Vec::with_capacity(self.seen - self.next);
        while self.next < self.seen {
            out.push(self.emit(last));
        }
        Ok(out)
    }

    fn emit(&mut self, last: usize) -> Thresholded<T> {
        let n = self.next;
        let lo = n.saturating_sub(self.k);
        let hi = (n + self.k).min(last);
        let (threshold, _) = window_mean((lo..=hi).map(|i| self.window[i - self.base].1), self.k);
        let (item, variance) = self.window[n - self.base].clone();
        self.next += 1;
        // Drop entries no later window can reach.
        while self.base + self.k < self.next {
            self.window.pop_front();
            self.base += 1;
        }
        Thresholded {
            position: n,
            item,
            variance,
            threshold,
            keep: variance >= threshold,
        }
    }
}

/// One row of the score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub frame_index: usize,
    pub filename: String,
    pub variance: f64,
    pub threshold: f64,
    pub keep: bool,
}

/// Streaming writer for `frame_index,filename,variance,threshold,keep`.
pub struct ScoreWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ScoreWriter<W> {
    pub fn new(writer: W) -> Self {
        Self {
            inner: csv::WriterBuilder::new().has_headers(true).from_writer(writer),
        }
    }

    pub fn write(&mut self, row: &ScoreRow) -> Result<()> {
        self.inner.serialize(row)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Row iterator over a score file. Rows must be in ascending frame order.
pub fn read_scores<R: Read>(reader: R) -> impl Iterator<Item = Result<ScoreRow>> {
    let mut last: Option<usize> = None;
    csv::Reader::from_reader(reader)
        .into_deserialize::<ScoreRow>()
        .map(move |row| {
            let row = row?;
            if last.is_some_and(|l| row.frame_index <= l) {
                return Err(Error::InvalidSeries(format!(
                    "frame_index {} is not ascending",
                    row.frame_index
                )));
            }
            last = Some(row.frame_index);
            Ok(row)
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn thresholds(v: &[f64], k: usize) -> BlurSeries {
        compute_thresholds(BlurSeries::new(v.to_vec(), k)).unwrap()
    }

    #[test]
    fn constant_series() {
        let s = thresholds(&[4.0, 4.0, 4.0], 1);
        assert_eq!(s.thresholds().unwrap(), &[4.0, 4.0, 4.0]);
        assert!(classify(&s).unwrap().iter().all(|v| v.keep));
    }

    #[test]
    fn leading_boundary() {
        let s = thresholds(&[10.0, 20.0, 30.0], 1);
        assert_eq!(s.thresholds().unwrap()[0], 15.0);
        assert_eq!(s.j_counts().unwrap(), &[1, 0, 1]);
    }

    #[test]
    fn window_wider_than_series() {
        let s = thresholds(&[10.0, 20.0, 30.0, 40.0, 50.0], 20);
        assert_eq!(s.thresholds().unwrap()[2], 30.0);
        assert_eq!(s.j_counts().unwrap()[2], 36);
    }

    #[test]
    fn single_dip_is_discarded() {
        let s = thresholds(&[100.0, 100.0, 5.0, 100.0, 100.0], 2);
        let t = s.thresholds().unwrap();
        let expected = [205.0 / 3.0, 305.0 / 4.0, 81.0, 305.0 / 4.0, 205.0 / 3.0];
        for (a, b) in t.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let keep: Vec<bool> = classify(&s).unwrap().iter().map(|v| v.keep).collect();
        assert_eq!(keep, [true, true, false, true, true]);
    }

    #[test]
    fn single_frame_kept() {
        let s = thresholds(&[3.5], 20);
        assert_eq!(s.thresholds().unwrap(), &[3.5]);
        assert_eq!(s.j_counts().unwrap(), &[40]);
        assert!(classify(&s).unwrap()[0].keep);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            compute_thresholds(BlurSeries::new(vec![], 3)),
            Err(Error::EmptySeries)
        ));
        assert!(matches!(
            compute_thresholds(BlurSeries::new(vec![1.0, f64::NAN], 3)),
            Err(Error::InvalidSeries(_))
        ));
        assert!(matches!(
            compute_thresholds(BlurSeries::new(vec![-1.0], 3)),
            Err(Error::InvalidSeries(_))
        ));
        assert!(matches!(
            classify(&BlurSeries::new(vec![1.0], 0)),
            Err(Error::NotComputed)
        ));
    }

    #[test]
    fn filter_frames_identical_kept() {
        let img = GrayImage::from_fn(16, 8, |x, y| ((x * 37 + y * 91) % 256) as f64).unwrap();
        let frames = (0..6)
            .map(|i| FrameRecord::from_image(i, format!("f{i}.png"), img.clone()))
            .collect();
        let out = filter_frames(frames, 2).unwrap();
        assert_eq!(out.report.kept, 6);
        assert!(out.discarded.is_empty());
    }

    #[test]
    fn filter_frames_uses_frame_indices() {
        let frames = vec![
            FrameRecord::from_score(10, "a", 100.0),
            FrameRecord::from_score(20, "b", 1.0),
            FrameRecord::from_score(30, "c", 100.0),
        ];
        let out = filter_frames(frames, 1).unwrap();
        assert_eq!(out.discarded.len(), 1);
        assert_eq!(out.discarded[0].index, 20);
        assert_eq!(out.report.verdicts[1].frame_index, 20);
        assert!(filter_frames(vec![], 1).is_err());
    }

    #[test]
    fn stream_matches_batch() {
        let v: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64).collect();
        for k in [0, 1, 3, 20, 40] {
            let batch = thresholds(&v, k);
            let mut stream = ThresholdStream::new(k);
            let mut got = Vec::new();
            for (i, &x) in v.iter().enumerate() {
                got.extend(stream.push(i, x).unwrap());
                assert!(stream.window.len() <= 2 * k + 2);
            }
            got.extend(stream.finish().unwrap());
            assert_eq!(got.len(), v.len());
            for (t, (pos, &expected)) in got.iter().zip(batch.thresholds().unwrap().iter().enumerate()) {
                assert_eq!(t.position, pos);
                assert_eq!(t.item, pos);
                assert_eq!(t.threshold, expected);
            }
        }
    }

    #[test]
    fn score_csv_round_trip() {
        let rows = vec![
            ScoreRow {
                frame_index: 0,
                filename: "frame_1.png".into(),
                variance: 123.456789012345,
                threshold: 100.0,
                keep: true,
            },
            ScoreRow {
                frame_index: 1,
                filename: "frame_2.png".into(),
                variance: 0.1,
                threshold: 1.0 / 3.0,
                keep: false,
            },
        ];
        let mut buf = Vec::new();
        let mut w = ScoreWriter::new(&mut buf);
        for r in &rows {
            w.write(r).unwrap();
        }
        w.finish().unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("frame_index,filename,variance,threshold,keep\n"));
        let back: Vec<ScoreRow> = read_scores(&buf[..]).collect::<Result<_>>().unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn score_csv_rejects_unordered() {
        let text = "frame_index,filename,variance,threshold,keep\n1,a,1,1,true\n0,b,1,1,true\n";
        let r: Result<Vec<ScoreRow>> = read_scores(text.as_bytes()).collect();
        assert!(matches!(r, Err(Error::InvalidSeries(_))));
    }
}
